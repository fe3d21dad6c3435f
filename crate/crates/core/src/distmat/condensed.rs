use super::DistanceMatrix;
use crate::{Error, Real, Result};

/// Number of strict upper-triangle elements of an `n x n` matrix.
#[inline]
pub fn condensed_len(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Index of `(row, row + 1)` in the condensed vector, i.e. where row `row` of
/// the strict upper triangle starts. Equal to `row*(n-1) - row*(row-1)/2`.
#[inline(always)]
pub(crate) fn row_offset(row: usize, n: usize) -> usize {
    row * (2 * n - row - 1) / 2
}

/// Position of element `(row, col)`, `row < col < n`, in the row-major
/// flattening of the strict upper triangle.
pub fn condensed_index(row: usize, col: usize, n: usize) -> Result<usize> {
    if row >= col {
        return Err(Error::Precondition(format!(
            "condensed index needs row < col, got ({row}, {col})"
        )));
    }
    if col >= n {
        return Err(Error::Precondition(format!(
            "column {col} out of range for n = {n}"
        )));
    }
    Ok(row_offset(row, n) + (col - row - 1))
}

/// The strict upper triangle of a symmetric matrix, flattened row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CondensedVector<T: Real = f64> {
    n: usize,
    values: Vec<T>,
}

impl<T: Real> CondensedVector<T> {
    pub fn new(n: usize, values: Vec<T>) -> Result<Self> {
        if values.len() != condensed_len(n) {
            return Err(Error::Dimension(format!(
                "condensed vector of length {} does not match n = {n} (expected {})",
                values.len(),
                condensed_len(n)
            )));
        }
        Ok(Self { n, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Expands back to a full symmetric hollow buffer (row-major, `n * n`).
    pub fn to_square(&self) -> Vec<T> {
        let n = self.n;
        let mut data = vec![T::ZERO; n * n];
        let mut values = self.values.iter();
        for row in 0..n {
            for col in row + 1..n {
                let v = *values.next().expect("length checked at construction");
                data[row * n + col] = v;
                data[col * n + row] = v;
            }
        }
        data
    }
}

/// Extracts the condensed form of a validated matrix.
pub fn condensed_form<T: Real>(mat: &DistanceMatrix<T>) -> Result<CondensedVector<T>> {
    if !mat.is_validated() {
        return Err(Error::NotValidated);
    }
    Ok(condense_unchecked(mat.data(), mat.n()))
}

pub(crate) fn condense_unchecked<T: Real>(data: &[T], n: usize) -> CondensedVector<T> {
    let mut values = Vec::with_capacity(condensed_len(n));
    for row in 0..n {
        values.extend_from_slice(&data[row * n + row + 1..(row + 1) * n]);
    }
    CondensedVector { n, values }
}
