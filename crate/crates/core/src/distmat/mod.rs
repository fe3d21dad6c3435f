//! The distance matrix type and the operations every other module builds on.
//!
//! A [`DistanceMatrix`] is a dense `n x n` row-major buffer plus sample labels
//! and a `validated` flag. Validation (symmetry plus hollowness) costs a full
//! scan of the buffer, so the flag travels with the value: clones keep it,
//! while anything that builds a new buffer starts out unvalidated.

mod condensed;
mod permutation;
mod validate;

use std::collections::HashSet;

pub(crate) use condensed::{condense_unchecked, row_offset};
pub use condensed::{condensed_form, condensed_index, condensed_len, CondensedVector};
pub use permutation::{make_permutations, PermutationSet};
pub use validate::{
    validate_naive, validate_naive_with_tolerance, validate_tiled, validate_tiled_with_tolerance,
    ValidationReport,
};

use crate::{Error, Real, Result, DEFAULT_TILE};

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix<T: Real = f64> {
    n: usize,
    data: Vec<T>,
    ids: Vec<String>,
    validated: bool,
}

impl<T: Real> DistanceMatrix<T> {
    /// Wraps a row-major buffer without checking symmetry or hollowness.
    pub fn from_raw(data: Vec<T>, ids: Vec<String>) -> Result<Self> {
        let n = ids.len();
        if n == 0 {
            return Err(Error::Dimension(
                "a distance matrix needs at least one sample".into(),
            ));
        }
        if data.len() != n * n {
            return Err(Error::Dimension(format!(
                "buffer of {} elements is not {n}x{n}",
                data.len()
            )));
        }
        let mut seen = HashSet::with_capacity(n);
        for id in &ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::Label(format!("duplicate id {id:?}")));
            }
        }
        Ok(Self {
            n,
            data,
            ids,
            validated: false,
        })
    }

    /// Like [`from_raw`](Self::from_raw) with ids `"0"`, `"1"`, ...
    pub fn from_unlabeled(data: Vec<T>, n: usize) -> Result<Self> {
        Self::from_raw(data, (0..n).map(|i| i.to_string()).collect())
    }

    /// Wraps a buffer and validates it with the tiled kernel, failing if the
    /// buffer is not symmetric and hollow.
    pub fn new(data: Vec<T>, ids: Vec<String>) -> Result<Self> {
        let mut mat = Self::from_raw(data, ids)?;
        let report = mat.validate(DEFAULT_TILE)?;
        if !report.is_valid() {
            return Err(Error::Invalid {
                is_symmetric: report.is_symmetric,
                is_hollow: report.is_hollow,
            });
        }
        Ok(mat)
    }

    /// Runs the tiled validation and sets the flag when it passes.
    pub fn validate(&mut self, tile: usize) -> Result<ValidationReport> {
        let report = validate_tiled(&self.data, self.n, tile)?;
        if report.is_valid() {
            self.validated = true;
        }
        Ok(report)
    }

    /// Records a passing report produced by one of the validation kernels on this buffer.
    pub fn mark_validated(&mut self, report: &ValidationReport) -> Result<()> {
        if !report.is_valid() {
            return Err(Error::Invalid {
                is_symmetric: report.is_symmetric,
                is_hollow: report.is_hollow,
            });
        }
        self.validated = true;
        Ok(())
    }

    /// Sets the flag without scanning. The caller vouches for the buffer.
    pub fn assume_validated(&mut self) {
        self.validated = true;
    }

    pub fn is_validated(&self) -> bool {
        self.validated
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> T {
        self.data[row * self.n + col]
    }

    pub fn row(&self, row: usize) -> &[T] {
        &self.data[row * self.n..(row + 1) * self.n]
    }

    pub fn into_parts(self) -> (Vec<T>, Vec<String>) {
        (self.data, self.ids)
    }

    /// Builds `P * self * P^T`, i.e. `out[i][j] = self[order[i]][order[j]]`,
    /// with ids relabeled to match. The result is a new, unvalidated matrix.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let n = self.n;
        if order.len() != n {
            return Err(Error::Dimension(format!(
                "permutation of length {} applied to a {n}x{n} matrix",
                order.len()
            )));
        }
        let mut data = Vec::with_capacity(n * n);
        for &src_row in order {
            let row = self.row(src_row);
            data.extend(order.iter().map(|&src_col| row[src_col]));
        }
        let ids = order.iter().map(|&i| self.ids[i].clone()).collect();
        Self::from_raw(data, ids)
    }

    /// Converts the element type. The result is unvalidated since rounding may change values.
    pub fn cast<U: Real>(&self) -> DistanceMatrix<U> {
        DistanceMatrix {
            n: self.n,
            data: self.data.iter().map(|v| U::from_f64(v.to_f64())).collect(),
            ids: self.ids.clone(),
            validated: false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("s{i}")).collect()
    }

    #[test]
    fn raw_construction_is_unvalidated() {
        let m = DistanceMatrix::from_raw(vec![0.0, 1.0, 1.0, 0.0], ids(2)).unwrap();
        assert!(!m.is_validated());
    }

    #[test]
    fn validated_copy_keeps_flag() {
        let m = DistanceMatrix::new(vec![0.0, 1.0, 1.0, 0.0], ids(2)).unwrap();
        assert!(m.is_validated());
        let copy = m.clone();
        assert!(copy.is_validated());
        assert_eq!(copy, m);
    }

    #[test]
    fn rebuilt_matrix_is_unvalidated() {
        let m = DistanceMatrix::new(vec![0.0, 1.0, 1.0, 0.0], ids(2)).unwrap();
        assert!(!m.permuted(&[1, 0]).unwrap().is_validated());
        assert!(!m.cast::<f32>().is_validated());
    }

    #[test]
    fn new_rejects_invalid_buffers() {
        let err = DistanceMatrix::new(vec![0.0, 1.0, 2.0, 0.0], ids(2)).unwrap_err();
        assert!(matches!(
            err,
            Error::Invalid {
                is_symmetric: false,
                is_hollow: true
            }
        ));
    }

    #[test]
    fn mark_validated_requires_passing_report() {
        let data = vec![1.0, 2.0, 2.0, 3.0];
        let mut m = DistanceMatrix::from_raw(data.clone(), ids(2)).unwrap();
        let report = validate_naive(&data, 2).unwrap();
        assert!(m.mark_validated(&report).is_err());
        assert!(!m.is_validated());

        let good = vec![0.0, 2.0, 2.0, 0.0];
        let mut m = DistanceMatrix::from_raw(good.clone(), ids(2)).unwrap();
        m.mark_validated(&validate_naive(&good, 2).unwrap())
            .unwrap();
        assert!(m.is_validated());
    }

    #[test]
    fn shape_and_label_errors() {
        assert!(matches!(
            DistanceMatrix::from_raw(vec![0.0; 3], ids(2)),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            DistanceMatrix::<f64>::from_raw(vec![], vec![]),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            DistanceMatrix::from_raw(vec![0.0; 4], vec!["a".into(), "a".into()]),
            Err(Error::Label(_))
        ));
    }

    #[test]
    fn permuted_relabels_rows_and_columns() {
        #[rustfmt::skip]
        let data = vec![
            0.0, 1.0, 2.0,
            1.0, 0.0, 3.0,
            2.0, 3.0, 0.0,
        ];
        let m = DistanceMatrix::new(data, ids(3)).unwrap();
        let p = m.permuted(&[2, 0, 1]).unwrap();
        assert_eq!(p.ids(), &["s2", "s0", "s1"]);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(p.get(i, j), m.get([2, 0, 1][i], [2, 0, 1][j]));
            }
        }
    }
}
