//! Principal coordinates analysis.
//!
//! Centers the distance matrix, eigendecomposes the result, and scales each
//! eigenvector by the square root of its eigenvalue. The eigen step sits
//! behind [`SymmetricEigensolver`] so other backends can be plugged in; the
//! default is an exact dense solver.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::centering::{center_fused, CenteredMatrix};
use crate::{DistanceMatrix, Error, Real, Result, DEFAULT_TILE};

/// Eigenvalues and eigenvectors of a symmetric matrix, in no particular order.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    /// `n x n` row-major; column `a` is the unit eigenvector for `values[a]`.
    pub vectors: Vec<f64>,
}

pub trait SymmetricEigensolver {
    /// Decomposes the symmetric `n x n` row-major `matrix`.
    fn decompose(&self, matrix: &[f64], n: usize) -> Result<EigenDecomposition>;
}

/// Exact dense solver (Householder tridiagonalization + implicit QR).
#[derive(Debug, Clone, Copy)]
pub struct DenseEigensolver {
    pub eps: f64,
    /// Cap on total QR sweeps; 0 selects `100 * n`.
    pub max_iterations: usize,
}

impl Default for DenseEigensolver {
    fn default() -> Self {
        Self {
            eps: f64::EPSILON,
            max_iterations: 0,
        }
    }
}

impl SymmetricEigensolver for DenseEigensolver {
    fn decompose(&self, matrix: &[f64], n: usize) -> Result<EigenDecomposition> {
        if matrix.len() != n * n {
            return Err(Error::Dimension(format!(
                "buffer of {} elements is not {n}x{n}",
                matrix.len()
            )));
        }
        let max_iterations = if self.max_iterations == 0 {
            100 * n.max(1)
        } else {
            self.max_iterations
        };
        let m = DMatrix::from_row_slice(n, n, matrix);
        let eig = SymmetricEigen::try_new(m, self.eps, max_iterations).ok_or(
            Error::EigenNonConvergence {
                n,
                max_iterations,
                eps: self.eps,
            },
        )?;
        let mut vectors = vec![0.0; n * n];
        for i in 0..n {
            for a in 0..n {
                vectors[i * n + a] = eig.eigenvectors[(i, a)];
            }
        }
        Ok(EigenDecomposition {
            values: eig.eigenvalues.iter().copied().collect(),
            vectors,
        })
    }
}

#[derive(Debug, Clone)]
pub struct PcoaResult {
    pub ids: Vec<String>,
    /// All `n` eigenvalues of the centered matrix, descending.
    pub eigenvalues: Vec<f64>,
    /// Number of retained axes `m`.
    pub axes: usize,
    /// `n x m` row-major sample coordinates.
    pub coordinates: Vec<f64>,
    /// Length `m`; each retained eigenvalue over the sum of positive eigenvalues.
    pub proportion_explained: Vec<f64>,
    /// Set when the input is not Euclidean-embeddable (some eigenvalue is
    /// clearly negative). Negative axes never get coordinates.
    pub negative_eigenvalue_warning: bool,
}

impl PcoaResult {
    pub fn n(&self) -> usize {
        self.ids.len()
    }

    pub fn coordinate(&self, sample: usize, axis: usize) -> f64 {
        self.coordinates[sample * self.axes + axis]
    }

    pub fn sample(&self, sample: usize) -> &[f64] {
        &self.coordinates[sample * self.axes..(sample + 1) * self.axes]
    }
}

/// PCoA with the fused centering kernel and the default dense eigensolver.
/// `axes` caps the number of retained axes; by default every positive one is kept.
pub fn pcoa<T: Real>(mat: &DistanceMatrix<T>, axes: Option<usize>) -> Result<PcoaResult> {
    pcoa_with(mat, axes, DEFAULT_TILE, &DenseEigensolver::default())
}

pub fn pcoa_with<T, S>(
    mat: &DistanceMatrix<T>,
    axes: Option<usize>,
    tile: usize,
    solver: &S,
) -> Result<PcoaResult>
where
    T: Real,
    S: SymmetricEigensolver + ?Sized,
{
    check_size(mat.n())?;
    let centered = center_fused(mat, tile)?;
    pcoa_from_centered(&centered, mat.ids(), axes, solver)
}

fn check_size(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::Dimension(format!(
            "PCoA needs at least 2 samples, got {n}"
        )));
    }
    Ok(())
}

/// Eigen step on an already centered matrix (from either centering kernel).
pub fn pcoa_from_centered<T, S>(
    centered: &CenteredMatrix<T>,
    ids: &[String],
    axes: Option<usize>,
    solver: &S,
) -> Result<PcoaResult>
where
    T: Real,
    S: SymmetricEigensolver + ?Sized,
{
    let n = centered.n;
    check_size(n)?;
    if ids.len() != n {
        return Err(Error::Dimension(format!(
            "{} ids for a {n}x{n} matrix",
            ids.len()
        )));
    }
    let matrix: Vec<f64> = centered.data.iter().map(|v| v.to_f64()).collect();
    let EigenDecomposition { values, vectors } = solver.decompose(&matrix, n)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let eigenvalues: Vec<f64> = order.iter().map(|&a| values[a]).collect();

    let largest = eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let zero_band = 1e-12 * largest;
    let positive = eigenvalues.iter().take_while(|&&v| v > zero_band).count();
    let negative_eigenvalue_warning = eigenvalues.iter().any(|&v| v < -zero_band);
    let m = axes.map_or(positive, |cap| cap.min(positive));
    let positive_sum: f64 = eigenvalues[..positive].iter().sum();

    let mut coordinates = vec![0.0; n * m];
    for (axis, &src) in order[..m].iter().enumerate() {
        let scale = eigenvalues[axis].sqrt();
        // Fix the sign so the largest-magnitude component is positive.
        let pivot = (0..n)
            .map(|i| vectors[i * n + src])
            .fold(
                0.0f64,
                |best, v| if v.abs() > best.abs() { v } else { best },
            );
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            coordinates[i * m + axis] = sign * vectors[i * n + src] * scale;
        }
    }
    let proportion_explained = eigenvalues[..m].iter().map(|v| v / positive_sum).collect();

    Ok(PcoaResult {
        ids: ids.to_vec(),
        eigenvalues,
        axes: m,
        coordinates,
        proportion_explained,
        negative_eigenvalue_warning,
    })
}
