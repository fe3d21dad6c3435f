//! Mantel test with the Pearson statistic.
//!
//! The test correlates the condensed forms of two distance matrices and
//! builds a null distribution by relabeling the samples of `x`.
//!
//! [`mantel_naive`] runs the full Pearson pipeline on a materialized permuted
//! copy of `x` for every permutation. [`mantel_fused`] relies on two facts:
//! `y` never changes, and permuting `x` only rearranges its condensed values,
//! so its mean and centered norm are fixed. Those are computed once
//! ([`PearsonPrecomp`]) and each permuted statistic becomes a single dot
//! product that reads `x` through the permutation table.

use rayon::prelude::*;

use crate::distmat::{condense_unchecked, row_offset};
use crate::{CondensedVector, DistanceMatrix, Error, PermutationSet, Real, Result};

/// Tile size used by [`mantel_fused`] callers that do not care.
pub const DEFAULT_PERMUTATION_TILE: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct MantelResult {
    pub orig_stat: f64,
    pub permuted_stats: Vec<f64>,
    pub p_value: f64,
    pub permutations: usize,
}

/// Permutation-invariant pieces of the Pearson statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct PearsonPrecomp {
    pub xmean: f64,
    /// Euclidean norm of the mean-centered condensed `x`.
    pub normxm: f64,
    /// `1 / normxm`
    pub mul: f64,
    /// `-xmean / normxm`, so that `v * mul + add == (v - xmean) / normxm`.
    pub add: f64,
    /// Condensed `y`, mean-centered and scaled to unit norm.
    pub ynorm: Vec<f64>,
}

/// Mean and norm of the centered vector; errors if the vector is constant.
fn center_stats<T: Real>(values: &[T], what: &str) -> Result<(f64, f64)> {
    if values.len() < 2 {
        return Err(Error::DegenerateVariance(format!(
            "{what} has {} element(s); at least 2 are needed",
            values.len()
        )));
    }
    let first = values[0];
    if values.iter().all(|&v| v == first) {
        return Err(Error::DegenerateVariance(format!("{what} is constant")));
    }
    let mean = values.iter().map(|v| v.to_f64()).sum::<f64>() / values.len() as f64;
    let norm = values
        .iter()
        .map(|v| (v.to_f64() - mean).powi(2))
        .sum::<f64>()
        .sqrt();
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::DegenerateVariance(format!(
            "{what} has centered norm {norm}"
        )));
    }
    Ok((mean, norm))
}

fn normalized<T: Real>(values: &[T], what: &str) -> Result<Vec<f64>> {
    let (mean, norm) = center_stats(values, what)?;
    Ok(values.iter().map(|v| (v.to_f64() - mean) / norm).collect())
}

impl PearsonPrecomp {
    pub fn new<T: Real>(x: &CondensedVector<T>, y: &CondensedVector<T>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::Dimension(format!(
                "condensed vectors of different lengths ({} and {})",
                x.len(),
                y.len()
            )));
        }
        let (xmean, normxm) = center_stats(x.values(), "condensed x")?;
        let ynorm = normalized(y.values(), "condensed y")?;
        Ok(Self {
            xmean,
            normxm,
            mul: 1.0 / normxm,
            add: -xmean / normxm,
            ynorm,
        })
    }
}

/// Pearson correlation of two condensed vectors: the dot product of the
/// mean-centered, unit-normalized inputs.
pub fn pearson_condensed<T: Real>(x: &CondensedVector<T>, y: &CondensedVector<T>) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Dimension(format!(
            "condensed vectors of different lengths ({} and {})",
            x.len(),
            y.len()
        )));
    }
    let xnorm = normalized(x.values(), "condensed x")?;
    let ynorm = normalized(y.values(), "condensed y")?;
    Ok(xnorm.iter().zip(&ynorm).map(|(a, b)| a * b).sum())
}

/// `(#{i : |permuted[i]| >= |orig|} + 1) / (len + 1)`. Ties count as extreme.
pub fn p_value(orig: f64, permuted: &[f64]) -> f64 {
    let threshold = orig.abs();
    let count_better = permuted.iter().filter(|s| s.abs() >= threshold).count();
    (count_better + 1) as f64 / (permuted.len() + 1) as f64
}

fn check_pair<T: Real>(
    x: &DistanceMatrix<T>,
    y: &DistanceMatrix<T>,
    perms: &PermutationSet,
) -> Result<()> {
    if !x.is_validated() || !y.is_validated() {
        return Err(Error::NotValidated);
    }
    if x.n() != y.n() {
        return Err(Error::Dimension(format!(
            "matrices have different sizes ({} and {})",
            x.n(),
            y.n()
        )));
    }
    if x.n() < 3 {
        return Err(Error::Dimension(format!(
            "the Mantel test needs at least 3 samples, got {}",
            x.n()
        )));
    }
    if x.ids() != y.ids() {
        return Err(Error::Label(
            "matrices must list the same ids in the same order".into(),
        ));
    }
    if perms.n() != x.n() {
        return Err(Error::Dimension(format!(
            "permutations of length {} for {} samples",
            perms.n(),
            x.n()
        )));
    }
    Ok(())
}

/// Reference Mantel test: every permuted statistic rebuilds the permuted
/// matrix, its condensed form, and the whole Pearson computation.
pub fn mantel_naive<T: Real>(
    x: &DistanceMatrix<T>,
    y: &DistanceMatrix<T>,
    perms: &PermutationSet,
) -> Result<MantelResult> {
    check_pair(x, y, perms)?;
    let n = x.n();
    let x_flat = condense_unchecked(x.data(), n);
    let y_flat = condense_unchecked(y.data(), n);
    let orig_stat = pearson_condensed(&x_flat, &y_flat)?;

    let permuted_stats = perms
        .rows()
        .map(|order| {
            let permuted = x.permuted(order)?;
            pearson_condensed(&condense_unchecked(permuted.data(), n), &y_flat)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(MantelResult {
        p_value: p_value(orig_stat, &permuted_stats),
        orig_stat,
        permutations: perms.k(),
        permuted_stats,
    })
}

/// Fused Mantel test.
///
/// Permutations are processed in groups of `tile`: for each row of the upper
/// triangle, the matching run of `ynorm` is loaded once and consumed by every
/// permutation in the group. Each statistic still accumulates in a fixed
/// sequential order, so results do not depend on `tile` or the thread count.
///
/// The original statistic goes through the same kernel with the identity
/// ordering, so an identity row in `perms` reproduces it bit for bit.
pub fn mantel_fused<T: Real>(
    x: &DistanceMatrix<T>,
    y: &DistanceMatrix<T>,
    perms: &PermutationSet,
    tile: usize,
) -> Result<MantelResult> {
    check_pair(x, y, perms)?;
    if tile == 0 {
        return Err(Error::Precondition("tile size must be at least 1".into()));
    }
    let n = x.n();
    let pre = PearsonPrecomp::new(
        &condense_unchecked(x.data(), n),
        &condense_unchecked(y.data(), n),
    )?;

    let identity: Vec<usize> = (0..n).collect();
    let mut orig = [0.0];
    permuted_dot_group(x.data(), n, &identity, &pre, &mut orig);
    let orig_stat = orig[0];

    let mut permuted_stats = vec![0.0; perms.k()];
    if n > 0 {
        permuted_stats
            .par_chunks_mut(tile)
            .zip(perms.table().par_chunks(tile * n))
            .for_each(|(stats, orders)| permuted_dot_group(x.data(), n, orders, &pre, stats));
    }

    Ok(MantelResult {
        p_value: p_value(orig_stat, &permuted_stats),
        orig_stat,
        permutations: perms.k(),
        permuted_stats,
    })
}

/// For each permutation `p` in `orders` (row-major, `stats.len() x n`):
/// `stats[p] = sum_{row<col} ynorm[idx(row,col)] * (x[o[row]][o[col]] * mul + add)`.
fn permuted_dot_group<T: Real>(
    x: &[T],
    n: usize,
    orders: &[usize],
    pre: &PearsonPrecomp,
    stats: &mut [f64],
) {
    let (mul, add) = (pre.mul, pre.add);
    stats.iter_mut().for_each(|s| *s = 0.0);
    for row in 0..n.saturating_sub(1) {
        let idx = row_offset(row, n);
        let y_run = &pre.ynorm[idx..idx + (n - row - 1)];
        for (stat, order) in stats.iter_mut().zip(orders.chunks_exact(n)) {
            let x_row = &x[order[row] * n..(order[row] + 1) * n];
            let mut acc = *stat;
            for (&yval, &col) in y_run.iter().zip(&order[row + 1..]) {
                let xval = x_row[col].to_f64() * mul + add;
                acc += yval * xval;
            }
            *stat = acc;
        }
    }
}
