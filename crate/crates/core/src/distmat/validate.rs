//! Symmetry and hollowness checks.
//!
//! [`validate_naive`] mirrors the whole-array formulation: materialize the
//! transpose, compare it against the input, then walk the diagonal.
//! [`validate_tiled`] fuses both checks into one blocked sweep over the upper
//! triangle of tiles, pairing each tile with its mirror so both stay in cache.
//!
//! Both report identical flags and the same `first_violation`: the smallest
//! offending `(row, col)` in row-major order, where an asymmetric pair is
//! always reported by its upper-triangle position.

use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;

use crate::{Error, Real, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ValidationReport {
    pub is_symmetric: bool,
    pub is_hollow: bool,
    pub first_violation: Option<(usize, usize)>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.is_symmetric && self.is_hollow
    }
}

fn check_square<T>(data: &[T], n: usize) -> Result<()> {
    if data.len() != n * n {
        return Err(Error::Dimension(format!(
            "buffer of {} elements is not square for n = {n}",
            data.len()
        )));
    }
    Ok(())
}

#[inline(always)]
fn same<T: Real>(a: T, b: T, tolerance: f64) -> bool {
    if tolerance == 0.0 {
        a == b
    } else {
        (a.to_f64() - b.to_f64()).abs() <= tolerance
    }
}

#[inline(always)]
fn is_zero<T: Real>(v: T, tolerance: f64) -> bool {
    same(v, T::ZERO, tolerance)
}

type Cell = Option<(usize, usize)>;

fn earliest(a: Cell, b: Cell) -> Cell {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

/// Reference validation with exact comparisons.
pub fn validate_naive<T: Real>(data: &[T], n: usize) -> Result<ValidationReport> {
    validate_naive_with_tolerance(data, n, 0.0)
}

pub fn validate_naive_with_tolerance<T: Real>(
    data: &[T],
    n: usize,
    tolerance: f64,
) -> Result<ValidationReport> {
    check_square(data, n)?;

    let mut transposed = Vec::with_capacity(n * n);
    for col in 0..n {
        transposed.extend((0..n).map(|row| data[row * n + col]));
    }
    // The first row-major mismatch always has row < col: a mismatch at
    // (r, c) with c < r would already have shown up at (c, r).
    let first_asym = data
        .iter()
        .zip(&transposed)
        .position(|(&a, &b)| !same(a, b, tolerance))
        .map(|pos| (pos / n, pos % n));
    drop(transposed);

    let first_diag = (0..n)
        .find(|&k| !is_zero(data[k * n + k], tolerance))
        .map(|k| (k, k));

    Ok(ValidationReport {
        is_symmetric: first_asym.is_none(),
        is_hollow: first_diag.is_none(),
        first_violation: earliest(first_asym, first_diag),
    })
}

/// Fused, tiled validation with exact comparisons.
pub fn validate_tiled<T: Real>(data: &[T], n: usize, tile: usize) -> Result<ValidationReport> {
    validate_tiled_with_tolerance(data, n, tile, 0.0)
}

pub fn validate_tiled_with_tolerance<T: Real>(
    data: &[T],
    n: usize,
    tile: usize,
    tolerance: f64,
) -> Result<ValidationReport> {
    check_square(data, n)?;
    if tile == 0 {
        return Err(Error::Precondition("tile size must be at least 1".into()));
    }

    let bands = n.div_ceil(tile);
    // Lowest band index known to hold each kind of violation.
    let asym_band = AtomicUsize::new(usize::MAX);
    let diag_band = AtomicUsize::new(usize::MAX);

    let first_violation = (0..bands)
        .into_par_iter()
        .map(|band| {
            let asym_seen = asym_band.load(Ordering::Relaxed);
            let diag_seen = diag_band.load(Ordering::Relaxed);
            // Once an earlier band has any violation, this band can no longer
            // supply the first one; it only matters for flags still unknown.
            let earlier = asym_seen.min(diag_seen) < band;
            let scan_sym = !(earlier && asym_seen != usize::MAX);
            let scan_diag = !(earlier && diag_seen != usize::MAX);

            let (sym, diag) = scan_band(data, n, tile, band, tolerance, scan_sym, scan_diag);
            if sym.is_some() {
                asym_band.fetch_min(band, Ordering::Relaxed);
            }
            if diag.is_some() {
                diag_band.fetch_min(band, Ordering::Relaxed);
            }
            earliest(sym, diag)
        })
        .reduce(|| None, earliest);

    Ok(ValidationReport {
        is_symmetric: asym_band.into_inner() == usize::MAX,
        is_hollow: diag_band.into_inner() == usize::MAX,
        first_violation,
    })
}

/// Scans the upper-triangle tiles of one row band. Returns the first
/// asymmetric pair and the first nonzero diagonal entry found in the band.
fn scan_band<T: Real>(
    data: &[T],
    n: usize,
    tile: usize,
    band: usize,
    tolerance: f64,
    scan_sym: bool,
    scan_diag: bool,
) -> (Cell, Cell) {
    let trow = band * tile;
    let trow_max = (trow + tile).min(n);
    let mut first_sym: Cell = None;
    let mut first_diag: Cell = None;

    for tcol in (trow..n).step_by(tile) {
        let tcol_max = (tcol + tile).min(n);
        if scan_sym {
            // rows below an already-found violation cannot improve on it
            let row_end = first_sym.map_or(trow_max, |(r, _)| r + 1);
            for row in trow..row_end {
                let start = if tcol == trow { row + 1 } else { tcol };
                let upper = &data[row * n..(row + 1) * n];
                for col in start..tcol_max {
                    if !same(upper[col], data[col * n + row], tolerance) {
                        first_sym = earliest(first_sym, Some((row, col)));
                        break;
                    }
                }
            }
        }
        if tcol == trow && scan_diag {
            // diagonal block
            first_diag = (trow..trow_max)
                .find(|&k| !is_zero(data[k * n + k], tolerance))
                .map(|k| (k, k));
        }
    }
    (first_sym, first_diag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn report(sym: bool, hollow: bool, first: Option<(usize, usize)>) -> ValidationReport {
        ValidationReport {
            is_symmetric: sym,
            is_hollow: hollow,
            first_violation: first,
        }
    }

    #[test]
    fn two_by_two_examples() {
        let cases: [(&[f64], ValidationReport); 3] = [
            (&[0.0, 1.0, 1.0, 0.0], report(true, true, None)),
            (&[0.0, 1.0, 2.0, 0.0], report(false, true, Some((0, 1)))),
            (&[1.0, 2.0, 2.0, 3.0], report(true, false, Some((0, 0)))),
        ];
        for (data, expected) in cases {
            assert_eq!(validate_naive(data, 2).unwrap(), expected);
            for tile in [1, 2, 16] {
                assert_eq!(validate_tiled(data, 2, tile).unwrap(), expected);
            }
        }
    }

    #[test]
    fn zero_matrix_is_valid() {
        for n in [1, 5, 33] {
            let data = vec![0.0f64; n * n];
            assert_eq!(
                validate_tiled(&data, n, 16).unwrap(),
                report(true, true, None)
            );
        }
    }

    #[test]
    fn perturbed_large_matrix() {
        let n = 257;
        let mut data = vec![0.0f64; n * n];
        for i in 0..n {
            for j in 0..i {
                let v = ((i * 31 + j * 17) % 97) as f64 / 7.0;
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        data[200 * n + 13] += 1.0;
        let naive = validate_naive(&data, n).unwrap();
        assert_eq!(naive, report(false, true, Some((13, 200))));
        for tile in [1, 3, 16, 17, 64] {
            assert_eq!(validate_tiled(&data, n, tile).unwrap(), naive);
        }
    }

    #[test]
    fn trace_zero_but_not_hollow() {
        // trace is 0 but the diagonal is not
        let data = [1.0, 2.0, 2.0, -1.0];
        let r = validate_naive(&data, 2).unwrap();
        assert!(!r.is_hollow);
        assert_eq!(validate_tiled(&data, 2, 16).unwrap(), r);
    }

    #[test]
    fn tolerance_is_opt_in() {
        let data = [0.0, 1.0, 1.0 + 1e-12, 1e-13];
        assert!(!validate_naive(&data, 2).unwrap().is_valid());
        assert!(!validate_tiled(&data, 2, 16).unwrap().is_valid());
        assert!(validate_naive_with_tolerance(&data, 2, 1e-9)
            .unwrap()
            .is_valid());
        assert!(validate_tiled_with_tolerance(&data, 2, 16, 1e-9)
            .unwrap()
            .is_valid());
    }

    #[test]
    fn non_square_and_bad_tile() {
        assert!(matches!(
            validate_naive(&[0.0; 3], 2),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            validate_tiled(&[0.0; 5], 2, 4),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            validate_tiled(&[0.0; 4], 2, 0),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn nan_is_a_violation() {
        let data = [0.0, f64::NAN, f64::NAN, 0.0];
        let r = validate_naive(&data, 2).unwrap();
        assert!(!r.is_symmetric);
        assert_eq!(validate_tiled(&data, 2, 1).unwrap(), r);
    }

    fn matrix_strategy() -> impl Strategy<Value = (usize, Vec<f64>, Vec<(usize, usize, f64)>)> {
        (1usize..48).prop_flat_map(|n| {
            (
                Just(n),
                proptest::collection::vec(0.0f64..10.0, n * n),
                proptest::collection::vec((0..n, 0..n, -2.0f64..2.0), 0..3),
            )
        })
    }

    proptest! {
        #[test]
        fn tiled_matches_naive((n, raw, edits) in matrix_strategy()) {
            let mut data = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..i {
                    data[i * n + j] = raw[i * n + j];
                    data[j * n + i] = raw[i * n + j];
                }
            }
            for (r, c, delta) in edits {
                data[r * n + c] += delta;
            }
            let naive = validate_naive(&data, n).unwrap();
            for tile in [1, 3, 16, 17, 64] {
                prop_assert_eq!(validate_tiled(&data, n, tile).unwrap(), naive);
            }
            prop_assert_eq!(naive.first_violation.is_some(), !naive.is_valid());
        }
    }
}
