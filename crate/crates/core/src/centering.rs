//! Gower double-centering: `F = E - rowmean(E) - colmean(E) + mean(E)` with
//! `E = -D∘D / 2`.
//!
//! [`center_naive`] performs each step as its own whole-matrix pass with a
//! fresh buffer, the way a chain of array operations would. [`center_fused`]
//! needs two passes: the first writes `E` and its row sums in a single sweep,
//! the second applies the mean corrections in place, tile by tile. Because a
//! distance matrix is symmetric, its column means are its row means and are
//! never computed separately.

use rayon::prelude::*;

use crate::{DistanceMatrix, Error, Real, Result};

/// A double-centered matrix and the E-matrix statistics used to build it.
#[derive(Debug, Clone, PartialEq)]
pub struct CenteredMatrix<T: Real = f64> {
    pub n: usize,
    pub data: Vec<T>,
    /// Row means of `E`, which are also its column means.
    pub row_means: Vec<f64>,
    pub global_mean: f64,
}

impl<T: Real> CenteredMatrix<T> {
    #[inline]
    pub fn get(&self, row: usize, col: usize) -> T {
        self.data[row * self.n + col]
    }

    pub fn row(&self, row: usize) -> &[T] {
        &self.data[row * self.n..(row + 1) * self.n]
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i).to_f64()).sum()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.data
            .chunks(self.n.max(1))
            .map(|row| row.iter().map(|v| v.to_f64()).sum())
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data
            .iter()
            .map(|v| v.to_f64().abs())
            .fold(0.0, f64::max)
    }
}

fn require_validated<T: Real>(mat: &DistanceMatrix<T>) -> Result<()> {
    if mat.is_validated() {
        Ok(())
    } else {
        Err(Error::NotValidated)
    }
}

fn check_buffers(len: usize, n: usize, tile: usize) -> Result<()> {
    if len != n * n {
        return Err(Error::Dimension(format!(
            "buffer of {len} elements is not {n}x{n}"
        )));
    }
    if tile == 0 {
        return Err(Error::Precondition("tile size must be at least 1".into()));
    }
    Ok(())
}

/// Reference centering. Single-threaded, one full pass (and one new buffer)
/// per arithmetic step. Used as the oracle and as the benchmark baseline.
pub fn center_naive<T: Real>(mat: &DistanceMatrix<T>) -> Result<CenteredMatrix<T>> {
    require_validated(mat)?;
    let n = mat.n();
    let nf = n as f64;
    let data = mat.data();

    // e_matrix
    let squared: Vec<T> = data.iter().map(|&v| v * v).collect();
    let minus_two = T::from_f64(-2.0);
    let e: Vec<T> = squared.iter().map(|&v| v / minus_two).collect();
    drop(squared);

    // f_matrix
    let row_means: Vec<f64> = e
        .chunks(n)
        .map(|row| row.iter().map(|v| v.to_f64()).sum::<f64>() / nf)
        .collect();
    let mut col_means = vec![0.0f64; n];
    for row in e.chunks(n) {
        for (acc, v) in col_means.iter_mut().zip(row) {
            *acc += v.to_f64();
        }
    }
    col_means.iter_mut().for_each(|m| *m /= nf);
    let matrix_mean = e.iter().map(|v| v.to_f64()).sum::<f64>() / (nf * nf);

    let minus_rows: Vec<T> = e
        .chunks(n)
        .zip(&row_means)
        .flat_map(|(row, &m)| row.iter().map(move |&v| T::from_f64(v.to_f64() - m)))
        .collect();
    drop(e);
    let minus_cols: Vec<T> = minus_rows
        .chunks(n)
        .flat_map(|row| {
            row.iter()
                .zip(&col_means)
                .map(|(&v, &m)| T::from_f64(v.to_f64() - m))
        })
        .collect();
    drop(minus_rows);
    let centered: Vec<T> = minus_cols
        .iter()
        .map(|&v| T::from_f64(v.to_f64() + matrix_mean))
        .collect();

    Ok(CenteredMatrix {
        n,
        data: centered,
        row_means,
        global_mean: matrix_mean,
    })
}

/// Fused, tiled centering into a newly allocated buffer.
pub fn center_fused<T: Real>(mat: &DistanceMatrix<T>, tile: usize) -> Result<CenteredMatrix<T>> {
    require_validated(mat)?;
    let n = mat.n();
    let mut data = vec![T::ZERO; n * n];
    let (row_means, global_mean) = center_fused_into(mat.data(), n, &mut data, tile)?;
    Ok(CenteredMatrix {
        n,
        data,
        row_means,
        global_mean,
    })
}

/// Fused centering of `src` into a caller-provided `dst`. Both buffers are
/// `n x n` row-major; `src` must be symmetric. Returns `(row_means, global_mean)`.
pub fn center_fused_into<T: Real>(
    src: &[T],
    n: usize,
    dst: &mut [T],
    tile: usize,
) -> Result<(Vec<f64>, f64)> {
    check_buffers(src.len(), n, tile)?;
    check_buffers(dst.len(), n, tile)?;
    let (row_means, global_mean) = e_matrix_means(src, dst, n);
    f_matrix_in_place(&row_means, global_mean, dst, n, tile);
    Ok((row_means, global_mean))
}

/// Fused centering that overwrites `buf` (a symmetric `n x n` matrix) with its centered form.
pub fn center_in_place<T: Real>(buf: &mut [T], n: usize, tile: usize) -> Result<(Vec<f64>, f64)> {
    check_buffers(buf.len(), n, tile)?;
    let row_sums: Vec<f64> = buf
        .par_chunks_mut(n)
        .map(|row| {
            let mut row_sum = 0.0f64;
            for v in row.iter_mut() {
                *v = e_value(*v);
                row_sum += v.to_f64();
            }
            row_sum
        })
        .collect();
    let (row_means, global_mean) = finish_means(row_sums, n);
    f_matrix_in_place(&row_means, global_mean, buf, n, tile);
    Ok((row_means, global_mean))
}

#[inline(always)]
fn e_value<T: Real>(v: T) -> T {
    T::from_f64(-0.5) * v * v
}

/// Row sums reduce in row order, so the result does not depend on how rows
/// were split across workers.
fn finish_means(mut row_sums: Vec<f64>, n: usize) -> (Vec<f64>, f64) {
    let nf = n as f64;
    let global_sum: f64 = row_sums.iter().sum();
    row_sums.iter_mut().for_each(|s| *s /= nf);
    (row_sums, (global_sum / nf) / nf)
}

/// Pass 1: writes `E = -src²/2` into `dst` and returns its row means and grand mean.
fn e_matrix_means<T: Real>(src: &[T], dst: &mut [T], n: usize) -> (Vec<f64>, f64) {
    if n == 0 {
        return (Vec::new(), 0.0);
    }
    let row_sums: Vec<f64> = dst
        .par_chunks_mut(n)
        .zip(src.par_chunks(n))
        .map(|(out, row)| {
            let mut row_sum = 0.0f64;
            for (o, &v) in out.iter_mut().zip(row) {
                let v2 = e_value(v);
                *o = v2;
                row_sum += v2.to_f64();
            }
            row_sum
        })
        .collect();
    finish_means(row_sums, n)
}

/// Pass 2: `centered[r][c] += (global_mean - row_means[r]) - row_means[c]`,
/// walked in `tile x tile` blocks so the slice of `row_means` used as column
/// means stays hot while a band of rows is updated.
fn f_matrix_in_place<T: Real>(
    row_means: &[f64],
    global_mean: f64,
    centered: &mut [T],
    n: usize,
    tile: usize,
) {
    if n == 0 {
        return;
    }
    centered
        .par_chunks_mut(tile * n)
        .enumerate()
        .for_each(|(band, rows)| {
            let trow = band * tile;
            let band_rows = rows.len() / n;
            for tcol in (0..n).step_by(tile) {
                let tcol_max = (tcol + tile).min(n);
                let col_means = &row_means[tcol..tcol_max];
                for r in 0..band_rows {
                    let gr_mean = global_mean - row_means[trow + r];
                    let cells = &mut rows[r * n + tcol..r * n + tcol_max];
                    for (v, &cm) in cells.iter_mut().zip(col_means) {
                        *v = T::from_f64(v.to_f64() + (gr_mean - cm));
                    }
                }
            }
        });
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn validated(data: Vec<f64>, n: usize) -> DistanceMatrix {
        let mut m = DistanceMatrix::from_unlabeled(data, n).unwrap();
        assert!(m.validate(16).unwrap().is_valid());
        m
    }

    fn max_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    fn random_matrix(n: usize, seed: u64) -> DistanceMatrix {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..i {
                let v: f64 = rng.random_range(0.0..3.0);
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        validated(data, n)
    }

    #[test]
    fn two_by_two() {
        // E = [[0,-2],[-2,0]]; row, column and grand means are all -1.
        let m = validated(vec![0.0, 2.0, 2.0, 0.0], 2);
        let expected = [1.0, -1.0, -1.0, 1.0];
        let naive = center_naive(&m).unwrap();
        assert_eq!(naive.data, expected);
        assert_eq!(naive.row_means, [-1.0, -1.0]);
        assert_eq!(naive.global_mean, -1.0);
        let fused = center_fused(&m, 16).unwrap();
        assert_eq!(fused.data, expected);
        assert_eq!(fused.row_means, naive.row_means);
    }

    #[test]
    fn zero_matrix() {
        let m = validated(vec![0.0; 25], 5);
        assert!(center_naive(&m).unwrap().data.iter().all(|&v| v == 0.0));
        assert!(center_fused(&m, 3).unwrap().data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn unit_triangle() {
        // E off-diagonal -1/2; row means and grand mean -1/3.
        let m = validated(vec![0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0], 3);
        for c in [center_naive(&m).unwrap(), center_fused(&m, 2).unwrap()] {
            for i in 0..3 {
                for j in 0..3 {
                    let expected = if i == j { 1.0 / 3.0 } else { -1.0 / 6.0 };
                    assert!((c.get(i, j) - expected).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn single_sample() {
        let m = validated(vec![0.0], 1);
        assert_eq!(center_naive(&m).unwrap().data, [0.0]);
        assert_eq!(center_fused(&m, 16).unwrap().data, [0.0]);
    }

    #[test]
    fn requires_validation() {
        let m = DistanceMatrix::from_unlabeled(vec![0.0, 1.0, 1.0, 0.0], 2).unwrap();
        assert!(matches!(center_naive(&m), Err(Error::NotValidated)));
        assert!(matches!(center_fused(&m, 16), Err(Error::NotValidated)));
        let mut bypass = m.clone();
        bypass.assume_validated();
        assert!(center_fused(&bypass, 16).is_ok());
    }

    #[test]
    fn bad_tile_and_shapes() {
        let m = validated(vec![0.0, 1.0, 1.0, 0.0], 2);
        assert!(matches!(center_fused(&m, 0), Err(Error::Precondition(_))));
        let mut dst = vec![0.0; 3];
        assert!(center_fused_into(m.data(), 2, &mut dst, 16).is_err());
    }

    #[test]
    fn large_random_matches_naive() {
        let m = random_matrix(257, 9);
        let naive = center_naive(&m).unwrap();
        let scale = naive.max_abs();
        for tile in [1, 16, 64] {
            let fused = center_fused(&m, tile).unwrap();
            assert!(max_diff(&fused.data, &naive.data) <= 1e-12 * scale);
        }
    }

    #[test]
    fn in_place_and_into_agree_with_allocating_variant() {
        let m = random_matrix(45, 3);
        let fused = center_fused(&m, 16).unwrap();
        let mut buf = m.data().to_vec();
        let (means, g) = center_in_place(&mut buf, 45, 16).unwrap();
        assert_eq!(buf, fused.data);
        assert_eq!(means, fused.row_means);
        assert_eq!(g, fused.global_mean);
    }

    #[test]
    fn fused_is_thread_count_independent() {
        let m = random_matrix(100, 5);
        let one = crate::with_threads(1, || center_fused(&m, 16).unwrap()).unwrap();
        let four = crate::with_threads(4, || center_fused(&m, 16).unwrap()).unwrap();
        assert_eq!(one, four);
    }

    #[test]
    fn single_precision_mode() {
        let m = random_matrix(30, 8);
        let mut m32 = m.cast::<f32>();
        assert!(m32.validate(16).unwrap().is_valid());
        let naive = center_naive(&m32).unwrap();
        let fused = center_fused(&m32, 16).unwrap();
        let scale = naive.max_abs();
        for (a, b) in naive.data.iter().zip(&fused.data) {
            assert!(((a - b) as f64).abs() <= 1e-5 * (1.0 + scale));
        }
    }

    proptest! {
        #[test]
        fn double_centering_properties(n in 1usize..40, seed in any::<u64>(), tile in 1usize..20) {
            let m = random_matrix(n, seed);
            let naive = center_naive(&m).unwrap();
            let fused = center_fused(&m, tile).unwrap();
            let scale = naive.max_abs();
            prop_assert!(max_diff(&fused.data, &naive.data) <= 1e-12 * (1.0 + scale));
            for c in [&naive, &fused] {
                let bound = 1e-9 * n as f64 * c.max_abs();
                for s in c.row_sums() {
                    prop_assert!(s.abs() <= bound, "row sum {} > {}", s, bound);
                }
                for i in 0..n {
                    for j in 0..n {
                        prop_assert!((c.get(i, j) - c.get(j, i)).abs() <= 1e-12 * (1.0 + scale));
                    }
                }
            }
        }
    }
}
