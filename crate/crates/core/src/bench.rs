//! Naive-versus-optimized benchmark harness.
//!
//! Each [`BenchCase`] synthesizes its input from a seed, so the naive and
//! optimized variants of a workload see identical data and their checksums
//! can be compared. Only the kernel call is timed; synthesis, validation of
//! the synthetic input, and permutation generation happen outside the timer.

use std::fmt::{self, Write as _};
use std::hint::black_box;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::centering::{center_fused, center_naive, CenteredMatrix};
use crate::mantel::{mantel_fused, mantel_naive, MantelResult};
use crate::{
    make_permutations, validate_naive, validate_tiled, with_threads, DistanceMatrix, Error, Result,
    ValidationReport,
};

/// Default matrix sizes for a sweep.
pub const DEFAULT_SIZES: [usize; 4] = [256, 1024, 4096, 8192];
pub const DEFAULT_REPETITIONS: usize = 3;
pub const DEFAULT_BENCH_PERMUTATIONS: usize = 99;

/// Relative tolerance for naive/optimized checksum agreement on float outputs.
pub const CHECKSUM_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Workload {
    Center,
    Mantel,
    Validate,
}

impl Workload {
    pub const ALL: [Workload; 3] = [Workload::Center, Workload::Mantel, Workload::Validate];

    pub fn as_str(self) -> &'static str {
        match self {
            Workload::Center => "center",
            Workload::Mantel => "mantel",
            Workload::Validate => "validate",
        }
    }

    fn title(self) -> &'static str {
        match self {
            Workload::Center => "Runtimes for distance matrix centering, in seconds",
            Workload::Mantel => "Runtimes for mantel, in seconds",
            Workload::Validate => "Runtimes for matrix validation, in seconds",
        }
    }
}

impl fmt::Display for Workload {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Workload {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Workload::ALL
            .into_iter()
            .find(|w| w.as_str() == s)
            .ok_or_else(|| Error::Precondition(format!("unknown workload {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Variant {
    Naive,
    Optimized,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Naive => "naive",
            Variant::Optimized => "optimized",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BenchCase {
    pub workload: Workload,
    pub n: usize,
    /// Worker count for the kernel; 0 means every available core.
    pub threads: usize,
    pub variant: Variant,
    pub repetitions: usize,
    pub tile: usize,
    pub seed: u64,
    /// Mantel only.
    pub permutations: usize,
}

impl BenchCase {
    pub fn new(workload: Workload, n: usize, variant: Variant) -> Self {
        Self {
            workload,
            n,
            threads: 1,
            variant,
            repetitions: DEFAULT_REPETITIONS,
            tile: crate::DEFAULT_TILE,
            seed: 0,
            permutations: DEFAULT_BENCH_PERMUTATIONS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Timings {
    pub min: f64,
    pub median: f64,
    pub max: f64,
}

impl Timings {
    fn from_samples(mut samples: Vec<f64>) -> Self {
        samples.sort_by(f64::total_cmp);
        let len = samples.len();
        let median = if len % 2 == 1 {
            samples[len / 2]
        } else {
            (samples[len / 2 - 1] + samples[len / 2]) / 2.0
        };
        Self {
            min: samples[0],
            median,
            max: samples[len - 1],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub case: BenchCase,
    pub wall_seconds: Timings,
    pub checksum: f64,
}

/// Random matrix with `x[i][j] = |u_i - u_j|`, `u` uniform on `[0, 1)`.
/// Symmetric and hollow by construction; returned validated.
pub fn synthetic_matrix(n: usize, seed: u64, stream: u64) -> Result<DistanceMatrix> {
    let elements = n.checked_mul(n).ok_or(Error::Resource {
        n,
        bytes: usize::MAX,
    })?;
    let bytes = elements.saturating_mul(std::mem::size_of::<f64>());
    let mut data: Vec<f64> = Vec::new();
    data.try_reserve_exact(elements)
        .map_err(|_| Error::Resource { n, bytes })?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let u: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    for &ui in &u {
        data.extend(u.iter().map(|&uj| (ui - uj).abs()));
    }
    let mut mat = DistanceMatrix::from_unlabeled(data, n)?;
    let report = validate_tiled(mat.data(), n, crate::DEFAULT_TILE)?;
    mat.mark_validated(&report)?;
    Ok(mat)
}

fn centered_checksum(c: &CenteredMatrix) -> f64 {
    c.data.iter().map(|v| v * v).sum()
}

fn mantel_checksum(r: &MantelResult) -> f64 {
    r.orig_stat * r.orig_stat + r.permuted_stats.iter().map(|s| s * s).sum::<f64>()
}

fn validation_checksum(r: &ValidationReport) -> f64 {
    r.is_symmetric as u8 as f64 + r.is_hollow as u8 as f64
}

fn time_reps<O>(
    reps: usize,
    mut kernel: impl FnMut() -> Result<O>,
    digest: impl Fn(&O) -> f64,
) -> Result<(Vec<f64>, f64)> {
    let mut samples = Vec::with_capacity(reps);
    let mut checksum = 0.0;
    for _ in 0..reps {
        let start = Instant::now();
        let out = black_box(kernel()?);
        samples.push(start.elapsed().as_secs_f64());
        checksum = digest(&out);
    }
    Ok((samples, checksum))
}

pub fn run_bench(case: &BenchCase) -> Result<BenchReport> {
    if case.repetitions == 0 {
        return Err(Error::Precondition("repetitions must be at least 1".into()));
    }
    if case.n < 2 {
        return Err(Error::Precondition("bench matrices need n >= 2".into()));
    }
    if case.tile == 0 {
        return Err(Error::Precondition("tile size must be at least 1".into()));
    }
    let x = synthetic_matrix(case.n, case.seed, 0)?;
    let reps = case.repetitions;
    let tile = case.tile;

    let (samples, checksum) = match case.workload {
        Workload::Center => with_threads(case.threads, || match case.variant {
            Variant::Naive => time_reps(reps, || center_naive(&x), centered_checksum),
            Variant::Optimized => time_reps(reps, || center_fused(&x, tile), centered_checksum),
        })??,
        Workload::Validate => with_threads(case.threads, || match case.variant {
            Variant::Naive => time_reps(
                reps,
                || validate_naive(x.data(), case.n),
                validation_checksum,
            ),
            Variant::Optimized => time_reps(
                reps,
                || validate_tiled(x.data(), case.n, tile),
                validation_checksum,
            ),
        })??,
        Workload::Mantel => {
            if case.n < 3 {
                return Err(Error::Precondition("mantel bench needs n >= 3".into()));
            }
            let y = synthetic_matrix(case.n, case.seed, 1)?;
            let perms = make_permutations(case.n, case.permutations, case.seed);
            with_threads(case.threads, || match case.variant {
                Variant::Naive => time_reps(reps, || mantel_naive(&x, &y, &perms), mantel_checksum),
                Variant::Optimized => {
                    time_reps(reps, || mantel_fused(&x, &y, &perms, tile), mantel_checksum)
                }
            })??
        }
    };

    Ok(BenchReport {
        case: *case,
        wall_seconds: Timings::from_samples(samples),
        checksum,
    })
}

/// A naive/optimized pair for the same input whose checksums disagree.
#[derive(Debug, Clone, PartialEq)]
pub struct ChecksumMismatch {
    pub workload: Workload,
    pub n: usize,
    pub seed: u64,
    pub naive: f64,
    pub optimized: f64,
}

/// Compares every naive report with every optimized report on the same
/// (workload, n, seed, permutations).
pub fn checksum_mismatches(reports: &[BenchReport]) -> Vec<ChecksumMismatch> {
    let mut out = Vec::new();
    for a in reports.iter().filter(|r| r.case.variant == Variant::Naive) {
        for b in reports
            .iter()
            .filter(|r| r.case.variant == Variant::Optimized)
        {
            let (ca, cb) = (&a.case, &b.case);
            let same_input = ca.workload == cb.workload
                && ca.n == cb.n
                && ca.seed == cb.seed
                && (ca.workload != Workload::Mantel || ca.permutations == cb.permutations);
            if !same_input {
                continue;
            }
            let agree = match ca.workload {
                Workload::Validate => a.checksum == b.checksum,
                _ => {
                    (a.checksum - b.checksum).abs()
                        <= CHECKSUM_RTOL * a.checksum.abs().max(b.checksum.abs())
                }
            };
            if !agree {
                out.push(ChecksumMismatch {
                    workload: ca.workload,
                    n: ca.n,
                    seed: ca.seed,
                    naive: a.checksum,
                    optimized: b.checksum,
                });
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Text,
}

impl FromStr for TableFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(TableFormat::Csv),
            "text" => Ok(TableFormat::Text),
            _ => Err(Error::Precondition(format!("unknown table format {s:?}"))),
        }
    }
}

pub const CSV_HEADER: &str = "workload,n,threads,variant,tile,reps,min_s,median_s,max_s,checksum";

/// Renders reports grouped by workload, then by matrix size.
pub fn emit_table(reports: &[BenchReport], format: TableFormat) -> String {
    let mut sorted: Vec<&BenchReport> = reports.iter().collect();
    sorted.sort_by_key(|r| (r.case.workload, r.case.n));
    match format {
        TableFormat::Csv => emit_csv(&sorted),
        TableFormat::Text => emit_text(&sorted),
    }
}

fn emit_csv(reports: &[&BenchReport]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in reports {
        let c = &r.case;
        let t = &r.wall_seconds;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{:.6e},{:.6e},{:.6e},{:e}",
            c.workload,
            c.n,
            crate::effective_threads(c.threads),
            c.variant,
            c.tile,
            c.repetitions,
            t.min,
            t.median,
            t.max,
            r.checksum
        );
    }
    out
}

/// One table per workload with a row per (threads, n): naive median,
/// optimized median, and their ratio.
fn emit_text(reports: &[&BenchReport]) -> String {
    let mut out = String::new();
    for workload in Workload::ALL {
        let group: Vec<&&BenchReport> = reports
            .iter()
            .filter(|r| r.case.workload == workload)
            .collect();
        if group.is_empty() {
            continue;
        }
        let mut keys: Vec<(usize, usize)> = group
            .iter()
            .map(|r| (r.case.n, crate::effective_threads(r.case.threads)))
            .collect();
        keys.dedup();
        let _ = writeln!(out, "{}", workload.title());
        let _ = writeln!(
            out,
            "{:<36}{:>12}{:>12}{:>10}",
            "number of used cores, matrix size", "Original", "Latest", "Speedup"
        );
        for (n, threads) in keys {
            let median = |variant| {
                group
                    .iter()
                    .find(|r| {
                        r.case.n == n
                            && crate::effective_threads(r.case.threads) == threads
                            && r.case.variant == variant
                    })
                    .map(|r| r.wall_seconds.median)
            };
            let (naive, opt) = (median(Variant::Naive), median(Variant::Optimized));
            let cell = |v: Option<f64>| v.map_or("-".to_string(), |s| format!("{s:.4}"));
            let speedup = match (naive, opt) {
                (Some(a), Some(b)) if b > 0.0 => format!("{:.1}x", a / b),
                _ => "-".to_string(),
            };
            let label = format!(
                "{threads} core{} - {n} x {n}",
                if threads == 1 { "" } else { "s" }
            );
            let _ = writeln!(
                out,
                "{label:<36}{:>12}{:>12}{speedup:>10}",
                cell(naive),
                cell(opt)
            );
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn case(workload: Workload, n: usize, variant: Variant) -> BenchCase {
        BenchCase {
            repetitions: 1,
            ..BenchCase::new(workload, n, variant)
        }
    }

    #[test]
    fn synthetic_input_is_valid_and_seeded() {
        let a = synthetic_matrix(40, 7, 0).unwrap();
        assert!(a.is_validated());
        assert_eq!(a, synthetic_matrix(40, 7, 0).unwrap());
        assert_ne!(a, synthetic_matrix(40, 7, 1).unwrap());
        assert_ne!(a, synthetic_matrix(40, 8, 0).unwrap());
    }

    #[test]
    fn center_checksums_agree() {
        let naive = run_bench(&case(Workload::Center, 256, Variant::Naive)).unwrap();
        let opt = run_bench(&case(Workload::Center, 256, Variant::Optimized)).unwrap();
        assert!((naive.checksum - opt.checksum).abs() <= 1e-9 * naive.checksum.abs());
        assert!(checksum_mismatches(&[naive, opt]).is_empty());
    }

    #[test]
    fn timings_are_ordered() {
        let r = run_bench(&BenchCase {
            repetitions: 3,
            ..BenchCase::new(Workload::Validate, 256, Variant::Optimized)
        })
        .unwrap();
        let t = r.wall_seconds;
        assert!(t.min <= t.median && t.median <= t.max);
        assert_eq!(r.checksum, 2.0);
    }

    #[test]
    fn mantel_checksum_is_thread_independent() {
        let mut c = case(Workload::Mantel, 512, Variant::Optimized);
        c.permutations = 99;
        c.threads = 1;
        let one = run_bench(&c).unwrap();
        c.threads = 4;
        let four = run_bench(&c).unwrap();
        assert_eq!(one.checksum.to_bits(), four.checksum.to_bits());
    }

    #[test]
    fn rejects_bad_cases() {
        assert!(run_bench(&BenchCase {
            repetitions: 0,
            ..case(Workload::Center, 8, Variant::Naive)
        })
        .is_err());
        assert!(run_bench(&case(Workload::Center, 1, Variant::Naive)).is_err());
        assert!(run_bench(&BenchCase {
            tile: 0,
            ..case(Workload::Center, 8, Variant::Naive)
        })
        .is_err());
    }

    #[test]
    fn absurd_size_is_a_resource_error() {
        assert!(matches!(
            synthetic_matrix(usize::MAX / 2, 0, 0),
            Err(Error::Resource { .. })
        ));
        assert!(matches!(
            synthetic_matrix(1 << 31, 0, 0),
            Err(Error::Resource { .. })
        ));
    }

    #[test]
    fn mismatches_are_detected() {
        let naive = BenchReport {
            case: case(Workload::Center, 16, Variant::Naive),
            wall_seconds: Timings {
                min: 1.0,
                median: 1.0,
                max: 1.0,
            },
            checksum: 10.0,
        };
        let mut opt = naive.clone();
        opt.case.variant = Variant::Optimized;
        opt.checksum = 10.1;
        assert_eq!(checksum_mismatches(&[naive.clone(), opt.clone()]).len(), 1);
        opt.case.seed = 3;
        assert!(checksum_mismatches(&[naive, opt]).is_empty());
    }

    fn fake(workload: Workload, n: usize, variant: Variant, median: f64) -> BenchReport {
        BenchReport {
            case: case(workload, n, variant),
            wall_seconds: Timings {
                min: median,
                median,
                max: median,
            },
            checksum: 1.0,
        }
    }

    #[test]
    fn csv_output() {
        assert_eq!(emit_table(&[], TableFormat::Csv), format!("{CSV_HEADER}\n"));
        let one = emit_table(
            &[fake(Workload::Center, 64, Variant::Naive, 0.5)],
            TableFormat::Csv,
        );
        let lines: Vec<&str> = one.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[1].starts_with("center,64,1,naive,16,1,"));
    }

    #[test]
    fn rows_grouped_by_workload_then_size() {
        let reports = [
            fake(Workload::Validate, 64, Variant::Naive, 1.0),
            fake(Workload::Center, 256, Variant::Naive, 1.0),
            fake(Workload::Mantel, 32, Variant::Optimized, 1.0),
            fake(Workload::Center, 64, Variant::Optimized, 1.0),
        ];
        let csv = emit_table(&reports, TableFormat::Csv);
        let keys: Vec<(String, String)> = csv
            .lines()
            .skip(1)
            .map(|l| {
                let mut f = l.split(',');
                (f.next().unwrap().to_string(), f.next().unwrap().to_string())
            })
            .collect();
        let expected = [
            ("center", "64"),
            ("center", "256"),
            ("mantel", "32"),
            ("validate", "64"),
        ];
        assert_eq!(keys, expected.map(|(a, b)| (a.to_string(), b.to_string())));
    }

    #[test]
    fn text_output_pairs_variants() {
        let reports = [
            fake(Workload::Center, 64, Variant::Naive, 3.0),
            fake(Workload::Center, 64, Variant::Optimized, 1.0),
            fake(Workload::Mantel, 32, Variant::Optimized, 2.0),
        ];
        let text = emit_table(&reports, TableFormat::Text);
        assert!(text.contains("Runtimes for distance matrix centering, in seconds"));
        let row = text
            .lines()
            .find(|l| l.starts_with("1 core - 64 x 64"))
            .unwrap();
        assert!(row.contains("3.0000") && row.contains("1.0000") && row.ends_with("3.0x"));
        let mantel = text
            .lines()
            .find(|l| l.starts_with("1 core - 32 x 32"))
            .unwrap();
        assert!(mantel.contains('-'));
    }
}
