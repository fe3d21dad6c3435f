//! `cachedist` command-line front end.
//!
//! Exit codes: 0 success, 1 input failed validation, 2 usage/parse/input
//! errors, 3 numerical failures.

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cachedist::bench::{
    checksum_mismatches, emit_table, run_bench, BenchCase, TableFormat, Variant, Workload,
    DEFAULT_BENCH_PERMUTATIONS, DEFAULT_REPETITIONS, DEFAULT_SIZES,
};
use cachedist::centering::{center_fused, center_naive};
use cachedist::lsmat::{format_significant, read_lsmat, write_lsmat, DEFAULT_PRECISION};
use cachedist::mantel::{mantel_fused, mantel_naive};
use cachedist::pcoa::{pcoa_from_centered, DenseEigensolver};
use cachedist::{
    effective_threads, make_permutations, validate_naive_with_tolerance,
    validate_tiled_with_tolerance, with_threads, DistanceMatrix, Error, Real,
};

/// Environment variable overriding the default worker count.
const THREADS_ENV: &str = "CACHEDIST_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "cachedist",
    version,
    about = "Cache-aware distance matrix kernels"
)]
struct Cli {
    #[command(flatten)]
    common: Common,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Worker threads (0 = all cores). Defaults to $CACHEDIST_THREADS or 0.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Tile edge for the blocked kernels.
    #[arg(long, global = true, default_value_t = cachedist::DEFAULT_TILE)]
    tile: usize,

    /// Element precision for matrix buffers.
    #[arg(long, global = true, value_enum, default_value_t = Precision::F64)]
    precision: Precision,

    /// Write results here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,

    /// Use the naive reference kernels.
    #[arg(long, global = true)]
    naive: bool,

    /// Trust inputs to be symmetric and hollow instead of checking them.
    #[arg(long, global = true)]
    skip_validation: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Precision {
    F32,
    F64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Text,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check that a matrix is symmetric and hollow.
    Validate {
        input: PathBuf,
        /// Absolute tolerance for both checks.
        #[arg(long, default_value_t = 0.0)]
        tolerance: f64,
    },
    /// Gower double-center a matrix and write it as lsmat.
    Center {
        input: PathBuf,
        /// Significant digits in the written matrix.
        #[arg(long, default_value_t = DEFAULT_PRECISION)]
        digits: usize,
    },
    /// Principal coordinates analysis.
    Pcoa {
        input: PathBuf,
        /// Maximum number of axes to report.
        #[arg(long)]
        axes: Option<usize>,
    },
    /// Mantel test between two matrices with the same ids.
    Mantel {
        x: PathBuf,
        y: PathBuf,
        #[arg(long, default_value_t = 999)]
        permutations: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write every permuted statistic to this CSV file.
        #[arg(long)]
        dump_stats: Option<PathBuf>,
    },
    /// Time naive and optimized kernels on synthetic inputs.
    Bench {
        #[arg(long, value_enum, value_delimiter = ',', default_values_t = [BenchWorkload::Center, BenchWorkload::Mantel, BenchWorkload::Validate])]
        workload: Vec<BenchWorkload>,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_SIZES)]
        sizes: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = [1usize])]
        threads_list: Vec<usize>,
        #[arg(long, default_value_t = DEFAULT_REPETITIONS)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Permutations per Mantel case.
        #[arg(long, default_value_t = DEFAULT_BENCH_PERMUTATIONS)]
        permutations: usize,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BenchWorkload {
    Center,
    Mantel,
    Validate,
}

impl From<BenchWorkload> for Workload {
    fn from(w: BenchWorkload) -> Self {
        match w {
            BenchWorkload::Center => Workload::Center,
            BenchWorkload::Mantel => Workload::Mantel,
            BenchWorkload::Validate => Workload::Validate,
        }
    }
}

/// What went wrong, mapped onto an exit code.
#[derive(Debug)]
enum Failure {
    Invalid(String),
    Usage(String),
    Numeric(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Invalid { .. } => Failure::Invalid(e.to_string()),
            e if e.is_numeric() => Failure::Numeric(e.to_string()),
            e => Failure::Usage(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type CliResult<T> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            let (code, msg) = match failure {
                Failure::Invalid(m) => (1, m),
                Failure::Usage(m) => (2, m),
                Failure::Numeric(m) => (3, m),
            };
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}

fn run(cli: Cli) -> CliResult<u8> {
    let threads = match cli.common.threads {
        Some(t) => t,
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => v.trim().parse().map_err(|_| {
                Failure::Usage(format!("{THREADS_ENV}={v:?} is not a thread count"))
            })?,
            Err(_) => 0,
        },
    };
    if cli.common.tile == 0 {
        return Err(Failure::Usage("--tile must be at least 1".into()));
    }
    if !matches!(cli.command, Command::Bench { .. }) {
        eprintln!("threads: {}", effective_threads(threads));
    }
    let ctx = Context {
        threads,
        common: &cli.common,
    };
    match (cli.common.precision, &cli.command) {
        (_, Command::Bench { .. }) => ctx.bench(&cli.command),
        (Precision::F64, cmd) => ctx.dispatch::<f64>(cmd),
        (Precision::F32, cmd) => ctx.dispatch::<f32>(cmd),
    }
}

struct Context<'a> {
    threads: usize,
    common: &'a Common,
}

impl Context<'_> {
    fn output(&self) -> CliResult<Box<dyn Write>> {
        Ok(match &self.common.output {
            Some(path) => Box::new(File::create(path)?),
            None => Box::new(io::stdout().lock()),
        })
    }

    fn pool<R: Send>(&self, f: impl FnOnce() -> R + Send) -> CliResult<R> {
        Ok(with_threads(self.threads, f)?)
    }

    /// Reads a matrix and, unless told to skip it, validates it.
    fn load<T: Real>(&self, path: &Path) -> CliResult<DistanceMatrix<T>> {
        let mut mat: DistanceMatrix<T> =
            read_lsmat(path).map_err(|e| Failure::from(e).prefixed(&path.display().to_string()))?;
        if self.common.skip_validation {
            mat.assume_validated();
            return Ok(mat);
        }
        let report = self.pool(|| self.validate_buffer(&mat, 0.0))??;
        mat.mark_validated(&report)
            .map_err(|e| Failure::from(e).prefixed(&path.display().to_string()))?;
        Ok(mat)
    }

    fn validate_buffer<T: Real>(
        &self,
        mat: &DistanceMatrix<T>,
        tolerance: f64,
    ) -> CliResult<cachedist::ValidationReport> {
        Ok(if self.common.naive {
            validate_naive_with_tolerance(mat.data(), mat.n(), tolerance)?
        } else {
            validate_tiled_with_tolerance(mat.data(), mat.n(), self.common.tile, tolerance)?
        })
    }

    fn dispatch<T: Real>(&self, cmd: &Command) -> CliResult<u8> {
        match cmd {
            Command::Validate { input, tolerance } => self.validate::<T>(input, *tolerance),
            Command::Center { input, digits } => self.center::<T>(input, *digits),
            Command::Pcoa { input, axes } => self.pcoa::<T>(input, *axes),
            Command::Mantel {
                x,
                y,
                permutations,
                seed,
                dump_stats,
            } => self.mantel::<T>(x, y, *permutations, *seed, dump_stats.as_deref()),
            Command::Bench { .. } => unreachable!("bench is dispatched separately"),
        }
    }

    fn validate<T: Real>(&self, input: &Path, tolerance: f64) -> CliResult<u8> {
        let mat: DistanceMatrix<T> = read_lsmat(input)?;
        let report = self.pool(|| self.validate_buffer(&mat, tolerance))??;
        let mut out = self.output()?;
        writeln!(
            out,
            "symmetric: {}, hollow: {}",
            report.is_symmetric, report.is_hollow
        )?;
        if let Some((row, col)) = report.first_violation {
            writeln!(
                out,
                "first violation: ({}, {}) at ({row}, {col})",
                mat.ids()[row],
                mat.ids()[col]
            )?;
        }
        Ok(if report.is_valid() { 0 } else { 1 })
    }

    fn center<T: Real>(&self, input: &Path, digits: usize) -> CliResult<u8> {
        let mat = self.load::<T>(input)?;
        let centered = self.pool(|| {
            if self.common.naive {
                center_naive(&mat)
            } else {
                center_fused(&mat, self.common.tile)
            }
        })??;
        write_lsmat(&centered.data, mat.ids(), self.output()?, digits)?;
        Ok(0)
    }

    fn pcoa<T: Real>(&self, input: &Path, axes: Option<usize>) -> CliResult<u8> {
        let mat = self.load::<T>(input)?;
        let result = self.pool(|| -> cachedist::Result<_> {
            let centered = if self.common.naive {
                center_naive(&mat)?
            } else {
                center_fused(&mat, self.common.tile)?
            };
            pcoa_from_centered(&centered, mat.ids(), axes, &DenseEigensolver::default())
        })??;
        if result.negative_eigenvalue_warning {
            eprintln!("warning: negative eigenvalues; the input is not Euclidean-embeddable");
        }
        let fmt = |v: f64| format_significant(v, DEFAULT_PRECISION);
        let mut out = io::BufWriter::new(self.output()?);
        writeln!(out, "axis\teigenvalue\tproportion_explained")?;
        for a in 0..result.axes {
            writeln!(
                out,
                "PC{}\t{}\t{}",
                a + 1,
                fmt(result.eigenvalues[a]),
                fmt(result.proportion_explained[a])
            )?;
        }
        writeln!(out)?;
        write!(out, "id")?;
        for a in 0..result.axes {
            write!(out, "\tPC{}", a + 1)?;
        }
        writeln!(out)?;
        for (i, id) in result.ids.iter().enumerate() {
            write!(out, "{id}")?;
            for &v in result.sample(i) {
                write!(out, "\t{}", fmt(v))?;
            }
            writeln!(out)?;
        }
        out.flush()?;
        Ok(0)
    }

    fn mantel<T: Real>(
        &self,
        x: &Path,
        y: &Path,
        permutations: usize,
        seed: u64,
        dump_stats: Option<&Path>,
    ) -> CliResult<u8> {
        let x = self.load::<T>(x)?;
        let y = self.load::<T>(y)?;
        let result = self.pool(|| {
            let perms = make_permutations(x.n(), permutations, seed);
            if self.common.naive {
                mantel_naive(&x, &y, &perms)
            } else {
                mantel_fused(&x, &y, &perms, self.common.tile)
            }
        })??;
        let fmt = |v: f64| format_significant(v, DEFAULT_PRECISION);
        let mut out = self.output()?;
        writeln!(out, "statistic\t{}", fmt(result.orig_stat))?;
        writeln!(out, "p_value\t{}", fmt(result.p_value))?;
        writeln!(out, "permutations\t{}", result.permutations)?;
        if let Some(path) = dump_stats {
            let mut csv = io::BufWriter::new(File::create(path)?);
            writeln!(csv, "permutation,statistic")?;
            for (i, s) in result.permuted_stats.iter().enumerate() {
                writeln!(csv, "{i},{}", fmt(*s))?;
            }
            csv.flush()?;
        }
        Ok(0)
    }

    fn bench(&self, cmd: &Command) -> CliResult<u8> {
        let Command::Bench {
            workload,
            sizes,
            threads_list,
            reps,
            seed,
            permutations,
            format,
        } = cmd
        else {
            unreachable!()
        };
        if self.common.precision == Precision::F32 {
            return Err(Failure::Usage("bench runs in f64 only".into()));
        }
        let variants: &[Variant] = if self.common.naive {
            &[Variant::Naive]
        } else {
            &[Variant::Naive, Variant::Optimized]
        };
        let mut reports = Vec::new();
        for &w in workload {
            for &n in sizes {
                for &threads in threads_list {
                    for &variant in variants {
                        let case = BenchCase {
                            workload: w.into(),
                            n,
                            threads,
                            variant,
                            repetitions: *reps,
                            tile: self.common.tile,
                            seed: *seed,
                            permutations: *permutations,
                        };
                        eprintln!(
                            "running {} n={n} threads={} {variant}",
                            case.workload,
                            effective_threads(threads)
                        );
                        reports.push(run_bench(&case)?);
                    }
                }
            }
        }
        let format = match format {
            Format::Csv => TableFormat::Csv,
            Format::Text => TableFormat::Text,
        };
        self.output()?
            .write_all(emit_table(&reports, format).as_bytes())?;

        let mismatches = checksum_mismatches(&reports);
        for m in &mismatches {
            eprintln!(
                "checksum mismatch: {} n={} seed={}: naive {:e} vs optimized {:e}",
                m.workload, m.n, m.seed, m.naive, m.optimized
            );
        }
        Ok(if mismatches.is_empty() { 0 } else { 1 })
    }
}

impl Failure {
    fn prefixed(self, context: &str) -> Self {
        match self {
            Failure::Invalid(m) => Failure::Invalid(format!("{context}: {m}")),
            Failure::Usage(m) => Failure::Usage(format!("{context}: {m}")),
            Failure::Numeric(m) => Failure::Numeric(format!("{context}: {m}")),
        }
    }
}
