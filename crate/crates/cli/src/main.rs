use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use projcorrect::bounds::{self, rational_json, Rational};
use projcorrect::corrector::{self, CorrectionMode};
use projcorrect::harness::{self, Corruption, PlantedSigma, ReportFormat};
use projcorrect::{Error, ExperimentSpec, FieldSpec, GaloisField, PointMap, ProjSpace, Result};
use serde::Serialize;

/// Self-correction of nearly line-preserving maps of finite projective spaces.
///
/// Exit status is 0 on success, 2 when an argument or input violates a
/// precondition, and 3 on I/O failure. PROJCORRECT_THREADS caps the number
/// of worker threads.
#[derive(Parser)]
#[command(name = "projcorrect", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct FieldArgs {
    /// Characteristic.
    #[arg(long)]
    p: u32,
    /// Extension degree.
    #[arg(long, default_value_t = 1)]
    k: u32,
    /// Modulus coefficients, constant term first (default: built-in table).
    #[arg(long, value_delimiter = ',')]
    modulus: Option<Vec<u32>>,
}

impl FieldArgs {
    fn spec(&self) -> Result<FieldSpec> {
        match &self.modulus {
            Some(m) => Ok(FieldSpec::new(self.p, self.k, m.clone())),
            None => FieldSpec::with_default_modulus(self.p, self.k),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Exact,
    Sampled,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate a random semilinear map of P^n.
    Gen {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Frobenius exponent or "random".
        #[arg(long, default_value = "random")]
        sigma: String,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the planted sigma exponent and matrix here.
        #[arg(long)]
        semilinear_out: Option<PathBuf>,
    },
    /// Swap the images of disjoint random point pairs.
    Corrupt {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fraction of lines not sent to lines.
    EstimateEps {
        #[arg(long)]
        map: PathBuf,
        #[arg(long, value_enum, default_value = "exact")]
        mode: Mode,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Majority-vote correction of every point.
    Correct {
        #[arg(long)]
        map: PathBuf,
        #[arg(long, value_enum, default_value = "exact")]
        mode: Mode,
        /// Pairs of pointed lines sampled per point.
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 0.6)]
        threshold: f64,
        /// Lines sampled to estimate the defect in sampled mode.
        #[arg(long, default_value_t = 10_000)]
        line_samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Recover sigma and the matrix of a line-preserving map.
    Reconstruct {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact evaluation of A, B and the correction hypotheses.
    Bounds {
        #[arg(long)]
        q: u64,
        #[arg(long)]
        n: u32,
        /// NUM/DEN or an integer.
        #[arg(long, default_value = "0")]
        eps: String,
    },
    /// Run seeded trials: plant, corrupt, correct, reconstruct.
    Experiment {
        /// ExperimentSpec JSON file; overrides the inline flags.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Characteristic (required without --spec).
        #[arg(long, required_unless_present = "spec")]
        p: Option<u32>,
        #[arg(long, default_value_t = 1)]
        k: u32,
        #[arg(long, value_delimiter = ',')]
        modulus: Option<Vec<u32>>,
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long, default_value = "random")]
        sigma: String,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, value_enum, default_value = "exact")]
        mode: Mode,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 0.6)]
        threshold: f64,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn output(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, bytes)?,
        None => std::io::stdout().write_all(bytes)?,
    }
    Ok(())
}

fn json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}

fn mode_of(mode: Mode, samples: usize, threshold: f64, line_samples: usize, seed: u64) -> CorrectionMode {
    match mode {
        Mode::Exact => CorrectionMode::Exact,
        Mode::Sampled => CorrectionMode::Sampled { samples, threshold, seed, line_samples },
    }
}

#[derive(Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
enum EpsOutput {
    Exact {
        #[serde(with = "rational_json")]
        preserved_fraction: Rational,
        #[serde(with = "rational_json")]
        eps: Rational,
    },
    Sampled { samples: usize, seed: u64, preserved_estimate: f64, eps_estimate: f64, stderr: f64 },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen { field, n, seed, sigma, out, semilinear_out } => {
            let space = ProjSpace::new(GaloisField::new(field.spec()?)?, n)?;
            let m = harness::gen_semilinear(&space, seed, sigma.parse()?)?;
            if let Some(p) = semilinear_out {
                std::fs::write(p, json(&m.to_file())?)?;
            }
            output(out.as_deref(), m.to_point_map(&space)?.to_json().as_bytes())
        }
        Command::Corrupt { map, count, seed, out } => {
            let f = PointMap::read(&map)?;
            output(out.as_deref(), harness::corrupt_swap(&f, count, seed)?.to_json().as_bytes())
        }
        Command::EstimateEps { map, mode, samples, seed } => {
            let f = PointMap::read(&map)?;
            let report = match mode {
                Mode::Exact => {
                    let p = corrector::preserved_line_fraction_exact(&f)?;
                    EpsOutput::Exact { eps: bounds::rational(1, 1) - &p, preserved_fraction: p }
                }
                Mode::Sampled => {
                    let (est, stderr) = corrector::preserved_line_fraction_sampled(&f, samples, seed)?;
                    EpsOutput::Sampled { samples, seed, preserved_estimate: est, eps_estimate: 1.0 - est, stderr }
                }
            };
            output(None, &json(&report)?)
        }
        Command::Correct { map, mode, samples, threshold, line_samples, seed, out, report } => {
            let f = PointMap::read(&map)?;
            let (g, rep) = corrector::correct_map(&f, &mode_of(mode, samples, threshold, line_samples, seed))?;
            if let Some(p) = report {
                std::fs::write(p, json(&rep)?)?;
            }
            output(out.as_deref(), g.to_json().as_bytes())
        }
        Command::Reconstruct { map, out } => {
            let f = PointMap::read(&map)?;
            let m = corrector::reconstruct_semilinear(&f)?;
            output(out.as_deref(), &json(&m.to_file())?)
        }
        Command::Bounds { q, n, eps } => {
            let eps = bounds::parse_rational(&eps)?;
            output(None, &json(&bounds::hypotheses(q, n, &eps)?)?)
        }
        Command::Experiment {
            spec,
            p,
            k,
            modulus,
            n,
            sigma,
            count,
            mode,
            samples,
            threshold,
            trials,
            seed,
            format,
            out,
        } => {
            let spec: ExperimentSpec = match (spec, p) {
                (Some(path), _) => serde_json::from_slice(&std::fs::read(path)?)?,
                (None, Some(p)) => ExperimentSpec {
                    field: FieldArgs { p, k, modulus }.spec()?,
                    n,
                    planted_sigma: sigma.parse::<PlantedSigma>()?,
                    corruption: Corruption::SwapPairs { count },
                    mode: mode_of(mode, samples, threshold, 10_000, seed),
                    trials,
                    master_seed: seed,
                },
                (None, None) => {
                    return Err(Error::InvalidArgument("experiment needs --spec or --p".into()))
                }
            };
            let results = harness::run_experiment(&spec)?;
            let format = match format {
                Format::Json => ReportFormat::Json,
                Format::Csv => ReportFormat::Csv,
            };
            match out {
                Some(p) => harness::emit_report(&results, format, &p),
                None => output(None, &harness::render_report(&results, format)?),
            }
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("PROJCORRECT_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::InvalidArgument(format!("PROJCORRECT_THREADS={v:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::InvalidArgument(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match configure_threads().and_then(|()| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("projcorrect: {e}");
            ExitCode::from(if e.is_io() { 3 } else { 2 })
        }
    }
}
