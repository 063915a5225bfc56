//! Experiment runner: every subcommand produces a reproducible report with
//! the resolved configuration, result rows, and pass/fail assertions.
//!
//! Exit status: 0 when all assertions pass, 1 when any fails, 2 for usage or
//! validation errors. A JSON error object is emitted on stdout even for
//! usage failures so output stays machine-parsable.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde_json::Value;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
}

/// Common options after merging the optional config file (flags win).
pub struct Resolved {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub dim: Option<usize>,
    pub group: Option<String>,
    pub field: Option<String>,
    pub format: String,
    pub threads: Option<usize>,
}

impl Resolved {
    pub fn require_seed(&self) -> Result<u64, CliError> {
        self.seed.ok_or_else(|| {
            CliError::Usage(
                "--seed is required for sampling runs (no silent time-based seeding)".into(),
            )
        })
    }
}

#[derive(Parser)]
#[command(
    name = "specmean",
    version,
    about = "Monte Carlo and quadrature experiments on coset spectral-radius averages"
)]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// JSON file with default parameter values; explicit flags take precedence
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// RNG seed (required for any sampling run)
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Monte Carlo sample count (meaning is per-subcommand)
    #[arg(long, global = true)]
    samples: Option<usize>,

    /// Matrix dimension n
    #[arg(long, global = true)]
    dim: Option<usize>,

    /// Group to integrate over: O, SO, or U
    #[arg(long, global = true)]
    group: Option<String>,

    /// Scalar field for generated matrices: real or complex
    #[arg(long, global = true)]
    field: Option<String>,

    /// Output format
    #[arg(long, global = true, value_parser = ["json", "csv"])]
    format: Option<String>,

    /// Write the report to a file instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads (results are independent of this value)
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo estimate of the sphere integral of log(sum a_i u_i^2)
    SphereIntegral {
        /// Comma-separated positive weights a1,..,an
        #[arg(long)]
        weights: Option<String>,
        /// Also evaluate the deterministic quadrature (n <= 3)
        #[arg(long)]
        quadrature: bool,
    },
    /// Two-level coset integral of log ||A X u|| and its reduced form
    CosetIntegral {
        /// Matrix JSON file
        #[arg(long)]
        matrix: Option<PathBuf>,
        /// Diagonal entries shortcut, e.g. 2,0.5
        #[arg(long)]
        diag: Option<String>,
    },
    /// Average of log rho(A X) over Haar X
    SpectralAverage {
        #[arg(long)]
        matrix: Option<PathBuf>,
        #[arg(long)]
        diag: Option<String>,
    },
    /// Scan a diagonal grid for the worst ratio of average to log sigma_1
    ConstantEstimate {
        /// Number of random traceless-normalized directions
        #[arg(long)]
        directions: Option<usize>,
        /// Scale grid lo:hi:steps[:log|lin]
        #[arg(long = "t-grid")]
        t_grid: Option<String>,
    },
    /// Gershgorin disks and eigenvalue containment
    GershgorinCheck {
        /// Matrix JSON file (otherwise random falsification mode)
        #[arg(long)]
        matrix: Option<PathBuf>,
        /// Number of random matrices in falsification mode
        #[arg(long)]
        count: Option<usize>,
    },
    /// Spectral-radius brackets for diag(d)(I + tM) and derivative spot checks
    PerturbationCheck {
        #[arg(long)]
        count: Option<usize>,
    },
    /// Derivative floor of the distinguished rotation construction
    X0Derivative {
        /// Explicit exponent vector (otherwise random directions)
        #[arg(long = "d-vector")]
        d_vector: Option<String>,
        #[arg(long)]
        count: Option<usize>,
    },
    /// Deterministic dimension-2 average and its closed form
    Dim2Exact {
        #[arg(long)]
        a: Option<f64>,
        #[arg(long)]
        nodes: Option<usize>,
    },
    /// Interval-gap counterexample constructor with certificate
    Dim2Counterexample {
        #[arg(long = "gap-lo")]
        gap_lo: Option<f64>,
        #[arg(long = "gap-hi")]
        gap_hi: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        probes: Option<usize>,
    },
    /// Invariant-measure experiment: E[log rho] vs E[log norm]
    Genmu {
        /// Singular law: fixed:s1,..,sn or log-uniform:L
        #[arg(long)]
        law: Option<String>,
        /// Outer draws of the singular law
        #[arg(long)]
        matrices: Option<usize>,
    },
    /// Haar sampler diagnostics: moments, invariance, determinism
    HaarSelftest {},
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            println!("{}", report::error_json(&msg));
            ExitCode::from(2)
        }
    }
}

fn run() -> Result<ExitCode, CliError> {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return Ok(ExitCode::SUCCESS);
        }
        Err(e) => return Err(CliError::Usage(e.to_string())),
    };

    let file_defaults = load_config(&cli.common.config)?;
    let resolved = resolve_common(&cli.common, &file_defaults)?;

    if let Some(n) = resolved.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be >= 1".into()));
        }
        // Results are deterministic regardless; this only sizes the pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }

    let report = dispatch(&cli.command, &resolved, &file_defaults)?;
    let text = match resolved.format.as_str() {
        "csv" => report.to_csv(),
        _ => report.to_json(),
    };
    match &cli.common.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?,
        None => println!("{text}"),
    }
    Ok(if report.all_pass() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn load_config(path: &Option<PathBuf>) -> Result<Value, CliError> {
    match path {
        None => Ok(Value::Object(Default::default())),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", p.display())))?;
            let value: Value = serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("bad config JSON: {e}")))?;
            if value.is_object() {
                Ok(value)
            } else {
                Err(CliError::Usage("config file must be a JSON object".into()))
            }
        }
    }
}

fn fill<T: serde::de::DeserializeOwned>(
    slot: Option<T>,
    cfg: &Value,
    key: &str,
) -> Result<Option<T>, CliError> {
    if slot.is_some() {
        return Ok(slot);
    }
    match cfg.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => serde_json::from_value(v.clone())
            .map(Some)
            .map_err(|e| CliError::Usage(format!("config key {key:?}: {e}"))),
    }
}

fn resolve_common(common: &CommonArgs, cfg: &Value) -> Result<Resolved, CliError> {
    Ok(Resolved {
        seed: fill(common.seed, cfg, "seed")?,
        samples: fill(common.samples, cfg, "samples")?,
        dim: fill(common.dim, cfg, "dim")?,
        group: fill(common.group.clone(), cfg, "group")?,
        field: fill(common.field.clone(), cfg, "field")?,
        format: fill(common.format.clone(), cfg, "format")?.unwrap_or_else(|| "json".into()),
        threads: fill(common.threads, cfg, "threads")?,
    })
}

fn dispatch(
    command: &Command,
    resolved: &Resolved,
    cfg: &Value,
) -> Result<report::Report, CliError> {
    match command {
        Command::SphereIntegral {
            weights,
            quadrature,
        } => {
            let weights = fill(weights.clone(), cfg, "weights")?
                .ok_or_else(|| CliError::Usage("need --weights a1,..,an".into()))?;
            commands::sphere_integral(resolved, &weights, *quadrature)
        }
        Command::CosetIntegral { matrix, diag } => {
            let matrix = fill(matrix.clone(), cfg, "matrix")?;
            let diag = fill(diag.clone(), cfg, "diag")?;
            commands::coset_integral(resolved, &matrix, &diag)
        }
        Command::SpectralAverage { matrix, diag } => {
            let matrix = fill(matrix.clone(), cfg, "matrix")?;
            let diag = fill(diag.clone(), cfg, "diag")?;
            commands::spectral_average(resolved, &matrix, &diag)
        }
        Command::ConstantEstimate { directions, t_grid } => {
            let directions = fill(*directions, cfg, "directions")?;
            let t_grid = fill(t_grid.clone(), cfg, "t-grid")?;
            commands::constant_estimate(resolved, directions, &t_grid)
        }
        Command::GershgorinCheck { matrix, count } => {
            let matrix = fill(matrix.clone(), cfg, "matrix")?;
            let count = fill(*count, cfg, "count")?;
            commands::gershgorin_check(resolved, &matrix, count)
        }
        Command::PerturbationCheck { count } => {
            let count = fill(*count, cfg, "count")?;
            commands::perturbation_check(resolved, count)
        }
        Command::X0Derivative { d_vector, count } => {
            let d_vector = fill(d_vector.clone(), cfg, "d-vector")?;
            let count = fill(*count, cfg, "count")?;
            commands::x0_derivative(resolved, &d_vector, count)
        }
        Command::Dim2Exact { a, nodes } => {
            let a = fill(*a, cfg, "a")?;
            let nodes = fill(*nodes, cfg, "nodes")?;
            commands::dim2_exact(resolved, a, nodes)
        }
        Command::Dim2Counterexample {
            gap_lo,
            gap_hi,
            beta,
            probes,
        } => {
            let gap_lo = fill(*gap_lo, cfg, "gap-lo")?;
            let gap_hi = fill(*gap_hi, cfg, "gap-hi")?;
            let beta = fill(*beta, cfg, "beta")?;
            let probes = fill(*probes, cfg, "probes")?;
            commands::dim2_counterexample(resolved, gap_lo, gap_hi, beta, probes)
        }
        Command::Genmu { law, matrices } => {
            let law = fill(law.clone(), cfg, "law")?;
            let matrices = fill(*matrices, cfg, "matrices")?;
            commands::genmu(resolved, &law, matrices)
        }
        Command::HaarSelftest {} => commands::haar_selftest(resolved),
    }
}
