//! `sparsid` - configure and run sparse-system-identification experiments.
//!
//! Subcommands:
//! - `simulate`: run a Monte-Carlo experiment and write learning curves;
//! - `sweep`: rerun one algorithm across a gamma grid and report the
//!   steady-state MSE per point plus the argmin;
//! - `identify`: stream a recorded sample file through one filter and write
//!   the final estimate, its support, the error trace and the
//!   alpha-condition diagnostic.
//!
//! Exit codes: 0 success, 2 user/config error, 3 numeric failure.
//! Every output file is accompanied by `<out>.manifest.json` with the full
//! resolved configuration; re-running `simulate` with a manifest's config
//! reproduces the curve file byte for byte.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use sparsid::config::{ExperimentConfig, IdentifyConfig};
use sparsid::harness::{self, IdentifyOutcome};
use sparsid::report;
use sparsid::signal;
use sparsid::Error;

/// Environment variable supplying the default worker-thread count.
/// `--threads` and the config file's `threads` field both override it.
const THREADS_ENV: &str = "SPARSID_THREADS";

#[derive(Parser)]
#[command(
    name = "sparsid",
    version,
    about = "Sparse system identification experiments"
)]
struct Cli {
    /// Worker threads for trial execution (overrides config and SPARSID_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured experiment and write learning curves.
    Simulate {
        /// Experiment TOML file.
        #[arg(long)]
        config: PathBuf,
        /// Output curve file.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Sweep one algorithm's gamma over a grid.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Algorithm id from the config file.
        #[arg(long)]
        algo: String,
        /// Grid as start:step:stop (inclusive).
        #[arg(long)]
        grid: String,
        #[arg(long)]
        out: PathBuf,
        /// Steady-state window; defaults to the final 10% of iterations.
        #[arg(long)]
        window: Option<usize>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Run one filter over a recorded sample file.
    Identify {
        /// Sample CSV (`# m=<M>` header, rows `x_0,...,x_{M-1},d`).
        #[arg(long)]
        samples: PathBuf,
        /// Algorithm TOML file (lambda, optional sigma2, [algorithm] table).
        #[arg(long = "algo-config")]
        algo_config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Serialize)]
struct RunManifest<'a> {
    artifact_version: &'static str,
    command: String,
    timestamp: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    /// Re-parseable TOML of the resolved configuration.
    config_toml: &'a str,
}

fn write_manifest(
    out: &Path,
    command: String,
    seed: Option<u64>,
    config_toml: &str,
) -> Result<(), Error> {
    let manifest = RunManifest {
        artifact_version: env!("CARGO_PKG_VERSION"),
        command,
        timestamp: chrono::Utc::now().to_rfc3339(),
        seed,
        config_toml,
    };
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serialization");
    text.push('\n');
    let path = manifest_path(out);
    std::fs::write(path, text)?;
    Ok(())
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    out.with_file_name(name)
}

fn parse_grid(spec: &str) -> Result<Vec<f64>, Error> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::InvalidArgument(format!(
            "grid must be start:step:stop, got {spec:?}"
        )));
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|e| Error::InvalidArgument(format!("bad grid value {p:?}: {e}")))
        })
        .collect::<Result<_, _>>()?;
    let (start, step, stop) = (nums[0], nums[1], nums[2]);
    if !(step > 0.0) || !start.is_finite() || !stop.is_finite() || start < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "grid needs 0 <= start <= stop and step > 0, got {spec:?}"
        )));
    }
    let mut grid = Vec::new();
    let mut i = 0u32;
    loop {
        let v = start + step * f64::from(i);
        if v > stop + 1e-12 * step {
            break;
        }
        grid.push(v);
        i += 1;
    }
    if grid.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "grid {spec:?} contains no points"
        )));
    }
    Ok(grid)
}

/// Flag > config file > SPARSID_THREADS > rayon default.
fn resolve_threads(flag: Option<usize>, config: Option<usize>) -> Option<usize> {
    flag.or(config).or_else(|| {
        std::env::var(THREADS_ENV)
            .ok()
            .and_then(|v| v.parse().ok())
            .filter(|n| *n > 0)
    })
}

fn with_thread_pool<T>(
    threads: Option<usize>,
    run: impl FnOnce() -> Result<T, Error> + Send,
) -> Result<T, Error>
where
    T: Send,
{
    match threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))?;
            pool.install(run)
        }
        None => run(),
    }
}

fn read_to_string(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))
}

fn cmd_simulate(
    config_path: &Path,
    out: &Path,
    format: Format,
    threads_flag: Option<usize>,
) -> Result<(), Error> {
    let text = read_to_string(config_path)?;
    let cfg = ExperimentConfig::from_toml_str(&text)?;
    let threads = resolve_threads(threads_flag, cfg.threads);
    let curves = with_thread_pool(threads, || harness::run_experiment(&cfg))?;
    let rendered = match format {
        Format::Csv => report::curves_to_csv(&curves),
        Format::Json => report::curves_to_json(&curves),
    };
    std::fs::write(out, rendered)?;
    write_manifest(
        out,
        format!(
            "simulate --config {} --out {}",
            config_path.display(),
            out.display()
        ),
        Some(cfg.seed),
        &cfg.to_toml_string()?,
    )?;
    println!(
        "wrote {} ({} curves x {} iterations, {} trials)",
        out.display(),
        curves.len(),
        cfg.n_iters,
        cfg.n_trials
    );
    Ok(())
}

fn cmd_sweep(
    config_path: &Path,
    algo: &str,
    grid_spec: &str,
    out: &Path,
    window: Option<usize>,
    format: Format,
    threads_flag: Option<usize>,
) -> Result<(), Error> {
    let text = read_to_string(config_path)?;
    let cfg = ExperimentConfig::from_toml_str(&text)?;
    let algorithm = cfg
        .algorithms
        .iter()
        .find(|a| a.id() == algo)
        .ok_or_else(|| {
            Error::Config(format!(
                "no algorithm with id `{algo}` in {}; available: {}",
                config_path.display(),
                cfg.algorithms
                    .iter()
                    .map(|a| a.id())
                    .collect::<Vec<_>>()
                    .join(", ")
            ))
        })?
        .clone();
    let grid = parse_grid(grid_spec)?;
    let window = window.unwrap_or_else(|| (cfg.n_iters / 10).max(1));
    let threads = resolve_threads(threads_flag, cfg.threads);
    let result = with_thread_pool(threads, || {
        harness::sweep_gamma(&cfg, &algorithm, &grid, window)
    })?;
    let rendered = match format {
        Format::Csv => report::sweep_to_csv(&result),
        Format::Json => report::sweep_to_json(&result),
    };
    std::fs::write(out, rendered)?;
    write_manifest(
        out,
        format!(
            "sweep --config {} --algo {algo} --grid {grid_spec} --window {window} --out {}",
            config_path.display(),
            out.display()
        ),
        Some(cfg.seed),
        &cfg.to_toml_string()?,
    )?;
    println!(
        "wrote {} ({} grid points, best_gamma = {})",
        out.display(),
        result.gamma_grid.len(),
        result.best_gamma
    );
    Ok(())
}

#[derive(Serialize)]
struct IdentifyReport {
    schema_version: u32,
    algorithm_id: String,
    m: usize,
    n_samples: usize,
    w_hat: Vec<f64>,
    support: Vec<usize>,
    xi_trace: Vec<f64>,
    alpha_condition: Option<sparsid::AlphaConditionReport>,
}

fn cmd_identify(samples_path: &Path, algo_config: &Path, out: &Path) -> Result<(), Error> {
    let samples = signal::load_samples(samples_path)?;
    if samples.is_empty() {
        return Err(Error::Format(format!(
            "{} contains no samples",
            samples_path.display()
        )));
    }
    let config_text = read_to_string(algo_config)?;
    let cfg = IdentifyConfig::from_toml_str(&config_text)?;
    let IdentifyOutcome {
        algorithm_id,
        w_hat,
        support,
        xi_trace,
        alpha_condition,
    } = harness::identify(&samples, &cfg)?;
    let report = IdentifyReport {
        schema_version: 1,
        algorithm_id,
        m: w_hat.len(),
        n_samples: samples.len(),
        w_hat: w_hat.iter().copied().collect(),
        support,
        xi_trace,
        alpha_condition,
    };
    let mut text = serde_json::to_string_pretty(&report).expect("report serialization");
    text.push('\n');
    std::fs::write(out, text)?;
    write_manifest(
        out,
        format!(
            "identify --samples {} --algo-config {} --out {}",
            samples_path.display(),
            algo_config.display(),
            out.display()
        ),
        None,
        &config_text,
    )?;
    println!(
        "wrote {} ({} samples, |support| = {})",
        out.display(),
        report.n_samples,
        report.support.len()
    );
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    match &cli.command {
        Command::Simulate {
            config,
            out,
            format,
        } => cmd_simulate(config, out, *format, cli.threads),
        Command::Sweep {
            config,
            algo,
            grid,
            out,
            window,
            format,
        } => cmd_sweep(config, algo, grid, out, *window, *format, cli.threads),
        Command::Identify {
            samples,
            algo_config,
            out,
        } => cmd_identify(samples, algo_config, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            if e.is_numeric() {
                ExitCode::from(3)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
