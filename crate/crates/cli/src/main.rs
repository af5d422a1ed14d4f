//! `rllbec`: capacity queries, sweeps, simulations and sequence validation
//! for the (0,k)-RLL constrained binary erasure channel with feedback.
//!
//! Exit codes: 0 success, 1 a validated sequence violates the constraint,
//! 2 usage or I/O error, 3 an invariant check failed.

mod sweep;

use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use rllbec::capacity::{feedback_capacity, grid_max_rate};
use rllbec::constraint::RllConstraint;
use rllbec::sim::{run_feedback_sim, DeltaChoice, SimConfig, SimReport};
use sweep::{Curve, Grid, SweepPlan};

const THREADS_VAR: &str = "RLLBEC_THREADS";

#[derive(Parser)]
#[command(
    name = "rllbec",
    version,
    about = "Feedback capacity of the RLL-constrained binary erasure channel"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Feedback capacity of the (0,k) constrained channel at one erasure probability.
    Capacity {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// Evaluate capacity curves over a grid of erasure probabilities.
    Sweep {
        /// Comma-separated: fb0k, unconstrained, nc-dinf, fb-ub-2inf, cap-12.
        #[arg(long, value_delimiter = ',', default_value = "fb0k")]
        curves: Vec<Curve>,
        /// Values of k for the fb0k curve.
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
        k: Vec<usize>,
        /// Minimum runlength d for nc-dinf.
        #[arg(long, default_value_t = 2)]
        d: u32,
        /// Erasure-probability grid as start:stop:step, endpoints included.
        #[arg(long, default_value = "0:1:0.01")]
        grid: Grid,
        /// Points per axis for the grid-searched bound.
        #[arg(long, default_value_t = 201)]
        grid_n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Run the feedback coding scheme over a simulated erasure channel.
    Simulate {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, default_value_t = 32)]
        log2_messages: u32,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// `optimal` or a comma-separated list of k probabilities.
        #[arg(long, default_value = "optimal")]
        delta: String,
    },
    /// Compare the one-parameter capacity with a brute-force grid maximum.
    Oracle {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        epsilon: f64,
        /// Defaults to 201 for k <= 2 and 51 for k = 3.
        #[arg(long)]
        grid_n: Option<usize>,
    },
    /// Check bit strings on stdin, one per line, against a (d,k) constraint.
    Validate {
        #[arg(long, default_value_t = 0)]
        d: u32,
        /// Maximum runlength, or `inf`.
        #[arg(long)]
        k: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match configure_threads().and_then(|()| run(cli.command)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .with_context(|| format!("{THREADS_VAR} must be a positive integer, got '{raw}'"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .context("configuring the thread pool")?;
    Ok(())
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Capacity { k, epsilon, tol } => cmd_capacity(k, epsilon, tol),
        Command::Sweep {
            curves,
            k,
            d,
            grid,
            grid_n,
            out,
            format,
        } => {
            let plan = SweepPlan {
                curves,
                ks: k,
                d,
                grid,
                grid_n,
            };
            cmd_sweep(&plan, out, format)
        }
        Command::Simulate {
            k,
            epsilon,
            log2_messages,
            trials,
            seed,
            delta,
        } => {
            let delta = parse_delta(&delta)?;
            let config = SimConfig::new(k, epsilon, log2_messages, trials, seed).with_delta(delta);
            cmd_simulate(&config)
        }
        Command::Oracle { k, epsilon, grid_n } => cmd_oracle(k, epsilon, grid_n),
        Command::Validate { d, k } => cmd_validate(d, &k),
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

#[derive(Serialize)]
struct CapacityOutput {
    epsilon: f64,
    k: usize,
    capacity: f64,
    delta: Vec<f64>,
    residual: f64,
}

fn cmd_capacity(k: usize, epsilon: f64, tol: f64) -> Result<ExitCode> {
    if tol.is_nan() || tol <= 0.0 {
        bail!("--tol must be positive");
    }
    let r = feedback_capacity(epsilon, k, tol)?;
    print_json(&CapacityOutput {
        epsilon,
        k,
        capacity: r.value,
        delta: r.params.delta,
        residual: r.residual,
    })?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(plan: &SweepPlan, out: Option<PathBuf>, format: Format) -> Result<ExitCode> {
    let sink: Box<dyn Write> = match &out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("cannot write {}", path.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    };
    let rows = sweep::run_sweep(plan)?;
    match format {
        Format::Csv => sweep::write_csv(&rows, sink)?,
        Format::Json => sweep::write_json(&rows, sink)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn parse_delta(raw: &str) -> Result<DeltaChoice> {
    if raw.trim() == "optimal" {
        return Ok(DeltaChoice::Optimal);
    }
    let values = raw
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .with_context(|| format!("bad delta value '{t}'"))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DeltaChoice::Explicit(values))
}

#[derive(Serialize)]
struct SimulateOutput {
    #[serde(flatten)]
    report: SimReport,
    capacity: f64,
    /// `capacity ± max(3·stderr_rate, 0.01)`.
    rate_band: [f64; 2],
}

fn cmd_simulate(config: &SimConfig) -> Result<ExitCode> {
    let report = run_feedback_sim(config)?;
    let capacity =
        feedback_capacity(config.epsilon, config.k, rllbec::capacity::DEFAULT_TOL)?.value;
    let half = (3.0 * report.stderr_rate).max(0.01);
    let failed = report.errors > 0 || report.violations > 0;
    print_json(&SimulateOutput {
        report,
        capacity,
        rate_band: [capacity - half, capacity + half],
    })?;
    Ok(if failed {
        ExitCode::from(3)
    } else {
        ExitCode::SUCCESS
    })
}

#[derive(Serialize)]
struct OracleOutput {
    epsilon: f64,
    k: usize,
    grid_n: usize,
    one_dim_value: f64,
    grid_value: f64,
    grid_point: Vec<f64>,
    abs_gap: f64,
    bound: f64,
    pass: bool,
}

fn cmd_oracle(k: usize, epsilon: f64, grid_n: Option<usize>) -> Result<ExitCode> {
    if !(1..=3).contains(&k) {
        bail!("oracle supports 1 <= k <= 3, got {k}");
    }
    let (default_n, bound) = if k <= 2 { (201, 5e-4) } else { (51, 2e-3) };
    let grid_n = grid_n.unwrap_or(default_n);
    let one_dim = feedback_capacity(epsilon, k, rllbec::capacity::DEFAULT_TOL)?.value;
    let grid = grid_max_rate(epsilon, k, grid_n)?;
    let abs_gap = (one_dim - grid.value).abs();
    let pass = abs_gap <= bound;
    print_json(&OracleOutput {
        epsilon,
        k,
        grid_n,
        one_dim_value: one_dim,
        grid_value: grid.value,
        grid_point: grid.point,
        abs_gap,
        bound,
        pass,
    })?;
    Ok(if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(3)
    })
}

fn cmd_validate(d: u32, k: &str) -> Result<ExitCode> {
    let k = match k.trim() {
        "inf" => None,
        t => Some(
            t.parse::<u32>()
                .with_context(|| format!("--k must be an integer or 'inf', got '{t}'"))?,
        ),
    };
    let constraint = RllConstraint::new(d, k)?;
    let mut input = String::new();
    io::stdin()
        .read_to_string(&mut input)
        .context("reading stdin")?;

    let mut sequences = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        let bits = line
            .bytes()
            .map(|b| match b {
                b'0' => Ok(0u8),
                b'1' => Ok(1u8),
                other => bail!("line {}: invalid character {:?}", n + 1, char::from(other)),
            })
            .collect::<Result<Vec<u8>>>()?;
        sequences.push(bits);
    }

    let mut out = io::stdout().lock();
    let mut all_ok = true;
    for bits in &sequences {
        match constraint.first_violation(bits) {
            None => writeln!(out, "ok")?,
            Some(i) => {
                all_ok = false;
                writeln!(out, "violation:{}", i + 1)?;
            }
        }
    }
    Ok(if all_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}
