//! `covert`: validate broadcast-with-warden models and compute their covert
//! capacity regions.
//!
//! Exit codes: 0 success, 1 a condition or check failed (or the computation
//! could not be carried out), 2 the input could not be read or parsed.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use covert_core::taylor_verify::{verify_suite, TaylorSuiteReport};
use covert_core::{
    check_conditions, find_degrading_channel, gamma_star, load_model, pareto_boundary, sweep,
    BcWardenModel, CovertError, FamilyFile, OptimizerConfig,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Parser, Debug)]
#[command(
    name = "covert",
    version,
    about = "Covert capacity regions of degraded broadcast channels with a warden"
)]
struct Cli {
    /// Include wall-clock timings in the diagnostics (makes output non-reproducible).
    #[arg(long, global = true)]
    timing: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug, Clone)]
struct SearchArgs {
    /// Seed for the random restarts.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Random starts per auxiliary alphabet size.
    #[arg(long, default_value_t = OptimizerConfig::default().restarts)]
    restarts: usize,
    /// Iteration cap of each local search.
    #[arg(long, default_value_t = OptimizerConfig::default().local_iters)]
    local_iters: usize,
}

impl SearchArgs {
    fn config(&self) -> OptimizerConfig {
        OptimizerConfig {
            seed: self.seed,
            restarts: self.restarts,
            local_iters: self.local_iters,
            ..OptimizerConfig::default()
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum OutFormat {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the standing assumptions and certify degradedness.
    Validate { model: PathBuf },
    /// Single-user covert capacity and its optimal input pmf.
    Capacity {
        model: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        user: u8,
    },
    /// Sample the boundary of the covert capacity region.
    Boundary {
        model: PathBuf,
        #[arg(long, default_value_t = 60)]
        points: usize,
        #[arg(long, value_enum, default_value_t = OutFormat::Json)]
        out: OutFormat,
        /// Write to this file instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, default_value_t = OptimizerConfig::default().weight_grid)]
        weight_grid: usize,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Improvement γ* of the region over time-sharing.
    Gamma {
        model: PathBuf,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Time-sharing condition and γ* across a parametric family.
    Sweep {
        family: PathBuf,
        #[arg(long, value_enum, default_value_t = OutFormat::Json)]
        out: OutFormat,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Finite-difference checks of the small-μ expansions on random joints.
    VerifyTaylor {
        /// Model file; the bundled ternary example is used when omitted.
        model: Option<PathBuf>,
        #[arg(long, default_value_t = 20)]
        joints: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// How a command ended, mapped onto the exit-code contract.
enum Failure {
    /// Bad or unreadable input.
    Input(anyhow::Error),
    /// A condition failed or the computation could not be completed.
    Check(anyhow::Error),
}

impl From<CovertError> for Failure {
    fn from(e: CovertError) -> Self {
        Failure::Check(e.into())
    }
}

#[derive(Serialize)]
struct RunResult {
    command: &'static str,
    inputs: Value,
    outputs: Value,
    diagnostics: Diagnostics,
}

#[derive(Serialize, Default)]
struct Diagnostics {
    warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_time_s: Option<f64>,
}

struct Run {
    timing: bool,
    started: Instant,
    warnings: Vec<String>,
}

impl Run {
    fn finish(self, command: &'static str, inputs: Value, outputs: Value) -> RunResult {
        RunResult {
            command,
            inputs,
            outputs,
            diagnostics: Diagnostics {
                warnings: self.warnings,
                wall_time_s: self.timing.then(|| self.started.elapsed().as_secs_f64()),
            },
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    let run = Run {
        timing: cli.timing,
        started: Instant::now(),
        warnings: Vec::new(),
    };
    match dispatch(cli.command, run) {
        Ok(code) => code,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Check(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn configure_threads() -> anyhow::Result<()> {
    let Ok(raw) = std::env::var("COVERT_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .with_context(|| format!("COVERT_THREADS={raw:?} is not a thread count"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .context("configuring the worker pool")?;
    Ok(())
}

fn read_model(path: &Path) -> Result<BcWardenModel, Failure> {
    load_model(path)
        .with_context(|| format!("loading model {}", path.display()))
        .map_err(Failure::Input)
}

fn emit(result: &RunResult) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(result).map_err(|e| Failure::Check(e.into()))?;
    println!("{text}");
    Ok(())
}

fn warn_on_conditions(model: &BcWardenModel, run: &mut Run) {
    let report = check_conditions(model);
    if !report.all_hold() {
        run.warnings.push(format!(
            "model violates the standing assumptions: {}",
            serde_json::to_string(&report.violations).unwrap_or_default()
        ));
    }
}

fn dispatch(command: Command, mut run: Run) -> Result<ExitCode, Failure> {
    match command {
        Command::Validate { model } => {
            let m = read_model(&model)?;
            let report = check_conditions(&m);
            let cert = find_degrading_channel(m.p1(), m.p2())?;
            let ok = report.all_hold() && cert.feasible;
            eprintln!(
                "conditions: {}",
                if report.all_hold() { "ok" } else { "violated" }
            );
            eprintln!(
                "degradation: {}",
                if cert.feasible {
                    "feasible"
                } else {
                    "infeasible"
                }
            );
            let out = json!({ "conditions": report, "degradation": cert, "valid": ok });
            emit(&run.finish("validate", json!({ "model": model }), out))?;
            Ok(if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Capacity { model, user } => {
            let m = read_model(&model)?;
            warn_on_conditions(&m, &mut run);
            let cap = covert_core::covert_rates::user_capacity(&m, user)?;
            if cap.is_zero() {
                run.warnings.push(format!(
                    "user {user} sees no difference between inputs: zero capacity"
                ));
            }
            let out = json!({ "user": user, "capacity": cap.value, "argmax": cap.argmax });
            emit(&run.finish("capacity", json!({ "model": model, "user": user }), out))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Boundary {
            model,
            points,
            out,
            output,
            weight_grid,
            search,
        } => {
            let m = read_model(&model)?;
            warn_on_conditions(&m, &mut run);
            let config = OptimizerConfig {
                weight_grid,
                ..search.config()
            };
            let front = pareto_boundary(&m, points, &config)?;
            let text = match out {
                OutFormat::Csv => front_csv(&front.points).map_err(Failure::Check)?,
                OutFormat::Json => {
                    let inputs = json!({ "model": model, "points": points, "config": config });
                    let result = run.finish(
                        "boundary",
                        inputs,
                        serde_json::to_value(&front).map_err(|e| Failure::Check(e.into()))?,
                    );
                    serde_json::to_string_pretty(&result).map_err(|e| Failure::Check(e.into()))?
                        + "\n"
                }
            };
            write_output(output.as_deref(), &text)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Gamma { model, search } => {
            let m = read_model(&model)?;
            warn_on_conditions(&m, &mut run);
            let config = search.config();
            let g = gamma_star(&m, &config)?;
            let out = serde_json::to_value(&g).map_err(|e| Failure::Check(e.into()))?;
            emit(&run.finish("gamma", json!({ "model": model, "config": config }), out))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep {
            family,
            out,
            search,
        } => {
            let text = std::fs::read_to_string(&family)
                .with_context(|| format!("reading family {}", family.display()))
                .map_err(Failure::Input)?;
            let fam: FamilyFile = serde_json::from_str(&text)
                .with_context(|| format!("parsing family {}", family.display()))
                .map_err(Failure::Input)?;
            let config = search.config();
            let rows = sweep(&fam, &fam.values, &config);
            for row in rows
                .iter()
                .filter_map(|r| r.note.as_ref().map(|n| (r.param, n)))
            {
                run.warnings
                    .push(format!("{} = {}: {}", fam.param, row.0, row.1));
            }
            match out {
                OutFormat::Json => {
                    let inputs = json!({ "family": family, "param": fam.param, "config": config });
                    let out = json!({ "rows": rows });
                    emit(&run.finish("sweep", inputs, out))?;
                }
                OutFormat::Csv => {
                    let mut w = csv::Writer::from_writer(Vec::new());
                    w.write_record([fam.param.as_str(), "condition", "gamma_star"])
                        .map_err(|e| Failure::Check(e.into()))?;
                    for r in &rows {
                        w.write_record([
                            r.param.to_string(),
                            r.condition_bit
                                .map_or(String::new(), |b| u8::from(b).to_string()),
                            r.gamma_star.map_or(String::new(), |g| format!("{g:.5}")),
                        ])
                        .map_err(|e| Failure::Check(e.into()))?;
                    }
                    let bytes = w
                        .into_inner()
                        .map_err(|e| Failure::Check(anyhow::anyhow!("{e}")))?;
                    write_output(None, &String::from_utf8_lossy(&bytes))?;
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::VerifyTaylor {
            model,
            joints,
            seed,
        } => {
            let m = match &model {
                Some(path) => read_model(path)?,
                None => covert_core::presets::example1_model(),
            };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let report: TaylorSuiteReport = verify_suite(&m, joints, &mut rng)?;
            eprintln!("taylor: {}", if report.pass { "pass" } else { "fail" });
            let inputs = json!({ "model": model, "joints": joints, "seed": seed });
            let pass = report.pass;
            let out = serde_json::to_value(&report).map_err(|e| Failure::Check(e.into()))?;
            emit(&run.finish("verify-taylor", inputs, out))?;
            Ok(if pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
    }
}

fn front_csv(points: &[covert_core::RatePair]) -> anyhow::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["L1", "L2"])?;
    for p in points {
        w.serialize((p.l1, p.l2))?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn write_output(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text)
            .with_context(|| format!("writing {}", p.display()))
            .map_err(Failure::Check),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Failure::Check(e.into()))
        }
    }
}
