//! Command-line surface: argument parsing, dispatch, JSON reports, exit
//! codes.
//!
//! [`run_command`] is the in-process entry point shared by the `rqcp` binary
//! and the integration tests. Every subcommand writes a JSON report to
//! stdout and a one-line human summary to stderr; the exit code encodes the
//! verdict. Reports are deterministic for identical inputs and flags, with
//! the sole exception of the `time_ms` statistic.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::bounded::{bounded_state_reach, BoundedVerdict};
use crate::bruteforce::{eager_reach_bruteforce, explore_bounded, kphase_reach_bruteforce, Bounds};
use crate::eager::build_product;
use crate::format::parse_system_path;
use crate::model::{validate_system, Rqcp, StateId};
use crate::mutex::{check_mutex, MutexVerdict};
use crate::pushdown::control_reachable;
use crate::topology::{co_cycle_relation, is_converging, is_polyforest, to_dot};

/// The property holds / the target is reachable.
pub const EXIT_YES: i32 = 0;
/// The property does not hold / the target is unreachable.
pub const EXIT_NO: i32 = 1;
/// Input or validation error.
pub const EXIT_INPUT: i32 = 2;
/// A work budget or exploration bound ran out before a conclusive answer.
pub const EXIT_BUDGET: i32 = 3;

#[derive(Parser)]
#[command(
    name = "rqcp",
    about = "Reachability analyses for recursive processes communicating over FIFO channels"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Structural analysis of the typed topology: convergence, polyforest,
    /// co-cycle channel pairs.
    Topology {
        file: PathBuf,
        /// Print a DOT rendition of the topology instead of the JSON report.
        #[arg(long)]
        dot: bool,
    },
    /// Exact control-state reachability along eager runs. Refuses
    /// converging topologies, reporting a witness path.
    EagerReach {
        file: PathBuf,
        /// Target control vector: comma-separated state names in process
        /// declaration order. Defaults to the file's `target` entry.
        #[arg(long)]
        target: Option<String>,
    },
    /// The mutex property: at most one nonempty channel per simple cycle,
    /// in every reachable configuration. Finite systems only.
    Mutex {
        file: PathBuf,
        /// Check the weaker variant that only relates cycle-sharing
        /// neighbouring channel pairs.
        #[arg(long)]
        weak: bool,
    },
    /// Under-approximate reachability through runs of at most k phases.
    BoundedReach {
        file: PathBuf,
        /// Target control vector: comma-separated state names in process
        /// declaration order. Defaults to the file's `target` entry.
        #[arg(long)]
        target: Option<String>,
        /// Maximum number of phases.
        #[arg(short)]
        k: usize,
        /// Cap on satisfiability-solver work (leaf checks plus reductions).
        #[arg(long, default_value_t = 1_000_000)]
        budget: usize,
    },
    /// Bounded brute-force exploration, used to cross-check the analyses.
    Oracle {
        file: PathBuf,
        #[arg(long, value_enum)]
        mode: OracleMode,
        /// Target control vector; required for kphase, optional otherwise.
        #[arg(long)]
        target: Option<String>,
        /// Phase bound for kphase mode.
        #[arg(short, default_value_t = 1)]
        k: usize,
        /// Maximum messages per channel.
        #[arg(long, default_value_t = 4)]
        max_channel: usize,
        /// Maximum stack height per process.
        #[arg(long, default_value_t = 4)]
        max_stack: usize,
        /// Maximum run length.
        #[arg(long, default_value_t = 12)]
        max_steps: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OracleMode {
    /// All runs within the bounds.
    Explore,
    /// Eager runs within the bounds.
    Eager,
    /// Runs of at most k mux/demux/local phases within the bounds.
    Kphase,
}

/// Parses `argv` (including the program name), runs the subcommand, writes
/// the JSON report to `out` and a human summary to `err`, and returns the
/// exit code.
pub fn run_command(argv: &[String], out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{rendered}");
                return EXIT_INPUT;
            }
            let _ = write!(out, "{rendered}");
            return EXIT_YES;
        }
    };
    let started = Instant::now();
    match dispatch(&cli.command, started, out, err) {
        Ok(code) => code,
        Err(Failure(message)) => {
            let report = json!({ "verdict": "error", "error": message });
            let _ = writeln!(out, "{:#}", report);
            let _ = writeln!(err, "error: {message}");
            EXIT_INPUT
        }
    }
}

/// An input problem: bad file, bad names, invalid system, unusable flags.
struct Failure(String);

impl<E: std::error::Error> From<E> for Failure {
    fn from(e: E) -> Failure {
        Failure(e.to_string())
    }
}

fn load(file: &PathBuf) -> Result<(Rqcp, Option<Vec<StateId>>), Failure> {
    let (sys, target) = parse_system_path(file)?;
    let violations = validate_system(&sys);
    if !violations.is_empty() {
        let lines: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        return Err(Failure(format!("system does not validate: {}", lines.join("; "))));
    }
    Ok((sys, target))
}

/// Resolves the target control vector: the `--target` comma list takes
/// precedence over the file's `target` entry.
fn resolve_target(
    sys: &Rqcp,
    flag: Option<&str>,
    from_file: Option<Vec<StateId>>,
) -> Result<Vec<StateId>, Failure> {
    let Some(text) = flag else {
        return from_file.ok_or_else(|| {
            Failure("no target given: pass --target or add a \"target\" map to the file".into())
        });
    };
    let names: Vec<&str> = text.split(',').map(str::trim).collect();
    if names.len() != sys.process_count() {
        return Err(Failure(format!(
            "--target has {} entries for {} processes (expected the declaration order {})",
            names.len(),
            sys.process_count(),
            sys.topology.processes.join(",")
        )));
    }
    names
        .iter()
        .enumerate()
        .map(|(p, name)| {
            sys.pushdowns[p]
                .states
                .iter()
                .position(|s| s == name)
                .map(StateId)
                .ok_or_else(|| {
                    Failure(format!(
                        "process `{}` has no state `{name}`",
                        sys.topology.processes[p]
                    ))
                })
        })
        .collect()
}

fn target_names(sys: &Rqcp, target: &[StateId]) -> String {
    target
        .iter()
        .enumerate()
        .map(|(p, z)| sys.pushdowns[p].states[z.0].clone())
        .collect::<Vec<_>>()
        .join(",")
}

fn stats(states_explored: usize, truncated: bool, started: Instant) -> Value {
    json!({
        "states_explored": states_explored,
        "time_ms": started.elapsed().as_millis() as u64,
        "truncated": truncated,
    })
}

fn emit(out: &mut dyn Write, err: &mut dyn Write, report: &Value, human: &str) {
    let _ = writeln!(out, "{:#}", report);
    let _ = writeln!(err, "{human}");
}

fn dispatch(
    command: &Command,
    started: Instant,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, Failure> {
    match command {
        Command::Topology { file, dot } => {
            let (sys, _) = load(file)?;
            let witness = is_converging(&sys.topology);
            let polyforest = is_polyforest(&sys.topology);
            let co_cycle: Vec<Value> = co_cycle_relation(&sys.topology)
                .unordered_pairs()
                .into_iter()
                .map(|(c, d)| {
                    json!([sys.topology.channels[c.0].name, sys.topology.channels[d.0].name])
                })
                .collect();
            let converging = witness.is_some();
            let human = format!(
                "non-converging: {}, polyforest: {}, co-cycle pairs: {}",
                !converging,
                polyforest,
                co_cycle.len()
            );
            if *dot {
                let _ = write!(out, "{}", to_dot(&sys.topology));
                let _ = writeln!(err, "{human}");
            } else {
                let mut report = json!({
                    "verdict": if converging { "converging" } else { "non-converging" },
                    "polyforest": polyforest,
                    "co_cycle_pairs": co_cycle,
                    "stats": stats(0, false, started),
                });
                if let Some(path) = &witness {
                    report["witness"] =
                        Value::String(path.display(&sys.topology).to_string());
                }
                emit(out, err, &report, &human);
            }
            Ok(if converging { EXIT_NO } else { EXIT_YES })
        }

        Command::EagerReach { file, target } => {
            let (sys, file_target) = load(file)?;
            if let Some(path) = is_converging(&sys.topology) {
                return Err(Failure(format!(
                    "typed topology is converging (reachability is undecidable there): {}",
                    path.display(&sys.topology)
                )));
            }
            let target = resolve_target(&sys, target.as_deref(), file_target)?;
            let (reachable, engine, explored) = if sys.is_finite() {
                let vectors = crate::eager::finite_eager_vectors(&sys)
                    .map_err(|e| Failure(e.to_string()))?;
                (vectors.contains(&target), "finite-explorer", vectors.len())
            } else {
                let product = build_product(&sys, &target).map_err(|e| Failure(e.to_string()))?;
                let reached = control_reachable(&product.pushdown, product.start)
                    .expect("product has no communication actions");
                (reached.contains(&product.accept), "product-pushdown", product.controls.len())
            };
            let verdict = if reachable { "reachable" } else { "unreachable" };
            let report = json!({
                "verdict": verdict,
                "engine": engine,
                "stats": stats(explored, false, started),
            });
            let human =
                format!("eager-reach: target {} {verdict} ({engine})", target_names(&sys, &target));
            emit(out, err, &report, &human);
            Ok(if reachable { EXIT_YES } else { EXIT_NO })
        }

        Command::Mutex { file, weak } => {
            let (sys, _) = load(file)?;
            let result = check_mutex(&sys, *weak).map_err(|e| Failure(e.to_string()))?;
            let (verdict, witness) = match &result.verdict {
                MutexVerdict::Mutex => ("mutex", None),
                MutexVerdict::NotMutex(w) => {
                    let mut value = json!({
                        "control": w.control.iter().enumerate()
                            .map(|(p, z)| sys.pushdowns[p].states[z.0].clone())
                            .collect::<Vec<_>>(),
                        "nonempty": w.nonempty.iter()
                            .map(|c| sys.topology.channels[c.0].name.clone())
                            .collect::<Vec<_>>(),
                    });
                    if let Some(send) = &w.send {
                        value["send"] = json!({
                            "process": sys.topology.processes[send.process.0],
                            "channel": sys.topology.channels[send.channel.0].name,
                            "msg": sys.messages[send.message.0],
                            "clashes_with": sys.topology.channels[send.clashes_with.0].name,
                        });
                    }
                    ("not-mutex", Some(value))
                }
            };
            let mut report = json!({
                "verdict": verdict,
                "stats": stats(result.states_explored, false, started),
            });
            if let Some(w) = witness {
                report["witness"] = w;
            }
            let human = format!(
                "mutex{}: {verdict} ({} abstract states explored)",
                if *weak { " (weak)" } else { "" },
                result.states_explored
            );
            emit(out, err, &report, &human);
            Ok(match result.verdict {
                MutexVerdict::Mutex => EXIT_YES,
                MutexVerdict::NotMutex(_) => EXIT_NO,
            })
        }

        Command::BoundedReach { file, target, k, budget } => {
            let (sys, file_target) = load(file)?;
            let target = resolve_target(&sys, target.as_deref(), file_target)?;
            let result = bounded_state_reach(&sys, &target, *k, *budget)
                .map_err(|e| Failure(e.to_string()))?;
            let (verdict, code) = match result.verdict {
                BoundedVerdict::Reachable => ("reachable", EXIT_YES),
                BoundedVerdict::Unreachable => ("unreachable", EXIT_NO),
                BoundedVerdict::BudgetExhausted => ("budget-exhausted", EXIT_BUDGET),
            };
            let report = json!({
                "verdict": verdict,
                "sequences_checked": result.sequences_checked,
                "stats": stats(result.leaf_checks, code == EXIT_BUDGET, started),
            });
            let human = format!(
                "bounded-reach: target {} {verdict} within {k} phases ({} sequences, {} leaf checks)",
                target_names(&sys, &target),
                result.sequences_checked,
                result.leaf_checks
            );
            emit(out, err, &report, &human);
            Ok(code)
        }

        Command::Oracle { file, mode, target, k, max_channel, max_stack, max_steps } => {
            let (sys, file_target) = load(file)?;
            let bounds = Bounds::new(*max_channel, *max_stack, *max_steps);
            if *mode == OracleMode::Kphase {
                let target = resolve_target(&sys, target.as_deref(), file_target)?;
                let outcome = kphase_reach_bruteforce(&sys, &target, *k, &bounds);
                let (verdict, code) = match (outcome.reachable, outcome.truncated) {
                    (true, _) => ("reachable", EXIT_YES),
                    (false, true) => ("inconclusive", EXIT_BUDGET),
                    (false, false) => ("unreachable", EXIT_NO),
                };
                let report = json!({
                    "verdict": verdict,
                    "stats": stats(0, outcome.truncated, started),
                });
                let human = format!(
                    "oracle kphase: target {} {verdict} within {k} phases",
                    target_names(&sys, &target)
                );
                emit(out, err, &report, &human);
                return Ok(code);
            }
            let exploration = match mode {
                OracleMode::Explore => explore_bounded(&sys, &bounds),
                OracleMode::Eager => eager_reach_bruteforce(&sys, &bounds),
                OracleMode::Kphase => unreachable!("handled above"),
            };
            let vectors = exploration.control_vectors();
            let tag = match mode {
                OracleMode::Explore => "explore",
                _ => "eager",
            };
            let target = match (target.as_deref(), file_target) {
                (None, None) => None,
                (flag, from_file) => Some(resolve_target(&sys, flag, from_file)?),
            };
            let (verdict, code) = match &target {
                None => ("explored", EXIT_YES),
                Some(t) if vectors.contains(t) => ("reachable", EXIT_YES),
                Some(_) if exploration.truncated => ("inconclusive", EXIT_BUDGET),
                Some(_) => ("unreachable", EXIT_NO),
            };
            let report = json!({
                "verdict": verdict,
                "control_vectors": vectors.len(),
                "stats": stats(exploration.configs.len(), exploration.truncated, started),
            });
            let human = match &target {
                None => format!(
                    "oracle {tag}: {} configurations, {} control vectors{}",
                    exploration.configs.len(),
                    vectors.len(),
                    if exploration.truncated { " (truncated)" } else { "" }
                ),
                Some(t) => {
                    format!("oracle {tag}: target {} {verdict}", target_names(&sys, t))
                }
            };
            emit(out, err, &report, &human);
            Ok(code)
        }
    }
}
