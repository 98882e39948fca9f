//! `agg`: validate, analyze, and solve action-graph games.
//!
//! Exit codes: 0 success, 1 validation/verification failure, 2 usage error,
//! 3 computation failure. Each invocation writes exactly one JSON document
//! to stdout; progress and timing diagnostics go to stderr as JSON lines.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use agg_core::continuation::{BonusSpec, SolveOptions};
use agg_core::encode::{
    generate_ice_cream, generate_random, random_mixed_profile, IceCreamParams, RandomGameParams,
};
use agg_core::game::ActionGraphGame;
use agg_core::io;
use agg_core::oracle::{verify_nash, DEFAULT_EXPANSION_CAP};
use agg_core::payoff::{
    jacobian_naive, jacobian_partitioned, jacobian_projected, JacobianMethod, JacobianOptions,
};
use agg_core::symmetric::jacobian_symmetric;
use agg_core::{AggError, GraphicalGame, NormalFormGame};

const EXIT_OK: i32 = 0;
const EXIT_FAILED_CHECK: i32 = 1;
const EXIT_USAGE: i32 = 2;
const EXIT_COMPUTE: i32 = 3;

#[derive(Parser)]
#[command(name = "agg", version, about = "Action-graph game toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a game file's structural invariants and utility coverage.
    Validate { game: PathBuf },
    /// Compute the payoff Jacobian at a strategy profile.
    Jacobian {
        game: PathBuf,
        /// Strategy file aligned with the game's action sets.
        #[arg(short = 's', long)]
        strategies: PathBuf,
        /// naive | projected | partitioned | symmetric
        #[arg(short = 'm', long, default_value = "partitioned")]
        method: String,
        /// Also write the Jacobian document to this path.
        #[arg(short = 'o', long)]
        out: Option<PathBuf>,
        /// Per-entry enumeration cap.
        #[arg(long, default_value_t = 10_000_000)]
        cap: u64,
        /// Worker threads for row blocks (default 1; env AGG_THREADS).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Find a Nash equilibrium by continuation.
    Solve {
        game: PathBuf,
        /// Trace the reduced symmetric system (requires identical action sets).
        #[arg(long)]
        symmetric: bool,
        /// Jacobian method used inside the solver.
        #[arg(long, default_value = "partitioned")]
        method: String,
        /// Maximum acceptable regret of the returned profile.
        #[arg(long, default_value_t = 1e-6)]
        eps: f64,
        #[arg(long, default_value_t = 20_000)]
        max_steps: usize,
        /// "auto" or comma-separated designated action indices, one per agent.
        #[arg(long, default_value = "auto")]
        bonus: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-10)]
        corrector_tol: f64,
        #[arg(long, default_value_t = 0.05)]
        initial_step: f64,
        /// Write the equilibrium as a strategy file.
        #[arg(short = 'o', long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Check a strategy profile's regret against a tolerance.
    Verify {
        game: PathBuf,
        #[arg(short = 's', long)]
        strategies: PathBuf,
        #[arg(long, default_value_t = 1e-6)]
        eps: f64,
    },
    /// Compare Jacobian methods: evaluation counters on random profiles.
    Bench {
        game: PathBuf,
        /// Comma-separated methods to run.
        #[arg(long, default_value = "naive,projected,partitioned")]
        methods: String,
        /// Number of random strategy profiles.
        #[arg(long, default_value_t = 3)]
        strategies: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10_000_000)]
        cap: u64,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Write a game file from one of the built-in families.
    Generate {
        #[command(subcommand)]
        family: Family,
    },
}

#[derive(Subcommand)]
enum Family {
    /// Ice cream vendors: two product kinds over beach locations.
    IceCream(IceCreamArgs),
    /// Seeded random game.
    Random(RandomArgs),
    /// Encode a normal-form game given as payoff tensors.
    EncodeNormalForm {
        /// JSON file: {"version":1,"action_counts":[...],"payoffs":[[...],...]}
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Encode a graphical game given as local payoff tables.
    EncodeGraphical {
        /// JSON file: {"version":1,"action_counts":[...],"edges":[[i,j],...],"tables":[[...],...]}
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct IceCreamArgs {
    #[arg(long = "n")]
    n: usize,
    #[arg(long)]
    locations: usize,
    #[arg(long, default_value_t = 0)]
    chocolate: usize,
    /// Give every agent all actions (fully symmetric game).
    #[arg(long)]
    shared: bool,
    #[arg(long, default_value_t = 1.0)]
    wc: f64,
    #[arg(long, default_value_t = 1.0)]
    wv: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RandomArgs {
    #[arg(long)]
    agents: usize,
    #[arg(long)]
    actions: usize,
    #[arg(long)]
    degree: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    shared: bool,
    #[arg(long)]
    linear: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn compute(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_COMPUTE,
            message: message.into(),
        }
    }
}

impl From<AggError> for Failure {
    fn from(err: AggError) -> Self {
        let code = match &err {
            AggError::Io(_)
            | AggError::Json(_)
            | AggError::UnsupportedVersion(_)
            | AggError::DimensionMismatch { .. }
            | AggError::NotSymmetric
            | AggError::ChoiceOutsideActionSet { .. } => EXIT_USAGE,
            _ => EXIT_COMPUTE,
        };
        Failure {
            code,
            message: err.to_string(),
        }
    }
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            failure.code
        }
    };
    std::process::exit(code);
}

fn emit(doc: &Value) {
    println!("{}", serde_json::to_string_pretty(doc).expect("serializable"));
}

fn diag(doc: Value) {
    eprintln!("{doc}");
}

fn load_game(path: &Path) -> Result<ActionGraphGame, Failure> {
    io::load_game(path).map_err(Failure::from)
}

fn threads_or_env(threads: Option<usize>) -> usize {
    threads
        .or_else(|| {
            std::env::var("AGG_THREADS")
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .unwrap_or(1)
        .max(1)
}

fn parse_method(name: &str) -> Result<JacobianMethod, Failure> {
    JacobianMethod::parse(name)
        .filter(|m| !matches!(m, JacobianMethod::Brute))
        .ok_or_else(|| Failure::usage(format!("unknown method {name:?}")))
}

fn parse_bonus(spec: &str, game: &ActionGraphGame) -> Result<BonusSpec, Failure> {
    if spec == "auto" {
        return Ok(BonusSpec::Auto);
    }
    let actions: Vec<usize> = spec
        .split(',')
        .map(|part| {
            part.trim()
                .parse::<usize>()
                .map_err(|_| Failure::usage(format!("bad bonus action {part:?}")))
        })
        .collect::<Result<_, _>>()?;
    if actions.len() != game.num_agents() {
        return Err(Failure::usage(format!(
            "{} bonus actions for {} agents",
            actions.len(),
            game.num_agents()
        )));
    }
    Ok(BonusSpec::Actions(actions))
}

fn run(cli: Cli) -> Result<i32, Failure> {
    match cli.command {
        Command::Validate { game } => {
            let game = load_game(&game)?;
            let report = game.validate();
            if report.is_ok() {
                emit(&json!({"ok": true}));
                Ok(EXIT_OK)
            } else {
                let violations: Vec<String> =
                    report.violations.iter().map(|v| v.to_string()).collect();
                emit(&json!({"ok": false, "violations": violations}));
                Ok(EXIT_FAILED_CHECK)
            }
        }

        Command::Jacobian {
            game,
            strategies,
            method,
            out,
            cap,
            threads,
        } => {
            let game = load_game(&game)?;
            let method = parse_method(&method)?;
            let profile = io::load_strategies(&strategies, &game)?;
            let opts = JacobianOptions {
                cap: cap as u128,
                threads: threads_or_env(threads),
            };
            let file = match method {
                JacobianMethod::Symmetric => {
                    if !game.is_symmetric() {
                        return Err(Failure::usage(
                            "symmetric method requires identical action sets for all agents",
                        ));
                    }
                    let first = profile.agent(0).to_vec();
                    if !profile.strategies().iter().all(|s| *s == first) {
                        return Err(Failure::usage(
                            "symmetric method requires identical per-agent strategies",
                        ));
                    }
                    let jac = jacobian_symmetric(&game, &first)?;
                    io::JacobianFile {
                        m: jac.actions.len(),
                        order: jac.actions.iter().map(|&a| (0, a)).collect(),
                        rows: (0..jac.actions.len())
                            .map(|r| {
                                (0..jac.actions.len()).map(|c| jac.matrix[(r, c)]).collect()
                            })
                            .collect(),
                        method: "symmetric".into(),
                        utility_evals: jac.counters.utility_evals,
                        note: Some(
                            "rows/columns are actions, not (agent, action) pairs".into(),
                        ),
                    }
                }
                JacobianMethod::Naive => io::jacobian_to_file(&jacobian_naive(
                    &game, &profile, &opts,
                )?),
                JacobianMethod::Projected => io::jacobian_to_file(&jacobian_projected(
                    &game, &profile, &opts,
                )?),
                _ => io::jacobian_to_file(&jacobian_partitioned(&game, &profile, &opts)?),
            };
            let doc = serde_json::to_value(&file).expect("serializable");
            if let Some(path) = out {
                std::fs::write(&path, serde_json::to_string_pretty(&doc).unwrap() + "\n")
                    .map_err(|e| Failure::compute(e.to_string()))?;
            }
            emit(&doc);
            Ok(EXIT_OK)
        }

        Command::Solve {
            game,
            symmetric,
            method,
            eps,
            max_steps,
            bonus,
            seed,
            corrector_tol,
            initial_step,
            out,
            threads,
        } => {
            let game = load_game(&game)?;
            let method = parse_method(&method)?;
            if (symmetric || method == JacobianMethod::Symmetric) && !game.is_symmetric() {
                return Err(Failure::usage(
                    "symmetric mode requires identical action sets for all agents",
                ));
            }
            let opts = SolveOptions {
                eps,
                corrector_tol,
                initial_step,
                max_steps,
                method,
                bonus: parse_bonus(&bonus, &game)?,
                seed,
                symmetric: symmetric || method == JacobianMethod::Symmetric,
                jacobian: JacobianOptions {
                    cap: DEFAULT_EXPANSION_CAP * 10,
                    threads: threads_or_env(threads),
                },
                verify_cap: DEFAULT_EXPANSION_CAP,
            };
            let result = match agg_core::solve(&game, &opts) {
                Ok(result) => result,
                Err(AggError::PathStall {
                    lambda,
                    residual,
                    point,
                }) => {
                    diag(json!({"path_stall": {"lambda": lambda, "residual": residual, "w": point}}));
                    return Err(Failure::compute(format!(
                        "path stall at lambda={lambda} (residual {residual})"
                    )));
                }
                Err(e) => return Err(e.into()),
            };
            for (step, (lambda, residual)) in result
                .diagnostics
                .lambda_trace
                .iter()
                .zip(&result.diagnostics.residual_trace)
                .enumerate()
            {
                diag(json!({"step": step, "lambda": lambda, "residual": residual}));
            }
            let doc = json!({
                "version": 1,
                "strategies": result.profile.strategies(),
                "steps": result.diagnostics.steps,
                "final_lambda": result.diagnostics.lambda_trace.last().copied().unwrap_or(1.0),
                "residual": result.diagnostics.final_residual,
                "regret": result.regret_report.max_regret,
                "support_changes": result.diagnostics.support_changes,
            });
            if let Some(path) = out {
                io::save_strategies(&result.profile, &path)?;
            }
            emit(&doc);
            if result.regret_report.passes(eps) {
                Ok(EXIT_OK)
            } else {
                Ok(EXIT_FAILED_CHECK)
            }
        }

        Command::Verify {
            game,
            strategies,
            eps,
        } => {
            let game = load_game(&game)?;
            let profile = io::load_strategies(&strategies, &game)?;
            let report = verify_nash(&game, &profile, DEFAULT_EXPANSION_CAP)?;
            let mut doc = serde_json::to_value(&report).expect("serializable");
            doc["eps"] = json!(eps);
            doc["pass"] = json!(report.passes(eps));
            emit(&doc);
            Ok(if report.passes(eps) {
                EXIT_OK
            } else {
                EXIT_FAILED_CHECK
            })
        }

        Command::Bench {
            game: game_path,
            methods,
            strategies,
            seed,
            cap,
            threads,
        } => {
            let game = load_game(&game_path)?;
            let opts = JacobianOptions {
                cap: cap as u128,
                threads: threads_or_env(threads),
            };
            let n_bar = game.num_agents().saturating_sub(2) as i32;
            let naive_bound_per_entry = ((game.max_in_degree() + 1) as f64).powi(n_bar);
            let mut method_docs = serde_json::Map::new();
            for name in methods.split(',').map(str::trim) {
                let method = parse_method(name)?;
                let mut totals = agg_core::JacobianCounters::default();
                let mut skipped = None;
                let started = Instant::now();
                for k in 0..strategies {
                    let profile = random_mixed_profile(&game, seed + k as u64);
                    let outcome = match method {
                        JacobianMethod::Naive => jacobian_naive(&game, &profile, &opts)
                            .map(|j| j.counters),
                        JacobianMethod::Projected => jacobian_projected(&game, &profile, &opts)
                            .map(|j| j.counters),
                        JacobianMethod::Partitioned => {
                            jacobian_partitioned(&game, &profile, &opts).map(|j| j.counters)
                        }
                        JacobianMethod::Symmetric => {
                            if !game.is_symmetric() {
                                skipped = Some("game is not symmetric".to_string());
                                break;
                            }
                            jacobian_symmetric(&game, profile.agent(0)).map(|j| j.counters)
                        }
                        JacobianMethod::Brute => unreachable!("rejected by parse_method"),
                    };
                    match outcome {
                        Ok(counters) => {
                            totals.utility_evals += counters.utility_evals;
                            totals.prob_products += counters.prob_products;
                            totals.prob_swaps += counters.prob_swaps;
                        }
                        Err(AggError::EnumerationCapExceeded { size, cap }) => {
                            skipped = Some(format!("enumeration {size} exceeds cap {cap}"));
                            break;
                        }
                        Err(e) => return Err(e.into()),
                    }
                }
                let wall_ms = started.elapsed().as_secs_f64() * 1e3;
                diag(json!({"method": name, "wall_ms": wall_ms}));
                method_docs.insert(
                    name.to_string(),
                    match skipped {
                        Some(reason) => json!({"skipped": reason}),
                        None => json!({
                            "runs": strategies,
                            "utility_evals": totals.utility_evals,
                            "prob_products": totals.prob_products,
                            "prob_swaps": totals.prob_swaps,
                        }),
                    },
                );
            }
            emit(&json!({
                "game": game_path.display().to_string(),
                "num_agents": game.num_agents(),
                "num_actions": game.num_actions(),
                "max_in_degree": game.max_in_degree(),
                "naive_bound_per_entry": naive_bound_per_entry,
                "strategies": strategies,
                "seed": seed,
                "methods": Value::Object(method_docs),
            }));
            Ok(EXIT_OK)
        }

        Command::Generate { family } => {
            let (game, out) = match family {
                Family::IceCream(args) => {
                    let game = generate_ice_cream(&IceCreamParams {
                        num_agents: args.n,
                        locations: args.locations,
                        chocolate: args.chocolate,
                        shared: args.shared,
                        w_c: args.wc,
                        w_v: args.wv,
                    })
                    .map_err(|e| Failure::usage(e.to_string()))?;
                    (game, args.out)
                }
                Family::Random(args) => {
                    let game = generate_random(&RandomGameParams {
                        num_agents: args.agents,
                        num_actions: args.actions,
                        max_degree: args.degree,
                        shared: args.shared,
                        linear: args.linear,
                        seed: args.seed,
                    })
                    .map_err(|e| Failure::usage(e.to_string()))?;
                    (game, args.out)
                }
                Family::EncodeNormalForm { input, out } => {
                    let text = std::fs::read_to_string(&input)
                        .map_err(|e| Failure::usage(e.to_string()))?;
                    let parsed: NormalFormInput = serde_json::from_str(&text)
                        .map_err(|e| Failure::usage(e.to_string()))?;
                    if parsed.version != 1 {
                        return Err(Failure::usage(format!(
                            "unsupported input version {}",
                            parsed.version
                        )));
                    }
                    let game = agg_core::encode_normal_form(&NormalFormGame {
                        action_counts: parsed.action_counts,
                        payoffs: parsed.payoffs,
                    })
                    .map_err(|e| Failure::usage(e.to_string()))?;
                    (game, out)
                }
                Family::EncodeGraphical { input, out } => {
                    let text = std::fs::read_to_string(&input)
                        .map_err(|e| Failure::usage(e.to_string()))?;
                    let parsed: GraphicalInput = serde_json::from_str(&text)
                        .map_err(|e| Failure::usage(e.to_string()))?;
                    if parsed.version != 1 {
                        return Err(Failure::usage(format!(
                            "unsupported input version {}",
                            parsed.version
                        )));
                    }
                    let game = agg_core::encode_graphical_game(&GraphicalGame {
                        action_counts: parsed.action_counts,
                        edges: parsed.edges,
                        tables: parsed.tables,
                    })
                    .map_err(|e| Failure::usage(e.to_string()))?;
                    (game, out)
                }
            };
            let report = game.validate();
            if !report.is_ok() {
                return Err(Failure::compute(format!(
                    "generated game failed validation: {}",
                    report
                        .violations
                        .first()
                        .map(|v| v.to_string())
                        .unwrap_or_default()
                )));
            }
            let doc = io::game_to_json(&game);
            if let Some(path) = out {
                std::fs::write(&path, doc.clone() + "\n")
                    .map_err(|e| Failure::compute(e.to_string()))?;
            }
            println!("{doc}");
            Ok(EXIT_OK)
        }
    }
}

#[derive(serde::Deserialize)]
struct NormalFormInput {
    #[serde(default = "default_version")]
    version: u32,
    action_counts: Vec<usize>,
    payoffs: Vec<Vec<f64>>,
}

#[derive(serde::Deserialize)]
struct GraphicalInput {
    #[serde(default = "default_version")]
    version: u32,
    action_counts: Vec<usize>,
    edges: Vec<(usize, usize)>,
    tables: Vec<Vec<f64>>,
}

fn default_version() -> u32 {
    1
}
