//! Command-line front end for the `bilinear` library.
//!
//! Every command prints one JSON document. Exit codes: 0 on success, 1 on
//! usage errors (reported on stderr), 2 on domain errors, which are printed
//! as `{"error", "module", "message"}`.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bilinear::counterex::{self, SeedClass};
use bilinear::identify::{self, ExactOracle, IdentifyConfig};
use bilinear::{json, realization, reproduce, rng, simulate};
use bilinear::{FourTuple, PiecewiseConstantInput, SystemKind, Tolerances};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

#[derive(Parser)]
#[command(name = "bilinear", version, about = "Bilinear SISO systems: simulation, equivalence, counterexamples, identification")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Override a tolerance, e.g. `--tol residual_tol=1e-6` (repeatable).
    #[arg(long = "tol", value_name = "NAME=VALUE", global = true)]
    tol: Vec<String>,
    /// Write the JSON result to this file instead of stdout.
    #[arg(long, value_name = "FILE", global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a tuple under a piecewise-constant input.
    Simulate {
        tuple: PathBuf,
        /// Output grid `start:step:end`.
        #[arg(long, default_value = "0:0.01:10")]
        grid: String,
        /// Input document `{"breakpoints", "levels", "horizon"}`; overrides the pulse flags.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Pulse width (0 gives the constant `beta`).
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        tau: f64,
        /// Pulse level on `[0, tau)`.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        alpha: f64,
        /// Level after the pulse.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        beta: f64,
    },
    /// Decide i/o equivalence of two tuples.
    CheckEquiv { first: PathBuf, second: PathBuf },
    /// Decide whether a tuple is canonical.
    CheckCanonical { tuple: PathBuf },
    /// Report the genericity classes a tuple belongs to.
    Classify {
        tuple: PathBuf,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        alpha: f64,
    },
    /// Build a pair that agrees on a restricted input class.
    Counterexample(CounterexampleArgs),
    /// Identify a tuple from exact pulse responses of a reference tuple.
    Identify {
        /// Tuple standing in for the unknown system.
        #[arg(long)]
        oracle: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        alpha: f64,
        #[arg(long, value_parser = parse_kind)]
        kind: SystemKind,
        #[arg(long, default_value_t = 0)]
        rng_seed: u64,
        /// Largest order the realization step may return.
        #[arg(long, default_value_t = IdentifyConfig::default().n_max)]
        n_max: usize,
    },
    /// Run the acceptance suite and print one pass/fail line per criterion.
    Reproduce {
        #[arg(long, default_value_t = reproduce::DEFAULT_SEED)]
        rng_seed: u64,
        /// Emit the outcomes as JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum CounterexampleKind {
    SinglePulse,
    PulseFamily,
    Constants,
    Sampled,
}

#[derive(Args)]
struct CounterexampleArgs {
    #[arg(long, value_enum)]
    kind: CounterexampleKind,
    #[arg(long, default_value_t = 1.0)]
    tau: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    alpha: f64,
    /// Seed tuple; drawn at random when absent.
    #[arg(long)]
    seed_tuple: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    rng_seed: u64,
    /// Dimension of a randomly drawn seed.
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// Kind of the generated pair for `pulse-family` and `constants`.
    #[arg(long, value_parser = parse_kind, default_value = "II")]
    system_kind: SystemKind,
    /// Jordan shift for `sampled`; searched when absent.
    #[arg(long, allow_negative_numbers = true)]
    l: Option<i64>,
}

fn parse_kind(s: &str) -> Result<SystemKind, String> {
    s.parse().map_err(|e: bilinear::Error| e.to_string())
}

/// Failure of one invocation.
enum Failure {
    Usage(String),
    Domain(bilinear::Error),
}

impl From<bilinear::Error> for Failure {
    fn from(e: bilinear::Error) -> Self {
        Failure::Domain(e)
    }
}

type Outcome = Result<Output, Failure>;

enum Output {
    Json(serde_json::Value),
    Text(String),
    /// Printed like `Text`, but the invocation still exits with status 2.
    FailedText(String),
}

fn to_value<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("result documents always serialize")
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn read_tuple(path: &Path) -> Result<FourTuple, Failure> {
    Ok(json::from_json(&read_text(path)?)?)
}

fn tolerances(overrides: &[String]) -> Result<Tolerances, Failure> {
    let mut tol = Tolerances::default();
    for item in overrides {
        let (name, value) = item
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("--tol expects NAME=VALUE, got {item:?}")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| Failure::Usage(format!("--tol {name}: invalid number {value:?}")))?;
        tol.set(name.trim(), value).map_err(|e| Failure::Usage(e.to_string()))?;
    }
    Ok(tol)
}

fn run(cli: Cli) -> Outcome {
    let tol = tolerances(&cli.common.tol)?;
    match cli.command {
        Command::Simulate {
            tuple,
            grid,
            input,
            tau,
            alpha,
            beta,
        } => {
            let t = read_tuple(&tuple)?;
            let grid = simulate::parse_grid(&grid)?;
            let horizon = *grid.last().expect("parsed grids are nonempty");
            let u = match input {
                Some(path) => json::input_from_json(&read_text(&path)?)?,
                None => PiecewiseConstantInput::pulse(tau, alpha, beta, horizon)?,
            };
            Ok(Output::Json(to_value(&simulate::simulate(&t, &u, &grid)?)))
        }
        Command::CheckEquiv { first, second } => {
            let eq = realization::io_equivalent(&read_tuple(&first)?, &read_tuple(&second)?, &tol)?;
            Ok(Output::Json(to_value(&eq)))
        }
        Command::CheckCanonical { tuple } => {
            let c = realization::canonicality(&read_tuple(&tuple)?, &tol)?;
            let mut doc = json!({ "canonical": c.is_canonical() });
            if let Some(reason) = c.reason() {
                doc["reason"] = json!(reason);
            }
            doc["dim"] = json!(c.dim);
            doc["reach_rank"] = json!(c.reach_rank);
            doc["obs_rank"] = json!(c.obs_rank);
            Ok(Output::Json(doc))
        }
        Command::Classify { tuple, alpha } => {
            let m = counterex::classify(&read_tuple(&tuple)?, alpha, &tol)?;
            Ok(Output::Json(to_value(&m)))
        }
        Command::Counterexample(args) => counterexample(args, &tol),
        Command::Identify {
            oracle,
            alpha,
            kind,
            rng_seed,
            n_max,
        } => {
            let truth = read_tuple(&oracle)?.with_kind(kind);
            let oracle = ExactOracle::new(truth, alpha)?;
            let cfg = IdentifyConfig {
                n_max,
                ..IdentifyConfig::default()
            };
            let mut rng = rng::stream(rng_seed, "identify");
            let result = identify::identify(&oracle, &cfg, &tol, &mut rng)?;
            Ok(Output::Json(to_value(&result)))
        }
        Command::Reproduce { rng_seed, json } => {
            let outcomes = reproduce::run_all(rng_seed);
            let all_passed = outcomes.iter().all(|o| o.passed);
            if json {
                let doc = json!({ "passed": all_passed, "criteria": outcomes });
                return Ok(Output::Json(doc));
            }
            let mut table: String = outcomes.iter().map(|o| o.line() + "\n").collect();
            let passed = outcomes.iter().filter(|o| o.passed).count();
            table.push_str(&format!("{passed}/{} criteria passed\n", outcomes.len()));
            Ok(if all_passed {
                Output::Text(table)
            } else {
                Output::FailedText(table)
            })
        }
    }
}

fn counterexample(args: CounterexampleArgs, tol: &Tolerances) -> Outcome {
    use CounterexampleKind::*;
    let n = args.dim;
    if n == 0 {
        return Err(Failure::Usage("--dim must be positive".into()));
    }
    let (class, kind, std) = match args.kind {
        SinglePulse => (SeedClass::C, SystemKind::TypeI, reproduce::matrix_std(n)),
        PulseFamily | Constants => (SeedClass::G0, SystemKind::TypeII, reproduce::family_std(n)),
        Sampled => (
            SeedClass::BAlpha { alpha: args.alpha },
            SystemKind::TypeI,
            reproduce::matrix_std(n),
        ),
    };
    let seed = match &args.seed_tuple {
        Some(path) => read_tuple(path)?,
        None => {
            let mut rng = rng::stream(args.rng_seed, "counterexample");
            counterex::sample_seed(&mut rng, n, std, kind, class, 1000, tol)?.0
        }
    };
    let pair = match args.kind {
        SinglePulse => counterex::single_pulse_pair(&seed, args.tau, args.alpha, tol)?,
        PulseFamily => counterex::pulse_family_pair(&seed, args.tau, args.alpha, args.system_kind, tol)?,
        Constants => counterex::constants_pair(&seed, args.system_kind, tol)?,
        Sampled => counterex::sampled_pair(&seed, args.tau, args.alpha, args.l, tol)?,
    };
    Ok(Output::Json(to_value(&pair)))
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), String> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let out = cli.common.out.clone();
    let (text, code) = match run(cli) {
        Ok(Output::Json(v)) => (pretty(&v), 0),
        Ok(Output::Text(t)) => (t, 0),
        Ok(Output::FailedText(t)) => (t, 2),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(1);
        }
        Err(Failure::Domain(e)) => {
            let doc = json!({ "error": e.name(), "module": e.module(), "message": e.to_string() });
            // errors always go to stdout so scripts see them next to results
            print!("{}", pretty(&doc));
            return ExitCode::from(2);
        }
    };
    if let Err(msg) = emit(&text, out.as_deref()) {
        eprintln!("error: {msg}");
        return ExitCode::from(1);
    }
    ExitCode::from(code)
}

fn pretty(v: &serde_json::Value) -> String {
    serde_json::to_string_pretty(v).expect("JSON values always serialize") + "\n"
}
