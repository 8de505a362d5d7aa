use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use mnat_core::adversarial::{run_adversarial, LearnerKind};
use mnat_core::bandit::{estimate_regret, NoiseModel, RegretConfig, RegretMode};
use mnat_core::greedy::{audit_robustness, greedy_with_selector, SelectorKind};
use mnat_core::lattice::restrict;
use mnat_core::matroid::{Matroid, MatroidSpec};
use mnat_core::mchecker::{check_exchange, check_prop_ab};
use mnat_core::valuations::InstanceDoc;
use mnat_core::{Exec, FeasibleRegion, Point, SharedValuation};

#[derive(Parser)]
#[command(name = "mnat", version, about = "Online M-natural-concave maximization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exhaustively check the exchange property of an instance.
    Verify {
        #[arg(long)]
        instance: PathBuf,
        /// Restrict to the box `[a, b]`; each end is an integer or `;`-joined coordinates.
        #[arg(long = "box")]
        interval: Option<String>,
    },
    /// Run greedy with a chosen direction selector.
    Greedy {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        budget: i64,
        #[arg(long, default_value = "exact")]
        selector: SelectorKind,
        #[arg(long)]
        audit: bool,
    },
    /// Monte-Carlo simple regret of greedy-bandit.
    SimpleRegret(RegretArgs),
    /// Monte-Carlo cumulative regret of explore-then-commit.
    CumRegret(RegretArgs),
    /// Learners against the random three-matroid sequence.
    Adversarial(AdversarialArgs),
}

#[derive(Args, Serialize)]
struct RegretArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    budget: i64,
    #[arg(long)]
    rounds: u64,
    #[arg(long, default_value_t = 100)]
    trials: u64,
    #[arg(long, default_value = "gaussian:1")]
    noise: NoiseModel,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct AdversarialArgs {
    #[arg(long)]
    m1: PathBuf,
    #[arg(long)]
    m2: PathBuf,
    #[arg(long)]
    m3: PathBuf,
    #[arg(long, default_value = "mwu")]
    learner: LearnerKind,
    #[arg(long)]
    rounds: usize,
    #[arg(long, default_value_t = 50)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Verification(serde_json::Value),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Usage(e.to_string())
    }
}

type Outcome = Result<serde_json::Value, Failure>;

fn load_instance(path: &Path) -> Result<SharedValuation, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let doc = InstanceDoc::from_json(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    Ok(doc.build()?)
}

fn load_matroid(path: &Path) -> Result<Arc<Matroid>, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let spec: MatroidSpec =
        serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    Ok(Arc::new(spec.build()?))
}

fn parse_end(s: &str, dim: usize) -> Result<Point, Failure> {
    let coords: Vec<i64> = s
        .split(';')
        .map(|c| c.trim().parse::<i64>())
        .collect::<Result<_, _>>()
        .map_err(|_| Failure::Usage(format!("bad box end {s:?}")))?;
    match coords.len() {
        1 => Ok(Point::new(vec![coords[0]; dim])),
        n if n == dim => Ok(Point::new(coords)),
        n => Err(Failure::Usage(format!("box end has {n} coordinates, instance has {dim}"))),
    }
}

fn verify(instance: &Path, interval: Option<&str>) -> Outcome {
    let mut f = load_instance(instance)?;
    if let Some(spec) = interval {
        let (a, b) = spec.split_once(',').ok_or_else(|| Failure::Usage("--box expects a,b".into()))?;
        let dim = f.dim();
        f = Arc::new(restrict(f, parse_end(a, dim)?, parse_end(b, dim)?)?);
    }
    let exchange = check_exchange(&*f)?;
    let ab = check_prop_ab(&*f)?;
    let report = json!({
        "pass": exchange.pass && ab.pass,
        "witness": exchange.witness.as_ref().or(ab.witness.as_ref()),
        "pairs_checked": exchange.pairs_checked,
        "exchange": exchange,
        "prop_ab": ab,
    });
    if exchange.pass && ab.pass {
        Ok(report)
    } else {
        Err(Failure::Verification(report))
    }
}

fn greedy(instance: &Path, budget: i64, selector: SelectorKind, audit: bool) -> Outcome {
    let f = load_instance(instance)?;
    let traj = greedy_with_selector(&*f, budget, selector.build().as_mut())?;
    if !audit {
        return Ok(json!({ "trajectory": traj }));
    }
    let region = FeasibleRegion::new(f, budget)?;
    let report = audit_robustness(&traj, &region)?;
    let holds = report.holds;
    let out = json!({ "trajectory": traj, "audit": report });
    if holds {
        Ok(out)
    } else {
        Err(Failure::Verification(out))
    }
}

fn write_outputs(
    out: Option<&Path>,
    summary: &serde_json::Value,
    csv: impl FnOnce(&mut dyn Write) -> io::Result<()>,
) -> Result<(), Failure> {
    let Some(path) = out else { return Ok(()) };
    let mut w = BufWriter::new(fs::File::create(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?);
    csv(&mut w)?;
    w.flush()?;
    fs::write(path.with_extension("json"), serde_json::to_string_pretty(summary)? + "\n")?;
    Ok(())
}

fn regret(args: &RegretArgs, mode: RegretMode) -> Outcome {
    let valuation = load_instance(&args.instance)?;
    let config = RegretConfig {
        valuation,
        budget: args.budget,
        rounds: args.rounds,
        noise: args.noise,
        mode,
        traces: args.out.is_some(),
    };
    let summary = estimate_regret(&config, args.trials, args.seed, Exec::default())?;
    let regrets: Vec<f64> = summary.outcomes.iter().map(|o| o.regret).collect();
    let report = json!({
        "config": args,
        "mode": mode,
        "optimum": summary.optimum,
        "mean": summary.mean,
        "std_err": summary.std_err,
        "regrets": regrets,
    });
    write_outputs(args.out.as_deref(), &report, |w| summary.write_csv(w))?;
    Ok(report)
}

fn adversarial(args: &AdversarialArgs) -> Outcome {
    let matroids = [load_matroid(&args.m1)?, load_matroid(&args.m2)?, load_matroid(&args.m3)?];
    let summary = run_adversarial(
        matroids,
        args.learner,
        args.rounds,
        args.trials,
        args.seed,
        args.out.is_some(),
        Exec::default(),
    )?;
    let report = json!({
        "config": args,
        "mean": summary.mean,
        "std_err": summary.std_err,
        "yes_rate": summary.yes_rate,
        "trials": summary.outcomes,
    });
    write_outputs(args.out.as_deref(), &report, |w| summary.write_csv(w))?;
    Ok(report)
}

fn configure_threads() -> Result<(), Failure> {
    if let Ok(v) = std::env::var("MNAT_THREADS") {
        let n: usize = v.parse().map_err(|_| Failure::Usage(format!("MNAT_THREADS={v:?} is not a count")))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Outcome {
    configure_threads()?;
    match cli.command {
        Command::Verify { instance, interval } => verify(&instance, interval.as_deref()),
        Command::Greedy { instance, budget, selector, audit } => greedy(&instance, budget, selector, audit),
        Command::SimpleRegret(args) => regret(&args, RegretMode::Simple),
        Command::CumRegret(args) => regret(&args, RegretMode::Cumulative),
        Command::Adversarial(args) => adversarial(&args),
    }
}

fn print_json(v: &serde_json::Value) {
    let text = serde_json::to_string_pretty(v).expect("JSON values serialize");
    let _ = writeln!(io::stdout().lock(), "{text}");
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
    match run(cli) {
        Ok(v) => {
            print_json(&v);
            ExitCode::SUCCESS
        }
        Err(Failure::Verification(v)) => {
            print_json(&v);
            ExitCode::from(2)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
