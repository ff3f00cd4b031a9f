//! `slc`: evaluate stochastic lambda terms and query Bayesian networks.
//!
//! Exit status is 0 on success, 1 when evaluation fails (including a failed
//! oracle check) and 2 for usage, file and parse errors.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use slc_core::bn::{self, BnError, NetworkDocument, QuerySpec};
use slc_core::reduce::normalize_eta;
use slc_core::syntax::format_probability;
use slc_core::{
    parse, print, Distribution, EvalConfig, EvalError, InferOptions, Laziness, ParseError, StrategyRegistry, TermId,
    TermStore,
};

const STACK_BYTES: usize = 512 * 1024 * 1024;

#[derive(Parser, Debug)]
#[command(name = "slc", version, about = "Exact and approximate inference for a stochastic lambda calculus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate a term file and print its outcome distribution.
    Eval {
        /// Term file.
        path: PathBuf,
        #[command(flatten)]
        eval: EvalArgs,
    },
    /// Evaluate a term file, printing every reduction step.
    Trace {
        /// Term file.
        path: PathBuf,
        #[command(flatten)]
        eval: EvalArgs,
    },
    /// Compile a network query, evaluate it and print P(query = T).
    Bn {
        /// Network file (JSON).
        path: PathBuf,
        #[command(flatten)]
        query: QueryArgs,
        #[command(flatten)]
        eval: EvalArgs,
    },
    /// Estimate the outcome distribution of a term or network query by sampling.
    Sample {
        /// Term file, or a network file ending in .json.
        path: PathBuf,
        #[command(flatten)]
        query: QueryArgs,
        #[command(flatten)]
        sampling: SampleArgs,
        /// Apply eta reduction before sampling.
        #[arg(long)]
        eta: bool,
        /// Print probabilities exactly instead of to six decimals.
        #[arg(long)]
        full_precision: bool,
    },
    /// Compare compiled network queries against exhaustive enumeration.
    Check {
        /// Network file (JSON).
        path: PathBuf,
        #[command(flatten)]
        query: QueryArgs,
        /// Largest allowed deviation.
        #[arg(long, default_value_t = 1e-9)]
        tolerance: f64,
    },
    /// List the available inference engines.
    Engines,
}

#[derive(Args, Debug, Clone)]
struct SampleArgs {
    /// Number of samples drawn.
    #[arg(long, default_value_t = 10_000)]
    samples: u64,
    /// Random seed; sample i uses stream i of this seed.
    #[arg(long, env = "SLC_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug, Clone)]
struct EvalArgs {
    /// Inference engine; defaults to the one matching --laziness.
    #[arg(long)]
    engine: Option<String>,
    #[arg(long, value_enum, default_value_t = LazinessArg::Lazy)]
    laziness: LazinessArg,
    /// Maximum number of beta and gamma steps.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    fuel: Option<u64>,
    /// Drop branches with probability below this.
    #[arg(long, default_value_t = 0.0, value_parser = parse_epsilon)]
    prune_epsilon: f64,
    /// Substitute every argument, even when that duplicates a distribution.
    #[arg(long)]
    improper_beta: bool,
    /// Disable the shared evaluation cache.
    #[arg(long)]
    no_cache: bool,
    /// Print every reduction step.
    #[arg(long)]
    trace: bool,
    /// Apply eta reduction before evaluating.
    #[arg(long)]
    eta: bool,
    /// Print probabilities exactly instead of to six decimals.
    #[arg(long)]
    full_precision: bool,
    #[command(flatten)]
    sampling: SampleArgs,
}

#[derive(Args, Debug, Clone, Default)]
struct QueryArgs {
    /// Query node; overrides the document's query.
    #[arg(long)]
    query: Option<String>,
    /// Observed value, e.g. `C=T`. Repeatable.
    #[arg(long, value_parser = parse_evidence)]
    evidence: Vec<(String, bool)>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum LazinessArg {
    Eager,
    Lazy,
}

fn parse_epsilon(s: &str) -> Result<f64, String> {
    let x: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    if (0.0..1.0).contains(&x) {
        Ok(x)
    } else {
        Err(format!("prune epsilon must be in [0, 1), got {x}"))
    }
}

fn parse_evidence(s: &str) -> Result<(String, bool), String> {
    let (name, value) = s.split_once('=').ok_or_else(|| format!("expected NAME=T or NAME=F, got '{s}'"))?;
    let value = match value {
        "T" | "t" | "true" => true,
        "F" | "f" | "false" => false,
        other => return Err(format!("evidence value must be T or F, got '{other}'")),
    };
    if name.is_empty() {
        return Err("evidence needs a node name".into());
    }
    Ok((name.to_string(), value))
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Eval(String),
    /// Carries the report, which still goes to stdout.
    #[error("check failed")]
    CheckFailed(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io { .. } | CliError::Parse(_) => 2,
            CliError::Eval(_) | CliError::CheckFailed(_) => 1,
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::InvalidConfig(msg) => CliError::Usage(msg),
            other => CliError::Eval(other.to_string()),
        }
    }
}

impl From<BnError> for CliError {
    fn from(e: BnError) -> Self {
        match e {
            BnError::Json(_)
            | BnError::DuplicateName(_)
            | BnError::UnknownParent { .. }
            | BnError::CycleDetected(_)
            | BnError::BadCptShape { .. }
            | BnError::BadProbability { .. }
            | BnError::Term(_) => CliError::Parse(e.to_string()),
            BnError::UnknownNode(_) | BnError::MissingQuery | BnError::TooLarge(_) => CliError::Usage(e.to_string()),
            BnError::AllMassConditioned | BnError::UnexpectedOutcome(_) => CliError::Eval(e.to_string()),
            BnError::Eval(inner) => inner.into(),
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

fn located(path: &Path, text: &str, e: &ParseError) -> CliError {
    let before = &text[..e.span.start.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    CliError::Parse(format!("{}:{line}:{col}: {}", path.display(), e.message))
}

fn load_term(store: &TermStore, path: &Path, eta: bool) -> Result<TermId, CliError> {
    let text = read(path)?;
    let t = parse(store, &text).map_err(|e| located(path, &text, &e))?;
    Ok(if eta { normalize_eta(store, t) } else { t })
}

fn load_network(path: &Path) -> Result<NetworkDocument, CliError> {
    Ok(bn::parse_document(&read(path)?)?)
}

fn is_network(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

fn query_spec(doc: &NetworkDocument, args: &QueryArgs) -> Result<QuerySpec, CliError> {
    let overrides: BTreeMap<String, bool> = args.evidence.iter().cloned().collect();
    Ok(doc.query_spec(args.query.as_deref(), &overrides)?)
}

fn prob(p: f64, full: bool) -> String {
    if full {
        format_probability(p)
    } else {
        format!("{p:.6}")
    }
}

fn write_distribution(out: &mut String, store: &TermStore, d: &Distribution, unknown: f64, full: bool) {
    for (t, p) in d.entries() {
        let _ = writeln!(out, "{}: {}", print(store, *t), prob(*p, full));
    }
    if unknown > 0.0 {
        let _ = writeln!(out, "unknown: {}", prob(unknown, full));
    }
}

impl EvalArgs {
    fn config(&self, trace: bool) -> EvalConfig {
        EvalConfig {
            fuel: self.fuel,
            laziness: match self.laziness {
                LazinessArg::Eager => Laziness::Eager,
                LazinessArg::Lazy => Laziness::Lazy,
            },
            improper_beta: self.improper_beta,
            prune_epsilon: self.prune_epsilon,
            cache: !self.no_cache,
            trace: trace || self.trace,
            strict_fuel: false,
        }
    }

    fn engine_name(&self) -> &str {
        match (&self.engine, self.laziness) {
            (Some(name), _) => name,
            (None, LazinessArg::Eager) => "eager",
            (None, LazinessArg::Lazy) => "lazy",
        }
    }

    fn options(&self, trace: bool) -> InferOptions {
        InferOptions { config: self.config(trace), samples: self.sampling.samples, seed: self.sampling.seed }
    }
}

struct Evaluated {
    outcome: Distribution,
    unknown: f64,
}

fn infer(
    store: &TermStore,
    term: TermId,
    args: &EvalArgs,
    trace: bool,
    out: &mut String,
) -> Result<Evaluated, CliError> {
    let registry = StrategyRegistry::with_builtin();
    let name = args.engine_name();
    let engine = registry.get(name).ok_or_else(|| {
        let known: Vec<_> = registry.names().collect();
        CliError::Usage(format!("unknown engine '{name}'; available: {}", known.join(", ")))
    })?;
    let inference = engine.infer(store, term, &args.options(trace), None)?;
    if let Some(steps) = &inference.result.trace {
        for step in steps {
            let _ = writeln!(out, "{}", step.render(store));
        }
    }
    Ok(Evaluated { outcome: inference.result.outcome, unknown: inference.result.unknown_mass })
}

fn run(cli: Cli) -> Result<String, CliError> {
    let store = TermStore::new();
    let mut out = String::new();
    match cli.command {
        Command::Eval { path, eval } => {
            let t = load_term(&store, &path, eval.eta)?;
            let r = infer(&store, t, &eval, false, &mut out)?;
            write_distribution(&mut out, &store, &r.outcome, r.unknown, eval.full_precision);
        }
        Command::Trace { path, eval } => {
            let t = load_term(&store, &path, eval.eta)?;
            let r = infer(&store, t, &eval, true, &mut out)?;
            write_distribution(&mut out, &store, &r.outcome, r.unknown, eval.full_precision);
        }
        Command::Bn { path, query, eval } => {
            let doc = load_network(&path)?;
            let spec = query_spec(&doc, &query)?;
            let mut t = bn::compile_query(&store, &doc.network, &spec)?;
            if eval.eta {
                t = normalize_eta(&store, t);
            }
            let r = infer(&store, t, &eval, false, &mut out)?;
            let marginal = bn::marginalize_n(&store, &r.outcome)?;
            let p = marginal.prob(store.church_true());
            let _ = writeln!(out, "P({}=T) = {}", spec.query, prob(p, eval.full_precision));
            if r.unknown > 0.0 {
                let _ = writeln!(out, "unknown: {}", prob(r.unknown, eval.full_precision));
            }
        }
        Command::Sample { path, query, sampling, eta, full_precision } => {
            let (mut t, queried) = if is_network(&path) {
                let doc = load_network(&path)?;
                let spec = query_spec(&doc, &query)?;
                (bn::compile_query(&store, &doc.network, &spec)?, Some(spec.query))
            } else {
                (load_term(&store, &path, false)?, None)
            };
            if eta {
                t = normalize_eta(&store, t);
            }
            let stats = slc_core::mc_estimate(&store, t, sampling.samples, sampling.seed, &EvalConfig::default())?;
            write_distribution(&mut out, &store, &stats.estimate, 0.0, full_precision);
            if let Some(name) = queried {
                // Samples that fail the evidence are rejected.
                let marginal = bn::marginalize_n(&store, &stats.estimate)?;
                let p = marginal.prob(store.church_true());
                let _ = writeln!(out, "P({name}=T) = {}", prob(p, full_precision));
            }
            let _ = writeln!(out, "samples: {}", stats.samples);
            let _ = writeln!(out, "seed: {}", stats.seed);
        }
        Command::Check { path, query, tolerance } => {
            let doc = load_network(&path)?;
            let specs = if query.query.is_some() || doc.query.is_some() {
                vec![query_spec(&doc, &query)?]
            } else {
                let base =
                    query_spec(&doc, &QueryArgs { query: Some(doc.network.nodes()[0].name.clone()), ..query.clone() })?;
                doc.network
                    .nodes()
                    .iter()
                    .map(|n| QuerySpec { query: n.name.clone(), evidence: base.evidence.clone() })
                    .collect()
            };
            let mut worst = 0.0f64;
            for spec in &specs {
                let oracle = bn::brute_force_query(&store, &doc.network, spec)?;
                let (m, _) = bn::infer_query(&store, &doc.network, spec, &EvalConfig::default(), None)?;
                let dev = m.max_deviation(&oracle);
                worst = worst.max(dev);
                let _ = writeln!(
                    out,
                    "P({}=T) = {:.6} oracle {:.6} deviation {dev:.3e}",
                    spec.query,
                    m.prob(store.church_true()),
                    oracle.prob(store.church_true())
                );
            }
            let verdict = if worst <= tolerance { "PASS" } else { "FAIL" };
            let _ = writeln!(out, "{verdict} max deviation {worst:.3e}");
            if worst > tolerance {
                return Err(CliError::CheckFailed(out));
            }
        }
        Command::Engines => {
            let registry = StrategyRegistry::with_builtin();
            for engine in registry.iter() {
                let _ = writeln!(out, "{:<12} {}", engine.name(), engine.summary());
            }
        }
    }
    Ok(out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    // Evaluation recurses on term depth; give it room.
    let worker = std::thread::Builder::new().stack_size(STACK_BYTES).spawn(move || run(cli));
    let result = match worker {
        Ok(handle) => handle.join().unwrap_or_else(|_| Err(CliError::Eval("evaluation panicked".into()))),
        Err(e) => Err(CliError::Eval(format!("cannot start evaluation thread: {e}"))),
    };
    match result {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(out.as_bytes());
            ExitCode::SUCCESS
        }
        Err(CliError::CheckFailed(report)) => {
            let _ = std::io::stdout().lock().write_all(report.as_bytes());
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
