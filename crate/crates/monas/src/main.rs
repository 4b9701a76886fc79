//! Command-line front end: search runs, baseline sweeps, committee
//! experiments and hypervolume reporting.
//!
//! Every command is a pure function of its flags, input files and seed.
//! Exit codes: 0 success, 2 configuration error, 3 evaluator/data error,
//! 4 infeasible constraint, 5 I/O error.

use clap::{Args, Parser, Subcommand};
use monas::ensemble::{
    ensemble_experiment, mimic_ofa_subset, synth_predictions, ExperimentConfig, LatencyMode,
    ModelTarget, Voting, BASELINE_THRESHOLDS,
};
use monas::genotype::{OperatorConfig, SubSpace};
use monas::moo::{
    hypervolume_progression, run_ofa_baseline, run_search, Algorithm, Individual, SearchConfig,
    SearchError,
};
use monas::persistence::{
    export_baseline_csv, export_ensemble_csv, export_front_csv, export_hv_csv, export_subset_csv,
    load_predictions, load_predictor_evaluator, load_result, save_predictions, save_result,
    PersistError,
};
use monas::surrogate::{Evaluator, ObjectiveVector, SyntheticSurrogate};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "monas",
    version,
    about = "Multi-objective evolutionary architecture search with surrogate evaluators"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run NSGA-II or SMS-EMOA and write the result file, front CSV and
    /// hypervolume CSV
    Search(SearchArgs),
    /// Run the latency-constrained single-objective baseline, once or as a
    /// sweep over constraints
    Baseline(BaselineArgs),
    /// Evaluate committees sampled from an architecture pool over a
    /// prediction set
    Ensemble(EnsembleArgs),
    /// Report the hypervolume progression of a saved run as CSV
    Hv(HvArgs),
}

#[derive(Args)]
struct EvaluatorArgs {
    /// Score genotypes with the closed-form synthetic surrogate instead of
    /// evaluator files
    #[arg(long)]
    synthetic: bool,
    /// Synthetic error decay per unit of work [default: 0.001]
    #[arg(long)]
    synthetic_a: Option<f64>,
    /// Synthetic latency base in ms [default: 2]
    #[arg(long)]
    synthetic_b: Option<f64>,
    /// Synthetic latency per unit of work [default: 0.01]
    #[arg(long)]
    synthetic_c: Option<f64>,
    /// Accuracy predictor weights file (required without --synthetic)
    #[arg(long)]
    predictor: Option<PathBuf>,
    /// Latency lookup table file (required without --synthetic)
    #[arg(long)]
    latency_table: Option<PathBuf>,
}

#[derive(Args)]
struct SearchArgs {
    /// Search algorithm: nsga2 or sms-emoa [default: nsga2]
    #[arg(long)]
    algorithm: Option<String>,
    /// Population size [default: 100]
    #[arg(long)]
    pop: Option<usize>,
    /// Number of generations [default: 1000]
    #[arg(long)]
    gens: Option<usize>,
    /// RNG seed [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Per-gene mutation probability [default: 0.1]
    #[arg(long)]
    mutation_rate: Option<f64>,
    /// Reference point for the reported hypervolume, "error,latency"
    /// [default: 100,25]
    #[arg(long = "ref")]
    reference: Option<String>,
    /// Fixed SMS-EMOA selection reference "error,latency" [default:
    /// dynamic, population worst + 1]
    #[arg(long)]
    hv_selection_ref: Option<String>,
    /// Operator option space: full or kernel-only [default: full]
    #[arg(long)]
    space: Option<String>,
    /// Evaluation worker threads; affects speed only [default: 1]
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory [default: runs/<algorithm>-seed<seed>]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Config file of `key value` lines mirroring these flags; flags win
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    evaluator: EvaluatorArgs,
}

#[derive(Args)]
struct BaselineArgs {
    /// Latency constraint in ms (single run)
    #[arg(long)]
    constraint: Option<f64>,
    /// Constraint sweep "start:end:step" in ms, e.g. 15:55:5
    #[arg(long)]
    sweep: Option<String>,
    /// Population size [default: 100]
    #[arg(long)]
    pop: Option<usize>,
    /// Number of generations [default: 1000]
    #[arg(long)]
    gens: Option<usize>,
    /// RNG seed [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Per-gene mutation probability [default: 0.1]
    #[arg(long)]
    mutation_rate: Option<f64>,
    /// Operator option space: full or kernel-only [default: full]
    #[arg(long)]
    space: Option<String>,
    /// Evaluation worker threads; affects speed only [default: 1]
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory [default: runs/baseline-seed<seed>]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Config file of `key value` lines mirroring these flags; flags win
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    evaluator: EvaluatorArgs,
}

#[derive(Args)]
struct EnsembleArgs {
    /// Saved search result whose front is the architecture pool
    #[arg(long)]
    pool: Option<PathBuf>,
    /// Prediction set file
    #[arg(long)]
    preds: Option<PathBuf>,
    /// Generate synthetic predictions; give a targets CSV
    /// (accuracy_pct,latency_ms) or no value to derive targets from the
    /// pool front
    #[arg(long, num_args = 0..=1, default_missing_value = "-")]
    synth_preds: Option<String>,
    /// Samples in a generated prediction set [default: 2000]
    #[arg(long)]
    samples: Option<usize>,
    /// Classes in a generated prediction set [default: 10]
    #[arg(long)]
    classes: Option<usize>,
    /// Inter-model correlation of generated predictions [default: 0.5]
    #[arg(long)]
    rho: Option<f64>,
    /// Committee sizes "min:max" [default: 2:8]
    #[arg(long)]
    sizes: Option<String>,
    /// Distinct committees sampled per size [default: 43]
    #[arg(long)]
    count: Option<usize>,
    /// Latency modes, comma-separated from {sum, max} [default: sum,max]
    #[arg(long)]
    modes: Option<String>,
    /// Voting schemes, comma-separated from {hard, soft} [default:
    /// hard,soft]
    #[arg(long)]
    votings: Option<String>,
    /// RNG seed for committee sampling and generation [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Also pick the pool members sitting at the 15..55 ms thresholds and
    /// write them to subset.csv
    #[arg(long)]
    mimic_subset: bool,
    /// Output directory [default: runs/ensemble-seed<seed>]
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct HvArgs {
    /// Saved search result file
    #[arg(long)]
    result: PathBuf,
    /// Reference point "error,latency" [default: 100,25]
    #[arg(long = "ref")]
    reference: Option<String>,
    /// Output CSV path; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

// ---------------------------------------------------------------------------

enum CliError {
    Config(String),
    Data(String),
    Infeasible(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Infeasible(_) => 4,
            CliError::Io(_) => 5,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Data(m) | CliError::Infeasible(m) | CliError::Io(m) => {
                m
            }
        }
    }
}

impl From<SearchError> for CliError {
    fn from(e: SearchError) -> Self {
        match e {
            SearchError::Config(_) => CliError::Config(e.to_string()),
            SearchError::Evaluation { .. } => CliError::Data(e.to_string()),
            SearchError::Infeasible { .. } => CliError::Infeasible(e.to_string()),
        }
    }
}

impl From<PersistError> for CliError {
    fn from(e: PersistError) -> Self {
        match e {
            PersistError::Io { .. } => CliError::Io(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<monas::ensemble::EnsembleError> for CliError {
    fn from(e: monas::ensemble::EnsembleError) -> Self {
        CliError::Data(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Search(args) => cmd_search(args),
        Command::Baseline(args) => cmd_baseline(args),
        Command::Ensemble(args) => cmd_ensemble(args),
        Command::Hv(args) => cmd_hv(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

// ---------------------------------------------------------------------------
// flag/config resolution

/// `key value` lines; `#` starts a comment. Flags always win over file
/// entries.
fn read_config(path: Option<&Path>) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    let Some(path) = path else {
        return Ok(map);
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match line.split_once(' ') {
            Some((key, value)) => {
                map.insert(key.to_string(), value.trim().to_string());
            }
            None => {
                map.insert(line.to_string(), String::from("true"));
            }
        }
    }
    Ok(map)
}

fn resolve<T: std::str::FromStr>(
    flag: Option<T>,
    config: &BTreeMap<String, String>,
    key: &str,
    default: T,
) -> Result<T, CliError> {
    if let Some(v) = flag {
        return Ok(v);
    }
    match config.get(key) {
        Some(raw) => raw
            .parse()
            .map_err(|_| CliError::Config(format!("config key `{key}`: cannot parse `{raw}`"))),
        None => Ok(default),
    }
}

fn parse_point(text: &str) -> Result<ObjectiveVector, CliError> {
    let (e, l) = text
        .split_once(',')
        .ok_or_else(|| CliError::Config(format!("expected \"error,latency\", got `{text}`")))?;
    let parse = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| CliError::Config(format!("bad number `{t}` in point `{text}`")))
    };
    Ok(ObjectiveVector::new(parse(e)?, parse(l)?))
}

fn parse_space(name: &str) -> Result<SubSpace, CliError> {
    match name {
        "full" => Ok(SubSpace::full()),
        "kernel-only" => Ok(SubSpace::kernel_only()),
        other => Err(CliError::Config(format!(
            "unknown space `{other}` (expected full or kernel-only)"
        ))),
    }
}

fn build_evaluator(
    args: &EvaluatorArgs,
    config: &BTreeMap<String, String>,
) -> Result<Box<dyn Evaluator>, CliError> {
    let synthetic = args.synthetic
        || config
            .get("synthetic")
            .map(|v| v == "true")
            .unwrap_or(false);
    if synthetic {
        let a = resolve(args.synthetic_a, config, "synthetic-a", 0.001)?;
        let b = resolve(args.synthetic_b, config, "synthetic-b", 2.0)?;
        let c = resolve(args.synthetic_c, config, "synthetic-c", 0.01)?;
        return Ok(Box::new(SyntheticSurrogate::new(a, b, c)));
    }
    let predictor = args
        .predictor
        .clone()
        .or_else(|| config.get("predictor").map(PathBuf::from));
    let table = args
        .latency_table
        .clone()
        .or_else(|| config.get("latency-table").map(PathBuf::from));
    match (predictor, table) {
        (Some(p), Some(t)) => Ok(Box::new(load_predictor_evaluator(&p, &t)?)),
        _ => Err(CliError::Config(
            "need --predictor and --latency-table, or --synthetic".into(),
        )),
    }
}

fn ensure_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", path.display())))
}

// ---------------------------------------------------------------------------
// commands

fn cmd_search(args: SearchArgs) -> Result<(), CliError> {
    let config = read_config(args.config.as_deref())?;
    let algorithm_name = args
        .algorithm
        .or_else(|| config.get("algorithm").cloned())
        .unwrap_or_else(|| "nsga2".to_string());
    let algorithm = Algorithm::parse(&algorithm_name)
        .ok_or_else(|| CliError::Config(format!("unknown algorithm `{algorithm_name}`")))?;
    if algorithm == Algorithm::OfaBaseline {
        return Err(CliError::Config(
            "use the `baseline` subcommand for the constrained search".into(),
        ));
    }
    let seed = resolve(args.seed, &config, "seed", 0)?;
    let reference = match args.reference.or_else(|| config.get("ref").cloned()) {
        Some(text) => parse_point(&text)?,
        None => ObjectiveVector::new(100.0, 25.0),
    };
    let hv_selection_ref = match args
        .hv_selection_ref
        .or_else(|| config.get("hv-selection-ref").cloned())
    {
        Some(text) => Some(parse_point(&text)?),
        None => None,
    };
    let space_name = args
        .space
        .or_else(|| config.get("space").cloned())
        .unwrap_or_else(|| "full".to_string());
    let cfg = SearchConfig {
        algorithm,
        population_size: resolve(args.pop, &config, "pop", 100)?,
        generations: resolve(args.gens, &config, "gens", 1000)?,
        operators: OperatorConfig {
            mutation_rate: resolve(args.mutation_rate, &config, "mutation-rate", 0.1)?,
            rng_seed: seed,
        },
        reference_point: reference,
        latency_constraint: None,
        space: parse_space(&space_name)?,
        hv_selection_ref,
        threads: resolve(args.threads, &config, "threads", 1)?,
    };
    let evaluator = build_evaluator(&args.evaluator, &config)?;

    let result = run_search(&cfg, evaluator.as_ref())?;

    let out = args
        .out
        .unwrap_or_else(|| PathBuf::from(format!("runs/{}-seed{}", algorithm.name(), seed)));
    ensure_dir(&out)?;
    save_result(&result, &out.join("result.txt"))?;
    export_front_csv(&result.front, &out.join("front.csv"))?;
    export_hv_csv(&result.hv_series, &out.join("hv.csv"))?;

    println!(
        "algorithm={} front-size={} final-hypervolume={}",
        algorithm.name(),
        result.front.len(),
        result.hv_series.last().copied().unwrap_or(0.0)
    );
    println!("wrote {}", out.display());
    Ok(())
}

fn parse_sweep(text: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = text.split(':').collect();
    let [start, end, step] = parts.as_slice() else {
        return Err(CliError::Config(format!(
            "sweep must be start:end:step, got `{text}`"
        )));
    };
    let parse = |t: &str| {
        t.parse::<f64>()
            .map_err(|_| CliError::Config(format!("bad sweep number `{t}`")))
    };
    let (start, end, step) = (parse(start)?, parse(end)?, parse(step)?);
    if step <= 0.0 || end < start {
        return Err(CliError::Config(
            "sweep needs start <= end and step > 0".into(),
        ));
    }
    let mut out = Vec::new();
    let mut k = 0u32;
    loop {
        let value = start + step * k as f64;
        if value > end + 1e-9 {
            break;
        }
        out.push(value);
        k += 1;
    }
    Ok(out)
}

fn cmd_baseline(args: BaselineArgs) -> Result<(), CliError> {
    let config = read_config(args.config.as_deref())?;
    let constraints = match (&args.constraint, &args.sweep) {
        (Some(_), Some(_)) => {
            return Err(CliError::Config(
                "give either --constraint or --sweep".into(),
            ))
        }
        (Some(c), None) => vec![*c],
        (None, Some(s)) => parse_sweep(s)?,
        (None, None) => match config.get("sweep") {
            Some(s) => parse_sweep(s)?,
            None => match config.get("constraint") {
                Some(c) => vec![c.parse().map_err(|_| {
                    CliError::Config(format!("config key `constraint`: cannot parse `{c}`"))
                })?],
                None => {
                    return Err(CliError::Config(
                        "baseline needs --constraint or --sweep".into(),
                    ))
                }
            },
        },
    };
    let seed = resolve(args.seed, &config, "seed", 0)?;
    let space_name = args
        .space
        .or_else(|| config.get("space").cloned())
        .unwrap_or_else(|| "full".to_string());
    let base_cfg = SearchConfig {
        algorithm: Algorithm::OfaBaseline,
        population_size: resolve(args.pop, &config, "pop", 100)?,
        generations: resolve(args.gens, &config, "gens", 1000)?,
        operators: OperatorConfig {
            mutation_rate: resolve(args.mutation_rate, &config, "mutation-rate", 0.1)?,
            rng_seed: seed,
        },
        reference_point: ObjectiveVector::new(100.0, 25.0),
        latency_constraint: None,
        space: parse_space(&space_name)?,
        hv_selection_ref: None,
        threads: resolve(args.threads, &config, "threads", 1)?,
    };
    let evaluator = build_evaluator(&args.evaluator, &config)?;

    let mut records: Vec<(f64, Individual)> = Vec::new();
    for &constraint in &constraints {
        let cfg = SearchConfig {
            latency_constraint: Some(constraint),
            ..base_cfg.clone()
        };
        let best = run_ofa_baseline(&cfg, evaluator.as_ref())?;
        println!(
            "constraint={} top1-error={} latency={}",
            constraint, best.objectives.top1_error, best.objectives.latency
        );
        records.push((constraint, best));
    }

    let out = args
        .out
        .unwrap_or_else(|| PathBuf::from(format!("runs/baseline-seed{seed}")));
    ensure_dir(&out)?;
    export_baseline_csv(&records, &out.join("baseline.csv"))?;
    println!("wrote {}", out.join("baseline.csv").display());
    Ok(())
}

fn parse_list_of<T>(
    text: &str,
    parse: impl Fn(&str) -> Option<T>,
    what: &str,
) -> Result<Vec<T>, CliError> {
    text.split(',')
        .map(|t| parse(t.trim()).ok_or_else(|| CliError::Config(format!("unknown {what} `{t}`"))))
        .collect()
}

fn cmd_ensemble(args: EnsembleArgs) -> Result<(), CliError> {
    let seed = args.seed.unwrap_or(0);
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("runs/ensemble-seed{seed}")));
    ensure_dir(&out)?;

    // The pool front, when given: sorted by latency already.
    let pool: Option<Vec<Individual>> = match &args.pool {
        Some(path) => Some(load_result(path)?.front),
        None => None,
    };

    let preds = match (&args.preds, &args.synth_preds) {
        (Some(_), Some(_)) => {
            return Err(CliError::Config(
                "give either --preds or --synth-preds".into(),
            ))
        }
        (Some(path), None) => load_predictions(path)?,
        (None, Some(source)) => {
            let targets: Vec<ModelTarget> = if source == "-" {
                let front = pool.as_ref().ok_or_else(|| {
                    CliError::Config("--synth-preds without a targets file needs --pool".into())
                })?;
                front
                    .iter()
                    .map(|ind| ModelTarget {
                        accuracy_pct: 100.0 - ind.objectives.top1_error,
                        latency_ms: ind.objectives.latency,
                    })
                    .collect()
            } else {
                read_targets_csv(Path::new(source))?
            };
            let n_samples = args.samples.unwrap_or(2000);
            let n_classes = args.classes.unwrap_or(10);
            let rho = args.rho.unwrap_or(0.5);
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let preds = synth_predictions(&targets, n_samples, n_classes, rho, &mut rng)?;
            save_predictions(&preds, &out.join("preds.txt"))?;
            preds
        }
        (None, None) => {
            return Err(CliError::Config(
                "ensemble needs --preds or --synth-preds".into(),
            ))
        }
    };
    if let Some(front) = &pool {
        if !front.is_empty() && front.len() != preds.n_models {
            return Err(CliError::Data(format!(
                "pool front has {} members but the prediction set covers {} models",
                front.len(),
                preds.n_models
            )));
        }
    }

    let sizes = match &args.sizes {
        Some(text) => {
            let (lo, hi) = text
                .split_once(':')
                .ok_or_else(|| CliError::Config(format!("sizes must be min:max, got `{text}`")))?;
            let parse = |t: &str| {
                t.parse::<usize>()
                    .map_err(|_| CliError::Config(format!("bad size `{t}`")))
            };
            (parse(lo)?, parse(hi)?)
        }
        None => (2, 8),
    };
    let modes = match &args.modes {
        Some(text) => parse_list_of(text, LatencyMode::parse, "latency mode")?,
        None => vec![LatencyMode::Sum, LatencyMode::Max],
    };
    let votings = match &args.votings {
        Some(text) => parse_list_of(text, Voting::parse, "voting scheme")?,
        None => vec![Voting::Hard, Voting::Soft],
    };
    let cfg = ExperimentConfig {
        sizes,
        count: args.count.unwrap_or(43),
        modes,
        votings,
        seed,
    };

    let outcome = ensemble_experiment(&preds, &cfg)?;
    for (size, reason) in &outcome.skipped {
        eprintln!("warning: skipped committee size {size}: {reason}");
    }
    export_ensemble_csv(&outcome, &out.join("ensembles.csv"))?;
    for slice in &outcome.slices {
        println!(
            "voting={} mode={} committees={} front-size={}",
            slice.voting.name(),
            slice.mode.name(),
            slice.results.len(),
            slice.front.len()
        );
    }

    if args.mimic_subset {
        let front = pool
            .as_ref()
            .ok_or_else(|| CliError::Config("--mimic-subset needs --pool".into()))?;
        let latencies: Vec<f64> = front.iter().map(|i| i.objectives.latency).collect();
        let picks = mimic_ofa_subset(&latencies, &BASELINE_THRESHOLDS)?;
        for (threshold, pick) in BASELINE_THRESHOLDS.iter().zip(&picks) {
            if pick.is_none() {
                eprintln!("warning: no pool member at or below {threshold} ms");
            }
        }
        let rows: Vec<(f64, Option<usize>)> =
            BASELINE_THRESHOLDS.iter().copied().zip(picks).collect();
        export_subset_csv(&rows, front, &out.join("subset.csv"))?;
    }

    println!("wrote {}", out.join("ensembles.csv").display());
    Ok(())
}

fn read_targets_csv(path: &Path) -> Result<Vec<ModelTarget>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read targets {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("accuracy") {
            continue;
        }
        let (acc, lat) = line.split_once(',').ok_or_else(|| {
            CliError::Data(format!(
                "{}:{}: expected accuracy_pct,latency_ms",
                path.display(),
                n + 1
            ))
        })?;
        let parse = |t: &str| {
            t.trim().parse::<f64>().map_err(|_| {
                CliError::Data(format!("{}:{}: bad number `{t}`", path.display(), n + 1))
            })
        };
        out.push(ModelTarget {
            accuracy_pct: parse(acc)?,
            latency_ms: parse(lat)?,
        });
    }
    if out.is_empty() {
        return Err(CliError::Data(format!(
            "{}: no targets found",
            path.display()
        )));
    }
    Ok(out)
}

fn cmd_hv(args: HvArgs) -> Result<(), CliError> {
    let result = load_result(&args.result)?;
    let reference = match &args.reference {
        Some(text) => parse_point(text)?,
        None => ObjectiveVector::new(100.0, 25.0),
    };
    println!(
        "reference point: ({}, {})",
        reference.top1_error, reference.latency
    );
    let series = hypervolume_progression(&result, reference)?;
    let inside = result.front.iter().any(|i| {
        i.objectives.top1_error < reference.top1_error && i.objectives.latency < reference.latency
    });
    if !inside {
        eprintln!(
            "warning: no front point strictly dominates the reference point; hypervolume is zero"
        );
    }
    let values: Vec<f64> = series.iter().map(|&(_, hv)| hv).collect();
    match &args.out {
        Some(path) => {
            export_hv_csv(&values, path)?;
            println!("wrote {}", path.display());
        }
        None => {
            println!("generation,hypervolume");
            for (g, hv) in series {
                println!("{g},{hv}");
            }
        }
    }
    Ok(())
}
