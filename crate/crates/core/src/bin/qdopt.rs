use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use qdopt::bip::{AnnealSchedule, SpreadAggregate};
use qdopt::diagnostics::{self, TrajectoryLog};
use qdopt::harness::{self, FunctionGroup, Summary};
use qdopt::{
    double_well, Algorithm, AlgorithmConfig, BoundsPolicy, DoubleWellParams, Error, ObjectiveSpec, Result,
    Silent, TrialOutcome,
};

#[derive(Parser)]
#[command(name = "qdopt", version, about = "Bare-bones stochastic optimizers and benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One seeded run of one algorithm on one function.
    Run(RunArgs),
    /// A grid of algorithms x functions x dimensions with repeated trials.
    Experiment(ExperimentArgs),
    /// One run with full event logging, exported as CSV and JSON.
    Diagnose(DiagnoseArgs),
    /// Average rankings from a results CSV.
    Rank(RankArgs),
}

#[derive(Args, Clone)]
struct Problem {
    #[arg(long, value_enum, default_value_t = Algorithm::Bip)]
    algo: Algorithm,
    /// F1..F12, double_well or paraboloid.
    #[arg(long, default_value = "F7")]
    func: String,
    #[arg(long, default_value_t = 10)]
    dim: usize,
    /// Evaluation budget; defaults to 10000 * dim.
    #[arg(long)]
    max_fes: Option<u64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    well: WellArgs,
}

#[derive(Args, Clone, Default)]
struct WellArgs {
    /// Barrier height of the double well.
    #[arg(long)]
    v0: Option<f64>,
    /// Well position of the double well.
    #[arg(long = "well-a")]
    well_a: Option<f64>,
    /// Tilt of the double well.
    #[arg(long)]
    delta: Option<f64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ScheduleArg {
    Exponential,
    Reciprocal,
}

#[derive(Args, Clone, Default)]
struct Overrides {
    #[arg(long)]
    success_threshold: Option<f64>,
    /// Stop a run as soon as the success threshold is reached.
    #[arg(long)]
    stop_at_success: bool,
    #[arg(long, value_enum)]
    bounds: Option<BoundsPolicy>,
    /// BIP population size.
    #[arg(long)]
    k: Option<usize>,
    /// BIP tunneling constant A.
    #[arg(long)]
    amplitude: Option<f64>,
    #[arg(long, value_enum)]
    schedule: Option<ScheduleArg>,
    /// Decay constant of the exponential schedule.
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    scale_divisor: Option<f64>,
    #[arg(long)]
    min_scale: Option<f64>,
    #[arg(long)]
    no_mean_replacement: bool,
    #[arg(long, value_enum)]
    spread: Option<SpreadAggregate>,
    /// Start every BIP particle here, e.g. `2,2`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    init: Option<Vec<f64>>,
    /// Population (BBPSO, GBDE) or spark count (BBFWA).
    #[arg(long)]
    np: Option<usize>,
    #[arg(long)]
    cr_mean: Option<f64>,
    #[arg(long)]
    cr_std: Option<f64>,
    #[arg(long)]
    amp_init: Option<f64>,
    #[arg(long)]
    amp_grow: Option<f64>,
    #[arg(long)]
    amp_shrink: Option<f64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    problem: Problem,
    #[command(flatten)]
    overrides: Overrides,
    /// Directory for the outcome CSV and JSON.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the effective run as JSON and exit.
    #[arg(long)]
    dump_config: bool,
    /// Replay a run previously printed by --dump-config.
    #[arg(long, conflicts_with = "dump_config")]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Preset {
    /// 10D, 50,000 evaluations, 20 trials.
    Desk,
    /// 30/60/100D, 10,000 * dim evaluations, 51 trials.
    Full,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = Algorithm::ALL)]
    algos: Vec<Algorithm>,
    /// Comma-separated ids or ranges, e.g. `F1-F6,F9`.
    #[arg(long, default_value = "F1-F12")]
    funcs: String,
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
    #[arg(long)]
    trials: Option<usize>,
    /// Budget per trial; defaults to 10000 * dim.
    #[arg(long)]
    max_fes: Option<u64>,
    #[arg(long, default_value_t = 1)]
    base_seed: u64,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    #[command(flatten)]
    overrides: Overrides,
    #[arg(long, default_value = "results")]
    out: PathBuf,
}

#[derive(Args)]
struct DiagnoseArgs {
    #[command(flatten)]
    problem: Problem,
    #[command(flatten)]
    overrides: Overrides,
    #[arg(long, default_value_t = diagnostics::DEFAULT_BINS)]
    bins: usize,
    #[arg(long, default_value = "diagnostics")]
    out: PathBuf,
}

#[derive(Args)]
struct RankArgs {
    /// Results CSV written by `experiment`.
    #[arg(long)]
    input: PathBuf,
    /// Comma-separated groups, e.g. `F1-F6,F7-F12`.
    #[arg(long, value_delimiter = ',', default_values_t = [String::from("F1-F6"), String::from("F7-F12")])]
    groups: Vec<String>,
    #[arg(long)]
    success_threshold: Option<f64>,
    /// Write the JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Everything needed to replay a single run.
#[derive(Debug, Serialize, Deserialize)]
struct RunSpec {
    function: String,
    dim: usize,
    max_fes: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    double_well: Option<DoubleWellParams>,
    config: AlgorithmConfig,
}

impl RunSpec {
    fn objective(&self) -> Result<ObjectiveSpec> {
        match &self.double_well {
            Some(p) => double_well(DoubleWellParams { dim: self.dim, ..*p }),
            None => ObjectiveSpec::from_id(&self.function, self.dim),
        }
    }
}

fn bad(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

fn default_budget(dim: usize) -> u64 {
    10_000 * dim as u64
}

fn is_double_well(func: &str) -> bool {
    matches!(func.trim().to_ascii_lowercase().as_str(), "double_well" | "double-well")
}

fn well_params(func: &str, dim: usize, w: &WellArgs) -> Result<Option<DoubleWellParams>> {
    let given = w.v0.is_some() || w.well_a.is_some() || w.delta.is_some();
    if !is_double_well(func) {
        return if given { Err(bad("--v0, --well-a and --delta only apply to double_well")) } else { Ok(None) };
    }
    let d = DoubleWellParams::default();
    Ok(Some(DoubleWellParams {
        v0: w.v0.unwrap_or(d.v0),
        a: w.well_a.unwrap_or(d.a),
        delta: w.delta.unwrap_or(d.delta),
        dim,
    }))
}

fn reject(flag: &str, algorithm: Algorithm) -> Error {
    bad(format!("--{flag} does not apply to {algorithm}"))
}

fn apply_overrides(config: &mut AlgorithmConfig, o: &Overrides) -> Result<()> {
    let alg = config.algorithm();
    {
        let s = config.settings_mut();
        if let Some(t) = o.success_threshold {
            s.success_threshold = t;
        }
        s.stop_at_success |= o.stop_at_success;
        if let Some(b) = o.bounds {
            s.bounds = b;
        }
    }
    let bip_only = [
        ("k", o.k.is_some()),
        ("amplitude", o.amplitude.is_some()),
        ("schedule", o.schedule.is_some()),
        ("tau", o.tau.is_some()),
        ("scale-divisor", o.scale_divisor.is_some()),
        ("min-scale", o.min_scale.is_some()),
        ("no-mean-replacement", o.no_mean_replacement),
        ("spread", o.spread.is_some()),
        ("init", o.init.is_some()),
    ];
    let fwa_only = [
        ("amp-init", o.amp_init.is_some()),
        ("amp-grow", o.amp_grow.is_some()),
        ("amp-shrink", o.amp_shrink.is_some()),
    ];
    let de_only = [("cr-mean", o.cr_mean.is_some()), ("cr-std", o.cr_std.is_some())];
    let check = |flags: &[(&str, bool)], owner: Algorithm| -> Result<()> {
        match flags.iter().find(|(_, set)| *set) {
            Some((flag, _)) if alg != owner => Err(reject(flag, alg)),
            _ => Ok(()),
        }
    };
    check(&bip_only, Algorithm::Bip)?;
    check(&fwa_only, Algorithm::Bbfwa)?;
    check(&de_only, Algorithm::Gbde)?;
    match config {
        AlgorithmConfig::Bip(c) => {
            if o.np.is_some() {
                return Err(bad("--np does not apply to bip, use --k"));
            }
            if let Some(k) = o.k {
                c.k = k;
            }
            if let Some(a) = o.amplitude {
                c.amplitude = a;
            }
            match (o.schedule, o.tau) {
                (Some(ScheduleArg::Reciprocal), Some(_)) => {
                    return Err(bad("--tau only applies to the exponential schedule"))
                }
                (Some(ScheduleArg::Reciprocal), None) => c.schedule = AnnealSchedule::Reciprocal,
                (_, Some(tau)) => c.schedule = AnnealSchedule::Exponential { tau },
                (Some(ScheduleArg::Exponential), None) => c.schedule = AnnealSchedule::default(),
                (None, None) => {}
            }
            if let Some(d) = o.scale_divisor {
                c.scale_divisor = d;
            }
            if let Some(m) = o.min_scale {
                c.min_scale = m;
            }
            if o.no_mean_replacement {
                c.mean_replacement = false;
            }
            if let Some(s) = o.spread {
                c.spread = s;
            }
            if let Some(init) = &o.init {
                c.init = Some(init.clone());
            }
        }
        AlgorithmConfig::Bbpso(c) => {
            if let Some(np) = o.np {
                c.np = np;
            }
        }
        AlgorithmConfig::Bbfwa(c) => {
            if let Some(np) = o.np {
                c.np = np;
            }
            if o.amp_init.is_some() {
                c.amp_init = o.amp_init;
            }
            if let Some(g) = o.amp_grow {
                c.amp_grow = g;
            }
            if let Some(s) = o.amp_shrink {
                c.amp_shrink = s;
            }
        }
        AlgorithmConfig::Gbde(c) => {
            if let Some(np) = o.np {
                c.np = np;
            }
            if let Some(m) = o.cr_mean {
                c.cr_mean = m;
            }
            if let Some(s) = o.cr_std {
                c.cr_std = s;
            }
        }
    }
    config.validate()
}

fn build_run(problem: &Problem, overrides: &Overrides) -> Result<RunSpec> {
    let mut config = AlgorithmConfig::default_for(problem.algo);
    config.settings_mut().seed = problem.seed;
    apply_overrides(&mut config, overrides)?;
    let spec = RunSpec {
        function: problem.func.clone(),
        dim: problem.dim,
        max_fes: problem.max_fes.unwrap_or_else(|| default_budget(problem.dim)),
        double_well: well_params(&problem.func, problem.dim, &problem.well)?,
        config,
    };
    spec.objective()?;
    Ok(spec)
}

fn write_outcome(dir: &Path, outcome: &TrialOutcome) -> Result<()> {
    fs::create_dir_all(dir)?;
    let stem = diagnostics::file_stem(&outcome.algorithm, &outcome.function, outcome.dim, outcome.seed);
    harness::write_results_csv(BufWriter::new(File::create(dir.join(format!("{stem}.csv")))?), std::slice::from_ref(outcome))?;
    serde_json::to_writer_pretty(BufWriter::new(File::create(dir.join(format!("{stem}.json")))?), outcome)?;
    Ok(())
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let spec: RunSpec = match &args.config {
        Some(path) => {
            let spec: RunSpec = serde_json::from_reader(File::open(path)?)?;
            spec.config.validate()?;
            spec
        }
        None => build_run(&args.problem, &args.overrides)?,
    };
    if args.dump_config {
        println!("{}", serde_json::to_string_pretty(&spec)?);
        return Ok(());
    }
    let objective = spec.objective()?;
    let outcome = harness::run_trial(&spec.config, &objective, spec.max_fes, &mut Silent)?;
    println!("algorithm:   {}", outcome.algorithm);
    println!("function:    {} ({}D)", outcome.function, outcome.dim);
    println!("seed:        {}", outcome.seed);
    println!("final_error: {:e}", outcome.final_error);
    println!("evals_used:  {}", outcome.evals_used);
    println!("succeeded:   {}", outcome.succeeded);
    if let Some(dir) = &args.out {
        write_outcome(dir, &outcome)?;
    }
    Ok(())
}

fn parse_functions(list: &str) -> Result<Vec<String>> {
    let mut out: Vec<String> = Vec::new();
    for token in list.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let names = if token.contains('-') && token.to_ascii_lowercase().starts_with('f') {
            FunctionGroup::parse(token)?.functions
        } else {
            vec![ObjectiveSpec::from_id(token, 2)?.name().to_string()]
        };
        for n in names {
            if !out.contains(&n) {
                out.push(n);
            }
        }
    }
    if out.is_empty() {
        return Err(bad("no functions given"));
    }
    Ok(out)
}

fn cmd_experiment(args: ExperimentArgs) -> Result<bool> {
    let functions = parse_functions(&args.funcs)?;
    let (preset_dims, preset_trials, preset_fes) = match args.preset {
        Some(Preset::Desk) => (vec![10], 20, Some(50_000)),
        Some(Preset::Full) => (vec![30, 60, 100], 51, None),
        None => (vec![10], 20, None),
    };
    let dims = args.dims.clone().unwrap_or(preset_dims);
    let trials = args.trials.unwrap_or(preset_trials);
    if dims.is_empty() || dims.contains(&0) {
        return Err(bad("dimensions must be positive"));
    }
    let mut configs = Vec::new();
    for &alg in &args.algos {
        let mut c = AlgorithmConfig::default_for(alg);
        apply_overrides(&mut c, &args.overrides)?;
        configs.push(c);
    }
    let threshold = configs
        .first()
        .map(|c| c.settings().success_threshold)
        .ok_or_else(|| bad("no algorithms given"))?;

    let mut outcomes = Vec::new();
    let mut cells = Vec::new();
    let mut failures = Vec::new();
    for &dim in &dims {
        let max_fes = args.max_fes.or(preset_fes).unwrap_or_else(|| default_budget(dim));
        for func in &functions {
            for config in &configs {
                let alg = config.algorithm();
                match harness::run_experiment(config, func, dim, trials, max_fes, args.base_seed, args.workers)
                    .and_then(|o| harness::aggregate(&o, threshold).map(|s| (o, s)))
                {
                    Ok((o, stats)) => {
                        eprintln!(
                            "{alg:>5} {func:>4} {dim:>3}D  mean {:.3e}  sr {:.2}",
                            stats.mean, stats.sr
                        );
                        outcomes.extend(o);
                        cells.push(stats);
                    }
                    Err(e) => {
                        eprintln!("{alg:>5} {func:>4} {dim:>3}D  failed: {e}");
                        failures.push(format!("({alg}, {func}, {dim}): {e}"));
                    }
                }
            }
        }
    }

    fs::create_dir_all(&args.out)?;
    harness::write_results_csv(BufWriter::new(File::create(args.out.join("results.csv"))?), &outcomes)?;
    let groups: Vec<FunctionGroup> = [FunctionGroup::multimodal(), FunctionGroup::unimodal()]
        .into_iter()
        .filter(|g| g.functions.iter().all(|f| functions.contains(f)))
        .collect();
    let rankings = if failures.is_empty() && configs.len() > 1 {
        harness::rank_by_dim(&cells, &groups)?
    } else {
        Vec::new()
    };
    Summary::new(threshold, cells, rankings).write_json(BufWriter::new(File::create(args.out.join("summary.json"))?))?;
    for f in &failures {
        eprintln!("error: cell {f}");
    }
    Ok(failures.is_empty())
}

fn cmd_diagnose(args: DiagnoseArgs) -> Result<()> {
    let spec = build_run(&args.problem, &args.overrides)?;
    let objective = spec.objective()?;
    let mut log = TrajectoryLog::new(&objective);
    let outcome = harness::run_trial(&spec.config, &objective, spec.max_fes, &mut log)?;
    let files = diagnostics::export_run(
        &args.out,
        &outcome.algorithm,
        &outcome.function,
        outcome.seed,
        &log,
        args.bins,
    )?;
    println!("final_error:    {:e}", outcome.final_error);
    println!("evals_used:     {}", outcome.evals_used);
    println!("events:         {}", log.len());
    println!("expected_value: {:e}", diagnostics::expected_solution_value(&log)?);
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn cmd_rank(args: RankArgs) -> Result<()> {
    let rows = harness::read_results_csv(File::open(&args.input)?)?;
    if rows.is_empty() {
        return Err(bad(format!("{} has no rows", args.input.display())));
    }
    let groups = args.groups.iter().map(|g| FunctionGroup::parse(g)).collect::<Result<Vec<_>>>()?;
    let threshold = args.success_threshold.unwrap_or(qdopt::optimizer::DEFAULT_SUCCESS_THRESHOLD);
    let stats = harness::aggregate_rows(&rows, threshold)?;
    let rankings = harness::rank_by_dim(&stats, &groups)?;
    let json = serde_json::to_string_pretty(&rankings)?;
    match &args.out {
        Some(path) => fs::write(path, json + "\n")?,
        None => {
            let mut stdout = io::stdout().lock();
            writeln!(stdout, "{json}")?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a).map(|_| true),
        Command::Experiment(a) => cmd_experiment(a),
        Command::Diagnose(a) => cmd_diagnose(a).map(|_| true),
        Command::Rank(a) => cmd_rank(a).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
