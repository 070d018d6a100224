//! Command-line front end: `solve`, `batch`, `landscape`, `sweep`, `gen`, `excess`.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand};
use lsils::bench_io::{
    apply_reference, parse_run_file_name, read_orlib, read_runlog_csv, run_file_name,
    write_orlib, write_runlog_csv, GeneratorSpec, OptimaTable, Reference, ReferenceKind,
};
use lsils::experiment::{run_batch, Algorithm, BatchSpec};
use lsils::landscape::{
    analyze, lambda_sweep, parse_grid, sweep_csv, EnumerationOptions, LandscapeObjective,
    DEFAULT_OPTIMA_CAP,
};
use lsils::smoothing::{default_target_bound, ToyMatrix};
use lsils::{
    AlphaSpec, Budget, Form, LambdaSchedule, PivotRule, QuadraticForm, SearchConfig,
    SmoothedObjective, Solution, ToyKind, UbqpInstance,
};

/// Environment variable supplying the default `--jobs`.
pub const JOBS_ENV: &str = "LSILS_JOBS";

#[derive(Parser, Debug)]
#[command(name = "lsils", version, about = "Landscape-smoothing ILS for UBQP")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one algorithm once and write its run log.
    Solve(SolveArgs),
    /// Run several algorithms over many seeds, one run log per run.
    Batch(BatchArgs),
    /// Enumerate all 2^n solutions: local optima, value histogram, flatness.
    Landscape(LandscapeArgs),
    /// Count local optima of the smoothed objective over a grid of λ values.
    Sweep(SweepArgs),
    /// Generate a random instance in ORLIB format.
    Gen(GenArgs),
    /// Rewrite the excess column of run logs against known optima.
    Excess(ExcessArgs),
}

#[derive(Args, Debug, Clone)]
struct InstanceArgs {
    /// ORLIB instance file.
    #[arg(long, conflicts_with = "gen")]
    instance: Option<PathBuf>,
    /// Zero-based instance index inside a multi-instance file.
    #[arg(long, default_value_t = 0, requires = "instance")]
    index: usize,
    /// Generate instead: `n=500,density=0.1,range=-100:100,seed=1`.
    #[arg(long)]
    gen: Option<GeneratorSpec>,
    /// Instance name used in output file names.
    #[arg(long)]
    name: Option<String>,
}

#[derive(Args, Debug, Clone)]
struct SearchArgs {
    /// `evals:<count>` or `secs:<seconds>`.
    #[arg(long, default_value = "evals:1e7")]
    budget: Budget,
    /// `stepped`, `none`, `const:<v>` or `steps:<t>=<v>,...` (thresholds may be `20%`).
    #[arg(long, default_value = "stepped")]
    lambda: String,
    /// `auto`, `target:<bound>`, `landscape`, `bqp2500` or a positive number.
    #[arg(long, default_value = "auto")]
    alpha: AlphaSpec,
    /// `best` or `first`.
    #[arg(long, default_value = "best")]
    pivot: PivotRule,
    /// Bits flipped per perturbation (default n/4).
    #[arg(long)]
    perturb_bits: Option<usize>,
    /// Log spacing in budget units, e.g. `evals:2e6` (default budget/100).
    #[arg(long)]
    log_interval: Option<Budget>,
    /// Optima file (`<name> <value>` per line) for the excess column.
    #[arg(long)]
    optima: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[command(flatten)]
    search: SearchArgs,
    /// `ils` or `lsils`.
    #[arg(long, default_value = "lsils")]
    algo: String,
    /// Toy kind for `lsils`: `plusminus1`, `plusminusi` or `random`.
    #[arg(long, default_value = "plusminusi")]
    toy: ToyKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct BatchArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[command(flatten)]
    search: SearchArgs,
    /// Comma-separated: `ils`, `lsils:plusminus1`, `lsils:plusminusi`, `lsils:random`.
    #[arg(long, default_value = "ils,lsils:plusminusi", value_delimiter = ',')]
    algos: Vec<Algorithm>,
    #[arg(long, default_value_t = 20)]
    seeds: usize,
    /// Master seed; run `i` uses a seed derived from it.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Worker threads (default from LSILS_JOBS, else all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args, Debug)]
struct LandscapeArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// `none` for the original objective, or a toy kind.
    #[arg(long, default_value = "none")]
    toy: String,
    /// With a toy: smooth at this λ instead of enumerating the toy alone.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, default_value = "auto")]
    alpha: AlphaSpec,
    /// Toy anchor such as `0101`; defaults to the global optimum.
    #[arg(long)]
    anchor: Option<Solution>,
    /// `full` (x^T Q x) or `upper` (upper triangle only).
    #[arg(long, default_value = "full")]
    form: Form,
    /// Most local optima listed in the report.
    #[arg(long, default_value_t = DEFAULT_OPTIMA_CAP)]
    cap: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long, default_value = "plusminusi")]
    toy: ToyKind,
    #[arg(long, default_value = "auto")]
    alpha: AlphaSpec,
    #[arg(long)]
    anchor: Option<Solution>,
    /// `start:end:step` or `v1,v2,...`.
    #[arg(long, default_value = "0:1:0.1")]
    grid: String,
    #[arg(long, default_value = "full")]
    form: Form,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GenArgs {
    /// `n=<n>,density=<d>,range=<lo>:<hi>,seed=<s>`.
    #[arg(long)]
    gen: GeneratorSpec,
    #[arg(long)]
    name: Option<String>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args, Debug)]
struct ExcessArgs {
    /// Optima file: `<instance-name> <value>` per line.
    #[arg(long)]
    optima: PathBuf,
    /// Run logs to rewrite; defaults to every `*.csv` in `--out-dir`.
    files: Vec<PathBuf>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

/// Parses `argv` (program name first), runs the command, and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match dispatch(cli.command, &mut out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = out.flush();
            eprintln!("error: {e:#}");
            1
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Solve(a) => solve(a, out),
        Command::Batch(a) => batch(a, out),
        Command::Landscape(a) => landscape(a, out),
        Command::Sweep(a) => sweep(a, out),
        Command::Gen(a) => generate(a, out),
        Command::Excess(a) => excess(a, out),
    }
}

fn load_instance(args: &InstanceArgs) -> Result<(String, UbqpInstance)> {
    let (default_name, inst) = match (&args.instance, &args.gen) {
        (Some(path), None) => {
            let mut all = read_orlib(path)?;
            ensure!(
                args.index < all.len(),
                "--index {} but {} holds {} instance(s)",
                args.index,
                path.display(),
                all.len()
            );
            let stem = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "instance".into());
            let name = if all.len() > 1 {
                format!("{stem}-{}", args.index + 1)
            } else {
                stem
            };
            (name, all.swap_remove(args.index))
        }
        (None, Some(g)) => (g.name(), g.generate()?),
        _ => bail!("give exactly one of --instance <file> or --gen <n=..,density=..,range=..,seed=..>"),
    };
    let name = args.name.clone().unwrap_or(default_name);
    ensure!(
        !name.contains('_') && !name.contains('/'),
        "instance name {name:?} must not contain '_' or '/' (it is embedded in file names)"
    );
    Ok((name, inst))
}

fn search_config(args: &SearchArgs, n: usize) -> Result<SearchConfig> {
    let mut config = SearchConfig::new(args.budget);
    config.lambda_schedule = LambdaSchedule::parse(&args.lambda, args.budget)?;
    config.alpha = args.alpha;
    config.pivot = args.pivot;
    config.perturbation_bits = args.perturb_bits;
    if let Some(li) = args.log_interval {
        ensure!(
            li.unit == args.budget.unit,
            "--log-interval counts {} but --budget counts {}",
            li.unit.label(),
            args.budget.unit.label()
        );
        config.log_interval = li.amount;
    }
    config.validate(n)?;
    Ok(config)
}

fn optimum_for(path: Option<&Path>, name: &str) -> Result<Option<i64>> {
    match path {
        None => Ok(None),
        Some(p) => {
            let table = OptimaTable::read(p)?;
            Ok(Some(table.get(name).with_context(|| {
                format!("{} has no optimum for instance {name:?}", p.display())
            })?))
        }
    }
}

fn describe_alpha(
    out: &mut dyn Write,
    inst: &UbqpInstance,
    alpha: AlphaSpec,
    kind: ToyKind,
) -> Result<()> {
    if matches!(alpha, AlphaSpec::Auto) {
        writeln!(out, "# target_bound = {}", default_target_bound(inst)?)?;
    }
    if kind == ToyKind::Random {
        writeln!(out, "# alpha[{kind}] = {alpha} (depends on each toy draw)")?;
    } else {
        let toy = ToyMatrix::construct(kind, Solution::zeros(inst.n()), 0);
        writeln!(out, "# alpha[{kind}] = {}", alpha.resolve(inst, &toy)?)?;
    }
    Ok(())
}

fn print_search_config(out: &mut dyn Write, name: &str, inst: &UbqpInstance, c: &SearchConfig) -> Result<()> {
    writeln!(out, "# instance = {name} (n = {}, density = {:.4})", inst.n(), inst.density())?;
    writeln!(out, "# budget = {}", c.budget)?;
    writeln!(out, "# lambda = {}", c.lambda_schedule)?;
    writeln!(out, "# pivot = {}", c.pivot)?;
    writeln!(out, "# perturb_bits = {}", c.perturbation_bits_for(inst.n()))?;
    writeln!(out, "# log_interval = {}", c.log_interval)?;
    Ok(())
}

fn solve(a: SolveArgs, out: &mut dyn Write) -> Result<()> {
    let algorithm = match a.algo.as_str() {
        "ils" => Algorithm::Ils,
        "lsils" => Algorithm::Lsils(a.toy),
        other => other.parse()?,
    };
    let (name, inst) = load_instance(&a.instance)?;
    let config = search_config(&a.search, inst.n())?;
    let optimum = optimum_for(a.search.optima.as_deref(), &name)?;
    writeln!(out, "# command = solve")?;
    writeln!(out, "# algorithm = {algorithm}")?;
    print_search_config(out, &name, &inst, &config)?;
    if let Algorithm::Lsils(kind) = algorithm {
        describe_alpha(out, &inst, config.alpha, kind)?;
    }
    writeln!(out, "# seed = {}", a.seed)?;
    let result = algorithm.run(&inst, &config, a.seed)?;
    let reference = optimum.map(|value| Reference {
        kind: ReferenceKind::Optimum,
        value,
    });
    let mut records = result.log.records.clone();
    if let Some(r) = &reference {
        apply_reference(&mut records, r)?;
    }
    fs::create_dir_all(&a.search.out_dir)
        .with_context(|| format!("creating {}", a.search.out_dir.display()))?;
    let path = a
        .search
        .out_dir
        .join(run_file_name(&name, &algorithm.label(), a.seed as usize));
    write_runlog_csv(&records, reference.as_ref(), &path)?;
    writeln!(out, "best_value {}", result.best_value)?;
    writeln!(out, "best_solution {}", result.best)?;
    writeln!(out, "iterations {}", result.iterations)?;
    writeln!(out, "evaluations {}", result.evaluations)?;
    if let Some(r) = &reference {
        writeln!(out, "excess {:.8}", lsils::bench_io::excess(result.best_value, r.value)?)?;
    }
    writeln!(out, "runlog {}", path.display())?;
    Ok(())
}

fn jobs_default(flag: Option<usize>) -> Result<Option<usize>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(JOBS_ENV) {
        Ok(v) => Ok(Some(
            v.trim()
                .parse()
                .with_context(|| format!("{JOBS_ENV}={v:?} is not a thread count"))?,
        )),
        Err(_) => Ok(None),
    }
}

fn batch(a: BatchArgs, out: &mut dyn Write) -> Result<()> {
    ensure!(a.seeds > 0, "--seeds must be at least 1");
    ensure!(!a.algos.is_empty(), "--algos must list at least one algorithm");
    let jobs = jobs_default(a.jobs)?;
    ensure!(jobs != Some(0), "--jobs must be at least 1");
    let (name, inst) = load_instance(&a.instance)?;
    let config = search_config(&a.search, inst.n())?;
    let optimum = optimum_for(a.search.optima.as_deref(), &name)?;
    writeln!(out, "# command = batch")?;
    let labels: Vec<String> = a.algos.iter().map(Algorithm::label).collect();
    writeln!(out, "# algorithms = {}", labels.join(","))?;
    print_search_config(out, &name, &inst, &config)?;
    for algo in &a.algos {
        if let Algorithm::Lsils(kind) = algo {
            describe_alpha(out, &inst, config.alpha, *kind)?;
        }
    }
    writeln!(out, "# seeds = {} (master seed {})", a.seeds, a.seed)?;
    writeln!(
        out,
        "# jobs = {}",
        jobs.map_or_else(|| "all cores".to_string(), |j| j.to_string())
    )?;
    let plan = BatchSpec {
        instance_name: name,
        algorithms: a.algos,
        seeds: a.seeds,
        master_seed: a.seed,
        config,
        optimum,
        jobs,
    };
    let result = run_batch(&inst, &plan)?;
    let paths = result.write_csvs(&a.search.out_dir)?;
    write!(out, "{}", result.comparison_table())?;
    writeln!(out, "wrote {} run logs to {}", paths.len(), a.search.out_dir.display())?;
    Ok(())
}

fn global_optimum(inst: &UbqpInstance, form: Form) -> Result<Solution> {
    let opts = EnumerationOptions {
        form,
        optima_cap: usize::MAX,
    };
    let report = analyze(&LandscapeObjective::Original(inst), &opts)?;
    report
        .local_optima
        .into_iter()
        .map(|x| (inst.evaluate_form(&x, form).expect("dimensions match"), x))
        .max_by(|a, b| a.0.cmp(&b.0).then_with(|| b.1.cmp(&a.1)))
        .map(|(_, x)| x)
        .context("instance has no local optimum")
}

fn resolve_anchor(anchor: Option<Solution>, inst: &UbqpInstance, form: Form) -> Result<Solution> {
    match anchor {
        Some(x) => {
            ensure!(
                x.len() == inst.n(),
                "--anchor has {} bits but the instance has n = {}",
                x.len(),
                inst.n()
            );
            Ok(x)
        }
        None => global_optimum(inst, form),
    }
}

fn enumeration_guard(n: usize) -> Result<()> {
    ensure!(
        n <= lsils::landscape::MAX_ENUMERATION_VARS,
        "exhaustive enumeration supports at most {} variables (got n = {n}); use a smaller instance",
        lsils::landscape::MAX_ENUMERATION_VARS
    );
    Ok(())
}

fn landscape(a: LandscapeArgs, out: &mut dyn Write) -> Result<()> {
    let toy_kind: Option<ToyKind> = match a.toy.as_str() {
        "none" => None,
        other => Some(other.parse()?),
    };
    ensure!(
        toy_kind.is_some() || (a.lambda.is_none() && a.anchor.is_none()),
        "--lambda and --anchor need --toy <plusminus1|plusminusi|random>"
    );
    if let Some(l) = a.lambda {
        ensure!((0.0..=1.0).contains(&l), "--lambda must lie in [0, 1], got {l}");
    }
    let (name, inst) = load_instance(&a.instance)?;
    enumeration_guard(inst.n())?;
    writeln!(out, "# command = landscape")?;
    writeln!(out, "# instance = {name} (n = {})", inst.n())?;
    writeln!(out, "# form = {}", a.form)?;
    let opts = EnumerationOptions {
        form: a.form,
        optima_cap: a.cap,
    };
    let report = match toy_kind {
        None => {
            writeln!(out, "# objective = original")?;
            analyze(&LandscapeObjective::Original(&inst), &opts)?
        }
        Some(kind) => {
            let anchor = resolve_anchor(a.anchor, &inst, a.form)?;
            let toy = ToyMatrix::construct(kind, anchor.clone(), a.seed);
            writeln!(out, "# toy = {kind}, anchor = {anchor}, toy seed = {}", a.seed)?;
            match a.lambda {
                None => {
                    writeln!(out, "# objective = toy")?;
                    analyze(&LandscapeObjective::Toy(&toy), &opts)?
                }
                Some(lambda) => {
                    let alpha = a.alpha.resolve(&inst, &toy)?;
                    writeln!(out, "# objective = smoothed, lambda = {lambda}, alpha = {alpha} ({})", a.alpha)?;
                    let g = SmoothedObjective::new(&inst, &toy, lambda, alpha)?;
                    analyze(&LandscapeObjective::Smoothed(g), &opts)?
                }
            }
        }
    };
    write!(out, "{}", report.to_text())?;
    if let Some(dir) = &a.out_dir {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let stem = match toy_kind {
            None => format!("{name}_original"),
            Some(k) => format!("{name}_{k}"),
        };
        let report_path = dir.join(format!("{stem}_landscape.txt"));
        let hist_path = dir.join(format!("{stem}_histogram.csv"));
        fs::write(&report_path, report.to_text())
            .with_context(|| format!("writing {}", report_path.display()))?;
        fs::write(&hist_path, report.histogram.to_csv())
            .with_context(|| format!("writing {}", hist_path.display()))?;
        writeln!(out, "report {}", report_path.display())?;
        writeln!(out, "histogram {}", hist_path.display())?;
    }
    Ok(())
}

fn sweep(a: SweepArgs, out: &mut dyn Write) -> Result<()> {
    let grid = parse_grid(&a.grid)?;
    let (name, inst) = load_instance(&a.instance)?;
    enumeration_guard(inst.n())?;
    let anchor = resolve_anchor(a.anchor, &inst, a.form)?;
    writeln!(out, "# command = sweep")?;
    writeln!(out, "# instance = {name} (n = {})", inst.n())?;
    writeln!(out, "# toy = {}, anchor = {anchor}, toy seed = {}", a.toy, a.seed)?;
    let toy = ToyMatrix::construct(a.toy, anchor.clone(), a.seed);
    writeln!(out, "# alpha = {} ({})", a.alpha.resolve(&inst, &toy)?, a.alpha)?;
    writeln!(out, "# form = {}", a.form)?;
    writeln!(out, "# grid = {} points", grid.len())?;
    let points = lambda_sweep(&inst, a.toy, &anchor, a.alpha, &grid, a.seed, a.form)?;
    let csv = sweep_csv(&points);
    write!(out, "{csv}")?;
    if let Some(dir) = &a.out_dir {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let path = dir.join(format!("{name}_sweep_{}.csv", a.toy));
        fs::write(&path, &csv).with_context(|| format!("writing {}", path.display()))?;
        writeln!(out, "sweep {}", path.display())?;
    }
    Ok(())
}

fn generate(a: GenArgs, out: &mut dyn Write) -> Result<()> {
    let name = a.name.clone().unwrap_or_else(|| a.gen.name());
    writeln!(out, "# command = gen")?;
    writeln!(
        out,
        "# n = {}, density = {}, range = {}:{}, seed = {}",
        a.gen.n, a.gen.density, a.gen.lo, a.gen.hi, a.gen.seed
    )?;
    let inst = a.gen.generate()?;
    fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    let path = a.out_dir.join(format!("{name}.txt"));
    write_orlib(&path, std::slice::from_ref(&inst))?;
    writeln!(out, "instance {}", path.display())?;
    Ok(())
}

fn excess(a: ExcessArgs, out: &mut dyn Write) -> Result<()> {
    let table = OptimaTable::read(&a.optima)?;
    let mut files = a.files.clone();
    if files.is_empty() {
        for entry in fs::read_dir(&a.out_dir).with_context(|| format!("reading {}", a.out_dir.display()))? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == "csv") && path.file_name().and_then(|f| f.to_str()).and_then(parse_run_file_name).is_some() {
                files.push(path);
            }
        }
        files.sort();
    }
    ensure!(!files.is_empty(), "no run logs found in {}", a.out_dir.display());
    writeln!(out, "# command = excess")?;
    writeln!(out, "# optima = {} ({} entries)", a.optima.display(), table.len())?;
    for path in files {
        let file_name = path
            .file_name()
            .and_then(|f| f.to_str())
            .with_context(|| format!("{} has no file name", path.display()))?;
        let (instance, _, _) = parse_run_file_name(file_name)
            .with_context(|| format!("{file_name} is not named <instance>_<algo>_<seed>.csv"))?;
        let value = table
            .get(&instance)
            .with_context(|| format!("{} has no optimum for instance {instance:?}", a.optima.display()))?;
        let reference = Reference {
            kind: ReferenceKind::Optimum,
            value,
        };
        let (_, mut records) = read_runlog_csv(&path)?;
        apply_reference(&mut records, &reference)?;
        write_runlog_csv(&records, Some(&reference), &path)?;
        let last = records.last().and_then(|r| r.excess);
        writeln!(
            out,
            "{} final_excess {}",
            path.display(),
            last.map_or_else(|| "-".into(), |e| format!("{e:.8}"))
        )?;
    }
    Ok(())
}
