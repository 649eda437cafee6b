use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use linbai_core::bench::{
    render_plot, run_benchmark, trial_rng, write_csv, BenchConfig, BenchFile, BudgetSpec, PlotOptions,
    DEFAULT_TRIALS,
};
use linbai_core::design::{prune_support, solve_g_optimal, DEFAULT_EPS};
use linbai_core::geometry::{effective_dimension, DEFAULT_RANK_TOL};
use linbai_core::hardness::{compute_m, hardness_profile, lower_bound_exponents, theorem2_bound};
use linbai_core::instances::{read_instance_csv, sidecar_path, write_instance_csv, write_sidecar, Sidecar};
use linbai_core::{run_algorithm, Algorithm, InstanceSpec, LinearBanditInstance, RunOptions};

const JOBS_ENV: &str = "LINBAI_JOBS";

#[derive(Parser)]
#[command(name = "linbai", version, about = "Fixed-budget best-arm identification for linear bandits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the G-optimal design of an arm set.
    Design {
        /// CSV file with one arm per row.
        #[arg(long)]
        arms: PathBuf,
        #[arg(long, default_value_t = DEFAULT_EPS)]
        eps: f64,
        /// Support cap, or `none`. Defaults to d(d+1)/2.
        #[arg(long)]
        max_support: Option<String>,
        /// Weights CSV; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print gaps, hardness quantities and the error bound of an instance.
    Hardness {
        /// Instance file or generator spec.
        #[arg(long)]
        instance: String,
        #[arg(long)]
        budget: Option<u64>,
        /// Complexity parameter for the lower-bound expressions.
        #[arg(long)]
        a: Option<f64>,
        /// Seed for generator specs.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Generate an instance file and its `.cfg` sidecar.
    Gen {
        /// Generator spec, e.g. `dataset1:K=50` or `sphere:d=3;c=2`.
        #[arg(long)]
        spec: String,
        /// Abalone data file, used with `--spec abalone`.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one algorithm once.
    Run {
        #[arg(long)]
        algo: Algorithm,
        /// Instance file or generator spec.
        #[arg(long)]
        instance: String,
        #[arg(long)]
        budget: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Per-phase trace CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_EPS)]
        eps: f64,
        #[arg(long)]
        prior_scale: Option<f64>,
    },
    /// Monte-Carlo error rates over an (instance, algorithm, budget) grid.
    Bench(BenchArgs),
}

#[derive(clap::Args)]
struct BenchArgs {
    /// key = value file; flags given here take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Instance file or generator spec (repeatable).
    #[arg(long)]
    instance: Vec<String>,
    /// Repeatable; defaults to all four.
    #[arg(long)]
    algo: Vec<Algorithm>,
    /// Absolute (`450`) or per arm (`4K`); repeatable.
    #[arg(long)]
    budget: Vec<BudgetSpec>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Report CSV; standard output when omitted.
    #[arg(long)]
    out_csv: Option<PathBuf>,
    /// SVG path; one file per instance when several are plotted.
    #[arg(long)]
    out_plot: Option<PathBuf>,
    /// Worker threads (default from LINBAI_JOBS, else all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Fill the mean_trial_ms column.
    #[arg(long)]
    timing: bool,
    #[arg(long)]
    log_y: bool,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    prior_scale: Option<f64>,
}

fn parse_instance(s: &str) -> Result<InstanceSpec> {
    s.parse().with_context(|| format!("instance `{s}`"))
}

/// Builds the instance the same way trial 0 of a benchmark with this seed does.
fn build_instance(spec: &InstanceSpec, seed: u64) -> Result<LinearBanditInstance> {
    spec.build(&mut trial_rng(seed, 0, 0))
        .with_context(|| format!("building `{spec}`"))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("cannot write {}", path.display()))?,
    ))
}

fn design(arms: &Path, eps: f64, max_support: Option<&str>, out: Option<&Path>) -> Result<()> {
    let file = File::open(arms).with_context(|| format!("cannot open {}", arms.display()))?;
    let arms = read_instance_csv(file)?.arms;
    let d = arms.dim();
    let cap = match max_support {
        None => Some(d * (d + 1) / 2),
        Some(s) if s.eq_ignore_ascii_case("none") => None,
        Some(s) => Some(s.parse().with_context(|| format!("bad --max-support `{s}`"))?),
    };
    let mut design = solve_g_optimal(&arms, eps)?;
    if let Some(cap) = cap {
        design = prune_support(&design, &arms, cap, eps)?;
    }

    let mut text = String::from("arm_index,weight\n");
    for (i, w) in design.weights().iter().enumerate() {
        text.push_str(&format!("{i},{w}\n"));
    }
    match out {
        Some(path) => create(path)?.write_all(text.as_bytes())?,
        None => print!("{text}"),
    }
    let bound = (1.0 + eps) * d as f64;
    println!(
        "g = {} <= (1 + eps) d = {} : {}",
        design.g_value(),
        bound,
        if design.g_value() <= bound { "certified" } else { "NOT certified" }
    );
    println!("support = {}", design.support_size());
    Ok(())
}

fn hardness(instance: &str, budget: Option<u64>, a: Option<f64>, seed: u64) -> Result<()> {
    let inst = build_instance(&parse_instance(instance)?, seed)?;
    let k = inst.num_arms();
    let d = effective_dimension(inst.arms(), DEFAULT_RANK_TOL)?;
    let gaps = inst.gaps()?;
    let p = hardness_profile(&gaps, d, k)?;
    println!("K = {k}");
    println!("d = {d}");
    let gaps: Vec<String> = gaps.iter().map(f64::to_string).collect();
    println!("gaps = {}", gaps.join(","));
    println!("H1 = {}", p.h1);
    println!("H2 = {}", p.h2);
    println!("H1_lin = {}", p.h1_lin);
    println!("H2_lin = {}", p.h2_lin);
    if let Some(t) = budget {
        println!("m = {}", compute_m(t, k, d)?);
        println!("bound = {}", theorem2_bound(t, k, d, p.h2_lin)?);
        if let Some(a) = a {
            let lb = lower_bound_exponents(t, a, p.h1_lin, d);
            println!("lower_bound_a = {}", lb.known_complexity);
            println!("lower_bound_h1_lin = {}", lb.unknown_complexity);
            println!("budget_premise = {}", lb.budget_premise);
            println!("complexity_premise = {}", lb.complexity_premise);
        }
    } else if a.is_some() {
        bail!("--a needs --budget");
    }
    Ok(())
}

fn gen(spec: &str, data: Option<&Path>, seed: u64, out: &Path) -> Result<()> {
    let spec = match data {
        Some(data) => {
            let Some(rest) = spec.strip_prefix("abalone") else {
                bail!("--data only applies to `--spec abalone`");
            };
            let rest = rest.trim_start_matches(':');
            let sep = if rest.is_empty() { "" } else { ";" };
            format!("abalone:{}{sep}{rest}", data.display())
        }
        None => spec.to_string(),
    };
    let spec = parse_instance(&spec)?;
    let inst = build_instance(&spec, seed)?;
    let mut w = create(out)?;
    write_instance_csv(&inst, &mut w)?;
    w.flush()?;
    write_sidecar(
        &sidecar_path(out),
        &Sidecar {
            noise_std: Some(inst.noise_std()),
            seed: spec.is_random().then_some(seed),
        },
    )?;
    eprintln!("wrote {} (K = {}, d = {})", out.display(), inst.num_arms(), inst.dim());
    Ok(())
}

fn run(
    algo: Algorithm,
    instance: &str,
    budget: u64,
    seed: u64,
    trace: Option<&Path>,
    eps: f64,
    prior_scale: Option<f64>,
) -> Result<()> {
    let inst = build_instance(&parse_instance(instance)?, seed)?;
    let mut opts = RunOptions {
        eps,
        ..RunOptions::default()
    };
    if let Some(s) = prior_scale {
        opts.prior_scale = s;
    }
    let mut rng = trial_rng(seed, 0, algo.stream_id());
    let (out, tr) = run_algorithm(algo, &inst, budget, &opts, &mut rng)?;
    let label = |i: usize| inst.labels().and_then(|l| l.get(i)).cloned().unwrap_or_else(|| i.to_string());
    println!("output_arm = {out} ({})", label(out));
    println!("best_arm = {} ({})", inst.best_arm(), label(inst.best_arm()));
    println!("correct = {}", out == inst.best_arm());
    println!("total_pulls = {} of {budget}", tr.total_pulls);
    if let Some(path) = trace {
        let mut w = create(path)?;
        tr.write_csv(&mut w)?;
        w.flush()?;
    }
    Ok(())
}

fn env_jobs() -> Result<Option<usize>> {
    match std::env::var(JOBS_ENV) {
        Ok(v) if !v.trim().is_empty() => Ok(Some(
            v.trim().parse().with_context(|| format!("bad {JOBS_ENV} `{v}`"))?,
        )),
        _ => Ok(None),
    }
}

fn pick<T>(cli: Vec<T>, from_file: Vec<T>) -> Vec<T> {
    if cli.is_empty() {
        from_file
    } else {
        cli
    }
}

/// Returns whether every cell succeeded.
fn bench(args: BenchArgs) -> Result<bool> {
    let file = match &args.config {
        Some(path) => BenchFile::load(path).with_context(|| format!("reading {}", path.display()))?,
        None => BenchFile::default(),
    };
    let instances = pick(
        args.instance.iter().map(|s| parse_instance(s)).collect::<Result<Vec<_>>>()?,
        file.instances,
    );
    let mut algorithms = pick(args.algo, file.algorithms);
    if algorithms.is_empty() {
        algorithms = Algorithm::ALL.to_vec();
    }
    let budgets = pick(args.budget, file.budgets);

    let mut config = BenchConfig::new(instances, algorithms, budgets);
    config.n_trials = args.trials.or(file.trials).unwrap_or(DEFAULT_TRIALS);
    config.base_seed = args.seed.or(file.seed).unwrap_or(0);
    config.jobs = match args.jobs.or(file.jobs) {
        Some(j) => j,
        None => env_jobs()?.unwrap_or(0),
    };
    config.timing = args.timing || file.timing.unwrap_or(false);
    if let Some(eps) = args.eps.or(file.eps) {
        config.run_options.eps = eps;
    }
    if let Some(s) = args.prior_scale.or(file.prior_scale) {
        config.run_options.prior_scale = s;
    }
    let out_csv = args.out_csv.or(file.out_csv);
    let out_plot = args.out_plot.or(file.out_plot);
    let log_y = args.log_y || file.log_y.unwrap_or(false);

    let report = run_benchmark(&config)?;
    match &out_csv {
        Some(path) => {
            let mut w = create(path)?;
            write_csv(&report, &mut w)?;
            w.flush()?;
        }
        None => write_csv(&report, io::stdout().lock())?,
    }
    for (label, h) in &report.hardness {
        match h {
            Some(p) => eprintln!(
                "hardness {label}: H1 = {:.6e}, H2 = {:.6e}, H1_lin = {:.6e}, H2_lin = {:.6e}",
                p.h1, p.h2, p.h1_lin, p.h2_lin
            ),
            None => eprintln!("hardness {label}: unavailable"),
        }
    }
    if let Some(path) = &out_plot {
        for p in render_plot(&report, path, &PlotOptions { log_y })? {
            eprintln!("wrote {}", p.display());
        }
    }
    let mut ok = true;
    for c in report.failures() {
        ok = false;
        eprintln!(
            "error: cell {} / {} / T = {} failed: {}",
            c.instance,
            c.algorithm,
            c.budget,
            c.failure.as_deref().unwrap_or_default()
        );
    }
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Design {
            arms,
            eps,
            max_support,
            out,
        } => design(&arms, eps, max_support.as_deref(), out.as_deref()).map(|_| true),
        Command::Hardness {
            instance,
            budget,
            a,
            seed,
        } => hardness(&instance, budget, a, seed).map(|_| true),
        Command::Gen { spec, data, seed, out } => gen(&spec, data.as_deref(), seed, &out).map(|_| true),
        Command::Run {
            algo,
            instance,
            budget,
            seed,
            trace,
            eps,
            prior_scale,
        } => run(algo, &instance, budget, seed, trace.as_deref(), eps, prior_scale).map(|_| true),
        Command::Bench(args) => bench(args),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
