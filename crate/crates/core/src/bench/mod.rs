//! Seeded Monte-Carlo benchmarks over (instance, algorithm, budget) grids.
//!
//! Trial `t` seeds ChaCha8 with `base_seed + t`. The instance draw uses
//! stream 0 of that generator and each algorithm uses its own stream, so every
//! algorithm sees the same instance and a budget sweep reuses the same noise.
//! Trials may run in any order on any number of threads; results are folded
//! in trial order.

mod config;
mod plot;
mod report;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::algorithms::{run_algorithm, Algorithm, RunOptions};
use crate::bandit::LinearBanditInstance;
use crate::error::{Error, Result};
use crate::geometry::{effective_dimension, DEFAULT_RANK_TOL};
use crate::hardness::{hardness_profile, HardnessProfile};
use crate::instances::InstanceSpec;

pub use config::BenchFile;
pub use plot::{render_plot, PlotOptions};
pub use report::{read_csv, wilson_interval, write_csv, BenchReport, CellResult, CSV_HEADER, WILSON_Z};

pub const DEFAULT_TRIALS: usize = 1024;
const INSTANCE_STREAM: u64 = 0;

/// A budget either absolute or as a multiple of the number of arms (`4K`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BudgetSpec {
    Absolute(u64),
    PerArm(u64),
}

impl BudgetSpec {
    pub fn resolve(self, num_arms: usize) -> u64 {
        match self {
            BudgetSpec::Absolute(t) => t,
            BudgetSpec::PerArm(n) => n * num_arms as u64,
        }
    }
}

impl FromStr for BudgetSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::invalid(format!("bad budget `{s}` (expected e.g. 450 or 4K)"));
        let (spec, n) = match s.strip_suffix(['K', 'k']) {
            Some(n) => (BudgetSpec::PerArm as fn(u64) -> BudgetSpec, n),
            None => (BudgetSpec::Absolute as fn(u64) -> BudgetSpec, s),
        };
        let n: u64 = n.trim().parse().map_err(|_| bad())?;
        if n == 0 {
            return Err(bad());
        }
        Ok(spec(n))
    }
}

impl fmt::Display for BudgetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BudgetSpec::Absolute(t) => write!(f, "{t}"),
            BudgetSpec::PerArm(n) => write!(f, "{n}K"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub instances: Vec<InstanceSpec>,
    pub algorithms: Vec<Algorithm>,
    pub budgets: Vec<BudgetSpec>,
    pub n_trials: usize,
    pub base_seed: u64,
    /// Worker threads; 0 lets the pool decide and 1 runs on the calling
    /// thread. Ignored without the `parallel` feature.
    pub jobs: usize,
    pub run_options: RunOptions,
    /// Record per-trial wall-clock time. Off by default because it makes
    /// reports differ between otherwise identical runs.
    pub timing: bool,
}

impl BenchConfig {
    pub fn new(instances: Vec<InstanceSpec>, algorithms: Vec<Algorithm>, budgets: Vec<BudgetSpec>) -> Self {
        Self {
            instances,
            algorithms,
            budgets,
            n_trials: DEFAULT_TRIALS,
            base_seed: 0,
            jobs: 0,
            run_options: RunOptions::default(),
            timing: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.instances.is_empty() {
            return Err(Error::invalid("no instance given"));
        }
        if self.algorithms.is_empty() {
            return Err(Error::invalid("no algorithm given"));
        }
        if self.budgets.is_empty() {
            return Err(Error::invalid("no budget given"));
        }
        if self.n_trials == 0 {
            return Err(Error::invalid("trials must be at least 1"));
        }
        Ok(())
    }
}

/// The random generator for one stream of one trial.
pub fn trial_rng(base_seed: u64, trial: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed.wrapping_add(trial));
    rng.set_stream(stream);
    rng
}

type CellOutcome = std::result::Result<(bool, f64), String>;

struct TrialOutcome {
    cells: Vec<CellOutcome>,
    hardness: Option<HardnessProfile>,
}

fn profile_of(instance: &LinearBanditInstance) -> Option<HardnessProfile> {
    let dim = effective_dimension(instance.arms(), DEFAULT_RANK_TOL).ok()?;
    let gaps = instance.gaps().ok()?;
    hardness_profile(&gaps, dim, instance.num_arms()).ok()
}

fn run_trial(
    config: &BenchConfig,
    spec: &InstanceSpec,
    fixed: Option<&LinearBanditInstance>,
    budgets: &[u64],
    trial: u64,
) -> TrialOutcome {
    let n_cells = config.algorithms.len() * budgets.len();
    let drawn;
    let instance = match fixed {
        Some(inst) => inst,
        None => {
            let mut rng = trial_rng(config.base_seed, trial, INSTANCE_STREAM);
            match spec.build(&mut rng) {
                Ok(inst) => {
                    drawn = inst;
                    &drawn
                }
                Err(e) => {
                    return TrialOutcome {
                        cells: vec![Err(format!("trial {trial}: instance: {e}")); n_cells],
                        hardness: None,
                    }
                }
            }
        }
    };
    let mut cells = Vec::with_capacity(n_cells);
    for &algo in &config.algorithms {
        for &budget in budgets {
            let mut rng = trial_rng(config.base_seed, trial, algo.stream_id());
            let start = config.timing.then(Instant::now);
            let outcome = run_algorithm(algo, instance, budget, &config.run_options, &mut rng);
            let ms = start.map_or(0.0, |s| s.elapsed().as_secs_f64() * 1e3);
            cells.push(match outcome {
                Ok((out, _)) => Ok((out != instance.best_arm(), ms)),
                Err(e) => Err(format!("trial {trial}: {e}")),
            });
        }
    }
    TrialOutcome {
        cells,
        hardness: if fixed.is_some() { None } else { profile_of(instance) },
    }
}

fn run_trials_sequential<F>(n: usize, f: F) -> Vec<TrialOutcome>
where
    F: Fn(u64) -> TrialOutcome,
{
    (0..n as u64).map(f).collect()
}

/// `jobs == 1` stays on the calling thread, which is also the only mode
/// without the `parallel` feature.
#[cfg(feature = "parallel")]
fn run_trials<F>(n: usize, jobs: usize, f: F) -> Result<Vec<TrialOutcome>>
where
    F: Fn(u64) -> TrialOutcome + Sync + Send,
{
    use rayon::prelude::*;
    if jobs == 1 {
        return Ok(run_trials_sequential(n, f));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    Ok(pool.install(|| (0..n as u64).into_par_iter().map(&f).collect()))
}

#[cfg(not(feature = "parallel"))]
fn run_trials<F>(n: usize, _jobs: usize, f: F) -> Result<Vec<TrialOutcome>>
where
    F: Fn(u64) -> TrialOutcome,
{
    Ok(run_trials_sequential(n, f))
}

fn mean_profile(profiles: &[HardnessProfile]) -> Option<HardnessProfile> {
    if profiles.is_empty() {
        return None;
    }
    let n = profiles.len() as f64;
    let sum = |f: fn(&HardnessProfile) -> f64| profiles.iter().map(f).sum::<f64>() / n;
    Some(HardnessProfile {
        h1: sum(|p| p.h1),
        h2: sum(|p| p.h2),
        h1_lin: sum(|p| p.h1_lin),
        h2_lin: sum(|p| p.h2_lin),
    })
}

fn dedup<T: PartialEq + Clone>(items: &[T]) -> Vec<T> {
    let mut out: Vec<T> = Vec::with_capacity(items.len());
    for it in items {
        if !out.contains(it) {
            out.push(it.clone());
        }
    }
    out
}

pub fn run_benchmark(config: &BenchConfig) -> Result<BenchReport> {
    config.validate()?;
    let algorithms = dedup(&config.algorithms);
    let config = BenchConfig {
        algorithms,
        ..config.clone()
    };
    let mut report = BenchReport::default();
    for spec in dedup(&config.instances) {
        let label = spec.to_string();
        let fixed = if spec.is_random() {
            None
        } else {
            Some(spec.build(&mut trial_rng(config.base_seed, 0, INSTANCE_STREAM))?)
        };
        let num_arms = match (&fixed, &spec) {
            (Some(inst), _) => inst.num_arms(),
            (None, InstanceSpec::Dataset1 { num_arms, .. }) => *num_arms,
            (None, InstanceSpec::Sphere { dim, c, .. }) => c.pow(*dim as u32),
            (None, _) => unreachable!("only generators are random"),
        };
        let budgets = dedup(
            &config
                .budgets
                .iter()
                .map(|b| b.resolve(num_arms))
                .collect::<Vec<_>>(),
        );

        let outcomes = run_trials(config.n_trials, config.jobs, |t| {
            run_trial(&config, &spec, fixed.as_ref(), &budgets, t)
        })?;

        let profiles: Vec<HardnessProfile> = outcomes.iter().filter_map(|o| o.hardness).collect();
        let hardness = match &fixed {
            Some(inst) => profile_of(inst),
            None => mean_profile(&profiles),
        };
        report.hardness.push((label.clone(), hardness));

        let mut idx = 0;
        for &algo in &config.algorithms {
            for &budget in &budgets {
                let mut errors = 0usize;
                let mut total_ms = 0.0;
                let mut failure = None;
                for o in &outcomes {
                    match &o.cells[idx] {
                        Ok((wrong, ms)) => {
                            errors += usize::from(*wrong);
                            total_ms += ms;
                        }
                        Err(reason) => {
                            failure = Some(reason.clone());
                            break;
                        }
                    }
                }
                let n = config.n_trials;
                report.cells.push(match failure {
                    Some(reason) => CellResult::failed(&label, algo, budget, n, reason),
                    None => CellResult::new(
                        &label,
                        algo,
                        budget,
                        n,
                        errors,
                        config.timing.then(|| total_ms / n as f64),
                    ),
                });
                idx += 1;
            }
        }
    }
    Ok(report)
}
