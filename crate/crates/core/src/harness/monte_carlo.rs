use super::checks::{BoundChecks, Kappas};
use super::episode::{run_episode_on, EpisodeTrace, Experiment, ShockPath};
use super::regret::realized_regret;
use super::slope::{loglog_slope, SlopeFit};
use crate::demand_model::{make_population, DemandModel, PopulationSpec};
use crate::error::{Error, Result};
use crate::policy::PolicyKind;
use crate::rng::replication_population_stream;

/// Environment variable that caps the number of replication worker threads.
pub const THREADS_ENV: &str = "DRLAB_THREADS";

#[derive(Debug, Clone)]
pub struct MonteCarloOptions {
    pub reps: usize,
    pub seed: u64,
    pub policies: Vec<PolicyKind>,
    /// Draw a fresh population for every replication from this spec instead
    /// of reusing the experiment's.
    pub redraw_population: Option<PopulationSpec>,
    /// Number of leading replications whose full traces are kept.
    pub keep_traces: usize,
    /// Worker threads; `None` reads [`THREADS_ENV`], then uses every core.
    pub threads: Option<usize>,
}

impl MonteCarloOptions {
    pub fn new(reps: usize, seed: u64, policies: Vec<PolicyKind>) -> Self {
        Self {
            reps,
            seed,
            policies,
            redraw_population: None,
            keep_traces: 0,
            threads: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationFailure {
    pub rep: u64,
    pub message: String,
}

/// Replication averages for one policy. Per-period vectors are indexed by
/// `t - 1`; entries are NaN where no estimate existed yet.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicySummary {
    pub kind: PolicyKind,
    pub completed: usize,
    pub failures: Vec<ReplicationFailure>,
    pub mean_regret: Vec<f64>,
    /// Half-width of the 95% normal interval for `mean_regret`.
    pub regret_ci: Vec<f64>,
    pub price_mse: Vec<f64>,
    pub theta_mse: Vec<f64>,
    pub quantile_mse: Vec<f64>,
    pub a_abs_err: Vec<f64>,
    pub b_abs_err: Vec<f64>,
    pub q_abs_err: Vec<f64>,
    pub clamped: usize,
    pub checks: BoundChecks,
    pub traces: Vec<EpisodeTrace>,
}

impl PolicySummary {
    pub fn final_regret(&self) -> f64 {
        self.mean_regret.last().copied().unwrap_or(f64::NAN)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloSummary {
    pub reps: usize,
    pub seed: u64,
    pub horizon: usize,
    pub policies: Vec<PolicySummary>,
}

impl MonteCarloSummary {
    pub fn policy(&self, kind: PolicyKind) -> Option<&PolicySummary> {
        self.policies.iter().find(|p| p.kind == kind)
    }

    pub fn failures(&self) -> usize {
        self.policies.iter().map(|p| p.failures.len()).sum()
    }
}

/// Log-log slope of the replication-mean parameter error over `[T/10, T]`.
pub fn mse_decay_check(summary: &PolicySummary) -> Result<SlopeFit> {
    let horizon = summary.theta_mse.len();
    loglog_slope(&summary.theta_mse, (horizon / 10).max(1), horizon)
}

struct RepMetrics {
    regret: Vec<f64>,
    price_sq: Vec<f64>,
    theta_sq: Vec<f64>,
    q_sq: Vec<f64>,
    a_abs: Vec<f64>,
    b_abs: Vec<f64>,
    q_abs: Vec<f64>,
    clamped: usize,
    checks: BoundChecks,
    trace: Option<EpisodeTrace>,
}

impl RepMetrics {
    fn from_trace(trace: EpisodeTrace, kappas: Kappas, keep: bool) -> Self {
        let regret = realized_regret(&trace);
        let theta = trace.params;
        let q = trace.true_quantile;
        let err = |f: &dyn Fn(&super::episode::PeriodRecord) -> f64| -> Vec<f64> {
            trace.records.iter().map(f).collect()
        };
        let theta_sq = err(&|r| r.estimate.map_or(f64::NAN, |e| e.params.distance(&theta).powi(2)));
        let q_sq = err(&|r| (r.q_hat() - q).powi(2));
        let a_abs = err(&|r| (r.a_hat() - theta.a).abs());
        let b_abs = err(&|r| (r.b_hat() - theta.b).abs());
        let q_abs = err(&|r| (r.q_hat() - q).abs());
        Self {
            checks: BoundChecks::evaluate(&trace, kappas),
            clamped: trace.clamp_count(),
            regret: regret.cumulative,
            price_sq: regret.squared_error,
            theta_sq,
            q_sq,
            a_abs,
            b_abs,
            q_abs,
            trace: keep.then_some(trace),
        }
    }
}

/// Welford accumulator over replications, one slot per period.
struct Moments {
    n: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Moments {
    fn new(len: usize) -> Self {
        Self {
            n: 0,
            mean: vec![0.0; len],
            m2: vec![0.0; len],
        }
    }

    fn push(&mut self, xs: &[f64]) {
        self.n += 1;
        let n = self.n as f64;
        for ((m, s), &x) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(xs) {
            let d = x - *m;
            *m += d / n;
            *s += d * (x - *m);
        }
    }

    fn mean(&self) -> Vec<f64> {
        if self.n == 0 {
            vec![f64::NAN; self.mean.len()]
        } else {
            self.mean.clone()
        }
    }

    fn ci95(&self) -> Vec<f64> {
        if self.n < 2 {
            return vec![0.0; self.mean.len()];
        }
        let n = self.n as f64;
        self.m2.iter().map(|s| 1.96 * (s / (n - 1.0)).sqrt() / n.sqrt()).collect()
    }
}

struct Accumulator {
    kind: PolicyKind,
    failures: Vec<ReplicationFailure>,
    regret: Moments,
    price_sq: Moments,
    theta_sq: Moments,
    q_sq: Moments,
    a_abs: Moments,
    b_abs: Moments,
    q_abs: Moments,
    clamped: usize,
    checks: BoundChecks,
    traces: Vec<EpisodeTrace>,
}

impl Accumulator {
    fn new(kind: PolicyKind, horizon: usize) -> Self {
        Self {
            kind,
            failures: vec![],
            regret: Moments::new(horizon),
            price_sq: Moments::new(horizon),
            theta_sq: Moments::new(horizon),
            q_sq: Moments::new(horizon),
            a_abs: Moments::new(horizon),
            b_abs: Moments::new(horizon),
            q_abs: Moments::new(horizon),
            clamped: 0,
            checks: BoundChecks::default(),
            traces: vec![],
        }
    }

    fn push(&mut self, rep: u64, result: Result<RepMetrics, String>) {
        match result {
            Err(message) => self.failures.push(ReplicationFailure { rep, message }),
            Ok(m) => {
                self.regret.push(&m.regret);
                self.price_sq.push(&m.price_sq);
                self.theta_sq.push(&m.theta_sq);
                self.q_sq.push(&m.q_sq);
                self.a_abs.push(&m.a_abs);
                self.b_abs.push(&m.b_abs);
                self.q_abs.push(&m.q_abs);
                self.clamped += m.clamped;
                self.checks.merge(&m.checks);
                self.traces.extend(m.trace);
            }
        }
    }

    fn finish(self) -> PolicySummary {
        PolicySummary {
            kind: self.kind,
            completed: self.regret.n,
            failures: self.failures,
            mean_regret: self.regret.mean(),
            regret_ci: self.regret.ci95(),
            price_mse: self.price_sq.mean(),
            theta_mse: self.theta_sq.mean(),
            quantile_mse: self.q_sq.mean(),
            a_abs_err: self.a_abs.mean(),
            b_abs_err: self.b_abs.mean(),
            q_abs_err: self.q_abs.mean(),
            clamped: self.clamped,
            checks: self.checks,
            traces: self.traces,
        }
    }
}

fn replication(
    experiment: &Experiment,
    options: &MonteCarloOptions,
    rep: u64,
) -> Vec<Result<RepMetrics, String>> {
    let world = match &options.redraw_population {
        None => Ok(experiment.clone()),
        Some(spec) => redraw(experiment, spec, options.seed, rep),
    };
    let world = match world {
        Ok(w) => w,
        Err(e) => return options.policies.iter().map(|_| Err(e.to_string())).collect(),
    };
    let path = ShockPath::sample(&world, options.seed, rep);
    let (_, shock_hi) = world.model().shock().support();
    let kappas = Kappas::new(world.model().bounds(), shock_hi, world.price_bound());
    let keep = (rep as usize) < options.keep_traces;
    options
        .policies
        .iter()
        .map(|&kind| {
            run_episode_on(&world, kind, &path, options.seed, rep)
                .map(|trace| RepMetrics::from_trace(trace, kappas, keep))
                .map_err(|e| e.to_string())
        })
        .collect()
}

fn redraw(experiment: &Experiment, spec: &PopulationSpec, seed: u64, rep: u64) -> Result<Experiment> {
    let population = make_population(spec, &mut replication_population_stream(seed, rep))?;
    let model = DemandModel::from_population(population, spec.param_box()?)?;
    experiment.with_model(model)
}

fn thread_count(options: &MonteCarloOptions) -> usize {
    options
        .threads
        .or_else(|| std::env::var(THREADS_ENV).ok()?.trim().parse().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

#[cfg(feature = "parallel")]
fn run_batch(
    experiment: &Experiment,
    options: &MonteCarloOptions,
    reps: std::ops::Range<u64>,
    threads: usize,
) -> Vec<Vec<Result<RepMetrics, String>>> {
    use rayon::prelude::*;
    if threads <= 1 {
        return reps.map(|rep| replication(experiment, options, rep)).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(|| {
            reps.into_par_iter()
                .map(|rep| replication(experiment, options, rep))
                .collect()
        }),
        Err(_) => reps.map(|rep| replication(experiment, options, rep)).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
fn run_batch(
    experiment: &Experiment,
    options: &MonteCarloOptions,
    reps: std::ops::Range<u64>,
    _threads: usize,
) -> Vec<Vec<Result<RepMetrics, String>>> {
    reps.map(|rep| replication(experiment, options, rep)).collect()
}

/// Run `options.reps` paired replications of every requested policy.
/// Replication `k` draws its shocks from a stream keyed by `(seed, k)`, so
/// all policies see the same shocks and results do not depend on the thread
/// count. A failed episode is recorded and left out of the averages.
pub fn run_monte_carlo(experiment: &Experiment, options: &MonteCarloOptions) -> Result<MonteCarloSummary> {
    if options.reps == 0 {
        return Err(Error::ConfigInvalid("replication count must be at least 1".into()));
    }
    if options.policies.is_empty() {
        return Err(Error::ConfigInvalid("no policies requested".into()));
    }
    let horizon = experiment.horizon();
    let threads = thread_count(options);
    let mut acc: Vec<Accumulator> = options
        .policies
        .iter()
        .map(|&kind| Accumulator::new(kind, horizon))
        .collect();
    let batch = (2 * threads).max(1) as u64;
    let mut start = 0u64;
    while start < options.reps as u64 {
        let end = (start + batch).min(options.reps as u64);
        for (offset, results) in run_batch(experiment, options, start..end, threads).into_iter().enumerate() {
            for (slot, result) in acc.iter_mut().zip(results) {
                slot.push(start + offset as u64, result);
            }
        }
        start = end;
    }
    Ok(MonteCarloSummary {
        reps: options.reps,
        seed: options.seed,
        horizon,
        policies: acc.into_iter().map(Accumulator::finish).collect(),
    })
}
