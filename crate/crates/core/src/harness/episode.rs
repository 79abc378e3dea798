use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use crate::demand_model::{price_bound, CostSequence, DemandModel, DemandParams};
use crate::error::{Error, Result};
use crate::estimation::{order_rank, Estimate, EstimatorState};
use crate::policy::{oracle_price, Policy, PolicyConfig, PolicyKind, Truth};
use crate::rng::shock_stream;

/// A fully specified experiment: the world, the cost path, the policy tuning
/// and the horizon. Truth-side constants are computed once on construction.
#[derive(Debug, Clone)]
pub struct Experiment {
    model: DemandModel,
    costs: CostSequence,
    policy: PolicyConfig,
    horizon: usize,
    true_quantile: f64,
    price_bound: f64,
    digest: String,
}

impl Experiment {
    pub fn new(model: DemandModel, costs: CostSequence, policy: PolicyConfig, horizon: usize) -> Result<Self> {
        policy.validate()?;
        if horizon < 3 {
            return Err(Error::ConfigInvalid(format!("horizon {horizon} must be at least 3")));
        }
        // Fail early on explicit cost lists that are too short.
        costs.cost_at(horizon)?;
        let true_quantile = model.shock().quantile(policy.alpha)?;
        let (lo, hi) = model.shock().support();
        let price_bound = price_bound(model.bounds(), costs.bound(), lo, hi);
        Ok(Self {
            model,
            costs,
            policy,
            horizon,
            true_quantile,
            price_bound,
            digest: String::new(),
        })
    }

    /// Same experiment on a different world with the same shock law.
    pub fn with_model(&self, model: DemandModel) -> Result<Self> {
        if model.shock() != self.model.shock() {
            return Err(Error::InvalidModel("replacement model changes the shock law".into()));
        }
        let (lo, hi) = model.shock().support();
        Ok(Self {
            price_bound: price_bound(model.bounds(), self.costs.bound(), lo, hi),
            model,
            ..self.clone()
        })
    }

    pub fn with_horizon(&self, horizon: usize) -> Result<Self> {
        Self::new(self.model.clone(), self.costs.clone(), self.policy, horizon)
            .map(|e| e.with_digest(self.digest.clone()))
    }

    /// Attach an identifier of the configuration that produced this
    /// experiment; it is copied into every trace.
    pub fn with_digest(mut self, digest: impl Into<String>) -> Self {
        self.digest = digest.into();
        self
    }

    pub fn model(&self) -> &DemandModel {
        &self.model
    }

    pub fn costs(&self) -> &CostSequence {
        &self.costs
    }

    pub fn policy(&self) -> &PolicyConfig {
        &self.policy
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// `F^-1(alpha)` of the aggregate shock.
    pub fn true_quantile(&self) -> f64 {
        self.true_quantile
    }

    pub fn price_bound(&self) -> f64 {
        self.price_bound
    }

    pub fn digest(&self) -> &str {
        &self.digest
    }

    pub fn truth(&self) -> Truth {
        Truth {
            params: self.model.params(),
            quantile: self.true_quantile,
        }
    }

    pub fn make_policy(&self, kind: PolicyKind) -> Result<Policy> {
        Policy::new(kind, self.policy, *self.model.bounds(), self.costs.bound(), self.truth())
    }
}

/// Running `ceil(n alpha)`-th order statistic of a growing sample, ties
/// broken by arrival order.
#[derive(Debug, Clone)]
pub struct RunningQuantile {
    alpha: f64,
    low: BinaryHeap<Key>,
    high: BinaryHeap<Reverse<Key>>,
    count: usize,
}

#[derive(Debug, Clone, Copy)]
struct Key(f64, usize);

impl PartialEq for Key {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

impl RunningQuantile {
    pub fn new(alpha: f64) -> Self {
        Self {
            alpha,
            low: BinaryHeap::new(),
            high: BinaryHeap::new(),
            count: 0,
        }
    }

    pub fn push(&mut self, x: f64) -> f64 {
        let key = Key(x, self.count);
        self.count += 1;
        match self.low.peek() {
            Some(top) if key > *top => self.high.push(Reverse(key)),
            _ => self.low.push(key),
        }
        let rank = order_rank(self.count, self.alpha);
        while self.low.len() > rank {
            let moved = self.low.pop().expect("nonempty");
            self.high.push(Reverse(moved));
        }
        while self.low.len() < rank {
            let Reverse(moved) = self.high.pop().expect("nonempty");
            self.low.push(moved);
        }
        self.low.peek().expect("rank >= 1").0
    }
}

/// The aggregate shocks of one replication together with the running
/// empirical `alpha`-quantile of the shocks themselves. Shared by every
/// policy run in that replication.
#[derive(Debug, Clone, PartialEq)]
pub struct ShockPath {
    pub shocks: Vec<f64>,
    /// `quantiles[n - 1]` is the empirical quantile of the first `n` shocks.
    pub quantiles: Vec<f64>,
}

impl ShockPath {
    pub fn sample(experiment: &Experiment, seed: u64, rep: u64) -> Self {
        let mut rng = shock_stream(seed, rep);
        let shocks: Vec<f64> = (0..experiment.horizon)
            .map(|_| experiment.model.sample_shock(&mut rng))
            .collect();
        Self::from_shocks(shocks, experiment.policy.alpha)
    }

    pub fn from_shocks(shocks: Vec<f64>, alpha: f64) -> Self {
        let mut running = RunningQuantile::new(alpha);
        let quantiles = shocks.iter().map(|&e| running.push(e)).collect();
        Self { shocks, quantiles }
    }

    fn quantile_after(&self, n: usize) -> f64 {
        if n == 0 {
            f64::NAN
        } else {
            self.quantiles[n - 1]
        }
    }
}

/// One period of an episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodRecord {
    pub t: usize,
    pub cost: f64,
    pub price: f64,
    pub oracle_price: f64,
    pub demand: f64,
    pub shock: f64,
    /// Estimate in force when `price` was set.
    pub estimate: Option<Estimate>,
    /// Empirical quantile of the true shocks over the estimate's sample.
    pub shock_quantile: f64,
    /// Smallest eigenvalue of the information matrix after period `t`.
    pub lmin: f64,
    /// Price dispersion `J_t` after period `t`.
    pub dispersion: f64,
    /// Lower bound `L_t` on the information growth.
    pub info_bound: f64,
    pub clamped: bool,
}

impl PeriodRecord {
    pub fn a_hat(&self) -> f64 {
        self.estimate.map_or(f64::NAN, |e| e.params.a)
    }

    pub fn b_hat(&self) -> f64 {
        self.estimate.map_or(f64::NAN, |e| e.params.b)
    }

    pub fn q_hat(&self) -> f64 {
        self.estimate.map_or(f64::NAN, |e| e.quantile.value)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeTrace {
    pub kind: PolicyKind,
    pub policy: PolicyConfig,
    pub rep: u64,
    pub seed: u64,
    pub digest: String,
    pub params: DemandParams,
    pub true_quantile: f64,
    pub price_bound: f64,
    pub records: Vec<PeriodRecord>,
}

impl EpisodeTrace {
    pub fn prices(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.price).collect()
    }

    pub fn clamp_count(&self) -> usize {
        self.records.iter().filter(|r| r.clamped).count()
    }
}

/// `L_t = (rho^2 m^(1-2r) + sum_{k<=m} (c_2k - c_2k-1)^2) / 8` with
/// `m = floor(t/2)`, evaluated for every `t = 1..=costs.len()`.
pub fn info_lower_bounds(costs: &[f64], rho: f64, r: f64) -> Vec<f64> {
    let mut swing = 0.0;
    (1..=costs.len())
        .map(|t| {
            let m = t / 2;
            if m == 0 {
                return 0.0;
            }
            if t % 2 == 0 {
                swing += (costs[t - 1] - costs[t - 2]).powi(2);
            }
            (rho * rho * (m as f64).powf(1.0 - 2.0 * r) + swing) / 8.0
        })
        .collect()
}

/// Run one episode, drawing shocks from the replication's own stream.
pub fn run_episode(experiment: &Experiment, kind: PolicyKind, seed: u64, rep: u64) -> Result<EpisodeTrace> {
    let path = ShockPath::sample(experiment, seed, rep);
    run_episode_on(experiment, kind, &path, seed, rep)
}

/// Run one episode against a given shock path. Each price uses data through
/// the previous period only; the oracle price is computed alongside.
pub fn run_episode_on(
    experiment: &Experiment,
    kind: PolicyKind,
    path: &ShockPath,
    seed: u64,
    rep: u64,
) -> Result<EpisodeTrace> {
    let horizon = experiment.horizon;
    if path.shocks.len() < horizon {
        return Err(Error::ConfigInvalid(format!(
            "shock path has {} periods, horizon is {horizon}",
            path.shocks.len()
        )));
    }
    let costs = experiment.costs.materialize(horizon)?;
    let truth = experiment.truth();
    let cfg = experiment.policy;
    let info_bounds = info_lower_bounds(&costs, cfg.rho, cfg.r);
    let mut policy = experiment.make_policy(kind)?;
    let mut info = EstimatorState::new();
    let mut records = Vec::with_capacity(horizon);
    for t in 1..=horizon {
        let c = costs[t - 1];
        let decision = policy.next_price(t, c).map_err(|e| Error::Episode {
            period: t,
            source: Box::new(e),
        })?;
        let shock = path.shocks[t - 1];
        let demand = experiment.model.demand_with_shock(decision.price, shock);
        policy.observe(decision.price, demand);
        info.observe(decision.price, demand);
        let shock_quantile = decision
            .estimate
            .map_or(f64::NAN, |e| path.quantile_after(e.observations));
        records.push(PeriodRecord {
            t,
            cost: c,
            price: decision.price,
            oracle_price: oracle_price(c, truth.params, truth.quantile, cfg.clamp),
            demand,
            shock,
            estimate: decision.estimate,
            shock_quantile,
            lmin: info.info_min_eigenvalue(),
            dispersion: info.price_dispersion(),
            info_bound: info_bounds[t - 1],
            clamped: decision.clamped,
        });
    }
    Ok(EpisodeTrace {
        kind,
        policy: cfg,
        rep,
        seed,
        digest: experiment.digest.clone(),
        params: truth.params,
        true_quantile: truth.quantile,
        price_bound: experiment.price_bound,
        records,
    })
}
