//! Pricing policies: the full-information oracle, the greedy (myopic) policy
//! and the perturbed myopic policy that alternates a greedy price with a
//! deliberately offset one.

use std::fmt;
use std::str::FromStr;

use crate::demand_model::{lambda, DemandParams, ParamBox};
use crate::error::{Error, Result};
use crate::estimation::{Estimate, EstimatorState};

/// Risk-sensitive revenue `(c - p)(a p + b + q)` guaranteed with
/// probability `1 - alpha` when `q` is the shock's `alpha`-quantile.
pub fn risk_revenue(p: f64, c: f64, theta: DemandParams, q: f64) -> f64 {
    (c - p) * (lambda(p, theta) + q)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClampMode {
    None,
    /// Project onto `[0, c_t]`.
    #[default]
    Interval,
}

impl ClampMode {
    /// Returns the clamped price and whether clamping changed it.
    pub fn apply(self, p: f64, c: f64) -> (f64, bool) {
        match self {
            ClampMode::None => (p, false),
            ClampMode::Interval => {
                let clamped = p.clamp(0.0, c.max(0.0));
                (clamped, clamped != p)
            }
        }
    }
}

fn unclamped_price(c: f64, theta: DemandParams, q: f64) -> f64 {
    0.5 * c - (theta.b + q) / (2.0 * theta.a)
}

/// Maximizer of [`risk_revenue`] over price: `c/2 - (b + q)/(2a)`.
pub fn oracle_price(c: f64, theta: DemandParams, q: f64, clamp: ClampMode) -> f64 {
    clamp.apply(unclamped_price(c, theta, q), c).0
}

/// Greedy price from the current estimates; identical in form to the oracle
/// price with estimates in place of the truth.
pub fn myopic_price(c_next: f64, estimate: DemandParams, q_hat: f64, clamp: ClampMode) -> f64 {
    oracle_price(c_next, estimate, q_hat, clamp)
}

/// `sgn(c_t - c_prev) * t^-r`, with `sgn(0) = +1`.
pub fn perturbation_delta(t: usize, c_t: f64, c_prev: f64, r: f64) -> f64 {
    let sign = if c_t - c_prev < 0.0 { -1.0 } else { 1.0 };
    sign * (t as f64).powf(-r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PolicyKind {
    Oracle,
    Myopic,
    PerturbedMyopic,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 3] = [PolicyKind::Oracle, PolicyKind::Myopic, PolicyKind::PerturbedMyopic];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Oracle => "oracle",
            PolicyKind::Myopic => "myopic",
            PolicyKind::PerturbedMyopic => "perturbed",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "oracle" => Ok(PolicyKind::Oracle),
            "myopic" => Ok(PolicyKind::Myopic),
            "perturbed" | "perturbed_myopic" | "perturbed-myopic" => Ok(PolicyKind::PerturbedMyopic),
            other => Err(Error::InvalidPolicy(format!("unknown policy '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyConfig {
    /// Risk level in (0, 1).
    pub alpha: f64,
    /// Perturbation magnitude.
    pub rho: f64,
    /// Perturbation decay exponent in [0, 1/2).
    pub r: f64,
    pub clamp: ClampMode,
    /// Overrides the default prices for periods 1 and 2.
    pub warm_start: Option<(f64, f64)>,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            rho: 0.19,
            r: 0.25,
            clamp: ClampMode::Interval,
            warm_start: None,
        }
    }
}

impl PolicyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidPolicy(format!("alpha {} out of (0,1)", self.alpha)));
        }
        if !(self.rho >= 0.0 && self.rho.is_finite()) {
            return Err(Error::InvalidPolicy(format!("rho {} must be >= 0", self.rho)));
        }
        if !(0.0..0.5).contains(&self.r) {
            return Err(Error::InvalidPolicy(format!("r {} out of [0, 1/2)", self.r)));
        }
        if let Some((p1, p2)) = self.warm_start {
            if !(p1.is_finite() && p2.is_finite()) || p1 == p2 {
                return Err(Error::InvalidPolicy(
                    "warm-start prices must be finite and distinct".into(),
                ));
            }
        }
        Ok(())
    }

    /// Prices for periods 1 and 2: `p1 = c1/2` and
    /// `p2 = c2/2 + sgn(c2 - c1) * rho' * 2^-r`, where `rho' = rho` except that
    /// a floor of `0.05 * c_bar` applies when `rho = 0` and the cost is flat.
    pub fn warm_start_prices(&self, c1: f64, c2: f64, cost_bound: f64) -> (f64, f64) {
        if let Some(w) = self.warm_start {
            return w;
        }
        let offset = if self.rho == 0.0 && c2 == c1 {
            0.05 * cost_bound
        } else {
            self.rho
        };
        (0.5 * c1, 0.5 * c2 + offset * perturbation_delta(2, c2, c1, self.r))
    }
}

/// True model quantities, visible only to the oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Truth {
    pub params: DemandParams,
    /// `F^-1(alpha)` of the aggregate shock.
    pub quantile: f64,
}

/// A posted price together with the state it was computed from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PricingDecision {
    pub price: f64,
    pub clamped: bool,
    /// Estimate in force when the price was set.
    pub estimate: Option<Estimate>,
    /// Whether the estimate was recomputed for this period.
    pub refreshed: bool,
}

/// A pricing policy advanced strictly in period order: call
/// [`Policy::next_price`] for period `t`, then [`Policy::observe`] with the
/// realized demand, then period `t + 1`.
#[derive(Debug, Clone)]
pub struct Policy {
    kind: PolicyKind,
    config: PolicyConfig,
    bounds: ParamBox,
    cost_bound: f64,
    truth: Option<Truth>,
    estimator: EstimatorState,
    estimate: Option<Estimate>,
    /// Most recent greedy-role price (`p_hat`).
    last_myopic: Option<f64>,
    last_cost: Option<f64>,
    next_period: usize,
}

impl Policy {
    pub fn oracle(truth: Truth, config: PolicyConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self::build(PolicyKind::Oracle, config, ParamBox::new(truth.params.a, truth.params.a, truth.params.b.max(0.0))?, 0.0, Some(truth)))
    }

    pub fn myopic(config: PolicyConfig, bounds: ParamBox, cost_bound: f64) -> Result<Self> {
        config.validate()?;
        Ok(Self::build(PolicyKind::Myopic, config, bounds, cost_bound, None))
    }

    pub fn perturbed_myopic(config: PolicyConfig, bounds: ParamBox, cost_bound: f64) -> Result<Self> {
        config.validate()?;
        Ok(Self::build(PolicyKind::PerturbedMyopic, config, bounds, cost_bound, None))
    }

    pub fn new(kind: PolicyKind, config: PolicyConfig, bounds: ParamBox, cost_bound: f64, truth: Truth) -> Result<Self> {
        match kind {
            PolicyKind::Oracle => Self::oracle(truth, config),
            PolicyKind::Myopic => Self::myopic(config, bounds, cost_bound),
            PolicyKind::PerturbedMyopic => Self::perturbed_myopic(config, bounds, cost_bound),
        }
    }

    fn build(kind: PolicyKind, config: PolicyConfig, bounds: ParamBox, cost_bound: f64, truth: Option<Truth>) -> Self {
        Self {
            kind,
            config,
            bounds,
            cost_bound,
            truth,
            estimator: EstimatorState::new(),
            estimate: None,
            last_myopic: None,
            last_cost: None,
            next_period: 1,
        }
    }

    pub fn kind(&self) -> PolicyKind {
        self.kind
    }

    pub fn config(&self) -> &PolicyConfig {
        &self.config
    }

    pub fn estimator(&self) -> &EstimatorState {
        &self.estimator
    }

    /// Period the next call to [`Policy::next_price`] must be for.
    pub fn next_period(&self) -> usize {
        self.next_period
    }

    /// Record the demand observed at the price posted in the current period.
    pub fn observe(&mut self, price: f64, demand: f64) {
        if self.kind != PolicyKind::Oracle {
            self.estimator.observe(price, demand);
        }
    }

    fn refresh(&mut self, period: usize) -> Result<Estimate> {
        match self.estimator.refresh(&self.bounds, self.config.alpha) {
            Ok(est) => {
                self.estimate = Some(est);
                Ok(est)
            }
            Err(Error::SingularInformation { .. }) => {
                self.estimate.ok_or(Error::EstimatorUnavailable { period })
            }
            Err(e) => Err(e),
        }
    }

    /// Price for period `t` given its cost `c`. All demand through `t - 1`
    /// must already have been observed.
    pub fn next_price(&mut self, t: usize, c: f64) -> Result<PricingDecision> {
        if t != self.next_period {
            return Err(Error::InvalidPolicy(format!(
                "expected period {}, got {t}",
                self.next_period
            )));
        }
        if self.kind != PolicyKind::Oracle && self.estimator.len() + 1 != t {
            return Err(Error::InvalidPolicy(format!(
                "period {t} priced with {} observations",
                self.estimator.len()
            )));
        }
        let clamp = self.config.clamp;
        let (raw, estimate, refreshed) = match self.kind {
            PolicyKind::Oracle => {
                let truth = self.truth.expect("oracle holds the truth");
                (unclamped_price(c, truth.params, truth.quantile), None, false)
            }
            _ if t <= 2 => {
                let c1 = self.last_cost.unwrap_or(c);
                let (p1, p2) = self.config.warm_start_prices(c1, c, self.cost_bound);
                (if t == 1 { p1 } else { p2 }, None, false)
            }
            PolicyKind::Myopic => {
                let est = self.refresh(t)?;
                (unclamped_price(c, est.params, est.quantile.value), Some(est), true)
            }
            PolicyKind::PerturbedMyopic => {
                let last = t - 1;
                if last % 2 == 1 {
                    let est = self.refresh(t)?;
                    (unclamped_price(c, est.params, est.quantile.value), Some(est), true)
                } else {
                    let base = self.last_myopic.expect("greedy price stored after period 2");
                    let prev = self.last_cost.expect("cost of the previous period");
                    let offset = 0.5 * (c - prev) + self.config.rho * perturbation_delta(t, c, prev, self.config.r);
                    (base + offset, self.estimate, false)
                }
            }
        };
        let (price, clamped) = clamp.apply(raw, c);
        // Periods 2 and every greedy period seed the next perturbed price.
        if t == 2 || refreshed {
            self.last_myopic = Some(price);
        }
        self.last_cost = Some(c);
        self.next_period += 1;
        Ok(PricingDecision {
            price,
            clamped,
            estimate,
            refreshed,
        })
    }
}
