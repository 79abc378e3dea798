use std::fmt;

use super::episode::EpisodeTrace;
use crate::demand_model::ParamBox;
use crate::estimation::quantile_error_chain;
use crate::policy::{perturbation_delta, PolicyKind};

/// Floating-point slack allowed on an exact inequality.
pub fn tolerance(bound: f64) -> f64 {
    1e-9 * (1.0 + bound.abs())
}

/// Constants of the per-period price-error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kappas {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
}

impl Kappas {
    /// `k1 = sqrt(a_lo^2 + (b_hi + eps_hi)^2) / (2 a_lo^2)`, `k2 = 1/(2 a_lo)`,
    /// `k3 = k1 + k2 sqrt(1 + p_bar^2)`.
    pub fn new(bounds: &ParamBox, shock_hi: f64, price_bound: f64) -> Self {
        let a = bounds.a_lo;
        let k1 = (a * a + (bounds.b_hi + shock_hi).powi(2)).sqrt() / (2.0 * a * a);
        let k2 = 1.0 / (2.0 * a);
        Self {
            k1,
            k2,
            k3: k1 + k2 * (1.0 + price_bound * price_bound).sqrt(),
        }
    }
}

/// Tally of one inequality over many periods. Slack is `bound side - other
/// side`, so negative slack beyond tolerance is a violation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckOutcome {
    pub periods: usize,
    pub violations: usize,
    pub min_slack: f64,
    pub max_slack: f64,
    pub max_bound: f64,
}

impl Default for CheckOutcome {
    fn default() -> Self {
        Self {
            periods: 0,
            violations: 0,
            min_slack: f64::INFINITY,
            max_slack: f64::NEG_INFINITY,
            max_bound: f64::NEG_INFINITY,
        }
    }
}

impl CheckOutcome {
    /// Record `small <= large` where `bound` sets the tolerance scale.
    pub fn record(&mut self, small: f64, large: f64, bound: f64) {
        let slack = large - small;
        self.periods += 1;
        if !(slack >= -tolerance(bound)) {
            self.violations += 1;
        }
        self.min_slack = self.min_slack.min(slack);
        self.max_slack = self.max_slack.max(slack);
        self.max_bound = self.max_bound.max(bound);
    }

    pub fn merge(&mut self, other: &CheckOutcome) {
        self.periods += other.periods;
        self.violations += other.violations;
        self.min_slack = self.min_slack.min(other.min_slack);
        self.max_slack = self.max_slack.max(other.max_slack);
        self.max_bound = self.max_bound.max(other.max_bound);
    }
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} violations in {} periods (slack {:.3e}..{:.3e})",
            self.violations, self.periods, self.min_slack, self.max_slack
        )
    }
}

/// `lambda_min(J_t) (1 + p_bar^2) >= L_t` at every period. `L_t` is
/// recomputed from the trace's costs with the given `rho` and `r`.
pub fn check_lemma2(trace: &EpisodeTrace, rho: f64, r: f64, price_bound: f64) -> CheckOutcome {
    let costs: Vec<f64> = trace.records.iter().map(|x| x.cost).collect();
    let bounds = super::episode::info_lower_bounds(&costs, rho, r);
    let scale = 1.0 + price_bound * price_bound;
    let mut out = CheckOutcome::default();
    for (rec, &l) in trace.records.iter().zip(&bounds) {
        out.record(l, rec.lmin * scale, l);
    }
    out
}

/// For even `t`, `|p_{t+1} - p*_{t+1}| <= k3 ||theta_hat - theta|| +
/// k2 |F_{t-1}^-1 - q| + rho |delta_{t+1}|`, using the estimate in force at
/// period `t`.
pub fn check_price_error_bound(trace: &EpisodeTrace, kappas: Kappas) -> CheckOutcome {
    let cfg = trace.policy;
    let mut out = CheckOutcome::default();
    for pair in trace.records.windows(2) {
        let (now, next) = (&pair[0], &pair[1]);
        if now.t % 2 != 0 {
            continue;
        }
        let Some(est) = now.estimate else { continue };
        let delta = perturbation_delta(next.t, next.cost, now.cost, cfg.r);
        let rhs = kappas.k3 * est.params.distance(&trace.params)
            + kappas.k2 * (now.shock_quantile - trace.true_quantile).abs()
            + cfg.rho * delta.abs();
        out.record((next.price - next.oracle_price).abs(), rhs, rhs);
    }
    out
}

/// Quantile-error chain at every period that used a freshly computed
/// estimate.
pub fn check_quantile_chain(trace: &EpisodeTrace) -> CheckOutcome {
    let mut out = CheckOutcome::default();
    for rec in &trace.records {
        let Some(est) = rec.estimate else { continue };
        if est.observations + 1 != rec.t {
            continue;
        }
        let chain = quantile_error_chain(&est, trace.params, trace.true_quantile, rec.shock_quantile);
        let rhs = chain.shock_term + chain.param_term;
        out.record(chain.lhs, rhs, rhs);
    }
    out
}

/// All exact-inequality checks for one trace. The eigenvalue and price-error
/// checks only apply to the perturbed policy.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BoundChecks {
    pub lemma2: CheckOutcome,
    pub price_error: CheckOutcome,
    pub quantile_chain: CheckOutcome,
}

impl BoundChecks {
    pub fn evaluate(trace: &EpisodeTrace, kappas: Kappas) -> Self {
        let mut out = Self {
            quantile_chain: check_quantile_chain(trace),
            ..Self::default()
        };
        if trace.kind == PolicyKind::PerturbedMyopic {
            out.lemma2 = check_lemma2(trace, trace.policy.rho, trace.policy.r, trace.price_bound);
            out.price_error = check_price_error_bound(trace, kappas);
        }
        out
    }

    pub fn merge(&mut self, other: &BoundChecks) {
        self.lemma2.merge(&other.lemma2);
        self.price_error.merge(&other.price_error);
        self.quantile_chain.merge(&other.quantile_chain);
    }

    pub fn violations(&self) -> usize {
        self.lemma2.violations + self.price_error.violations + self.quantile_chain.violations
    }

    pub fn named(&self) -> [(&'static str, &CheckOutcome); 3] {
        [
            ("lemma2_eigenvalue", &self.lemma2),
            ("price_error_bound", &self.price_error),
            ("quantile_error_chain", &self.quantile_chain),
        ]
    }
}
