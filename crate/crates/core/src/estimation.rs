//! Online learning of the demand curve: least squares over the full price and
//! demand history, projection onto the parameter box, and the empirical
//! quantile of the resulting residuals.

use std::cmp::Ordering;

use crate::demand_model::{lambda, DemandParams, ParamBox};
use crate::error::{Error, Result};

/// Price/demand history with the sufficient statistics of the 2x2 normal
/// equations `sum [p 1]^T [p 1]`.
#[derive(Debug, Clone, Default)]
pub struct EstimatorState {
    prices: Vec<f64>,
    demands: Vec<f64>,
    sum_p: f64,
    sum_p2: f64,
    sum_d: f64,
    sum_pd: f64,
}

/// `i`-th smallest residual, `i = ceil(t * alpha)`, and the observation it
/// came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderStatistic {
    pub value: f64,
    /// 1-based rank.
    pub rank: usize,
    /// 0-based index of the observation that produced the residual.
    pub observation: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantileEstimate {
    pub value: f64,
    pub rank: usize,
    /// Price posted in the period whose residual was selected.
    pub price: f64,
}

/// Everything a refresh of the estimator produces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    /// Unconstrained least-squares solution.
    pub raw: DemandParams,
    /// Projection of `raw` onto the parameter box.
    pub params: DemandParams,
    pub quantile: QuantileEstimate,
    /// Number of observations used.
    pub observations: usize,
}

impl EstimatorState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn observe(&mut self, p: f64, d: f64) {
        self.prices.push(p);
        self.demands.push(d);
        self.sum_p += p;
        self.sum_p2 += p * p;
        self.sum_d += d;
        self.sum_pd += p * d;
    }

    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    pub fn demands(&self) -> &[f64] {
        &self.demands
    }

    /// `(sum p, sum p^2, sum D, sum p D)`.
    pub fn sums(&self) -> (f64, f64, f64, f64) {
        (self.sum_p, self.sum_p2, self.sum_d, self.sum_pd)
    }

    /// Determinant of the information matrix, `t * sum p^2 - (sum p)^2`.
    pub fn information_det(&self) -> f64 {
        let t = self.len() as f64;
        t * self.sum_p2 - self.sum_p * self.sum_p
    }

    /// Unconstrained least-squares fit of `D = a p + b`.
    pub fn lse(&self) -> Result<DemandParams> {
        let t = self.len() as f64;
        let det = self.information_det();
        if self.len() < 2 || det <= 1e-12 * (t * self.sum_p2).max(1.0) {
            return Err(Error::SingularInformation { det });
        }
        let a = (t * self.sum_pd - self.sum_p * self.sum_d) / det;
        let b = (self.sum_p2 * self.sum_d - self.sum_p * self.sum_pd) / det;
        Ok(DemandParams { a, b })
    }

    /// Residuals `D_k - lambda(p_k, theta)` over the whole history.
    pub fn residuals(&self, theta: DemandParams) -> Vec<f64> {
        self.prices
            .iter()
            .zip(&self.demands)
            .map(|(&p, &d)| d - lambda(p, theta))
            .collect()
    }

    /// Empirical `alpha`-quantile of the residuals under `theta`, with the
    /// price paired to the selected residual.
    pub fn quantile_estimate(&self, theta: DemandParams, alpha: f64) -> Result<QuantileEstimate> {
        let order = empirical_quantile(&self.residuals(theta), alpha)?;
        Ok(QuantileEstimate {
            value: order.value,
            rank: order.rank,
            price: self.prices[order.observation],
        })
    }

    /// Least squares, truncation, then the residual quantile.
    pub fn refresh(&self, bounds: &ParamBox, alpha: f64) -> Result<Estimate> {
        let raw = self.lse()?;
        let params = truncate(raw, bounds);
        let quantile = self.quantile_estimate(params, alpha)?;
        Ok(Estimate {
            raw,
            params,
            quantile,
            observations: self.len(),
        })
    }

    /// `J_t = sum (p_k - mean p)^2`, floored at zero.
    pub fn price_dispersion(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        (self.sum_p2 - self.sum_p * self.sum_p / self.len() as f64).max(0.0)
    }

    /// Smaller eigenvalue of the information matrix, the smaller root of
    /// `x^2 - x (t + sum p^2) + t J_t`.
    pub fn info_min_eigenvalue(&self) -> f64 {
        let t = self.len() as f64;
        let trace = t + self.sum_p2;
        let product = t * self.price_dispersion();
        let disc = (trace * trace - 4.0 * product).max(0.0);
        let big = 0.5 * (trace + disc.sqrt());
        if big == 0.0 {
            0.0
        } else {
            product / big
        }
    }

    /// Larger eigenvalue of the information matrix.
    pub fn info_max_eigenvalue(&self) -> f64 {
        let t = self.len() as f64;
        let trace = t + self.sum_p2;
        let disc = (trace * trace - 4.0 * t * self.price_dispersion()).max(0.0);
        0.5 * (trace + disc.sqrt())
    }
}

/// Projection of `theta` onto the box.
pub fn truncate(theta: DemandParams, bounds: &ParamBox) -> DemandParams {
    bounds.project(theta)
}

fn by_value_then_index(x: &(f64, usize), y: &(f64, usize)) -> Ordering {
    x.0.total_cmp(&y.0).then(x.1.cmp(&y.1))
}

/// `ceil(t * alpha)`-th order statistic. Ties are broken by observation
/// order, so the result matches a stable sort.
pub fn empirical_quantile(values: &[f64], alpha: f64) -> Result<OrderStatistic> {
    if values.is_empty() {
        return Err(Error::EmptySample);
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::ProbabilityOutOfRange(alpha));
    }
    let t = values.len();
    let rank = order_rank(t, alpha);
    let mut keyed: Vec<(f64, usize)> = values.iter().copied().zip(0..).collect();
    let (_, &mut (value, observation), _) = keyed.select_nth_unstable_by(rank - 1, by_value_then_index);
    Ok(OrderStatistic {
        value,
        rank,
        observation,
    })
}

/// `ceil(t * alpha)` clamped to `1..=t`. Products that land within a few ulps
/// of an integer are snapped so that `alpha = k / t` selects rank `k`.
pub fn order_rank(t: usize, alpha: f64) -> usize {
    let x = t as f64 * alpha;
    let nearest = x.round();
    let rank = if (x - nearest).abs() <= 4.0 * f64::EPSILON * x.max(1.0) {
        nearest
    } else {
        x.ceil()
    };
    (rank as usize).clamp(1, t)
}

/// Terms of the quantile-error chain
/// `|q_hat - q| <= |F_t^-1(alpha) - q| + sqrt(1 + p_(i)^2) ||theta_hat - theta||`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantileChain {
    /// `|q_hat - q|`.
    pub lhs: f64,
    /// `|F_t^-1(alpha) - q|`, using the empirical quantile of the true shocks.
    pub shock_term: f64,
    /// `sqrt(1 + p_(i)^2) ||theta_hat - theta||`.
    pub param_term: f64,
}

impl QuantileChain {
    pub fn slack(&self) -> f64 {
        self.shock_term + self.param_term - self.lhs
    }
}

pub fn quantile_error_chain(
    estimate: &Estimate,
    truth: DemandParams,
    true_quantile: f64,
    shock_quantile: f64,
) -> QuantileChain {
    let q = estimate.quantile;
    QuantileChain {
        lhs: (q.value - true_quantile).abs(),
        shock_term: (shock_quantile - true_quantile).abs(),
        param_term: (1.0 + q.price * q.price).sqrt() * estimate.params.distance(&truth),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn state(points: &[(f64, f64)]) -> EstimatorState {
        let mut s = EstimatorState::new();
        for &(p, d) in points {
            s.observe(p, d);
        }
        s
    }

    #[test]
    fn observe_updates_sums() {
        let s = state(&[(1.0, 3.0)]);
        assert_eq!(s.len(), 1);
        assert_eq!(s.sums(), (1.0, 1.0, 3.0, 3.0));
        let s = state(&[(1.0, 3.0), (2.0, 5.0)]);
        assert_eq!(s.sums(), (3.0, 5.0, 8.0, 13.0));
    }

    #[test]
    fn running_sums_match_recomputation() {
        let mut s = EstimatorState::new();
        let mut x = 0.3f64;
        for _ in 0..10_000 {
            x = (x * 3.7 + 0.1).fract();
            s.observe(x, 2.0 * x + 1.0 + 0.01 * (x * 17.0).sin());
        }
        let (sp, sp2, sd, spd) = s.sums();
        let rp: f64 = s.prices().iter().sum();
        let rp2: f64 = s.prices().iter().map(|p| p * p).sum();
        let rd: f64 = s.demands().iter().sum();
        let rpd: f64 = s.prices().iter().zip(s.demands()).map(|(p, d)| p * d).sum();
        for (a, b) in [(sp, rp), (sp2, rp2), (sd, rd), (spd, rpd)] {
            assert!((a - b).abs() <= 1e-9 * b.abs());
        }
        assert_eq!(s.len(), 10_000);
    }

    #[test]
    fn lse_interpolates_and_detects_singularity() {
        assert_eq!(state(&[(0.0, 1.0), (1.0, 3.0)]).lse().unwrap(), DemandParams::new(2.0, 1.0));
        assert_eq!(
            state(&[(0.0, 1.0), (1.0, 3.0), (2.0, 5.0)]).lse().unwrap(),
            DemandParams::new(2.0, 1.0)
        );
        assert!(matches!(
            state(&[(1.0, 2.0), (1.0, 4.0)]).lse(),
            Err(Error::SingularInformation { .. })
        ));
        assert!(state(&[(1.0, 2.0)]).lse().is_err());
    }

    #[test]
    fn truncation_examples() {
        let b = ParamBox::new(1.0, 3.0, 2.0).unwrap();
        assert_eq!(truncate(DemandParams::new(0.5, 2.5), &b), DemandParams::new(1.0, 2.0));
        assert_eq!(truncate(DemandParams::new(2.0, 1.0), &b), DemandParams::new(2.0, 1.0));
        assert_eq!(truncate(DemandParams::new(4.0, -1.0), &b), DemandParams::new(3.0, 0.0));
    }

    #[test]
    fn residual_examples() {
        let exact = state(&[(0.0, 1.0), (1.0, 3.0), (2.0, 5.0)]);
        assert!(exact.residuals(DemandParams::new(2.0, 1.0)).iter().all(|&r| r == 0.0));
        assert_eq!(state(&[(0.0, 1.0)]).residuals(DemandParams::new(1.0, 0.0)), vec![1.0]);
        let shifted = exact.residuals(DemandParams::new(2.0, 1.25));
        assert!(shifted.iter().all(|&r| (r + 0.25).abs() < 1e-15));
    }

    #[test]
    fn empirical_quantile_examples() {
        let r = [3.0, 1.0, 2.0];
        let q = empirical_quantile(&r, 0.5).unwrap();
        assert_eq!((q.rank, q.value, q.observation), (2, 2.0, 2));
        let q = empirical_quantile(&r, 0.1).unwrap();
        assert_eq!((q.rank, q.value, q.observation), (1, 1.0, 1));
        let q = empirical_quantile(&r, 1.0).unwrap();
        assert_eq!((q.rank, q.value, q.observation), (3, 3.0, 0));
        assert!(matches!(empirical_quantile(&[], 0.5), Err(Error::EmptySample)));
        assert!(empirical_quantile(&r, 0.0).is_err());
    }

    #[test]
    fn ties_resolve_by_observation_order() {
        let r = [1.0, 0.0, 1.0, 0.0, 1.0];
        assert_eq!(empirical_quantile(&r, 0.2).unwrap().observation, 1);
        assert_eq!(empirical_quantile(&r, 0.4).unwrap().observation, 3);
        assert_eq!(empirical_quantile(&r, 0.6).unwrap().observation, 0);
        assert_eq!(empirical_quantile(&r, 1.0).unwrap().observation, 4);
    }

    #[test]
    fn quantile_estimate_carries_paired_price() {
        let s = state(&[(0.5, 10.0), (0.7, 1.0), (0.9, 5.0)]);
        let q = s.quantile_estimate(DemandParams::new(0.0, 0.0), 0.3).unwrap();
        assert_eq!((q.value, q.price), (1.0, 0.7));
    }

    #[test]
    fn dispersion_examples() {
        assert_eq!(state(&[(0.4, 0.0), (0.4, 1.0), (0.4, 2.0)]).price_dispersion(), 0.0);
        assert!((state(&[(0.0, 0.0), (1.0, 0.0)]).price_dispersion() - 0.5).abs() < 1e-15);
        assert!((state(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)]).price_dispersion() - 2.0).abs() < 1e-15);
    }

    /// Direct eigen-solve of [[s2, s1], [s1, t]].
    fn eigen_oracle(s: &EstimatorState) -> (f64, f64) {
        let (s1, s2, _, _) = s.sums();
        let t = s.len() as f64;
        let half_tr = 0.5 * (s2 + t);
        let r = (0.25 * (s2 - t).powi(2) + s1 * s1).sqrt();
        (half_tr - r, half_tr + r)
    }

    #[test]
    fn min_eigenvalue_examples() {
        let single = state(&[(0.0, 1.0)]);
        assert_eq!(single.info_min_eigenvalue(), 0.0);
        let two = state(&[(0.0, 1.0), (1.0, 2.0)]);
        let expected = (3.0 - 5.0f64.sqrt()) / 2.0;
        assert!((two.info_min_eigenvalue() - expected).abs() < 1e-15);
        assert!((eigen_oracle(&two).0 - expected).abs() < 1e-15);
    }

    #[test]
    fn quantile_chain_with_exact_parameters() {
        let theta = DemandParams::new(2.0, 1.0);
        let shocks = [0.3, -0.2, 0.1, -0.4, 0.25];
        let prices = [0.5, 0.7, 0.6, 0.8, 0.55];
        let s = state(&prices.iter().zip(&shocks).map(|(&p, &e)| (p, lambda(p, theta) + e)).collect::<Vec<_>>());
        let q = s.quantile_estimate(theta, 0.4).unwrap();
        let est = Estimate {
            raw: theta,
            params: theta,
            quantile: q,
            observations: s.len(),
        };
        let shock_q = empirical_quantile(&shocks, 0.4).unwrap().value;
        let chain = quantile_error_chain(&est, theta, -0.1, shock_q);
        assert_eq!(chain.param_term, 0.0);
        assert!((chain.lhs - chain.shock_term).abs() < 1e-12);

        let zero = quantile_error_chain(
            &Estimate {
                quantile: QuantileEstimate { value: 0.0, rank: 1, price: 0.5 },
                ..est
            },
            theta,
            0.0,
            0.0,
        );
        assert_eq!((zero.lhs, zero.shock_term, zero.param_term), (0.0, 0.0, 0.0));
    }

    #[test]
    fn lse_error_matches_information_identity() {
        // theta_t - theta = J^-1 sum [p 1]^T eps
        let theta = DemandParams::new(120.0, 9.5);
        let mut s = EstimatorState::new();
        let (mut g1, mut g2) = (0.0, 0.0);
        let mut x = 0.123f64;
        for k in 0..2000 {
            x = (x * 7.31 + 0.17).fract();
            let p = 0.7 + 0.2 * x;
            let eps = 1.3 * ((k as f64) * 0.61).sin();
            s.observe(p, lambda(p, theta) + eps);
            g1 += p * eps;
            g2 += eps;
        }
        let (s1, s2, _, _) = s.sums();
        let t = s.len() as f64;
        let det = s2 * t - s1 * s1;
        let da = (t * g1 - s1 * g2) / det;
        let db = (s2 * g2 - s1 * g1) / det;
        let est = s.lse().unwrap();
        assert!(((est.a - theta.a) - da).abs() <= 1e-7 * da.abs().max(1e-3));
        assert!(((est.b - theta.b) - db).abs() <= 1e-7 * db.abs().max(1e-3));
    }

    proptest! {
        #[test]
        fn noiseless_recovery(a in 0.5f64..200.0, b in 0.0f64..100.0,
                              prices in proptest::collection::vec(0.0f64..2.0, 2..40)) {
            let spread = prices.iter().cloned().fold(f64::MIN, f64::max)
                - prices.iter().cloned().fold(f64::MAX, f64::min);
            prop_assume!(spread > 1e-3);
            let theta = DemandParams::new(a, b);
            let bounds = ParamBox::new(0.5, 200.0, 100.0).unwrap();
            let s = state(&prices.iter().map(|&p| (p, lambda(p, theta))).collect::<Vec<_>>());
            let est = truncate(s.lse().unwrap(), &bounds);
            prop_assert!(est.distance(&theta) <= 1e-9 * (1.0 + a + b) / spread.min(1.0));
        }

        #[test]
        fn truncation_contracts(a in -10.0f64..10.0, b in -10.0f64..10.0,
                                ta in 1.0f64..3.0, tb in 0.0f64..2.0) {
            let bounds = ParamBox::new(1.0, 3.0, 2.0).unwrap();
            let raw = DemandParams::new(a, b);
            let truth = DemandParams::new(ta, tb);
            prop_assert!(truncate(raw, &bounds).distance(&truth) <= raw.distance(&truth) + 1e-15);
            prop_assert!(bounds.contains(truncate(raw, &bounds)));
        }

        #[test]
        fn rank_k_over_t_selects_kth(values in proptest::collection::vec(-5.0f64..5.0, 1..60), k_frac in 0.0f64..1.0) {
            let t = values.len();
            let k = 1 + ((t - 1) as f64 * k_frac) as usize;
            let q = empirical_quantile(&values, k as f64 / t as f64).unwrap();
            let mut sorted = values.clone();
            sorted.sort_by(f64::total_cmp);
            prop_assert_eq!(q.rank, k);
            prop_assert_eq!(q.value, sorted[k - 1]);
        }

        #[test]
        fn eigen_identities(prices in proptest::collection::vec(-3.0f64..3.0, 1..50)) {
            let s = state(&prices.iter().map(|&p| (p, 0.0)).collect::<Vec<_>>());
            let (lo, hi) = eigen_oracle(&s);
            let lmin = s.info_min_eigenvalue();
            let lmax = s.info_max_eigenvalue();
            let t = s.len() as f64;
            prop_assert!(lmin >= 0.0);
            prop_assert!((lmin - lo.max(0.0)).abs() <= 1e-9 * hi);
            prop_assert!((lmax - hi).abs() <= 1e-12 * hi);
            let product = t * s.price_dispersion();
            prop_assert!((lmin * lmax - product).abs() <= 1e-9 * product.max(1e-300) + 1e-12 * hi);
        }
    }
}
