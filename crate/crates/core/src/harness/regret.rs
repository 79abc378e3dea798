use super::episode::EpisodeTrace;
use crate::policy::risk_revenue;

/// Cumulative regret `a * sum_{k<=t} (p_k - p*_k)^2` and the per-period
/// squared price errors it is built from.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretSeries {
    pub cumulative: Vec<f64>,
    pub squared_error: Vec<f64>,
}

impl RegretSeries {
    pub fn from_errors(a: f64, price_errors: &[f64]) -> Self {
        let squared_error: Vec<f64> = price_errors.iter().map(|e| e * e).collect();
        let mut total = 0.0;
        let cumulative = squared_error
            .iter()
            .map(|s| {
                total += a * s;
                total
            })
            .collect();
        Self {
            cumulative,
            squared_error,
        }
    }

    pub fn total(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }
}

pub fn realized_regret(trace: &EpisodeTrace) -> RegretSeries {
    let errors: Vec<f64> = trace.records.iter().map(|r| r.price - r.oracle_price).collect();
    RegretSeries::from_errors(trace.params.a, &errors)
}

/// `sum_t r(p*_t) - r(p_t)` evaluated directly from the revenue function.
pub fn revenue_gap(trace: &EpisodeTrace) -> Vec<f64> {
    let mut total = 0.0;
    trace
        .records
        .iter()
        .map(|r| {
            let best = risk_revenue(r.oracle_price, r.cost, trace.params, trace.true_quantile);
            total += best - risk_revenue(r.price, r.cost, trace.params, trace.true_quantile);
            total
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::episode::{run_episode, tests::small_experiment};
    use crate::policy::PolicyKind;

    #[test]
    fn regret_examples() {
        let s = RegretSeries::from_errors(2.0, &[0.1, 0.2]);
        assert!((s.total() - 0.1).abs() < 1e-15);
        let zero = RegretSeries::from_errors(3.0, &[0.0; 5]);
        assert!(zero.cumulative.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn regret_equals_revenue_gap() {
        let exp = small_experiment(500);
        for kind in PolicyKind::ALL {
            let trace = run_episode(&exp, kind, 12, 0).unwrap();
            let regret = realized_regret(&trace);
            let gap = revenue_gap(&trace);
            for (x, y) in regret.cumulative.iter().zip(&gap) {
                assert!((x - y).abs() <= 1e-7 * x.abs() + 1e-13, "{kind}: {x} vs {y}");
            }
            assert!(regret.cumulative.windows(2).all(|w| w[1] >= w[0]));
        }
    }

    #[test]
    fn oracle_has_zero_regret() {
        let trace = run_episode(&small_experiment(100), PolicyKind::Oracle, 1, 0).unwrap();
        assert_eq!(realized_regret(&trace).total(), 0.0);
    }
}
