use rand::Rng;

use super::{DemandParams, ParamBox, ShockDistribution};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Customer {
    pub a: f64,
    pub b: f64,
}

/// Customers responding independently to a common price, each with an
/// independent shock drawn from the same law.
#[derive(Debug, Clone)]
pub struct CustomerPopulation {
    customers: Vec<Customer>,
    shock: ShockDistribution,
}

impl CustomerPopulation {
    pub fn new(customers: Vec<Customer>, shock: ShockDistribution) -> Result<Self> {
        if customers.is_empty() {
            return Err(Error::InvalidModel("population needs at least one customer".into()));
        }
        let pop = Self { customers, shock };
        if pop.aggregate_params().a <= 0.0 {
            return Err(Error::InvalidModel("aggregate price sensitivity must be positive".into()));
        }
        Ok(pop)
    }

    pub fn len(&self) -> usize {
        self.customers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.customers.is_empty()
    }

    pub fn customers(&self) -> &[Customer] {
        &self.customers
    }

    /// Per-customer shock law.
    pub fn shock(&self) -> &ShockDistribution {
        &self.shock
    }

    pub fn aggregate_params(&self) -> DemandParams {
        let (a, b) = self
            .customers
            .iter()
            .fold((0.0, 0.0), |(a, b), c| (a + c.a, b + c.b));
        DemandParams { a, b }
    }

    pub fn aggregate_shock(&self) -> Result<ShockDistribution> {
        ShockDistribution::aggregate(self.shock.clone(), self.len())
    }

    /// Demand with explicit per-customer shocks (one per customer).
    pub fn demand_with_shocks(&self, p: f64, shocks: &[f64]) -> f64 {
        self.customers
            .iter()
            .zip(shocks)
            .map(|(c, e)| c.a * p + c.b + e)
            .sum()
    }
}

/// Recipe for drawing a population: `a_i ~ U[a_lo, a_hi]`, `b_i` from an
/// exponential with mean `b_mean` conditioned on `[0, b_cap]`, and a common
/// per-customer shock law.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationSpec {
    pub count: usize,
    pub a_lo: f64,
    pub a_hi: f64,
    pub b_mean: f64,
    pub b_cap: f64,
    pub shock: ShockDistribution,
}

impl PopulationSpec {
    /// 1000 customers, `a_i ~ U[0.04, 0.20]`, `b_i` truncated exponential
    /// (mean 0.01, capped at 0.1), shocks N(0, 0.04^2) truncated to [-0.4, 0.4].
    pub fn case_study() -> Self {
        Self {
            count: 1000,
            a_lo: 0.04,
            a_hi: 0.20,
            b_mean: 0.01,
            b_cap: 0.1,
            shock: ShockDistribution::truncated_normal(0.04, -0.4, 0.4)
                .expect("case-study shock law is valid"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.count < 1 {
            return Err(Error::InvalidModel("population needs N >= 1".into()));
        }
        if !(self.a_lo > 0.0 && self.a_lo <= self.a_hi && self.a_hi.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "customer sensitivity range [{}, {}] needs 0 < lo <= hi",
                self.a_lo, self.a_hi
            )));
        }
        if !(self.b_cap >= 0.0 && self.b_cap.is_finite()) {
            return Err(Error::InvalidModel(format!("baseline cap {} must be >= 0", self.b_cap)));
        }
        if self.b_cap > 0.0 && !(self.b_mean > 0.0 && self.b_mean.is_finite()) {
            return Err(Error::InvalidModel(format!("baseline mean {} must be > 0", self.b_mean)));
        }
        Ok(())
    }

    /// The box implied by summing the per-customer bounds.
    pub fn param_box(&self) -> Result<ParamBox> {
        let n = self.count as f64;
        ParamBox::new(n * self.a_lo, n * self.a_hi, n * self.b_cap)
    }

    fn draw_baseline<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.b_cap == 0.0 {
            return 0.0;
        }
        let rate = 1.0 / self.b_mean;
        let kept = -(-rate * self.b_cap).exp_m1();
        let u: f64 = rng.gen();
        (-(-u * kept).ln_1p() / rate).min(self.b_cap)
    }
}

pub fn make_population<R: Rng + ?Sized>(spec: &PopulationSpec, rng: &mut R) -> Result<CustomerPopulation> {
    spec.validate()?;
    let customers = (0..spec.count)
        .map(|_| {
            let u: f64 = rng.gen();
            let a = spec.a_lo + u * (spec.a_hi - spec.a_lo);
            let b = spec.draw_baseline(rng);
            Customer { a, b }
        })
        .collect();
    CustomerPopulation::new(customers, spec.shock.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn case_study_aggregate_sensitivity_within_sum_of_bounds() {
        let spec = PopulationSpec::case_study();
        for seed in 0..5 {
            let pop = make_population(&spec, &mut stream(seed, 0)).unwrap();
            let theta = pop.aggregate_params();
            assert!((40.0..=200.0).contains(&theta.a));
            assert!((0.0..=100.0).contains(&theta.b));
            assert!(pop.customers().iter().all(|c| (0.0..=0.1).contains(&c.b)));
        }
    }

    #[test]
    fn collapsed_single_customer() {
        let spec = PopulationSpec {
            count: 1,
            a_lo: 0.1,
            a_hi: 0.1,
            b_mean: 0.01,
            b_cap: 0.0,
            shock: ShockDistribution::uniform(-0.1, 0.1).unwrap(),
        };
        let pop = make_population(&spec, &mut stream(0, 0)).unwrap();
        assert_eq!(pop.aggregate_params(), DemandParams { a: 0.1, b: 0.0 });
    }

    #[test]
    fn rejects_empty_population() {
        let spec = PopulationSpec {
            count: 0,
            ..PopulationSpec::case_study()
        };
        assert!(make_population(&spec, &mut stream(0, 0)).is_err());
    }

    #[test]
    fn mean_aggregate_sensitivity_near_midpoint() {
        let spec = PopulationSpec::case_study();
        let mut rng = stream(77, 0);
        let reps = 100;
        let mean = (0..reps)
            .map(|_| make_population(&spec, &mut rng).unwrap().aggregate_params().a)
            .sum::<f64>()
            / reps as f64;
        // sd of one aggregate: sqrt(1000) * 0.16 / sqrt(12) ~ 1.46
        assert!((mean - 120.0).abs() < 4.0 * 1.46 / 10.0, "{mean}");
    }

    #[test]
    fn truncated_exponential_mean() {
        // Parent mean 0.01 conditioned on [0, 0.1]: mean = 1/rate - cap e^{-rate cap}/(1 - e^{-rate cap}).
        let spec = PopulationSpec::case_study();
        let rate: f64 = 100.0;
        let cap = 0.1;
        let exact = 1.0 / rate - cap * (-rate * cap).exp() / (1.0 - (-rate * cap).exp());
        let mut rng = stream(8, 0);
        let n = 400_000;
        let mean = (0..n).map(|_| spec.draw_baseline(&mut rng)).sum::<f64>() / n as f64;
        assert!((mean - exact).abs() < 4.0 * 0.01 / (n as f64).sqrt(), "{mean} vs {exact}");
    }

    #[test]
    fn aggregation_identity_with_zero_shocks() {
        let pop = CustomerPopulation::new(
            vec![Customer { a: 1.0, b: 0.0 }, Customer { a: 1.0, b: 1.0 }],
            ShockDistribution::uniform(-0.1, 0.1).unwrap(),
        )
        .unwrap();
        assert_eq!(pop.demand_with_shocks(1.0, &[0.0, 0.0]), 3.0);

        let spec = PopulationSpec::case_study();
        let pop = make_population(&spec, &mut stream(1, 0)).unwrap();
        let zeros = vec![0.0; pop.len()];
        let theta = pop.aggregate_params();
        for p in [0.0, 0.3, 0.75] {
            let direct = pop.demand_with_shocks(p, &zeros);
            let expected: f64 = pop.customers().iter().map(|c| c.a * p + c.b).sum();
            assert_eq!(direct, expected);
            assert!((direct - super::super::lambda(p, theta)).abs() < 1e-10);
        }
    }
}
