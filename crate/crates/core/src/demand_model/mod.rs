//! Ground truth: shock laws, the affine aggregate demand curve, customer
//! populations and wholesale-cost sequences.

mod cost;
mod population;
mod shock;

pub use cost::CostSequence;
pub use population::{make_population, Customer, CustomerPopulation, PopulationSpec};
pub use shock::ShockDistribution;

use rand::Rng;

use crate::error::{Error, Result};

/// Aggregate demand parameters: curtailment is `a * price + b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemandParams {
    /// Price sensitivity (kWh per $/kWh).
    pub a: f64,
    /// Baseline reduction (kWh).
    pub b: f64,
}

impl DemandParams {
    pub fn new(a: f64, b: f64) -> Self {
        Self { a, b }
    }

    pub fn distance(&self, other: &DemandParams) -> f64 {
        (self.a - other.a).hypot(self.b - other.b)
    }
}

/// Expected curtailment at price `p`.
#[inline]
pub fn lambda(p: f64, theta: DemandParams) -> f64 {
    theta.a * p + theta.b
}

/// The known parameter set `[a_lo, a_hi] x [0, b_hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamBox {
    pub a_lo: f64,
    pub a_hi: f64,
    pub b_hi: f64,
}

impl ParamBox {
    pub fn new(a_lo: f64, a_hi: f64, b_hi: f64) -> Result<Self> {
        let ok = a_lo.is_finite() && a_hi.is_finite() && b_hi.is_finite();
        if !ok || a_lo <= 0.0 || a_lo > a_hi || b_hi < 0.0 {
            return Err(Error::InvalidModel(format!(
                "parameter box [{a_lo}, {a_hi}] x [0, {b_hi}] needs 0 < a_lo <= a_hi and b_hi >= 0"
            )));
        }
        Ok(Self { a_lo, a_hi, b_hi })
    }

    pub fn contains(&self, theta: DemandParams) -> bool {
        (self.a_lo..=self.a_hi).contains(&theta.a) && (0.0..=self.b_hi).contains(&theta.b)
    }

    /// Euclidean projection; for a box this is componentwise clamping.
    pub fn project(&self, theta: DemandParams) -> DemandParams {
        DemandParams {
            a: theta.a.clamp(self.a_lo, self.a_hi),
            b: theta.b.clamp(0.0, self.b_hi),
        }
    }
}

/// Uniform bound on the prices a perturbed-myopic policy can post when its
/// estimates stay inside `bounds`.
pub fn price_bound(bounds: &ParamBox, cost_bound: f64, shock_lo: f64, shock_hi: f64) -> f64 {
    0.5 * (cost_bound - shock_lo / bounds.a_lo)
        .max(cost_bound - shock_lo / bounds.a_hi)
        .max((bounds.b_hi + shock_hi) / bounds.a_lo)
}

/// The true world a pricing policy faces.
#[derive(Debug, Clone)]
pub struct DemandModel {
    params: DemandParams,
    bounds: ParamBox,
    /// Law of the aggregate shock.
    shock: ShockDistribution,
    population: Option<CustomerPopulation>,
}

impl DemandModel {
    /// A model given directly by its aggregate parameters.
    pub fn direct(params: DemandParams, bounds: ParamBox, shock: ShockDistribution) -> Result<Self> {
        if !bounds.contains(params) {
            return Err(Error::InvalidModel(format!(
                "true parameters ({}, {}) lie outside the parameter box",
                params.a, params.b
            )));
        }
        Ok(Self {
            params,
            bounds,
            shock,
            population: None,
        })
    }

    /// A model backed by individual customers; the aggregate shock is the sum
    /// of the customers' independent shocks.
    pub fn from_population(population: CustomerPopulation, bounds: ParamBox) -> Result<Self> {
        let params = population.aggregate_params();
        let shock = population.aggregate_shock()?;
        if !bounds.contains(params) {
            return Err(Error::InvalidModel(format!(
                "population parameters ({}, {}) lie outside the parameter box",
                params.a, params.b
            )));
        }
        Ok(Self {
            params,
            bounds,
            shock,
            population: Some(population),
        })
    }

    pub fn params(&self) -> DemandParams {
        self.params
    }

    pub fn bounds(&self) -> &ParamBox {
        &self.bounds
    }

    pub fn shock(&self) -> &ShockDistribution {
        &self.shock
    }

    pub fn population(&self) -> Option<&CustomerPopulation> {
        self.population.as_ref()
    }

    /// Draw one aggregate shock. In population mode this is the sum of one
    /// draw per customer, consumed from `rng` in customer order.
    pub fn sample_shock<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.population {
            Some(pop) => (0..pop.len()).map(|_| pop.shock().sample(rng)).sum(),
            None => self.shock.sample(rng),
        }
    }

    /// Realized demand for a given aggregate shock.
    pub fn demand_with_shock(&self, p: f64, shock: f64) -> f64 {
        lambda(p, self.params) + shock
    }

    /// Draw a demand observation at price `p`. In population mode the result
    /// is the sum of the per-customer responses `a_i p + b_i + eps_i`.
    pub fn sample_demand<R: Rng + ?Sized>(&self, p: f64, rng: &mut R) -> f64 {
        match &self.population {
            Some(pop) => pop
                .customers()
                .iter()
                .map(|c| c.a * p + c.b + pop.shock().sample(rng))
                .sum(),
            None => self.demand_with_shock(p, self.shock.sample(rng)),
        }
    }

    /// `p_bar` for this model's box and aggregate shock support.
    pub fn price_bound(&self, cost_bound: f64) -> f64 {
        let (lo, hi) = self.shock.support();
        price_bound(&self.bounds, cost_bound, lo, hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn lambda_examples() {
        assert_eq!(lambda(0.5, DemandParams::new(1.0, 0.0)), 0.5);
        assert_eq!(lambda(0.0, DemandParams::new(2.0, 1.0)), 1.0);
        assert_eq!(lambda(1.0, DemandParams::new(2.0, 1.0)), 3.0);
    }

    #[test]
    fn price_bound_examples() {
        let b = ParamBox::new(1.0, 2.0, 1.0).unwrap();
        assert_eq!(price_bound(&b, 2.0, -1.0, 1.0), 1.5);
        let b = ParamBox::new(1.0, 2.0, 0.0).unwrap();
        assert_eq!(price_bound(&b, 2.0, 0.0, 0.0), 1.0);
    }

    #[test]
    fn price_bound_is_monotone() {
        let base = ParamBox::new(1.0, 3.0, 1.0).unwrap();
        let p0 = price_bound(&base, 1.5, -0.5, 0.5);
        assert!(price_bound(&base, 1.5, -0.8, 0.8) >= p0);
        assert!(price_bound(&ParamBox::new(1.0, 3.0, 2.0).unwrap(), 1.5, -0.5, 0.5) >= p0);
        assert!(price_bound(&ParamBox::new(0.5, 3.0, 1.0).unwrap(), 1.5, -0.5, 0.5) >= p0);
    }

    #[test]
    fn box_validation_and_projection() {
        assert!(ParamBox::new(0.0, 1.0, 1.0).is_err());
        assert!(ParamBox::new(2.0, 1.0, 1.0).is_err());
        assert!(ParamBox::new(1.0, 1.0, -0.1).is_err());
        let b = ParamBox::new(1.0, 3.0, 2.0).unwrap();
        assert_eq!(b.project(DemandParams::new(0.5, 2.5)), DemandParams::new(1.0, 2.0));
        assert_eq!(b.project(DemandParams::new(4.0, -1.0)), DemandParams::new(3.0, 0.0));
        assert_eq!(b.project(DemandParams::new(2.0, 1.0)), DemandParams::new(2.0, 1.0));
    }

    #[test]
    fn direct_demand_with_forced_shock() {
        let m = DemandModel::direct(
            DemandParams::new(1.0, 1.0),
            ParamBox::new(0.5, 2.0, 2.0).unwrap(),
            ShockDistribution::uniform(-0.5, 0.5).unwrap(),
        )
        .unwrap();
        assert_eq!(m.demand_with_shock(1.0, 0.0), 2.0);
    }

    #[test]
    fn direct_model_rejects_params_outside_box() {
        let r = DemandModel::direct(
            DemandParams::new(5.0, 1.0),
            ParamBox::new(0.5, 2.0, 2.0).unwrap(),
            ShockDistribution::uniform(-0.5, 0.5).unwrap(),
        );
        assert!(r.is_err());
    }

    #[test]
    fn case_study_population_mean_demand_at_zero_price() {
        let spec = PopulationSpec::case_study();
        let pop = make_population(&spec, &mut stream(3, 0)).unwrap();
        let b_total = pop.aggregate_params().b;
        let model = DemandModel::from_population(pop, spec.param_box().unwrap()).unwrap();
        let mut rng = stream(3, 1);
        let n = 100_000;
        let draws: Vec<f64> = (0..n).map(|_| model.sample_demand(0.0, &mut rng)).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let sd = model.shock().std_dev();
        assert!((mean - b_total).abs() < 4.0 * sd / (n as f64).sqrt(), "{mean} vs {b_total}");
    }
}
