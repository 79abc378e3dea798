use crate::error::{Error, Result};

/// Daily margin `c_t = w_t - f` between the wholesale and retail prices.
#[derive(Debug, Clone, PartialEq)]
pub enum CostSequence {
    Constant { value: f64, bound: f64 },
    /// `center - sigma/2` on odd days, `center + sigma/2` on even days.
    Alternating { center: f64, sigma: f64, bound: f64 },
    /// Explicit values for days `1..=len`.
    Sequence { values: Vec<f64>, bound: f64 },
}

impl CostSequence {
    /// Constant cost with `c_bar = value`.
    pub fn constant(value: f64) -> Result<Self> {
        Self::constant_bounded(value, value)
    }

    pub fn constant_bounded(value: f64, bound: f64) -> Result<Self> {
        let seq = CostSequence::Constant { value, bound };
        seq.validate()?;
        Ok(seq)
    }

    pub fn alternating(center: f64, sigma: f64) -> Result<Self> {
        Self::alternating_bounded(center, sigma, center + 0.5 * sigma)
    }

    pub fn alternating_bounded(center: f64, sigma: f64, bound: f64) -> Result<Self> {
        let seq = CostSequence::Alternating { center, sigma, bound };
        seq.validate()?;
        Ok(seq)
    }

    pub fn explicit(values: Vec<f64>) -> Result<Self> {
        let bound = values.iter().copied().fold(0.0, f64::max);
        Self::explicit_bounded(values, bound)
    }

    pub fn explicit_bounded(values: Vec<f64>, bound: f64) -> Result<Self> {
        let seq = CostSequence::Sequence { values, bound };
        seq.validate()?;
        Ok(seq)
    }

    fn validate(&self) -> Result<()> {
        let bound = self.bound();
        if !(bound.is_finite() && bound >= 0.0) {
            return Err(Error::InvalidModel(format!("cost bound {bound} must be finite and >= 0")));
        }
        let within = |c: f64| c.is_finite() && (0.0..=bound).contains(&c);
        let ok = match self {
            CostSequence::Constant { value, .. } => within(*value),
            CostSequence::Alternating { center, sigma, .. } => {
                *sigma >= 0.0 && within(center - 0.5 * sigma) && within(center + 0.5 * sigma)
            }
            CostSequence::Sequence { values, .. } => !values.is_empty() && values.iter().all(|&c| within(c)),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidModel(format!("cost values must lie in [0, {bound}]")))
        }
    }

    /// `c_bar`.
    pub fn bound(&self) -> f64 {
        match self {
            CostSequence::Constant { bound, .. }
            | CostSequence::Alternating { bound, .. }
            | CostSequence::Sequence { bound, .. } => *bound,
        }
    }

    /// Cost on day `t >= 1`.
    pub fn cost_at(&self, t: usize) -> Result<f64> {
        match self {
            CostSequence::Constant { value, .. } => Ok(*value),
            CostSequence::Alternating { center, sigma, .. } => Ok(if t % 2 == 1 {
                center - 0.5 * sigma
            } else {
                center + 0.5 * sigma
            }),
            CostSequence::Sequence { values, .. } => match t.checked_sub(1).and_then(|i| values.get(i)) {
                Some(c) => Ok(*c),
                None => Err(Error::CostOutOfRange { index: t, len: values.len() }),
            },
        }
    }

    /// Days `1..=horizon` as a vector.
    pub fn materialize(&self, horizon: usize) -> Result<Vec<f64>> {
        (1..=horizon).map(|t| self.cost_at(t)).collect()
    }
}
