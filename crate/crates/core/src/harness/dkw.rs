use crate::demand_model::ShockDistribution;
use crate::error::{Error, Result};
use crate::estimation::empirical_quantile;
use crate::rng::{stream, DKW_STREAM};

/// `mu_1 = 2 / (L^2 ln 2)` for a bi-Lipschitz constant `L`.
pub fn concentration_rate(lipschitz: f64) -> f64 {
    2.0 / (lipschitz * lipschitz * std::f64::consts::LN_2)
}

/// `2 exp(-mu_1 gamma^2 t)`.
pub fn tail_bound(mu1: f64, gamma: f64, t: usize) -> f64 {
    2.0 * (-mu1 * gamma * gamma * t as f64).exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DkwCell {
    pub t: usize,
    pub gamma: f64,
    pub exceed: usize,
    pub reps: usize,
    pub empirical: f64,
    pub bound: f64,
    /// Three binomial standard errors of `empirical`.
    pub ci: f64,
}

impl DkwCell {
    pub fn ok(&self) -> bool {
        self.empirical <= self.bound + self.ci
    }
}

/// Monte Carlo tail probabilities `P(|F_t^-1(alpha) - F^-1(alpha)| > gamma)`
/// of the empirical quantile of `t` raw shocks. The same samples are reused
/// across the `gamma` grid.
pub fn dkw_experiment(
    dist: &ShockDistribution,
    alpha: f64,
    t_grid: &[usize],
    gamma_grid: &[f64],
    reps: usize,
    seed: u64,
) -> Result<Vec<DkwCell>> {
    if reps == 0 {
        return Err(Error::ConfigInvalid("dkw experiment needs at least one replication".into()));
    }
    if let Some(&t) = t_grid.iter().find(|&&t| t < 2) {
        return Err(Error::ConfigInvalid(format!("dkw grid point t = {t} below 2")));
    }
    let mu1 = concentration_rate(dist.bilipschitz_constant()?);
    let truth = dist.quantile(alpha)?;
    let mut rng = stream(seed, DKW_STREAM);
    let mut cells = Vec::with_capacity(t_grid.len() * gamma_grid.len());
    let mut sample = Vec::new();
    for &t in t_grid {
        let mut exceed = vec![0usize; gamma_grid.len()];
        for _ in 0..reps {
            sample.clear();
            sample.extend((0..t).map(|_| dist.sample(&mut rng)));
            let err = (empirical_quantile(&sample, alpha)?.value - truth).abs();
            for (count, &gamma) in exceed.iter_mut().zip(gamma_grid) {
                if err > gamma {
                    *count += 1;
                }
            }
        }
        for (&count, &gamma) in exceed.iter().zip(gamma_grid) {
            let p = count as f64 / reps as f64;
            cells.push(DkwCell {
                t,
                gamma,
                exceed: count,
                reps,
                empirical: p,
                bound: tail_bound(mu1, gamma, t),
                ci: 3.0 * (p * (1.0 - p) / reps as f64).sqrt(),
            });
        }
    }
    Ok(cells)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_rate() {
        let d = ShockDistribution::uniform(-0.5, 0.5).unwrap();
        let mu = concentration_rate(d.bilipschitz_constant().unwrap());
        assert!((mu - 2.885_390_081_777_927).abs() < 1e-12);
    }

    #[test]
    fn trivial_cells_when_bound_exceeds_one() {
        let d = ShockDistribution::uniform(-0.5, 0.5).unwrap();
        let cells = dkw_experiment(&d, 0.1, &[4], &[0.05], 200, 1).unwrap();
        assert!(cells[0].bound >= 1.0 && cells[0].ok());
    }

    #[test]
    fn small_grid_within_bound() {
        let d = ShockDistribution::uniform(-0.5, 0.5).unwrap();
        let cells = dkw_experiment(&d, 0.1, &[16, 64], &[0.1, 0.2], 2000, 3).unwrap();
        assert_eq!(cells.len(), 4);
        for c in &cells {
            assert!(c.ok(), "{c:?}");
            assert_eq!(c.empirical, c.exceed as f64 / 2000.0);
        }
    }

    #[test]
    fn rejects_degenerate_inputs() {
        let d = ShockDistribution::uniform(-0.5, 0.5).unwrap();
        assert!(dkw_experiment(&d, 0.1, &[1], &[0.1], 10, 0).is_err());
        assert!(dkw_experiment(&d, 0.1, &[4], &[0.1], 0, 0).is_err());
        let agg = ShockDistribution::aggregate(d, 3).unwrap();
        assert!(dkw_experiment(&agg, 0.1, &[4], &[0.1], 10, 0).is_err());
    }
}
