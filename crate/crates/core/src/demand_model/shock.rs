//! Bounded, zero-mean demand shock laws.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};
use std::fmt;

use libm::{erf, erfc};
use rand::Rng;
use rand_distr::StandardNormal;
use statrs::function::erf::erfc_inv;

use crate::error::{Error, Result};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

// 8-point Gauss-Legendre rule on [-1, 1].
const GL_NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

fn gauss_legendre<F: FnMut(f64) -> f64>(lo: f64, hi: f64, panels: usize, mut f: F) -> f64 {
    let width = (hi - lo) / panels as f64;
    let half = 0.5 * width;
    let mut total = 0.0;
    for k in 0..panels {
        let mid = lo + (k as f64 + 0.5) * width;
        for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS.iter()) {
            total += w * (f(mid - half * x) + f(mid + half * x));
        }
    }
    total * half
}

fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

fn std_normal_quantile(p: f64) -> f64 {
    let x = -SQRT_2 * erfc_inv(2.0 * p);
    // One Newton step; erfc_inv alone is only good to ~1e-10 relative.
    let density = std_normal_density(x);
    if x.is_finite() && density > 0.0 {
        let err = if x <= 0.0 {
            std_normal_cdf(x) - p
        } else {
            (1.0 - p) - std_normal_cdf(-x)
        };
        x - err / density
    } else {
        x
    }
}

fn std_normal_density(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

#[derive(Debug, Clone, PartialEq)]
enum Law {
    Uniform {
        lo: f64,
        hi: f64,
    },
    /// Zero-mean normal with standard deviation `scale`, conditioned on
    /// `[lo, hi]` with `hi = -lo`.
    TruncatedNormal {
        scale: f64,
        lo: f64,
        hi: f64,
        /// Parent mass below `lo`.
        tail: f64,
        /// Parent mass inside `[lo, hi]`.
        mass: f64,
    },
    /// Sum of `count` independent draws of `base`.
    AggregateIid {
        base: Box<ShockDistribution>,
        count: usize,
    },
}

/// A shock law with bounded support `[lo, hi]`, zero mean and a CDF that is
/// strictly increasing on the support.
///
/// All supported laws are symmetric about zero, so their characteristic
/// functions are real.
#[derive(Debug, Clone, PartialEq)]
pub struct ShockDistribution(Law);

impl ShockDistribution {
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
            return Err(Error::InvalidDistribution(format!(
                "uniform support [{lo}, {hi}] must satisfy lo < hi"
            )));
        }
        if (lo + hi).abs() > 1e-12 * (hi - lo) {
            return Err(Error::InvalidDistribution(format!(
                "uniform [{lo}, {hi}] is not zero-mean (need hi = -lo)"
            )));
        }
        Ok(Self(Law::Uniform { lo, hi }))
    }

    /// Uniform on `[-half_width, half_width]`.
    pub fn symmetric_uniform(half_width: f64) -> Result<Self> {
        Self::uniform(-half_width, half_width)
    }

    pub fn truncated_normal(scale: f64, lo: f64, hi: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "truncated normal scale {scale} must be positive"
            )));
        }
        if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
            return Err(Error::InvalidDistribution(format!(
                "truncated normal support [{lo}, {hi}] must satisfy lo < hi"
            )));
        }
        if (lo + hi).abs() > 1e-12 * (hi - lo) {
            return Err(Error::InvalidDistribution(format!(
                "truncation [{lo}, {hi}] is not symmetric (need hi = -lo)"
            )));
        }
        let tail = std_normal_cdf(lo / scale);
        let mass = erf(hi / (scale * SQRT_2));
        if mass <= 0.0 {
            return Err(Error::InvalidDistribution(format!(
                "truncated normal [{lo}, {hi}] with scale {scale} has no mass"
            )));
        }
        Ok(Self(Law::TruncatedNormal {
            scale,
            lo,
            hi,
            tail,
            mass,
        }))
    }

    pub fn aggregate(base: ShockDistribution, count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidDistribution(
                "aggregate needs at least one component".into(),
            ));
        }
        Ok(Self(Law::AggregateIid {
            base: Box::new(base),
            count,
        }))
    }

    pub fn is_aggregate(&self) -> bool {
        matches!(self.0, Law::AggregateIid { .. })
    }

    /// `(lo, hi)` of the support.
    pub fn support(&self) -> (f64, f64) {
        match &self.0 {
            Law::Uniform { lo, hi } | Law::TruncatedNormal { lo, hi, .. } => (*lo, *hi),
            Law::AggregateIid { base, count } => {
                let (lo, hi) = base.support();
                (lo * *count as f64, hi * *count as f64)
            }
        }
    }

    pub fn mean(&self) -> f64 {
        0.0
    }

    pub fn variance(&self) -> f64 {
        match &self.0 {
            Law::Uniform { lo, hi } => (hi - lo).powi(2) / 12.0,
            Law::TruncatedNormal {
                scale, hi, mass, ..
            } => {
                let k = hi / scale;
                scale * scale * (1.0 - 2.0 * k * std_normal_density(k) / mass)
            }
            Law::AggregateIid { base, count } => base.variance() * *count as f64,
        }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }

    /// Density on the support. Unavailable in closed form for aggregates.
    pub fn density(&self, x: f64) -> Result<f64> {
        let (lo, hi) = self.support();
        match &self.0 {
            Law::AggregateIid { .. } => Err(Error::LipschitzUnavailable(self.to_string())),
            _ if x < lo || x > hi => Ok(0.0),
            Law::Uniform { lo, hi } => Ok(1.0 / (hi - lo)),
            Law::TruncatedNormal { scale, mass, .. } => {
                Ok(std_normal_density(x / scale) / (scale * mass))
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        if x <= lo {
            return 0.0;
        }
        if x >= hi {
            return 1.0;
        }
        match &self.0 {
            Law::Uniform { lo, hi } => (x - lo) / (hi - lo),
            Law::TruncatedNormal {
                scale, tail, mass, ..
            } => {
                if x <= 0.0 {
                    (std_normal_cdf(x / scale) - tail) / mass
                } else {
                    1.0 - (std_normal_cdf(-x / scale) - tail) / mass
                }
            }
            Law::AggregateIid { .. } => InversionTable::new(self, x.abs()).cdf(x),
        }
    }

    /// Lower quantile `inf { x : F(x) >= alpha }`.
    pub fn quantile(&self, alpha: f64) -> Result<f64> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::ProbabilityOutOfRange(alpha));
        }
        Ok(match &self.0 {
            Law::AggregateIid { .. } => self.aggregate_quantile(alpha),
            _ => self.quantile_unchecked(alpha),
        })
    }

    /// Inverse CDF for the closed-form laws; `u` may be 0.
    fn quantile_unchecked(&self, u: f64) -> f64 {
        match &self.0 {
            Law::Uniform { lo, hi } => lo + u * (hi - lo),
            Law::TruncatedNormal {
                scale,
                lo,
                hi,
                tail,
                mass,
            } => {
                let x = if u <= 0.5 {
                    scale * std_normal_quantile(tail + u * mass)
                } else {
                    -scale * std_normal_quantile(tail + (1.0 - u) * mass)
                };
                x.clamp(*lo, *hi)
            }
            Law::AggregateIid { .. } => unreachable!("aggregate quantiles go through inversion"),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.0 {
            Law::AggregateIid { base, count } => (0..*count).map(|_| base.sample(rng)).sum(),
            // Rejection from the untruncated normal when it rarely rejects.
            Law::TruncatedNormal { scale, hi, mass, .. } if *mass >= 0.5 => loop {
                let z: f64 = rng.sample(StandardNormal);
                let x = scale * z;
                if x.abs() <= *hi {
                    break x;
                }
            },
            _ => self.quantile_unchecked(rng.gen::<f64>()),
        }
    }

    /// Smallest `L` with `|x-y|/L <= |F(x)-F(y)| <= L|x-y|` on the support.
    pub fn bilipschitz_constant(&self) -> Result<f64> {
        match &self.0 {
            Law::Uniform { lo, hi } => {
                let f = 1.0 / (hi - lo);
                Ok(f.max(1.0 / f))
            }
            Law::TruncatedNormal {
                scale, hi, mass, ..
            } => {
                let peak = std_normal_density(0.0) / (scale * mass);
                let floor = std_normal_density(hi / scale) / (scale * mass);
                Ok(peak.max(1.0 / floor))
            }
            Law::AggregateIid { .. } => Err(Error::LipschitzUnavailable(self.to_string())),
        }
    }

    /// Characteristic function `E[cos(u X)]` (real by symmetry).
    pub fn characteristic(&self, u: f64) -> f64 {
        match &self.0 {
            Law::Uniform { hi, .. } => {
                let z = u * hi;
                if z.abs() < 1e-6 {
                    1.0 - z * z / 6.0
                } else {
                    z.sin() / z
                }
            }
            Law::TruncatedNormal {
                scale, hi, mass, ..
            } => {
                let panels = 16usize.max((u.abs() * hi / 1.5).ceil() as usize);
                let norm = 2.0 / (scale * mass);
                norm * gauss_legendre(0.0, *hi, panels, |x| {
                    (u * x).cos() * std_normal_density(x / scale)
                })
            }
            Law::AggregateIid { base, count } => base.characteristic(u).powi(*count as i32),
        }
    }

    /// Half-width of the innermost closed-form support.
    fn base_half_width(&self) -> f64 {
        match &self.0 {
            Law::Uniform { hi, .. } | Law::TruncatedNormal { hi, .. } => *hi,
            Law::AggregateIid { base, .. } => base.base_half_width(),
        }
    }

    fn aggregate_quantile(&self, alpha: f64) -> f64 {
        let (lo, hi) = self.support();
        let sd = self.std_dev();
        let mut left = lo.max(-12.0 * sd);
        let mut right = hi.min(12.0 * sd);
        let table = InversionTable::new(self, left.abs().max(right.abs()));
        if table.cdf(left) >= alpha {
            left = lo;
        }
        if table.cdf(right) < alpha {
            right = hi;
        }
        let table = if left == lo || right == hi {
            InversionTable::new(self, left.abs().max(right.abs()))
        } else {
            table
        };
        for _ in 0..200 {
            let mid = 0.5 * (left + right);
            if table.cdf(mid) >= alpha {
                right = mid;
            } else {
                left = mid;
            }
            if right - left <= 1e-14 * (1.0 + right.abs()) {
                break;
            }
        }
        right
    }
}

/// Quadrature table for the Gil-Pelaez inversion
/// `F(x) = 1/2 + (1/pi) int_0^inf sin(u x) phi(u) / u du`
/// of a symmetric law, valid for `|x| <= reach`.
struct InversionTable {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    lo: f64,
    hi: f64,
}

impl InversionTable {
    fn new(dist: &ShockDistribution, reach: f64) -> Self {
        let (lo, hi) = dist.support();
        let sd = dist.std_dev();
        // Extend the cutoff until phi(u)/u is negligible over [cutoff, 2 cutoff].
        let mut cutoff = 10.0 / sd;
        for _ in 0..20 {
            let worst = (1..=64)
                .map(|k| {
                    let u = cutoff * (1.0 + k as f64 / 64.0);
                    dist.characteristic(u).abs() / u
                })
                .fold(0.0, f64::max);
            if worst < 1e-15 {
                break;
            }
            cutoff *= 2.0;
        }
        let width = (cutoff / 256.0)
            .min(1.0 / reach.max(1e-12))
            .min(1.0 / dist.base_half_width());
        let panels = (cutoff / width).ceil() as usize;
        let width = cutoff / panels as f64;
        let mut nodes = Vec::with_capacity(8 * panels);
        let mut weights = Vec::with_capacity(8 * panels);
        let half = 0.5 * width;
        for k in 0..panels {
            let mid = (k as f64 + 0.5) * width;
            for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS.iter()) {
                for u in [mid - half * x, mid + half * x] {
                    nodes.push(u);
                    weights.push(w * half * dist.characteristic(u) / u / PI);
                }
            }
        }
        Self {
            nodes,
            weights,
            lo,
            hi,
        }
    }

    fn cdf(&self, x: f64) -> f64 {
        if x <= self.lo {
            return 0.0;
        }
        if x >= self.hi {
            return 1.0;
        }
        let integral: f64 = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(u, w)| w * (u * x).sin())
            .sum();
        (0.5 + integral).clamp(0.0, 1.0)
    }
}

impl fmt::Display for ShockDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            Law::Uniform { lo, hi } => write!(f, "uniform({lo},{hi})"),
            Law::TruncatedNormal { scale, lo, hi, .. } => {
                write!(f, "truncnormal({scale},{lo},{hi})")
            }
            Law::AggregateIid { base, count } => write!(f, "aggregate({base}x{count})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn unit_uniform() -> ShockDistribution {
        ShockDistribution::uniform(-0.5, 0.5).unwrap()
    }

    fn case_study_customer() -> ShockDistribution {
        ShockDistribution::truncated_normal(0.04, -0.4, 0.4).unwrap()
    }

    #[test]
    fn uniform_cdf_and_quantile() {
        let d = unit_uniform();
        assert_eq!(d.cdf(0.0), 0.5);
        assert!((d.cdf(-0.4) - 0.1).abs() < 1e-15);
        assert_eq!(d.quantile(0.5).unwrap(), 0.0);
        assert!((d.quantile(0.1).unwrap() + 0.4).abs() < 1e-15);
        assert_eq!(d.cdf(-3.0), 0.0);
        assert_eq!(d.cdf(3.0), 1.0);
    }

    #[test]
    fn truncated_normal_is_symmetric() {
        let d = case_study_customer();
        assert!((d.cdf(0.0) - 0.5).abs() < 1e-15);
        assert!(d.quantile(0.5).unwrap().abs() < 1e-15);
        for x in [-0.3, -0.05, 0.01, 0.2] {
            assert!((d.cdf(x) + d.cdf(-x) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn construction_rejects_bad_laws() {
        assert!(ShockDistribution::uniform(0.0, 0.0).is_err());
        assert!(ShockDistribution::uniform(-1.0, 2.0).is_err());
        assert!(ShockDistribution::truncated_normal(0.0, -1.0, 1.0).is_err());
        assert!(ShockDistribution::truncated_normal(1.0, -1.0, 0.5).is_err());
        assert!(ShockDistribution::aggregate(unit_uniform(), 0).is_err());
    }

    #[test]
    fn quantile_rejects_alpha_outside_unit_interval() {
        let d = unit_uniform();
        for a in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(d.quantile(a), Err(Error::ProbabilityOutOfRange(_))));
        }
    }

    #[test]
    fn bilipschitz_constants() {
        assert_eq!(unit_uniform().bilipschitz_constant().unwrap(), 1.0);
        let wide = ShockDistribution::uniform(-1.0, 1.0).unwrap();
        assert_eq!(wide.bilipschitz_constant().unwrap(), 2.0);

        // Density extremes evaluated directly: peak at 0, floor at the edge.
        let d = case_study_customer();
        let z = erf(10.0 / SQRT_2);
        let peak = INV_SQRT_2PI / (0.04 * z);
        let floor = INV_SQRT_2PI * (-50.0f64).exp() / (0.04 * z);
        let l = d.bilipschitz_constant().unwrap();
        assert!(l.is_finite() && l >= 1.0);
        assert!((l - 1.0 / floor).abs() / l < 1e-12);
        assert!(l > peak);

        let agg = ShockDistribution::aggregate(d, 10).unwrap();
        assert!(agg.bilipschitz_constant().is_err());
    }

    #[test]
    fn generalized_inverse_pair_on_grid() {
        let laws = [
            unit_uniform(),
            case_study_customer(),
            ShockDistribution::truncated_normal(1.0, -2.0, 2.0).unwrap(),
        ];
        for d in &laws {
            let (lo, hi) = d.support();
            for k in 1..200 {
                let x = lo + (hi - lo) * k as f64 / 200.0;
                let fx = d.cdf(x);
                if fx > 0.0 && fx < 1.0 {
                    // One ulp of F moves the inverse by eps / density.
                    let tol = 1e-12 * (1.0 + x.abs()) + 4.0 * f64::EPSILON / d.density(x).unwrap();
                    assert!(d.quantile(fx).unwrap() <= x + tol, "{d} at {x}");
                }
                let a = k as f64 / 200.0;
                assert!(d.cdf(d.quantile(a).unwrap()) >= a - 1e-12, "{d} at alpha {a}");
            }
        }
    }

    #[test]
    fn uniform_sample_mean_is_zero() {
        let d = unit_uniform();
        let mut rng = stream(11, 0);
        let n = 1_000_000;
        let mean = (0..n).map(|_| d.sample(&mut rng)).sum::<f64>() / n as f64;
        let sd = (1.0f64 / 12.0).sqrt();
        assert!(mean.abs() < 3.0 * sd / (n as f64).sqrt(), "mean {mean}");
    }

    #[test]
    fn empirical_cdf_matches_cdf() {
        for d in [unit_uniform(), case_study_customer()] {
            let mut rng = stream(5, 1);
            let n = 1_000_000;
            let mut xs: Vec<f64> = (0..n).map(|_| d.sample(&mut rng)).collect();
            xs.sort_by(f64::total_cmp);
            let sup = xs
                .iter()
                .enumerate()
                .map(|(i, &x)| {
                    let f = d.cdf(x);
                    (f - i as f64 / n as f64).abs().max((f - (i + 1) as f64 / n as f64).abs())
                })
                .fold(0.0, f64::max);
            assert!(sup < 0.005, "{d}: sup distance {sup}");
        }
    }

    #[test]
    fn truncated_normal_variance_matches_quadrature() {
        let d = ShockDistribution::truncated_normal(1.0, -1.5, 1.5).unwrap();
        let mass = gauss_legendre(-1.5, 1.5, 64, std_normal_density);
        let m2 = gauss_legendre(-1.5, 1.5, 64, |x| x * x * std_normal_density(x)) / mass;
        assert!((m2 - d.variance()).abs() < 1e-12, "{m2} vs {}", d.variance());
    }

    /// Irwin-Hall CDF for the sum of `n` U(0,1) draws.
    fn irwin_hall_cdf(n: usize, x: f64) -> f64 {
        let mut total = 0.0;
        let mut binom = 1.0;
        let mut fact = 1.0;
        for k in 1..=n {
            fact *= k as f64;
        }
        for k in 0..=(x.floor() as usize).min(n) {
            if k > 0 {
                binom *= (n - k + 1) as f64 / k as f64;
            }
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            total += sign * binom * (x - k as f64).powi(n as i32);
        }
        total / fact
    }

    #[test]
    fn aggregate_cdf_matches_irwin_hall() {
        for n in [3usize, 4, 6] {
            let d = ShockDistribution::aggregate(unit_uniform(), n).unwrap();
            for k in 1..20 {
                let x = -(n as f64) / 2.0 + n as f64 * k as f64 / 20.0;
                let exact = irwin_hall_cdf(n, x + n as f64 / 2.0);
                assert!((d.cdf(x) - exact).abs() < 1e-7, "n={n} x={x}: {} vs {exact}", d.cdf(x));
            }
        }
    }

    #[test]
    fn aggregate_quantile_matches_normal_limit_and_monte_carlo() {
        let agg = ShockDistribution::aggregate(case_study_customer(), 1000).unwrap();
        let q = agg.quantile(0.1).unwrap();
        // Truncation at ten standard deviations leaves the customer law normal
        // to ~1e-22, so the sum is N(0, 1000 * 0.04^2) to the same order.
        let normal = (1000.0f64).sqrt() * 0.04 * std_normal_quantile(0.1);
        assert!((q - normal).abs() < 1e-8, "{q} vs {normal}");
        assert!((q + 1.62).abs() < 0.01);

        // Fixed-seed Monte Carlo oracle: 1e5 aggregate draws.
        let mut rng = stream(2024, 9);
        let n = 100_000;
        let mut xs: Vec<f64> = (0..n).map(|_| agg.sample(&mut rng)).collect();
        xs.sort_by(f64::total_cmp);
        let mc = xs[(0.1 * n as f64).ceil() as usize - 1];
        // Quantile standard error sqrt(a(1-a)/n) / f(q) ~ 0.0068.
        assert!((q - mc).abs() < 0.03, "{q} vs Monte Carlo {mc}");
    }

    #[test]
    fn aggregate_support_and_variance() {
        let agg = ShockDistribution::aggregate(unit_uniform(), 8).unwrap();
        assert_eq!(agg.support(), (-4.0, 4.0));
        assert!((agg.variance() - 8.0 / 12.0).abs() < 1e-15);
        assert!((agg.cdf(0.0) - 0.5).abs() < 1e-12);
    }
}
