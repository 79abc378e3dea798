use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::demand_model::{
    make_population, CostSequence, DemandModel, DemandParams, ParamBox, PopulationSpec, ShockDistribution,
};
use crate::error::{Error, Result};
use crate::harness::Experiment;
use crate::policy::{ClampMode, PolicyConfig, PolicyKind};
use crate::rng::{stream, POPULATION_STREAM};

/// The bundled case-study configuration.
pub const CASE_STUDY: &str = include_str!("../../configs/casestudy.cfg");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelMode {
    /// Draw a customer population and aggregate it.
    Population,
    /// Give the aggregate parameters and shock law directly.
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShockKind {
    TruncNormal,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostKind {
    Constant,
    Alternating,
    Explicit,
}

/// Everything needed to reproduce a run. Field values are kept as written
/// so the configuration can be echoed and parsed back unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub mode: ModelMode,
    pub customers: usize,
    pub a_min: f64,
    pub a_max: f64,
    pub b_mean: f64,
    pub b_max: f64,
    pub shock: ShockKind,
    /// Normal scale of a truncated-normal shock; ignored for uniform.
    pub shock_scale: f64,
    /// Shocks live in `[-shock_bound, shock_bound]`.
    pub shock_bound: f64,
    pub redraw_population: bool,
    pub a: f64,
    pub b: f64,
    pub a_lo: f64,
    pub a_hi: f64,
    pub b_hi: f64,
    /// Number of independent base shocks summed into the aggregate shock
    /// in direct mode.
    pub shock_count: usize,

    pub alpha: f64,
    pub rho: f64,
    pub r: f64,
    pub clamp: ClampMode,
    pub warm_start: Option<(f64, f64)>,

    pub horizon: usize,

    pub cost: CostKind,
    pub retail: f64,
    pub wholesale: f64,
    pub cost_center: Option<f64>,
    pub cost_sigma: f64,
    pub cost_values: Vec<f64>,
    pub cost_bound: Option<f64>,

    pub reps: usize,
    pub seed: u64,
    pub policies: Vec<PolicyKind>,
    pub out: String,
    pub trace_reps: usize,

    pub dkw_half_width: f64,
    pub dkw_alpha: f64,
    pub dkw_t: Vec<usize>,
    pub dkw_gamma: Vec<f64>,
    pub dkw_reps: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mode: ModelMode::Population,
            customers: 1000,
            a_min: 0.04,
            a_max: 0.2,
            b_mean: 0.01,
            b_max: 0.1,
            shock: ShockKind::TruncNormal,
            shock_scale: 0.04,
            shock_bound: 0.4,
            redraw_population: false,
            a: 120.0,
            b: 10.0,
            a_lo: 40.0,
            a_hi: 200.0,
            b_hi: 100.0,
            shock_count: 1000,
            alpha: 0.1,
            rho: 0.19,
            r: 0.25,
            clamp: ClampMode::Interval,
            warm_start: None,
            horizon: 10_000,
            cost: CostKind::Constant,
            retail: 0.17,
            wholesale: 1.67,
            cost_center: None,
            cost_sigma: 0.2,
            cost_values: vec![],
            cost_bound: None,
            reps: 50,
            seed: 1,
            policies: vec![PolicyKind::Myopic, PolicyKind::PerturbedMyopic],
            out: "results".into(),
            trace_reps: 3,
            dkw_half_width: 0.5,
            dkw_alpha: 0.1,
            dkw_t: vec![4, 16, 64, 256],
            dkw_gamma: vec![0.05, 0.1, 0.2],
            dkw_reps: 10_000,
        }
    }
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn parse_list<T: std::str::FromStr>(s: &str) -> std::result::Result<Vec<T>, String> {
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| x.parse().map_err(|_| format!("bad list entry '{x}'")))
        .collect()
}

fn parse_scalar<T: std::str::FromStr>(s: &str) -> std::result::Result<T, String> {
    s.parse().map_err(|_| format!("cannot parse '{s}'"))
}

impl ExperimentConfig {
    /// Parse `key = value` lines; `#` starts a comment. Omitted keys keep
    /// their case-study defaults; `manifest.*` keys are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: BTreeMap<String, (String, usize)> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let Some((key, value)) = body.split_once('=') else {
                return Err(Error::ConfigParse {
                    line,
                    msg: format!("expected 'key = value', found '{body}'"),
                });
            };
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::ConfigParse { line, msg: "empty key".into() });
            }
            if key.starts_with("manifest.") {
                continue;
            }
            if entries.insert(key.to_string(), (value.trim().to_string(), line)).is_some() {
                return Err(Error::ConfigParse { line, msg: format!("duplicate key '{key}'") });
            }
        }
        let mut cfg = Self::default();
        let mut warm = (None, None);
        for (key, (value, line)) in &entries {
            cfg.apply(key, value, &mut warm)
                .map_err(|msg| Error::ConfigParse { line: *line, msg })?;
        }
        cfg.warm_start = match warm {
            (None, None) => None,
            (Some(p1), Some(p2)) => Some((p1, p2)),
            _ => {
                return Err(Error::ConfigInvalid(
                    "policy.warm_p1 and policy.warm_p2 must be given together".into(),
                ))
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn case_study() -> Self {
        Self::parse(CASE_STUDY).expect("bundled configuration parses")
    }

    fn apply(&mut self, key: &str, v: &str, warm: &mut (Option<f64>, Option<f64>)) -> std::result::Result<(), String> {
        match key {
            "model.mode" => {
                self.mode = match v {
                    "population" => ModelMode::Population,
                    "direct" => ModelMode::Direct,
                    _ => return Err(format!("model.mode must be population or direct, got '{v}'")),
                }
            }
            "model.customers" => self.customers = parse_scalar(v)?,
            "model.a_min" => self.a_min = parse_scalar(v)?,
            "model.a_max" => self.a_max = parse_scalar(v)?,
            "model.b_mean" => self.b_mean = parse_scalar(v)?,
            "model.b_max" => self.b_max = parse_scalar(v)?,
            "model.shock" => {
                self.shock = match v {
                    "truncnormal" => ShockKind::TruncNormal,
                    "uniform" => ShockKind::Uniform,
                    _ => return Err(format!("model.shock must be truncnormal or uniform, got '{v}'")),
                }
            }
            "model.shock_scale" => self.shock_scale = parse_scalar(v)?,
            "model.shock_bound" => self.shock_bound = parse_scalar(v)?,
            "model.redraw_population" => self.redraw_population = parse_scalar(v)?,
            "model.a" => self.a = parse_scalar(v)?,
            "model.b" => self.b = parse_scalar(v)?,
            "model.a_lo" => self.a_lo = parse_scalar(v)?,
            "model.a_hi" => self.a_hi = parse_scalar(v)?,
            "model.b_hi" => self.b_hi = parse_scalar(v)?,
            "model.shock_count" => self.shock_count = parse_scalar(v)?,
            "policy.alpha" => self.alpha = parse_scalar(v)?,
            "policy.rho" => self.rho = parse_scalar(v)?,
            "policy.r" => self.r = parse_scalar(v)?,
            "policy.clamp" => {
                self.clamp = match v {
                    "interval" => ClampMode::Interval,
                    "none" => ClampMode::None,
                    _ => return Err(format!("policy.clamp must be interval or none, got '{v}'")),
                }
            }
            "policy.warm_p1" => warm.0 = Some(parse_scalar(v)?),
            "policy.warm_p2" => warm.1 = Some(parse_scalar(v)?),
            "horizon" => self.horizon = parse_scalar(v)?,
            "cost.kind" => {
                self.cost = match v {
                    "constant" => CostKind::Constant,
                    "alternating" => CostKind::Alternating,
                    "explicit" => CostKind::Explicit,
                    _ => return Err(format!("cost.kind must be constant, alternating or explicit, got '{v}'")),
                }
            }
            "cost.retail" => self.retail = parse_scalar(v)?,
            "cost.wholesale" => self.wholesale = parse_scalar(v)?,
            "cost.center" => self.cost_center = Some(parse_scalar(v)?),
            "cost.sigma" => self.cost_sigma = parse_scalar(v)?,
            "cost.values" => self.cost_values = parse_list(v)?,
            "cost.bound" => self.cost_bound = Some(parse_scalar(v)?),
            "run.reps" => self.reps = parse_scalar(v)?,
            "run.seed" => self.seed = parse_scalar(v)?,
            "run.policies" => {
                self.policies = parse_list::<String>(v)?
                    .iter()
                    .map(|s| s.parse::<PolicyKind>().map_err(|e| e.to_string()))
                    .collect::<std::result::Result<_, _>>()?
            }
            "run.out" => self.out = v.to_string(),
            "run.trace_reps" => self.trace_reps = parse_scalar(v)?,
            "verify.dkw_half_width" => self.dkw_half_width = parse_scalar(v)?,
            "verify.dkw_alpha" => self.dkw_alpha = parse_scalar(v)?,
            "verify.dkw_t" => self.dkw_t = parse_list(v)?,
            "verify.dkw_gamma" => self.dkw_gamma = parse_list(v)?,
            "verify.dkw_reps" => self.dkw_reps = parse_scalar(v)?,
            _ => return Err(format!("unknown key '{key}'")),
        }
        Ok(())
    }

    /// Check every invariant that does not require building the model.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::ConfigInvalid(m));
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha out of (0,1)".into());
        }
        if self.horizon < 3 {
            return bad(format!("horizon {} must be at least 3", self.horizon));
        }
        if self.reps < 1 {
            return bad("run.reps must be at least 1".into());
        }
        if self.policies.is_empty() {
            return bad("run.policies is empty".into());
        }
        if !(self.dkw_half_width > 0.0) || !(self.dkw_alpha > 0.0 && self.dkw_alpha < 1.0) {
            return bad("verify.dkw_half_width must be > 0 and verify.dkw_alpha in (0,1)".into());
        }
        self.policy_config().validate()?;
        self.cost_sequence()?;
        match self.mode {
            ModelMode::Population => self.population_spec()?.validate()?,
            ModelMode::Direct => {
                let bounds = self.direct_box()?;
                let theta = DemandParams::new(self.a, self.b);
                if !bounds.contains(theta) {
                    return bad(format!(
                        "a_lo <= a <= a_hi and 0 <= b <= b_hi violated by (a, b) = ({}, {})",
                        self.a, self.b
                    ));
                }
                if self.shock_count < 1 {
                    return bad("model.shock_count must be at least 1".into());
                }
                self.base_shock()?;
            }
        }
        Ok(())
    }

    pub fn policy_config(&self) -> PolicyConfig {
        PolicyConfig {
            alpha: self.alpha,
            rho: self.rho,
            r: self.r,
            clamp: self.clamp,
            warm_start: self.warm_start,
        }
    }

    pub fn base_shock(&self) -> Result<ShockDistribution> {
        match self.shock {
            ShockKind::TruncNormal => {
                ShockDistribution::truncated_normal(self.shock_scale, -self.shock_bound, self.shock_bound)
            }
            ShockKind::Uniform => ShockDistribution::symmetric_uniform(self.shock_bound),
        }
    }

    pub fn population_spec(&self) -> Result<PopulationSpec> {
        Ok(PopulationSpec {
            count: self.customers,
            a_lo: self.a_min,
            a_hi: self.a_max,
            b_mean: self.b_mean,
            b_cap: self.b_max,
            shock: self.base_shock()?,
        })
    }

    fn direct_box(&self) -> Result<ParamBox> {
        ParamBox::new(self.a_lo, self.a_hi, self.b_hi)
    }

    pub fn cost_sequence(&self) -> Result<CostSequence> {
        let margin = self.cost_center.unwrap_or(self.wholesale - self.retail);
        match (self.cost, self.cost_bound) {
            (CostKind::Constant, None) => CostSequence::constant(margin),
            (CostKind::Constant, Some(b)) => CostSequence::constant_bounded(margin, b),
            (CostKind::Alternating, None) => CostSequence::alternating(margin, self.cost_sigma),
            (CostKind::Alternating, Some(b)) => CostSequence::alternating_bounded(margin, self.cost_sigma, b),
            (CostKind::Explicit, None) => CostSequence::explicit(self.cost_values.clone()),
            (CostKind::Explicit, Some(b)) => CostSequence::explicit_bounded(self.cost_values.clone(), b),
        }
    }

    /// The world for replication-independent runs. In population mode the
    /// population is drawn once from the run seed.
    pub fn demand_model(&self) -> Result<DemandModel> {
        match self.mode {
            ModelMode::Population => {
                let spec = self.population_spec()?;
                let population = make_population(&spec, &mut stream(self.seed, POPULATION_STREAM))?;
                DemandModel::from_population(population, spec.param_box()?)
            }
            ModelMode::Direct => {
                let base = self.base_shock()?;
                let shock = if self.shock_count == 1 {
                    base
                } else {
                    ShockDistribution::aggregate(base, self.shock_count)?
                };
                DemandModel::direct(DemandParams::new(self.a, self.b), self.direct_box()?, shock)
            }
        }
    }

    pub fn experiment(&self) -> Result<Experiment> {
        Experiment::new(self.demand_model()?, self.cost_sequence()?, self.policy_config(), self.horizon)
            .map(|e| e.with_digest(self.digest()))
    }

    /// Canonical `key = value` listing of every field, sorted by key.
    pub fn echo(&self) -> String {
        let mut kv: BTreeMap<&str, String> = BTreeMap::new();
        let mode = match self.mode {
            ModelMode::Population => "population",
            ModelMode::Direct => "direct",
        };
        kv.insert("model.mode", mode.into());
        kv.insert("model.customers", self.customers.to_string());
        kv.insert("model.a_min", self.a_min.to_string());
        kv.insert("model.a_max", self.a_max.to_string());
        kv.insert("model.b_mean", self.b_mean.to_string());
        kv.insert("model.b_max", self.b_max.to_string());
        let shock = match self.shock {
            ShockKind::TruncNormal => "truncnormal",
            ShockKind::Uniform => "uniform",
        };
        kv.insert("model.shock", shock.into());
        kv.insert("model.shock_scale", self.shock_scale.to_string());
        kv.insert("model.shock_bound", self.shock_bound.to_string());
        kv.insert("model.redraw_population", self.redraw_population.to_string());
        kv.insert("model.a", self.a.to_string());
        kv.insert("model.b", self.b.to_string());
        kv.insert("model.a_lo", self.a_lo.to_string());
        kv.insert("model.a_hi", self.a_hi.to_string());
        kv.insert("model.b_hi", self.b_hi.to_string());
        kv.insert("model.shock_count", self.shock_count.to_string());
        kv.insert("policy.alpha", self.alpha.to_string());
        kv.insert("policy.rho", self.rho.to_string());
        kv.insert("policy.r", self.r.to_string());
        let clamp = match self.clamp {
            ClampMode::Interval => "interval",
            ClampMode::None => "none",
        };
        kv.insert("policy.clamp", clamp.into());
        if let Some((p1, p2)) = self.warm_start {
            kv.insert("policy.warm_p1", p1.to_string());
            kv.insert("policy.warm_p2", p2.to_string());
        }
        kv.insert("horizon", self.horizon.to_string());
        let cost = match self.cost {
            CostKind::Constant => "constant",
            CostKind::Alternating => "alternating",
            CostKind::Explicit => "explicit",
        };
        kv.insert("cost.kind", cost.into());
        kv.insert("cost.retail", self.retail.to_string());
        kv.insert("cost.wholesale", self.wholesale.to_string());
        if let Some(c) = self.cost_center {
            kv.insert("cost.center", c.to_string());
        }
        kv.insert("cost.sigma", self.cost_sigma.to_string());
        kv.insert("cost.values", join(&self.cost_values));
        if let Some(b) = self.cost_bound {
            kv.insert("cost.bound", b.to_string());
        }
        kv.insert("run.reps", self.reps.to_string());
        kv.insert("run.seed", self.seed.to_string());
        kv.insert("run.policies", join(&self.policies));
        kv.insert("run.out", self.out.clone());
        kv.insert("run.trace_reps", self.trace_reps.to_string());
        kv.insert("verify.dkw_half_width", self.dkw_half_width.to_string());
        kv.insert("verify.dkw_alpha", self.dkw_alpha.to_string());
        kv.insert("verify.dkw_t", join(&self.dkw_t));
        kv.insert("verify.dkw_gamma", join(&self.dkw_gamma));
        kv.insert("verify.dkw_reps", self.dkw_reps.to_string());
        let mut out = String::new();
        for (k, v) in kv {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    /// SHA-256 of [`ExperimentConfig::echo`], hex encoded.
    pub fn digest(&self) -> String {
        format!("{:x}", Sha256::digest(self.echo().as_bytes()))
    }
}
