//! WebAssembly bindings for the static demo page in `www/`.
//!
//! The plain functions (`paired_episode`, `revenue_curve`, `dkw_table`) do the
//! work and are tested natively; the `wasm_*` exports wrap them for JS.

use drlab::cli::ExperimentConfig;
use drlab::demand_model::{DemandParams, ShockDistribution};
use drlab::harness::{dkw_experiment, realized_regret, run_episode_on, ShockPath};
use drlab::policy::{oracle_price, risk_revenue, ClampMode, PolicyKind};
use drlab::Result;
use wasm_bindgen::prelude::*;

/// Myopic and perturbed-myopic prices on one shared shock path.
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct EpisodePair {
    oracle: Vec<f64>,
    myopic: Vec<f64>,
    perturbed: Vec<f64>,
    myopic_regret: Vec<f64>,
    perturbed_regret: Vec<f64>,
    theta: (f64, f64),
    quantile: f64,
}

#[wasm_bindgen]
impl EpisodePair {
    #[wasm_bindgen(getter)]
    pub fn oracle(&self) -> Vec<f64> {
        self.oracle.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn myopic(&self) -> Vec<f64> {
        self.myopic.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn perturbed(&self) -> Vec<f64> {
        self.perturbed.clone()
    }
    #[wasm_bindgen(getter, js_name = myopicRegret)]
    pub fn myopic_regret(&self) -> Vec<f64> {
        self.myopic_regret.clone()
    }
    #[wasm_bindgen(getter, js_name = perturbedRegret)]
    pub fn perturbed_regret(&self) -> Vec<f64> {
        self.perturbed_regret.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn a(&self) -> f64 {
        self.theta.0
    }
    #[wasm_bindgen(getter)]
    pub fn b(&self) -> f64 {
        self.theta.1
    }
    #[wasm_bindgen(getter)]
    pub fn quantile(&self) -> f64 {
        self.quantile
    }
}

/// One paired episode of the case-study world with `customers` customers.
pub fn paired_episode(seed: u64, customers: usize, horizon: usize, rho: f64) -> Result<EpisodePair> {
    let mut cfg = ExperimentConfig::case_study();
    cfg.seed = seed;
    cfg.customers = customers;
    cfg.horizon = horizon;
    cfg.rho = rho;
    cfg.validate()?;
    let exp = cfg.experiment()?;
    let path = ShockPath::sample(&exp, seed, 0);
    let myopic = run_episode_on(&exp, PolicyKind::Myopic, &path, seed, 0)?;
    let perturbed = run_episode_on(&exp, PolicyKind::PerturbedMyopic, &path, seed, 0)?;
    let params = exp.model().params();
    Ok(EpisodePair {
        oracle: myopic.records.iter().map(|r| r.oracle_price).collect(),
        myopic_regret: realized_regret(&myopic).cumulative,
        perturbed_regret: realized_regret(&perturbed).cumulative,
        myopic: myopic.prices(),
        perturbed: perturbed.prices(),
        theta: (params.a, params.b),
        quantile: exp.true_quantile(),
    })
}

/// Risk-sensitive revenue on `points` prices spanning `[0, c]`, followed by
/// the oracle price as the last element.
pub fn revenue_curve(c: f64, a: f64, b: f64, q: f64, points: usize) -> Vec<f64> {
    let theta = DemandParams::new(a, b);
    let n = points.max(2);
    let mut out: Vec<f64> = (0..n)
        .map(|k| risk_revenue(c * k as f64 / (n - 1) as f64, c, theta, q))
        .collect();
    out.push(oracle_price(c, theta, q, ClampMode::Interval));
    out
}

/// Quantile concentration cells for a Uniform(-w, w) law, flattened as
/// `t, gamma, empirical, bound, ci` per cell.
pub fn dkw_table(alpha: f64, half_width: f64, reps: usize, seed: u64) -> Result<Vec<f64>> {
    let dist = ShockDistribution::uniform(-half_width, half_width)?;
    let cells = dkw_experiment(&dist, alpha, &[4, 16, 64, 256], &[0.05, 0.1, 0.2], reps, seed)?;
    Ok(cells
        .iter()
        .flat_map(|c| [c.t as f64, c.gamma, c.empirical, c.bound, c.ci])
        .collect())
}

fn js(e: drlab::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen(js_name = pairedEpisode)]
pub fn wasm_paired_episode(seed: u32, customers: u32, horizon: u32, rho: f64) -> std::result::Result<EpisodePair, JsError> {
    paired_episode(seed.into(), customers as usize, horizon as usize, rho).map_err(js)
}

#[wasm_bindgen(js_name = revenueCurve)]
pub fn wasm_revenue_curve(c: f64, a: f64, b: f64, q: f64, points: u32) -> Vec<f64> {
    revenue_curve(c, a, b, q, points as usize)
}

#[wasm_bindgen(js_name = dkwTable)]
pub fn wasm_dkw_table(alpha: f64, half_width: f64, reps: u32, seed: u32) -> std::result::Result<Vec<f64>, JsError> {
    dkw_table(alpha, half_width, reps as usize, seed.into()).map_err(js)
}
