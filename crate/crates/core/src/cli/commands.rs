use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use super::config::{ExperimentConfig, ModelMode};
use super::output::{
    check_row, dkw_row, read_regret_csv, regret_csv, sig12, summary_csv, trace_csv, BOUNDS_HEADER,
};
use crate::demand_model::ShockDistribution;
use crate::error::{Error, Result};
use crate::harness::{
    concentration_rate, dkw_experiment, loglog_slope, run_monte_carlo, Experiment, Kappas, MonteCarloOptions,
    MonteCarloSummary, SlopeFit,
};
use crate::policy::PolicyKind;

/// Command-line overrides shared by `run` and `verify`.
#[derive(Debug, Clone, Default)]
pub struct RunFlags {
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub reps: Option<usize>,
    pub policies: Option<Vec<PolicyKind>>,
    pub horizon: Option<usize>,
}

impl RunFlags {
    /// Load the configuration (the bundled case study when no file is
    /// given) and apply the overrides.
    pub fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::case_study(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(reps) = self.reps {
            cfg.reps = reps;
        }
        if let Some(p) = &self.policies {
            cfg.policies = p.clone();
        }
        if let Some(h) = self.horizon {
            cfg.horizon = h;
        }
        if let Some(out) = &self.out {
            cfg.out = out.to_string_lossy().into_owned();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok(path)
}

fn monte_carlo_options(cfg: &ExperimentConfig, policies: Vec<PolicyKind>) -> Result<MonteCarloOptions> {
    let mut opts = MonteCarloOptions::new(cfg.reps, cfg.seed, policies);
    opts.keep_traces = cfg.trace_reps.min(cfg.reps);
    if cfg.redraw_population && cfg.mode == ModelMode::Population {
        opts.redraw_population = Some(cfg.population_spec()?);
    }
    Ok(opts)
}

fn dkw_law(cfg: &ExperimentConfig) -> Result<ShockDistribution> {
    ShockDistribution::symmetric_uniform(cfg.dkw_half_width)
}

/// `key = value` lines: derived constants, version, timestamps and the
/// full configuration echo. Parses back to the same configuration.
pub fn manifest(cfg: &ExperimentConfig, exp: &Experiment, started: u64) -> Result<String> {
    let mut out = String::new();
    let mut put = |k: &str, v: String| {
        let _ = writeln!(out, "manifest.{k} = {v}");
    };
    put("version", env!("CARGO_PKG_VERSION").into());
    put("digest", cfg.digest());
    put("started_unix", started.to_string());
    put("finished_unix", unix_now().to_string());
    let theta = exp.model().params();
    let bounds = exp.model().bounds();
    let (shock_lo, shock_hi) = exp.model().shock().support();
    put("theta_a", sig12(theta.a));
    put("theta_b", sig12(theta.b));
    put("box_a_lo", sig12(bounds.a_lo));
    put("box_a_hi", sig12(bounds.a_hi));
    put("box_b_hi", sig12(bounds.b_hi));
    put("shock_lo", sig12(shock_lo));
    put("shock_hi", sig12(shock_hi));
    put("cost_bound", sig12(exp.costs().bound()));
    put("p_bar", sig12(exp.price_bound()));
    put("q_true", sig12(exp.true_quantile()));
    let k = Kappas::new(bounds, shock_hi, exp.price_bound());
    put("kappa1", sig12(k.k1));
    put("kappa2", sig12(k.k2));
    put("kappa3", sig12(k.k3));
    if let Ok(l) = exp.model().shock().bilipschitz_constant() {
        put("mu1", sig12(concentration_rate(l)));
    }
    put("dkw_mu1", sig12(concentration_rate(dkw_law(cfg)?.bilipschitz_constant()?)));
    out.push_str(&cfg.echo());
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub summary: MonteCarloSummary,
}

impl RunReport {
    pub fn failures(&self) -> usize {
        self.summary.failures()
    }
}

/// Run the Monte Carlo experiment for the requested policies plus the
/// oracle, and write traces, summaries, the regret table and the manifest.
pub fn cmd_run(cfg: &ExperimentConfig) -> Result<RunReport> {
    let started = unix_now();
    let exp = cfg.experiment()?;
    let mut policies = vec![PolicyKind::Oracle];
    for &p in &cfg.policies {
        if !policies.contains(&p) {
            policies.push(p);
        }
    }
    let summary = run_monte_carlo(&exp, &monte_carlo_options(cfg, policies)?)?;
    let dir = PathBuf::from(&cfg.out);
    fs::create_dir_all(&dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let mut files = vec![];
    for p in &summary.policies {
        for trace in &p.traces {
            files.push(write(&dir, &format!("trace_{}_{}.csv", p.kind, trace.rep), &trace_csv(trace))?);
        }
        files.push(write(&dir, &format!("summary_{}.csv", p.kind), &summary_csv(p))?);
    }
    files.push(write(&dir, "regret.csv", &regret_csv(&summary))?);
    files.push(write(&dir, "manifest.txt", &manifest(cfg, &exp, started)?)?);
    Ok(RunReport {
        out_dir: dir,
        files,
        summary,
    })
}

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub report: PathBuf,
    /// Total exact-inequality violations.
    pub violations: usize,
    pub dkw_failures: usize,
    pub replication_failures: usize,
    pub clamped: usize,
    pub rows: Vec<String>,
}

/// Run every bound check on the configured experiment and the DKW grid,
/// writing `bounds_report.csv`.
pub fn cmd_verify(cfg: &ExperimentConfig) -> Result<VerifyReport> {
    let started = unix_now();
    let exp = cfg.experiment()?;
    let mut policies: Vec<PolicyKind> = cfg.policies.iter().copied().filter(|&p| p != PolicyKind::Oracle).collect();
    if !policies.contains(&PolicyKind::PerturbedMyopic) {
        policies.push(PolicyKind::PerturbedMyopic);
    }
    let mut opts = monte_carlo_options(cfg, policies)?;
    opts.keep_traces = 0;
    let summary = run_monte_carlo(&exp, &opts)?;
    let mut rows = vec![];
    let mut violations = 0;
    let mut clamped = 0;
    for p in &summary.policies {
        clamped += p.clamped;
        for (name, outcome) in p.checks.named() {
            if p.kind != PolicyKind::PerturbedMyopic && outcome.periods == 0 {
                continue;
            }
            violations += outcome.violations;
            rows.push(check_row(name, p.kind.name(), outcome));
        }
    }
    let cells = dkw_experiment(&dkw_law(cfg)?, cfg.dkw_alpha, &cfg.dkw_t, &cfg.dkw_gamma, cfg.dkw_reps, cfg.seed)?;
    let dkw_failures = cells.iter().filter(|c| !c.ok()).count();
    rows.extend(cells.iter().map(dkw_row));

    let dir = PathBuf::from(&cfg.out);
    fs::create_dir_all(&dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let mut csv = String::from(BOUNDS_HEADER);
    csv.push('\n');
    for row in &rows {
        csv.push_str(row);
        csv.push('\n');
    }
    let report = write(&dir, "bounds_report.csv", &csv)?;
    write(&dir, "manifest.txt", &manifest(cfg, &exp, started)?)?;
    Ok(VerifyReport {
        report,
        violations,
        dkw_failures,
        replication_failures: summary.failures(),
        clamped,
        rows,
    })
}

/// Slope fits for every column of a regret table. The default window is
/// `[T/2, T]`. Columns that are not positive on the window (the oracle's
/// zero regret) are reported as skipped.
pub fn cmd_slope(
    path: &Path,
    t_lo: Option<usize>,
    t_hi: Option<usize>,
) -> Result<Vec<(String, std::result::Result<SlopeFit, String>)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let columns = read_regret_csv(&text)?;
    let horizon = columns[0].1.len();
    let hi = t_hi.unwrap_or(horizon).min(horizon);
    let lo = t_lo.unwrap_or(hi / 2).max(1);
    if hi < lo + 1 {
        return Err(Error::Slope(format!("empty window [{lo}, {hi}]")));
    }
    Ok(columns
        .into_iter()
        .map(|(name, series)| {
            let fit = loglog_slope(&series, lo, hi).map_err(|e| e.to_string());
            (name, fit)
        })
        .collect())
}

pub fn format_slopes(fits: &[(String, std::result::Result<SlopeFit, String>)]) -> String {
    let mut out = String::from("policy      slope     stderr   points\n");
    for (name, fit) in fits {
        let _ = match fit {
            Ok(f) => writeln!(out, "{name:<10} {:>7.4} {:>10.2e} {:>8}", f.slope, f.stderr, f.points),
            Err(e) => writeln!(out, "{name:<10} skipped: {e}"),
        };
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(dir: &Path) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::parse(
            "model.mode = direct\nmodel.a = 1\nmodel.b = 0.2\nmodel.a_lo = 0.5\nmodel.a_hi = 2\nmodel.b_hi = 1\n\
             model.shock = uniform\nmodel.shock_bound = 0.3\nmodel.shock_count = 1\nhorizon = 200\nrun.reps = 3\n\
             run.trace_reps = 2\nverify.dkw_reps = 200\n",
        )
        .unwrap();
        cfg.out = dir.to_string_lossy().into_owned();
        cfg
    }

    #[test]
    fn run_writes_every_artifact() {
        let dir = tempfile::tempdir().unwrap();
        let report = cmd_run(&small(dir.path())).unwrap();
        for name in [
            "trace_oracle_0.csv",
            "trace_myopic_1.csv",
            "trace_perturbed_1.csv",
            "summary_oracle.csv",
            "summary_myopic.csv",
            "summary_perturbed.csv",
            "regret.csv",
            "manifest.txt",
        ] {
            assert!(dir.path().join(name).exists(), "{name}");
        }
        assert!(!dir.path().join("trace_myopic_2.csv").exists());
        assert_eq!(report.failures(), 0);
        let regret = fs::read_to_string(dir.path().join("regret.csv")).unwrap();
        assert!(regret.starts_with("t,oracle,myopic,perturbed\n"));
        assert!(regret.lines().skip(1).all(|l| l.split(',').nth(1) == Some("0")));
    }

    #[test]
    fn manifest_reparses_to_config() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small(dir.path());
        cmd_run(&cfg).unwrap();
        let text = fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
        assert_eq!(ExperimentConfig::parse(&text).unwrap(), cfg);
        for key in ["p_bar", "q_true", "kappa1", "kappa2", "kappa3", "mu1", "dkw_mu1", "digest"] {
            assert!(text.contains(&format!("manifest.{key} = ")), "{key}");
        }
    }

    #[test]
    fn verify_reports_zero_violations() {
        let dir = tempfile::tempdir().unwrap();
        let report = cmd_verify(&small(dir.path())).unwrap();
        assert_eq!(report.violations, 0);
        let csv = fs::read_to_string(&report.report).unwrap();
        assert!(csv.starts_with(BOUNDS_HEADER));
        assert!(csv.contains("lemma2_eigenvalue,perturbed,600,0,"));
        assert_eq!(csv.lines().filter(|l| l.starts_with("dkw,")).count(), 12);
    }

    #[test]
    fn slope_on_synthetic_table() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("regret.csv");
        let mut text = String::from("t,zero,linear,root\n");
        for t in 1..=1000 {
            let x = t as f64;
            text.push_str(&format!("{t},0,{},{}\n", 2.0 * x, x.sqrt()));
        }
        fs::write(&path, text).unwrap();
        let fits = cmd_slope(&path, None, None).unwrap();
        assert!(fits[0].1.is_err());
        assert!((fits[1].1.as_ref().unwrap().slope - 1.0).abs() < 1e-9);
        assert!((fits[2].1.as_ref().unwrap().slope - 0.5).abs() < 1e-9);
        assert!(format_slopes(&fits).contains("skipped"));
        assert!(cmd_slope(&path, Some(900), Some(900)).is_err());
    }
}
