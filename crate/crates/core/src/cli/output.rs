use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::harness::{CheckOutcome, DkwCell, EpisodeTrace, MonteCarloSummary, PolicySummary};

pub const TRACE_HEADER: &str = "t,c,p,p_star,D,a_hat,b_hat,q_hat,lmin,Jt,Lt,clamped";
pub const SUMMARY_HEADER: &str =
    "t,mean_regret,regret_ci95,price_mse,theta_mse,quantile_mse,a_abs_err,b_abs_err,q_abs_err";
pub const BOUNDS_HEADER: &str =
    "check,policy,periods,violations,min_slack,max_slack,max_bound,t,gamma,empirical,bound,ci";

/// Twelve significant digits.
pub fn sig12(x: f64) -> String {
    format!("{x:.11e}")
}

pub fn trace_csv(trace: &EpisodeTrace) -> String {
    let mut out = String::with_capacity(trace.records.len() * 160);
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for r in &trace.records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.t,
            r.cost,
            r.price,
            r.oracle_price,
            r.demand,
            r.a_hat(),
            r.b_hat(),
            r.q_hat(),
            r.lmin,
            r.dispersion,
            r.info_bound,
            u8::from(r.clamped)
        );
    }
    out
}

pub fn summary_csv(summary: &PolicySummary) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for i in 0..summary.mean_regret.len() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            i + 1,
            summary.mean_regret[i],
            summary.regret_ci[i],
            summary.price_mse[i],
            summary.theta_mse[i],
            summary.quantile_mse[i],
            summary.a_abs_err[i],
            summary.b_abs_err[i],
            summary.q_abs_err[i]
        );
    }
    out
}

/// Mean cumulative regret, one column per policy.
pub fn regret_csv(summary: &MonteCarloSummary) -> String {
    let mut out = String::from("t");
    for p in &summary.policies {
        let _ = write!(out, ",{}", p.kind);
    }
    out.push('\n');
    for i in 0..summary.horizon {
        let _ = write!(out, "{}", i + 1);
        for p in &summary.policies {
            let _ = write!(out, ",{}", p.mean_regret[i]);
        }
        out.push('\n');
    }
    out
}

pub fn check_row(name: &str, policy: &str, c: &CheckOutcome) -> String {
    format!(
        "{name},{policy},{},{},{},{},{},,,,,",
        c.periods, c.violations, c.min_slack, c.max_slack, c.max_bound
    )
}

pub fn dkw_row(c: &DkwCell) -> String {
    format!(
        "dkw,,{},{},,,,{},{},{},{},{}",
        c.reps,
        usize::from(!c.ok()),
        c.t,
        c.gamma,
        c.empirical,
        c.bound,
        c.ci
    )
}

/// Columns of a regret table keyed by header name, with the `t` column
/// checked to run `1, 2, ...`.
pub fn read_regret_csv(text: &str) -> Result<Vec<(String, Vec<f64>)>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::Io("empty regret table".into()))?;
    let names: Vec<&str> = header.split(',').map(str::trim).collect();
    if names.first() != Some(&"t") || names.len() < 2 {
        return Err(Error::Io("regret table must start with a 't' column and have a series".into()));
    }
    let mut columns = vec![Vec::new(); names.len() - 1];
    for (row, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != names.len() {
            return Err(Error::Io(format!("row {} has {} fields, expected {}", row + 2, fields.len(), names.len())));
        }
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::Io(format!("row {}: cannot parse '{s}'", row + 2)))
        };
        if parse(fields[0])? != (row + 1) as f64 {
            return Err(Error::Io(format!("row {}: t column must count from 1", row + 2)));
        }
        for (col, field) in columns.iter_mut().zip(&fields[1..]) {
            col.push(parse(field)?);
        }
    }
    Ok(names[1..].iter().map(|s| s.to_string()).zip(columns).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::CheckOutcome;

    #[test]
    fn twelve_digits() {
        assert_eq!(sig12(6.25), "6.25000000000e0");
        assert_eq!(sig12(-1.621048754429), "-1.62104875443e0");
        assert_eq!(sig12(6.25).parse::<f64>().unwrap(), 6.25);
    }

    #[test]
    fn regret_table_round_trip() {
        let text = "t,myopic,perturbed\n1,0.5,0.25\n2,1,0.5\n";
        let cols = read_regret_csv(text).unwrap();
        assert_eq!(cols[0], ("myopic".to_string(), vec![0.5, 1.0]));
        assert_eq!(cols[1].1, vec![0.25, 0.5]);
        assert!(read_regret_csv("x,y\n1,2\n").is_err());
        assert!(read_regret_csv("t,y\n2,2\n").is_err());
        assert!(read_regret_csv("t,y\n1,2,3\n").is_err());
    }

    #[test]
    fn check_rows_have_full_width() {
        let width = BOUNDS_HEADER.split(',').count();
        let mut c = CheckOutcome::default();
        c.record(0.0, 1.0, 1.0);
        assert_eq!(check_row("x", "perturbed", &c).split(',').count(), width);
        let cell = DkwCell { t: 4, gamma: 0.1, exceed: 1, reps: 10, empirical: 0.1, bound: 1.5, ci: 0.3 };
        assert_eq!(dkw_row(&cell).split(',').count(), width);
    }
}
