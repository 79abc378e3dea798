use crate::error::{Error, Result};

/// Least-squares fit of `log y` against `log t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub stderr: f64,
    pub intercept: f64,
    pub points: usize,
}

/// Fit over `t_lo..=t_hi`, where `series[t - 1]` is the value at `t`.
pub fn loglog_slope(series: &[f64], t_lo: usize, t_hi: usize) -> Result<SlopeFit> {
    let t_lo = t_lo.max(1);
    let t_hi = t_hi.min(series.len());
    if t_hi < t_lo + 1 {
        return Err(Error::Slope(format!("window [{t_lo}, {t_hi}] has fewer than two points")));
    }
    let mut xs = Vec::with_capacity(t_hi - t_lo + 1);
    let mut ys = Vec::with_capacity(t_hi - t_lo + 1);
    for t in t_lo..=t_hi {
        let y = series[t - 1];
        if !(y > 0.0 && y.is_finite()) {
            return Err(Error::Slope(format!("nonpositive value {y} at t = {t}")));
        }
        xs.push((t as f64).ln());
        ys.push(y.ln());
    }
    fit(&xs, &ys)
}

fn fit(xs: &[f64], ys: &[f64]) -> Result<SlopeFit> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx <= 0.0 {
        return Err(Error::Slope("degenerate window".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let stderr = if xs.len() > 2 {
        let sse: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| (y - intercept - slope * x).powi(2))
            .sum();
        (sse / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(SlopeFit {
        slope,
        stderr,
        intercept,
        points: xs.len(),
    })
}
