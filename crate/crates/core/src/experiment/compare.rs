//! Side-by-side NSE / Smagorinsky runs and the laminarization verdict.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::config::ExperimentConfig;
use super::run::{execute, RunOptions, RunResult};
use crate::error::{io_err, ExperimentError};
use crate::stats::DissipationSeries;

/// Default ceiling on `std(ke_SM) / std(ke_NSE)` for a laminarized model run.
pub const DEFAULT_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, Serialize)]
pub struct SideStats {
    pub ke_std: f64,
    pub ke_mean: f64,
    /// Least-squares slope of `ke` over the window. Diagnostic only: a slow
    /// drift inflates `ke_std` without any unsteadiness.
    pub ke_trend: f64,
    /// Standard deviation of `ke` about that line.
    pub ke_detrended_std: f64,
    pub c_eps: f64,
    pub complete: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareReport {
    /// Start of the comparison window, `T/2`.
    pub window_start: f64,
    pub t_final: f64,
    pub nse: SideStats,
    pub smagorinsky: SideStats,
    /// `std(ke_SM) / std(ke_NSE)`.
    pub std_ratio: f64,
    pub threshold: f64,
    pub laminarized: bool,
}

/// Slope and residual standard deviation of a least-squares line.
fn linear_fit(t: &[f64], y: &[f64]) -> (f64, f64) {
    let n = t.len() as f64;
    let (tm, ym) = (t.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let stt: f64 = t.iter().map(|v| (v - tm).powi(2)).sum();
    let sty: f64 = t.iter().zip(y).map(|(a, b)| (a - tm) * (b - ym)).sum();
    let slope = if stt > 0.0 { sty / stt } else { 0.0 };
    let ss: f64 = t.iter().zip(y).map(|(a, b)| (b - ym - slope * (a - tm)).powi(2)).sum();
    (slope, (ss / n).sqrt())
}

fn side(series: &DissipationSeries, t0: f64, complete: bool) -> Result<SideStats, ExperimentError> {
    let (t, ke): (Vec<f64>, Vec<f64>) = series.times.iter().zip(&series.ke).filter(|(t, _)| **t >= t0).unzip();
    if ke.is_empty() {
        return Err(ExperimentError::Compare(format!("no samples in [{t0}, T]")));
    }
    let (ke_trend, ke_detrended_std) = linear_fit(&t, &ke);
    Ok(SideStats {
        ke_std: series.ke_std(t0)?,
        ke_mean: ke.iter().sum::<f64>() / ke.len() as f64,
        ke_trend,
        ke_detrended_std,
        c_eps: series.time_average(t0)?.1,
        complete,
    })
}

/// Statistics over `[T/2, T]` of two finished series.
pub fn compare_series(
    nse: &DissipationSeries,
    sm: &DissipationSeries,
    t_final: f64,
    threshold: f64,
) -> Result<CompareReport, ExperimentError> {
    let t0 = 0.5 * t_final;
    let a = side(nse, t0, true)?;
    let b = side(sm, t0, true)?;
    let std_ratio = if a.ke_std > 0.0 { b.ke_std / a.ke_std } else { f64::INFINITY };
    Ok(CompareReport {
        window_start: t0,
        t_final,
        laminarized: std_ratio <= threshold,
        nse: a,
        smagorinsky: b,
        std_ratio,
        threshold,
    })
}

/// Joined series on the union of sample times: `t,eps_nse,ke_nse,eps_sm,ke_sm`.
pub fn side_by_side_csv(nse: &DissipationSeries, sm: &DissipationSeries) -> String {
    let mut s = String::from("t,eps_nse,ke_nse,eps_sm,ke_sm\n");
    let (mut i, mut j) = (0, 0);
    let same = |a: f64, b: f64| a.is_finite() && b.is_finite() && (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0);
    while i < nse.len() || j < sm.len() {
        let ta = nse.times.get(i).copied().unwrap_or(f64::INFINITY);
        let tb = sm.times.get(j).copied().unwrap_or(f64::INFINITY);
        if same(ta, tb) {
            let _ = writeln!(s, "{},{},{},{},{}", ta, nse.eps[i], nse.ke[i], sm.eps[j], sm.ke[j]);
            i += 1;
            j += 1;
        } else if ta < tb {
            let _ = writeln!(s, "{},{},{},,", ta, nse.eps[i], nse.ke[i]);
            i += 1;
        } else {
            let _ = writeln!(s, "{},,,{},{}", tb, sm.eps[j], sm.ke[j]);
            j += 1;
        }
    }
    s
}

#[derive(Debug)]
pub struct CompareOutcome {
    pub report: CompareReport,
    pub nse: RunResult,
    pub smagorinsky: RunResult,
}

/// Runs both configurations concurrently into `out/nse` and `out/smagorinsky`
/// and writes `compare.csv` and `compare.json` to `out`.
pub fn cmd_compare(
    nse_cfg: &ExperimentConfig,
    sm_cfg: &ExperimentConfig,
    out: &Path,
    threshold: f64,
    opts: RunOptions,
) -> Result<CompareOutcome, ExperimentError> {
    let (ta, tb) = (nse_cfg.stepping.t_final, sm_cfg.stepping.t_final);
    if (ta - tb).abs() > 1e-12 * ta.max(tb) {
        return Err(ExperimentError::Config(format!("mismatched horizons: T = {ta} vs T = {tb}")));
    }
    if !(threshold > 0.0) {
        return Err(ExperimentError::Config(format!("threshold must be positive, got {threshold}")));
    }
    let mut a = nse_cfg.clone();
    a.outputs.dir = out.join("nse");
    let mut b = sm_cfg.clone();
    b.outputs.dir = out.join("smagorinsky");
    let (ra, rb) = std::thread::scope(|s| {
        let ha = s.spawn(|| execute(&a, None, opts));
        let hb = s.spawn(|| execute(&b, None, opts));
        (ha.join(), hb.join())
    });
    let panic = |_| ExperimentError::Compare("a run panicked".into());
    let (ra, rb) = (ra.map_err(panic)??, rb.map_err(panic)??);
    let report = compare_series(&ra.series, &rb.series, ta, threshold)?;
    let csv_path = out.join("compare.csv");
    std::fs::write(&csv_path, side_by_side_csv(&ra.series, &rb.series)).map_err(io_err::<ExperimentError>(&csv_path))?;
    let json_path = out.join("compare.json");
    let json = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    std::fs::write(&json_path, json).map_err(io_err::<ExperimentError>(&json_path))?;
    Ok(CompareOutcome { report, nse: ra, smagorinsky: rb })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(ke: impl Fn(f64) -> f64) -> DissipationSeries {
        let mut s = DissipationSeries::new(0.5, 1.0);
        for i in 0..=100 {
            let t = i as f64 * 0.01;
            s.push(t, 0.1, ke(t)).unwrap();
        }
        s
    }

    #[test]
    fn verdict_uses_the_second_half() {
        let nse = series(|t| 1.0 + (40.0 * t).sin());
        let sm = series(|t| if t < 0.5 { (40.0 * t).sin() } else { 0.2 });
        let r = compare_series(&nse, &sm, 1.0, DEFAULT_THRESHOLD).unwrap();
        assert!(r.smagorinsky.ke_std < 1e-15);
        assert!(r.laminarized);
        let drift = series(|t| 2.0 - t);
        let r = compare_series(&drift, &drift, 1.0, DEFAULT_THRESHOLD).unwrap();
        assert!((r.nse.ke_trend + 1.0).abs() < 1e-12 && r.nse.ke_detrended_std < 1e-12);
        let r = compare_series(&nse, &nse, 1.0, DEFAULT_THRESHOLD).unwrap();
        assert!((r.std_ratio - 1.0).abs() < 1e-15 && !r.laminarized);
    }

    #[test]
    fn joined_csv_fills_gaps() {
        let a = series(|_| 1.0);
        let mut b = DissipationSeries::new(0.0, 1.0);
        b.push(0.0, 0.0, 2.0).unwrap();
        b.push(0.005, 0.0, 2.0).unwrap();
        let csv = side_by_side_csv(&a, &b);
        assert_eq!(csv.lines().count(), 1 + 101 + 1);
        assert!(csv.lines().nth(2).unwrap().ends_with(",,0,2"));
    }
}
