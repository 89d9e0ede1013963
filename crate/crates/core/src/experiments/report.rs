use serde::{Deserialize, Serialize};

use super::TrialResult;

/// How often the realized risk fell inside the two-sided bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageSummary {
    pub n: u64,
    pub delta: f64,
    pub trials: usize,
    pub failed_trials: usize,
    pub inside: usize,
    /// Fraction of successful trials inside the bound; `None` when there are none.
    pub coverage: Option<f64>,
    pub target: f64,
    pub meets_target: Option<bool>,
    pub mean_abs_risk_minus_ratio: Option<f64>,
    pub max_abs_risk_minus_ratio: Option<f64>,
    pub mean_abs_phi_minus_ratio: Option<f64>,
    pub k_min: Option<u64>,
    pub k_max: Option<u64>,
    pub risk_min: Option<f64>,
    pub risk_max: Option<f64>,
}

pub fn coverage_report(results: &[TrialResult], n: u64, delta: f64) -> CoverageSummary {
    let ok: Vec<_> = results.iter().filter_map(|r| r.outcome.as_ref().ok()).collect();
    let m = ok.len();
    let inside = ok.iter().filter(|t| t.inside).count();
    let ratio = |k: u64| k as f64 / n as f64;
    let some = |v: f64| (m > 0).then_some(v);
    let coverage = some(inside as f64 / m.max(1) as f64);
    let dev: Vec<f64> = ok.iter().map(|t| (t.risk_hat - ratio(t.k)).abs()).collect();
    CoverageSummary {
        n,
        delta,
        trials: results.len(),
        failed_trials: results.len() - m,
        inside,
        coverage,
        target: 1.0 - delta,
        meets_target: coverage.map(|c| c >= 1.0 - delta),
        mean_abs_risk_minus_ratio: some(dev.iter().sum::<f64>() / m.max(1) as f64),
        max_abs_risk_minus_ratio: some(dev.iter().copied().fold(0.0, f64::max)),
        mean_abs_phi_minus_ratio: some(ok.iter().map(|t| (t.phi_hat - ratio(t.k)).abs()).sum::<f64>() / m.max(1) as f64),
        k_min: ok.iter().map(|t| t.k).min(),
        k_max: ok.iter().map(|t| t.k).max(),
        risk_min: ok.iter().map(|t| t.risk_hat).min_by(f64::total_cmp),
        risk_max: ok.iter().map(|t| t.risk_hat).max_by(f64::total_cmp),
    }
}
