//! Run reports and log-log rate fitting.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricKind {
    /// Running minimum of the exact `‖∇J(θ_t)‖²`.
    MinGradNormSq,
    /// `‖θ̄_t − θ*‖²` for the averaged TD iterate.
    AvgIterateDistSq,
}

impl MetricKind {
    pub fn name(&self) -> &'static str {
        match self {
            MetricKind::MinGradNormSq => "min_grad_norm_sq",
            MetricKind::AvgIterateDistSq => "avg_iterate_dist_sq",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Checkpoint {
    pub t: u64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    /// Canonical text of the configuration that produced the run.
    pub config_echo: String,
    pub seed: u64,
    pub metric: MetricKind,
    /// Strictly increasing in `t`.
    pub checkpoints: Vec<Checkpoint>,
    /// Secondary series on the same grid. For TD it is the running mean of
    /// `‖θ_k − θ*‖²`; for PG the raw (not minimized) `‖∇J(θ_t)‖²`.
    pub aux_checkpoints: Vec<Checkpoint>,
    /// Runtime bound or monotonicity failures; zero on a healthy run.
    pub invariant_violations: usize,
    /// Extra first-step draws spent trying to meet the `G₀` condition.
    pub g0_resamples: usize,
    pub g0_satisfied: bool,
    /// Largest `‖g_t‖` seen and the bound it was checked against.
    pub max_grad_norm: f64,
    pub grad_norm_bound: f64,
    pub final_theta: Vec<f64>,
}

impl ConvergenceReport {
    pub fn final_value(&self) -> Option<f64> {
        self.checkpoints.last().map(|c| c.value)
    }

    pub fn series(&self) -> Vec<(f64, f64)> {
        self.checkpoints.iter().map(|c| (c.t as f64, c.value)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Mean of the last 10% of the series.
    pub plateau: f64,
    /// Number of points the regression used.
    pub n_fit: usize,
}

pub const MIN_FIT_POINTS: usize = 4;

/// Least squares of `ln error` on `ln t` over the tail half of the series,
/// where the tail half is the points with `ln t` at or beyond the midpoint of
/// the observed `ln t` range.
pub fn fit_rate(series: &[(f64, f64)]) -> Result<RateFit> {
    if series.len() < MIN_FIT_POINTS {
        return Err(Error::TooFewCheckpoints { needed: MIN_FIT_POINTS, got: series.len() });
    }
    if series.iter().any(|(t, e)| !(*e >= 0.0) || !e.is_finite() || !(*t > 0.0)) {
        return Err(Error::DegenerateSeries { exact_convergence: false });
    }
    if series.iter().any(|(_, e)| *e == 0.0) {
        return Err(Error::DegenerateSeries { exact_convergence: true });
    }

    let lo = math::ln(series.first().unwrap().0);
    let hi = math::ln(series.last().unwrap().0);
    let mid = 0.5 * (lo + hi);
    let mut pts: Vec<(f64, f64)> =
        series.iter().map(|(t, e)| (math::ln(*t), math::ln(*e))).filter(|(lt, _)| *lt >= mid).collect();
    if pts.len() < 2 {
        pts = series[series.len() - 2..].iter().map(|(t, e)| (math::ln(*t), math::ln(*e))).collect();
    }

    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my) * (p.1 - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let r_squared = if syy <= 1e-300 {
        1.0
    } else {
        let ss_res: f64 = pts
            .iter()
            .map(|p| {
                let r = p.1 - intercept - slope * p.0;
                r * r
            })
            .sum();
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };

    Ok(RateFit { slope, intercept, r_squared, plateau: plateau(series), n_fit: pts.len() })
}

/// Mean error over the last 10% of points (at least one).
pub fn plateau(series: &[(f64, f64)]) -> f64 {
    let k = (series.len() / 10).max(1);
    series[series.len() - k..].iter().map(|p| p.1).sum::<f64>() / k as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| math::exp(math::ln(lo) + (math::ln(hi) - math::ln(lo)) * i as f64 / (n - 1) as f64)).collect()
    }

    #[test]
    fn inverse_sqrt_slope() {
        let s: Vec<_> = grid(1.0, 1e5, 50).into_iter().map(|t| (t, 1.0 / math::sqrt(t))).collect();
        let fit = fit_rate(&s).unwrap();
        assert!(math::abs(fit.slope + 0.5) < 1e-6);
        assert!(fit.r_squared > 0.999_999);
    }

    #[test]
    fn flat_series() {
        let s: Vec<_> = grid(1.0, 1e4, 20).into_iter().map(|t| (t, 0.3)).collect();
        let fit = fit_rate(&s).unwrap();
        assert!(math::abs(fit.slope) < 1e-12);
        assert!(math::abs(fit.plateau - 0.3) < 1e-15);
    }

    #[test]
    fn log_over_sqrt() {
        let s: Vec<_> = grid(1e3, 1e5, 40).into_iter().map(|t| (t, math::ln(t) / math::sqrt(t))).collect();
        let fit = fit_rate(&s).unwrap();
        assert!(fit.slope > -0.5 && fit.slope < -0.3, "{}", fit.slope);
    }

    #[test]
    fn degenerate_inputs() {
        let few = vec![(1.0, 1.0), (2.0, 0.5), (3.0, 0.3)];
        assert_eq!(fit_rate(&few), Err(Error::TooFewCheckpoints { needed: 4, got: 3 }));
        let zero = vec![(1.0, 1.0), (2.0, 0.5), (3.0, 0.0), (4.0, 0.0)];
        assert_eq!(fit_rate(&zero), Err(Error::DegenerateSeries { exact_convergence: true }));
        let neg = vec![(1.0, 1.0), (2.0, -0.5), (3.0, 0.1), (4.0, 0.1)];
        assert_eq!(fit_rate(&neg), Err(Error::DegenerateSeries { exact_convergence: false }));
    }
}
