use alloc::vec::Vec;

use super::oracle::stationary_of_kernel;
use super::{PolicyTable, TabularMdp};
use crate::error::{Error, Result};
use crate::math;

pub const RHO_MIN: f64 = 1e-6;
pub const RHO_MAX: f64 = 1.0 - 1e-6;

/// TV values at or below this are treated as numerically mixed and left out of the fit.
const TV_FLOOR: f64 = 1e-10;

/// Geometric mixing envelope `sup_s TV(P^t(s,·), ν) ≤ σ ρ^t`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingProfile {
    pub sigma: f64,
    pub rho: f64,
    /// `tv_series[t - 1]` is the worst-start TV distance after `t` steps.
    pub tv_series: Vec<f64>,
}

impl MixingProfile {
    /// `σ ρ^t`.
    pub fn envelope(&self, t: usize) -> f64 {
        self.sigma * math::powi(self.rho, t as i32)
    }
}

/// Measures the worst-start TV distance to stationarity for `t = 1..=horizon`
/// and fits `ρ` by log-linear least squares on the tail half of the series
/// (values at or below `1e-10` and everything after them are left out and
/// recorded as zero);
/// `σ` is then the smallest constant making `σρ^t` dominate every recorded value.
pub fn mixing_profile(mdp: &TabularMdp, policy: &PolicyTable, horizon: usize) -> Result<MixingProfile> {
    if horizon == 0 {
        return Err(Error::InvalidConfig { field: "horizon", reason: "must be at least 1".into() });
    }
    let kernel = mdp.policy_kernel(policy)?;
    let nu = stationary_of_kernel(&kernel)?;
    let n = kernel.rows();

    let mut power = kernel.clone();
    let mut tv_series = Vec::with_capacity(horizon);
    for t in 1..=horizon {
        if t > 1 {
            power = power.matmul(&kernel);
        }
        let worst = (0..n).map(|s| math::tv_distance(power.row(s), &nu)).fold(0.0, f64::max);
        tv_series.push(worst);
    }

    // beyond the first value at the floor the series is rounding noise
    let resolved = tv_series.iter().position(|tv| *tv <= TV_FLOOR).unwrap_or(tv_series.len());
    tv_series[resolved..].iter_mut().for_each(|tv| *tv = 0.0);
    let rho = fit_rho(&tv_series[..resolved]);
    let log_rho = math::ln(rho);
    let log_sigma = tv_series[..resolved]
        .iter()
        .enumerate()
        .map(|(i, tv)| math::ln(*tv) - (i + 1) as f64 * log_rho)
        .fold(f64::NEG_INFINITY, f64::max);
    let sigma = if log_sigma == f64::NEG_INFINITY {
        0.0
    } else {
        // nudge up so rounding cannot break dominance
        (math::exp(log_sigma) * (1.0 + 1e-12)).min(f64::MAX)
    };
    Ok(MixingProfile { sigma, rho, tv_series })
}

fn fit_rho(tv: &[f64]) -> f64 {
    let usable = |range: core::ops::Range<usize>| -> Vec<(f64, f64)> {
        range.map(|i| ((i + 1) as f64, math::ln(tv[i]))).collect()
    };
    let mut points = usable(tv.len() / 2..tv.len());
    if points.len() < 2 {
        points = usable(0..tv.len());
    }
    if points.len() < 2 {
        return RHO_MIN;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = points.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    math::exp(slope).clamp(RHO_MIN, RHO_MAX)
}

/// `τ* = min{τ ≥ 1 : σ ρ^τ ≤ α}`.
pub fn tau_star(profile: &MixingProfile, alpha: f64) -> usize {
    let (sigma, rho) = (profile.sigma, profile.rho);
    if sigma <= 0.0 || sigma * rho <= alpha {
        return 1;
    }
    let closed = math::ceil((math::ln(alpha) - math::ln(sigma)) / math::ln(rho));
    let mut tau = if closed < 1.0 { 1 } else { closed as usize };
    // settle rounding at exact boundaries against the definition
    while tau > 1 && sigma * math::powi(rho, (tau - 1) as i32) <= alpha {
        tau -= 1;
    }
    while sigma * math::powi(rho, tau as i32) > alpha {
        tau += 1;
    }
    tau
}
