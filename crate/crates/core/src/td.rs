//! Linear TD with AMSGrad steps, weighted projection and iterate averaging.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::amsgrad::{self, AmsGradState, DomainBall, MomentConvention, Schedule};
use crate::error::{Error, Result};
use crate::math;
use crate::mdp::{feature_covariance, stationary_distribution, td_fixed_point, PolicyTable, TabularMdp};
use crate::report::{Checkpoint, ConvergenceReport, MetricKind};
use crate::rng::Rng;
use crate::sampler::{self, Transition};

/// Slack on feature row norms.
const FEATURE_NORM_TOL: f64 = 1e-12;

/// Feature matrix `Φ` with one row `φ(s)` per state, each of norm at most 1.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearFeatures {
    n_states: usize,
    dim: usize,
    phi: Vec<f64>,
}

impl LinearFeatures {
    pub fn new(n_states: usize, dim: usize, phi: Vec<f64>) -> Result<Self> {
        if n_states == 0 || dim == 0 {
            return Err(Error::InvalidFeatures("need at least one state and one feature".into()));
        }
        if phi.len() != n_states * dim {
            return Err(Error::DimensionMismatch { expected: n_states * dim, got: phi.len() });
        }
        if phi.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidFeatures("non-finite entry".into()));
        }
        for s in 0..n_states {
            let n = math::norm(&phi[s * dim..(s + 1) * dim]);
            if n > 1.0 + FEATURE_NORM_TOL {
                return Err(Error::InvalidFeatures(format!("row {s} has norm {n} > 1")));
            }
        }
        Ok(Self { n_states, dim, phi })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn phi(&self, s: usize) -> &[f64] {
        &self.phi[s * self.dim..(s + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.phi
    }

    pub fn value(&self, s: usize, theta: &[f64]) -> f64 {
        math::dot(self.phi(s), theta)
    }
}

/// `g = (φ(s)ᵀθ − r − γ φ(s')ᵀθ) φ(s)`.
pub fn td_pseudo_gradient(theta: &[f64], features: &LinearFeatures, gamma: f64, tr: &Transition) -> Vec<f64> {
    let delta = features.value(tr.s, theta) - tr.r - gamma * features.value(tr.s_next, theta);
    features.phi(tr.s).iter().map(|f| delta * f).collect()
}

/// `ḡ(θ) = Σ_s ν(s) (φ(s)ᵀθ − r_π(s) − γ E[φ(s')|s]ᵀθ) φ(s)`.
pub fn mean_pseudo_gradient(
    mdp: &TabularMdp,
    policy: &PolicyTable,
    features: &LinearFeatures,
    theta: &[f64],
) -> Result<Vec<f64>> {
    if features.n_states() != mdp.n_states() {
        return Err(Error::DimensionMismatch { expected: mdp.n_states(), got: features.n_states() });
    }
    if theta.len() != features.dim() {
        return Err(Error::DimensionMismatch { expected: features.dim(), got: theta.len() });
    }
    let nu = stationary_distribution(mdp, policy)?.probs;
    let kernel = mdp.policy_kernel(policy)?;
    let r = mdp.policy_reward(policy)?;
    let values: Vec<f64> = (0..mdp.n_states()).map(|s| features.value(s, theta)).collect();
    let next_values = kernel.mul_vec(&values);
    let mut g = vec![0.0; features.dim()];
    for s in 0..mdp.n_states() {
        let delta = values[s] - r[s] - mdp.gamma() * next_values[s];
        let w = nu[s] * delta;
        for (gi, f) in g.iter_mut().zip(features.phi(s)) {
            *gi += w * f;
        }
    }
    Ok(g)
}

/// Both sides of the strong monotonicity inequality
/// `(θ − θ*)ᵀ ḡ(θ) ≥ (1 − γ) √ω ‖θ − θ*‖²`, as `(lhs, rhs)`.
pub fn monotonicity_sides(
    mdp: &TabularMdp,
    policy: &PolicyTable,
    features: &LinearFeatures,
    theta: &[f64],
    theta_star: &[f64],
    omega: f64,
) -> Result<(f64, f64)> {
    let g = mean_pseudo_gradient(mdp, policy, features, theta)?;
    let diff: Vec<f64> = theta.iter().zip(theta_star).map(|(a, b)| a - b).collect();
    let lhs = math::dot(&diff, &g);
    let rhs = (1.0 - mdp.gamma()) * math::sqrt(omega) * math::norm_sq(&diff);
    Ok((lhs, rhs))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TdRunConfig {
    pub horizon: u64,
    pub schedule: Schedule,
    pub beta1: f64,
    pub beta2: f64,
    pub lambda: f64,
    /// Domain radius; `None` uses `2‖θ*‖ + 1`.
    pub radius: Option<f64>,
    /// Lower bound for first-step gradient coordinates.
    pub g0: f64,
    /// Resample the first transition until it clears `g0`, and floor `v̂` at
    /// `g0²` in denominators. Without it a zero `v̂` coordinate is an error.
    pub enforce_g0: bool,
    pub seed: u64,
    /// Checkpoint spacing; `None` picks the largest divisor of `T` not above `T/1000`.
    pub oracle_every: Option<u64>,
    /// Defaults to `WeightOnMomentum`: with `β1t → 0` the other rule stops
    /// updating `m` and the iterate stalls.
    pub convention: MomentConvention,
    /// `θ₁`; zeros when absent.
    pub theta_init: Option<Vec<f64>>,
    pub config_echo: String,
}

impl TdRunConfig {
    pub fn new(horizon: u64, schedule: Schedule, seed: u64) -> Self {
        Self {
            horizon,
            schedule,
            beta1: 0.9,
            beta2: 0.999,
            lambda: 0.99,
            radius: None,
            g0: 1e-3,
            enforce_g0: true,
            seed,
            oracle_every: None,
            convention: MomentConvention::WeightOnMomentum,
            theta_init: None,
            config_echo: String::new(),
        }
    }
}

/// `max(1, T/1000)`, lowered until it divides `T`.
pub fn default_oracle_every(horizon: u64) -> u64 {
    let mut k = (horizon / 1000).max(1);
    while !horizon.is_multiple_of(k) {
        k -= 1;
    }
    k
}

pub(crate) fn resolve_oracle_every(horizon: u64, requested: Option<u64>) -> Result<u64> {
    if horizon == 0 {
        return Err(Error::InvalidConfig { field: "horizon", reason: "must be at least 1".into() });
    }
    match requested {
        None => Ok(default_oracle_every(horizon)),
        Some(k) if k == 0 || !horizon.is_multiple_of(k) => Err(Error::InvalidConfig {
            field: "oracle_every",
            reason: format!("{k} does not divide horizon {horizon}"),
        }),
        Some(k) => Ok(k),
    }
}

/// Stream id offset for first-step resampling draws.
pub(crate) const RESAMPLE_STREAM: u64 = 1 << 48;
pub(crate) const MAX_G0_ATTEMPTS: usize = 100;

/// Every coordinate where `φ(s)` is nonzero has `|gᵢ| ≥ G₀`.
fn meets_g0(g: &[f64], phi: &[f64], g0: f64) -> bool {
    g.iter().zip(phi).all(|(gi, f)| *f == 0.0 || math::abs(*gi) >= g0)
}

/// Runs the projected, averaged TD-AMSGrad loop along one trajectory of the
/// true kernel and records `‖θ̄_t − θ*‖²` where `θ̄_t` averages `θ₂, …, θ_{t+1}`.
pub fn run_td_amsgrad(
    mdp: &TabularMdp,
    policy: &PolicyTable,
    features: &LinearFeatures,
    config: &TdRunConfig,
) -> Result<ConvergenceReport> {
    let every = resolve_oracle_every(config.horizon, config.oracle_every)?;
    if !(config.g0 > 0.0) {
        return Err(Error::InvalidConfig { field: "g0", reason: format!("{} must be positive", config.g0) });
    }
    let d = features.dim();
    // validates ω > 0 along the way
    feature_covariance(mdp, policy, features)?;
    let theta_star = td_fixed_point(mdp, policy, features)?;
    let radius = config.radius.unwrap_or(2.0 * math::norm(&theta_star) + 1.0);
    let ball = DomainBall::new(radius)?;
    if !ball.contains(&theta_star) {
        return Err(Error::InvalidConfig {
            field: "radius",
            reason: format!("{radius} does not contain the fixed point (norm {})", math::norm(&theta_star)),
        });
    }
    let mut theta = config.theta_init.clone().unwrap_or_else(|| vec![0.0; d]);
    if theta.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: theta.len() });
    }
    if !ball.contains(&theta) {
        return Err(Error::InvalidConfig { field: "theta_init", reason: "outside the domain ball".into() });
    }

    let mut opt = AmsGradState::new(d, config.beta1, config.beta2, config.lambda, config.schedule)?
        .with_convention(config.convention)
        .with_denominator_floor(config.enforce_g0.then_some(config.g0 * config.g0));
    let gamma = mdp.gamma();
    let grad_bound = mdp.r_max() + (1.0 + gamma) * radius;

    let mut rng = Rng::split(config.seed, 0);
    let mut s = sampler::sample_initial(mdp, &mut rng);
    let mut violations = 0usize;
    let mut resamples = 0usize;
    let mut g0_satisfied = true;
    let mut max_grad = 0.0f64;
    let mut sum = vec![0.0; d];
    let mut sq_err_sum = 0.0;
    let mut checkpoints = Vec::new();
    let mut aux = Vec::new();

    for t in 1..=config.horizon {
        let a = rng.categorical(policy.row(s));
        let mut tr = Transition { s, a, r: mdp.reward(s, a), s_next: sampler::step_true(mdp, s, a, &mut rng) };
        let mut g = td_pseudo_gradient(&theta, features, gamma, &tr);

        if t == 1 && config.enforce_g0 && !meets_g0(&g, features.phi(tr.s), config.g0) {
            g0_satisfied = false;
            for k in 0..MAX_G0_ATTEMPTS as u64 {
                resamples += 1;
                let mut r2 = Rng::split(config.seed, RESAMPLE_STREAM + k);
                let s1 = sampler::sample_initial(mdp, &mut r2);
                let a1 = r2.categorical(policy.row(s1));
                let cand = Transition {
                    s: s1,
                    a: a1,
                    r: mdp.reward(s1, a1),
                    s_next: sampler::step_true(mdp, s1, a1, &mut r2),
                };
                let g_cand = td_pseudo_gradient(&theta, features, gamma, &cand);
                if meets_g0(&g_cand, features.phi(cand.s), config.g0) {
                    tr = cand;
                    g = g_cand;
                    g0_satisfied = true;
                    break;
                }
            }
            if !g0_satisfied {
                log::warn!("first TD gradient below g0 after {MAX_G0_ATTEMPTS} resamples; continuing");
            }
        }

        let gn = math::norm(&g);
        max_grad = max_grad.max(gn);
        if gn > grad_bound * (1.0 + 1e-12) {
            violations += 1;
        }

        let step = opt.step_direction(&g)?;
        let moved: Vec<f64> = theta.iter().zip(&step).map(|(x, dx)| x - dx).collect();
        theta = amsgrad::project(&moved, &opt.effective_v_hat(), &ball)?;
        if math::norm(&theta) > radius + 1e-10 {
            violations += 1;
        }

        for (acc, x) in sum.iter_mut().zip(&theta) {
            *acc += x;
        }
        sq_err_sum += math::dist_sq(&theta, &theta_star);
        if t == 1 || t % every == 0 {
            let avg: Vec<f64> = sum.iter().map(|x| x / t as f64).collect();
            checkpoints.push(Checkpoint { t, value: math::dist_sq(&avg, &theta_star) });
            aux.push(Checkpoint { t, value: sq_err_sum / t as f64 });
        }
        s = tr.s_next;
    }
    violations += opt.vhat_violations;

    Ok(ConvergenceReport {
        config_echo: config.config_echo.clone(),
        seed: config.seed,
        metric: MetricKind::AvgIterateDistSq,
        checkpoints,
        aux_checkpoints: aux,
        invariant_violations: violations,
        g0_resamples: resamples,
        g0_satisfied,
        max_grad_norm: max_grad,
        grad_norm_bound: grad_bound,
        final_theta: theta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn pseudo_gradient_example() {
        let f = LinearFeatures::new(2, 2, vec![1.0, 0.0, 1.0, 0.0]).unwrap();
        let tr = Transition { s: 0, a: 0, r: 1.0, s_next: 1 };
        assert_eq!(td_pseudo_gradient(&[0.0, 0.0], &f, 0.5, &tr), vec![-1.0, 0.0]);
    }

    #[test]
    fn scalar_mean_path() {
        let (mdp, policy, features) = fixtures::two_state_scalar_td();
        for theta in [-1.0, 0.0, 0.7, 4.0 / 3.0, 3.0] {
            let g = mean_pseudo_gradient(&mdp, &policy, &features, &[theta]).unwrap();
            assert!(math::abs(g[0] - (0.5 * theta - 2.0 / 3.0)) < 1e-12, "{theta}: {}", g[0]);
        }
        let star = td_fixed_point(&mdp, &policy, &features).unwrap();
        assert!(math::abs(star[0] - 4.0 / 3.0) < 1e-12);
    }

    #[test]
    fn rejects_long_feature_rows() {
        assert!(matches!(LinearFeatures::new(1, 2, vec![1.0, 1.0]), Err(Error::InvalidFeatures(_))));
    }

    #[test]
    fn oracle_cadence() {
        assert_eq!(default_oracle_every(1), 1);
        assert_eq!(default_oracle_every(200_000), 200);
        assert_eq!(default_oracle_every(1999), 1);
        assert!(resolve_oracle_every(10, Some(3)).is_err());
    }

    #[test]
    fn single_step_average_is_second_iterate() {
        let (mdp, policy, features) = fixtures::two_state_scalar_td();
        let mut cfg = TdRunConfig::new(1, Schedule::Constant { alpha: 0.1 }, 3);
        cfg.radius = Some(10.0);
        let rep = run_td_amsgrad(&mdp, &policy, &features, &cfg).unwrap();
        assert_eq!(rep.checkpoints.len(), 1);
        let star = td_fixed_point(&mdp, &policy, &features).unwrap();
        assert_eq!(rep.checkpoints[0].value, math::dist_sq(&rep.final_theta, &star));
    }

    #[test]
    fn zero_rewards_stay_at_origin() {
        let (mdp, policy, features) = fixtures::td_ten_state();
        let mdp = mdp.with_zero_rewards();
        let mut cfg = TdRunConfig::new(500, Schedule::Diminishing { alpha: 0.5 }, 1);
        cfg.radius = Some(1.0);
        let rep = run_td_amsgrad(&mdp, &policy, &features, &cfg).unwrap();
        assert!(rep.final_theta.iter().all(|x| *x == 0.0));
        assert!(!rep.g0_satisfied);
        assert_eq!(rep.invariant_violations, 0);
    }
}
