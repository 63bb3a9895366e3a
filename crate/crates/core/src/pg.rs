//! Policy gradient with the geometric-horizon Q estimator, driven by AMSGrad
//! or plain SGD along a restart-kernel trajectory.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::amsgrad::{AmsGradState, MomentConvention, Schedule};
use crate::error::{Error, Result};
use crate::math;
use crate::mdp::{exact_policy_gradient, PolicyTable, TabularMdp};
use crate::policy::{SoftmaxPolicy, SCORE_NORM_BOUND};
use crate::report::{Checkpoint, ConvergenceReport, MetricKind};
use crate::rng::Rng;
use crate::sampler;
use crate::td::{resolve_oracle_every, MAX_G0_ATTEMPTS, RESAMPLE_STREAM};

/// Unbiased estimate of `Q^π(s, a)`.
///
/// Draws `T ~ Geom(1 − √γ)` on `{1, 2, …}` and returns
/// `Σ_{t=1}^{T} γ^{(t−1)/2} R(s_t, a_t)` along a true-kernel rollout from
/// `(s, a)`. Since `P(T ≥ t) = γ^{(t−1)/2}`, the expectation is
/// `Σ_t γ^{t−1} E[R_t] = Q(s, a)`.
pub fn est_q(mdp: &TabularMdp, policy: &PolicyTable, s: usize, a: usize, rng: &mut Rng) -> f64 {
    let root = math::sqrt(mdp.gamma());
    let horizon = rng.geometric(root);
    let (mut s, mut a) = (s, a);
    let mut weight = 1.0;
    let mut q = 0.0;
    for t in 1..=horizon {
        q += weight * mdp.reward(s, a);
        if t == horizon {
            break;
        }
        weight *= root;
        s = sampler::step_true(mdp, s, a, rng);
        a = rng.categorical(policy.row(s));
    }
    q
}

/// `g = Q̂ · ∇_θ log π_θ(a|s)`.
pub fn pg_gradient(policy: &SoftmaxPolicy, q_hat: f64, s: usize, a: usize) -> Vec<f64> {
    let mut g = policy.score(s, a);
    g.iter_mut().for_each(|x| *x *= q_hat);
    g
}

/// `√2 · R_max / (1 − √γ)`, the largest `‖g‖` the estimator can produce.
pub fn realized_gradient_bound(mdp: &TabularMdp) -> f64 {
    SCORE_NORM_BOUND * mdp.r_max() / (1.0 - math::sqrt(mdp.gamma()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PgAlgorithm {
    AmsGrad,
    Sgd,
}

impl PgAlgorithm {
    pub fn name(&self) -> &'static str {
        match self {
            PgAlgorithm::AmsGrad => "amsgrad",
            PgAlgorithm::Sgd => "sgd",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PgRunConfig {
    pub horizon: u64,
    pub schedule: Schedule,
    pub beta1: f64,
    pub beta2: f64,
    pub g0: f64,
    pub enforce_g0: bool,
    pub seed: u64,
    pub oracle_every: Option<u64>,
    pub algorithm: PgAlgorithm,
    pub convention: MomentConvention,
    pub theta_init: Option<Vec<f64>>,
    pub config_echo: String,
}

impl PgRunConfig {
    pub fn new(horizon: u64, schedule: Schedule, algorithm: PgAlgorithm, seed: u64) -> Self {
        Self {
            horizon,
            schedule,
            beta1: 0.9,
            beta2: 0.999,
            g0: 1e-3,
            enforce_g0: true,
            seed,
            oracle_every: None,
            algorithm,
            convention: MomentConvention::WeightOnGradient,
            theta_init: None,
            config_echo: String::new(),
        }
    }
}

/// Coordinates in the block of state `s` all have `|gᵢ| ≥ G₀`; the rest of
/// the score is structurally zero.
fn meets_g0(g: &[f64], s: usize, n_actions: usize, g0: f64) -> bool {
    g[s * n_actions..(s + 1) * n_actions].iter().all(|x| math::abs(*x) >= g0)
}

pub fn run_pg_amsgrad(mdp: &TabularMdp, config: &PgRunConfig) -> Result<ConvergenceReport> {
    let mut c = config.clone();
    c.algorithm = PgAlgorithm::AmsGrad;
    run_pg(mdp, &c)
}

pub fn run_pg_sgd(mdp: &TabularMdp, config: &PgRunConfig) -> Result<ConvergenceReport> {
    let mut c = config.clone();
    c.algorithm = PgAlgorithm::Sgd;
    run_pg(mdp, &c)
}

/// Runs the policy gradient loop with the configured update rule and records
/// the running minimum of the exact `‖∇J(θ_t)‖²`.
pub fn run_pg(mdp: &TabularMdp, config: &PgRunConfig) -> Result<ConvergenceReport> {
    let every = resolve_oracle_every(config.horizon, config.oracle_every)?;
    let (ns, na) = (mdp.n_states(), mdp.n_actions());
    let dim = ns * na;
    let theta0 = config.theta_init.clone().unwrap_or_else(|| alloc::vec![0.0; dim]);
    let mut policy = SoftmaxPolicy::new(ns, na, theta0)?;
    let amsgrad = config.algorithm == PgAlgorithm::AmsGrad;
    if amsgrad && !(config.g0 > 0.0) {
        return Err(Error::InvalidConfig { field: "g0", reason: format!("{} must be positive", config.g0) });
    }
    let mut opt = AmsGradState::new(dim, config.beta1, config.beta2, 1.0, config.schedule)?
        .with_convention(config.convention)
        .with_denominator_floor(config.enforce_g0.then_some(config.g0 * config.g0));
    let grad_bound = realized_gradient_bound(mdp);

    let mut rng = Rng::split(config.seed, 0);
    let mut s = sampler::sample_initial(mdp, &mut rng);
    let mut a = rng.categorical(policy.table().row(s));
    let mut violations = 0usize;
    let mut resamples = 0usize;
    let mut g0_satisfied = true;
    let mut max_grad = 0.0f64;
    let mut best = f64::INFINITY;
    let mut checkpoints = Vec::new();
    let mut aux = Vec::new();

    for t in 1..=config.horizon {
        if t == 1 || t % every == 0 {
            let value = math::norm_sq(&exact_policy_gradient(mdp, &policy)?);
            best = best.min(value);
            checkpoints.push(Checkpoint { t, value: best });
            aux.push(Checkpoint { t, value });
        }

        let mut est_rng = Rng::split(config.seed, t);
        let q = est_q(mdp, policy.table(), s, a, &mut est_rng);
        let mut g = pg_gradient(&policy, q, s, a);
        if t == 1 && amsgrad && config.enforce_g0 && !meets_g0(&g, s, na, config.g0) {
            g0_satisfied = false;
            for k in 0..MAX_G0_ATTEMPTS as u64 {
                resamples += 1;
                let mut r2 = Rng::split(config.seed, RESAMPLE_STREAM + k);
                let cand = pg_gradient(&policy, est_q(mdp, policy.table(), s, a, &mut r2), s, a);
                if meets_g0(&cand, s, na, config.g0) {
                    g = cand;
                    g0_satisfied = true;
                    break;
                }
            }
            if !g0_satisfied {
                log::warn!("first policy gradient below g0 after {MAX_G0_ATTEMPTS} resamples; continuing");
            }
        }

        let gn = math::norm(&g);
        max_grad = max_grad.max(gn);
        if gn > grad_bound * (1.0 + 1e-12) {
            violations += 1;
        }

        // the loop follows gradient ascent on J: θ ← θ + step
        let next: Vec<f64> = if amsgrad {
            let neg: Vec<f64> = g.iter().map(|x| -x).collect();
            opt.update(policy.theta(), &neg)?
        } else {
            let alpha = config.schedule.stepsize(t);
            policy.theta().iter().zip(&g).map(|(x, gi)| x + alpha * gi).collect()
        };
        policy.set_theta(&next);

        s = sampler::step_restart(mdp, s, a, &mut rng);
        a = rng.categorical(policy.table().row(s));
    }
    violations += opt.vhat_violations;

    Ok(ConvergenceReport {
        config_echo: config.config_echo.clone(),
        seed: config.seed,
        metric: MetricKind::MinGradNormSq,
        checkpoints,
        aux_checkpoints: aux,
        invariant_violations: violations,
        g0_resamples: resamples,
        g0_satisfied,
        max_grad_norm: max_grad,
        grad_norm_bound: grad_bound,
        final_theta: policy.theta().to_vec(),
    })
}
