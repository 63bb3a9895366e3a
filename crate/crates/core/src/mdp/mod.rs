//! Finite MDPs and their exact ground truth.
//!
//! Discounting convention throughout the crate: returns are
//! `Σ_{t≥1} γ^{t−1} R_t`, so `V(s) ≤ R_max / (1 − γ)`.

mod linear;
mod mixing;
mod oracle;

use alloc::format;
use alloc::vec::Vec;

pub use linear::{feature_covariance, td_fixed_point, FeatureCovariance};
pub use mixing::{mixing_profile, tau_star, MixingProfile, RHO_MAX, RHO_MIN};
pub use oracle::{
    apply_bellman, discounted_visitation, exact_j, exact_policy_gradient, exact_v_q, stationary_distribution,
    ValueTables, Visitation,
};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::math;

/// Tolerance for probability rows summing to one.
pub const PROB_TOL: f64 = 1e-12;

/// A finite discounted MDP `(S, A, P, R, γ, ζ)` with rewards in `[0, r_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularMdp {
    n_states: usize,
    n_actions: usize,
    /// `P[s][a][s']`, flattened row-major.
    transition: Vec<f64>,
    /// `R[s][a]`, flattened row-major.
    reward: Vec<f64>,
    gamma: f64,
    initial_dist: Vec<f64>,
    r_max: f64,
    transition_cdf: Vec<f64>,
    initial_cdf: Vec<f64>,
}

fn check_prob_vector(v: &[f64], what: &str) -> Result<()> {
    if let Some((i, p)) = v.iter().enumerate().find(|(_, p)| !(**p >= 0.0) || !p.is_finite()) {
        return Err(Error::InvalidMdp(format!("{what}: entry {i} is {p}, must be a non-negative finite probability")));
    }
    let sum: f64 = v.iter().sum();
    if math::abs(sum - 1.0) > PROB_TOL {
        return Err(Error::InvalidMdp(format!("{what}: sums to {sum}, expected 1")));
    }
    Ok(())
}

fn cumulative(v: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    v.iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect()
}

impl TabularMdp {
    pub fn new(
        n_states: usize,
        n_actions: usize,
        transition: Vec<f64>,
        reward: Vec<f64>,
        gamma: f64,
        initial_dist: Vec<f64>,
        r_max: f64,
    ) -> Result<Self> {
        if n_states == 0 || n_actions == 0 {
            return Err(Error::InvalidMdp("n_states and n_actions must be positive".into()));
        }
        if transition.len() != n_states * n_actions * n_states {
            return Err(Error::InvalidMdp(format!(
                "transition has {} entries, expected {}",
                transition.len(),
                n_states * n_actions * n_states
            )));
        }
        if reward.len() != n_states * n_actions {
            return Err(Error::InvalidMdp(format!(
                "reward has {} entries, expected {}",
                reward.len(),
                n_states * n_actions
            )));
        }
        if initial_dist.len() != n_states {
            return Err(Error::InvalidMdp(format!(
                "initial_dist has {} entries, expected {n_states}",
                initial_dist.len()
            )));
        }
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::InvalidMdp(format!("gamma = {gamma} must lie in (0, 1)")));
        }
        if !(r_max >= 0.0) || !r_max.is_finite() {
            return Err(Error::InvalidMdp(format!("r_max = {r_max} must be finite and non-negative")));
        }
        for s in 0..n_states {
            for a in 0..n_actions {
                let start = (s * n_actions + a) * n_states;
                check_prob_vector(&transition[start..start + n_states], &format!("transition[{s}][{a}]"))?;
                let r = reward[s * n_actions + a];
                if !(r >= 0.0 && r <= r_max) {
                    return Err(Error::InvalidMdp(format!("reward[{s}][{a}] = {r} outside [0, {r_max}]")));
                }
            }
        }
        check_prob_vector(&initial_dist, "initial_dist")?;
        let transition_cdf = transition.chunks(n_states).flat_map(cumulative).collect();
        let initial_cdf = cumulative(&initial_dist);
        Ok(Self { n_states, n_actions, transition, reward, gamma, initial_dist, r_max, transition_cdf, initial_cdf })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn initial_dist(&self) -> &[f64] {
        &self.initial_dist
    }

    pub(crate) fn initial_cdf(&self) -> &[f64] {
        &self.initial_cdf
    }

    /// `P(·|s, a)`.
    pub fn transition_row(&self, s: usize, a: usize) -> &[f64] {
        let start = (s * self.n_actions + a) * self.n_states;
        &self.transition[start..start + self.n_states]
    }

    pub(crate) fn transition_cdf_row(&self, s: usize, a: usize) -> &[f64] {
        let start = (s * self.n_actions + a) * self.n_states;
        &self.transition_cdf[start..start + self.n_states]
    }

    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.reward[s * self.n_actions + a]
    }

    pub fn rewards(&self) -> &[f64] {
        &self.reward
    }

    pub fn transitions(&self) -> &[f64] {
        &self.transition
    }

    fn check_policy(&self, policy: &PolicyTable) -> Result<()> {
        if policy.n_states != self.n_states || policy.n_actions != self.n_actions {
            return Err(Error::InvalidPolicy(format!(
                "policy is {}x{}, MDP is {}x{}",
                policy.n_states, policy.n_actions, self.n_states, self.n_actions
            )));
        }
        Ok(())
    }

    /// State kernel `P_π(s'|s) = Σ_a π(a|s) P(s'|s,a)`.
    pub fn policy_kernel(&self, policy: &PolicyTable) -> Result<Matrix> {
        self.check_policy(policy)?;
        let n = self.n_states;
        let mut k = Matrix::zeros(n, n);
        for s in 0..n {
            for a in 0..self.n_actions {
                let pa = policy.prob(s, a);
                if pa == 0.0 {
                    continue;
                }
                for (dst, p) in k.row_mut(s).iter_mut().zip(self.transition_row(s, a)) {
                    *dst += pa * p;
                }
            }
        }
        Ok(k)
    }

    /// Expected one-step reward `r_π(s) = Σ_a π(a|s) R(s,a)`.
    pub fn policy_reward(&self, policy: &PolicyTable) -> Result<Vec<f64>> {
        self.check_policy(policy)?;
        Ok((0..self.n_states)
            .map(|s| (0..self.n_actions).map(|a| policy.prob(s, a) * self.reward(s, a)).sum())
            .collect())
    }

    /// The same MDP with every reward set to zero.
    pub fn with_zero_rewards(&self) -> Self {
        let mut m = self.clone();
        m.reward.iter_mut().for_each(|r| *r = 0.0);
        m
    }
}

/// A stochastic policy as an `S × A` table of action probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyTable {
    n_states: usize,
    n_actions: usize,
    probs: Vec<f64>,
}

impl PolicyTable {
    pub fn new(n_states: usize, n_actions: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != n_states * n_actions {
            return Err(Error::InvalidPolicy(format!(
                "{} probabilities for a {n_states}x{n_actions} table",
                probs.len()
            )));
        }
        for (s, row) in probs.chunks(n_actions).enumerate() {
            check_prob_vector(row, &format!("policy row {s}")).map_err(|e| match e {
                Error::InvalidMdp(m) => Error::InvalidPolicy(m),
                other => other,
            })?;
        }
        Ok(Self { n_states, n_actions, probs })
    }

    pub(crate) fn from_rows_unchecked(n_states: usize, n_actions: usize, probs: Vec<f64>) -> Self {
        Self { n_states, n_actions, probs }
    }

    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        let p = 1.0 / n_actions as f64;
        Self { n_states, n_actions, probs: alloc::vec![p; n_states * n_actions] }
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn prob(&self, s: usize, a: usize) -> f64 {
        self.probs[s * self.n_actions + a]
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.probs[s * self.n_actions..(s + 1) * self.n_actions]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }
}

/// A probability vector over states, or over state-action pairs when `joint`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateDist {
    pub probs: Vec<f64>,
    /// `Some(n_actions)` when indexed by `s * n_actions + a`.
    pub joint_actions: Option<usize>,
}

impl StateDist {
    pub fn over_states(probs: Vec<f64>) -> Self {
        Self { probs, joint_actions: None }
    }

    pub fn over_pairs(probs: Vec<f64>, n_actions: usize) -> Self {
        Self { probs, joint_actions: Some(n_actions) }
    }

    /// Marginal over states (identity for state distributions).
    pub fn state_marginal(&self) -> Vec<f64> {
        match self.joint_actions {
            None => self.probs.clone(),
            Some(na) => self.probs.chunks(na).map(|c| c.iter().sum()).collect(),
        }
    }
}
