//! Tabular softmax policies `π_θ(a|s) ∝ exp(θ_{s,a})`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::mdp::PolicyTable;
use crate::rng::Rng;

/// Uniform bound on the score norm for tabular softmax: `‖e_a − π(·|s)‖ ≤ √2`.
pub const SCORE_NORM_BOUND: f64 = core::f64::consts::SQRT_2;

#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxPolicy {
    n_states: usize,
    n_actions: usize,
    theta: Vec<f64>,
    table: PolicyTable,
}

fn softmax_rows(theta: &[f64], n_states: usize, n_actions: usize) -> PolicyTable {
    let mut probs = Vec::with_capacity(theta.len());
    for row in theta.chunks(n_actions) {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let start = probs.len();
        probs.extend(row.iter().map(|x| math::exp(x - max)));
        let z: f64 = probs[start..].iter().sum();
        probs[start..].iter_mut().for_each(|p| *p /= z);
    }
    PolicyTable::from_rows_unchecked(n_states, n_actions, probs)
}

impl SoftmaxPolicy {
    pub fn new(n_states: usize, n_actions: usize, theta: Vec<f64>) -> Result<Self> {
        if theta.len() != n_states * n_actions {
            return Err(Error::DimensionMismatch { expected: n_states * n_actions, got: theta.len() });
        }
        if theta.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidPolicy("non-finite logit".into()));
        }
        let table = softmax_rows(&theta, n_states, n_actions);
        Ok(Self { n_states, n_actions, theta, table })
    }

    /// All-zero logits, i.e. the uniform policy.
    pub fn zeros(n_states: usize, n_actions: usize) -> Self {
        Self::new(n_states, n_actions, vec![0.0; n_states * n_actions]).expect("consistent dims")
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn set_theta(&mut self, theta: &[f64]) {
        assert_eq!(theta.len(), self.theta.len(), "parameter dimension");
        self.theta.copy_from_slice(theta);
        self.table = softmax_rows(&self.theta, self.n_states, self.n_actions);
    }

    pub fn table(&self) -> &PolicyTable {
        &self.table
    }

    pub fn prob(&self, s: usize, a: usize) -> f64 {
        self.table.prob(s, a)
    }

    /// `log π_θ(a|s)` via log-sum-exp.
    pub fn log_prob(&self, s: usize, a: usize) -> f64 {
        let row = &self.theta[s * self.n_actions..(s + 1) * self.n_actions];
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + math::ln(row.iter().map(|x| math::exp(x - max)).sum::<f64>());
        row[a] - lse
    }

    /// Block of `∇_θ log π_θ(a|s)` belonging to state `s`: `e_a − π(·|s)`.
    pub fn score_block(&self, s: usize, a: usize) -> Vec<f64> {
        self.table.row(s).iter().enumerate().map(|(b, p)| if b == a { 1.0 - p } else { -p }).collect()
    }

    /// Full score vector `∇_θ log π_θ(a|s)`; zero outside the block of `s`.
    pub fn score(&self, s: usize, a: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        out[s * self.n_actions..(s + 1) * self.n_actions].copy_from_slice(&self.score_block(s, a));
        out
    }
}

/// Empirical Lipschitz constants `(L_π, L)` of the softmax policy and of its
/// score, as the largest ratio observed over random nearby parameter pairs.
pub fn estimate_lipschitz(n_states: usize, n_actions: usize, samples: usize, rng: &mut Rng) -> (f64, f64) {
    let dim = n_states * n_actions;
    let (mut l_pi, mut l_score) = (0.0f64, 0.0f64);
    for _ in 0..samples {
        let t1: Vec<f64> = (0..dim).map(|_| 3.0 * rng.normal()).collect();
        let scale = math::powi(10.0, -(rng.index(4) as i32) - 1);
        let t2: Vec<f64> = t1.iter().map(|x| x + scale * rng.normal()).collect();
        let dist = math::sqrt(math::dist_sq(&t1, &t2));
        if dist == 0.0 {
            continue;
        }
        let p1 = SoftmaxPolicy::new(n_states, n_actions, t1).expect("dims");
        let p2 = SoftmaxPolicy::new(n_states, n_actions, t2).expect("dims");
        for s in 0..n_states {
            for a in 0..n_actions {
                l_pi = l_pi.max(math::abs(p1.prob(s, a) - p2.prob(s, a)) / dist);
                let d = math::sqrt(math::dist_sq(&p1.score_block(s, a), &p2.score_block(s, a)));
                l_score = l_score.max(d / dist);
            }
        }
    }
    (l_pi, l_score)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_logits_score() {
        let p = SoftmaxPolicy::zeros(2, 2);
        assert_eq!(p.score(1, 0), vec![0.0, 0.0, 0.5, -0.5]);
    }

    #[test]
    fn score_block_sums_to_zero_and_rows_normalize() {
        let p = SoftmaxPolicy::new(2, 3, vec![0.3, -2.0, 5.0, 700.0, 0.0, -700.0]).unwrap();
        for s in 0..2 {
            assert!((p.table().row(s).iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            for a in 0..3 {
                assert!(p.score_block(s, a).iter().sum::<f64>().abs() < 1e-12);
            }
        }
    }

    #[test]
    fn score_matches_finite_differences_of_log_prob() {
        let mut rng = Rng::new(5);
        let h = 1e-6;
        for _ in 0..50 {
            let theta: Vec<f64> = (0..6).map(|_| rng.normal()).collect();
            let p = SoftmaxPolicy::new(3, 2, theta.clone()).unwrap();
            let (s, a) = (rng.index(3), rng.index(2));
            let score = p.score(s, a);
            for i in 0..6 {
                let mut up = theta.clone();
                up[i] += h;
                let mut dn = theta.clone();
                dn[i] -= h;
                let fd = (SoftmaxPolicy::new(3, 2, up).unwrap().log_prob(s, a)
                    - SoftmaxPolicy::new(3, 2, dn).unwrap().log_prob(s, a))
                    / (2.0 * h);
                assert!((fd - score[i]).abs() < 1e-6, "coord {i}: fd {fd} vs {}", score[i]);
            }
        }
    }
}
