//! Markovian trajectory generation under the true kernel `P` and under the
//! restart kernel `P̂(·|s,a) = γ P(·|s,a) + (1 − γ) ζ(·)`.

use alloc::vec::Vec;

use crate::mdp::{PolicyTable, TabularMdp};
use crate::policy::SoftmaxPolicy;
use crate::rng::Rng;

/// One observed step `(s, a, r, s')` with `r = R(s, a)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub s: usize,
    pub a: usize,
    pub r: f64,
    pub s_next: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kernel {
    True,
    Restart,
}

/// `s' ~ P(·|s, a)` by inverse CDF over the precomputed row sums.
pub fn step_true(mdp: &TabularMdp, s: usize, a: usize, rng: &mut Rng) -> usize {
    rng.categorical_cdf(mdp.transition_cdf_row(s, a))
}

/// `s' ~ P̂(·|s, a)`: with probability `γ` a true transition, otherwise a reset to `ζ`.
pub fn step_restart(mdp: &TabularMdp, s: usize, a: usize, rng: &mut Rng) -> usize {
    if rng.uniform() < mdp.gamma() {
        step_true(mdp, s, a, rng)
    } else {
        sample_initial(mdp, rng)
    }
}

pub fn step(mdp: &TabularMdp, kernel: Kernel, s: usize, a: usize, rng: &mut Rng) -> usize {
    match kernel {
        Kernel::True => step_true(mdp, s, a, rng),
        Kernel::Restart => step_restart(mdp, s, a, rng),
    }
}

/// `s₁ ~ ζ`.
pub fn sample_initial(mdp: &TabularMdp, rng: &mut Rng) -> usize {
    rng.categorical_cdf(mdp.initial_cdf())
}

/// Supplies the action distribution in force at a given step.
pub trait PolicyProvider {
    fn policy_at(&mut self, step: usize) -> &PolicyTable;
}

impl PolicyProvider for PolicyTable {
    fn policy_at(&mut self, _step: usize) -> &PolicyTable {
        self
    }
}

impl PolicyProvider for &PolicyTable {
    fn policy_at(&mut self, _step: usize) -> &PolicyTable {
        self
    }
}

impl PolicyProvider for SoftmaxPolicy {
    fn policy_at(&mut self, _step: usize) -> &PolicyTable {
        self.table()
    }
}

/// A sequence of policies indexed by step; the last one stays in force.
impl PolicyProvider for Vec<PolicyTable> {
    fn policy_at(&mut self, step: usize) -> &PolicyTable {
        let i = step.saturating_sub(1).min(self.len() - 1);
        &self[i]
    }
}

/// Rolls out `length` transitions starting from `s₁ ~ ζ`. Step indices passed
/// to the provider start at 1.
pub fn rollout<P: PolicyProvider + ?Sized>(
    mdp: &TabularMdp,
    provider: &mut P,
    kernel: Kernel,
    length: usize,
    rng: &mut Rng,
) -> Vec<Transition> {
    assert!(length >= 1, "rollout length must be at least 1");
    let mut out = Vec::with_capacity(length);
    let mut s = sample_initial(mdp, rng);
    for t in 1..=length {
        let a = rng.categorical(provider.policy_at(t).row(s));
        let s_next = step(mdp, kernel, s, a, rng);
        out.push(Transition { s, a, r: mdp.reward(s, a), s_next });
        s = s_next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use alloc::vec;

    #[test]
    fn deterministic_row() {
        let mdp =
            TabularMdp::new(3, 1, vec![0., 0., 1., 0., 0., 1., 1., 0., 0.], vec![0.; 3], 0.5, vec![1., 0., 0.], 1.0)
                .unwrap();
        let mut rng = Rng::new(3);
        for _ in 0..100 {
            assert_eq!(step_true(&mdp, 0, 0, &mut rng), 2);
            assert_eq!(step_true(&mdp, 2, 0, &mut rng), 0);
        }
    }

    #[test]
    fn repeat_seed_repeats_trajectory() {
        let mdp = fixtures::random_mdp(5, 2, 0.8, &mut Rng::new(0));
        let pi = PolicyTable::uniform(5, 2);
        let a = rollout(&mdp, &mut &pi, Kernel::True, 1000, &mut Rng::new(99));
        let b = rollout(&mdp, &mut &pi, Kernel::True, 1000, &mut Rng::new(99));
        assert_eq!(a, b);
    }

    #[test]
    fn length_one_rollout() {
        let mdp = fixtures::two_state_chain();
        let pi = PolicyTable::uniform(2, 1);
        let tr = rollout(&mdp, &mut &pi, Kernel::True, 1, &mut Rng::new(1));
        assert_eq!(tr.len(), 1);
        assert_eq!(tr[0].s, 0); // ζ = e₀
        assert_eq!(tr[0].r, mdp.reward(0, 0));
    }

    #[test]
    fn true_row_frequency_within_binomial_band() {
        let mdp = TabularMdp::new(2, 1, vec![0.5, 0.5, 0.5, 0.5], vec![0.; 2], 0.5, vec![1., 0.], 1.0).unwrap();
        let mut rng = Rng::new(2024);
        let n = 100_000;
        let zeros = (0..n).filter(|_| step_true(&mdp, 0, 0, &mut rng) == 0).count();
        let freq = zeros as f64 / n as f64;
        let se = crate::math::sqrt(0.25 / n as f64);
        assert!((freq - 0.5).abs() <= 3.0 * se, "freq {freq}");
    }

    #[test]
    fn restart_mixture_law() {
        // γ = 0.5, P row (0.2, 0.8), ζ = (1, 0) → next-state law (0.6, 0.4)
        let mdp = TabularMdp::new(2, 1, vec![0.2, 0.8, 0.2, 0.8], vec![0.; 2], 0.5, vec![1., 0.], 1.0).unwrap();
        let mut rng = Rng::new(77);
        let n = 100_000;
        let zeros = (0..n).filter(|_| step_restart(&mdp, 1, 0, &mut rng) == 0).count();
        let freq = zeros as f64 / n as f64;
        let se = crate::math::sqrt(0.6 * 0.4 / n as f64);
        assert!((freq - 0.6).abs() <= 3.0 * se, "freq {freq}");
    }
}
