//! Small reference problems used by tests, verification and the examples.
//!
//! All fixtures have rewards in `[0, 1]` and `r_max = 1`.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::mdp::{PolicyTable, TabularMdp};
use crate::rng::Rng;
use crate::td::LinearFeatures;

/// Two states, one action: `P = [[0.9, 0.1], [0.2, 0.8]]`, `R = (1, 0)`,
/// `γ = 0.5`, start in state 0. Stationary law `(2/3, 1/3)`, second
/// eigenvalue `0.7`.
pub fn two_state_chain() -> TabularMdp {
    TabularMdp::new(2, 1, vec![0.9, 0.1, 0.2, 0.8], vec![1.0, 0.0], 0.5, vec![1.0, 0.0], 1.0)
        .expect("two-state fixture is valid")
}

/// [`two_state_chain`] with the constant feature `φ = (1, 1)`, `d = 1`.
/// The mean TD direction is `ḡ(θ) = θ/2 − 2/3`, so `θ* = 4/3`.
pub fn two_state_scalar_td() -> (TabularMdp, PolicyTable, LinearFeatures) {
    let features = LinearFeatures::new(2, 1, vec![1.0, 1.0]).expect("valid features");
    (two_state_chain(), PolicyTable::uniform(2, 1), features)
}

/// One state, one action, reward 1: `Q = 1/(1 − γ)`.
pub fn single_state(gamma: f64) -> TabularMdp {
    TabularMdp::new(1, 1, vec![1.0], vec![1.0], gamma, vec![1.0], 1.0).expect("single-state fixture is valid")
}

/// Three states, two actions, `γ = 0.8`.
pub fn three_state() -> TabularMdp {
    #[rustfmt::skip]
    let p = vec![
        0.7, 0.2, 0.1,   0.1, 0.6, 0.3,
        0.3, 0.4, 0.3,   0.0, 0.2, 0.8,
        0.5, 0.0, 0.5,   0.2, 0.3, 0.5,
    ];
    let r = vec![0.0, 0.4, 1.0, 0.1, 0.3, 0.7];
    TabularMdp::new(3, 2, p, r, 0.8, vec![0.5, 0.3, 0.2], 1.0).expect("three-state fixture is valid")
}

/// Four states, two actions, `γ = 0.8`, used for the policy gradient runs.
/// Action 1 drifts right towards the rewarding state 3, action 0 drifts left.
pub fn pg_four_state() -> TabularMdp {
    #[rustfmt::skip]
    let p = vec![
        0.8, 0.2, 0.0, 0.0,   0.3, 0.6, 0.1, 0.0,
        0.7, 0.2, 0.1, 0.0,   0.1, 0.2, 0.6, 0.1,
        0.0, 0.7, 0.2, 0.1,   0.0, 0.1, 0.2, 0.7,
        0.0, 0.0, 0.7, 0.3,   0.1, 0.0, 0.1, 0.8,
    ];
    let r = vec![0.1, 0.0, 0.0, 0.0, 0.0, 0.2, 1.0, 0.8];
    TabularMdp::new(4, 2, p, r, 0.8, vec![1.0, 0.0, 0.0, 0.0], 1.0).expect("four-state fixture is valid")
}

/// Ten states, two actions, a fixed random policy and `d = 4` features.
pub fn td_ten_state() -> (TabularMdp, PolicyTable, LinearFeatures) {
    let mut rng = Rng::new(0x7d10);
    let mdp = random_mdp(10, 2, 0.9, &mut rng);
    let policy = random_policy(10, 2, &mut rng);
    let features = random_features(10, 4, &mut rng);
    (mdp, policy, features)
}

/// Dense random MDP: every transition row is a normalized vector of
/// uniform draws (so the chain is primitive), rewards uniform in `[0, 1]`,
/// and a random full-support initial law.
pub fn random_mdp(n_states: usize, n_actions: usize, gamma: f64, rng: &mut Rng) -> TabularMdp {
    let mut p = Vec::with_capacity(n_states * n_actions * n_states);
    for _ in 0..n_states * n_actions {
        p.extend(random_simplex(n_states, rng));
    }
    let r = (0..n_states * n_actions).map(|_| rng.uniform()).collect();
    let zeta = random_simplex(n_states, rng);
    TabularMdp::new(n_states, n_actions, p, r, gamma, zeta, 1.0).expect("random MDP is valid")
}

pub fn random_policy(n_states: usize, n_actions: usize, rng: &mut Rng) -> PolicyTable {
    let mut probs = Vec::with_capacity(n_states * n_actions);
    for _ in 0..n_states {
        probs.extend(random_simplex(n_actions, rng));
    }
    PolicyTable::new(n_states, n_actions, probs).expect("random policy is valid")
}

/// Gaussian feature rows rescaled to norms uniform in `[0.5, 1]`.
pub fn random_features(n_states: usize, dim: usize, rng: &mut Rng) -> LinearFeatures {
    let mut phi = Vec::with_capacity(n_states * dim);
    for _ in 0..n_states {
        let row: Vec<f64> = (0..dim).map(|_| rng.normal()).collect();
        let scale = rng.uniform_range(0.5, 1.0) / math::norm(&row);
        phi.extend(row.iter().map(|x| x * scale));
    }
    LinearFeatures::new(n_states, dim, phi).expect("random features are valid")
}

/// Positive weights `0.05 + U(0, 1)` normalized to sum to one; the last entry
/// absorbs rounding so the sum is exact to a few ulps.
fn random_simplex(n: usize, rng: &mut Rng) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| 0.05 + rng.uniform()).collect();
    let total: f64 = w.iter().sum();
    let mut out: Vec<f64> = w.iter().map(|x| x / total).collect();
    let head: f64 = out[..n - 1].iter().sum();
    out[n - 1] = 1.0 - head;
    out
}
