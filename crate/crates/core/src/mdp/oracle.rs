use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{PolicyTable, StateDist, TabularMdp};
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::math;
use crate::policy::SoftmaxPolicy;

const POWER_TOL: f64 = 1e-12;
const POWER_MAX_ITERS: usize = 1_000_000;

/// Structural ergodicity check on the support of `kernel`: irreducible and
/// aperiodic iff some power of the boolean adjacency matrix is all-positive
/// (Wielandt: exponent `(n−1)² + 1` suffices).
fn check_primitive(kernel: &Matrix) -> Result<()> {
    let n = kernel.rows();
    let adj: Vec<bool> = kernel.as_slice().iter().map(|p| *p > 0.0).collect();

    // reachability from every state
    for start in 0..n {
        let mut seen = vec![false; n];
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(i) = stack.pop() {
            for j in 0..n {
                if adj[i * n + j] && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        if let Some(j) = seen.iter().position(|s| !s) {
            return Err(Error::NonErgodicChain(format!("reducible: state {j} is unreachable from state {start}")));
        }
    }

    let needed = (n - 1) * (n - 1) + 1;
    let mut power = adj;
    let mut exponent = 1usize;
    while exponent < needed {
        let mut next = vec![false; n * n];
        for i in 0..n {
            for k in 0..n {
                if power[i * n + k] {
                    for j in 0..n {
                        next[i * n + j] |= power[k * n + j];
                    }
                }
            }
        }
        power = next;
        exponent *= 2;
    }
    if power.iter().all(|b| *b) {
        Ok(())
    } else {
        Err(Error::NonErgodicChain("periodic: no power of the kernel is strictly positive".into()))
    }
}

/// Stationary law of a row-stochastic kernel by power iteration.
pub(crate) fn stationary_of_kernel(kernel: &Matrix) -> Result<Vec<f64>> {
    check_primitive(kernel)?;
    let n = kernel.rows();
    let mut nu = vec![1.0 / n as f64; n];
    for _ in 0..POWER_MAX_ITERS {
        let next = kernel.vec_mul(&nu);
        let delta = next.iter().zip(&nu).fold(0.0, |m, (a, b)| f64::max(m, math::abs(a - b)));
        nu = next;
        if delta <= POWER_TOL {
            let total: f64 = nu.iter().sum();
            nu.iter_mut().for_each(|p| *p /= total);
            return Ok(polish(kernel, nu));
        }
    }
    Err(Error::NonErgodicChain(format!(
        "power iteration did not reach residual {POWER_TOL:e} in {POWER_MAX_ITERS} iterations"
    )))
}

/// Refines a converged power-iteration estimate with a direct solve of
/// `νᵀ(P − I) = 0, Σν = 1`; keeps the input if the solve is not cleaner.
fn polish(kernel: &Matrix, nu: Vec<f64>) -> Vec<f64> {
    let n = kernel.rows();
    let mut a = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = kernel[(j, i)] - if i == j { 1.0 } else { 0.0 };
        }
    }
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = vec![0.0; n];
    b[n - 1] = 1.0;
    let residual = |x: &[f64]| {
        let y = kernel.vec_mul(x);
        y.iter().zip(x).fold(0.0, |m, (a, b)| f64::max(m, math::abs(a - b)))
    };
    match linalg::solve(&a, &b) {
        Ok(x) if x.iter().all(|p| *p >= 0.0) && residual(&x) <= residual(&nu) => x,
        _ => nu,
    }
}

/// Stationary distribution `ν` of the policy-induced state chain `P_π`.
pub fn stationary_distribution(mdp: &TabularMdp, policy: &PolicyTable) -> Result<StateDist> {
    let kernel = mdp.policy_kernel(policy)?;
    Ok(StateDist::over_states(stationary_of_kernel(&kernel)?))
}

/// Discounted occupancy of a policy started from `ζ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Visitation {
    /// `m(s) = Σ_{t≥1} γ^{t−1} P(s_t = s)`; sums to `1 / (1 − γ)`.
    pub state_mass: Vec<f64>,
    /// `m(s) π(a|s)`, indexed `s * n_actions + a`.
    pub pair_mass: Vec<f64>,
    /// `(1 − γ) m(s) π(a|s)`: the stationary law of the restart kernel.
    pub normalized: StateDist,
}

fn i_minus_gamma(kernel: &Matrix, gamma: f64) -> Matrix {
    let n = kernel.rows();
    let mut m = Matrix::identity(n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] -= gamma * kernel[(i, j)];
        }
    }
    m
}

/// Solves `mᵀ = ζᵀ + γ mᵀ P_π`.
pub fn discounted_visitation(mdp: &TabularMdp, policy: &PolicyTable) -> Result<Visitation> {
    let kernel = mdp.policy_kernel(policy)?;
    let system = i_minus_gamma(&kernel, mdp.gamma()).transpose();
    let state_mass = linalg::solve(&system, mdp.initial_dist())?;
    let na = mdp.n_actions();
    let pair_mass: Vec<f64> = (0..mdp.n_states())
        .flat_map(|s| {
            let m = state_mass[s];
            policy.row(s).iter().map(move |p| m * p)
        })
        .collect();
    let scale = 1.0 - mdp.gamma();
    let normalized = StateDist::over_pairs(pair_mass.iter().map(|m| m * scale).collect(), na);
    Ok(Visitation { state_mass, pair_mass, normalized })
}

/// Exact state and action values.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTables {
    pub v: Vec<f64>,
    /// Indexed `s * n_actions + a`.
    pub q: Vec<f64>,
}

impl ValueTables {
    pub fn q(&self, s: usize, a: usize, n_actions: usize) -> f64 {
        self.q[s * n_actions + a]
    }
}

/// `V = (I − γP_π)⁻¹ r_π` and `Q(s,a) = R(s,a) + γ Σ_{s'} P(s'|s,a) V(s')`.
pub fn exact_v_q(mdp: &TabularMdp, policy: &PolicyTable) -> Result<ValueTables> {
    let kernel = mdp.policy_kernel(policy)?;
    let r = mdp.policy_reward(policy)?;
    let v = linalg::solve(&i_minus_gamma(&kernel, mdp.gamma()), &r)?;
    let mut q = Vec::with_capacity(mdp.n_states() * mdp.n_actions());
    for s in 0..mdp.n_states() {
        for a in 0..mdp.n_actions() {
            q.push(mdp.reward(s, a) + mdp.gamma() * math::dot(mdp.transition_row(s, a), &v));
        }
    }
    Ok(ValueTables { v, q })
}

/// One application of the policy Bellman operator `(T^π V)(s) = r_π(s) + γ Σ P_π(s'|s) V(s')`.
pub fn apply_bellman(mdp: &TabularMdp, policy: &PolicyTable, v: &[f64]) -> Result<Vec<f64>> {
    if v.len() != mdp.n_states() {
        return Err(Error::DimensionMismatch { expected: mdp.n_states(), got: v.len() });
    }
    let kernel = mdp.policy_kernel(policy)?;
    let r = mdp.policy_reward(policy)?;
    Ok(kernel.mul_vec(v).iter().zip(&r).map(|(pv, ri)| ri + mdp.gamma() * pv).collect())
}

/// `J = ζᵀ V`.
pub fn exact_j(mdp: &TabularMdp, policy: &PolicyTable) -> Result<f64> {
    let values = exact_v_q(mdp, policy)?;
    Ok(math::dot(mdp.initial_dist(), &values.v))
}

/// Policy gradient theorem evaluated exactly:
/// `∇J(θ) = Σ_s m(s) Σ_a π_θ(a|s) Q(s,a) ∇_θ log π_θ(a|s)`.
pub fn exact_policy_gradient(mdp: &TabularMdp, policy: &SoftmaxPolicy) -> Result<Vec<f64>> {
    let table = policy.table();
    let occupancy = discounted_visitation(mdp, table)?;
    let values = exact_v_q(mdp, table)?;
    let na = mdp.n_actions();
    let mut grad = vec![0.0; policy.dim()];
    for s in 0..mdp.n_states() {
        let m = occupancy.state_mass[s];
        for a in 0..na {
            let weight = m * table.prob(s, a) * values.q(s, a, na);
            if weight == 0.0 {
                continue;
            }
            // score is supported on the block of state s
            for (b, g) in grad[s * na..(s + 1) * na].iter_mut().enumerate() {
                let indicator = if a == b { 1.0 } else { 0.0 };
                *g += weight * (indicator - table.prob(s, b));
            }
        }
    }
    Ok(grad)
}
