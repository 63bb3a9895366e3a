//! Reference computations that share no code path with the library routines
//! they check: brute-force search, value iteration, finite differences,
//! Jacobi rotations and truncated series.

use markov_adam_core::linalg::Matrix;
use markov_adam_core::{PolicyTable, SoftmaxPolicy, TabularMdp};

/// Weighted projection onto the disc of radius `r` by scanning the boundary
/// at `n` angles and polishing the best one with golden-section search.
pub fn grid_projection_2d(theta_prime: [f64; 2], v_hat: [f64; 2], r: f64, n: usize) -> [f64; 2] {
    if theta_prime[0].hypot(theta_prime[1]) <= r {
        return theta_prime;
    }
    let w = [v_hat[0].sqrt(), v_hat[1].sqrt()];
    let cost = |phi: f64| {
        let (x, y) = (r * phi.cos(), r * phi.sin());
        w[0] * (theta_prime[0] - x).powi(2) + w[1] * (theta_prime[1] - y).powi(2)
    };
    let step = std::f64::consts::TAU / n as f64;
    let best = (0..n).map(|k| k as f64 * step).min_by(|a, b| cost(*a).total_cmp(&cost(*b))).unwrap();
    let (mut lo, mut hi) = (best - step, best + step);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let m1 = hi - g * (hi - lo);
        let m2 = lo + g * (hi - lo);
        if cost(m1) < cost(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let phi = 0.5 * (lo + hi);
    [r * phi.cos(), r * phi.sin()]
}

/// `V^π` by repeated Bellman backups until the sup-norm change is below `tol`.
pub fn value_iteration(mdp: &TabularMdp, policy: &PolicyTable, tol: f64) -> Vec<f64> {
    let (ns, na) = (mdp.n_states(), mdp.n_actions());
    let mut v = vec![0.0; ns];
    loop {
        let next: Vec<f64> = (0..ns)
            .map(|s| {
                (0..na)
                    .map(|a| {
                        let cont: f64 = mdp.transition_row(s, a).iter().zip(&v).map(|(p, x)| p * x).sum();
                        policy.prob(s, a) * (mdp.reward(s, a) + mdp.gamma() * cont)
                    })
                    .sum()
            })
            .collect();
        let delta = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        v = next;
        if delta < tol {
            return v;
        }
    }
}

/// `Q^π(s, a) = R(s, a) + γ Σ P(s'|s,a) V(s')` from value iteration.
pub fn q_by_iteration(mdp: &TabularMdp, policy: &PolicyTable) -> Vec<f64> {
    let v = value_iteration(mdp, policy, 1e-14);
    let (ns, na) = (mdp.n_states(), mdp.n_actions());
    let mut q = vec![0.0; ns * na];
    for s in 0..ns {
        for a in 0..na {
            let cont: f64 = mdp.transition_row(s, a).iter().zip(&v).map(|(p, x)| p * x).sum();
            q[s * na + a] = mdp.reward(s, a) + mdp.gamma() * cont;
        }
    }
    q
}

/// `J(θ) = ζᵀ V^{π_θ}` by value iteration.
pub fn j_by_iteration(mdp: &TabularMdp, theta: &[f64]) -> f64 {
    let policy = SoftmaxPolicy::new(mdp.n_states(), mdp.n_actions(), theta.to_vec()).expect("valid dims");
    let v = value_iteration(mdp, policy.table(), 1e-15);
    mdp.initial_dist().iter().zip(&v).map(|(z, x)| z * x).sum()
}

/// Central differences of `J` with step `h`.
pub fn fd_policy_gradient(mdp: &TabularMdp, theta: &[f64], h: f64) -> Vec<f64> {
    (0..theta.len())
        .map(|i| {
            let mut up = theta.to_vec();
            let mut down = theta.to_vec();
            up[i] += h;
            down[i] -= h;
            (j_by_iteration(mdp, &up) - j_by_iteration(mdp, &down)) / (2.0 * h)
        })
        .collect()
}

/// All eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn jacobi_eigenvalues(a: &Matrix) -> Vec<f64> {
    let n = a.rows();
    let mut m: Vec<Vec<f64>> = (0..n).map(|i| a.row(i).to_vec()).collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |j| *j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| m[i][i]).collect();
    eig.sort_by(f64::total_cmp);
    eig
}

/// Stationary law as any row of `P^(2^k)` after enough squarings, with rows
/// renormalized each time so rounding cannot compound.
pub fn stationary_by_squaring(kernel: &Matrix) -> Vec<f64> {
    let mut p = kernel.clone();
    for _ in 0..60 {
        p = p.matmul(&p);
        for i in 0..p.rows() {
            let total: f64 = p.row(i).iter().sum();
            p.row_mut(i).iter_mut().for_each(|x| *x /= total);
        }
    }
    p.row(0).to_vec()
}

/// Normalized discounted state-action occupancy from `ζ` by truncating
/// `(1 − γ) Σ_t γ^t ζ P_π^t` once the tail is below `1e-15`.
pub fn discounted_pairs_by_series(mdp: &TabularMdp, policy: &PolicyTable) -> Vec<f64> {
    let (ns, na, g) = (mdp.n_states(), mdp.n_actions(), mdp.gamma());
    let mut dist = mdp.initial_dist().to_vec();
    let mut acc = vec![0.0; ns * na];
    let mut weight = 1.0 - g;
    while weight > 1e-17 {
        for s in 0..ns {
            for a in 0..na {
                acc[s * na + a] += weight * dist[s] * policy.prob(s, a);
            }
        }
        let mut next = vec![0.0; ns];
        for s in 0..ns {
            for a in 0..na {
                let mass = dist[s] * policy.prob(s, a);
                for (s2, p) in mdp.transition_row(s, a).iter().enumerate() {
                    next[s2] += mass * p;
                }
            }
        }
        dist = next;
        weight *= g;
    }
    acc
}

/// Second eigenvalue `1 − p − q` of the chain `[[1−p, p], [q, 1−q]]`.
pub fn two_state_second_eigenvalue(p: f64, q: f64) -> f64 {
    1.0 - p - q
}
