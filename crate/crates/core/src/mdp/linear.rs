use alloc::vec::Vec;

use super::oracle::stationary_of_kernel;
use super::{PolicyTable, TabularMdp};
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::math;
use crate::td::{mean_pseudo_gradient, LinearFeatures};

/// Columns with covariance eigenvalue at or below this are treated as dependent.
pub const OMEGA_MIN: f64 = 1e-10;

/// Residual allowed on `ḡ(θ*)`.
pub const FIXED_POINT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureCovariance {
    /// `Σ = Σ_s ν(s) φ(s) φ(s)ᵀ`.
    pub sigma: Matrix,
    /// Smallest eigenvalue of `Σ`.
    pub omega: f64,
    /// Largest eigenvalue of `Σ`.
    pub max_eigenvalue: f64,
    /// Stationary law the covariance was taken under.
    pub nu: Vec<f64>,
}

fn check_dims(mdp: &TabularMdp, features: &LinearFeatures) -> Result<()> {
    if features.n_states() != mdp.n_states() {
        return Err(Error::DimensionMismatch { expected: mdp.n_states(), got: features.n_states() });
    }
    Ok(())
}

/// Steady-state feature covariance and its minimum eigenvalue `ω`.
pub fn feature_covariance(
    mdp: &TabularMdp,
    policy: &PolicyTable,
    features: &LinearFeatures,
) -> Result<FeatureCovariance> {
    check_dims(mdp, features)?;
    let nu = stationary_of_kernel(&mdp.policy_kernel(policy)?)?;
    let d = features.dim();
    let mut sigma = Matrix::zeros(d, d);
    for (s, w) in nu.iter().enumerate() {
        let phi = features.phi(s);
        for i in 0..d {
            for j in 0..d {
                sigma[(i, j)] += w * phi[i] * phi[j];
            }
        }
    }
    let omega = match linalg::min_eigenvalue_sym(&sigma) {
        Ok(w) => w,
        Err(Error::SingularSystem) => return Err(Error::RankDeficientFeatures { omega: 0.0 }),
        Err(e) => return Err(e),
    };
    if omega <= OMEGA_MIN {
        return Err(Error::RankDeficientFeatures { omega });
    }
    let max_eigenvalue = linalg::max_eigenvalue_sym(&sigma);
    Ok(FeatureCovariance { sigma, omega, max_eigenvalue, nu })
}

/// Linear TD fixed point: solves `A θ* = b` with `A = Φᵀ D (Φ − γ P_π Φ)` and
/// `b = Φᵀ D r_π`, then checks `‖ḡ(θ*)‖ ≤ 1e-9` through the mean pseudo-gradient.
/// Dependent feature columns are reported as `RankDeficientFeatures`.
pub fn td_fixed_point(mdp: &TabularMdp, policy: &PolicyTable, features: &LinearFeatures) -> Result<Vec<f64>> {
    let nu = feature_covariance(mdp, policy, features)?.nu;
    let kernel = mdp.policy_kernel(policy)?;
    let r = mdp.policy_reward(policy)?;
    let d = features.dim();
    let n = mdp.n_states();
    let gamma = mdp.gamma();

    let mut a = Matrix::zeros(d, d);
    let mut b = alloc::vec![0.0; d];
    for s in 0..n {
        let phi = features.phi(s);
        // expected next-state features E[φ(s')|s]
        let mut next = alloc::vec![0.0; d];
        for (s2, p) in kernel.row(s).iter().enumerate() {
            if *p != 0.0 {
                for (acc, f) in next.iter_mut().zip(features.phi(s2)) {
                    *acc += p * f;
                }
            }
        }
        for i in 0..d {
            let wi = nu[s] * phi[i];
            for j in 0..d {
                a[(i, j)] += wi * (phi[j] - gamma * next[j]);
            }
            b[i] += wi * r[s];
        }
    }

    let lu = linalg::Lu::factor(&a)?;
    let mut theta = lu.solve(&b);
    // one round of iterative refinement
    let residual: Vec<f64> = a.mul_vec(&theta).iter().zip(&b).map(|(x, y)| x - y).collect();
    let correction = lu.solve(&residual);
    theta.iter_mut().zip(&correction).for_each(|(t, c)| *t -= c);

    let g = mean_pseudo_gradient(mdp, policy, features, &theta)?;
    if math::norm(&g) > FIXED_POINT_TOL {
        return Err(Error::SingularSystem);
    }
    Ok(theta)
}
