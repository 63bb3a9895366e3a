//! Exact diagnostics of a fixture: stationary law, mixing envelope, mixing
//! times, feature covariance spectrum, TD fixed point and the value of the
//! reference policy.

use std::fmt;

use anyhow::{Context, Result};
use markov_adam_core::mdp::{
    exact_j, feature_covariance, mixing_profile, stationary_distribution, tau_star, td_fixed_point,
};
use markov_adam_core::policy::estimate_lipschitz;
use markov_adam_core::{Error, MixingProfile, Rng};

use crate::fixture::Fixture;

pub const TAU_ALPHAS: [f64; 3] = [0.1, 0.01, 0.001];
const MIXING_HORIZON: usize = 200;

#[derive(Debug, Clone)]
pub struct Diagnosis {
    pub name: String,
    pub nu: Vec<f64>,
    pub sigma: f64,
    pub rho: f64,
    pub tau: Vec<(f64, usize)>,
    pub j: f64,
    /// `(ω, λ_max)` of the feature covariance.
    pub eigen_range: Option<(f64, f64)>,
    pub theta_star: Option<Vec<f64>>,
    pub lipschitz: (f64, f64),
}

/// `τ*(α)` for each of [`TAU_ALPHAS`].
pub fn mixing_times(profile: &MixingProfile) -> Vec<(f64, usize)> {
    TAU_ALPHAS.iter().map(|a| (*a, tau_star(profile, *a))).collect()
}

pub fn diagnose(fixture: &Fixture) -> Result<Diagnosis> {
    let mdp = &fixture.mdp;
    let policy = &fixture.policy;
    let nu = stationary_distribution(mdp, policy).map_err(|e| match e {
        Error::NonErgodicChain(msg) => anyhow::anyhow!(
            "chain under the reference policy is not ergodic ({msg}); every state must be reachable from every other and the chain must be aperiodic, e.g. add small self-loop and cross-state probabilities"
        ),
        other => other.into(),
    })?;
    let profile = mixing_profile(mdp, policy, MIXING_HORIZON)?;
    let tau = mixing_times(&profile);
    let j = exact_j(mdp, policy)?;
    let (eigen_range, theta_star) = match &fixture.features {
        Some(f) => {
            let cov = feature_covariance(mdp, policy, f).context("feature covariance")?;
            (Some((cov.omega, cov.max_eigenvalue)), Some(td_fixed_point(mdp, policy, f)?))
        }
        None => (None, None),
    };
    let lipschitz = estimate_lipschitz(mdp.n_states(), mdp.n_actions(), 2000, &mut Rng::new(0));
    Ok(Diagnosis {
        name: fixture.name.clone(),
        nu: nu.probs,
        sigma: profile.sigma,
        rho: profile.rho,
        tau,
        j,
        eigen_range,
        theta_star,
        lipschitz,
    })
}

fn list(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.6}")).collect();
    format!("[{}]", parts.join(", "))
}

impl fmt::Display for Diagnosis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "fixture: {}", self.name)?;
        writeln!(f, "stationary distribution nu: {}", list(&self.nu))?;
        writeln!(f, "mixing envelope: sigma = {:.6}, rho = {:.6}", self.sigma, self.rho)?;
        for (alpha, tau) in &self.tau {
            writeln!(f, "tau*({alpha}) = {tau}")?;
        }
        match self.eigen_range {
            Some((lo, hi)) => writeln!(f, "feature covariance eigenvalues: [{lo:.6e}, {hi:.6e}] (omega = {lo:.6e})")?,
            None => writeln!(f, "feature covariance eigenvalues: n/a (no features)")?,
        }
        match &self.theta_star {
            Some(t) => writeln!(f, "theta*: {}", list(t))?,
            None => writeln!(f, "theta*: n/a (no features)")?,
        }
        writeln!(f, "J(reference policy) = {:.6}", self.j)?;
        writeln!(f, "empirical Lipschitz estimates: L_pi = {:.4}, L = {:.4}", self.lipschitz.0, self.lipschitz.1)
    }
}
