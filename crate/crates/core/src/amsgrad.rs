//! The AMSGrad update, its stepsize schedules, and the `V̂^{1/4}`-weighted
//! projection onto a centered ball.
//!
//! Per step, with `β₁ₜ = β₁ λ^t`:
//!
//! ```text
//! m  ← (1 − β₁ₜ) m + β₁ₜ g          (MomentConvention::WeightOnGradient)
//! m  ← β₁ₜ m + (1 − β₁ₜ) g          (MomentConvention::WeightOnMomentum)
//! v  ← (1 − β₂) v̂ + β₂ g²
//! v̂  ← max(v̂, v)
//! θ  ← θ − αₜ m / √v̂
//! ```
//!
//! No bias correction is applied.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Schedule {
    /// `αₜ = α`.
    Constant { alpha: f64 },
    /// `αₜ = α / √t`.
    Diminishing { alpha: f64 },
}

impl Schedule {
    /// `αₜ = (1 − γ) / √t`.
    pub fn discount_scaled(gamma: f64) -> Self {
        Schedule::Diminishing { alpha: 1.0 - gamma }
    }

    pub fn alpha(&self) -> f64 {
        match *self {
            Schedule::Constant { alpha } | Schedule::Diminishing { alpha } => alpha,
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Schedule::Constant { .. })
    }

    /// Stepsize at 1-based step `t`.
    pub fn stepsize(&self, t: u64) -> f64 {
        debug_assert!(t >= 1);
        match *self {
            Schedule::Constant { alpha } => alpha,
            Schedule::Diminishing { alpha } => alpha / math::sqrt(t as f64),
        }
    }

    pub fn with_alpha(&self, alpha: f64) -> Self {
        match self {
            Schedule::Constant { .. } => Schedule::Constant { alpha },
            Schedule::Diminishing { .. } => Schedule::Diminishing { alpha },
        }
    }
}

/// Which term the first-moment coefficient `β₁ₜ` multiplies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentConvention {
    /// `m ← (1 − β₁ₜ) m + β₁ₜ g`.
    WeightOnGradient,
    /// `m ← β₁ₜ m + (1 − β₁ₜ) g`; a decaying `β₁ₜ` fades momentum out.
    WeightOnMomentum,
}

/// Optimizer state for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct AmsGradState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub v_hat: Vec<f64>,
    /// Number of updates applied so far.
    pub t: u64,
    pub beta1: f64,
    pub beta2: f64,
    /// Decay of `β₁ₜ = β₁ λ^t`; `1` keeps `β₁` constant.
    pub lambda: f64,
    pub schedule: Schedule,
    pub convention: MomentConvention,
    /// Lower bound applied to `v̂` in denominators only; `None` leaves zero
    /// entries as errors.
    pub denominator_floor: Option<f64>,
    /// Count of coordinates where `v̂` decreased; stays zero for a correct update.
    pub vhat_violations: usize,
}

impl AmsGradState {
    pub fn new(dim: usize, beta1: f64, beta2: f64, lambda: f64, schedule: Schedule) -> Result<Self> {
        if !(0.0..=1.0).contains(&beta1) {
            return Err(Error::InvalidConfig { field: "beta1", reason: alloc::format!("{beta1} not in [0, 1]") });
        }
        if !(beta2 > 0.0 && beta2 <= 1.0) {
            return Err(Error::InvalidConfig { field: "beta2", reason: alloc::format!("{beta2} not in (0, 1]") });
        }
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(Error::InvalidConfig { field: "lambda", reason: alloc::format!("{lambda} not in (0, 1]") });
        }
        Ok(Self {
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            v_hat: vec![0.0; dim],
            t: 0,
            beta1,
            beta2,
            lambda,
            schedule,
            convention: MomentConvention::WeightOnGradient,
            denominator_floor: None,
            vhat_violations: 0,
        })
    }

    pub fn with_convention(mut self, convention: MomentConvention) -> Self {
        self.convention = convention;
        self
    }

    pub fn with_denominator_floor(mut self, floor: Option<f64>) -> Self {
        self.denominator_floor = floor;
        self
    }

    pub fn dim(&self) -> usize {
        self.m.len()
    }

    /// `β₁ₜ` for the 1-based step `t`.
    pub fn beta1_at(&self, t: u64) -> f64 {
        if self.lambda == 1.0 {
            self.beta1
        } else {
            self.beta1 * math::powf(self.lambda, t as f64)
        }
    }

    /// `v̂` with the denominator floor applied.
    pub fn effective_v_hat(&self) -> Vec<f64> {
        match self.denominator_floor {
            Some(f) => self.v_hat.iter().map(|v| v.max(f)).collect(),
            None => self.v_hat.clone(),
        }
    }

    /// Advances the moments with gradient `g` and returns the step
    /// `αₜ m / √v̂` (to be subtracted from θ).
    pub fn step_direction(&mut self, g: &[f64]) -> Result<Vec<f64>> {
        let d = self.dim();
        if g.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: g.len() });
        }
        let t = self.t + 1;
        let b1 = self.beta1_at(t);
        let (keep, take) = match self.convention {
            MomentConvention::WeightOnGradient => (1.0 - b1, b1),
            MomentConvention::WeightOnMomentum => (b1, 1.0 - b1),
        };
        let alpha = self.schedule.stepsize(t);

        let mut m = vec![0.0; d];
        let mut v = vec![0.0; d];
        let mut v_hat = vec![0.0; d];
        let mut step = vec![0.0; d];
        for i in 0..d {
            m[i] = keep * self.m[i] + take * g[i];
            v[i] = (1.0 - self.beta2) * self.v_hat[i] + self.beta2 * g[i] * g[i];
            v_hat[i] = if v[i] > self.v_hat[i] { v[i] } else { self.v_hat[i] };
            let denom = match self.denominator_floor {
                Some(f) => v_hat[i].max(f),
                None => v_hat[i],
            };
            if denom == 0.0 {
                return Err(Error::ZeroSecondMoment { index: i });
            }
            step[i] = alpha * m[i] / math::sqrt(denom);
        }
        self.vhat_violations += v_hat.iter().zip(&self.v_hat).filter(|(new, old)| !(new >= old)).count();
        self.m = m;
        self.v = v;
        self.v_hat = v_hat;
        self.t = t;
        Ok(step)
    }

    /// `θ ← θ − αₜ m / √v̂`.
    pub fn update(&mut self, theta: &[f64], g: &[f64]) -> Result<Vec<f64>> {
        if theta.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: theta.len() });
        }
        let step = self.step_direction(g)?;
        Ok(theta.iter().zip(&step).map(|(x, s)| x - s).collect())
    }
}

/// Closed Euclidean ball of the given radius centered at the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainBall {
    radius: f64,
}

impl DomainBall {
    pub fn new(radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidConfig { field: "radius", reason: alloc::format!("{radius} must be positive") });
        }
        Ok(Self { radius })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Diameter `D∞ = 2 · radius`.
    pub fn diameter(&self) -> f64 {
        2.0 * self.radius
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        math::norm(theta) <= self.radius
    }
}

const BISECTION_TOL: f64 = 1e-12;

/// `argmin_{‖θ‖ ≤ r} Σᵢ √v̂ᵢ (θ'ᵢ − θᵢ)²`.
///
/// Outside the ball the minimizer is `θᵢ = wᵢ θ'ᵢ / (wᵢ + λ*)` with
/// `wᵢ = √v̂ᵢ`, and `λ* > 0` solves `‖θ(λ)‖ = r`; `‖θ(λ)‖` is decreasing in
/// `λ`, so bisection applies.
pub fn project(theta_prime: &[f64], v_hat: &[f64], ball: &DomainBall) -> Result<Vec<f64>> {
    if v_hat.len() != theta_prime.len() {
        return Err(Error::DimensionMismatch { expected: theta_prime.len(), got: v_hat.len() });
    }
    if let Some(i) = v_hat.iter().position(|v| !(*v > 0.0)) {
        return Err(Error::ZeroSecondMoment { index: i });
    }
    let r = ball.radius();
    let norm = math::norm(theta_prime);
    if norm <= r {
        return Ok(theta_prime.to_vec());
    }
    let w: Vec<f64> = v_hat.iter().map(|v| math::sqrt(*v)).collect();
    let at = |lambda: f64| -> Vec<f64> { theta_prime.iter().zip(&w).map(|(x, wi)| wi * x / (wi + lambda)).collect() };
    let w_max = w.iter().copied().fold(0.0, f64::max);
    let mut lo = 0.0;
    let mut hi = w_max * (norm / r - 1.0) + 1.0;
    while math::norm(&at(hi)) > r {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..400 {
        if hi - lo <= BISECTION_TOL * hi.max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if math::norm(&at(mid)) > r {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(at(hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_step_hand_example() {
        let mut st = AmsGradState::new(1, 0.5, 0.5, 1.0, Schedule::Constant { alpha: 0.1 }).unwrap();
        let th = st.update(&[0.0], &[2.0]).unwrap();
        assert_eq!(st.m, vec![1.0]);
        assert_eq!(st.v, vec![2.0]);
        assert_eq!(st.v_hat, vec![2.0]);
        assert!((th[0] + 0.1 / 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn unit_betas_give_sign_step() {
        let mut st = AmsGradState::new(3, 1.0, 1.0, 1.0, Schedule::Constant { alpha: 0.25 }).unwrap();
        let th = st.update(&[1.0, 1.0, 1.0], &[3.0, -0.5, 7.0]).unwrap();
        assert_eq!(th, vec![0.75, 1.25, 0.75]);

        let mut st = AmsGradState::new(2, 0.0, 1.0, 1.0, Schedule::Constant { alpha: 0.25 })
            .unwrap()
            .with_convention(MomentConvention::WeightOnMomentum);
        let th = st.update(&[0.0, 0.0], &[-2.0, 9.0]).unwrap();
        assert_eq!(th, vec![0.25, -0.25]);
    }

    #[test]
    fn max_clamp_holds_v_hat() {
        let mut st = AmsGradState::new(2, 0.5, 0.5, 1.0, Schedule::Constant { alpha: 0.1 }).unwrap();
        st.update(&[0.0, 0.0], &[4.0, 2.0]).unwrap();
        let first = st.v_hat.clone();
        st.update(&[0.0, 0.0], &[1.0, 0.5]).unwrap();
        assert!(st.v[0] < first[0] && st.v[1] < first[1]);
        assert_eq!(st.v_hat, first);
    }

    #[test]
    fn zero_gradient_on_fresh_state_errors() {
        let mut st = AmsGradState::new(2, 0.5, 0.5, 1.0, Schedule::Constant { alpha: 0.1 }).unwrap();
        assert_eq!(st.update(&[0.0, 0.0], &[1.0, 0.0]), Err(Error::ZeroSecondMoment { index: 1 }));
        let mut floored = st.clone().with_denominator_floor(Some(1e-6));
        assert_eq!(floored.update(&[0.0, 0.0], &[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn decaying_beta1() {
        let st = AmsGradState::new(1, 0.9, 0.99, 0.5, Schedule::Constant { alpha: 1.0 }).unwrap();
        assert_eq!(st.beta1_at(1), 0.45);
        assert_eq!(st.beta1_at(3), 0.9 * 0.125);
    }

    #[test]
    fn stepsize_examples() {
        assert_eq!(Schedule::Constant { alpha: 0.1 }.stepsize(999), 0.1);
        assert_eq!(Schedule::Diminishing { alpha: 1.0 }.stepsize(4), 0.5);
        assert!((Schedule::Diminishing { alpha: 0.2 }.stepsize(100) - 0.02).abs() < 1e-15);
        assert_eq!(Schedule::discount_scaled(0.75).stepsize(16), 0.0625);
    }

    #[test]
    fn projection_examples() {
        let ball = DomainBall::new(1.0).unwrap();
        let p = project(&[3.0, 4.0], &[1.0, 1.0], &ball).unwrap();
        assert!((p[0] - 0.6).abs() < 1e-10 && (p[1] - 0.8).abs() < 1e-10);
        assert_eq!(project(&[0.3, -0.2], &[5.0, 1.0], &ball).unwrap(), vec![0.3, -0.2]);
        assert_eq!(project(&[3.0, 4.0], &[1.0, 0.0], &ball), Err(Error::ZeroSecondMoment { index: 1 }));
    }

    #[test]
    fn invalid_hyperparameters() {
        let s = Schedule::Constant { alpha: 0.1 };
        assert!(matches!(AmsGradState::new(1, 1.5, 0.5, 1.0, s), Err(Error::InvalidConfig { field: "beta1", .. })));
        assert!(matches!(AmsGradState::new(1, 0.5, 0.0, 1.0, s), Err(Error::InvalidConfig { field: "beta2", .. })));
        assert!(matches!(AmsGradState::new(1, 0.5, 0.5, 1.5, s), Err(Error::InvalidConfig { field: "lambda", .. })));
        assert!(DomainBall::new(0.0).is_err());
    }
}
