//! Named correctness checks. `fast` covers the unit-level properties in a few
//! seconds; `full` adds the convergence experiments and takes minutes.

use std::path::Path;

use anyhow::Result;
use markov_adam_core::amsgrad::project;
use markov_adam_core::mdp::{
    discounted_visitation, exact_policy_gradient, exact_v_q, feature_covariance, mixing_profile,
    stationary_distribution, td_fixed_point,
};
use markov_adam_core::pg::{est_q, realized_gradient_bound};
use markov_adam_core::policy::SCORE_NORM_BOUND;
use markov_adam_core::sampler::{rollout, Kernel};
use markov_adam_core::td::{mean_pseudo_gradient, monotonicity_sides};
use markov_adam_core::{
    fixtures, AmsGradState, DomainBall, LinearFeatures, PolicyTable, Rng, Schedule, SoftmaxPolicy, TabularMdp,
};
use serde::Serialize;

use crate::config::{ConfigFile, Experiment, Overrides, RunSpec};
use crate::fixture::builtin;
use crate::harness::{plateau_scan, replicate, Aggregate, PlateauPoint};
use crate::oracle;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub observed: String,
    pub expected: String,
}

impl CheckResult {
    fn new(name: &str, passed: bool, observed: String, expected: impl Into<String>) -> Self {
        Self { name: name.to_string(), passed, observed, expected: expected.into() }
    }

    fn failed_with(name: &str, err: anyhow::Error) -> Self {
        Self::new(name, false, format!("error: {err:#}"), "no error")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Level {
    Fast,
    Full,
}

/// Signature of an AMSGrad step; lets tests substitute a faulty update.
pub type StepFn = fn(&mut AmsGradState, &[f64], &[f64]) -> markov_adam_core::Result<Vec<f64>>;

pub fn correct_step(st: &mut AmsGradState, theta: &[f64], g: &[f64]) -> markov_adam_core::Result<Vec<f64>> {
    st.update(theta, g)
}

/// Random-gradient stress of `step` over many scales; every coordinate of
/// `v̂` must be non-decreasing at every step.
pub fn check_vhat_monotone(steps: usize, seed: u64, step: StepFn) -> CheckResult {
    const NAME: &str = "amsgrad.vhat_monotone";
    let mut rng = Rng::new(seed);
    let mut decreases = 0usize;
    let mut done = 0usize;
    while done < steps {
        let dim = 1 + rng.index(8);
        let beta1 = rng.uniform();
        let beta2 = rng.uniform_range(0.01, 1.0);
        let mut st = match AmsGradState::new(dim, beta1, beta2, 1.0, Schedule::Constant { alpha: 0.01 }) {
            Ok(s) => s.with_denominator_floor(Some(1e-12)),
            Err(e) => return CheckResult::failed_with(NAME, e.into()),
        };
        let mut theta = vec![0.0; dim];
        for _ in 0..1000.min(steps - done) {
            let scale = 10f64.powi(rng.index(7) as i32 - 3);
            let g: Vec<f64> = (0..dim).map(|_| scale * rng.normal()).collect();
            let before = st.v_hat.clone();
            theta = match step(&mut st, &theta, &g) {
                Ok(t) => t,
                Err(e) => return CheckResult::failed_with(NAME, e.into()),
            };
            decreases += st.v_hat.iter().zip(&before).filter(|(n, o)| !(n >= o)).count();
            done += 1;
        }
    }
    CheckResult::new(NAME, decreases == 0, format!("{decreases} decreases over {steps} steps"), "0 decreases")
}

/// One step from `θ = 0` with `g = 2`, `β₁ = β₂ = 0.5`, `α = 0.1`:
/// `m = 1`, `v = v̂ = 2`, `θ' = −0.1/√2`.
pub fn check_single_step() -> CheckResult {
    const NAME: &str = "amsgrad.single_step";
    let mut st = AmsGradState::new(1, 0.5, 0.5, 1.0, Schedule::Constant { alpha: 0.1 }).expect("valid");
    match st.update(&[0.0], &[2.0]) {
        Ok(th) => {
            let want = -0.1 / 2f64.sqrt();
            let ok = (th[0] - want).abs() <= 1e-12 && st.m == [1.0] && st.v == [2.0] && st.v_hat == [2.0];
            CheckResult::new(
                NAME,
                ok,
                format!("theta {:e}, m {:?}, v {:?}, v_hat {:?}", th[0], st.m, st.v, st.v_hat),
                format!("theta {want:e}, m [1.0], v [2.0], v_hat [2.0]"),
            )
        }
        Err(e) => CheckResult::failed_with(NAME, e.into()),
    }
}

pub fn check_projection_grid(instances: usize, seed: u64) -> CheckResult {
    const NAME: &str = "project.grid_oracle";
    let mut rng = Rng::new(seed);
    let mut worst = 0.0f64;
    for _ in 0..instances {
        let tp = [rng.uniform_range(-5.0, 5.0), rng.uniform_range(-5.0, 5.0)];
        let vh = [rng.uniform_range(0.01, 10.0), rng.uniform_range(0.01, 10.0)];
        let r = rng.uniform_range(0.2, 2.0);
        let ball = DomainBall::new(r).expect("positive radius");
        let got = match project(&tp, &vh, &ball) {
            Ok(p) => p,
            Err(e) => return CheckResult::failed_with(NAME, e.into()),
        };
        let want = oracle::grid_projection_2d(tp, vh, r, 100_000);
        worst = worst.max((got[0] - want[0]).abs().max((got[1] - want[1]).abs()));
    }
    CheckResult::new(NAME, worst <= 1e-5, format!("max coordinate gap {worst:e} over {instances} instances"), "<= 1e-5")
}

pub fn check_projection_feasible(instances: usize, max_dim: usize, seed: u64) -> CheckResult {
    const NAME: &str = "project.feasible_idempotent";
    let mut rng = Rng::new(seed);
    let (mut excess, mut drift) = (0.0f64, 0.0f64);
    for _ in 0..instances {
        let d = 1 + rng.index(max_dim);
        let spread = 10f64.powi(rng.index(4) as i32);
        let tp: Vec<f64> = (0..d).map(|_| spread * rng.normal()).collect();
        let vh: Vec<f64> = (0..d).map(|_| 10f64.powf(rng.uniform_range(-6.0, 3.0))).collect();
        let r = rng.uniform_range(0.1, 5.0);
        let ball = DomainBall::new(r).expect("positive radius");
        let (p, pp) = match project(&tp, &vh, &ball).and_then(|p| project(&p, &vh, &ball).map(|pp| (p, pp))) {
            Ok(x) => x,
            Err(e) => return CheckResult::failed_with(NAME, e.into()),
        };
        let norm = p.iter().map(|x| x * x).sum::<f64>().sqrt();
        excess = excess.max(norm - r);
        drift = drift.max(p.iter().zip(&pp).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }
    CheckResult::new(
        NAME,
        excess <= 1e-10 && drift <= 1e-10,
        format!("max norm excess {excess:e}, max re-projection change {drift:e}"),
        "both <= 1e-10",
    )
}

/// Monte-Carlo mean of the Q estimator against exact Q, per state-action pair.
/// Also returns the largest `|Q̂|` seen relative to its bound.
pub fn check_estq(
    name: &str,
    mdp: &TabularMdp,
    policy: &PolicyTable,
    exact_q: &[f64],
    n: usize,
    seed: u64,
) -> (CheckResult, f64) {
    let na = mdp.n_actions();
    let bound = mdp.r_max() / (1.0 - mdp.gamma().sqrt());
    let mut worst_z = 0.0f64;
    let mut worst_ratio = 0.0f64;
    let mut all_ok = true;
    for s in 0..mdp.n_states() {
        for a in 0..na {
            let mut rng = Rng::split(seed, (s * na + a) as u64);
            let draws: Vec<f64> = (0..n).map(|_| est_q(mdp, policy, s, a, &mut rng)).collect();
            let mean = draws.iter().sum::<f64>() / n as f64;
            let var = draws.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
            let se = (var / n as f64).sqrt();
            let gap = (mean - exact_q[s * na + a]).abs();
            all_ok &= gap <= 3.0 * se;
            worst_z = worst_z.max(if se > 0.0 {
                gap / se
            } else if gap == 0.0 {
                0.0
            } else {
                f64::INFINITY
            });
            worst_ratio = worst_ratio.max(draws.iter().map(|x| x.abs()).fold(0.0, f64::max) / bound);
        }
    }
    (
        CheckResult::new(name, all_ok, format!("max |mean - Q| / SE = {worst_z:.3} at N = {n}"), "<= 3 for every pair"),
        worst_ratio,
    )
}

pub fn check_estq_fixtures(n: usize, seed: u64) -> (Vec<CheckResult>, f64) {
    let single = fixtures::single_state(0.25);
    let (c1, r1) =
        check_estq("estq.unbiased.single_state", &single, &PolicyTable::uniform(1, 1), &[4.0 / 3.0], n, seed);
    let three = fixtures::three_state();
    let policy = PolicyTable::uniform(3, 2);
    let (c2, r2) = match exact_v_q(&three, &policy) {
        Ok(vq) => check_estq("estq.unbiased.three_state", &three, &policy, &vq.q, n, seed + 1),
        Err(e) => (CheckResult::failed_with("estq.unbiased.three_state", e.into()), 0.0),
    };
    (vec![c1, c2], r1.max(r2))
}

/// Exact policy gradient against central differences of `J` computed by
/// value iteration.
pub fn check_gradient_fd(instances: usize, seed: u64) -> CheckResult {
    const NAME: &str = "mdp.gradient_fd";
    let mut rng = Rng::new(seed);
    let mut worst = 0.0f64;
    for _ in 0..instances {
        let ns = 2 + rng.index(4);
        let na = 2 + rng.index(2);
        let gamma = rng.uniform_range(0.5, 0.95);
        let mdp = fixtures::random_mdp(ns, na, gamma, &mut rng);
        let theta: Vec<f64> = (0..ns * na).map(|_| rng.normal()).collect();
        let policy = SoftmaxPolicy::new(ns, na, theta.clone()).expect("dims");
        let exact = match exact_policy_gradient(&mdp, &policy) {
            Ok(g) => g,
            Err(e) => return CheckResult::failed_with(NAME, e.into()),
        };
        let fd = oracle::fd_policy_gradient(&mdp, &theta, 1e-5);
        let diff = exact.iter().zip(&fd).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let scale = fd.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-8);
        worst = worst.max(diff / scale);
    }
    CheckResult::new(NAME, worst <= 1e-5, format!("max relative error {worst:e} over {instances} instances"), "<= 1e-5")
}

/// Fixtures with features used for the strong-monotonicity check.
pub fn monotonicity_fixtures() -> Vec<(String, TabularMdp, PolicyTable, LinearFeatures)> {
    let (a, ap, af) = fixtures::td_ten_state();
    let (b, bp, bf) = fixtures::two_state_scalar_td();
    let mut rng = Rng::new(0x1e22);
    let c = fixtures::random_mdp(6, 3, 0.7, &mut rng);
    let cp = fixtures::random_policy(6, 3, &mut rng);
    let cf = fixtures::random_features(6, 3, &mut rng);
    vec![
        ("td_ten_state".into(), a, ap, af),
        ("two_state_scalar_td".into(), b, bp, bf),
        ("random_six_state".into(), c, cp, cf),
    ]
}

/// `(θ − θ*)ᵀ ḡ(θ) ≥ (1 − γ)√ω ‖θ − θ*‖² − 1e-9` at random points of the
/// default domain ball, and tightness on the scalar fixture.
pub fn check_monotonicity(n_theta: usize, seed: u64) -> Vec<CheckResult> {
    const NAME: &str = "td.monotonicity";
    let mut rng = Rng::new(seed);
    let mut out = Vec::new();
    let mut worst_margin = f64::INFINITY;
    let mut detail = String::new();
    let mut tight_gap = f64::NAN;
    for (name, mdp, policy, features) in monotonicity_fixtures() {
        let res = (|| -> Result<(f64, f64)> {
            let cov = feature_covariance(&mdp, &policy, &features)?;
            let jac = oracle::jacobi_eigenvalues(&cov.sigma)[0];
            if (jac - cov.omega).abs() > 1e-9 * cov.omega.max(1.0) {
                anyhow::bail!("omega {} disagrees with Jacobi {}", cov.omega, jac);
            }
            let star = td_fixed_point(&mdp, &policy, &features)?;
            let radius = 2.0 * star.iter().map(|x| x * x).sum::<f64>().sqrt() + 1.0;
            let d = features.dim();
            let mut margin = f64::INFINITY;
            let mut ratio_gap = 0.0f64;
            for _ in 0..n_theta {
                // uniform direction, radius ∝ U^{1/d}
                let dir: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
                let n = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
                let rad = radius * rng.uniform().powf(1.0 / d as f64);
                let theta: Vec<f64> = dir.iter().map(|x| x / n * rad).collect();
                let (lhs, rhs) = monotonicity_sides(&mdp, &policy, &features, &theta, &star, cov.omega)?;
                margin = margin.min(lhs - rhs);
                if rhs > 1e-12 {
                    ratio_gap = ratio_gap.max((lhs / rhs - 1.0).abs());
                }
            }
            Ok((margin, ratio_gap))
        })();
        match res {
            Ok((margin, gap)) => {
                worst_margin = worst_margin.min(margin);
                detail.push_str(&format!("{name}: min(lhs - rhs) = {margin:.3e}; "));
                if name == "two_state_scalar_td" {
                    tight_gap = gap;
                }
            }
            Err(e) => out.push(CheckResult::failed_with(&format!("{NAME}.{name}"), e)),
        }
    }
    out.push(CheckResult::new(
        NAME,
        worst_margin >= -1e-9,
        detail.trim_end_matches("; ").to_string(),
        "min(lhs - rhs) >= -1e-9 on every fixture",
    ));
    out.push(CheckResult::new(
        "td.monotonicity_tight",
        tight_gap <= 1e-6,
        format!("max |lhs/rhs - 1| = {tight_gap:e} on two_state_scalar_td"),
        "<= 1e-6",
    ));
    out
}

/// `ḡ(θ*) ≈ 0` on every fixture with features.
pub fn check_fixed_points() -> CheckResult {
    const NAME: &str = "td.fixed_point";
    let mut worst = 0.0f64;
    for (name, mdp, policy, features) in monotonicity_fixtures() {
        match td_fixed_point(&mdp, &policy, &features).and_then(|s| mean_pseudo_gradient(&mdp, &policy, &features, &s))
        {
            Ok(g) => worst = worst.max(g.iter().map(|x| x * x).sum::<f64>().sqrt()),
            Err(e) => return CheckResult::failed_with(&format!("{NAME}.{name}"), e.into()),
        }
    }
    CheckResult::new(NAME, worst <= 1e-9, format!("max |g(theta*)| = {worst:e}"), "<= 1e-9")
}

pub fn check_score_bound(samples: usize, seed: u64) -> CheckResult {
    const NAME: &str = "policy.score_bound";
    let mut rng = Rng::new(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let na = 2 + rng.index(5);
        let theta: Vec<f64> = (0..na).map(|_| 5.0 * rng.normal()).collect();
        let p = SoftmaxPolicy::new(1, na, theta).expect("dims");
        let a = rng.index(na);
        worst = worst.max(p.score_block(0, a).iter().map(|x| x * x).sum::<f64>().sqrt());
    }
    CheckResult::new(
        NAME,
        worst <= SCORE_NORM_BOUND + 1e-12,
        format!("max score norm {worst:.12}"),
        "<= sqrt(2) + 1e-12",
    )
}

/// Empirical laws of long rollouts against the exact occupancy measures,
/// and the fitted mixing rate of the two-state chain.
pub fn check_sampler_laws(length: usize, seed: u64) -> Vec<CheckResult> {
    let mdp = fixtures::three_state();
    let policy = PolicyTable::uniform(3, 2);
    let mut out = Vec::new();

    let mut rng = Rng::split(seed, 1);
    let tr = rollout(&mdp, &mut policy.clone(), Kernel::Restart, length, &mut rng);
    let mut freq = [0.0; 6];
    tr.iter().for_each(|t| freq[t.s * 2 + t.a] += 1.0 / length as f64);
    match discounted_visitation(&mdp, &policy) {
        Ok(vis) => {
            let series = oracle::discounted_pairs_by_series(&mdp, &policy);
            let agree = vis.normalized.probs.iter().zip(&series).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let tv = 0.5 * freq.iter().zip(&vis.normalized.probs).map(|(a, b)| (a - b).abs()).sum::<f64>();
            out.push(CheckResult::new(
                "sampler.restart_law",
                tv <= 0.01 && agree <= 1e-10,
                format!("TV {tv:.5} over {length} steps; occupancy vs series {agree:e}"),
                "TV <= 0.01",
            ));
        }
        Err(e) => out.push(CheckResult::failed_with("sampler.restart_law", e.into())),
    }

    let mut rng = Rng::split(seed, 2);
    let tr = rollout(&mdp, &mut policy.clone(), Kernel::True, length, &mut rng);
    let mut freq = [0.0; 3];
    tr.iter().for_each(|t| freq[t.s] += 1.0 / length as f64);
    match stationary_distribution(&mdp, &policy) {
        Ok(nu) => {
            let kernel = mdp.policy_kernel(&policy).expect("valid policy");
            let brute = oracle::stationary_by_squaring(&kernel);
            let agree = nu.probs.iter().zip(&brute).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let tv = 0.5 * freq.iter().zip(&nu.probs).map(|(a, b)| (a - b).abs()).sum::<f64>();
            out.push(CheckResult::new(
                "sampler.stationary_law",
                tv <= 0.01 && agree <= 1e-10,
                format!("TV {tv:.5} over {length} steps; power iteration vs squaring {agree:e}"),
                "TV <= 0.01",
            ));
        }
        Err(e) => out.push(CheckResult::failed_with("sampler.stationary_law", e.into())),
    }

    let two = fixtures::two_state_chain();
    let want = oracle::two_state_second_eigenvalue(0.1, 0.2);
    match mixing_profile(&two, &PolicyTable::uniform(2, 1), 50) {
        Ok(p) => out.push(CheckResult::new(
            "sampler.mixing_rate",
            (p.rho - want).abs() <= 0.1 * want,
            format!("rho {:.6}", p.rho),
            format!("within 10% of {want}"),
        )),
        Err(e) => out.push(CheckResult::failed_with("sampler.mixing_rate", e.into())),
    }
    out
}

fn builtin_spec(experiment: Experiment, file: ConfigFile) -> Result<RunSpec> {
    file.validate(experiment, Path::new("."), &Overrides::default())
}

pub fn td_convergence_spec() -> Result<RunSpec> {
    builtin_spec(
        Experiment::Td,
        ConfigFile {
            fixture: Some("builtin:td_ten_state".into()),
            horizon: Some(200_000),
            schedule: Some("diminishing".into()),
            alpha: Some(0.5),
            lambda: Some(0.99),
            seeds: Some(16),
            seed: Some(2024),
            ..Default::default()
        },
    )
}

pub struct TdConvergence {
    pub check: CheckResult,
    pub aggregate: Option<Aggregate>,
}

/// Diminishing-stepsize TD: final seed-mean `‖θ̄_T − θ*‖² ≤ 1e-3` and a
/// tail log-log slope in `[−0.7, −0.3]`.
pub fn check_td_convergence(spec: &RunSpec) -> TdConvergence {
    const NAME: &str = "td.convergence";
    let agg = match replicate(spec, spec.seeds) {
        Ok(a) => a,
        Err(e) => return TdConvergence { check: CheckResult::failed_with(NAME, e), aggregate: None },
    };
    let fin = agg.final_point();
    let fit = markov_adam_core::report::fit_rate(&agg.mean_pairs());
    let aux = markov_adam_core::report::fit_rate(&agg.aux_pairs());
    let (slope, r2) = fit.map(|f| (f.slope, f.r_squared)).unwrap_or((f64::NAN, f64::NAN));
    let aux_slope = aux.map(|f| f.slope).unwrap_or(f64::NAN);
    let ok = fin.mean <= 1e-3 && (-0.7..=-0.3).contains(&slope);
    let check = CheckResult::new(
        NAME,
        ok,
        format!(
            "final mean {:.3e} (SE {:.1e}), slope {slope:.3} (r2 {r2:.3}); running mean of |theta_t - theta*|^2 has slope {aux_slope:.3}",
            fin.mean, fin.se
        ),
        "final mean <= 1e-3 and slope in [-0.7, -0.3]",
    );
    TdConvergence { check, aggregate: Some(agg) }
}

pub fn td_plateau_spec(max_horizon: u64) -> Result<RunSpec> {
    builtin_spec(
        Experiment::Td,
        ConfigFile {
            fixture: Some("builtin:td_ten_state".into()),
            horizon: Some(200_000),
            schedule: Some("constant".into()),
            alpha: Some(0.1),
            seeds: Some(16),
            seed: Some(2025),
            plateau_alphas: Some(vec![0.1, 0.0125]),
            max_horizon: Some(max_horizon),
            ..Default::default()
        },
    )
}

pub struct TdPlateau {
    pub check: CheckResult,
    pub points: Vec<PlateauPoint>,
}

pub fn check_td_plateau(spec: &RunSpec) -> TdPlateau {
    const NAME: &str = "td.plateau";
    match plateau_scan(spec, &spec.plateau_alphas) {
        Ok(points) => {
            let ratio = points[0].plateau / points[points.len() - 1].plateau;
            let desc: Vec<String> = points
                .iter()
                .map(|p| {
                    format!(
                        "alpha {} T {} plateau {:.3e}{}",
                        p.alpha,
                        p.horizon,
                        p.plateau,
                        if p.separated { "" } else { " (not separated)" }
                    )
                })
                .collect();
            TdPlateau {
                check: CheckResult::new(
                    NAME,
                    (2.0..=32.0).contains(&ratio),
                    format!("ratio {ratio:.2}; {}", desc.join("; ")),
                    "ratio in [2, 32]",
                ),
                points,
            }
        }
        Err(e) => TdPlateau { check: CheckResult::failed_with(NAME, e), points: vec![] },
    }
}

pub fn pg_spec(algorithm: &str) -> Result<RunSpec> {
    let (schedule, alpha) = match algorithm {
        "sgd" => ("prop1", None),
        _ => ("diminishing", Some(1.0)),
    };
    builtin_spec(
        Experiment::Pg,
        ConfigFile {
            fixture: Some("builtin:pg_four_state".into()),
            algorithm: Some(algorithm.into()),
            horizon: Some(50_000),
            schedule: Some(schedule.into()),
            alpha,
            seeds: Some(8),
            seed: Some(2026),
            ..Default::default()
        },
    )
}

pub struct PgStationarity {
    pub check: CheckResult,
    pub aggregate: Option<Aggregate>,
}

/// Seed-mean `min_t ‖∇J(θ_t)‖² ≤ 1e-2` and every per-seed series non-increasing.
pub fn check_pg_stationarity(name: &str, spec: &RunSpec) -> PgStationarity {
    let agg = match replicate(spec, spec.seeds) {
        Ok(a) => a,
        Err(e) => return PgStationarity { check: CheckResult::failed_with(name, e), aggregate: None },
    };
    let fin = agg.final_point();
    let increases: usize =
        agg.reports.iter().map(|r| r.checkpoints.windows(2).filter(|w| w[1].value > w[0].value).count()).sum();
    let ok = fin.mean <= 1e-2 && increases == 0;
    PgStationarity {
        check: CheckResult::new(
            name,
            ok,
            format!(
                "mean min |grad J|^2 {:.3e} (SE {:.1e}); {increases} increases in per-seed series",
                fin.mean, fin.se
            ),
            "<= 1e-2 and 0 increases",
        ),
        aggregate: Some(agg),
    }
}

/// Largest observed `‖g‖ / bound` across the given runs.
pub fn bound_ratio(aggs: &[&Aggregate]) -> (f64, usize) {
    let ratio =
        aggs.iter().flat_map(|a| a.reports.iter()).map(|r| r.max_grad_norm / r.grad_norm_bound).fold(0.0, f64::max);
    let violations = aggs.iter().map(|a| a.invariant_violations()).sum();
    (ratio, violations)
}

/// Realized PG gradient bound checked directly on first-step gradients.
pub fn check_pg_gradient_bound(samples: usize, seed: u64) -> CheckResult {
    const NAME: &str = "bounds.pg_gradient";
    let mdp = fixtures::pg_four_state();
    let bound = realized_gradient_bound(&mdp);
    let mut rng = Rng::new(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let theta: Vec<f64> = (0..8).map(|_| 2.0 * rng.normal()).collect();
        let p = SoftmaxPolicy::new(4, 2, theta).expect("dims");
        let (s, a) = (rng.index(4), rng.index(2));
        let q = est_q(&mdp, p.table(), s, a, &mut rng);
        let g = markov_adam_core::pg::pg_gradient(&p, q, s, a);
        worst = worst.max(g.iter().map(|x| x * x).sum::<f64>().sqrt() / bound);
    }
    CheckResult::new(NAME, worst <= 1.0, format!("max |g| / bound = {worst:.4}"), "<= 1")
}

pub fn check_builtin_fixtures() -> CheckResult {
    const NAME: &str = "fixtures.load";
    let mut bad = Vec::new();
    for (name, _) in crate::fixture::BUILTIN {
        if *name == "reducible" {
            continue;
        }
        if let Err(e) = builtin(name) {
            bad.push(format!("{name}: {e:#}"));
        }
    }
    CheckResult::new(NAME, bad.is_empty(), if bad.is_empty() { "all load".into() } else { bad.join("; ") }, "all load")
}

pub fn fast_checks() -> Vec<CheckResult> {
    let mut out = vec![
        check_builtin_fixtures(),
        check_vhat_monotone(10_000, 11, correct_step),
        check_single_step(),
        check_projection_grid(100, 12),
        check_projection_feasible(10_000, 16, 13),
        check_gradient_fd(20, 14),
        check_fixed_points(),
        check_score_bound(100_000, 15),
    ];
    out.extend(check_monotonicity(1000, 16));
    out.extend(check_sampler_laws(1_000_000, 17));
    let (estq, _) = check_estq_fixtures(100_000, 18);
    out.extend(estq);
    out.push(check_pg_gradient_bound(10_000, 19));
    out
}

pub fn full_checks() -> Vec<CheckResult> {
    let mut out = fast_checks();
    let td = td_convergence_spec().map(|s| check_td_convergence(&s));
    let plateau = td_plateau_spec(DEFAULT_PLATEAU_MAX_HORIZON).map(|s| check_td_plateau(&s));
    let ams = pg_spec("amsgrad").map(|s| check_pg_stationarity("pg.amsgrad_stationarity", &s));
    let sgd = pg_spec("sgd").map(|s| check_pg_stationarity("pg.sgd_stationarity", &s));
    let mut aggs = Vec::new();
    match td {
        Ok(t) => {
            out.push(t.check);
            aggs.extend(t.aggregate);
        }
        Err(e) => out.push(CheckResult::failed_with("td.convergence", e)),
    }
    match plateau {
        Ok(p) => out.push(p.check),
        Err(e) => out.push(CheckResult::failed_with("td.plateau", e)),
    }
    for (name, r) in [("pg.amsgrad_stationarity", ams), ("pg.sgd_stationarity", sgd)] {
        match r {
            Ok(p) => {
                out.push(p.check);
                aggs.extend(p.aggregate);
            }
            Err(e) => out.push(CheckResult::failed_with(name, e)),
        }
    }
    let refs: Vec<&Aggregate> = aggs.iter().collect();
    let (ratio, violations) = bound_ratio(&refs);
    out.push(CheckResult::new(
        "bounds.runtime",
        violations == 0 && ratio <= 1.0,
        format!("{violations} violations; max |g| / bound = {ratio:.4}"),
        "0 violations",
    ));
    out
}

/// Cap on `T` in the plateau scan; sized to keep the scan within minutes.
pub const DEFAULT_PLATEAU_MAX_HORIZON: u64 = 25_600_000;

pub fn run_level(level: Level) -> Vec<CheckResult> {
    match level {
        Level::Fast => fast_checks(),
        Level::Full => full_checks(),
    }
}

#[derive(Debug, Serialize)]
pub struct VerifyReport<'a> {
    pub level: &'static str,
    pub passed: bool,
    pub checks: &'a [CheckResult],
}
