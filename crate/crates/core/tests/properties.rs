#![allow(clippy::needless_range_loop)]

use markov_adam_core::amsgrad::project;
use markov_adam_core::fixtures;
use markov_adam_core::mdp::{
    apply_bellman, exact_v_q, mixing_profile, stationary_distribution, tau_star, MixingProfile,
};
use markov_adam_core::pg::est_q;
use markov_adam_core::report::fit_rate;
use markov_adam_core::td::td_pseudo_gradient;
use markov_adam_core::{AmsGradState, DomainBall, MomentConvention, Rng, Schedule, SoftmaxPolicy, Transition};
use proptest::prelude::*;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn weighted_dist(a: &[f64], b: &[f64], v_hat: &[f64]) -> f64 {
    a.iter().zip(b).zip(v_hat).map(|((x, y), v)| v.sqrt() * (x - y) * (x - y)).sum()
}

fn instance(max_dim: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>, f64)> {
    (1..=max_dim).prop_flat_map(|d| {
        (prop::collection::vec(-20.0..20.0f64, d), prop::collection::vec(1e-4..50.0f64, d), 0.05..10.0f64)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn v_hat_never_decreases(
        seed in any::<u64>(),
        dim in 1usize..6,
        beta1 in 0.0..=1.0f64,
        beta2 in 0.01..=1.0f64,
        lambda in 0.5..=1.0f64,
        momentum in any::<bool>(),
    ) {
        let conv = if momentum { MomentConvention::WeightOnMomentum } else { MomentConvention::WeightOnGradient };
        let mut st = AmsGradState::new(dim, beta1, beta2, lambda, Schedule::Diminishing { alpha: 0.1 })
            .unwrap()
            .with_convention(conv)
            .with_denominator_floor(Some(1e-8));
        let mut rng = Rng::new(seed);
        let mut theta = vec![0.0; dim];
        for step in 1..=300u64 {
            let scale = 10f64.powf(rng.uniform_range(-3.0, 3.0));
            let g: Vec<f64> = (0..dim).map(|_| scale * rng.normal()).collect();
            let before = st.v_hat.clone();
            theta = st.update(&theta, &g).unwrap();
            prop_assert_eq!(st.t, step);
            for i in 0..dim {
                prop_assert!(st.v_hat[i] >= before[i]);
                prop_assert!(st.v_hat[i] >= st.v[i]);
                prop_assert!(st.m[i].is_finite() && st.v[i].is_finite() && st.v_hat[i].is_finite());
            }
        }
        prop_assert!(theta.iter().all(|x| x.is_finite()));
        prop_assert_eq!(st.vhat_violations, 0);
    }

    #[test]
    fn projection_is_feasible_and_idempotent((x, v, r) in instance(16)) {
        let ball = DomainBall::new(r).unwrap();
        let p = project(&x, &v, &ball).unwrap();
        prop_assert!(norm(&p) <= r * (1.0 + 1e-12));
        prop_assert_eq!(project(&p, &v, &ball).unwrap(), p.clone());
        if norm(&x) <= r {
            prop_assert_eq!(p, x);
        }
    }

    #[test]
    fn projection_beats_random_feasible_points((x, v, r) in instance(6), seed in any::<u64>()) {
        let ball = DomainBall::new(r).unwrap();
        let p = project(&x, &v, &ball).unwrap();
        let best = weighted_dist(&x, &p, &v);
        let mut rng = Rng::new(seed);
        for _ in 0..500 {
            let dir: Vec<f64> = x.iter().map(|_| rng.normal()).collect();
            let n = norm(&dir);
            let radius = r * rng.uniform().powf(1.0 / x.len() as f64);
            let y: Vec<f64> = dir.iter().map(|d| d / n * radius).collect();
            prop_assert!(best <= weighted_dist(&x, &y, &v) * (1.0 + 1e-9) + 1e-12);
        }
    }

    #[test]
    fn policy_rows_and_score_bound(
        ns in 1usize..4,
        na in 1usize..5,
        seed in any::<u64>(),
        scale in 0.0..800.0f64,
    ) {
        let mut rng = Rng::new(seed);
        let theta: Vec<f64> = (0..ns * na).map(|_| scale * rng.normal()).collect();
        let pol = SoftmaxPolicy::new(ns, na, theta).unwrap();
        for s in 0..ns {
            let row = pol.table().row(s);
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            prop_assert!(row.iter().all(|p| *p >= 0.0));
            for a in 0..na {
                prop_assert!(norm(&pol.score(s, a)) <= 2f64.sqrt() + 1e-12);
            }
        }
    }

    #[test]
    fn fit_recovers_power_laws(c in 0.01..100.0f64, p in -2.0..0.5f64) {
        let series: Vec<(f64, f64)> = (0..40).map(|k| {
            let t = 10f64.powf(1.0 + k as f64 * 0.1);
            (t, c * t.powf(p))
        }).collect();
        let fit = fit_rate(&series).unwrap();
        prop_assert!((fit.slope - p).abs() < 1e-9);
        prop_assert!((0.0..=1.0).contains(&fit.r_squared));
        prop_assert!(fit.plateau >= 0.0);
    }

    #[test]
    fn tau_star_matches_linear_scan(sigma in 0.01..50.0f64, rho in 0.01..0.999f64, alpha in 1e-6..1.0f64) {
        let prof = MixingProfile { sigma, rho, tv_series: vec![] };
        let tau = tau_star(&prof, alpha);
        let scan = (1..).find(|&t| sigma * rho.powi(t) <= alpha).unwrap() as usize;
        prop_assert_eq!(tau, scan);
    }

    #[test]
    fn random_chains_have_consistent_oracles(
        seed in any::<u64>(),
        ns in 2usize..7,
        na in 1usize..4,
        gamma in 0.05..0.99f64,
    ) {
        let mut rng = Rng::new(seed);
        let mdp = fixtures::random_mdp(ns, na, gamma, &mut rng);
        let pol = fixtures::random_policy(ns, na, &mut rng);
        let nu = stationary_distribution(&mdp, &pol).unwrap().probs;
        prop_assert!((nu.iter().sum::<f64>() - 1.0).abs() <= 1e-10);
        let moved = mdp.policy_kernel(&pol).unwrap().vec_mul(&nu);
        for (a, b) in moved.iter().zip(&nu) {
            prop_assert!((a - b).abs() <= 1e-10);
        }
        let v = exact_v_q(&mdp, &pol).unwrap().v;
        let back = apply_bellman(&mdp, &pol, &v).unwrap();
        for (a, b) in back.iter().zip(&v) {
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()));
        }
        let prof = mixing_profile(&mdp, &pol, 40).unwrap();
        prop_assert!(prof.rho > 0.0 && prof.rho < 1.0);
        for (i, tv) in prof.tv_series.iter().enumerate() {
            prop_assert!(prof.envelope(i + 1) >= *tv);
        }
    }

    #[test]
    fn est_q_respects_its_bound(seed in any::<u64>(), gamma in 0.05..0.98f64) {
        let mut rng = Rng::new(seed);
        let mdp = fixtures::random_mdp(3, 2, gamma, &mut rng);
        let pol = fixtures::random_policy(3, 2, &mut rng);
        let bound = mdp.r_max() / (1.0 - gamma.sqrt());
        for _ in 0..50 {
            let (s, a) = (rng.index(3), rng.index(2));
            let q = est_q(&mdp, &pol, s, a, &mut rng);
            prop_assert!((0.0..=bound * (1.0 + 1e-12)).contains(&q));
        }
    }

    #[test]
    fn td_gradient_respects_its_bound(seed in any::<u64>(), radius in 0.1..20.0f64, gamma in 0.0..0.99f64) {
        let mut rng = Rng::new(seed);
        let feat = fixtures::random_features(5, 3, &mut rng);
        let dir: Vec<f64> = (0..3).map(|_| rng.normal()).collect();
        let scale = radius * rng.uniform() / norm(&dir);
        let theta: Vec<f64> = dir.iter().map(|d| d * scale).collect();
        let tr = Transition { s: rng.index(5), a: 0, r: rng.uniform(), s_next: rng.index(5) };
        let g = td_pseudo_gradient(&theta, &feat, gamma, &tr);
        prop_assert!(norm(&g) <= 1.0 + (1.0 + gamma) * radius + 1e-12);
    }

    #[test]
    fn rng_is_reproducible(seed in any::<u64>(), stream in any::<u64>()) {
        let mut a = Rng::split(seed, stream);
        let mut b = Rng::split(seed, stream);
        for _ in 0..64 {
            prop_assert_eq!(a.next_u64(), b.next_u64());
        }
        let mut c = Rng::split(seed, stream.wrapping_add(1));
        let mut a = Rng::split(seed, stream);
        prop_assert!((0..4).any(|_| a.next_u64() != c.next_u64()));
    }
}
