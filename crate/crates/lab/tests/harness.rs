use std::path::Path;

use markov_adam::config::{parse_config, Experiment, Overrides, RunSpec};
use markov_adam::harness::{aggregate_series, plateau_scan, replicate, run_one, run_seeds};
use markov_adam_core::Checkpoint;

fn spec(text: &str, experiment: Experiment) -> RunSpec {
    parse_config(text).unwrap().validate(experiment, Path::new("."), &Overrides::default()).unwrap()
}

fn td(extra: &str) -> RunSpec {
    spec(&format!("fixture = \"builtin:td_ten_state\"\n{extra}"), Experiment::Td)
}

#[test]
fn single_seed_aggregate_is_the_report() {
    let s = td("horizon = 1000\nseed = 3");
    let agg = replicate(&s, 1).unwrap();
    let report = run_one(&s, run_seeds(3, 1)[0]).unwrap();
    assert_eq!(agg.reports, vec![report.clone()]);
    assert_eq!(agg.series.len(), report.checkpoints.len());
    for (p, c) in agg.series.iter().zip(&report.checkpoints) {
        assert_eq!((p.t, p.mean, p.se, p.n), (c.t, c.value, 0.0, 1));
    }
    assert_eq!(agg.wall_seconds.len(), 1);
}

#[test]
fn aggregation_ignores_run_order() {
    let runs: Vec<Vec<Checkpoint>> = (0..7)
        .map(|k| {
            (1..=5).map(|t| Checkpoint { t, value: 0.1 * k as f64 + 1.0 / (t as f64 + k as f64).sqrt() }).collect()
        })
        .collect();
    let forward: Vec<&[Checkpoint]> = runs.iter().map(Vec::as_slice).collect();
    let mut shuffled = forward.clone();
    shuffled.reverse();
    shuffled.swap(1, 4);
    assert_eq!(aggregate_series(&forward).unwrap(), aggregate_series(&shuffled).unwrap());
}

#[test]
fn aggregation_rejects_mismatched_grids() {
    let a = [Checkpoint { t: 1, value: 1.0 }, Checkpoint { t: 2, value: 1.0 }];
    let b = [Checkpoint { t: 1, value: 1.0 }, Checkpoint { t: 3, value: 1.0 }];
    assert!(aggregate_series(&[&a, &b]).is_err());
    assert!(aggregate_series(&[&a, &b[..1]]).is_err());
}

#[test]
fn zero_reward_series_is_flat() {
    let dir = tempfile::tempdir().unwrap();
    let fixture = markov_adam::fixture::builtin("td_ten_state").unwrap();
    let zero = markov_adam::fixture::FixtureFile::from_parts(
        "zero",
        &fixture.mdp.with_zero_rewards(),
        Some(&fixture.policy),
        fixture.features.as_ref(),
    );
    std::fs::write(dir.path().join("zero.toml"), zero.to_toml().unwrap()).unwrap();
    let s = parse_config("fixture = \"zero.toml\"\nhorizon = 500")
        .unwrap()
        .validate(Experiment::Td, dir.path(), &Overrides::default())
        .unwrap();
    let agg = replicate(&s, 4).unwrap();
    let first = agg.series[0].mean;
    assert!(agg.series.iter().all(|p| p.mean == first));
}

#[test]
fn standard_error_shrinks_with_more_seeds() {
    let s = td("horizon = 2000\nseed = 8");
    let small = replicate(&s, 16).unwrap().final_point().se;
    let large = replicate(&s, 64).unwrap().final_point().se;
    let ratio = small / large;
    assert!((1.3..=3.0).contains(&ratio), "SE ratio {ratio}");
}

#[test]
fn replicate_seeds_are_stable() {
    assert_eq!(run_seeds(5, 3), run_seeds(5, 3));
    assert_eq!(run_seeds(5, 3)[..], run_seeds(5, 4)[..3]);
    assert_ne!(run_seeds(5, 3), run_seeds(6, 3));
}

#[test]
fn pg_replicates_keep_running_minimum() {
    let s = spec("fixture = \"builtin:pg_four_state\"\nhorizon = 2000\noracle_every = 20", Experiment::Pg);
    let agg = replicate(&s, 4).unwrap();
    for r in &agg.reports {
        assert!(r.checkpoints.windows(2).all(|w| w[1].value <= w[0].value));
    }
    assert_eq!(agg.invariant_violations(), 0);
}

#[test]
fn plateau_scan_is_deterministic() {
    let s = td("schedule = \"constant\"\nhorizon = 2000\nmax_horizon = 4000\nseeds = 2");
    let a = plateau_scan(&s, &[0.1, 0.1]).unwrap();
    assert_eq!(a[0], a[1]);
    assert_eq!(a, plateau_scan(&s, &[0.1, 0.1]).unwrap());
}

#[test]
fn vanishing_stepsize_is_not_separated() {
    let s = td("schedule = \"constant\"\nhorizon = 1000\nmax_horizon = 2000\nseeds = 2");
    let scan = plateau_scan(&s, &[1e-7]).unwrap();
    assert!(!scan[0].separated, "{:?}", scan[0]);
    assert_eq!(scan[0].horizon, 2000);
}
