//! Acceptance suite: one PASS/FAIL line per criterion, with runtimes.
//!
//! Runs as part of `cargo test`. Failing criteria are reported but only turn
//! into a nonzero exit status when `MARKOV_ADAM_STRICT_ACCEPTANCE=1` is set.
//! `MARKOV_ADAM_ACCEPTANCE_ONLY=1,4,10` restricts the run to some criteria.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use markov_adam::verify::{
    bound_ratio, check_estq_fixtures, check_gradient_fd, check_monotonicity, check_pg_gradient_bound,
    check_pg_stationarity, check_projection_feasible, check_projection_grid, check_sampler_laws, check_single_step,
    check_td_convergence, check_td_plateau, check_vhat_monotone, correct_step, pg_spec, td_convergence_spec,
    td_plateau_spec, CheckResult, DEFAULT_PLATEAU_MAX_HORIZON,
};

struct Outcome {
    id: usize,
    title: &'static str,
    limit: Duration,
    elapsed: Duration,
    checks: Vec<CheckResult>,
}

impl Outcome {
    fn passed(&self) -> bool {
        self.elapsed <= self.limit && self.checks.iter().all(|c| c.passed)
    }

    fn print(&self) {
        let tag = if self.passed() { "PASS" } else { "FAIL" };
        println!(
            "{tag} {:>2} {} ({:.2} s, limit {} s)",
            self.id,
            self.title,
            self.elapsed.as_secs_f64(),
            self.limit.as_secs()
        );
        for c in &self.checks {
            let mark = if c.passed { "ok " } else { "bad" };
            println!("       {mark} {}: {} [expected {}]", c.name, c.observed, c.expected);
        }
        if self.elapsed > self.limit {
            println!("       bad runtime over limit");
        }
    }
}

fn timed(id: usize, title: &'static str, limit_secs: u64, f: impl FnOnce() -> Vec<CheckResult>) -> Outcome {
    let start = Instant::now();
    let checks = f();
    let o = Outcome { id, title, limit: Duration::from_secs(limit_secs), elapsed: start.elapsed(), checks };
    o.print();
    o
}

fn selected() -> Option<Vec<usize>> {
    let v = std::env::var("MARKOV_ADAM_ACCEPTANCE_ONLY").ok()?;
    Some(v.split(',').filter_map(|s| s.trim().parse().ok()).collect())
}

fn main() -> ExitCode {
    let only = selected();
    let want = |id: usize| only.as_ref().is_none_or(|ids| ids.contains(&id));
    let strict = std::env::var("MARKOV_ADAM_STRICT_ACCEPTANCE").is_ok_and(|v| v == "1");
    let mut outcomes = Vec::new();
    // runs feeding the runtime-bound criterion
    let mut aggregates = Vec::new();
    let mut plateau_ratio = 0.0f64;

    if want(1) {
        outcomes.push(timed(1, "AMSGrad mechanics", 1, || {
            vec![check_vhat_monotone(10_000, 101, correct_step), check_single_step()]
        }));
    }
    if want(2) {
        outcomes.push(timed(2, "weighted projection", 10, || {
            vec![check_projection_grid(100, 102), check_projection_feasible(10_000, 16, 103)]
        }));
    }
    if want(3) {
        outcomes.push(timed(3, "EstQ unbiasedness", 60, || check_estq_fixtures(100_000, 104).0));
    }
    if want(4) {
        outcomes.push(timed(4, "exact policy gradient vs finite differences", 30, || vec![check_gradient_fd(20, 105)]));
    }
    if want(5) {
        outcomes.push(timed(5, "TD strong monotonicity", 5, || check_monotonicity(1000, 106)));
    }
    if want(6) {
        outcomes.push(timed(6, "TD-AMSGrad exact convergence", 300, || match td_convergence_spec() {
            Ok(spec) => {
                let r = check_td_convergence(&spec);
                aggregates.extend(r.aggregate);
                vec![r.check]
            }
            Err(e) => vec![CheckResult {
                name: "td.convergence".into(),
                passed: false,
                observed: format!("{e:#}"),
                expected: "valid spec".into(),
            }],
        }));
    }
    if want(7) {
        outcomes.push(timed(7, "TD-AMSGrad plateau", 600, || match td_plateau_spec(DEFAULT_PLATEAU_MAX_HORIZON) {
            Ok(spec) => {
                let r = check_td_plateau(&spec);
                plateau_ratio = r.points.iter().map(|p| p.max_grad_ratio).fold(0.0, f64::max);
                vec![r.check]
            }
            Err(e) => vec![CheckResult {
                name: "td.plateau".into(),
                passed: false,
                observed: format!("{e:#}"),
                expected: "valid spec".into(),
            }],
        }));
    }
    for (id, algo, title, name) in [
        (8, "amsgrad", "PG-AMSGrad stationarity", "pg.amsgrad_stationarity"),
        (9, "sgd", "PG-SGD baseline", "pg.sgd_stationarity"),
    ] {
        if want(id) {
            outcomes.push(timed(id, title, 600, || match pg_spec(algo) {
                Ok(spec) => {
                    let r = check_pg_stationarity(name, &spec);
                    aggregates.extend(r.aggregate);
                    vec![r.check]
                }
                Err(e) => vec![CheckResult {
                    name: name.into(),
                    passed: false,
                    observed: format!("{e:#}"),
                    expected: "valid spec".into(),
                }],
            }));
        }
    }
    if want(10) {
        outcomes.push(timed(10, "sampler laws", 60, || check_sampler_laws(1_000_000, 110)));
    }
    if want(11) {
        outcomes.push(timed(11, "runtime gradient bounds", 60, || {
            let refs: Vec<_> = aggregates.iter().collect();
            let (ratio, violations) = bound_ratio(&refs);
            let ratio = ratio.max(plateau_ratio);
            vec![
                check_pg_gradient_bound(100_000, 111),
                CheckResult {
                    name: "bounds.runs".into(),
                    passed: violations == 0 && ratio <= 1.0,
                    observed: format!(
                        "{violations} violations over {} batches; max |g| / bound = {ratio:.4}",
                        refs.len()
                    ),
                    expected: "0 violations".into(),
                },
            ]
        }));
    }

    let failed: Vec<String> = outcomes.iter().filter(|o| !o.passed()).map(|o| o.id.to_string()).collect();
    println!(
        "acceptance: {} of {} criteria passed{}",
        outcomes.len() - failed.len(),
        outcomes.len(),
        if failed.is_empty() { String::new() } else { format!("; failed: {}", failed.join(", ")) }
    );
    if strict && !failed.is_empty() {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
