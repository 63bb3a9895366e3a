//! Seeded replication, aggregation, plateau scans and artifact writing.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use markov_adam_core::pg::run_pg;
use markov_adam_core::report::{fit_rate, plateau};
use markov_adam_core::td::run_td_amsgrad;
use markov_adam_core::{ConvergenceReport, RateFit, Rng};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Experiment, RunSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesPoint {
    pub t: u64,
    pub mean: f64,
    pub se: f64,
    pub n: usize,
}

#[derive(Debug, Clone)]
pub struct Aggregate {
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub series: Vec<SeriesPoint>,
    /// Aggregate of each report's secondary series.
    pub aux_series: Vec<SeriesPoint>,
    pub reports: Vec<ConvergenceReport>,
    /// Wall time of each run in seconds, in replicate order.
    pub wall_seconds: Vec<f64>,
}

impl Aggregate {
    pub fn mean_pairs(&self) -> Vec<(f64, f64)> {
        self.series.iter().map(|p| (p.t as f64, p.mean)).collect()
    }

    pub fn aux_pairs(&self) -> Vec<(f64, f64)> {
        self.aux_series.iter().map(|p| (p.t as f64, p.mean)).collect()
    }

    pub fn final_point(&self) -> SeriesPoint {
        *self.series.last().expect("runs record at least one checkpoint")
    }

    pub fn invariant_violations(&self) -> usize {
        self.reports.iter().map(|r| r.invariant_violations).sum()
    }
}

/// Seed of replicate `i`: the first draw of stream `i` under the global seed.
pub fn run_seeds(global_seed: u64, n: usize) -> Vec<u64> {
    (0..n as u64).map(|i| Rng::split(global_seed, i).next_u64()).collect()
}

pub fn run_one(spec: &RunSpec, run_seed: u64) -> Result<ConvergenceReport> {
    let f = &spec.fixture;
    let report = match spec.experiment {
        Experiment::Td => {
            let features = f.features.as_ref().ok_or_else(|| anyhow!("fixture `{}` has no features", f.name))?;
            run_td_amsgrad(&f.mdp, &f.policy, features, &spec.td_config(run_seed))?
        }
        Experiment::Pg => run_pg(&f.mdp, &spec.pg_config(run_seed))?,
    };
    Ok(report)
}

/// Mean and standard error of each column. Values are sorted before summing
/// so the result does not depend on the order of the runs.
pub fn aggregate_series(runs: &[&[markov_adam_core::Checkpoint]]) -> Result<Vec<SeriesPoint>> {
    let Some(first) = runs.first() else { bail!("nothing to aggregate") };
    let len = first.len();
    if runs.iter().any(|r| r.len() != len) {
        bail!("runs recorded different numbers of checkpoints");
    }
    let n = runs.len();
    let mut out = Vec::with_capacity(len);
    for k in 0..len {
        let t = first[k].t;
        if runs.iter().any(|r| r[k].t != t) {
            bail!("checkpoint grids disagree at index {k}");
        }
        let mut vals: Vec<f64> = runs.iter().map(|r| r[k].value).collect();
        vals.sort_by(f64::total_cmp);
        let mean = vals.iter().sum::<f64>() / n as f64;
        let se = if n > 1 {
            let mut dev: Vec<f64> = vals.iter().map(|v| (v - mean) * (v - mean)).collect();
            dev.sort_by(f64::total_cmp);
            (dev.iter().sum::<f64>() / (n - 1) as f64).sqrt() / (n as f64).sqrt()
        } else {
            0.0
        };
        out.push(SeriesPoint { t, mean, se, n });
    }
    Ok(out)
}

/// Runs the experiment once per replicate seed, in parallel, and aggregates.
/// Any failed run or invariant violation fails the batch.
pub fn replicate(spec: &RunSpec, n_seeds: usize) -> Result<Aggregate> {
    if n_seeds == 0 {
        bail!("n_seeds must be at least 1");
    }
    let seeds = run_seeds(spec.seed, n_seeds);
    let started = Instant::now();
    let results: Vec<Result<(ConvergenceReport, f64)>> = seeds
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let t0 = Instant::now();
            let report = run_one(spec, *s).with_context(|| format!("replicate {i} (run seed {s})"))?;
            Ok((report, t0.elapsed().as_secs_f64()))
        })
        .collect();
    let (reports, wall_seconds): (Vec<_>, Vec<_>) =
        results.into_iter().collect::<Result<Vec<_>>>()?.into_iter().unzip();
    log::info!("{} runs of T = {} in {:.2?}", n_seeds, spec.horizon, started.elapsed());
    for (i, r) in reports.iter().enumerate() {
        if r.invariant_violations > 0 {
            bail!(
                "replicate {i} (run seed {}) had {} invariant violations (max |g| {} vs bound {})",
                r.seed,
                r.invariant_violations,
                r.max_grad_norm,
                r.grad_norm_bound
            );
        }
    }
    let main: Vec<&[_]> = reports.iter().map(|r| r.checkpoints.as_slice()).collect();
    let aux: Vec<&[_]> = reports.iter().map(|r| r.aux_checkpoints.as_slice()).collect();
    Ok(Aggregate {
        config_hash: spec.config_hash(),
        seeds,
        series: aggregate_series(&main)?,
        aux_series: aggregate_series(&aux)?,
        reports,
        wall_seconds,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlateauPoint {
    pub alpha: f64,
    pub horizon: u64,
    /// Mean error over the last 10% of the seed-mean series.
    pub plateau: f64,
    /// `e(T/2) − e(T)`, the size of the remaining `C₁/T` term.
    pub transient: f64,
    /// Whether, before `max_horizon`, `transient ≤ 0.1 · plateau` held and
    /// the plateau sat below 10% of the first checkpoint. The second test
    /// catches tiny stepsizes whose series has barely moved.
    pub separated: bool,
    /// Largest `‖g_t‖ / bound` over every run of the scan for this stepsize.
    pub max_grad_ratio: f64,
}

/// Error of the checkpoint closest to `t`.
fn value_near(series: &[SeriesPoint], t: u64) -> f64 {
    series.iter().min_by_key(|p| p.t.abs_diff(t)).map(|p| p.mean).unwrap_or(f64::NAN)
}

/// For each constant stepsize, doubles `T` from `spec.horizon` until the
/// `C₁/T` term, estimated as `e(T/2) − e(T)`, is at most 10% of the plateau,
/// or `spec.max_horizon` is reached (reported as not separated). See
/// [`PlateauPoint::separated`].
pub fn plateau_scan(spec: &RunSpec, alphas: &[f64]) -> Result<Vec<PlateauPoint>> {
    if alphas.is_empty() {
        bail!("no stepsizes to scan");
    }
    let mut out = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let mut horizon = spec.horizon;
        let mut max_grad_ratio = 0.0f64;
        loop {
            let run = spec.with_constant(alpha, horizon);
            let agg = replicate(&run, spec.seeds)?;
            for r in &agg.reports {
                max_grad_ratio = max_grad_ratio.max(r.max_grad_norm / r.grad_norm_bound);
            }
            let plateau = plateau(&agg.mean_pairs());
            let transient = value_near(&agg.series, horizon / 2) - agg.final_point().mean;
            let start = agg.series[0].mean;
            let separated = transient <= 0.1 * plateau && plateau < 0.1 * start;
            log::info!("alpha {alpha}: T = {horizon}, plateau {plateau:.3e}, transient {transient:.3e}");
            if separated || horizon.saturating_mul(2) > spec.max_horizon {
                out.push(PlateauPoint { alpha, horizon, plateau, transient, separated, max_grad_ratio });
                break;
            }
            horizon *= 2;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub config_hash: String,
    pub config: String,
    pub metric: &'static str,
    pub global_seed: u64,
    pub run_seeds: Vec<u64>,
    pub horizon: u64,
    pub final_mean: f64,
    pub final_se: f64,
    pub rate_fit: Option<RateFitJson>,
    pub rate_fit_error: Option<String>,
    pub invariant_violations: usize,
    pub g0_resamples: usize,
    pub g0_unmet_runs: usize,
    pub max_grad_norm: f64,
    pub grad_norm_bound: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub plateau_scan: Vec<PlateauPoint>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plateau_ratio: Option<f64>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RateFitJson {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Only reported for constant stepsizes.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plateau: Option<f64>,
}

impl RateFitJson {
    fn new(f: RateFit, constant: bool) -> Self {
        Self { slope: f.slope, intercept: f.intercept, r_squared: f.r_squared, plateau: constant.then_some(f.plateau) }
    }
}

pub fn summarize(spec: &RunSpec, agg: &Aggregate, scan: Vec<PlateauPoint>) -> Summary {
    let (rate_fit, rate_fit_error) = match fit_rate(&agg.mean_pairs()) {
        Ok(f) => (Some(RateFitJson::new(f, spec.schedule.is_constant())), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let plateau_ratio = match scan.as_slice() {
        [first, .., last] => Some(first.plateau / last.plateau),
        _ => None,
    };
    let fin = agg.final_point();
    Summary {
        config_hash: agg.config_hash.clone(),
        config: spec.echo(),
        metric: agg.reports[0].metric.name(),
        global_seed: spec.seed,
        run_seeds: agg.seeds.clone(),
        horizon: spec.horizon,
        final_mean: fin.mean,
        final_se: fin.se,
        rate_fit,
        rate_fit_error,
        invariant_violations: agg.invariant_violations(),
        g0_resamples: agg.reports.iter().map(|r| r.g0_resamples).sum(),
        g0_unmet_runs: agg.reports.iter().filter(|r| !r.g0_satisfied).count(),
        max_grad_norm: agg.reports.iter().map(|r| r.max_grad_norm).fold(0.0, f64::max),
        grad_norm_bound: agg.reports[0].grad_norm_bound,
        plateau_scan: scan,
        plateau_ratio,
    }
}

pub fn series_csv(series: &[SeriesPoint]) -> String {
    let mut s = String::from("t,mean_error,se,seed_count\n");
    for p in series {
        s.push_str(&format!("{},{:e},{:e},{}\n", p.t, p.mean, p.se, p.n));
    }
    s
}

#[derive(Debug, Clone, Serialize)]
struct Timing<'a> {
    config_hash: &'a str,
    run_seeds: &'a [u64],
    wall_seconds: &'a [f64],
}

/// Writes `<stem>.csv` and `<stem>.json` into `dir` and returns their paths.
/// Run times go to `<stem>.timing.json` so the other two files depend only
/// on the configuration.
pub fn write_artifacts(dir: &Path, stem: &str, agg: &Aggregate, summary: &Summary) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let csv = dir.join(format!("{stem}.csv"));
    let json = dir.join(format!("{stem}.json"));
    let timing = dir.join(format!("{stem}.timing.json"));
    fs::write(&csv, series_csv(&agg.series)).with_context(|| format!("cannot write {}", csv.display()))?;
    write_json(&json, summary)?;
    let t = Timing { config_hash: &agg.config_hash, run_seeds: &agg.seeds, wall_seconds: &agg.wall_seconds };
    write_json(&timing, &t)?;
    Ok((csv, json))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}
