//! Experiment configuration: a flat TOML file, validated into run settings.
//!
//! Keys (all optional except `fixture`):
//!
//! | key | meaning | default |
//! |---|---|---|
//! | `fixture` | fixture path, relative to the config file, or `builtin:<name>` | |
//! | `algorithm` | `amsgrad` or `sgd` (PG only) | `amsgrad` |
//! | `horizon` | steps per run `T` | `10000` |
//! | `schedule` | `constant`, `diminishing` (α/√t) or `prop1` ((1−γ)/√t) | `diminishing` |
//! | `alpha` | base stepsize | `0.5` TD, `1.0` PG |
//! | `beta1`, `beta2` | moment weights, `[0,1]` and `(0,1]` | `0.9`, `0.999` |
//! | `lambda` | decay of `β₁ₜ = β₁λ^t` (TD), `(0,1]` | `0.99` |
//! | `radius` | TD domain radius | `2‖θ*‖ + 1` |
//! | `g0` | first-gradient floor `G₀` | `1e-3` |
//! | `enforce_g0` | resample the first gradient until it clears `G₀` | `true` |
//! | `oracle_every` | checkpoint spacing, must divide `horizon` | `T/1000` |
//! | `seeds` | number of replicate runs | `1` |
//! | `seed` | global seed | `0` |
//! | `out_dir` | output directory | `out` |
//! | `moment_convention` | `weight_on_momentum` or `weight_on_gradient` | `weight_on_momentum` (TD), `weight_on_gradient` (PG) |
//! | `plateau_alphas` | constant stepsizes to scan (TD) | none |
//! | `max_horizon` | cap for the plateau scan | `16 · horizon` |

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use markov_adam_core::pg::{PgAlgorithm, PgRunConfig};
use markov_adam_core::td::TdRunConfig;
use markov_adam_core::{MomentConvention, Schedule};
use serde::Deserialize;

use crate::fixture::{builtin, load_fixture, Fixture};

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub fixture: Option<String>,
    pub algorithm: Option<String>,
    pub horizon: Option<u64>,
    pub schedule: Option<String>,
    pub alpha: Option<f64>,
    pub beta1: Option<f64>,
    pub beta2: Option<f64>,
    pub lambda: Option<f64>,
    pub radius: Option<f64>,
    pub g0: Option<f64>,
    pub enforce_g0: Option<bool>,
    pub oracle_every: Option<u64>,
    pub seeds: Option<usize>,
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub moment_convention: Option<String>,
    pub plateau_alphas: Option<Vec<f64>>,
    pub max_horizon: Option<u64>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seeds: Option<usize>,
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    /// Value of the output-directory environment variable.
    pub env_out_dir: Option<PathBuf>,
}

pub const OUT_DIR_ENV: &str = "MARKOV_ADAM_OUT";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Td,
    Pg,
}

/// A validated experiment.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub experiment: Experiment,
    pub fixture: Fixture,
    pub algorithm: PgAlgorithm,
    pub horizon: u64,
    pub schedule: Schedule,
    pub beta1: f64,
    pub beta2: f64,
    pub lambda: f64,
    pub radius: Option<f64>,
    pub g0: f64,
    pub enforce_g0: bool,
    pub oracle_every: Option<u64>,
    pub seeds: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub convention: MomentConvention,
    pub plateau_alphas: Vec<f64>,
    pub max_horizon: u64,
}

#[derive(Debug, thiserror::Error)]
#[error("invalid value for `{field}`: {reason}")]
pub struct FieldError {
    pub field: &'static str,
    pub reason: String,
}

fn field(field: &'static str, reason: impl Into<String>) -> anyhow::Error {
    FieldError { field, reason: reason.into() }.into()
}

pub fn parse_config(text: &str) -> Result<ConfigFile> {
    toml::from_str(text).context("malformed config")
}

pub fn load_config(path: &Path) -> Result<ConfigFile> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
    parse_config(&text).with_context(|| format!("in config {}", path.display()))
}

/// Resolves a `fixture` entry: `builtin:<name>` or a path relative to `base`.
pub fn resolve_fixture(entry: &str, base: &Path) -> Result<Fixture> {
    if let Some(name) = entry.strip_prefix("builtin:") {
        return builtin(name);
    }
    let path = base.join(entry);
    if !path.exists() {
        bail!("fixture file not found: {}", path.display());
    }
    load_fixture(&path)
}

fn unit_interval(name: &'static str, v: f64, open_low: bool, open_high: bool) -> Result<f64> {
    let ok = v.is_finite() && if open_low { v > 0.0 } else { v >= 0.0 } && if open_high { v < 1.0 } else { v <= 1.0 };
    if ok {
        Ok(v)
    } else {
        let lo = if open_low { "(0" } else { "[0" };
        let hi = if open_high { "1)" } else { "1]" };
        Err(field(name, format!("{v} is outside {lo}, {hi}")))
    }
}

impl ConfigFile {
    /// Validates the file for `experiment`, with paths resolved against `base`.
    pub fn validate(&self, experiment: Experiment, base: &Path, overrides: &Overrides) -> Result<RunSpec> {
        let entry = self.fixture.as_deref().ok_or_else(|| field("fixture", "missing"))?;
        let fixture = resolve_fixture(entry, base)?;
        unit_interval("gamma", fixture.mdp.gamma(), true, true)?;

        let algorithm = match self.algorithm.as_deref().unwrap_or("amsgrad") {
            "amsgrad" => PgAlgorithm::AmsGrad,
            "sgd" if experiment == Experiment::Pg => PgAlgorithm::Sgd,
            "sgd" => return Err(field("algorithm", "TD runs support only `amsgrad`")),
            other => return Err(field("algorithm", format!("unknown algorithm `{other}`"))),
        };
        let horizon = self.horizon.unwrap_or(10_000);
        if horizon == 0 {
            return Err(field("horizon", "must be at least 1"));
        }
        let alpha = self.alpha.unwrap_or(match experiment {
            Experiment::Td => 0.5,
            Experiment::Pg => 1.0,
        });
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(field("alpha", format!("{alpha} must be a non-negative number")));
        }
        let schedule = match self.schedule.as_deref().unwrap_or("diminishing") {
            "constant" => Schedule::Constant { alpha },
            "diminishing" => Schedule::Diminishing { alpha },
            "prop1" => Schedule::discount_scaled(fixture.mdp.gamma()),
            other => return Err(field("schedule", format!("unknown schedule `{other}`"))),
        };
        let beta1 = unit_interval("beta1", self.beta1.unwrap_or(0.9), false, false)?;
        let beta2 = unit_interval("beta2", self.beta2.unwrap_or(0.999), true, false)?;
        let lambda = unit_interval("lambda", self.lambda.unwrap_or(0.99), true, false)?;
        if let Some(r) = self.radius {
            if !(r > 0.0 && r.is_finite()) {
                return Err(field("radius", format!("{r} must be positive")));
            }
        }
        let g0 = self.g0.unwrap_or(1e-3);
        if !(g0 > 0.0 && g0.is_finite()) {
            return Err(field("g0", format!("{g0} must be positive")));
        }
        if let Some(k) = self.oracle_every {
            if k == 0 || !horizon.is_multiple_of(k) {
                return Err(field("oracle_every", format!("{k} does not divide horizon {horizon}")));
            }
        }
        let seeds = overrides.seeds.or(self.seeds).unwrap_or(1);
        if seeds == 0 {
            return Err(field("seeds", "must be at least 1"));
        }
        let default_convention = match experiment {
            Experiment::Td => "weight_on_momentum",
            Experiment::Pg => "weight_on_gradient",
        };
        let convention = match self.moment_convention.as_deref().unwrap_or(default_convention) {
            "weight_on_momentum" => MomentConvention::WeightOnMomentum,
            "weight_on_gradient" => MomentConvention::WeightOnGradient,
            other => return Err(field("moment_convention", format!("unknown convention `{other}`"))),
        };
        let plateau_alphas = self.plateau_alphas.clone().unwrap_or_default();
        if plateau_alphas.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
            return Err(field("plateau_alphas", "entries must be positive"));
        }
        if plateau_alphas.windows(2).any(|w| w[1] >= w[0]) {
            return Err(field("plateau_alphas", "entries must be strictly decreasing"));
        }
        if !plateau_alphas.is_empty() && experiment != Experiment::Td {
            return Err(field("plateau_alphas", "the plateau scan is defined for TD runs"));
        }
        let max_horizon = self.max_horizon.unwrap_or(horizon.saturating_mul(16));
        if max_horizon < horizon {
            return Err(field("max_horizon", format!("{max_horizon} is below horizon {horizon}")));
        }
        if experiment == Experiment::Td && fixture.features.is_none() {
            return Err(field("fixture", format!("`{}` has no features; TD runs need them", fixture.name)));
        }
        let out_dir = overrides
            .out_dir
            .clone()
            .or_else(|| overrides.env_out_dir.clone())
            .or_else(|| self.out_dir.as_ref().map(|p| base.join(p)))
            .unwrap_or_else(|| PathBuf::from("out"));

        Ok(RunSpec {
            experiment,
            fixture,
            algorithm,
            horizon,
            schedule,
            beta1,
            beta2,
            lambda,
            radius: self.radius,
            g0,
            enforce_g0: self.enforce_g0.unwrap_or(true),
            oracle_every: self.oracle_every,
            seeds,
            seed: overrides.seed.or(self.seed).unwrap_or(0),
            out_dir,
            convention,
            plateau_alphas,
            max_horizon,
        })
    }
}

fn schedule_name(s: &Schedule) -> &'static str {
    match s {
        Schedule::Constant { .. } => "constant",
        Schedule::Diminishing { .. } => "diminishing",
    }
}

fn convention_name(c: MomentConvention) -> &'static str {
    match c {
        MomentConvention::WeightOnMomentum => "weight_on_momentum",
        MomentConvention::WeightOnGradient => "weight_on_gradient",
    }
}

impl RunSpec {
    /// Canonical `key = value` lines describing everything that affects the
    /// numbers. The output directory is left out.
    pub fn echo(&self) -> String {
        let mut s = String::new();
        let kind = match self.experiment {
            Experiment::Td => "td",
            Experiment::Pg => "pg",
        };
        let _ = writeln!(s, "experiment = {kind}");
        let _ = writeln!(s, "fixture = {} (sha256 {})", self.fixture.name, self.fixture.digest);
        let _ = writeln!(s, "algorithm = {}", self.algorithm.name());
        let _ = writeln!(s, "horizon = {}", self.horizon);
        let _ = writeln!(s, "schedule = {}", schedule_name(&self.schedule));
        let _ = writeln!(s, "alpha = {:?}", self.schedule.alpha());
        let _ = writeln!(s, "beta1 = {:?}", self.beta1);
        let _ = writeln!(s, "beta2 = {:?}", self.beta2);
        if self.experiment == Experiment::Td {
            let _ = writeln!(s, "lambda = {:?}", self.lambda);
            match self.radius {
                Some(r) => {
                    let _ = writeln!(s, "radius = {r:?}");
                }
                None => {
                    let _ = writeln!(s, "radius = auto");
                }
            }
        }
        let _ = writeln!(s, "g0 = {:?}", self.g0);
        let _ = writeln!(s, "enforce_g0 = {}", self.enforce_g0);
        match self.oracle_every {
            Some(k) => {
                let _ = writeln!(s, "oracle_every = {k}");
            }
            None => {
                let _ = writeln!(s, "oracle_every = auto");
            }
        }
        let _ = writeln!(s, "seeds = {}", self.seeds);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "moment_convention = {}", convention_name(self.convention));
        if !self.plateau_alphas.is_empty() {
            let _ = writeln!(s, "plateau_alphas = {:?}", self.plateau_alphas);
            let _ = writeln!(s, "max_horizon = {}", self.max_horizon);
        }
        s
    }

    pub fn config_hash(&self) -> String {
        crate::fixture::hex_digest(self.echo().as_bytes())
    }

    pub fn td_config(&self, run_seed: u64) -> TdRunConfig {
        let mut c = TdRunConfig::new(self.horizon, self.schedule, run_seed);
        c.beta1 = self.beta1;
        c.beta2 = self.beta2;
        c.lambda = self.lambda;
        c.radius = self.radius;
        c.g0 = self.g0;
        c.enforce_g0 = self.enforce_g0;
        c.oracle_every = self.oracle_every;
        c.convention = self.convention;
        c.config_echo = self.echo();
        c
    }

    pub fn pg_config(&self, run_seed: u64) -> PgRunConfig {
        let mut c = PgRunConfig::new(self.horizon, self.schedule, self.algorithm, run_seed);
        c.beta1 = self.beta1;
        c.beta2 = self.beta2;
        c.g0 = self.g0;
        c.enforce_g0 = self.enforce_g0;
        c.oracle_every = self.oracle_every;
        c.convention = self.convention;
        c.config_echo = self.echo();
        c
    }

    /// A copy with a different constant stepsize and horizon, used by the plateau scan.
    pub fn with_constant(&self, alpha: f64, horizon: u64) -> Self {
        let mut s = self.clone();
        s.schedule = Schedule::Constant { alpha };
        s.horizon = horizon;
        s.oracle_every = None;
        s.plateau_alphas.clear();
        s
    }
}
