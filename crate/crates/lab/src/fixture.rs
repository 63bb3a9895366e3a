//! Fixture files: a finite MDP plus an optional fixed policy and feature map.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use markov_adam_core::{LinearFeatures, PolicyTable, TabularMdp};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// On-disk layout. Matrices are flattened row-major: `transition[s][a][s']`,
/// `reward[s][a]`, `policy[s][a]`, `features[s][i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub n_states: usize,
    pub n_actions: usize,
    pub gamma: f64,
    pub r_max: f64,
    pub transition: Vec<f64>,
    pub reward: Vec<f64>,
    pub initial_dist: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feature_dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fixture {
    pub name: String,
    pub mdp: TabularMdp,
    /// Behaviour policy for TD and the reference policy for diagnostics;
    /// uniform when the file has none.
    pub policy: PolicyTable,
    pub features: Option<LinearFeatures>,
    /// SHA-256 of the file contents, hex encoded.
    pub digest: String,
}

impl FixtureFile {
    pub fn from_parts(
        name: &str,
        mdp: &TabularMdp,
        policy: Option<&PolicyTable>,
        features: Option<&LinearFeatures>,
    ) -> Self {
        Self {
            name: Some(name.to_string()),
            n_states: mdp.n_states(),
            n_actions: mdp.n_actions(),
            gamma: mdp.gamma(),
            r_max: mdp.r_max(),
            transition: mdp.transitions().to_vec(),
            reward: mdp.rewards().to_vec(),
            initial_dist: mdp.initial_dist().to_vec(),
            policy: policy.map(|p| p.as_slice().to_vec()),
            feature_dim: features.map(|f| f.dim()),
            features: features.map(|f| f.as_slice().to_vec()),
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn build(self, fallback_name: &str, digest: String) -> Result<Fixture> {
        let mdp = TabularMdp::new(
            self.n_states,
            self.n_actions,
            self.transition,
            self.reward,
            self.gamma,
            self.initial_dist,
            self.r_max,
        )?;
        let policy = match self.policy {
            Some(p) => PolicyTable::new(self.n_states, self.n_actions, p)?,
            None => PolicyTable::uniform(self.n_states, self.n_actions),
        };
        let features = match (self.features, self.feature_dim) {
            (Some(phi), Some(d)) => Some(LinearFeatures::new(self.n_states, d, phi)?),
            (Some(phi), None) => {
                if phi.len() % self.n_states != 0 {
                    bail!("features has {} entries, not a multiple of n_states = {}", phi.len(), self.n_states);
                }
                Some(LinearFeatures::new(self.n_states, phi.len() / self.n_states, phi)?)
            }
            (None, Some(_)) => bail!("feature_dim given without features"),
            (None, None) => None,
        };
        Ok(Fixture { name: self.name.unwrap_or_else(|| fallback_name.to_string()), mdp, policy, features, digest })
    }
}

pub fn parse_fixture(text: &str, fallback_name: &str) -> Result<Fixture> {
    let file: FixtureFile = toml::from_str(text).context("malformed fixture")?;
    file.build(fallback_name, hex_digest(text.as_bytes()))
}

pub fn load_fixture(path: &Path) -> Result<Fixture> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read fixture {}", path.display()))?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("fixture");
    parse_fixture(&text, stem).with_context(|| format!("in fixture {}", path.display()))
}

pub fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Fixtures shipped with the crate, embedded at compile time.
pub const BUILTIN: &[(&str, &str)] = &[
    ("two_state", include_str!("../fixtures/two_state.toml")),
    ("two_state_scalar_td", include_str!("../fixtures/two_state_scalar_td.toml")),
    ("single_state", include_str!("../fixtures/single_state.toml")),
    ("three_state", include_str!("../fixtures/three_state.toml")),
    ("pg_four_state", include_str!("../fixtures/pg_four_state.toml")),
    ("td_ten_state", include_str!("../fixtures/td_ten_state.toml")),
    ("reducible", include_str!("../fixtures/reducible.toml")),
];

pub fn builtin(name: &str) -> Result<Fixture> {
    match BUILTIN.iter().find(|(n, _)| *n == name) {
        Some((n, text)) => parse_fixture(text, n),
        None => bail!("no built-in fixture named `{name}`"),
    }
}
