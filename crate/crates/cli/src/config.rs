//! Experiment configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use games_core::games::GamesConfig;
use games_solver::SolverOptions;

use crate::synth::SynthParams;
use crate::CliError;

/// Where the dataset and instance come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    Synthetic(SynthParams),
    Files {
        /// Directory written by `synth` (topologies, signals, coupling).
        dataset_dir: PathBuf,
        instance: PathBuf,
    },
}

impl Default for DataSource {
    fn default() -> Self {
        DataSource::Synthetic(SynthParams::default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSettings {
    pub gap: f64,
    pub time_limit_s: Option<f64>,
    pub node_limit: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self { gap: 1e-4, time_limit_s: None, node_limit: 20_000 }
    }
}

impl SolverSettings {
    pub fn options(&self) -> SolverOptions {
        SolverOptions {
            gap: self.gap,
            node_limit: self.node_limit,
            time_limit_s: self.time_limit_s.unwrap_or(f64::INFINITY),
            ..SolverOptions::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub data: DataSource,
    pub games: GamesConfig,
    pub k_list: Vec<usize>,
    pub reduction_goals: Vec<f64>,
    /// Master seed; every stage derives its own seed from it.
    pub seed: u64,
    pub output_dir: PathBuf,
    pub solver: SolverSettings,
    /// Per-stage partial configs merged over this one when that stage runs.
    pub overrides: BTreeMap<String, Value>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            data: DataSource::default(),
            games: GamesConfig::default(),
            k_list: vec![2, 3, 5],
            reduction_goals: vec![0.8, 0.95],
            seed: 2050,
            output_dir: PathBuf::from("out"),
            solver: SolverSettings::default(),
            overrides: BTreeMap::new(),
        }
    }
}

/// Pipeline stages in execution order.
pub const STAGES: [&str; 7] = ["synth", "train", "embed", "cluster", "plan", "evaluate", "compare"];

/// Seed of `stage` derived from the master seed.
pub fn stage_seed(master: u64, stage: &str) -> u64 {
    let id = STAGES.iter().position(|&s| s == stage).unwrap_or(STAGES.len()) as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(id + 1);
    rng.next_u64()
}

fn merge(base: &mut Value, patch: &Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                merge(b.entry(k.clone()).or_insert(Value::Null), v);
            }
        }
        (b, p) => *b = p.clone(),
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: Self =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.k_list.is_empty() {
            return bad("K list is empty".into());
        }
        if self.k_list.contains(&0) {
            return bad("K values must be at least 1".into());
        }
        if self.reduction_goals.is_empty() || self.reduction_goals.iter().any(|g| !(0.0..=1.0).contains(g)) {
            return bad("reduction goals must be a nonempty list of values in [0, 1]".into());
        }
        if !(self.solver.gap >= 0.0) {
            return bad(format!("solver gap {} is negative", self.solver.gap));
        }
        match &self.data {
            DataSource::Synthetic(p) => {
                p.validate()?;
                if let Some(&k) = self.k_list.iter().find(|&&k| k > p.days) {
                    return bad(format!("K = {k} exceeds the {} generated days", p.days));
                }
            }
            DataSource::Files { dataset_dir, instance } => {
                for f in [dataset_dir, instance] {
                    if !f.exists() {
                        return bad(format!("referenced path {} does not exist", f.display()));
                    }
                }
            }
        }
        for name in self.overrides.keys() {
            if !STAGES.contains(&name.as_str()) && name != "pipeline" {
                return bad(format!("override for unknown stage {name}"));
            }
        }
        Ok(())
    }

    /// This config with the overrides of `stage` merged in.
    pub fn for_stage(&self, stage: &str) -> Result<Self, CliError> {
        let Some(patch) = self.overrides.get(stage) else {
            return Ok(self.clone());
        };
        let mut base = serde_json::to_value(self).map_err(|e| CliError::Config(e.to_string()))?;
        merge(&mut base, patch);
        let cfg: Self = serde_json::from_value(base).map_err(|e| CliError::Config(format!("{stage} override: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).unwrap_or_default();
        Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn with_games(mut self, games: GamesConfig) -> Self {
        self.games = games;
        self
    }
}
