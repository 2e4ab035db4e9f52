//! Flat `key = value` experiment configuration.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use qfp_core::encoding::AmplitudeKind;
use qfp_core::fingerprint::REGISTRY_VERSION;
use qfp_core::transpile::CouplingPreset;
use qfp_learn::TrainConfig;
use sha2::{Digest, Sha256};

use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DefenseMode {
    Off,
    On,
    Both,
}

impl FromStr for DefenseMode {
    type Err = HarnessError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "off" => Ok(DefenseMode::Off),
            "on" => Ok(DefenseMode::On),
            "both" => Ok(DefenseMode::Both),
            _ => Err(HarnessError::Config(format!(
                "defense must be off|on|both, got `{s}`"
            ))),
        }
    }
}

impl DefenseMode {
    fn as_str(self) -> &'static str {
        match self {
            DefenseMode::Off => "off",
            DefenseMode::On => "on",
            DefenseMode::Both => "both",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n_qubits: usize,
    pub samples_per_class: usize,
    pub pqc_layers: RangeInclusive<usize>,
    pub coupling: CouplingPreset,
    pub base_seed: u64,
    /// Whether generated datasets contain defended circuits.
    pub defense: DefenseMode,
    pub output_dir: PathBuf,
    pub registry_version: u32,
    /// 0 means one worker per core.
    pub workers: usize,
    /// Put a barrier between encoder and PQC in the undefended circuit.
    pub baseline_barrier: bool,
    pub amplitude_kind: AmplitudeKind,
    pub write_circuits: bool,
    pub split: (f64, f64, f64),
    pub train: TrainConfig,
    pub defense_samples_per_class: usize,
    pub defense_pqc_layers: RangeInclusive<usize>,
    pub retrain_adversary: bool,
    pub scaling_qubits: Vec<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n_qubits: 3,
            samples_per_class: 3600,
            pqc_layers: 1..=5,
            coupling: CouplingPreset::Linear,
            base_seed: 0,
            defense: DefenseMode::Off,
            output_dir: PathBuf::from("qfp-out"),
            registry_version: REGISTRY_VERSION,
            workers: 0,
            baseline_barrier: false,
            amplitude_kind: AmplitudeKind::Complex,
            write_circuits: true,
            split: (0.6, 0.2, 0.2),
            train: TrainConfig::default(),
            defense_samples_per_class: 800,
            defense_pqc_layers: 5..=5,
            retrain_adversary: false,
            scaling_qubits: vec![3, 4, 6, 8],
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, HarnessError> {
    value
        .parse()
        .map_err(|_| HarnessError::Config(format!("bad value `{value}` for `{key}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, HarnessError> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(HarnessError::Config(format!(
            "bad boolean `{value}` for `{key}`"
        ))),
    }
}

/// `a..b` (inclusive) or a single integer.
fn parse_range(key: &str, value: &str) -> Result<RangeInclusive<usize>, HarnessError> {
    match value.split_once("..") {
        Some((a, b)) => Ok(parse(key, a.trim())?..=parse(key, b.trim().trim_start_matches('='))?),
        None => {
            let v = parse(key, value)?;
            Ok(v..=v)
        }
    }
}

fn parse_list(key: &str, value: &str) -> Result<Vec<usize>, HarnessError> {
    value
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse(key, s.trim()))
        .collect()
}

impl ExperimentConfig {
    /// Reads a config file, then applies `QFP_SEED` if set.
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let mut cfg = ExperimentConfig::from_text(&text)?;
        cfg.apply_env()?;
        Ok(cfg)
    }

    pub fn from_text(text: &str) -> Result<Self, HarnessError> {
        let mut cfg = ExperimentConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                HarnessError::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            cfg.set(k.trim(), v.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply_env(&mut self) -> Result<(), HarnessError> {
        if let Ok(s) = std::env::var("QFP_SEED") {
            self.base_seed = parse("QFP_SEED", s.trim())?;
        }
        Ok(())
    }

    /// Sets one key. Unknown keys are errors.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), HarnessError> {
        match key {
            "n_qubits" => self.n_qubits = parse(key, value)?,
            "samples_per_class" => self.samples_per_class = parse(key, value)?,
            "pqc_layers" => self.pqc_layers = parse_range(key, value)?,
            "coupling" => self.coupling = parse(key, value)?,
            "base_seed" => self.base_seed = parse(key, value)?,
            "defense" => self.defense = value.parse()?,
            "output_dir" => self.output_dir = PathBuf::from(value),
            "registry_version" => self.registry_version = parse(key, value)?,
            "workers" => self.workers = parse(key, value)?,
            "baseline_barrier" => self.baseline_barrier = parse_bool(key, value)?,
            "amplitude_kind" => {
                self.amplitude_kind = match value {
                    "complex" => AmplitudeKind::Complex,
                    "real" => AmplitudeKind::Real,
                    _ => {
                        return Err(HarnessError::Config(format!(
                            "amplitude_kind must be complex|real, got `{value}`"
                        )))
                    }
                }
            }
            "write_circuits" => self.write_circuits = parse_bool(key, value)?,
            "split" => {
                let parts: Vec<f64> = value
                    .split(',')
                    .map(|s| parse(key, s.trim()))
                    .collect::<Result<_, _>>()?;
                if parts.len() != 3 {
                    return Err(HarnessError::Config("split needs three fractions".into()));
                }
                self.split = (parts[0], parts[1], parts[2]);
            }
            "hidden" => self.train.hidden = parse_list(key, value)?,
            "epochs" => self.train.epochs = parse(key, value)?,
            "batch_size" => self.train.batch_size = parse(key, value)?,
            "lr" => self.train.lr = parse(key, value)?,
            "beta1" => self.train.beta1 = parse(key, value)?,
            "beta2" => self.train.beta2 = parse(key, value)?,
            "eps" => self.train.eps = parse(key, value)?,
            "defense_samples_per_class" => self.defense_samples_per_class = parse(key, value)?,
            "defense_pqc_layers" => self.defense_pqc_layers = parse_range(key, value)?,
            "retrain_adversary" => self.retrain_adversary = parse_bool(key, value)?,
            "scaling_qubits" => self.scaling_qubits = parse_list(key, value)?,
            _ => return Err(HarnessError::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::Config(m.to_string()));
        if self.n_qubits < 2 {
            return bad("n_qubits must be at least 2");
        }
        if self.samples_per_class < 25 {
            return bad("samples_per_class must be at least 25");
        }
        if *self.pqc_layers.start() == 0 || self.pqc_layers.is_empty() {
            return bad("pqc_layers must be a nonempty range of positive counts");
        }
        if *self.defense_pqc_layers.start() == 0 || self.defense_pqc_layers.is_empty() {
            return bad("defense_pqc_layers must be a nonempty range of positive counts");
        }
        if self.registry_version != REGISTRY_VERSION {
            return Err(HarnessError::Config(format!(
                "registry_version {} is not supported (this build has {REGISTRY_VERSION})",
                self.registry_version
            )));
        }
        if self.scaling_qubits.iter().any(|&n| n < 2) {
            return bad("scaling_qubits entries must be at least 2");
        }
        self.train
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        Ok(())
    }

    /// Keys that determine the generated dataset, in canonical text form.
    fn dataset_keys(&self) -> BTreeMap<&'static str, String> {
        let mut m = BTreeMap::new();
        m.insert("n_qubits", self.n_qubits.to_string());
        m.insert("samples_per_class", self.samples_per_class.to_string());
        m.insert(
            "pqc_layers",
            format!("{}..{}", self.pqc_layers.start(), self.pqc_layers.end()),
        );
        m.insert("coupling", self.coupling.to_string());
        m.insert("base_seed", self.base_seed.to_string());
        m.insert("defense", self.defense.as_str().to_string());
        m.insert("registry_version", self.registry_version.to_string());
        m.insert("baseline_barrier", self.baseline_barrier.to_string());
        m.insert(
            "amplitude_kind",
            match self.amplitude_kind {
                AmplitudeKind::Complex => "complex",
                AmplitudeKind::Real => "real",
            }
            .to_string(),
        );
        m
    }

    /// SHA-256 over the dataset-determining keys. Worker count and paths are
    /// excluded so they cannot change the hash.
    pub fn dataset_hash(&self) -> String {
        let mut text = String::new();
        for (k, v) in self.dataset_keys() {
            let _ = writeln!(text, "{k}={v}");
        }
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    pub fn coupling_map(&self) -> qfp_core::transpile::CouplingMap {
        qfp_core::transpile::CouplingMap::from_preset(self.coupling, self.n_qubits)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_keys_and_comments() {
        let cfg = ExperimentConfig::from_text(
            "# demo\nn_qubits = 4\nsamples_per_class=30 # small\npqc_layers = 2..3\ncoupling = all_to_all\nhidden = 8,4\n",
        )
        .unwrap();
        assert_eq!(cfg.n_qubits, 4);
        assert_eq!(cfg.samples_per_class, 30);
        assert_eq!(cfg.pqc_layers, 2..=3);
        assert_eq!(cfg.coupling, CouplingPreset::AllToAll);
        assert_eq!(cfg.train.hidden, vec![8, 4]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ExperimentConfig::from_text("samples_per_class = 24").is_err());
        assert!(ExperimentConfig::from_text("nonsense = 1").is_err());
        assert!(ExperimentConfig::from_text("n_qubits 3").is_err());
        assert!(ExperimentConfig::from_text("defense = maybe").is_err());
    }

    #[test]
    fn hash_ignores_workers_and_paths() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        b.workers = 7;
        b.output_dir = "elsewhere".into();
        assert_eq!(a.dataset_hash(), b.dataset_hash());
        b.base_seed = 1;
        assert_ne!(a.dataset_hash(), b.dataset_hash());
    }
}
