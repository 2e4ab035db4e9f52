//! On-disk formats: feature CSV, manifest, model, curves and reports.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use qfp_core::fingerprint::{feature_names, NUM_GLOBAL_FEATURES};
use qfp_core::serialize::emit_json;
use qfp_core::EncodingClass;
use qfp_learn::TrainReport;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::pipeline::{format_feature, Dataset, ScalingRow};
use crate::HarnessError;

pub const DATASET: &str = "dataset.csv";
pub const CIRCUITS: &str = "circuits";
pub const MANIFEST: &str = "manifest.json";
pub const MODEL: &str = "model.json";
pub const SPLIT: &str = "split.json";
pub const CURVES: &str = "curves.csv";
pub const TRAIN_REPORT: &str = "train_report.json";
pub const EVAL_JSON: &str = "eval_report.json";
pub const EVAL_TXT: &str = "eval_report.txt";
pub const SCALING: &str = "scaling.csv";
pub const DEFENSE_JSON: &str = "defense_report.json";
pub const DEFENSE_TXT: &str = "defense_report.txt";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub n_qubits: usize,
    pub registry_version: u32,
    pub n_features: usize,
    pub rows: usize,
    pub class_counts: BTreeMap<String, usize>,
}

impl Manifest {
    pub fn for_dataset(cfg: &ExperimentConfig, ds: &Dataset) -> Manifest {
        Manifest {
            config_hash: cfg.dataset_hash(),
            n_qubits: ds.n_qubits,
            registry_version: cfg.registry_version,
            n_features: ds.feature_names.len(),
            rows: ds.len(),
            class_counts: EncodingClass::ALL
                .iter()
                .zip(ds.class_counts())
                .map(|(c, k)| (c.name().to_string(), k))
                .collect(),
        }
    }

    /// Errors unless the manifest was produced from a config hashing like `cfg`.
    pub fn check(&self, cfg: &ExperimentConfig) -> Result<(), HarnessError> {
        let expected = cfg.dataset_hash();
        if self.config_hash != expected {
            return Err(HarnessError::HashMismatch {
                expected,
                found: self.config_hash.clone(),
            });
        }
        Ok(())
    }
}

fn write(path: &Path, text: &str) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    write(path, &text)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, HarnessError> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| HarnessError::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<(), HarnessError> {
    write(path, text)
}

fn csv_err(path: &Path, e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

/// `label,<feature names>` then one row per circuit, label as class name.
pub fn write_dataset_csv(path: &Path, ds: &Dataset) -> Result<(), HarnessError> {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    let mut header = vec!["label".to_string()];
    header.extend(ds.feature_names.iter().cloned());
    w.write_record(&header).map_err(|e| csv_err(path, e))?;
    for (label, row) in ds.labels.iter().zip(&ds.rows) {
        let mut rec = vec![EncodingClass::ALL[*label].name().to_string()];
        rec.extend(row.iter().map(|&x| format_feature(x)));
        w.write_record(&rec).map_err(|e| csv_err(path, e))?;
    }
    let bytes = w.into_inner().map_err(|e| csv_err(path, e))?;
    write(path, &String::from_utf8(bytes).expect("utf8"))
}

pub fn read_dataset_csv(path: &Path) -> Result<Dataset, HarnessError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(_) => HarnessError::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "cannot open dataset"),
        ),
        _ => csv_err(path, e),
    })?;
    let header = r.headers().map_err(|e| csv_err(path, e))?.clone();
    if header.get(0) != Some("label") || header.len() < 1 + NUM_GLOBAL_FEATURES + 2 {
        return Err(csv_err(
            path,
            "header must start with `label` followed by feature names",
        ));
    }
    let n_feat = header.len() - 1;
    let n_qubits = (n_feat - NUM_GLOBAL_FEATURES) / 2;
    let names: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    if names != feature_names(n_qubits) {
        return Err(csv_err(path, "feature columns do not match the registry"));
    }
    let mut ds = Dataset {
        n_qubits,
        feature_names: names,
        labels: Vec::new(),
        rows: Vec::new(),
        circuits: None,
    };
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let label: EncodingClass = rec[0]
            .parse()
            .map_err(|e| csv_err(path, format!("row {}: {e}", i + 1)))?;
        let row: Vec<f64> = rec
            .iter()
            .skip(1)
            .map(|s| s.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| csv_err(path, format!("row {}: {e}", i + 1)))?;
        ds.labels.push(label.index());
        ds.rows.push(row);
    }
    Ok(ds)
}

/// One JSON file per circuit, named `<class>_<index>.json`.
pub fn write_circuits(dir: &Path, ds: &Dataset) -> Result<(), HarnessError> {
    let Some(circuits) = &ds.circuits else {
        return Ok(());
    };
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let mut index = vec![0usize; EncodingClass::ALL.len()];
    for (c, &label) in circuits.iter().zip(&ds.labels) {
        let name = format!(
            "{}_{:05}.json",
            EncodingClass::ALL[label].name(),
            index[label]
        );
        index[label] += 1;
        write(&dir.join(name), &emit_json(c))?;
    }
    Ok(())
}

pub fn write_curves(path: &Path, report: &TrainReport) -> Result<(), HarnessError> {
    let mut out = String::from("epoch,train_loss,train_accuracy,val_loss,val_accuracy\n");
    for e in &report.epochs {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            e.epoch, e.train_loss, e.train_accuracy, e.val_loss, e.val_accuracy
        ));
    }
    write(path, &out)
}

pub fn write_scaling(path: &Path, rows: &[ScalingRow]) -> Result<(), HarnessError> {
    let mut out = String::from("n_qubits,n_features,test_accuracy,defended_accuracy\n");
    for r in rows {
        let d = r
            .defended_accuracy
            .map(|a| a.to_string())
            .unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.n_qubits, r.n_features, r.test_accuracy, d
        ));
    }
    write(path, &out)
}

pub fn out_path(cfg: &ExperimentConfig, name: &str) -> PathBuf {
    cfg.output_dir.join(name)
}
