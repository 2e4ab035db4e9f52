//! In-memory experiment stages. The CLI wraps these with file I/O.

use qfp_core::defense::{defend, gen_key};
use qfp_core::encoding::{sample_encoding, AmplitudeKind};
use qfp_core::fingerprint::{extract, feature_names};
use qfp_core::pqc::{augment_with, build_pqc, PqcConfig};
use qfp_core::seed::derive_seed;
use qfp_core::transpile::{transpile, CouplingMap};
use qfp_core::{Circuit, EncodingClass};
use qfp_learn::train::DataView;
use qfp_learn::{stratified_split, train, EvalReport, MlpModel, Scaler, SplitIndices, TrainReport};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{DefenseMode, ExperimentConfig};
use crate::HarnessError;

/// Seed-derivation domains; each stream of samples gets its own.
pub mod domain {
    pub const DATASET: u64 = 0;
    pub const DEFENSE_TEST: u64 = 1;
    pub const DEPTH: u64 = 2;
    pub const DEFENSE_TRAIN: u64 = 3;
    pub const SPLIT: u64 = 100;
    pub const TRAIN: u64 = 101;
    pub const RETRAIN: u64 = 102;
}

/// Feature values pass through this text form before use, so in-memory runs
/// and CSV round trips see identical numbers.
pub fn format_feature(x: f64) -> String {
    format!("{x:.8e}")
}

pub fn quantize(x: f64) -> f64 {
    format_feature(x).parse().expect("formatted float parses")
}

pub fn class_names() -> Vec<String> {
    EncodingClass::ALL
        .iter()
        .map(|c| c.short_name().to_string())
        .collect()
}

/// One encoder + PQC pair and the obfuscation key reserved for it.
#[derive(Debug, Clone)]
pub struct Instance {
    pub class: EncodingClass,
    pub encoding: Circuit,
    pub pqc: Circuit,
    pub key_seed: u64,
}

pub fn sample_seed(base: u64, domain: u64, class: EncodingClass, index: usize) -> u64 {
    derive_seed(base, &[domain, class.index() as u64, index as u64])
}

pub fn build_instance(
    class: EncodingClass,
    n: usize,
    seed: u64,
    layers: std::ops::RangeInclusive<usize>,
    amplitude_kind: AmplitudeKind,
) -> Result<Instance, HarnessError> {
    let encoding = sample_encoding(class, n, derive_seed(seed, &[0]), amplitude_kind)?;
    let pqc_cfg = PqcConfig::sample(derive_seed(seed, &[1]), layers);
    let pqc = build_pqc(&pqc_cfg, n)?;
    Ok(Instance {
        class,
        encoding,
        pqc,
        key_seed: derive_seed(seed, &[2]),
    })
}

impl Instance {
    pub fn undefended(&self, baseline_barrier: bool) -> Result<Circuit, HarnessError> {
        Ok(augment_with(&self.encoding, &self.pqc, baseline_barrier)?)
    }

    pub fn defended(&self) -> Result<Circuit, HarnessError> {
        let key = gen_key(self.encoding.n_qubits(), self.key_seed);
        Ok(defend(&self.encoding, &self.pqc, &key)?)
    }
}

/// What the adversary sees: the transpiled circuit and its fingerprint.
#[derive(Debug, Clone)]
pub struct Observed {
    pub circuit: Circuit,
    pub features: Vec<f64>,
}

pub fn observe(c: &Circuit, map: &CouplingMap) -> Result<Observed, HarnessError> {
    let t = transpile(c, map)?;
    let features = extract(&t.circuit)?
        .values
        .into_iter()
        .map(quantize)
        .collect();
    Ok(Observed {
        circuit: t.circuit,
        features,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub n_qubits: usize,
    pub feature_names: Vec<String>,
    pub labels: Vec<usize>,
    pub rows: Vec<Vec<f64>>,
    /// Transpiled circuits, parallel to `rows`, when requested.
    pub circuits: Option<Vec<Circuit>>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn view(&self, idx: &[usize]) -> DataView<'_> {
        DataView {
            rows: idx.iter().map(|&i| self.rows[i].as_slice()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; EncodingClass::ALL.len()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }
}

/// Runs `f` on a pool of `workers` threads (0 = rayon default).
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    if workers == 0 {
        return f();
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("thread pool")
        .install(f)
}

/// Enumerates (class, index) in canonical order: class-major.
fn jobs(per_class: usize) -> Vec<(EncodingClass, usize)> {
    EncodingClass::ALL
        .iter()
        .flat_map(|&c| (0..per_class).map(move |i| (c, i)))
        .collect()
}

/// Labelled fingerprints for `per_class` instances of every class.
pub fn generate(
    cfg: &ExperimentConfig,
    domain: u64,
    per_class: usize,
    layers: std::ops::RangeInclusive<usize>,
    defended: bool,
    keep_circuits: bool,
) -> Result<Dataset, HarnessError> {
    let map = cfg.coupling_map();
    let n = cfg.n_qubits;
    let results: Vec<Result<(usize, Observed), HarnessError>> = with_workers(cfg.workers, || {
        jobs(per_class)
            .into_par_iter()
            .map(|(class, i)| {
                let seed = sample_seed(cfg.base_seed, domain, class, i);
                let inst = build_instance(class, n, seed, layers.clone(), cfg.amplitude_kind)?;
                let c = if defended {
                    inst.defended()?
                } else {
                    inst.undefended(cfg.baseline_barrier)?
                };
                let mut obs = observe(&c, &map)?;
                obs.circuit.label = Some(class);
                obs.circuit.meta = c.meta.clone();
                Ok((class.index(), obs))
            })
            .collect()
    });
    let mut ds = Dataset {
        n_qubits: n,
        feature_names: feature_names(n),
        labels: Vec::with_capacity(results.len()),
        rows: Vec::with_capacity(results.len()),
        circuits: keep_circuits.then(Vec::new),
    };
    for r in results {
        let (label, obs) = r?;
        ds.labels.push(label);
        ds.rows.push(obs.features);
        if let Some(cs) = ds.circuits.as_mut() {
            cs.push(obs.circuit);
        }
    }
    Ok(ds)
}

/// The training dataset described by `cfg`.
pub fn generate_dataset(cfg: &ExperimentConfig) -> Result<Dataset, HarnessError> {
    generate(
        cfg,
        domain::DATASET,
        cfg.samples_per_class,
        cfg.pqc_layers.clone(),
        cfg.defense == DefenseMode::On,
        cfg.write_circuits,
    )
}

/// A trained classifier with everything needed to apply it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub dims: Vec<usize>,
    pub registry_version: u32,
    pub n_qubits: usize,
    pub class_names: Vec<String>,
    pub dataset_hash: String,
    pub scaler: Scaler,
    pub model: MlpModel,
}

impl ModelFile {
    pub fn predict_all(&self, rows: &[&[f64]]) -> Result<Vec<usize>, HarnessError> {
        rows.iter()
            .map(|r| Ok(self.model.predict(&self.scaler.transform_row(r))?))
            .collect()
    }

    pub fn evaluate(&self, rows: &[&[f64]], labels: &[usize]) -> Result<EvalReport, HarnessError> {
        let pred = self.predict_all(rows)?;
        Ok(EvalReport::from_predictions(
            labels,
            &pred,
            &self.class_names,
        ))
    }
}

#[derive(Debug, Clone)]
pub struct Trained {
    pub model: ModelFile,
    pub report: TrainReport,
    pub split: SplitIndices,
}

/// Stratified split, scaler fit on the training part, then training.
pub fn train_on(
    ds: &Dataset,
    cfg: &ExperimentConfig,
    train_domain: u64,
) -> Result<Trained, HarnessError> {
    let k = EncodingClass::ALL.len();
    let split = stratified_split(
        &ds.labels,
        k,
        cfg.split,
        derive_seed(cfg.base_seed, &[domain::SPLIT]),
    )?;
    let train_rows: Vec<&[f64]> = split.train.iter().map(|&i| ds.rows[i].as_slice()).collect();
    let scaler = Scaler::fit(&train_rows)?;
    let scale = |idx: &[usize]| -> Vec<Vec<f64>> {
        idx.iter()
            .map(|&i| scaler.transform_row(&ds.rows[i]))
            .collect()
    };
    let train_x = scale(&split.train);
    let val_x = scale(&split.val);
    fn view<'a>(x: &'a [Vec<f64>], idx: &[usize], labels: &[usize]) -> DataView<'a> {
        DataView {
            rows: x.iter().map(Vec::as_slice).collect(),
            labels: idx.iter().map(|&i| labels[i]).collect(),
        }
    }
    let mut tcfg = cfg.train.clone();
    tcfg.seed = derive_seed(cfg.base_seed, &[train_domain]);
    let (model, report) = train(
        &view(&train_x, &split.train, &ds.labels),
        &view(&val_x, &split.val, &ds.labels),
        k,
        &tcfg,
    )?;
    Ok(Trained {
        model: ModelFile {
            dims: model.dims(),
            registry_version: cfg.registry_version,
            n_qubits: ds.n_qubits,
            class_names: class_names(),
            dataset_hash: cfg.dataset_hash(),
            scaler,
            model,
        },
        report,
        split,
    })
}

pub fn evaluate_test(t: &Trained, ds: &Dataset) -> Result<EvalReport, HarnessError> {
    let v = ds.view(&t.split.test);
    t.model.evaluate(&v.rows, &v.labels)
}

/// Mean transpiled depth per class, undefended vs defended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthRow {
    pub class: String,
    pub instances: usize,
    pub original_mean: f64,
    pub obfuscated_mean: f64,
    pub delta: f64,
    pub delta_percent: f64,
    /// Mean of per-instance relative overheads, in percent.
    pub mean_relative_percent: f64,
    pub non_decreasing: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthTable {
    pub pqc_layers: String,
    pub rows: Vec<DepthRow>,
    pub overall: DepthRow,
}

impl DepthTable {
    pub fn table(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<10}{:>10}{:>12}{:>12}{:>10}{:>10}",
            "encoding", "instances", "original", "obfuscated", "delta", "delta %"
        );
        for r in self.rows.iter().chain(std::iter::once(&self.overall)) {
            let _ = writeln!(
                out,
                "{:<10}{:>10}{:>12.1}{:>12.1}{:>10.1}{:>9.1}%",
                r.class, r.instances, r.original_mean, r.obfuscated_mean, r.delta, r.delta_percent
            );
        }
        out
    }
}

fn depth_row(class: String, pairs: &[(usize, usize)]) -> DepthRow {
    let n = pairs.len() as f64;
    let orig = pairs.iter().map(|p| p.0 as f64).sum::<f64>() / n;
    let obf = pairs.iter().map(|p| p.1 as f64).sum::<f64>() / n;
    let rel = pairs
        .iter()
        .map(|&(a, b)| (b as f64 - a as f64) / a.max(1) as f64)
        .sum::<f64>()
        / n;
    DepthRow {
        class,
        instances: pairs.len(),
        original_mean: orig,
        obfuscated_mean: obf,
        delta: obf - orig,
        delta_percent: 100.0 * (obf - orig) / orig,
        mean_relative_percent: 100.0 * rel,
        non_decreasing: pairs.iter().filter(|&&(a, b)| b >= a).count(),
    }
}

/// Transpiled depth of each instance with and without the defense.
pub fn depth_overhead(cfg: &ExperimentConfig) -> Result<DepthTable, HarnessError> {
    let map = cfg.coupling_map();
    let n = cfg.n_qubits;
    type DepthPair = (usize, (usize, usize));
    let results: Vec<Result<DepthPair, HarnessError>> = with_workers(cfg.workers, || {
        jobs(cfg.defense_samples_per_class)
            .into_par_iter()
            .map(|(class, i)| {
                let seed = sample_seed(cfg.base_seed, domain::DEPTH, class, i);
                let inst = build_instance(
                    class,
                    n,
                    seed,
                    cfg.defense_pqc_layers.clone(),
                    cfg.amplitude_kind,
                )?;
                let plain = transpile(&inst.undefended(cfg.baseline_barrier)?, &map)?
                    .circuit
                    .depth();
                let cloaked = transpile(&inst.defended()?, &map)?.circuit.depth();
                Ok((class.index(), (plain, cloaked)))
            })
            .collect()
    });
    let mut per_class: Vec<Vec<(usize, usize)>> = vec![Vec::new(); EncodingClass::ALL.len()];
    for r in results {
        let (c, p) = r?;
        per_class[c].push(p);
    }
    let names = class_names();
    let rows = per_class
        .iter()
        .zip(&names)
        .map(|(p, name)| depth_row(name.clone(), p))
        .collect();
    let all: Vec<(usize, usize)> = per_class.concat();
    Ok(DepthTable {
        pqc_layers: format!(
            "{}..{}",
            cfg.defense_pqc_layers.start(),
            cfg.defense_pqc_layers.end()
        ),
        rows,
        overall: depth_row("overall".into(), &all),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefenseReport {
    pub instances_per_class: usize,
    pub undefended: EvalReport,
    pub defended: EvalReport,
    /// Present when an adversary was also retrained on defended circuits.
    pub retrained: Option<EvalReport>,
    pub depth: DepthTable,
}

impl DefenseReport {
    pub fn table(&self) -> String {
        let mut out = format!(
            "undefended accuracy {:.4}\ndefended accuracy   {:.4}\n",
            self.undefended.accuracy, self.defended.accuracy
        );
        if let Some(r) = &self.retrained {
            out.push_str(&format!("retrained adversary {:.4}\n", r.accuracy));
        }
        out.push_str("\ndefended, per class\n");
        out.push_str(&self.defended.table());
        out.push_str(&format!("\ndepth, pqc layers {}\n", self.depth.pqc_layers));
        out.push_str(&self.depth.table());
        out
    }
}

/// Scores a pre-trained model on fresh undefended and defended test sets
/// drawn from the same instances, and measures depth overhead.
pub fn defense_eval(
    cfg: &ExperimentConfig,
    model: &ModelFile,
) -> Result<DefenseReport, HarnessError> {
    let per = cfg.defense_samples_per_class;
    let plain = generate(
        cfg,
        domain::DEFENSE_TEST,
        per,
        cfg.pqc_layers.clone(),
        false,
        false,
    )?;
    let cloaked = generate(
        cfg,
        domain::DEFENSE_TEST,
        per,
        cfg.pqc_layers.clone(),
        true,
        false,
    )?;
    let all: Vec<usize> = (0..plain.len()).collect();
    let score = |ds: &Dataset| {
        let v = ds.view(&all);
        model.evaluate(&v.rows, &v.labels)
    };
    let retrained = if cfg.retrain_adversary {
        let mut c = cfg.clone();
        c.defense = DefenseMode::On;
        let train_set = generate(
            &c,
            domain::DEFENSE_TRAIN,
            cfg.samples_per_class,
            cfg.pqc_layers.clone(),
            true,
            false,
        )?;
        let t = train_on(&train_set, &c, domain::RETRAIN)?;
        Some(score_with(&t.model, &cloaked)?)
    } else {
        None
    };
    Ok(DefenseReport {
        instances_per_class: per,
        undefended: score(&plain)?,
        defended: score(&cloaked)?,
        retrained,
        depth: depth_overhead(cfg)?,
    })
}

fn score_with(model: &ModelFile, ds: &Dataset) -> Result<EvalReport, HarnessError> {
    let rows: Vec<&[f64]> = ds.rows.iter().map(Vec::as_slice).collect();
    model.evaluate(&rows, &ds.labels)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub n_qubits: usize,
    pub n_features: usize,
    pub test_accuracy: f64,
    pub defended_accuracy: Option<f64>,
}

/// Full gen/train/eval at each qubit count in `cfg.scaling_qubits`.
pub fn scaling(cfg: &ExperimentConfig) -> Result<Vec<ScalingRow>, HarnessError> {
    let mut rows = Vec::new();
    for &n in &cfg.scaling_qubits {
        let mut c = cfg.clone();
        c.n_qubits = n;
        c.write_circuits = false;
        c.defense = DefenseMode::Off;
        let ds = generate_dataset(&c)?;
        let t = train_on(&ds, &c, domain::TRAIN)?;
        let eval = evaluate_test(&t, &ds)?;
        let defended_accuracy = if cfg.defense != DefenseMode::Off {
            let cloaked = generate(
                &c,
                domain::DEFENSE_TEST,
                c.defense_samples_per_class,
                c.pqc_layers.clone(),
                true,
                false,
            )?;
            Some(score_with(&t.model, &cloaked)?.accuracy)
        } else {
            None
        };
        rows.push(ScalingRow {
            n_qubits: n,
            n_features: ds.feature_names.len(),
            test_accuracy: eval.accuracy,
            defended_accuracy,
        });
    }
    Ok(rows)
}
