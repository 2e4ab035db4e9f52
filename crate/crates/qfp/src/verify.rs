//! Property suites that must pass before any experiment result is trusted.

use std::f64::consts::PI;

use qfp_core::defense::{gen_key, inv_layer, obf_layer, ObfuscationKey};
use qfp_core::encoding::{amplitude_encode, haar_random_state};
use qfp_core::seed::{derive_seed, rng_from_seed};
use qfp_core::statevector::{fidelity, min_fidelity, run, EquivalenceOptions, StateVector};
use qfp_core::transpile::{transpile, CouplingMap};
use qfp_core::{Circuit, GateKind, Instruction};
use qfp_learn::mlp::MlpModel;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::pipeline::{domain, generate, train_on};
use crate::HarnessError;

pub const FIDELITY_TOL: f64 = 1e-9;
pub const GRAD_TOL: f64 = 1e-5;
pub const CHANCE_BAND: (f64, f64) = (0.14, 0.26);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub name: String,
    pub trials: usize,
    pub passed: bool,
    /// Worst observed value of the suite's statistic.
    pub worst: f64,
    pub failing_seed: Option<u64>,
}

impl SuiteResult {
    pub fn line(&self) -> String {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        let seed = self
            .failing_seed
            .map(|s| format!(", counterexample seed {s}"))
            .unwrap_or_default();
        format!(
            "{verdict} {:<26} trials={:<4} worst={:.3e}{seed}",
            self.name, self.trials, self.worst
        )
    }
}

/// Runs `trials` seeded checks; `check` returns the statistic and whether it passed.
fn suite(
    name: &str,
    base: u64,
    id: u64,
    trials: usize,
    higher_is_better: bool,
    mut check: impl FnMut(u64) -> (f64, bool),
) -> SuiteResult {
    let mut worst = if higher_is_better { f64::INFINITY } else { 0.0 };
    let mut failing_seed = None;
    for t in 0..trials {
        let seed = derive_seed(base, &[id, t as u64]);
        let (v, ok) = check(seed);
        worst = if higher_is_better {
            worst.min(v)
        } else {
            worst.max(v)
        };
        if !ok && failing_seed.is_none() {
            failing_seed = Some(seed);
        }
    }
    SuiteResult {
        name: name.into(),
        trials,
        passed: failing_seed.is_none(),
        worst,
        failing_seed,
    }
}

/// Random circuit over every non-barrier gate kind, with occasional barriers.
pub fn random_circuit<R: Rng + ?Sized>(n: usize, len: usize, rng: &mut R) -> Circuit {
    let mut c = Circuit::new(n);
    let kinds: Vec<GateKind> = GateKind::ALL
        .iter()
        .copied()
        .filter(|k| k.arity().is_some_and(|a| a <= n))
        .collect();
    for _ in 0..len {
        if rng.gen_bool(0.05) {
            c.barrier_all();
            continue;
        }
        let kind = *kinds.choose(rng).expect("some gate fits");
        let arity = kind.arity().expect("not a barrier");
        let mut qs: Vec<usize> = (0..n).collect();
        qs.shuffle(rng);
        qs.truncate(arity);
        let params = (0..kind.num_params())
            .map(|_| rng.gen_range(-PI..PI))
            .collect();
        c.push(Instruction::new(kind, qs, params))
            .expect("valid by construction");
    }
    c
}

/// (a) transpile preserves semantics modulo the final layout.
pub fn suite_transpile(base: u64, trials: usize) -> SuiteResult {
    suite("transpile-equivalence", base, 0, trials, true, |seed| {
        let mut rng = rng_from_seed(seed);
        let n = rng.gen_range(1..=6);
        let c = random_circuit(n, rng.gen_range(1..40), &mut rng);
        let map = if rng.gen_bool(0.5) {
            CouplingMap::linear(n)
        } else {
            CouplingMap::all_to_all(n)
        };
        let Ok(t) = transpile(&c, &map) else {
            return (0.0, false);
        };
        let opts = EquivalenceOptions {
            trials: 2,
            seed,
            ..EquivalenceOptions::default()
        }
        .with_permutation(t.final_layout.clone());
        let f = min_fidelity(&c, &t.circuit, &opts).unwrap_or(0.0);
        (f, f >= 1.0 - FIDELITY_TOL)
    })
}

/// (b) amplitude state preparation reproduces Haar-random targets.
pub fn suite_state_prep(base: u64, trials: usize) -> SuiteResult {
    suite("amplitude-state-prep", base, 1, trials, true, |seed| {
        let n = 2 + (seed % 5) as usize;
        let v = haar_random_state(n, seed);
        let f = amplitude_encode(&v)
            .ok()
            .and_then(|c| run(&c, None).ok())
            .and_then(|s| fidelity(&s, &v.to_state()).ok())
            .unwrap_or(0.0);
        (f, f >= 1.0 - FIDELITY_TOL)
    })
}

/// (c) cloak followed by uncloak is the identity. `inverse` is normally
/// [`inv_layer`]; tests substitute broken versions.
pub fn suite_obfuscation_with(
    base: u64,
    trials: usize,
    inverse: impl Fn(&ObfuscationKey) -> Circuit,
) -> SuiteResult {
    suite("obfuscation-invertibility", base, 2, trials, true, |seed| {
        let mut rng = rng_from_seed(seed);
        let n = rng.gen_range(1..=8);
        let key = gen_key(n, rng.gen());
        let mut c = obf_layer(&key);
        c.extend_from(&inverse(&key)).expect("same width");
        let s = StateVector::haar_random(n, &mut rng);
        let f = run(&c, Some(&s))
            .ok()
            .and_then(|out| fidelity(&out, &s).ok())
            .unwrap_or(0.0);
        (f, f >= 1.0 - FIDELITY_TOL)
    })
}

pub fn suite_obfuscation(base: u64, trials: usize) -> SuiteResult {
    suite_obfuscation_with(base, trials, inv_layer)
}

/// Relative error between analytic and central-difference gradients. The
/// denominator is floored at 1e-3 so near-zero gradients compare absolutely.
pub fn gradient_rel_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-3)
}

/// (d) finite-difference gradient check on a [29, 25, 10, 5] network.
pub fn suite_gradient(base: u64, probes: usize) -> SuiteResult {
    let mut rng = rng_from_seed(derive_seed(base, &[3]));
    let model = MlpModel::new(&[29, 25, 10, 5], &mut rng).expect("valid dims");
    let xs: Vec<Vec<f64>> = (0..10)
        .map(|_| (0..29).map(|_| rng.gen_range(-2.0..2.0)).collect())
        .collect();
    let ys: Vec<usize> = (0..10).map(|_| rng.gen_range(0..5)).collect();
    let refs: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
    let (_, grads) = model.backward(&refs, &ys).expect("consistent batch");
    let analytic: Vec<f64> = grads.values().collect();
    let h = 1e-5;
    suite("mlp-gradient-check", base, 3, probes, false, |seed| {
        let k = (seed % analytic.len() as u64) as usize;
        let bumped = |delta: f64| {
            let mut m = model.clone();
            *m.params_mut().nth(k).expect("index in range") += delta;
            m.mean_loss(&refs, &ys).expect("consistent batch")
        };
        let numeric = (bumped(h) - bumped(-h)) / (2.0 * h);
        let e = gradient_rel_error(analytic[k], numeric);
        (e, e < GRAD_TOL)
    })
}

/// (e) label-shuffled training must land near chance on the test split.
pub fn suite_chance_floor(
    cfg: &ExperimentConfig,
    per_class: usize,
) -> Result<SuiteResult, HarnessError> {
    let mut c = cfg.clone();
    c.samples_per_class = per_class;
    let mut ds = generate(
        &c,
        domain::DATASET,
        per_class,
        c.pqc_layers.clone(),
        false,
        false,
    )?;
    ds.labels
        .shuffle(&mut rng_from_seed(derive_seed(cfg.base_seed, &[4])));
    let t = train_on(&ds, &c, domain::TRAIN)?;
    let v = ds.view(&t.split.test);
    let acc = t.model.evaluate(&v.rows, &v.labels)?.accuracy;
    let passed = (CHANCE_BAND.0..=CHANCE_BAND.1).contains(&acc);
    Ok(SuiteResult {
        name: "chance-floor".into(),
        trials: 1,
        passed,
        worst: acc,
        failing_seed: (!passed).then_some(cfg.base_seed),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub suites: Vec<SuiteResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(|s| s.passed)
    }

    pub fn text(&self) -> String {
        self.suites.iter().map(|s| s.line() + "\n").collect()
    }
}

/// All suites at their release trial counts.
pub fn verify_all(cfg: &ExperimentConfig) -> Result<VerifyReport, HarnessError> {
    let base = cfg.base_seed;
    Ok(VerifyReport {
        suites: vec![
            suite_transpile(base, 200),
            suite_state_prep(base, 100),
            suite_obfuscation(base, 100),
            suite_gradient(base, 100),
            suite_chance_floor(cfg, cfg.samples_per_class)?,
        ],
    })
}
