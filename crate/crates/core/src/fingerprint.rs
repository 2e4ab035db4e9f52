//! Fixed-length structural fingerprint of a transpiled circuit.
//!
//! The registry has 27 circuit-wide features followed by two per-qubit
//! features, so a width-`n` circuit maps to `27 + 2n` values. Names and order
//! are frozen per [`REGISTRY_VERSION`]; changing either requires a new version.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::{FRAC_PI_2, PI, TAU};

use crate::circuit::{Circuit, GateKind};
use crate::error::FeatureError;

pub const REGISTRY_VERSION: u32 = 1;
pub const NUM_GLOBAL_FEATURES: usize = 27;
const HIST_BINS: usize = 16;

/// The 27 circuit-wide feature names, in registry order.
pub const GLOBAL_FEATURES: [&str; NUM_GLOBAL_FEATURES] = [
    "depth",
    "total_gates",
    "ratio_x",
    "ratio_sx",
    "ratio_rz",
    "ratio_cx",
    "frac_qubits_first_gate_x",
    "frac_qubits_binary_prefix",
    "rz_sx_bigram_rate",
    "sx_rz_sx_trigram_rate",
    "rz_angle_mean",
    "rz_angle_std",
    "rz_angle_entropy",
    "frac_rz_clifford",
    "rz_distinct_ratio",
    "rot_lag1_autocorr",
    "rot_mod_mean",
    "rot_mod_std",
    "rot_mod_entropy",
    "cx_per_qubit",
    "cx_pair_entropy",
    "distinct_cx_pair_frac",
    "max_qubit_cx_share",
    "first_cx_layer_frac",
    "frac_gates_before_first_cx",
    "mean_gates_per_qubit",
    "var_gates_per_qubit",
];

pub fn num_features(n_qubits: usize) -> usize {
    NUM_GLOBAL_FEATURES + 2 * n_qubits
}

/// Registry names for a width-`n` circuit.
pub fn feature_names(n: usize) -> Vec<String> {
    let mut names: Vec<String> = GLOBAL_FEATURES.iter().map(|s| s.to_string()).collect();
    for q in 0..n {
        names.push(format!("q{q}_rot_norm"));
        names.push(format!("q{q}_xsx_norm"));
    }
    names
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub names: Vec<String>,
    pub registry_version: u32,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.values[i])
    }
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

fn std_dev(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64).sqrt()
}

/// Shannon entropy of a histogram, normalized by ln(bins). 0 for an empty sample.
fn normalized_entropy(counts: &[usize]) -> f64 {
    let total: usize = counts.iter().sum();
    if total == 0 || counts.len() < 2 {
        return 0.0;
    }
    let h: f64 = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total as f64;
            -p * p.ln()
        })
        .sum();
    (h / (counts.len() as f64).ln()).clamp(0.0, 1.0)
}

fn histogram(angles: &[f64], offset: f64) -> [usize; HIST_BINS] {
    let mut bins = [0usize; HIST_BINS];
    let width = TAU / HIST_BINS as f64;
    for &a in angles {
        let shifted = (a + offset).rem_euclid(TAU);
        let b = ((shifted / width) as usize).min(HIST_BINS - 1);
        bins[b] += 1;
    }
    bins
}

/// Pearson lag-1 autocorrelation; 0 for fewer than 3 values or zero variance.
fn lag1_autocorr(xs: &[f64]) -> f64 {
    if xs.len() < 3 {
        return 0.0;
    }
    let a = &xs[..xs.len() - 1];
    let b = &xs[1..];
    let (ma, mb) = (mean(a), mean(b));
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    if va < 1e-24 || vb < 1e-24 {
        return 0.0;
    }
    (cov / (va * vb).sqrt()).clamp(-1.0, 1.0)
}

fn ratio(num: usize, den: usize) -> f64 {
    num as f64 / den.max(1) as f64
}

/// Computes the frozen registry on a basis-only circuit (barriers ignored).
pub fn extract(c: &Circuit) -> Result<FeatureVector, FeatureError> {
    for (index, inst) in c.instructions().iter().enumerate() {
        if !inst.kind.is_basis() && inst.kind != GateKind::BARRIER {
            return Err(FeatureError::NonBasisGate {
                index,
                kind: inst.kind,
            });
        }
    }
    let stripped = c.without_barriers();
    let insts = stripped.instructions();
    let n = c.n_qubits();
    let counts = stripped.gate_counts();
    let total = counts.total_gates();
    let (nx, nsx, nrz, ncx) = (
        counts.get(GateKind::X),
        counts.get(GateKind::SX),
        counts.get(GateKind::RZ),
        counts.get(GateKind::CX),
    );
    let depth = stripped.depth();

    // per-qubit gate sequences (indices into insts)
    let mut wires: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, inst) in insts.iter().enumerate() {
        for &q in &inst.qubits {
            wires[q].push(i);
        }
    }
    let kind_at = |i: usize| insts[i].kind;

    let first_x = wires
        .iter()
        .filter(|w| w.first().is_some_and(|&i| kind_at(i) == GateKind::X))
        .count();
    let binary_prefix = wires
        .iter()
        .filter(|w| {
            let prefix: Vec<usize> = w
                .iter()
                .copied()
                .take_while(|&i| kind_at(i) != GateKind::CX)
                .collect();
            !prefix.is_empty() && prefix.iter().all(|&i| kind_at(i) == GateKind::X)
        })
        .count();

    let mut bigrams = 0usize;
    let mut trigrams = 0usize;
    for w in &wires {
        for pair in w.windows(2) {
            if kind_at(pair[0]) == GateKind::RZ && kind_at(pair[1]) == GateKind::SX {
                bigrams += 1;
            }
        }
        for tri in w.windows(3) {
            if kind_at(tri[0]) == GateKind::SX
                && kind_at(tri[1]) == GateKind::RZ
                && kind_at(tri[2]) == GateKind::SX
            {
                trigrams += 1;
            }
        }
    }

    let angles: Vec<f64> = insts
        .iter()
        .filter(|i| i.kind == GateKind::RZ)
        .map(|i| i.params[0].rem_euclid(TAU))
        .collect();
    let clifford = angles
        .iter()
        .filter(|&&a| {
            let r = a.rem_euclid(FRAC_PI_2);
            r.min(FRAC_PI_2 - r) < 1e-6
        })
        .count();
    let distinct: BTreeSet<i64> = angles.iter().map(|a| (a * 1e6).round() as i64).collect();
    let distinct_ratio = if angles.is_empty() {
        0.0
    } else {
        distinct.len() as f64 / angles.len() as f64
    };

    // circular statistics of the same angles
    let (mod_mean, mod_spread) = if angles.is_empty() {
        (0.0, 0.0)
    } else {
        let (s, co) = angles
            .iter()
            .fold((0.0, 0.0), |(s, co), a| (s + a.sin(), co + a.cos()));
        let len = angles.len() as f64;
        let r = ((s / len).powi(2) + (co / len).powi(2)).sqrt().min(1.0);
        let m = if r < 1e-12 {
            0.0
        } else {
            s.atan2(co).rem_euclid(TAU)
        };
        (m, 1.0 - r)
    };

    // entanglement structure
    let mut pair_counts: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut cx_incidence = vec![0usize; n];
    for inst in insts.iter().filter(|i| i.kind == GateKind::CX) {
        let (a, b) = (inst.qubits[0], inst.qubits[1]);
        *pair_counts.entry((a.min(b), a.max(b))).or_default() += 1;
        cx_incidence[a] += 1;
        cx_incidence[b] += 1;
    }
    let possible_pairs = n * n.saturating_sub(1) / 2;
    let pair_entropy = if ncx == 0 || possible_pairs < 2 {
        0.0
    } else {
        let mut hist: Vec<usize> = pair_counts.values().copied().collect();
        hist.resize(possible_pairs, 0);
        normalized_entropy(&hist)
    };
    let distinct_pair_frac = if possible_pairs == 0 {
        0.0
    } else {
        pair_counts.len() as f64 / possible_pairs as f64
    };
    let max_cx_share = if ncx == 0 {
        0.0
    } else {
        *cx_incidence.iter().max().unwrap_or(&0) as f64 / (2 * ncx) as f64
    };

    // ASAP layer of the earliest CX
    let first_cx_layer = {
        let mut frontier = vec![0usize; n];
        let mut first: Option<usize> = None;
        for inst in insts {
            let level = inst.qubits.iter().map(|&q| frontier[q]).max().unwrap_or(0) + 1;
            for &q in &inst.qubits {
                frontier[q] = level;
            }
            if inst.kind == GateKind::CX {
                first = Some(first.map_or(level, |f: usize| f.min(level)));
            }
        }
        first
    };
    let first_cx_layer_frac = match first_cx_layer {
        Some(l) if depth > 0 => l as f64 / depth as f64,
        _ => 1.0,
    };
    let frac_before_first_cx = match insts.iter().position(|i| i.kind == GateKind::CX) {
        Some(p) => ratio(p, total),
        None => 1.0,
    };

    let per_qubit: Vec<f64> = wires.iter().map(|w| w.len() as f64).collect();
    let (mean_per_qubit, var_per_qubit) = if total == 0 {
        (0.0, 0.0)
    } else {
        let m = mean(&per_qubit);
        let v = per_qubit.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n as f64;
        (m / total as f64, v / (total as f64).powi(2))
    };

    let mut values = vec![
        depth as f64,
        total as f64,
        ratio(nx, total),
        ratio(nsx, total),
        ratio(nrz, total),
        ratio(ncx, total),
        first_x as f64 / n as f64,
        binary_prefix as f64 / n as f64,
        ratio(bigrams, nrz),
        ratio(trigrams, nsx),
        mean(&angles),
        std_dev(&angles),
        normalized_entropy(&histogram(&angles, 0.0)),
        if angles.is_empty() {
            0.0
        } else {
            clifford as f64 / angles.len() as f64
        },
        distinct_ratio,
        lag1_autocorr(&angles),
        mod_mean,
        mod_spread,
        normalized_entropy(&histogram(&angles, PI / HIST_BINS as f64)),
        ncx as f64 / n as f64,
        pair_entropy,
        distinct_pair_frac,
        max_cx_share,
        first_cx_layer_frac,
        frac_before_first_cx,
        mean_per_qubit,
        var_per_qubit,
    ];
    debug_assert_eq!(values.len(), NUM_GLOBAL_FEATURES);
    for wire in wires.iter().take(n) {
        let (mut rz, mut xsx) = (0usize, 0usize);
        for &i in wire {
            match kind_at(i) {
                GateKind::RZ => rz += 1,
                GateKind::X | GateKind::SX => xsx += 1,
                _ => {}
            }
        }
        values.push(ratio(rz, total));
        values.push(ratio(xsx, total));
    }
    Ok(FeatureVector {
        values,
        names: feature_names(n),
        registry_version: REGISTRY_VERSION,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_follow_length_law() {
        for n in 1..=100 {
            let names = feature_names(n);
            assert_eq!(names.len(), 27 + 2 * n);
            let unique: BTreeSet<&String> = names.iter().collect();
            assert_eq!(unique.len(), names.len());
        }
        assert_eq!(feature_names(1)[0], "depth");
        assert_eq!(feature_names(1).len(), 29);
        assert_eq!(feature_names(2)[27], "q0_rot_norm");
        assert_eq!(feature_names(2)[30], "q1_xsx_norm");
    }

    #[test]
    fn simple_ratios() {
        let mut c = Circuit::new(2);
        c.x(0).sx(1).cx(0, 1);
        let f = extract(&c).unwrap();
        assert!((f.get("ratio_x").unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((f.get("ratio_sx").unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((f.get("ratio_cx").unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(f.get("ratio_rz").unwrap(), 0.0);
        assert_eq!(f.get("frac_qubits_first_gate_x").unwrap(), 0.5);
        assert_eq!(f.get("frac_qubits_binary_prefix").unwrap(), 0.5);
        assert_eq!(f.get("first_cx_layer_frac").unwrap(), 1.0);
        assert!((f.get("frac_gates_before_first_cx").unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(f.get("max_qubit_cx_share").unwrap(), 0.5);
        assert_eq!(f.get("distinct_cx_pair_frac").unwrap(), 1.0);
    }

    #[test]
    fn empty_circuit_defaults() {
        let f = extract(&Circuit::new(3)).unwrap();
        assert_eq!(f.len(), 33);
        for (name, v) in f.names.iter().zip(&f.values) {
            let expected = match name.as_str() {
                "first_cx_layer_frac" | "frac_gates_before_first_cx" => 1.0,
                _ => 0.0,
            };
            assert_eq!(*v, expected, "{name}");
        }
    }

    #[test]
    fn rejects_non_basis() {
        let mut c = Circuit::new(1);
        c.rz(0, 0.1).h(0);
        assert_eq!(
            extract(&c),
            Err(FeatureError::NonBasisGate {
                index: 1,
                kind: GateKind::H
            })
        );
    }

    #[test]
    fn sequence_and_angle_features() {
        let mut c = Circuit::new(1);
        c.rz(0, FRAC_PI_2).sx(0).rz(0, 0.3).sx(0).rz(0, PI);
        let f = extract(&c).unwrap();
        assert!((f.get("rz_sx_bigram_rate").unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!((f.get("sx_rz_sx_trigram_rate").unwrap() - 0.5).abs() < 1e-15);
        assert!((f.get("frac_rz_clifford").unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(f.get("rz_distinct_ratio").unwrap(), 1.0);
        let m = (FRAC_PI_2 + 0.3 + PI) / 3.0;
        assert!((f.get("rz_angle_mean").unwrap() - m).abs() < 1e-15);

        let mut same = Circuit::new(1);
        same.rz(0, 0.7).sx(0).rz(0, 0.7).sx(0).rz(0, 0.7);
        let f = extract(&same).unwrap();
        assert!((f.get("rz_distinct_ratio").unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!(f.get("rz_angle_std").unwrap() < 1e-12);
        assert_eq!(f.get("rz_angle_entropy").unwrap(), 0.0);
        assert_eq!(f.get("rot_lag1_autocorr").unwrap(), 0.0);
        assert!(f.get("rot_mod_std").unwrap() < 1e-12);
    }

    #[test]
    fn negative_angles_are_taken_mod_two_pi() {
        let mut a = Circuit::new(1);
        a.rz(0, -0.5);
        let mut b = Circuit::new(1);
        b.rz(0, TAU - 0.5);
        let (fa, fb) = (extract(&a).unwrap(), extract(&b).unwrap());
        for (x, y) in fa.values.iter().zip(&fb.values) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn cx_structure() {
        let mut c = Circuit::new(3);
        c.x(2).cx(0, 1).cx(1, 0).cx(1, 2);
        let f = extract(&c).unwrap();
        assert_eq!(f.get("cx_per_qubit").unwrap(), 1.0);
        assert!((f.get("distinct_cx_pair_frac").unwrap() - 2.0 / 3.0).abs() < 1e-15);
        // pairs {01: 2, 12: 1, 02: 0} over three possible pairs
        let p = [2.0 / 3.0, 1.0 / 3.0];
        let h: f64 = -p.iter().map(|x| x * f64::ln(*x)).sum::<f64>() / 3f64.ln();
        assert!((f.get("cx_pair_entropy").unwrap() - h).abs() < 1e-12);
        assert!((f.get("max_qubit_cx_share").unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(f.get("first_cx_layer_frac").unwrap(), 1.0 / 3.0);
        assert_eq!(f.get("frac_gates_before_first_cx").unwrap(), 0.25);
        assert_eq!(f.get("q2_xsx_norm").unwrap(), 0.25);
    }
}
