//! Randomized parameterized-circuit blocks appended after the encoder.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::circuit::{Circuit, GateKind, Instruction};
use crate::error::EncodeError;
use crate::seed::rng_from_seed;

/// Gates a PQC may start with.
pub const START_GATES: [GateKind; 9] = [
    GateKind::RX,
    GateKind::RY,
    GateKind::RZ,
    GateKind::CX,
    GateKind::X,
    GateKind::SX,
    GateKind::CRX,
    GateKind::CRY,
    GateKind::CRZ,
];

pub const ROTATIONS: [GateKind; 3] = [GateKind::RX, GateKind::RY, GateKind::RZ];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Entanglement {
    Linear,
    Circular,
    Full,
}

impl Entanglement {
    pub const ALL: [Entanglement; 3] = [
        Entanglement::Linear,
        Entanglement::Circular,
        Entanglement::Full,
    ];

    /// CX (control, target) pairs of one entangling layer.
    pub fn pairs(self, n: usize) -> Vec<(usize, usize)> {
        let mut pairs: Vec<(usize, usize)> = (0..n.saturating_sub(1)).map(|i| (i, i + 1)).collect();
        match self {
            Entanglement::Linear => {}
            Entanglement::Circular => {
                if n > 1 {
                    pairs.push((n - 1, 0));
                }
            }
            Entanglement::Full => {
                pairs = (0..n)
                    .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                    .collect();
            }
        }
        pairs
    }
}

impl fmt::Display for Entanglement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Entanglement::Linear => "linear",
            Entanglement::Circular => "circular",
            Entanglement::Full => "full",
        })
    }
}

impl FromStr for Entanglement {
    type Err = EncodeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "linear" => Ok(Entanglement::Linear),
            "circular" => Ok(Entanglement::Circular),
            "full" => Ok(Entanglement::Full),
            other => Err(EncodeError::Config(format!(
                "unknown entanglement `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PqcConfig {
    pub layers: usize,
    pub start_gate: GateKind,
    pub rotation_pool: Vec<GateKind>,
    pub entanglement: Entanglement,
    pub seed: u64,
}

impl PqcConfig {
    pub fn validate(&self) -> Result<(), EncodeError> {
        if self.layers == 0 {
            return Err(EncodeError::Config("layers must be at least 1".into()));
        }
        if !START_GATES.contains(&self.start_gate) {
            return Err(EncodeError::Config(format!(
                "{} is not an allowed start gate",
                self.start_gate
            )));
        }
        if self.rotation_pool.is_empty()
            || self.rotation_pool.iter().any(|g| !ROTATIONS.contains(g))
        {
            return Err(EncodeError::Config(
                "rotation pool must be a nonempty subset of {RX, RY, RZ}".into(),
            ));
        }
        Ok(())
    }

    /// Uniform draw over start gate, entanglement, nonempty rotation subset
    /// and layer count in `layers`.
    pub fn sample(seed: u64, layers: std::ops::RangeInclusive<usize>) -> PqcConfig {
        let mut rng = rng_from_seed(seed);
        let start_gate = *START_GATES.choose(&mut rng).expect("nonempty");
        let entanglement = *Entanglement::ALL.choose(&mut rng).expect("nonempty");
        let mask = rng.gen_range(1u8..8);
        let rotation_pool = ROTATIONS
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, &g)| g)
            .collect();
        let layers = rng.gen_range(layers);
        PqcConfig {
            layers,
            start_gate,
            rotation_pool,
            entanglement,
            seed: rng.gen(),
        }
    }
}

/// Start gate, then `layers` × (rotation layer, entangling layer).
pub fn build_pqc(cfg: &PqcConfig, n: usize) -> Result<Circuit, EncodeError> {
    cfg.validate()?;
    let two_qubit_start = cfg.start_gate.arity() == Some(2);
    if two_qubit_start && n < 2 {
        return Err(EncodeError::TooFewQubits {
            gate: cfg.start_gate.to_string(),
            needed: 2,
            n_qubits: n,
        });
    }
    if n < 2 && cfg.entanglement != Entanglement::Linear {
        return Err(EncodeError::TooFewQubits {
            gate: format!("{} entanglement", cfg.entanglement),
            needed: 2,
            n_qubits: n,
        });
    }
    if n == 0 {
        return Err(EncodeError::Empty);
    }
    let mut rng = rng_from_seed(cfg.seed);
    let mut c = Circuit::new(n);
    let start_params = vec![rng.gen_range(0.0..TAU); cfg.start_gate.num_params()];
    let start_qubits = if two_qubit_start { vec![0, 1] } else { vec![0] };
    c.push(Instruction::new(cfg.start_gate, start_qubits, start_params))?;

    let pairs = cfg.entanglement.pairs(n);
    for _ in 0..cfg.layers {
        for q in 0..n {
            let g = *cfg
                .rotation_pool
                .choose(&mut rng)
                .expect("validated nonempty");
            c.push(Instruction::rot(g, q, rng.gen_range(0.0..TAU)))?;
        }
        for &(a, b) in &pairs {
            c.cx(a, b);
        }
    }
    c.meta.insert("pqc_layers".into(), cfg.layers.to_string());
    c.meta
        .insert("pqc_start".into(), cfg.start_gate.to_string());
    c.meta
        .insert("pqc_entanglement".into(), cfg.entanglement.to_string());
    Ok(c)
}

/// `encoding` followed by `pqc`, with no fence between them. Label and meta
/// come from the encoding; PQC meta keys are merged in.
pub fn augment(encoding: &Circuit, pqc: &Circuit) -> Result<Circuit, EncodeError> {
    augment_with(encoding, pqc, false)
}

/// Like [`augment`], optionally placing a barrier at the seam.
pub fn augment_with(
    encoding: &Circuit,
    pqc: &Circuit,
    barrier: bool,
) -> Result<Circuit, EncodeError> {
    let mut out = encoding.clone();
    if pqc.n_qubits() != encoding.n_qubits() {
        return Err(crate::error::CircuitError::QubitCountMismatch {
            left: encoding.n_qubits(),
            right: pqc.n_qubits(),
        }
        .into());
    }
    if barrier {
        out.barrier_all();
    }
    out.extend_from(pqc)?;
    for (k, v) in &pqc.meta {
        out.meta.entry(k.clone()).or_insert_with(|| v.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::{angle_encode, Axis};

    fn cfg(layers: usize, start: GateKind, pool: &[GateKind], ent: Entanglement) -> PqcConfig {
        PqcConfig {
            layers,
            start_gate: start,
            rotation_pool: pool.to_vec(),
            entanglement: ent,
            seed: 17,
        }
    }

    #[test]
    fn single_layer_linear() {
        let c = build_pqc(
            &cfg(1, GateKind::X, &[GateKind::RY], Entanglement::Linear),
            2,
        )
        .unwrap();
        let kinds: Vec<GateKind> = c.instructions().iter().map(|i| i.kind).collect();
        assert_eq!(
            kinds,
            vec![GateKind::X, GateKind::RY, GateKind::RY, GateKind::CX]
        );
        assert_eq!(c.instructions()[3].qubits, vec![0, 1]);
    }

    #[test]
    fn full_pattern_count() {
        let c = build_pqc(
            &cfg(1, GateKind::RZ, &[GateKind::RX], Entanglement::Full),
            4,
        )
        .unwrap();
        assert_eq!(c.gate_counts().get(GateKind::CX), 6);
        assert_eq!(
            Entanglement::Full.pairs(4),
            vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
        );
        assert_eq!(
            Entanglement::Circular.pairs(4),
            vec![(0, 1), (1, 2), (2, 3), (3, 0)]
        );
    }

    #[test]
    fn five_layer_count() {
        let c = build_pqc(&cfg(5, GateKind::SX, &ROTATIONS, Entanglement::Linear), 3).unwrap();
        assert_eq!(c.len(), 1 + 5 * (3 + 2));
    }

    #[test]
    fn angles_in_range_and_seeded() {
        let a = build_pqc(
            &cfg(3, GateKind::CRY, &ROTATIONS, Entanglement::Circular),
            3,
        )
        .unwrap();
        let b = build_pqc(
            &cfg(3, GateKind::CRY, &ROTATIONS, Entanglement::Circular),
            3,
        )
        .unwrap();
        assert_eq!(a, b);
        assert_eq!(a.instructions()[0].qubits, vec![0, 1]);
        for i in a.instructions() {
            for &p in &i.params {
                assert!((0.0..TAU).contains(&p));
            }
        }
        let mut other = cfg(3, GateKind::CRY, &ROTATIONS, Entanglement::Circular);
        other.seed = 18;
        assert_ne!(build_pqc(&other, 3).unwrap(), a);
    }

    #[test]
    fn too_few_qubits() {
        assert!(matches!(
            build_pqc(
                &cfg(1, GateKind::CX, &[GateKind::RX], Entanglement::Linear),
                1
            ),
            Err(EncodeError::TooFewQubits { .. })
        ));
        let ok = build_pqc(
            &cfg(1, GateKind::RX, &[GateKind::RX], Entanglement::Linear),
            1,
        )
        .unwrap();
        assert_eq!(ok.gate_counts().get(GateKind::CX), 0);
    }

    #[test]
    fn invalid_configs() {
        assert!(build_pqc(
            &cfg(0, GateKind::RX, &[GateKind::RX], Entanglement::Linear),
            2
        )
        .is_err());
        assert!(build_pqc(
            &cfg(1, GateKind::H, &[GateKind::RX], Entanglement::Linear),
            2
        )
        .is_err());
        assert!(build_pqc(&cfg(1, GateKind::RX, &[], Entanglement::Linear), 2).is_err());
        assert!(build_pqc(
            &cfg(1, GateKind::RX, &[GateKind::CX], Entanglement::Linear),
            2
        )
        .is_err());
    }

    #[test]
    fn sampled_configs_cover_the_space() {
        let mut starts = std::collections::HashSet::new();
        let mut layers = std::collections::HashSet::new();
        for s in 0..500 {
            let c = PqcConfig::sample(s, 1..=5);
            c.validate().unwrap();
            starts.insert(c.start_gate);
            layers.insert(c.layers);
        }
        assert_eq!(starts.len(), 9);
        assert_eq!(layers.len(), 5);
    }

    #[test]
    fn augment_concatenates() {
        let enc = angle_encode(&[0.4; 3], Axis::Y).unwrap();
        let pqc = build_pqc(&cfg(2, GateKind::RX, &ROTATIONS, Entanglement::Full), 3).unwrap();
        let c = augment(&enc, &pqc).unwrap();
        assert_eq!(c.len(), enc.len() + pqc.len());
        assert_eq!(&c.instructions()[..3], enc.instructions());
        assert_eq!(c.label, enc.label);
        assert_eq!(c.gate_counts().get(GateKind::BARRIER), 0);

        let empty = Circuit::new(3).with_label(crate::circuit::EncodingClass::Basis);
        let c = augment(&empty, &pqc).unwrap();
        assert_eq!(c.instructions(), pqc.instructions());
        assert_eq!(c.label, Some(crate::circuit::EncodingClass::Basis));

        assert!(augment(&Circuit::new(2), &pqc).is_err());
        let fenced = augment_with(&enc, &pqc, true).unwrap();
        assert_eq!(fenced.gate_counts().get(GateKind::BARRIER), 1);
    }
}
