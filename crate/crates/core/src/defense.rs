//! Transient obfuscation layer placed between an encoder and its PQC.
//!
//! The cloak is H then RX(θ_i) on every qubit, then CX on (0,1), (2,3), …;
//! the uncloak is its exact gate-wise inverse. Barriers fence both halves so
//! the transpiler cannot cancel them against each other or the neighbours.

use std::f64::consts::PI;

use rand::Rng;

use crate::circuit::{Circuit, Instruction};
use crate::error::{CircuitError, EncodeError};
use crate::pqc::augment;
use crate::seed::rng_from_seed;

#[derive(Debug, Clone, PartialEq)]
pub struct ObfuscationKey {
    pub thetas: Vec<f64>,
    pub seed: u64,
}

impl ObfuscationKey {
    pub fn n_qubits(&self) -> usize {
        self.thetas.len()
    }
}

/// θ_i ∼ U[−π, π] for each of `n` qubits.
pub fn gen_key(n: usize, seed: u64) -> ObfuscationKey {
    assert!(n >= 1, "an obfuscation key needs at least one qubit");
    let mut rng = rng_from_seed(seed);
    ObfuscationKey {
        thetas: (0..n).map(|_| rng.gen_range(-PI..=PI)).collect(),
        seed,
    }
}

fn pairs(n: usize) -> impl DoubleEndedIterator<Item = (usize, usize)> {
    (0..n / 2).map(|j| (2 * j, 2 * j + 1))
}

pub fn obf_layer(key: &ObfuscationKey) -> Circuit {
    let n = key.n_qubits();
    let mut c = Circuit::new(n);
    for q in 0..n {
        c.h(q);
    }
    for (q, &t) in key.thetas.iter().enumerate() {
        c.rx(q, t);
    }
    for (a, b) in pairs(n) {
        c.cx(a, b);
    }
    c
}

pub fn inv_layer(key: &ObfuscationKey) -> Circuit {
    let n = key.n_qubits();
    let mut c = Circuit::new(n);
    for (a, b) in pairs(n).rev() {
        c.cx(a, b);
    }
    for (q, &t) in key.thetas.iter().enumerate() {
        c.rx(q, -t);
    }
    for q in 0..n {
        c.h(q);
    }
    c
}

/// encoding ∥ barrier ∥ cloak ∥ barrier ∥ uncloak ∥ barrier ∥ pqc.
pub fn defend(
    encoding: &Circuit,
    pqc: &Circuit,
    key: &ObfuscationKey,
) -> Result<Circuit, EncodeError> {
    let n = encoding.n_qubits();
    for other in [pqc.n_qubits(), key.n_qubits()] {
        if other != n {
            return Err(CircuitError::QubitCountMismatch {
                left: n,
                right: other,
            }
            .into());
        }
    }
    let mut out = encoding.clone();
    out.push(Instruction::barrier(0..n))?;
    out.extend_from(&obf_layer(key))?;
    out.push(Instruction::barrier(0..n))?;
    out.extend_from(&inv_layer(key))?;
    out.push(Instruction::barrier(0..n))?;
    let mut out = augment(&out, pqc)?;
    out.meta.insert("defended".into(), "true".into());
    out.meta.insert("key_seed".into(), key.seed.to_string());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::GateKind;
    use crate::statevector::{fidelity, run, StateVector};
    use rand::SeedableRng;

    #[test]
    fn key_range_and_determinism() {
        for s in 0..50 {
            let k = gen_key(7, s);
            assert!(k.thetas.iter().all(|t| (-PI..=PI).contains(t)));
        }
        assert_eq!(gen_key(4, 3), gen_key(4, 3));
        assert_ne!(gen_key(4, 3).thetas, gen_key(4, 4).thetas);
    }

    #[test]
    fn key_mean_is_centered() {
        let k = gen_key(100_000, 99);
        let m = k.thetas.iter().sum::<f64>() / k.thetas.len() as f64;
        assert!(m.abs() < 0.02, "mean {m}");
    }

    #[test]
    fn layer_shapes() {
        let k1 = gen_key(1, 1);
        let c = obf_layer(&k1);
        assert_eq!(c.len(), 2);
        assert_eq!(c.instructions()[0].kind, GateKind::H);
        assert_eq!(c.instructions()[1].kind, GateKind::RX);

        let k4 = gen_key(4, 2);
        let c = obf_layer(&k4);
        let g = c.gate_counts();
        assert_eq!(
            (g.get(GateKind::H), g.get(GateKind::RX), g.get(GateKind::CX)),
            (4, 4, 2)
        );
        assert_eq!(c.instructions()[8].qubits, vec![0, 1]);
        assert_eq!(c.instructions()[9].qubits, vec![2, 3]);
        assert_eq!(obf_layer(&gen_key(5, 0)).gate_counts().get(GateKind::CX), 2);
    }

    #[test]
    fn inverse_order() {
        let k = gen_key(4, 5);
        let c = inv_layer(&k);
        let insts = c.instructions();
        assert_eq!(insts[0], Instruction::two(GateKind::CX, 2, 3));
        assert_eq!(insts[1], Instruction::two(GateKind::CX, 0, 1));
        for q in 0..4 {
            assert_eq!(
                insts[2 + q],
                Instruction::rot(GateKind::RX, q, -k.thetas[q])
            );
            assert_eq!(insts[6 + q], Instruction::one(GateKind::H, q));
        }
    }

    #[test]
    fn cloak_then_uncloak_is_identity() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        for n in 1..=6 {
            let k = gen_key(n, n as u64);
            let mut c = obf_layer(&k);
            c.extend_from(&inv_layer(&k)).unwrap();
            let s = StateVector::haar_random(n, &mut rng);
            let f = fidelity(&run(&c, Some(&s)).unwrap(), &s).unwrap();
            assert!(f >= 1.0 - 1e-9);
        }
        let zero = ObfuscationKey {
            thetas: vec![0.0; 3],
            seed: 0,
        };
        let inv = inv_layer(&zero);
        assert!(inv.instructions()[1..4]
            .iter()
            .all(|i| i.params == vec![-0.0]));
    }

    #[test]
    fn defend_layout() {
        let enc = crate::encoding::basis_encode(&[1, 1, 0]).unwrap();
        let pqc = {
            let mut p = Circuit::new(3);
            p.rx(0, 0.4).cx(0, 1);
            p
        };
        let k = gen_key(3, 12);
        let d = defend(&enc, &pqc, &k).unwrap();
        assert_eq!(d.gate_counts().get(GateKind::BARRIER), 3);
        assert_eq!(d.label, enc.label);
        assert_eq!(d.meta.get("defended").map(String::as_str), Some("true"));
        assert_eq!(d.meta.get("key_seed").map(String::as_str), Some("12"));
        assert_eq!(
            d.len(),
            enc.len() + 3 + obf_layer(&k).len() + inv_layer(&k).len() + pqc.len()
        );
        assert!(defend(&enc, &Circuit::new(2), &k).is_err());
        assert!(defend(&enc, &pqc, &gen_key(2, 1)).is_err());
    }
}
