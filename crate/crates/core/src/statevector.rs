//! Dense statevector simulation, the semantics oracle for every rewrite.
//!
//! Qubit 0 is the least significant bit of the basis index.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::circuit::{Circuit, GateKind, Instruction};
use crate::error::SimError;

/// Largest register `run` accepts.
pub const MAX_SIM_QUBITS: usize = 24;
/// Largest register the equivalence checker accepts.
pub const MAX_EQUIV_QUBITS: usize = 14;

pub type Matrix2 = [[Complex64; 2]; 2];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn rx_matrix(theta: f64) -> Matrix2 {
    let (s, c) = (theta / 2.0).sin_cos();
    [[c.into(), -I * s], [-I * s, c.into()]]
}

pub fn ry_matrix(theta: f64) -> Matrix2 {
    let (s, c) = (theta / 2.0).sin_cos();
    [[c.into(), (-s).into()], [s.into(), c.into()]]
}

pub fn rz_matrix(theta: f64) -> Matrix2 {
    [
        [Complex64::from_polar(1.0, -theta / 2.0), ZERO],
        [ZERO, Complex64::from_polar(1.0, theta / 2.0)],
    ]
}

/// 2x2 unitary of a one-qubit gate (or of the target action of a controlled one).
pub fn gate_matrix(kind: GateKind, params: &[f64]) -> Option<Matrix2> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    Some(match kind {
        GateKind::X | GateKind::CX => [[ZERO, ONE], [ONE, ZERO]],
        GateKind::SX => {
            let a = Complex64::new(0.5, 0.5);
            let b = Complex64::new(0.5, -0.5);
            [[a, b], [b, a]]
        }
        GateKind::H => [[h.into(), h.into()], [h.into(), (-h).into()]],
        GateKind::RX | GateKind::CRX => rx_matrix(params[0]),
        GateKind::RY | GateKind::CRY => ry_matrix(params[0]),
        GateKind::RZ | GateKind::CRZ => rz_matrix(params[0]),
        GateKind::SWAP | GateKind::BARRIER => return None,
    })
}

pub fn matmul2(a: &Matrix2, b: &Matrix2) -> Matrix2 {
    let mut out = [[ZERO; 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// |0…0⟩ on `n_qubits` qubits.
    pub fn zero(n_qubits: usize) -> Self {
        let mut amps = vec![ZERO; 1 << n_qubits];
        amps[0] = ONE;
        StateVector { n_qubits, amps }
    }

    /// Computational basis state with the given index.
    pub fn basis(n_qubits: usize, index: usize) -> Self {
        let mut amps = vec![ZERO; 1 << n_qubits];
        amps[index] = ONE;
        StateVector { n_qubits, amps }
    }

    /// Wraps raw amplitudes; length must be a power of two. No normalization.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Option<Self> {
        let len = amps.len();
        if len == 0 || !len.is_power_of_two() {
            return None;
        }
        Some(StateVector {
            n_qubits: len.trailing_zeros() as usize,
            amps,
        })
    }

    /// Normalized vector of i.i.d. standard complex Gaussians.
    pub fn haar_random<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> Self {
        let mut amps: Vec<Complex64> = (0..1usize << n_qubits)
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        for a in &mut amps {
            *a /= norm;
        }
        StateVector { n_qubits, amps }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn apply_1q(&mut self, q: usize, m: &Matrix2) {
        let bit = 1usize << q;
        for i0 in 0..self.amps.len() {
            if i0 & bit != 0 {
                continue;
            }
            let i1 = i0 | bit;
            let (a, b) = (self.amps[i0], self.amps[i1]);
            self.amps[i0] = m[0][0] * a + m[0][1] * b;
            self.amps[i1] = m[1][0] * a + m[1][1] * b;
        }
    }

    /// Applies `m` to `target` on the subspace where `control` is 1.
    pub fn apply_controlled(&mut self, control: usize, target: usize, m: &Matrix2) {
        let cbit = 1usize << control;
        let tbit = 1usize << target;
        for i0 in 0..self.amps.len() {
            if i0 & tbit != 0 || i0 & cbit == 0 {
                continue;
            }
            let i1 = i0 | tbit;
            let (a, b) = (self.amps[i0], self.amps[i1]);
            self.amps[i0] = m[0][0] * a + m[0][1] * b;
            self.amps[i1] = m[1][0] * a + m[1][1] * b;
        }
    }

    pub fn apply_swap(&mut self, a: usize, b: usize) {
        let (abit, bbit) = (1usize << a, 1usize << b);
        for i in 0..self.amps.len() {
            if i & abit != 0 && i & bbit == 0 {
                self.amps.swap(i, (i & !abit) | bbit);
            }
        }
    }

    pub fn apply(&mut self, inst: &Instruction) {
        match inst.kind {
            GateKind::BARRIER => {}
            GateKind::SWAP => self.apply_swap(inst.qubits[0], inst.qubits[1]),
            k if k.is_controlled() => {
                let m = gate_matrix(k, &inst.params).expect("controlled gates have a matrix");
                self.apply_controlled(inst.qubits[0], inst.qubits[1], &m);
            }
            k => {
                let m = gate_matrix(k, &inst.params).expect("one-qubit gates have a matrix");
                self.apply_1q(inst.qubits[0], &m);
            }
        }
    }

    /// Relabels qubits: logical qubit `i` currently lives on physical qubit
    /// `layout[i]`; the result has logical qubit `i` on qubit `i`.
    pub fn permuted(&self, layout: &[usize]) -> Result<StateVector, SimError> {
        if !is_permutation(layout, self.n_qubits) {
            return Err(SimError::BadPermutation(self.n_qubits));
        }
        let mut out = vec![ZERO; self.amps.len()];
        for (phys, &amp) in self.amps.iter().enumerate() {
            let mut logical = 0usize;
            for (i, &p) in layout.iter().enumerate() {
                if phys >> p & 1 == 1 {
                    logical |= 1 << i;
                }
            }
            out[logical] = amp;
        }
        Ok(StateVector {
            n_qubits: self.n_qubits,
            amps: out,
        })
    }
}

pub(crate) fn is_permutation(p: &[usize], n: usize) -> bool {
    if p.len() != n {
        return false;
    }
    let mut seen = vec![false; n];
    p.iter()
        .all(|&x| x < n && !std::mem::replace(&mut seen[x], true))
}

/// Runs `c` from `initial` (or |0…0⟩). Barriers are no-ops.
pub fn run(c: &Circuit, initial: Option<&StateVector>) -> Result<StateVector, SimError> {
    let n = c.n_qubits();
    if n > MAX_SIM_QUBITS {
        return Err(SimError::TooLarge(n));
    }
    let mut state = match initial {
        Some(s) if s.n_qubits != n => {
            return Err(SimError::Dimension {
                left: n,
                right: s.n_qubits,
            })
        }
        Some(s) => s.clone(),
        None => StateVector::zero(n),
    };
    for inst in c.instructions() {
        state.apply(inst);
    }
    Ok(state)
}

/// |⟨a|b⟩|².
pub fn fidelity(a: &StateVector, b: &StateVector) -> Result<f64, SimError> {
    if a.n_qubits != b.n_qubits {
        return Err(SimError::Dimension {
            left: a.n_qubits,
            right: b.n_qubits,
        });
    }
    let inner: Complex64 = a.amps.iter().zip(&b.amps).map(|(x, y)| x.conj() * y).sum();
    Ok(inner.norm_sqr().min(1.0))
}

#[derive(Debug, Clone)]
pub struct EquivalenceOptions {
    pub trials: usize,
    pub tol: f64,
    /// Final layout of the second circuit (logical → physical), if routed.
    pub permutation: Option<Vec<usize>>,
    pub seed: u64,
}

impl Default for EquivalenceOptions {
    fn default() -> Self {
        EquivalenceOptions {
            trials: 8,
            tol: 1e-9,
            permutation: None,
            seed: 0x5eed,
        }
    }
}

impl EquivalenceOptions {
    pub fn with_permutation(mut self, layout: Vec<usize>) -> Self {
        self.permutation = Some(layout);
        self
    }
}

/// Smallest fidelity observed between the two circuits' outputs over the
/// random trial states.
pub fn min_fidelity(
    c1: &Circuit,
    c2: &Circuit,
    opts: &EquivalenceOptions,
) -> Result<f64, SimError> {
    let n = c1.n_qubits();
    if n != c2.n_qubits() {
        return Err(SimError::Dimension {
            left: n,
            right: c2.n_qubits(),
        });
    }
    if n > MAX_EQUIV_QUBITS {
        return Err(SimError::TooLarge(n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut worst: f64 = 1.0;
    for _ in 0..opts.trials {
        let s = StateVector::haar_random(n, &mut rng);
        let a = run(c1, Some(&s))?;
        let mut b = run(c2, Some(&s))?;
        if let Some(p) = &opts.permutation {
            b = b.permuted(p)?;
        }
        worst = worst.min(fidelity(&a, &b)?);
    }
    Ok(worst)
}

/// True iff every trial state yields fidelity ≥ 1 − tol.
pub fn equivalent_up_to_global_phase(
    c1: &Circuit,
    c2: &Circuit,
    opts: &EquivalenceOptions,
) -> Result<bool, SimError> {
    Ok(min_fidelity(c1, c2, opts)? >= 1.0 - opts.tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn one_qubit(f: impl FnOnce(&mut Circuit)) -> Circuit {
        let mut c = Circuit::new(1);
        f(&mut c);
        c
    }

    #[test]
    fn ry_half_pi_gives_plus() {
        let s = run(
            &one_qubit(|c| {
                c.ry(0, PI / 2.0);
            }),
            None,
        )
        .unwrap();
        for a in s.amplitudes() {
            assert!((a - Complex64::new(FRAC_1_SQRT_2, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn empty_run_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = StateVector::haar_random(3, &mut rng);
        assert_eq!(run(&Circuit::new(3), Some(&s)).unwrap(), s);
    }

    #[test]
    fn little_endian() {
        let mut c = Circuit::new(2);
        c.x(0);
        let s = run(&c, None).unwrap();
        assert_eq!(s.amplitudes()[1], ONE);
    }

    #[test]
    fn fidelity_examples() {
        let zero = StateVector::zero(1);
        let one = StateVector::basis(1, 1);
        let plus = StateVector::from_amplitudes(vec![FRAC_1_SQRT_2.into(); 2]).unwrap();
        assert!((fidelity(&zero, &zero).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(fidelity(&zero, &one).unwrap(), 0.0);
        assert!((fidelity(&zero, &plus).unwrap() - 0.5).abs() < 1e-12);
        assert!(fidelity(&zero, &StateVector::zero(2)).is_err());
    }

    #[test]
    fn x_is_not_rz_pi() {
        let x = one_qubit(|c| {
            c.x(0);
        });
        let rz = one_qubit(|c| {
            c.rz(0, PI);
        });
        let opts = EquivalenceOptions::default();
        assert!(!equivalent_up_to_global_phase(&x, &rz, &opts).unwrap());
        assert!(equivalent_up_to_global_phase(&x, &x, &opts).unwrap());
        // on |+⟩ specifically, X fixes it while RZ(π) maps it to |−⟩
        let plus = StateVector::from_amplitudes(vec![FRAC_1_SQRT_2.into(); 2]).unwrap();
        let a = run(&x, Some(&plus)).unwrap();
        let b = run(&rz, Some(&plus)).unwrap();
        assert!(fidelity(&a, &b).unwrap() < 1e-12);
    }

    #[test]
    fn involutions() {
        let opts = EquivalenceOptions::default();
        let id2 = Circuit::new(2);
        let mut xx = Circuit::new(2);
        xx.x(1).x(1);
        let mut sxsx = Circuit::new(2);
        sxsx.sx(0).sx(0);
        let mut x0 = Circuit::new(2);
        x0.x(0);
        let mut cxcx = Circuit::new(2);
        cxcx.cx(0, 1).cx(0, 1);
        let mut rzrz = Circuit::new(2);
        rzrz.rz(1, 0.77).rz(1, -0.77);
        assert!(equivalent_up_to_global_phase(&xx, &id2, &opts).unwrap());
        assert!(equivalent_up_to_global_phase(&sxsx, &x0, &opts).unwrap());
        assert!(equivalent_up_to_global_phase(&cxcx, &id2, &opts).unwrap());
        assert!(equivalent_up_to_global_phase(&rzrz, &id2, &opts).unwrap());
    }

    #[test]
    fn permutation_relabels() {
        let mut c = Circuit::new(3);
        c.x(0);
        let s = run(&c, None).unwrap();
        // logical qubit 0 sits on physical 2
        let mut moved = Circuit::new(3);
        moved.x(2);
        let t = run(&moved, None).unwrap().permuted(&[2, 1, 0]).unwrap();
        assert_eq!(s, t);
        assert!(s.permuted(&[0, 0, 1]).is_err());
    }

    #[test]
    fn norm_preserved_over_many_gates() {
        use rand::seq::SliceRandom;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 4;
        let mut s = StateVector::haar_random(n, &mut rng);
        let kinds = [
            GateKind::X,
            GateKind::SX,
            GateKind::H,
            GateKind::RX,
            GateKind::RY,
            GateKind::RZ,
            GateKind::CX,
            GateKind::CRX,
            GateKind::CRY,
            GateKind::CRZ,
            GateKind::SWAP,
        ];
        for step in 0..10_000 {
            let kind = *kinds.choose(&mut rng).unwrap();
            let a = rng.gen_range(0..n);
            let b = (a + rng.gen_range(1..n)) % n;
            let params = vec![rng.gen_range(-PI..PI); kind.num_params()];
            let qubits = if kind.arity() == Some(2) {
                vec![a, b]
            } else {
                vec![a]
            };
            s.apply(&Instruction::new(kind, qubits, params));
            if step < 50 {
                assert!((s.norm() - 1.0).abs() < 1e-12 * (step + 2) as f64);
            }
        }
        assert!((s.norm() - 1.0).abs() < 1e-9);
    }
}
