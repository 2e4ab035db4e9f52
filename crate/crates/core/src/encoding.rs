//! The five labeled data encoders and their random input samplers.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;

use crate::circuit::{Circuit, EncodingClass, GateKind, Instruction};
use crate::error::EncodeError;
use crate::seed::{derive_seed, rng_from_seed};
use crate::statevector::StateVector;

/// Rotation axis for angle encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn gate(self) -> GateKind {
        match self {
            Axis::X => GateKind::RX,
            Axis::Y => GateKind::RY,
            Axis::Z => GateKind::RZ,
        }
    }

    pub fn class(self) -> EncodingClass {
        match self {
            Axis::X => EncodingClass::AngleRX,
            Axis::Y => EncodingClass::AngleRY,
            Axis::Z => EncodingClass::AngleRZ,
        }
    }
}

/// Normalized state vector of dimension 2^n.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeVector {
    amps: Vec<Complex64>,
}

impl AmplitudeVector {
    /// Validates dimension and unit norm (within 1e-9).
    pub fn new(amps: Vec<Complex64>) -> Result<Self, EncodeError> {
        if amps.is_empty() {
            return Err(EncodeError::Empty);
        }
        if !amps.len().is_power_of_two() || amps.len() < 2 {
            return Err(EncodeError::NotPowerOfTwo(amps.len()));
        }
        let v = AmplitudeVector { amps };
        let dev = (v.norm() - 1.0).abs();
        if dev > 1e-9 {
            return Err(EncodeError::NotNormalized(dev));
        }
        Ok(v)
    }

    /// Scales an arbitrary nonzero vector to unit norm.
    pub fn normalized(mut amps: Vec<Complex64>) -> Result<Self, EncodeError> {
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(EncodeError::NotNormalized(1.0));
        }
        for a in &mut amps {
            *a /= norm;
        }
        AmplitudeVector::new(amps)
    }

    pub fn n_qubits(&self) -> usize {
        self.amps.len().trailing_zeros() as usize
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn to_state(&self) -> StateVector {
        StateVector::from_amplitudes(self.amps.clone()).expect("dimension checked at construction")
    }
}

/// Which amplitude vectors the sampler draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AmplitudeKind {
    /// Haar-random complex vectors.
    #[default]
    Complex,
    /// Real Gaussian vectors, normalized.
    Real,
}

/// One X on every qubit whose bit is set.
pub fn basis_encode(bits: &[u8]) -> Result<Circuit, EncodeError> {
    if bits.is_empty() {
        return Err(EncodeError::Empty);
    }
    let mut c = Circuit::new(bits.len()).with_label(EncodingClass::Basis);
    for (q, &b) in bits.iter().enumerate() {
        match b {
            0 => {}
            1 => {
                c.x(q);
            }
            other => return Err(EncodeError::BadBit(other)),
        }
    }
    Ok(c)
}

/// One rotation about `axis` per qubit, angle = feature.
pub fn angle_encode(features: &[f64], axis: Axis) -> Result<Circuit, EncodeError> {
    if features.is_empty() {
        return Err(EncodeError::Empty);
    }
    let mut c = Circuit::new(features.len()).with_label(axis.class());
    for (q, &x) in features.iter().enumerate() {
        c.push(Instruction::rot(axis.gate(), q, x))?;
    }
    Ok(c)
}

/// Haar-random state: i.i.d. complex Gaussians, normalized. Deterministic per seed.
pub fn haar_random_state(n: usize, seed: u64) -> AmplitudeVector {
    assert!(n >= 1, "haar_random_state needs at least one qubit");
    let mut rng = rng_from_seed(seed);
    AmplitudeVector {
        amps: StateVector::haar_random(n, &mut rng).into_amplitudes(),
    }
}

fn real_random_state(n: usize, seed: u64) -> AmplitudeVector {
    let mut rng = rng_from_seed(seed);
    let raw: Vec<Complex64> = (0..1usize << n)
        .map(|_| Complex64::new(rng.sample(rand_distr::StandardNormal), 0.0))
        .collect();
    AmplitudeVector::normalized(raw).expect("gaussian draw is nonzero with probability 1")
}

/// Appends a uniformly controlled rotation: for every control pattern `j`
/// (bit `m` of `j` is the value of `controls[m]`), `target` is rotated by
/// `angles[j]`. Uses the Gray-code construction with `2^k` CX gates.
fn push_multiplexed(
    c: &mut Circuit,
    kind: GateKind,
    target: usize,
    controls: &[usize],
    angles: &[f64],
) {
    let k = controls.len();
    let size = 1usize << k;
    debug_assert_eq!(angles.len(), size);
    if k == 0 {
        c.push(Instruction::rot(kind, target, angles[0]))
            .expect("valid operands");
        return;
    }
    let gray = |i: usize| i ^ (i >> 1);
    for i in 0..size {
        let g = gray(i);
        let theta = angles
            .iter()
            .enumerate()
            .map(|(j, &a)| if (j & g).count_ones() % 2 == 0 { a } else { -a })
            .sum::<f64>()
            / size as f64;
        c.push(Instruction::rot(kind, target, theta))
            .expect("valid operands");
        let flip = g ^ gray((i + 1) % size);
        let m = flip.trailing_zeros() as usize;
        c.push(Instruction::two(GateKind::CX, controls[m], target))
            .expect("valid operands");
    }
}

/// State preparation by recursive disentanglement: multiplexed RY for the
/// magnitudes from the top qubit down, then multiplexed RZ for the phases.
pub fn amplitude_encode(v: &AmplitudeVector) -> Result<Circuit, EncodeError> {
    let n = v.n_qubits();
    let amps = v.amplitudes();
    let mut c = Circuit::new(n).with_label(EncodingClass::Amplitude);

    let mag: Vec<f64> = amps.iter().map(|a| a.norm_sqr()).collect();
    // Magnitude tree. Qubit q is conditioned on the values of qubits q+1..n.
    for q in (0..n).rev() {
        let controls: Vec<usize> = (q + 1..n).collect();
        let low = 1usize << q;
        let angles: Vec<f64> = (0..1usize << controls.len())
            .map(|j| {
                let (mut p0, mut p1) = (0.0, 0.0);
                for r in 0..low {
                    let base = (j << (q + 1)) | r;
                    p0 += mag[base];
                    p1 += mag[base | low];
                }
                2.0 * p1.sqrt().atan2(p0.sqrt())
            })
            .collect();
        push_multiplexed(&mut c, GateKind::RY, q, &controls, &angles);
    }

    // Phase diagonal, peeled one qubit at a time from the bottom.
    let mut phases: Vec<f64> = amps.iter().map(|a| a.arg()).collect();
    for q in 0..n {
        let controls: Vec<usize> = (q + 1..n).collect();
        let angles: Vec<f64> = phases.chunks(2).map(|p| p[1] - p[0]).collect();
        phases = phases.chunks(2).map(|p| (p[0] + p[1]) / 2.0).collect();
        push_multiplexed(&mut c, GateKind::RZ, q, &controls, &angles);
    }
    Ok(c)
}

/// Random encoding circuit for `class` on `n` qubits. Pure in `(class, n, seed)`.
pub fn sample_encoding(
    class: EncodingClass,
    n: usize,
    seed: u64,
    amplitude_kind: AmplitudeKind,
) -> Result<Circuit, EncodeError> {
    if n == 0 {
        return Err(EncodeError::Empty);
    }
    let mut rng = rng_from_seed(derive_seed(seed, &[class.index() as u64]));
    let mut c = match class {
        EncodingClass::Basis => {
            let bits: Vec<u8> = (0..n).map(|_| rng.gen_range(0..=1u8)).collect();
            basis_encode(&bits)?
        }
        EncodingClass::AngleRX | EncodingClass::AngleRY | EncodingClass::AngleRZ => {
            let axis = match class {
                EncodingClass::AngleRX => Axis::X,
                EncodingClass::AngleRY => Axis::Y,
                _ => Axis::Z,
            };
            let features = sample_features(n, &mut rng);
            angle_encode(&features, axis)?
        }
        EncodingClass::Amplitude => {
            let s = rng.gen::<u64>();
            let v = match amplitude_kind {
                AmplitudeKind::Complex => haar_random_state(n, s),
                AmplitudeKind::Real => real_random_state(n, s),
            };
            amplitude_encode(&v)?
        }
    };
    c.meta.insert("encoding_seed".into(), seed.to_string());
    Ok(c)
}

/// `n` features drawn from U[0, 2π).
pub fn sample_features<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(0.0..TAU)).collect()
}

/// The amplitude vector `sample_encoding(Amplitude, n, seed, kind)` prepares.
pub fn sampled_amplitudes(n: usize, seed: u64, kind: AmplitudeKind) -> AmplitudeVector {
    let mut rng = rng_from_seed(derive_seed(
        seed,
        &[EncodingClass::Amplitude.index() as u64],
    ));
    let s = rng.gen::<u64>();
    match kind {
        AmplitudeKind::Complex => haar_random_state(n, s),
        AmplitudeKind::Real => real_random_state(n, s),
    }
}
