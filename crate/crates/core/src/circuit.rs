//! Circuit IR shared by every stage of the pipeline.
//!
//! A [`Circuit`] is a flat, single-register instruction list. Angles are stored
//! exactly as given (radians, `f64`); nothing here normalizes them.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::CircuitError;

/// Gate vocabulary of the IR.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GateKind {
    X,
    SX,
    H,
    RX,
    RY,
    RZ,
    CX,
    CRX,
    CRY,
    CRZ,
    SWAP,
    BARRIER,
}

impl GateKind {
    pub const ALL: [GateKind; 12] = [
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
        GateKind::BARRIER,
    ];

    /// The hardware basis every circuit is lowered to.
    pub const BASIS: [GateKind; 4] = [GateKind::X, GateKind::SX, GateKind::RZ, GateKind::CX];

    /// Fixed operand count, `None` for barriers (which span any nonempty set).
    pub fn arity(self) -> Option<usize> {
        match self {
            GateKind::X
            | GateKind::SX
            | GateKind::H
            | GateKind::RX
            | GateKind::RY
            | GateKind::RZ => Some(1),
            GateKind::CX | GateKind::CRX | GateKind::CRY | GateKind::CRZ | GateKind::SWAP => {
                Some(2)
            }
            GateKind::BARRIER => None,
        }
    }

    pub fn num_params(self) -> usize {
        match self {
            GateKind::RX
            | GateKind::RY
            | GateKind::RZ
            | GateKind::CRX
            | GateKind::CRY
            | GateKind::CRZ => 1,
            _ => 0,
        }
    }

    pub fn is_basis(self) -> bool {
        Self::BASIS.contains(&self)
    }

    pub fn is_controlled(self) -> bool {
        matches!(
            self,
            GateKind::CX | GateKind::CRX | GateKind::CRY | GateKind::CRZ
        )
    }

    /// Upper-case IR name, as used in the JSON schema.
    pub fn name(self) -> &'static str {
        match self {
            GateKind::X => "X",
            GateKind::SX => "SX",
            GateKind::H => "H",
            GateKind::RX => "RX",
            GateKind::RY => "RY",
            GateKind::RZ => "RZ",
            GateKind::CX => "CX",
            GateKind::CRX => "CRX",
            GateKind::CRY => "CRY",
            GateKind::CRZ => "CRZ",
            GateKind::SWAP => "SWAP",
            GateKind::BARRIER => "BARRIER",
        }
    }

    /// Lower-case OpenQASM 2.0 name.
    pub fn qasm_name(self) -> &'static str {
        match self {
            GateKind::X => "x",
            GateKind::SX => "sx",
            GateKind::H => "h",
            GateKind::RX => "rx",
            GateKind::RY => "ry",
            GateKind::RZ => "rz",
            GateKind::CX => "cx",
            GateKind::CRX => "crx",
            GateKind::CRY => "cry",
            GateKind::CRZ => "crz",
            GateKind::SWAP => "swap",
            GateKind::BARRIER => "barrier",
        }
    }

    pub fn from_qasm_name(name: &str) -> Option<GateKind> {
        GateKind::ALL.into_iter().find(|k| k.qasm_name() == name)
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GateKind {
    type Err = CircuitError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        GateKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| CircuitError::UnknownGate(s.to_string()))
    }
}

/// The five encoding classes, in canonical label order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EncodingClass {
    Amplitude,
    Basis,
    AngleRX,
    AngleRY,
    AngleRZ,
}

impl EncodingClass {
    pub const ALL: [EncodingClass; 5] = [
        EncodingClass::Amplitude,
        EncodingClass::Basis,
        EncodingClass::AngleRX,
        EncodingClass::AngleRY,
        EncodingClass::AngleRZ,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<EncodingClass> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            EncodingClass::Amplitude => "Amplitude",
            EncodingClass::Basis => "Basis",
            EncodingClass::AngleRX => "AngleRX",
            EncodingClass::AngleRY => "AngleRY",
            EncodingClass::AngleRZ => "AngleRZ",
        }
    }

    /// Short row label used in report tables.
    pub fn short_name(self) -> &'static str {
        match self {
            EncodingClass::Amplitude => "Amplitude",
            EncodingClass::Basis => "Basis",
            EncodingClass::AngleRX => "Rx",
            EncodingClass::AngleRY => "Ry",
            EncodingClass::AngleRZ => "Rz",
        }
    }
}

impl fmt::Display for EncodingClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EncodingClass {
    type Err = CircuitError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EncodingClass::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| CircuitError::UnknownLabel(s.to_string()))
    }
}

/// One gate application. For controlled gates `qubits[0]` is the control.
#[derive(Debug, Clone, PartialEq)]
pub struct Instruction {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
    pub params: Vec<f64>,
}

impl Instruction {
    pub fn new(kind: GateKind, qubits: Vec<usize>, params: Vec<f64>) -> Self {
        Instruction {
            kind,
            qubits,
            params,
        }
    }

    pub fn one(kind: GateKind, q: usize) -> Self {
        Instruction::new(kind, vec![q], Vec::new())
    }

    pub fn rot(kind: GateKind, q: usize, theta: f64) -> Self {
        Instruction::new(kind, vec![q], vec![theta])
    }

    pub fn two(kind: GateKind, control: usize, target: usize) -> Self {
        Instruction::new(kind, vec![control, target], Vec::new())
    }

    pub fn barrier(qubits: impl IntoIterator<Item = usize>) -> Self {
        Instruction::new(GateKind::BARRIER, qubits.into_iter().collect(), Vec::new())
    }

    pub fn angle(&self) -> Option<f64> {
        self.params.first().copied()
    }

    /// Checks operand and parameter invariants against a register width.
    pub fn validate(&self, n_qubits: usize) -> Result<(), CircuitError> {
        match self.kind.arity() {
            Some(a) if self.qubits.len() != a => {
                return Err(CircuitError::Arity {
                    kind: self.kind,
                    expected: a,
                    got: self.qubits.len(),
                })
            }
            None if self.qubits.is_empty() => {
                return Err(CircuitError::Arity {
                    kind: self.kind,
                    expected: 1,
                    got: 0,
                })
            }
            _ => {}
        }
        for (i, &q) in self.qubits.iter().enumerate() {
            if q >= n_qubits {
                return Err(CircuitError::QubitOutOfRange { qubit: q, n_qubits });
            }
            if self.qubits[..i].contains(&q) {
                return Err(CircuitError::DuplicateOperand {
                    kind: self.kind,
                    qubit: q,
                });
            }
        }
        if self.params.len() != self.kind.num_params() {
            return Err(CircuitError::ParamCount {
                kind: self.kind,
                expected: self.kind.num_params(),
                got: self.params.len(),
            });
        }
        Ok(())
    }
}

/// Ordered instruction list over `n_qubits` qubits plus label and provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    n_qubits: usize,
    instructions: Vec<Instruction>,
    pub label: Option<EncodingClass>,
    pub meta: BTreeMap<String, String>,
}

impl Circuit {
    /// Empty circuit. Panics if `n_qubits` is zero.
    pub fn new(n_qubits: usize) -> Self {
        assert!(n_qubits > 0, "a circuit needs at least one qubit");
        Circuit {
            n_qubits,
            instructions: Vec::new(),
            label: None,
            meta: BTreeMap::new(),
        }
    }

    pub fn with_label(mut self, label: EncodingClass) -> Self {
        self.label = Some(label);
        self
    }

    /// Builds a circuit from parts, validating every instruction.
    pub fn from_instructions(
        n_qubits: usize,
        instructions: Vec<Instruction>,
    ) -> Result<Self, CircuitError> {
        if n_qubits == 0 {
            return Err(CircuitError::ZeroQubits);
        }
        for inst in &instructions {
            inst.validate(n_qubits)?;
        }
        Ok(Circuit {
            n_qubits,
            instructions,
            label: None,
            meta: BTreeMap::new(),
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn instructions(&self) -> &[Instruction] {
        &self.instructions
    }

    pub fn len(&self) -> usize {
        self.instructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instructions.is_empty()
    }

    pub fn into_instructions(self) -> Vec<Instruction> {
        self.instructions
    }

    pub fn push(&mut self, inst: Instruction) -> Result<&mut Self, CircuitError> {
        inst.validate(self.n_qubits)?;
        self.instructions.push(inst);
        Ok(self)
    }

    /// Appends every instruction of `other`, which must have the same width.
    pub fn extend_from(&mut self, other: &Circuit) -> Result<&mut Self, CircuitError> {
        if other.n_qubits != self.n_qubits {
            return Err(CircuitError::QubitCountMismatch {
                left: self.n_qubits,
                right: other.n_qubits,
            });
        }
        self.instructions.extend(other.instructions.iter().cloned());
        Ok(self)
    }

    /// Same circuit with a different instruction list (label and meta kept).
    /// Instructions are trusted to be valid for this width.
    pub(crate) fn with_instructions(&self, instructions: Vec<Instruction>) -> Circuit {
        debug_assert!(instructions
            .iter()
            .all(|i| i.validate(self.n_qubits).is_ok()));
        Circuit {
            n_qubits: self.n_qubits,
            instructions,
            label: self.label,
            meta: self.meta.clone(),
        }
    }

    fn add(&mut self, inst: Instruction) -> &mut Self {
        if let Err(e) = inst.validate(self.n_qubits) {
            panic!("invalid instruction {inst:?}: {e}");
        }
        self.instructions.push(inst);
        self
    }

    pub fn x(&mut self, q: usize) -> &mut Self {
        self.add(Instruction::one(GateKind::X, q))
    }

    pub fn sx(&mut self, q: usize) -> &mut Self {
        self.add(Instruction::one(GateKind::SX, q))
    }

    pub fn h(&mut self, q: usize) -> &mut Self {
        self.add(Instruction::one(GateKind::H, q))
    }

    pub fn rx(&mut self, q: usize, theta: f64) -> &mut Self {
        self.add(Instruction::rot(GateKind::RX, q, theta))
    }

    pub fn ry(&mut self, q: usize, theta: f64) -> &mut Self {
        self.add(Instruction::rot(GateKind::RY, q, theta))
    }

    pub fn rz(&mut self, q: usize, theta: f64) -> &mut Self {
        self.add(Instruction::rot(GateKind::RZ, q, theta))
    }

    pub fn cx(&mut self, control: usize, target: usize) -> &mut Self {
        self.add(Instruction::two(GateKind::CX, control, target))
    }

    pub fn swap(&mut self, a: usize, b: usize) -> &mut Self {
        self.add(Instruction::two(GateKind::SWAP, a, b))
    }

    pub fn barrier_all(&mut self) -> &mut Self {
        let n = self.n_qubits;
        self.add(Instruction::barrier(0..n))
    }

    /// ASAP layer count. Barriers synchronize their qubits but add no layer.
    pub fn depth(&self) -> usize {
        let mut frontier = vec![0usize; self.n_qubits];
        for inst in &self.instructions {
            let level = inst.qubits.iter().map(|&q| frontier[q]).max().unwrap_or(0);
            let level = if inst.kind == GateKind::BARRIER {
                level
            } else {
                level + 1
            };
            for &q in &inst.qubits {
                frontier[q] = level;
            }
        }
        frontier.into_iter().max().unwrap_or(0)
    }

    pub fn gate_counts(&self) -> GateCounts {
        let mut counts = GateCounts::default();
        for inst in &self.instructions {
            counts.0[inst.kind as usize] += 1;
        }
        counts
    }

    /// Copy with every barrier removed.
    pub fn without_barriers(&self) -> Circuit {
        self.with_instructions(
            self.instructions
                .iter()
                .filter(|i| i.kind != GateKind::BARRIER)
                .cloned()
                .collect(),
        )
    }
}

/// Per-kind instruction counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GateCounts([usize; 12]);

impl GateCounts {
    pub fn get(&self, kind: GateKind) -> usize {
        self.0[kind as usize]
    }

    /// Total over all non-barrier kinds.
    pub fn total_gates(&self) -> usize {
        GateKind::ALL
            .into_iter()
            .filter(|&k| k != GateKind::BARRIER)
            .map(|k| self.get(k))
            .sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (GateKind, usize)> + '_ {
        GateKind::ALL.into_iter().map(|k| (k, self.get(k)))
    }
}
