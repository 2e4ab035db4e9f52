use thiserror::Error;

use crate::circuit::GateKind;

#[derive(Debug, Error, PartialEq)]
pub enum CircuitError {
    #[error("a circuit needs at least one qubit")]
    ZeroQubits,
    #[error("unknown gate kind `{0}`")]
    UnknownGate(String),
    #[error("unknown encoding label `{0}`")]
    UnknownLabel(String),
    #[error("{kind} takes {expected} qubit operand(s), got {got}")]
    Arity {
        kind: GateKind,
        expected: usize,
        got: usize,
    },
    #[error("{kind} names qubit {qubit} more than once")]
    DuplicateOperand { kind: GateKind, qubit: usize },
    #[error("qubit {qubit} out of range for a {n_qubits}-qubit circuit")]
    QubitOutOfRange { qubit: usize, n_qubits: usize },
    #[error("{kind} takes {expected} parameter(s), got {got}")]
    ParamCount {
        kind: GateKind,
        expected: usize,
        got: usize,
    },
    #[error("qubit count mismatch: {left} vs {right}")]
    QubitCountMismatch { left: usize, right: usize },
}

/// Failure while reading a serialized circuit.
#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("instruction {index}, field `{field}`: {source}")]
    Instruction {
        index: usize,
        field: &'static str,
        source: CircuitError,
    },
    #[error("field `{field}`: {source}")]
    Field {
        field: &'static str,
        source: CircuitError,
    },
    #[error("line {line}: unsupported gate `{name}`")]
    UnsupportedGate { line: usize, name: String },
    #[error("line {line}: {message}")]
    Qasm { line: usize, message: String },
}

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("dimension mismatch: {left} vs {right} qubits")]
    Dimension { left: usize, right: usize },
    #[error("{0} qubits exceeds the statevector limit")]
    TooLarge(usize),
    #[error("permutation is not a bijection on {0} qubits")]
    BadPermutation(usize),
}

#[derive(Debug, Error, PartialEq)]
pub enum EncodeError {
    #[error("input must be nonempty")]
    Empty,
    #[error("amplitude vector norm deviates from 1 by {0:e}")]
    NotNormalized(f64),
    #[error("dimension {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("bit value {0} is not 0 or 1")]
    BadBit(u8),
    #[error("{gate} needs at least {needed} qubits, circuit has {n_qubits}")]
    TooFewQubits {
        gate: String,
        needed: usize,
        n_qubits: usize,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

#[derive(Debug, Error, PartialEq)]
pub enum TranspileError {
    #[error("{0} is not a one-qubit gate")]
    NotOneQubit(GateKind),
    #[error("{0} has no two-qubit decomposition")]
    Unsupported2q(GateKind),
    #[error("route: expected only CX two-qubit gates, found {0}")]
    NotLowered(GateKind),
    #[error("no path between physical qubits {0} and {1} in the coupling map")]
    Unroutable(usize, usize),
    #[error("coupling map covers {map} qubits, circuit has {circuit}")]
    MapTooSmall { map: usize, circuit: usize },
    #[error("edge ({0}, {1}) is invalid")]
    BadEdge(usize, usize),
    #[error("unknown coupling preset `{0}`")]
    UnknownPreset(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum FeatureError {
    #[error("instruction {index} is {kind}, which is outside the hardware basis")]
    NonBasisGate { index: usize, kind: GateKind },
}
