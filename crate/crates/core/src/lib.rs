//! Circuit-side machinery for studying the encoding side channel of quantum
//! neural networks: a small circuit IR, a statevector oracle, the five data
//! encoders, randomized PQC blocks, a basis-gate transpiler, structural
//! fingerprints and the transient obfuscation defense.

pub mod circuit;
pub mod defense;
pub mod encoding;
pub mod error;
pub mod fingerprint;
pub mod pqc;
pub mod seed;
pub mod serialize;
pub mod statevector;
pub mod transpile;

pub use circuit::{Circuit, EncodingClass, GateCounts, GateKind, Instruction};
pub use error::{CircuitError, EncodeError, FeatureError, ParseError, SimError, TranspileError};
