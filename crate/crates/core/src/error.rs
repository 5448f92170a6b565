//! Error types shared across the simulator.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("requested {requested} qubits, engine capacity is 1..={max}")]
    CapacityExceeded { requested: usize, max: usize },

    #[error("qubit index {qubit} out of range for {num_qubits}-qubit register")]
    QubitOutOfRange { qubit: usize, num_qubits: usize },

    #[error("control and target are the same qubit {qubit}")]
    ControlEqualsTarget { qubit: usize },

    #[error("state dimension mismatch: {left} vs {right} qubits")]
    DimensionMismatch { left: usize, right: usize },

    #[error("sampled measurement branch on qubit {qubit} has probability {probability:.3e}")]
    ProjectionUnderflow { qubit: usize, probability: f64 },

    #[error("ancilla qubit {qubit} not reset before measurement (excited probability {excited_probability:.3e})")]
    AncillaNotReset { qubit: usize, excited_probability: f64 },
}

#[derive(Debug, Error)]
pub enum AlgebraError {
    #[error("SU(2) parameters must be finite, got gamma={gamma} theta={theta} phi={phi}")]
    NonFiniteParams { gamma: f64, theta: f64, phi: f64 },

    #[error("target amplitudes must not both be zero")]
    ZeroTarget,
}

#[derive(Debug, Error)]
pub enum LatticeError {
    #[error("code distance {distance} unsupported, expected 2..=4")]
    DistanceOutOfRange { distance: usize },

    #[error("chain-member qubits {qubits:?} do not form the x-chain of the layout")]
    InvalidChainSpec { qubits: Vec<usize> },
}

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Engine(#[from] EngineError),

    #[error(transparent)]
    Lattice(#[from] LatticeError),

    #[error("exhaustive trajectory enumeration refused for distance {distance} ({branches} branches); pass allow_large=true")]
    TableTooLarge { distance: usize, branches: usize },

    #[error("restart limit {limit} exhausted")]
    RestartLimitExhausted { limit: u32 },
}

#[derive(Debug, Error)]
pub enum SurgeryError {
    #[error(transparent)]
    Engine(#[from] EngineError),

    #[error(transparent)]
    Lattice(#[from] LatticeError),

    #[error("no valid seam tiling found for distance {distance} ({detail})")]
    SeamConstruction { distance: usize, detail: String },

    #[error("no split correction found for violated tiles {violated:?}")]
    NoSplitCorrection { violated: Vec<usize> },
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Malformed { line: usize, text: String },

    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },

    #[error("line {line}: invalid value `{value}` for `{key}`: {reason}")]
    InvalidValue {
        line: usize,
        key: String,
        value: String,
        reason: String,
    },

    #[error("missing required key `{key}`")]
    MissingKey { key: String },

    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Error)]
pub enum SweepError {
    #[error(transparent)]
    Protocol(#[from] ProtocolError),

    #[error("cannot write output {path}: {source}")]
    Output {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("empty record set, nothing to emit")]
    NoRecords,
}
