//! Pulse-sequence compiler: shaped-pulse decomposition, refocusing plans,
//! delay optimization, frame tracking and replay on the simulator.

mod compile;
mod refocus;
mod shape;

use thiserror::Error;

pub use compile::{
    compile, simulate_sequence, CompileOptions, CompilerReport, Event, FrameTracker, PairRow, PulseModel, PulseSequence,
    SegmentReport, TimedEvent,
};
pub use refocus::{
    estimate_retention, exhaustive_plan, insert_refocusing, optimize_delays, walsh_rows, DelaySolution, PairTerm,
    RefocusOptions, RefocusPlan,
};
pub use shape::{
    decompose_all, decompose_pair, decompose_shaped_pulse, decomposition_unitary, gauss90_1ms, shaped_propagator,
    DecompositionCache, DecompositionTable, PulseDecomposition, ShapedPulse, GAUSS90_1MS,
};

use crate::netir::NetError;
use crate::qsim::QsimError;

#[derive(Debug, Error)]
pub enum PulsecError {
    #[error("shape {name}, line {line}: {message}")]
    ShapeParse { name: String, line: usize, message: String },
    #[error("pulse {0} has zero duration")]
    ZeroDuration(String),
    #[error("spin {spin} out of range for {n} spins")]
    SpinOutOfRange { spin: usize, n: usize },
    #[error("expected a two-spin system, got {0} spins")]
    NotAPair(usize),
    #[error("fit failed: {0}")]
    Fit(String),
    #[error("network has {network} spins but the system has {system}")]
    SizeMismatch { network: usize, system: usize },
    #[error("gate {index} ({gate}) cannot be compiled")]
    Unsupported { index: usize, gate: String },
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Qsim(#[from] QsimError),
}
