//! Cat-state benchmark harness: stick spectra, the fidelity ratio F,
//! coherence-order selection, pseudo-pure preparation, randomized error
//! suppression and the methyl spin-½ selection experiment.

mod methyl;
mod run;
mod spectrum;

use std::f64::consts::TAU;

use num_complex::Complex64 as C64;
use thiserror::Error;

pub use methyl::{
    methyl_search, methyl_selected_state, methyl_thermal_state, methyl_verification_spectra, spin32_projector,
    spin32_residual, MethylSearch, MethylVerification,
};
pub use run::{
    benchmark_networks, cascade_order, decoding_fidelity_bound_check, pseudo_pure_prepare, randomized_suppression, run_cat_benchmark,
    suppression_curve, BenchmarkConfig, BenchmarkResult, BoundCheck, GateErrorReport, Labeling, Level, PeakRow,
    PseudoPure, Suppression, SuppressionPoint, HARDWARE_REFERENCE_F,
};
pub use spectrum::{fidelity_f, reference_spectrum, simulate_spectrum, FidelityReport, Peak, Spectrum};

use crate::netir::NetError;
use crate::pulsec::PulsecError;
use crate::qsim::QsimError;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("reference peak amplitude {0:.3e} is too small for a ratio")]
    UndefinedReference(f64),
    #[error("spectra are for different spins or systems")]
    SpectrumMismatch,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("no coupled chain of {n} spins starting at spin {start}")]
    NoChain { n: usize, start: usize },
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Pulsec(#[from] PulsecError),
    #[error(transparent)]
    Qsim(#[from] QsimError),
}

/// Result of a `2n+1` step phase cycle.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseCycle {
    pub phases: Vec<f64>,
    pub o_k: Vec<C64>,
    pub o: C64,
}

/// Cycle phases `φ_k = 2πk/(2n+1)`.
pub fn cycle_phases(n: usize) -> Vec<f64> {
    let m = 2 * n + 1;
    (0..m).map(|k| TAU * k as f64 / m as f64).collect()
}

/// Run `run(φ_k)` for the `2n+1` cycle phases and combine
/// `o = Σ_k o_k e^{-i n φ_k}`, which keeps only order-`n` signal.
pub fn phase_cycle_select<E>(n: usize, mut run: impl FnMut(usize, f64) -> Result<C64, E>) -> Result<PhaseCycle, E> {
    let phases = cycle_phases(n);
    let mut o_k = Vec::with_capacity(phases.len());
    for (k, &phi) in phases.iter().enumerate() {
        o_k.push(run(k, phi)?);
    }
    let o = o_k.iter().zip(&phases).map(|(v, &phi)| v * C64::from_polar(1.0, -(n as f64) * phi)).sum();
    Ok(PhaseCycle { phases, o_k, o })
}
