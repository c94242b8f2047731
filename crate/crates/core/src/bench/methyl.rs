use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::spectrum::{simulate_spectrum, Spectrum};
use super::BenchError;
use crate::linalg::CMatrix;
use crate::netir::{methyl_coupling, methyl_selection_network, propagate, Gate, Network};
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::qsim::{DeviationMatrix, Pauli, PauliString};
use crate::spinsys::SpinSystem;

const PROTONS: usize = 3;
const CARBON: usize = 3;

fn permute_bits(a: usize, perm: [usize; 3]) -> usize {
    // spins 0..3 are bits 3..1 of a 4-spin index; the carbon (bit 0) stays
    let bit = |k: usize| (a >> (3 - k)) & 1;
    (bit(perm[0]) << 3) | (bit(perm[1]) << 2) | (bit(perm[2]) << 1) | (a & 1)
}

/// Projector onto total proton spin 3/2 (the symmetric subspace of the three
/// protons) times the identity on the carbon.
pub fn spin32_projector() -> CMatrix {
    let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut p = CMatrix::zeros(16);
    for perm in perms {
        for a in 0..16 {
            let b = permute_bits(a, perm);
            p.set(b, a, p.get(b, a) + C64::new(1.0 / 6.0, 0.0));
        }
    }
    p
}

/// `‖P ρ P‖ / ‖ρ‖` with `P` the proton spin-3/2 projector.
pub fn spin32_residual(state: &DeviationMatrix, system: &SpinSystem) -> Result<f64, BenchError> {
    methyl_coupling(system)?;
    if state.n() != 4 {
        return Err(BenchError::InvalidArgument(format!("methyl state must have 4 spins, got {}", state.n())));
    }
    let norm = state.frobenius_norm();
    if norm == 0.0 {
        return Ok(0.0);
    }
    let p = spin32_projector();
    Ok(p.matmul(state.matrix()).matmul(&p).frobenius_norm() / norm)
}

/// Proton polarization `Σ σz` of the methyl group; carbon signal is assumed
/// already removed.
pub fn methyl_thermal_state() -> DeviationMatrix {
    let terms: Vec<PauliString> = (0..PROTONS).map(|h| PauliString::single(4, h, Pauli::Z, 1.0)).collect();
    DeviationMatrix::from_pauli(&terms).expect("four spins")
}

pub fn methyl_selected_state(system: &SpinSystem, delays_s: [f64; 3]) -> Result<DeviationMatrix, BenchError> {
    Ok(propagate(&methyl_selection_network(system, delays_s)?, &methyl_thermal_state())?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethylSearch {
    pub delays_s: [f64; 3],
    /// Coupling angles `π J τ` of the delays.
    pub angles: [f64; 3],
    pub residual: f64,
    /// `‖ρ‖ / ‖ρ_thermal‖` after selection.
    pub retained: f64,
    pub evaluations: usize,
}

fn delays_from_angles(j: f64, angles: &[f64]) -> [f64; 3] {
    let period = 2.0 / j.abs();
    let mut d = [0.0; 3];
    for (k, &a) in angles.iter().enumerate() {
        d[k] = (a / (PI * j)).rem_euclid(period);
    }
    d
}

/// Grid search over the three coupling angles followed by simplex
/// refinement, minimizing the spin-3/2 weight left after the selection
/// template while keeping spin-½ signal.
pub fn methyl_search(system: &SpinSystem, grid: usize) -> Result<MethylSearch, BenchError> {
    let j = methyl_coupling(system)?;
    if grid < 2 {
        return Err(BenchError::InvalidArgument("grid needs at least 2 points per axis".into()));
    }
    let p = spin32_projector();
    let thermal = methyl_thermal_state();
    let evals = std::cell::Cell::new(0usize);
    let cost = |x: &[f64]| -> f64 {
        evals.set(evals.get() + 1);
        let rho = methyl_selected_state(system, delays_from_angles(j, x)).expect("validated methyl system");
        let inside = p.matmul(rho.matrix()).matmul(&p).frobenius_norm().powi(2);
        let total = rho.frobenius_norm().powi(2);
        inside / (total - inside + 1e-2)
    };
    let axis: Vec<f64> = (0..grid).map(|k| PI * k as f64 / grid as f64).collect();
    let mut scored = Vec::with_capacity(grid * grid * grid);
    for &a in &axis {
        for &b in &axis {
            for &c in &axis {
                let x = [a, b, c];
                scored.push((cost(&x), x));
            }
        }
    }
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    let opts = NelderMeadOptions { step: PI / (4.0 * grid as f64), xtol: 1e-13, ftol: 1e-30, max_iter: 20_000 };
    let mut best: Option<(f64, Vec<f64>)> = None;
    for (_, x0) in scored.iter().take(5) {
        let r = nelder_mead(cost, x0, opts);
        if best.as_ref().is_none_or(|b| r.f < b.0) {
            best = Some((r.f, r.x));
        }
    }
    let (_, x) = best.expect("grid is nonempty");
    let angles = [x[0].rem_euclid(TAU), x[1].rem_euclid(TAU), x[2].rem_euclid(TAU)];
    let delays_s = delays_from_angles(j, &x);
    let rho = methyl_selected_state(system, delays_s)?;
    Ok(MethylSearch {
        delays_s,
        angles,
        residual: spin32_residual(&rho, system)?,
        retained: rho.frobenius_norm() / thermal.frobenius_norm(),
        evaluations: evals.get(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethylVerification {
    pub angle: f64,
    pub delay_s: f64,
    pub spectrum: Spectrum,
    /// Largest peak in the proton configurations `000` and `111`.
    pub extreme_max: f64,
    pub max_peak: f64,
}

/// Transfer proton polarization in `state` to the carbon (90° on the
/// protons, a coupling delay of angle `θ`, then 90° on protons and carbon)
/// and record the carbon spectrum, once per angle.
pub fn methyl_verification_spectra(system: &SpinSystem, state: &DeviationMatrix, angles: &[f64]) -> Result<Vec<MethylVerification>, BenchError> {
    let j = methyl_coupling(system)?;
    if system.observed != CARBON {
        return Err(BenchError::InvalidArgument("methyl spectra are read on the carbon".into()));
    }
    angles
        .iter()
        .map(|&theta| {
            let mut net = Network::new(4);
            for h in 0..PROTONS {
                net.push(Gate::Rotation { spin: h, phase: 0.0, angle: FRAC_PI_2 });
            }
            for h in 0..PROTONS {
                net.push(Gate::ZZ { i: h, j: CARBON, theta });
            }
            for h in 0..PROTONS {
                net.push(Gate::Rotation { spin: h, phase: FRAC_PI_2, angle: FRAC_PI_2 });
            }
            net.push(Gate::Rotation { spin: CARBON, phase: 0.0, angle: FRAC_PI_2 });
            let out = propagate(&net, state)?;
            let spectrum = simulate_spectrum(&out, system)?;
            let extreme_max = spectrum
                .peaks
                .iter()
                .filter(|p| p.config == 0 || p.config == 0b111)
                .map(|p| p.amplitude.norm())
                .fold(0.0, f64::max);
            let max_peak = spectrum.peaks.iter().map(|p| p.amplitude.norm()).fold(0.0, f64::max);
            Ok(MethylVerification { angle: theta, delay_s: (theta / (PI * j)).rem_euclid(2.0 / j.abs()), spectrum, extreme_max, max_peak })
        })
        .collect()
}
