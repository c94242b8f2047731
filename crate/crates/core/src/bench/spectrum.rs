use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::BenchError;
use crate::qsim::{DeviationMatrix, PauliString, QsimError};
use crate::spinsys::SpinSystem;

/// One stick: the single-quantum coherence of the observed spin with every
/// other spin in basis configuration `config`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    /// Bits of the other spins in index order, most significant first.
    pub config: usize,
    pub frequency_hz: f64,
    pub amplitude: C64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub n: usize,
    pub observed: usize,
    pub peaks: Vec<Peak>,
    /// Display-only line width.
    pub linewidth_hz: Option<f64>,
}

impl Spectrum {
    /// Peak whose spectators are all `|0⟩`.
    pub fn target(&self) -> &Peak {
        &self.peaks[0]
    }

    pub fn config_bits(&self, config: usize) -> String {
        let m = self.n - 1;
        (0..m).map(|k| if (config >> (m - 1 - k)) & 1 == 1 { '1' } else { '0' }).collect()
    }

    pub fn total_power(&self) -> f64 {
        self.peaks.iter().map(|p| p.amplitude.norm_sqr()).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("config_bits,frequency_hz,amp_re,amp_im\n");
        for p in &self.peaks {
            let bits = self.config_bits(p.config);
            let _ = writeln!(s, "{},{},{},{}", if bits.is_empty() { "-".into() } else { bits }, p.frequency_hz, p.amplitude.re, p.amplitude.im);
        }
        s
    }
}

/// Stick spectrum of `system.observed`: for each configuration `c` of the
/// other spins, a peak at `ν_s + Σ_j ±J_sj/2` (`+` for `|0⟩`) carrying the
/// element `⟨c,1_s| ρ |c,0_s⟩`.
pub fn simulate_spectrum(state: &DeviationMatrix, system: &SpinSystem) -> Result<Spectrum, BenchError> {
    let n = system.n();
    if state.n() != n {
        return Err(QsimError::QubitMismatch { expected: n, got: state.n() }.into());
    }
    let s = system.observed;
    let others: Vec<usize> = (0..n).filter(|&k| k != s).collect();
    let mut peaks = Vec::with_capacity(1 << others.len());
    for config in 0..(1usize << others.len()) {
        let mut base = 0usize;
        let mut freq = system.shift_hz(s);
        for (pos, &k) in others.iter().enumerate() {
            let bit = (config >> (others.len() - 1 - pos)) & 1;
            base |= bit << (n - 1 - k);
            freq += if bit == 0 { 0.5 } else { -0.5 } * system.j_hz(s, k);
        }
        let one = base | (1 << (n - 1 - s));
        peaks.push(Peak { config, frequency_hz: freq, amplitude: state.get(one, base) });
    }
    Ok(Spectrum { n, observed: s, peaks, linewidth_hz: None })
}

/// Spectrum after a 90° pulse about y on `σz` of the observed spin, which
/// leaves `σx` and unit peaks everywhere.
pub fn reference_spectrum(system: &SpinSystem) -> Result<Spectrum, BenchError> {
    let n = system.n();
    let mut rho = DeviationMatrix::from_pauli(&[PauliString::single(n, system.observed, crate::qsim::Pauli::Z, 1.0)])?;
    rho.rotate(system.observed, FRAC_PI_2, FRAC_PI_2)?;
    simulate_spectrum(&rho, system)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    /// `|final target| / |reference target|`.
    pub f: f64,
    /// Target amplitude projected on the reference phase.
    pub f_phased: f64,
    pub target_final: C64,
    pub target_reference: C64,
    /// Largest off-target peak magnitude, in reference units.
    pub off_target_residual: f64,
}

/// Ratio of the all-spectators-`|0⟩` peak of `final` to the same peak of
/// `reference`.
pub fn fidelity_f(final_: &Spectrum, reference: &Spectrum) -> Result<FidelityReport, BenchError> {
    if final_.n != reference.n || final_.observed != reference.observed || final_.peaks.len() != reference.peaks.len() {
        return Err(BenchError::SpectrumMismatch);
    }
    let r = reference.target().amplitude;
    if r.norm() < 1e-12 {
        return Err(BenchError::UndefinedReference(r.norm()));
    }
    let t = final_.target().amplitude;
    let off = final_.peaks[1..].iter().map(|p| p.amplitude.norm()).fold(0.0, f64::max) / r.norm();
    Ok(FidelityReport {
        f: t.norm() / r.norm(),
        f_phased: (t * r.conj()).re / r.norm_sqr(),
        target_final: t,
        target_reference: r,
        off_target_residual: off,
    })
}
