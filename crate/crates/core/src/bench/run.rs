use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::spectrum::{fidelity_f, reference_spectrum, simulate_spectrum, Spectrum};
use super::{phase_cycle_select, BenchError};
use crate::linalg::CMatrix;
use crate::netir::{cat_decode_network, cat_encode_network, propagate_with, pseudo_pure_target, Gate, Network};
use crate::pulsec::{compile, simulate_sequence, CompileOptions, DecompositionCache, PulseSequence};
use crate::qsim::{DeviationMatrix, NoiseModel, NoiseSettings, Pauli, PauliString};
use crate::spinsys::SpinSystem;

/// Fidelity and its uncertainty reported for the seven-spin hardware run.
/// Kept for comparison output only.
pub const HARDWARE_REFERENCE_F: (f64, f64) = (0.73, 0.02);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Level {
    Ideal,
    Compiled,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Labeling {
    PhaseCycle,
    Gradient,
}

#[derive(Clone, Debug)]
pub struct BenchmarkConfig {
    pub n: usize,
    pub level: Level,
    pub labeling: Labeling,
    pub noise: NoiseSettings,
    /// Noise replicates, seeded `seed, seed+1, …`; F_uncertainty is their
    /// sample standard deviation.
    pub replicates: usize,
    /// Apply cycle phases as frame shifts of the decode pulses instead of
    /// explicit z rotations.
    pub frame_shift: bool,
    /// Draw fresh noise per cycle step instead of repeating one seed.
    pub independent_seeds: bool,
    pub compile: CompileOptions,
}

impl BenchmarkConfig {
    pub fn new(n: usize, level: Level, labeling: Labeling) -> Self {
        Self {
            n,
            level,
            labeling,
            noise: NoiseSettings::default(),
            replicates: 1,
            frame_shift: false,
            independent_seeds: false,
            compile: CompileOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeakRow {
    pub config_bits: String,
    pub frequency_hz: f64,
    pub final_amplitude: C64,
    pub reference_amplitude: C64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateErrorReport {
    pub two_spin_gates: usize,
    /// `(1 − F) / two_spin_gates`.
    pub per_gate_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkResult {
    pub n: usize,
    pub level: Level,
    pub labeling: Labeling,
    pub frame_shift: bool,
    pub system_hash: String,
    pub chain: Vec<usize>,
    pub noise: NoiseSettings,
    pub replicates: usize,
    pub f: f64,
    pub f_phased: f64,
    pub f_uncertainty: f64,
    /// F above `1 + 3σ`, only reachable through noise.
    pub flagged: bool,
    pub off_target_residual: f64,
    pub phases: Vec<f64>,
    pub o_k: Vec<C64>,
    pub o: C64,
    pub peaks: Vec<PeakRow>,
    pub estimated_retention: Option<f64>,
    pub pulse_count: Option<usize>,
    pub sequence_duration_s: Option<f64>,
    pub gate_error: GateErrorReport,
    pub hardware_reference_f: (f64, f64),
    #[serde(skip)]
    pub final_spectrum: Option<Spectrum>,
    #[serde(skip)]
    pub reference_spectrum: Option<Spectrum>,
}

impl BenchmarkResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("result serializes")
    }
}

/// Spin order for an `n`-qubit cascade rooted at the observed spin: the
/// simple path through nonzero couplings whose weakest link is strongest,
/// ties broken by total coupling and then index order.
pub fn cascade_order(system: &SpinSystem, n: usize) -> Result<Vec<usize>, BenchError> {
    let start = system.observed;
    if n == 0 || n > system.n() {
        return Err(BenchError::InvalidArgument(format!("cascade of {n} spins on a {}-spin system", system.n())));
    }
    fn dfs(sys: &SpinSystem, n: usize, path: &mut Vec<usize>, score: (f64, f64), best: &mut Option<((f64, f64), Vec<usize>)>) {
        if path.len() == n {
            if best.as_ref().is_none_or(|(b, _)| score.0 > b.0 || (score.0 == b.0 && score.1 > b.1)) {
                *best = Some((score, path.clone()));
            }
            return;
        }
        let last = *path.last().unwrap();
        for next in 0..sys.n() {
            let j = sys.j_hz(last, next).abs();
            if path.contains(&next) || j == 0.0 {
                continue;
            }
            path.push(next);
            dfs(sys, n, path, (score.0.min(j), score.1 + j), best);
            path.pop();
        }
    }
    let mut best = None;
    dfs(system, n, &mut vec![start], (f64::INFINITY, 0.0), &mut best);
    best.map(|(_, p)| p).ok_or(BenchError::NoChain { n, start })
}

/// Encode and decode networks placed on `chain` inside the full system.
fn networks(system: &SpinSystem, chain: &[usize]) -> Result<(Network, Network), BenchError> {
    let n = chain.len();
    let enc = cat_encode_network(n)?.relabel(chain, system.n());
    let dec = cat_decode_network(n)?.relabel(chain, system.n());
    Ok((enc, dec))
}

/// Cascade chain for an `n`-spin benchmark on `system` and the encode and
/// decode networks placed on it.
pub fn benchmark_networks(system: &SpinSystem, n: usize) -> Result<(Vec<usize>, Network, Network), BenchError> {
    let chain = cascade_order(system, n)?;
    let (enc, dec) = networks(system, &chain)?;
    Ok((chain, enc, dec))
}

fn initial_state(system: &SpinSystem) -> Result<DeviationMatrix, BenchError> {
    Ok(DeviationMatrix::from_pauli(&[PauliString::single(system.n(), system.observed, Pauli::Z, 1.0)])?)
}

fn with_phase(net: &Network, chain: &[usize], phi: f64) -> Network {
    let mut out = Network::new(net.n);
    for &s in chain {
        out.push(Gate::ZPhase { spin: s, phi });
    }
    out.extend(net);
    out
}

fn shift_frames(net: &Network, chain: &[usize], phi: f64) -> Network {
    let mut out = net.clone();
    for g in &mut out.gates {
        if let Gate::Rotation { spin, phase, .. } = g {
            if chain.contains(spin) {
                *phase -= phi;
            }
        }
    }
    out.annotations.clear();
    out
}

/// Everything a benchmark run executes, at either level.
struct Pipeline<'a> {
    system: &'a SpinSystem,
    chain: Vec<usize>,
    level: Level,
    enc: Network,
    dec: Network,
    enc_seq: Option<PulseSequence>,
    dec_seq: Option<PulseSequence>,
    compile_opts: CompileOptions,
    retention: Option<f64>,
    pulse_count: Option<usize>,
    duration: Option<f64>,
}

impl<'a> Pipeline<'a> {
    fn new(system: &'a SpinSystem, n: usize, level: Level, opts: &CompileOptions) -> Result<Self, BenchError> {
        let chain = cascade_order(system, n)?;
        let (enc, dec) = networks(system, &chain)?;
        let mut p = Pipeline {
            system,
            chain,
            level,
            enc,
            dec,
            enc_seq: None,
            dec_seq: None,
            compile_opts: opts.clone(),
            retention: None,
            pulse_count: None,
            duration: None,
        };
        if level == Level::Compiled {
            let mut cache = DecompositionCache::new();
            let (es, er) = compile(&p.enc, system, opts, &mut cache)?;
            let (ds, dr) = compile(&p.dec, system, opts, &mut cache)?;
            p.retention = Some(er.estimated_retention * dr.estimated_retention);
            p.pulse_count = Some(er.pulse_count + dr.pulse_count);
            p.duration = Some(er.total_duration_s + dr.total_duration_s);
            p.enc_seq = Some(es);
            p.dec_seq = Some(ds);
        }
        Ok(p)
    }

    fn run(&self, net: &Network, seq: Option<&PulseSequence>, rho: &DeviationMatrix, noise: &mut NoiseModel) -> Result<DeviationMatrix, BenchError> {
        match (self.level, seq) {
            (Level::Compiled, Some(seq)) => Ok(simulate_sequence(seq, self.system, noise, rho)?),
            _ => Ok(propagate_with(net, rho, Some(self.system), noise, false)?),
        }
    }

    fn encode(&self, rho: &DeviationMatrix, noise: &mut NoiseModel) -> Result<DeviationMatrix, BenchError> {
        self.run(&self.enc, self.enc_seq.as_ref(), rho, noise)
    }

    fn decode(&self, rho: &DeviationMatrix, noise: &mut NoiseModel) -> Result<DeviationMatrix, BenchError> {
        self.run(&self.dec, self.dec_seq.as_ref(), rho, noise)
    }

    /// Decode after labeling the encoded state with phase `phi` on every
    /// chain spin, either explicitly or through the reference frames.
    fn decode_labeled(&self, rho: &DeviationMatrix, phi: f64, frame_shift: bool, noise: &mut NoiseModel) -> Result<DeviationMatrix, BenchError> {
        match (frame_shift, self.level) {
            (false, _) => {
                let mut r = rho.clone();
                for &s in &self.chain {
                    r.z_phase(s, phi)?;
                }
                self.decode(&r, noise)
            }
            (true, Level::Ideal) => {
                let net = shift_frames(&self.dec, &self.chain, phi);
                let mut r = propagate_with(&net, rho, Some(self.system), noise, false)?;
                // receiver phase of the observed spin
                r.z_phase(self.system.observed, phi)?;
                Ok(r)
            }
            (true, Level::Compiled) => {
                let net = with_phase(&self.dec, &self.chain, phi);
                let (seq, _) = compile(&net, self.system, &self.compile_opts, &mut DecompositionCache::new())?;
                Ok(simulate_sequence(&seq, self.system, noise, rho)?)
            }
        }
    }
}

struct Replicate {
    spectrum: Spectrum,
    phases: Vec<f64>,
    o_k: Vec<C64>,
    o: C64,
}

fn combine_spectra(spectra: &[Spectrum], weights: &[C64]) -> Spectrum {
    let mut out = spectra[0].clone();
    for (k, p) in out.peaks.iter_mut().enumerate() {
        p.amplitude = spectra.iter().zip(weights).map(|(s, w)| s.peaks[k].amplitude * w).sum();
    }
    out
}

fn replicate(p: &Pipeline, cfg: &BenchmarkConfig, seed: u64) -> Result<Replicate, BenchError> {
    let n = cfg.n;
    let settings = cfg.noise.with_seed(seed);
    let rho0 = initial_state(p.system)?;
    match cfg.labeling {
        Labeling::Gradient => {
            let mut noise = NoiseModel::new(&settings);
            let enc = p.encode(&rho0, &mut noise)?.order_filtered(n as i32);
            let out = p.decode(&enc, &mut noise)?;
            let spectrum = simulate_spectrum(&out, p.system)?;
            let o = spectrum.target().amplitude;
            Ok(Replicate { spectrum, phases: Vec::new(), o_k: Vec::new(), o })
        }
        Labeling::PhaseCycle => {
            let mut shared = NoiseModel::new(&settings);
            let encoded = p.encode(&rho0, &mut shared)?;
            let mut spectra = Vec::new();
            let cycle = phase_cycle_select(n, |k, phi| -> Result<C64, BenchError> {
                let out = if cfg.independent_seeds {
                    let mut noise = NoiseModel::new(&settings.with_seed(seed.wrapping_add(0x9e37_79b9_7f4a_7c15u64.wrapping_mul(k as u64 + 1))));
                    let enc = p.encode(&rho0, &mut noise)?;
                    p.decode_labeled(&enc, phi, cfg.frame_shift, &mut noise)?
                } else {
                    // the same seed for every step: continue a copy of the
                    // generator that ran the encode
                    p.decode_labeled(&encoded, phi, cfg.frame_shift, &mut shared.clone())?
                };
                let s = simulate_spectrum(&out, p.system)?;
                let v = s.target().amplitude;
                spectra.push(s);
                Ok(v)
            })?;
            let m = (2 * n + 1) as f64;
            let weights: Vec<C64> = cycle.phases.iter().map(|&phi| C64::from_polar(1.0 / m, -(n as f64) * phi)).collect();
            let spectrum = combine_spectra(&spectra, &weights);
            Ok(Replicate { spectrum, phases: cycle.phases, o_k: cycle.o_k, o: cycle.o })
        }
    }
}

/// Largest peak, in reference units, whose configuration differs from the
/// target on some chain spin. Spins outside the chain carry the identity and
/// split the target into copies that are not errors.
fn chain_off_target(system: &SpinSystem, chain: &[usize], spectrum: &Spectrum, reference: &Spectrum) -> f64 {
    let others: Vec<usize> = (0..system.n()).filter(|&k| k != system.observed).collect();
    let mask: usize = others
        .iter()
        .enumerate()
        .filter(|(_, s)| chain.contains(s))
        .map(|(pos, _)| 1 << (others.len() - 1 - pos))
        .sum();
    let r = reference.target().amplitude.norm();
    spectrum.peaks.iter().filter(|p| p.config & mask != 0).map(|p| p.amplitude.norm()).fold(0.0, f64::max) / r
}

/// Encode `σz` of the observed spin into the `n`-spin cat coherence, select
/// it, decode, and compare the observed-spin spectrum to the reference.
pub fn run_cat_benchmark(system: &SpinSystem, cfg: &BenchmarkConfig) -> Result<BenchmarkResult, BenchError> {
    cfg.noise.validate()?;
    if cfg.replicates == 0 {
        return Err(BenchError::InvalidArgument("replicates must be at least 1".into()));
    }
    let p = Pipeline::new(system, cfg.n, cfg.level, &cfg.compile)?;
    let reference = reference_spectrum(system)?;
    let reps: Vec<Replicate> = (0..cfg.replicates)
        .map(|r| replicate(&p, cfg, cfg.noise.seed.wrapping_add(r as u64)))
        .collect::<Result<_, _>>()?;
    let reports = reps.iter().map(|r| fidelity_f(&r.spectrum, &reference)).collect::<Result<Vec<_>, _>>()?;
    let m = reports.len() as f64;
    let f = reports.iter().map(|r| r.f).sum::<f64>() / m;
    let f_phased = reports.iter().map(|r| r.f_phased).sum::<f64>() / m;
    let f_uncertainty = if reports.len() > 1 {
        (reports.iter().map(|r| (r.f - f).powi(2)).sum::<f64>() / (m - 1.0)).sqrt()
    } else {
        0.0
    };
    let first = &reps[0];
    let peaks = first
        .spectrum
        .peaks
        .iter()
        .zip(&reference.peaks)
        .map(|(a, b)| PeakRow {
            config_bits: first.spectrum.config_bits(a.config),
            frequency_hz: a.frequency_hz,
            final_amplitude: a.amplitude,
            reference_amplitude: b.amplitude,
        })
        .collect();
    let two_spin_gates = p.enc.two_spin_count() + p.dec.two_spin_count();
    Ok(BenchmarkResult {
        n: cfg.n,
        level: cfg.level,
        labeling: cfg.labeling,
        frame_shift: cfg.frame_shift,
        system_hash: system.content_hash(),
        chain: p.chain.clone(),
        noise: cfg.noise.clone(),
        replicates: cfg.replicates,
        f,
        f_phased,
        f_uncertainty,
        flagged: f > 1.0 + 3.0 * f_uncertainty + 1e-9,
        off_target_residual: chain_off_target(system, &p.chain, &first.spectrum, &reference),
        phases: first.phases.clone(),
        o_k: first.o_k.clone(),
        o: first.o,
        peaks,
        estimated_retention: p.retention,
        pulse_count: p.pulse_count,
        sequence_duration_s: p.duration,
        gate_error: GateErrorReport {
            two_spin_gates,
            per_gate_error: if two_spin_gates == 0 { 0.0 } else { (1.0 - f) / two_spin_gates as f64 },
        },
        hardware_reference_f: HARDWARE_REFERENCE_F,
        final_spectrum: Some(first.spectrum.clone()),
        reference_spectrum: Some(reference),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub f: f64,
    /// Fidelities of the decode map on `(|0…0⟩ ± |1…1⟩)/√2`.
    pub fidelities: [f64; 2],
    pub avg_fidelity: f64,
    pub holds: bool,
}

/// Split a basis index into (chain bits in chain order, the other bits).
fn split_index(n_sys: usize, chain: &[usize], a: usize) -> (usize, usize) {
    let mut c = 0;
    for &s in chain {
        c = (c << 1) | ((a >> (n_sys - 1 - s)) & 1);
    }
    let mut rest = a;
    for &s in chain {
        rest &= !(1 << (n_sys - 1 - s));
    }
    (c, rest)
}

/// `T ⊗ 1` with `T` on the chain spins (in chain order) and the identity
/// on every other spin.
fn embed_on_chain(system: &SpinSystem, chain: &[usize], t: &CMatrix) -> DeviationMatrix {
    let n = system.n();
    let m = CMatrix::from_fn(1 << n, |a, b| {
        let (ca, ra) = split_index(n, chain, a);
        let (cb, rb) = split_index(n, chain, b);
        if ra == rb { t.get(ca, cb) } else { C64::new(0.0, 0.0) }
    });
    DeviationMatrix::from_matrix(n, m).expect("dimension matches")
}

fn ket_bra(dim: usize, ket: &[(usize, f64)], bra: &[(usize, f64)]) -> CMatrix {
    let mut m = CMatrix::zeros(dim);
    for &(a, x) in ket {
        for &(b, y) in bra {
            m.set(a, b, m.get(a, b) + C64::new(x * y, 0.0));
        }
    }
    m
}

/// Compare F from the gradient-labeled benchmark with the average fidelity of
/// the (noisy) decode map on the two cat states.
pub fn decoding_fidelity_bound_check(system: &SpinSystem, n: usize, level: Level, noise: &NoiseSettings) -> Result<BoundCheck, BenchError> {
    let mut cfg = BenchmarkConfig::new(n, level, Labeling::Gradient);
    cfg.noise = noise.clone();
    let f = run_cat_benchmark(system, &cfg)?.f;
    let p = Pipeline::new(system, n, level, &cfg.compile)?;
    let dim = 1usize << n;
    let ones = dim - 1;
    let top = 1usize << (n - 1);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let rest = (1usize << (system.n() - n)) as f64;
    let mut fid = [0.0; 2];
    for (k, sign) in [1.0, -1.0].into_iter().enumerate() {
        let psi = [(0, h), (ones, sign * h)];
        let tgt = [(0, h), (top, sign * h)];
        let rho = embed_on_chain(system, &p.chain, &ket_bra(dim, &psi, &psi)).scaled(C64::new(1.0 / rest, 0.0));
        let out = p.decode(&rho, &mut NoiseModel::new(noise))?;
        let proj = embed_on_chain(system, &p.chain, &ket_bra(dim, &tgt, &tgt));
        fid[k] = out.matrix().inner(proj.matrix()).re;
    }
    let avg = 0.5 * (fid[0] + fid[1]);
    Ok(BoundCheck { f, fidelities: fid, avg_fidelity: avg, holds: f <= avg + 1e-9 })
}

#[derive(Clone, Debug)]
pub struct PseudoPure {
    pub state: DeviationMatrix,
    pub spectrum: Spectrum,
    /// `'x'` for `σx ⊗ |0…0⟩⟨0…0|`, `'y'` for `σy ⊗ |0…0⟩⟨0…0|`.
    pub selected: char,
    pub amplitude: f64,
    /// Largest Pauli coefficient of `state − amplitude·target`.
    pub off_target_max: f64,
    pub target: DeviationMatrix,
}

/// Run the benchmark keeping both `±n` orders and return the decoded
/// pseudo-pure state.
pub fn pseudo_pure_prepare(system: &SpinSystem, cfg: &BenchmarkConfig) -> Result<PseudoPure, BenchError> {
    cfg.noise.validate()?;
    let n = cfg.n;
    let p = Pipeline::new(system, n, cfg.level, &cfg.compile)?;
    let rho0 = initial_state(system)?;
    let state = match cfg.labeling {
        Labeling::Gradient => {
            let mut noise = NoiseModel::new(&cfg.noise);
            let enc = p.encode(&rho0, &mut noise)?.order_filtered(n as i32);
            p.decode(&enc, &mut noise)?
        }
        Labeling::PhaseCycle => {
            let mut shared = NoiseModel::new(&cfg.noise);
            let encoded = p.encode(&rho0, &mut shared)?;
            let m = (2 * n + 1) as f64;
            let mut acc = DeviationMatrix::zeros(system.n());
            for phi in super::cycle_phases(n) {
                let out = p.decode_labeled(&encoded, phi, cfg.frame_shift, &mut shared.clone())?;
                let w = 2.0 * (n as f64 * phi).cos() / m;
                acc = acc.add(&out.scaled(C64::new(w, 0.0)));
            }
            acc
        }
    };
    let targets: Vec<DeviationMatrix> = [false, true]
        .iter()
        .map(|&imag| embed_on_chain(system, &p.chain, pseudo_pure_target(n, imag).matrix()))
        .collect();
    let coeff: Vec<f64> = targets.iter().map(|t| t.matrix().inner(state.matrix()).re / t.frobenius_norm().powi(2)).collect();
    let pick = if coeff[1].abs() > coeff[0].abs() { 1 } else { 0 };
    let target = targets[pick].clone();
    let amplitude = coeff[pick];
    let diff = state.sub(&target.scaled(C64::new(amplitude, 0.0)));
    let off_target_max = diff.to_pauli(0.0).iter().map(|t| t.coeff.norm()).fold(0.0, f64::max);
    Ok(PseudoPure {
        spectrum: simulate_spectrum(&state, system)?,
        state,
        selected: if pick == 0 { 'x' } else { 'y' },
        amplitude,
        off_target_max,
        target,
    })
}

#[derive(Clone, Debug)]
pub struct Suppression {
    pub averaged: DeviationMatrix,
    /// Frobenius norm of the part of `averaged` that the twirl is meant to
    /// remove.
    pub residual: f64,
}

/// Mask of `twirl` spins on which `a` and `b` differ, as a compact index.
fn twirl_mask(n: usize, twirl: &[usize], a: usize, b: usize) -> usize {
    let d = a ^ b;
    twirl.iter().enumerate().fold(0, |m, (k, &s)| m | (((d >> (n - 1 - s)) & 1) << k))
}

fn mask_means(twirl_len: usize, samples: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let masks = 1usize << twirl_len;
    let mut sums = vec![0.0; masks];
    for _ in 0..samples {
        let flips: usize = rng.random::<u32>() as usize & (masks - 1);
        for (m, s) in sums.iter_mut().enumerate() {
            *s += if (flips & m).count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
        }
    }
    sums.iter().map(|s| s / samples as f64).collect()
}

/// Average `samples` copies of `state`, each conjugated by independent random
/// `Z` (180° z rotation) or identity on every spin in `twirl`.
pub fn randomized_suppression(state: &DeviationMatrix, twirl: &[usize], samples: usize, seed: u64) -> Result<Suppression, BenchError> {
    if samples == 0 {
        return Err(BenchError::InvalidArgument("need at least one sample".into()));
    }
    let n = state.n();
    if twirl.iter().any(|&s| s >= n) || twirl.len() > 16 {
        return Err(BenchError::InvalidArgument(format!("twirl spins {twirl:?} out of range for {n} spins")));
    }
    let means = mask_means(twirl.len(), samples, &mut ChaCha8Rng::seed_from_u64(seed));
    let dim = state.dim();
    let mut residual = 0.0;
    let m = CMatrix::from_fn(dim, |a, b| {
        let mask = twirl_mask(n, twirl, a, b);
        let v = state.get(a, b) * means[mask];
        if mask != 0 {
            residual += v.norm_sqr();
        }
        v
    });
    Ok(Suppression { averaged: DeviationMatrix::from_matrix(n, m)?, residual: residual.sqrt() })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuppressionPoint {
    pub samples: usize,
    /// Root-mean-square residual over independent trials.
    pub rms_residual: f64,
    /// `‖non-invariant part‖ / √N`.
    pub predicted: f64,
}

/// Residual of the twirl average against the number of samples, estimated
/// over `trials` independent seeds per point, plus the least-squares slope of
/// `log residual` against `log N`.
pub fn suppression_curve(
    state: &DeviationMatrix,
    twirl: &[usize],
    sample_counts: &[usize],
    trials: usize,
    seed: u64,
) -> Result<(Vec<SuppressionPoint>, f64), BenchError> {
    if trials == 0 || sample_counts.len() < 2 || sample_counts.contains(&0) {
        return Err(BenchError::InvalidArgument("need trials ≥ 1 and at least two positive sample counts".into()));
    }
    let n = state.n();
    let dim = state.dim();
    let mut weight = vec![0.0; 1 << twirl.len()];
    for a in 0..dim {
        for b in 0..dim {
            weight[twirl_mask(n, twirl, a, b)] += state.get(a, b).norm_sqr();
        }
    }
    let noninv: f64 = weight[1..].iter().sum::<f64>().sqrt();
    let points: Vec<SuppressionPoint> = sample_counts
        .iter()
        .enumerate()
        .map(|(i, &samples)| {
            let ms: f64 = (0..trials)
                .into_par_iter()
                .map(|t| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((i as u64) << 32 | t as u64).wrapping_mul(0x2545_f491_4f6c_dd1d));
                    let means = mask_means(twirl.len(), samples, &mut rng);
                    weight.iter().zip(&means).skip(1).map(|(w, m)| w * m * m).sum::<f64>()
                })
                .collect::<Vec<f64>>()
                .iter()
                .sum();
            SuppressionPoint {
                samples,
                rms_residual: (ms / trials as f64).sqrt(),
                predicted: noninv / (samples as f64).sqrt(),
            }
        })
        .collect();
    let xs: Vec<f64> = points.iter().map(|p| (p.samples as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.rms_residual.max(f64::MIN_POSITIVE).ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / xs.len() as f64, ys.iter().sum::<f64>() / ys.len() as f64);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    Ok((points, slope))
}
