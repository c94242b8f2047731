use std::collections::{BTreeMap, HashMap};
use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::PulsecError;
use crate::linalg::{embed_1q, CMatrix, ZERO};
use crate::netir::Gate;
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::qsim::{rotation_unitary, unitary_fidelity, z_phase_unitary, z_sign, zz_unitary};
use crate::spinsys::SpinSystem;

/// An amplitude/phase-modulated RF pulse bound to a target spin.
///
/// Amplitudes are nutation frequencies in Hz (a constant amplitude `a` held
/// for `t` rotates by `2π a t`). The carrier sits `offset_hz` away from the
/// target's resonance and irradiates every spin on the target's channel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapedPulse {
    pub name: String,
    pub target: usize,
    pub samples: Vec<(f64, f64)>,
    pub dt_s: f64,
    pub nominal_angle: f64,
    pub offset_hz: f64,
}

impl ShapedPulse {
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 * self.dt_s
    }

    /// Net rotation angle if all samples were applied on resonance with
    /// their phases ignored.
    pub fn area_angle(&self) -> f64 {
        self.samples.iter().map(|(a, _)| TAU * a * self.dt_s).sum()
    }

    /// Parse the shape file: a `dt_s=<value>` header line (optionally also
    /// `angle_deg=<value>`), an optional column header, then
    /// `amplitude_hz,phase_deg` rows.
    pub fn from_csv(name: &str, text: &str, target: usize) -> Result<ShapedPulse, PulsecError> {
        let bad = |line: usize, msg: String| PulsecError::ShapeParse { name: name.to_string(), line, message: msg };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
        let (hline, header) = lines.next().ok_or_else(|| bad(0, "empty shape file".into()))?;
        let mut dt = None;
        let mut angle_deg = None;
        for kv in header.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()) {
            let (k, v) = kv.split_once('=').ok_or_else(|| bad(hline + 1, format!("expected key=value, got {kv:?}")))?;
            let v: f64 = v.trim().parse().map_err(|_| bad(hline + 1, format!("bad number {v:?}")))?;
            match k.trim() {
                "dt_s" => dt = Some(v),
                "angle_deg" => angle_deg = Some(v),
                other => return Err(bad(hline + 1, format!("unknown header key {other:?}"))),
            }
        }
        let dt_s = dt.ok_or_else(|| bad(hline + 1, "missing dt_s".into()))?;
        if !(dt_s > 0.0 && dt_s.is_finite()) {
            return Err(bad(hline + 1, format!("dt_s must be positive, got {dt_s}")));
        }
        let mut samples = Vec::new();
        for (k, line) in lines {
            let cells: Vec<&str> = line.split(',').map(str::trim).collect();
            if cells.len() != 2 {
                return Err(bad(k + 1, format!("expected 2 columns, got {}", cells.len())));
            }
            if samples.is_empty() && cells[0].parse::<f64>().is_err() {
                continue;
            }
            let a: f64 = cells[0].parse().map_err(|_| bad(k + 1, format!("bad amplitude {:?}", cells[0])))?;
            let p: f64 = cells[1].parse().map_err(|_| bad(k + 1, format!("bad phase {:?}", cells[1])))?;
            if !a.is_finite() || !p.is_finite() {
                return Err(bad(k + 1, "non-finite sample".into()));
            }
            samples.push((a, p.to_radians()));
        }
        if samples.is_empty() {
            return Err(bad(0, "no samples".into()));
        }
        let mut pulse = ShapedPulse { name: name.to_string(), target, samples, dt_s, nominal_angle: FRAC_PI_2, offset_hz: 0.0 };
        pulse.nominal_angle = match angle_deg {
            Some(d) => d.to_radians(),
            None => {
                let area = pulse.area_angle();
                if (area - PI).abs() < (area - FRAC_PI_2).abs() {
                    PI
                } else {
                    FRAC_PI_2
                }
            }
        };
        if (pulse.nominal_angle - FRAC_PI_2).abs() > 1e-9 && (pulse.nominal_angle - PI).abs() > 1e-9 {
            return Err(bad(0, "nominal angle must be 90 or 180 degrees".into()));
        }
        Ok(pulse)
    }

    fn fingerprint(&self) -> String {
        let mut h: u64 = 0xcbf29ce484222325;
        let mut eat = |x: f64| {
            for b in x.to_bits().to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
        };
        for &(a, p) in &self.samples {
            eat(a);
            eat(p);
        }
        eat(self.dt_s);
        eat(self.nominal_angle);
        eat(self.offset_hz);
        format!("{}#{}#{h:016x}", self.name, self.target)
    }
}

pub const GAUSS90_1MS: &str = include_str!("../../shapes/gauss90_1ms.csv");

/// The shipped 1 ms Gaussian 90° shape, bound to `target`.
pub fn gauss90_1ms(target: usize) -> ShapedPulse {
    ShapedPulse::from_csv("gauss90_1ms", GAUSS90_1MS, target).expect("shipped shape parses")
}

/// Fitted `Z(post) · ZZ(θ) · Ideal · Z(pre)` model of a shaped pulse on the
/// spins `(i, j)` of the bound system (`i == j` for single-spin runs).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseDecomposition {
    pub spins: (usize, usize),
    pub pre_z: [f64; 2],
    pub zz_theta: f64,
    /// The nominal rotation if the target is among the spins.
    pub ideal: Option<Gate>,
    pub post_z: [f64; 2],
    pub residual_infidelity: f64,
    pub converged: bool,
}

fn same_channel(system: &SpinSystem, a: usize, b: usize) -> bool {
    (system.channel_ref_mhz[a] - system.channel_ref_mhz[b]).abs() < 1e-9
}

/// Exact propagator of `pulse` on `spins` (one or two spins of `system`) in
/// the channel-reference frames, integrated sample by sample.
pub fn shaped_propagator(pulse: &ShapedPulse, system: &SpinSystem, spins: &[usize]) -> CMatrix {
    let m = spins.len();
    let dim = 1usize << m;
    let carrier = system.shift_hz(pulse.target) + pulse.offset_hz;
    let irradiated: Vec<bool> = spins.iter().map(|&s| same_channel(system, s, pulse.target)).collect();
    // diagonal part in the carrier frame of the irradiated channel
    let diag: Vec<f64> = (0..dim)
        .map(|a| {
            let mut e = 0.0;
            for (k, &s) in spins.iter().enumerate() {
                let nu = if irradiated[k] { system.shift_hz(s) - carrier } else { system.shift_hz(s) };
                e += PI * nu * z_sign(m, k, a);
            }
            if m == 2 {
                e += 0.5 * PI * system.j_hz(spins[0], spins[1]) * z_sign(m, 0, a) * z_sign(m, 1, a);
            }
            e
        })
        .collect();
    let mut u = CMatrix::identity(dim);
    for &(amp, phase) in &pulse.samples {
        let mut h = CMatrix::from_diag(&diag.iter().map(|&e| C64::new(e, 0.0)).collect::<Vec<_>>());
        for (k, _) in spins.iter().enumerate().filter(|(k, _)| irradiated[*k]) {
            let e = C64::from_polar(PI * amp, phase);
            let rf = embed_1q(m, k, &[[ZERO, e.conj()], [e, ZERO]]);
            h = &h + &rf;
        }
        let step = h.scale(C64::new(0.0, -pulse.dt_s)).expm();
        u = step.matmul(&u);
    }
    // back to the channel-reference frame
    let mut frame = CMatrix::identity(dim);
    for (k, _) in spins.iter().enumerate().filter(|(k, _)| irradiated[*k]) {
        frame = z_phase_unitary(m, k, TAU * carrier * pulse.duration()).matmul(&frame);
    }
    frame.matmul(&u)
}

fn ideal_unitary(m: usize, target_local: Option<usize>, angle: f64) -> CMatrix {
    match target_local {
        Some(k) => rotation_unitary(m, k, 0.0, angle),
        None => CMatrix::identity(1 << m),
    }
}

/// Model unitary for parameters `[pre.., post.., θ]` (θ only for pairs).
fn model_unitary(m: usize, ideal: &CMatrix, x: &[f64]) -> CMatrix {
    let mut u = ideal.clone();
    for k in 0..m {
        u = u.matmul(&z_phase_unitary(m, k, x[k]));
        u = z_phase_unitary(m, k, x[m + k]).matmul(&u);
    }
    if m == 2 {
        // Z(post) commutes with ZZ, so this is Z(post)·ZZ·Ideal·Z(pre)
        u = zz_unitary(2, 0, 1, x[4]).matmul(&u);
    }
    u
}

fn wrap(x: f64) -> f64 {
    (x + PI).rem_euclid(TAU) - PI
}

/// Fit the decomposition model for spins `(i, j)` of `system`; `i == j`
/// gives the single-spin run.
pub fn decompose_pair(pulse: &ShapedPulse, system: &SpinSystem, i: usize, j: usize) -> Result<PulseDecomposition, PulsecError> {
    if pulse.samples.is_empty() || pulse.duration() <= 0.0 {
        return Err(PulsecError::ZeroDuration(pulse.name.clone()));
    }
    for s in [i, j, pulse.target] {
        if s >= system.n() {
            return Err(PulsecError::SpinOutOfRange { spin: s, n: system.n() });
        }
    }
    let spins: Vec<usize> = if i == j { vec![i] } else { vec![i, j] };
    let m = spins.len();
    let exact = shaped_propagator(pulse, system, &spins);
    let target_local = spins.iter().position(|&s| s == pulse.target);
    let ideal = ideal_unitary(m, target_local, pulse.nominal_angle);
    let cost = |x: &[f64]| -> f64 { 1.0 - model_unitary(m, &ideal, x).inner(&exact).norm() / (1 << m) as f64 };

    // coarse grid: free precession guesses for every spin, a sweep of the
    // z phases on irradiated spins and of θ for pairs
    let d = pulse.duration();
    let carrier = system.shift_hz(pulse.target) + pulse.offset_hz;
    let mut axes: Vec<Vec<f64>> = Vec::new();
    for &s in &spins {
        let irr = same_channel(system, s, pulse.target);
        axes.push(if irr { (0..6).map(|k| wrap(k as f64 * PI / 3.0)).collect() } else { vec![0.0] });
    }
    for &s in &spins {
        let irr = same_channel(system, s, pulse.target);
        let free = wrap(TAU * (if irr { carrier } else { system.shift_hz(s) }) * d);
        axes.push(if irr { (0..6).map(|k| wrap(free + k as f64 * PI / 3.0)).collect() } else { vec![free] });
    }
    if m == 2 {
        let guess = wrap(PI * system.j_hz(i, j) * d);
        axes.push((-6..6).map(|k| wrap(guess + k as f64 * PI / 12.0)).collect());
    }
    let mut grid: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut idx = vec![0usize; axes.len()];
    loop {
        let x: Vec<f64> = idx.iter().zip(&axes).map(|(&k, a)| a[k]).collect();
        grid.push((cost(&x), x));
        let mut carry = 0;
        while carry < idx.len() {
            idx[carry] += 1;
            if idx[carry] < axes[carry].len() {
                break;
            }
            idx[carry] = 0;
            carry += 1;
        }
        if carry == idx.len() {
            break;
        }
    }
    grid.sort_by(|a, b| a.0.total_cmp(&b.0));
    let opts = NelderMeadOptions { step: 0.05, xtol: 1e-11, ftol: 1e-16, max_iter: 40_000 };
    let mut best: Option<crate::optim::Minimum> = None;
    for (_, x0) in grid.iter().take(4) {
        let mut r = nelder_mead(cost, x0, opts);
        // one restart from the optimum shakes off simplex collapse
        let r2 = nelder_mead(cost, &r.x, NelderMeadOptions { step: 0.01, ..opts });
        if r2.f <= r.f {
            r = crate::optim::Minimum { converged: r.converged && r2.converged, ..r2 };
        }
        if best.as_ref().is_none_or(|b| r.f < b.f) {
            best = Some(r);
        }
    }
    let best = best.expect("grid is nonempty");
    let x = &best.x;
    let fit = model_unitary(m, &ideal, x);
    let fidelity = unitary_fidelity(&fit, &exact).map_err(|e| PulsecError::Fit(e.to_string()))?;
    let (pre_z, post_z, zz_theta) = if m == 2 {
        ([wrap(x[0]), wrap(x[1])], [wrap(x[2]), wrap(x[3])], wrap(x[4]))
    } else {
        ([wrap(x[0]), 0.0], [wrap(x[1]), 0.0], 0.0)
    };
    Ok(PulseDecomposition {
        spins: (i, j),
        pre_z,
        zz_theta,
        ideal: target_local.map(|_| Gate::Rotation { spin: pulse.target, phase: 0.0, angle: pulse.nominal_angle }),
        post_z,
        residual_infidelity: (1.0 - fidelity).max(0.0),
        converged: best.converged,
    })
}

/// Decomposition on a two-spin system; `pulse.target` indexes that system.
pub fn decompose_shaped_pulse(pulse: &ShapedPulse, pair: &SpinSystem) -> Result<PulseDecomposition, PulsecError> {
    if pair.n() != 2 {
        return Err(PulsecError::NotAPair(pair.n()));
    }
    decompose_pair(pulse, pair, 0, 1)
}

/// Reconstructed unitary of a decomposition, on its one or two spins.
pub fn decomposition_unitary(d: &PulseDecomposition, nominal_angle: f64, target: usize) -> CMatrix {
    let (i, j) = d.spins;
    let m = if i == j { 1 } else { 2 };
    let target_local = if target == i { Some(0) } else if target == j && m == 2 { Some(1) } else { None };
    let ideal = ideal_unitary(m, target_local, nominal_angle);
    let x: Vec<f64> = if m == 2 {
        vec![d.pre_z[0], d.pre_z[1], d.post_z[0], d.post_z[1], d.zz_theta]
    } else {
        vec![d.pre_z[0], d.post_z[0]]
    };
    model_unitary(m, &ideal, &x)
}

pub type DecompositionTable = BTreeMap<(String, usize, usize), PulseDecomposition>;

/// Memo of pair decompositions keyed by shape fingerprint, spins and the
/// pair's physical parameters.
#[derive(Debug, Default)]
pub struct DecompositionCache {
    entries: HashMap<String, PulseDecomposition>,
    simulations: usize,
}

impl DecompositionCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of propagator fits actually performed.
    pub fn simulations(&self) -> usize {
        self.simulations
    }

    fn key(pulse: &ShapedPulse, system: &SpinSystem, i: usize, j: usize) -> String {
        let t = pulse.target;
        format!(
            "{}|{i},{j}|{:?}|{:?}|{:?}|{:?}",
            pulse.fingerprint(),
            [system.shift_hz(i), system.shift_hz(j), system.shift_hz(t)],
            [system.channel_ref_mhz[i], system.channel_ref_mhz[j], system.channel_ref_mhz[t]],
            system.j_hz(i, j),
            system.n()
        )
    }
}

/// Run every single-spin and unordered-pair decomposition for each shape:
/// `n(n+1)/2` fits per shape, memoized in `cache`.
pub fn decompose_all(
    cache: &mut DecompositionCache,
    shapes: &[ShapedPulse],
    system: &SpinSystem,
) -> Result<DecompositionTable, PulsecError> {
    let n = system.n();
    let mut jobs = Vec::new();
    for shape in shapes {
        for i in 0..n {
            for j in i..n {
                jobs.push((shape, i, j, DecompositionCache::key(shape, system, i, j)));
            }
        }
    }
    let missing: Vec<_> = jobs.iter().filter(|(_, _, _, k)| !cache.entries.contains_key(k)).collect();
    let fresh: Vec<(String, PulseDecomposition)> = missing
        .par_iter()
        .map(|(shape, i, j, k)| decompose_pair(shape, system, *i, *j).map(|d| (k.clone(), d)))
        .collect::<Result<_, _>>()?;
    cache.simulations += fresh.len();
    cache.entries.extend(fresh);
    Ok(jobs
        .into_iter()
        .map(|(shape, i, j, k)| ((shape.name.clone(), i, j), cache.entries[&k].clone()))
        .collect())
}
