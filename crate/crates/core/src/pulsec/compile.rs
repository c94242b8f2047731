use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::refocus::{insert_refocusing, optimize_delays, PairTerm, RefocusOptions};
use super::shape::{decompose_all, DecompositionCache, DecompositionTable, ShapedPulse};
use super::PulsecError;
use crate::netir::{classical_label, Gate, Network};
use crate::qsim::{DeviationMatrix, NoiseModel};
use crate::spinsys::SpinSystem;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompileOptions {
    pub refocus: RefocusOptions,
    pub min_delay_s: f64,
    /// Absorb couplings to spins declared classical by `classical:<spin>=<bit>`
    /// barriers into frames instead of refocusing them.
    pub use_classical: bool,
    /// Shaped pulses by target spin; rotations on other spins are hard.
    pub shapes: Vec<ShapedPulse>,
}

impl Default for CompileOptions {
    fn default() -> Self {
        Self { refocus: RefocusOptions::default(), min_delay_s: 0.0, use_classical: true, shapes: Vec::new() }
    }
}

/// Effect of a shaped pulse on the whole register, assembled from its pair
/// decompositions: `Z(pre)`, the ideal rotation, `Z(post)`, then the listed
/// couplings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseModel {
    pub shape: String,
    pub pre_z: Vec<f64>,
    pub post_z: Vec<f64>,
    pub zz: Vec<(usize, usize, f64)>,
    pub residual_infidelity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Event {
    Pulse { spins: Vec<usize>, angle: f64, phase: f64, duration: f64, refocusing: bool, model: Option<PulseModel> },
    Delay { duration: f64 },
    Crusher,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimedEvent {
    pub t_s: f64,
    pub event: Event,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseSequence {
    pub n: usize,
    pub events: Vec<TimedEvent>,
    pub total_duration_s: f64,
    /// Per-spin frame phase at the end; the receiver undoes it.
    pub frame: Vec<f64>,
}

impl PulseSequence {
    pub fn empty(n: usize) -> Self {
        Self { n, events: Vec::new(), total_duration_s: 0.0, frame: vec![0.0; n] }
    }

    pub fn pulse_count(&self) -> usize {
        self.events.iter().filter(|e| matches!(e.event, Event::Pulse { .. })).count()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for e in &self.events {
            match &e.event {
                Event::Pulse { spins, angle, phase, duration, .. } => {
                    let list: Vec<String> = spins.iter().map(|x| x.to_string()).collect();
                    let _ = write!(
                        s,
                        "PULSE t={:.9} spins={} angle={:.6} phase={:.6}",
                        e.t_s,
                        list.join(","),
                        angle.to_degrees(),
                        phase.rem_euclid(TAU).to_degrees()
                    );
                    if *duration > 0.0 {
                        let _ = write!(s, " dur={duration:.9}");
                    }
                    s.push('\n');
                }
                Event::Delay { duration } => {
                    let _ = writeln!(s, "DELAY t={:.9} dur={duration:.9}", e.t_s);
                }
                Event::Crusher => {
                    let _ = writeln!(s, "CRUSH t={:.9}", e.t_s);
                }
            }
        }
        for (k, f) in self.frame.iter().enumerate() {
            let _ = writeln!(s, "FRAME spin={k} phase={:.6}", f.rem_euclid(TAU).to_degrees());
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairRow {
    pub i: usize,
    pub j: usize,
    pub j_hz: f64,
    pub target_rad: f64,
    pub achieved_rad: f64,
    pub max_abs_error_rad: f64,
    pub retention: f64,
    pub absorbed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentReport {
    pub index: usize,
    pub intervals: usize,
    pub refocusing_pulses: usize,
    pub duration_s: f64,
    pub residual: f64,
    pub exact: bool,
    pub diagnostic: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompilerReport {
    pub pairs: Vec<PairRow>,
    pub segments: Vec<SegmentReport>,
    pub estimated_retention: f64,
    pub pulse_count: usize,
    pub refocusing_pulses: usize,
    pub total_duration_s: f64,
    pub warnings: Vec<String>,
}

impl CompilerReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Per-spin bookkeeping between the logical network and the physical
/// sequence: the physical state is `Z(phase) X^flipped ρ_logical`, conjugated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameTracker {
    pub phase: Vec<f64>,
    pub flipped: Vec<bool>,
    pub classical: Vec<Option<u8>>,
}

impl FrameTracker {
    pub fn new(n: usize) -> Self {
        Self { phase: vec![0.0; n], flipped: vec![false; n], classical: vec![None; n] }
    }

    pub fn sign(&self, s: usize) -> i8 {
        if self.flipped[s] {
            -1
        } else {
            1
        }
    }

    pub fn signs(&self) -> Vec<i8> {
        (0..self.phase.len()).map(|s| self.sign(s)).collect()
    }

    /// A logical `ZPhase(φ)` costs nothing physically.
    pub fn logical_z(&mut self, s: usize, phi: f64) {
        self.phase[s] -= self.sign(s) as f64 * phi;
    }

    /// Physical z rotation, e.g. free precession or a shaped pulse's phases.
    pub fn physical_z(&mut self, s: usize, phi: f64) {
        self.phase[s] += phi;
    }

    /// Physical phase that realizes a logical rotation at `phase`.
    pub fn pulse_phase(&self, s: usize, phase: f64) -> f64 {
        self.sign(s) as f64 * phase + self.phase[s]
    }

}

struct Compiler<'a> {
    system: &'a SpinSystem,
    opts: &'a CompileOptions,
    table: DecompositionTable,
    frame: FrameTracker,
    events: Vec<TimedEvent>,
    t: f64,
    targets: BTreeMap<(usize, usize), f64>,
    offsets: BTreeMap<(usize, usize), f64>,
    segments: Vec<SegmentReport>,
    rows: BTreeMap<(usize, usize), PairRow>,
    warnings: Vec<String>,
}

impl<'a> Compiler<'a> {
    fn n(&self) -> usize {
        self.system.n()
    }

    fn precess(&mut self, dt: f64) {
        for s in 0..self.n() {
            self.frame.physical_z(s, TAU * self.system.shift_hz(s) * dt);
        }
    }

    fn refocus_pulse(&mut self, s: usize) {
        let phase = self.frame.pulse_phase(s, 0.0);
        self.events.push(TimedEvent {
            t_s: self.t,
            event: Event::Pulse { spins: vec![s], angle: PI, phase, duration: 0.0, refocusing: true, model: None },
        });
        self.frame.flipped[s] = !self.frame.flipped[s];
    }

    fn unwind_flips(&mut self) {
        for s in 0..self.n() {
            if self.frame.flipped[s] {
                self.refocus_pulse(s);
            }
        }
    }

    fn rotation(&mut self, spin: usize, phase: f64, angle: f64) {
        let (phase, angle) = if angle < 0.0 { (phase + PI, -angle) } else { (phase, angle) };
        let shape = self.opts.shapes.iter().find(|p| p.target == spin && (p.nominal_angle - angle).abs() < 1e-9);
        let Some(shape) = shape else {
            let phys = self.frame.pulse_phase(spin, phase);
            self.events.push(TimedEvent {
                t_s: self.t,
                event: Event::Pulse { spins: vec![spin], angle, phase: phys, duration: 0.0, refocusing: false, model: None },
            });
            return;
        };
        let n = self.n();
        let name = shape.name.clone();
        let d = shape.duration();
        let single = |s: usize| &self.table[&(name.clone(), s, s)];
        let pre_z: Vec<f64> = (0..n).map(|s| single(s).pre_z[0]).collect();
        let post_z: Vec<f64> = (0..n).map(|s| single(s).post_z[0]).collect();
        let mut zz = Vec::new();
        let mut residual = 0.0f64;
        for i in 0..n {
            residual = residual.max(single(i).residual_infidelity);
            for j in (i + 1)..n {
                let dec = &self.table[&(name.clone(), i, j)];
                residual = residual.max(dec.residual_infidelity);
                if dec.zz_theta != 0.0 {
                    zz.push((i, j, dec.zz_theta));
                }
            }
        }
        for s in 0..n {
            self.frame.physical_z(s, pre_z[s]);
        }
        let phys = self.frame.pulse_phase(spin, phase);
        for s in 0..n {
            self.frame.physical_z(s, post_z[s]);
        }
        for &(i, j, th) in &zz {
            let logical = (self.frame.sign(i) * self.frame.sign(j)) as f64 * th;
            *self.offsets.entry((i, j)).or_insert(0.0) += logical;
        }
        self.events.push(TimedEvent {
            t_s: self.t,
            event: Event::Pulse {
                spins: vec![spin],
                angle,
                phase: phys,
                duration: d,
                refocusing: false,
                model: Some(PulseModel { shape: name, pre_z, post_z, zz, residual_infidelity: residual }),
            },
        });
        self.t += d;
    }

    fn flush(&mut self) {
        if self.targets.is_empty() && self.offsets.values().all(|&v| v == 0.0) {
            self.offsets.clear();
            return;
        }
        let n = self.n();
        let mut pairs = Vec::new();
        let mut absorbed = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let jhz = self.system.j_hz(i, j);
                let target = self.targets.get(&(i, j)).copied().unwrap_or(0.0);
                let offset = self.offsets.get(&(i, j)).copied().unwrap_or(0.0);
                if jhz == 0.0 && target == 0.0 && offset == 0.0 {
                    continue;
                }
                if jhz == 0.0 && target != 0.0 {
                    self.warnings.push(format!("coupling target on uncoupled pair ({i},{j})"));
                }
                let classical = self.opts.use_classical
                    && target == 0.0
                    && (self.frame.classical[i].is_some() || self.frame.classical[j].is_some());
                let mut p = PairTerm::new(i, j, jhz, target);
                p.offset = offset;
                let ignored = !classical && target == 0.0 && jhz.abs() < self.opts.refocus.ignore_below_hz;
                if classical || ignored {
                    p.weight = 0.0;
                }
                absorbed.push(classical);
                pairs.push(p);
            }
        }
        let carried = self.frame.signs();
        let plan = insert_refocusing(n, &pairs, &carried, &self.opts.refocus);
        let sol = optimize_delays(&plan, &pairs, self.opts.min_delay_s);
        let start = self.t;
        let mut refocus = 0;
        for k in 0..plan.intervals() {
            for &(b, s) in &plan.pulses {
                if b == k {
                    self.refocus_pulse(s);
                    refocus += 1;
                }
            }
            let dt = sol.delays[k];
            if dt > 0.0 {
                self.events.push(TimedEvent { t_s: self.t, event: Event::Delay { duration: dt } });
                self.precess(dt);
                self.t += dt;
            }
        }
        debug_assert_eq!(self.frame.signs(), plan.final_signs());
        for ((p, &a), &abs) in pairs.iter().zip(&sol.achieved).zip(&absorbed) {
            if abs {
                // a coupling to a classical spin is a z rotation of its partner
                for (me, other) in [(p.i, p.j), (p.j, p.i)] {
                    if self.frame.classical[me].is_none() {
                        if let Some(bit) = self.frame.classical[other] {
                            let phi = if bit == 0 { a } else { -a };
                            let s = self.frame.sign(me) as f64;
                            self.frame.physical_z(me, s * phi);
                        }
                    }
                }
            }
            let row = self.rows.entry((p.i, p.j)).or_insert(PairRow {
                i: p.i,
                j: p.j,
                j_hz: p.j_hz,
                target_rad: 0.0,
                achieved_rad: 0.0,
                max_abs_error_rad: 0.0,
                retention: 1.0,
                absorbed: false,
            });
            row.target_rad += p.target;
            row.achieved_rad += a;
            if abs {
                row.absorbed = true;
            } else {
                let err = a - p.target;
                row.max_abs_error_rad = row.max_abs_error_rad.max(err.abs());
                row.retention *= (err / 2.0).cos().abs();
            }
        }
        if let Some(d) = &plan.diagnostic {
            self.warnings.push(format!("segment {}: {d}", self.segments.len()));
        }
        self.segments.push(SegmentReport {
            index: self.segments.len(),
            intervals: plan.intervals(),
            refocusing_pulses: refocus,
            duration_s: self.t - start,
            residual: sol.residual,
            exact: sol.exact,
            diagnostic: plan.diagnostic.clone(),
        });
        self.targets.clear();
        self.offsets.clear();
    }
}

/// Translate an ideal network into a timed pulse sequence on `system`.
pub fn compile(
    network: &Network,
    system: &SpinSystem,
    opts: &CompileOptions,
    cache: &mut DecompositionCache,
) -> Result<(PulseSequence, CompilerReport), PulsecError> {
    let n = system.n();
    if network.n != n {
        return Err(PulsecError::SizeMismatch { network: network.n, system: n });
    }
    network.check_bound()?;
    for s in &opts.shapes {
        if s.target >= n {
            return Err(PulsecError::SpinOutOfRange { spin: s.target, n });
        }
    }
    let table = if opts.shapes.is_empty() { DecompositionTable::new() } else { decompose_all(cache, &opts.shapes, system)? };
    let mut c = Compiler {
        system,
        opts,
        table,
        frame: FrameTracker::new(n),
        events: Vec::new(),
        t: 0.0,
        targets: BTreeMap::new(),
        offsets: BTreeMap::new(),
        segments: Vec::new(),
        rows: BTreeMap::new(),
        warnings: Vec::new(),
    };
    for (index, g) in network.gates.iter().enumerate() {
        match g {
            &Gate::Rotation { spin, phase, angle } => {
                c.flush();
                c.frame.classical[spin] = None;
                c.rotation(spin, phase, angle);
            }
            &Gate::ZZ { i, j, theta } => {
                *c.targets.entry((i.min(j), i.max(j))).or_insert(0.0) += theta;
            }
            &Gate::ZPhase { spin, phi } => c.frame.logical_z(spin, phi),
            Gate::Barrier(label) => {
                if let Some((s, bit)) = classical_label(label) {
                    if s < n {
                        c.frame.classical[s] = Some(bit);
                    }
                }
            }
            Gate::Crusher => {
                c.flush();
                c.unwind_flips();
                c.events.push(TimedEvent { t_s: c.t, event: Event::Crusher });
            }
            Gate::OrderFilter(_) => return Err(PulsecError::Unsupported { index, gate: g.to_string() }),
        }
    }
    c.flush();
    c.unwind_flips();

    let mut pairs: Vec<PairRow> = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            pairs.push(c.rows.remove(&(i, j)).unwrap_or(PairRow {
                i,
                j,
                j_hz: system.j_hz(i, j),
                target_rad: 0.0,
                achieved_rad: 0.0,
                max_abs_error_rad: 0.0,
                retention: 1.0,
                absorbed: false,
            }));
        }
    }
    let seq = PulseSequence { n, total_duration_s: c.t, frame: c.frame.phase.clone(), events: c.events };
    let report = CompilerReport {
        estimated_retention: pairs.iter().map(|r| r.retention).product(),
        pulse_count: seq.pulse_count(),
        refocusing_pulses: seq
            .events
            .iter()
            .filter(|e| matches!(e.event, Event::Pulse { refocusing: true, .. }))
            .count(),
        total_duration_s: seq.total_duration_s,
        pairs,
        segments: c.segments,
        warnings: c.warnings,
    };
    Ok((seq, report))
}

/// Replay a compiled sequence on the dense simulator.
pub fn simulate_sequence(
    seq: &PulseSequence,
    system: &SpinSystem,
    noise: &mut NoiseModel,
    state: &DeviationMatrix,
) -> Result<DeviationMatrix, PulsecError> {
    if seq.n != system.n() || state.n() != seq.n {
        return Err(PulsecError::SizeMismatch { network: seq.n, system: system.n() });
    }
    let n = seq.n;
    let mut rho = state.clone();
    let no_absorb = vec![false; n];
    for e in &seq.events {
        match &e.event {
            Event::Pulse { spins, angle, phase, duration, model, .. } => match model {
                None => {
                    for &s in spins {
                        rho.rotate(s, *phase, noise.rotation_angle(*angle))?;
                    }
                }
                Some(m) => {
                    for s in 0..n {
                        rho.z_phase(s, m.pre_z[s])?;
                    }
                    for &s in spins {
                        rho.rotate(s, *phase, noise.rotation_angle(*angle))?;
                    }
                    for s in 0..n {
                        rho.z_phase(s, m.post_z[s])?;
                    }
                    for &(i, j, th) in &m.zz {
                        rho.zz(i, j, th)?;
                    }
                    if noise.t2_enabled() {
                        rho.dephase(system, *duration);
                    }
                }
            },
            Event::Delay { duration } => rho.free_evolve(system, *duration, &no_absorb, noise.t2_enabled())?,
            Event::Crusher => rho = rho.crushed(),
        }
    }
    for s in 0..n {
        rho.z_phase(s, -seq.frame[s])?;
    }
    Ok(rho)
}
