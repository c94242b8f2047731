//! Ideal gate networks: the cat-state encode/decode cascades, the methyl
//! selection template, execution on the dense simulator and a line-oriented
//! text format.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::CMatrix;
use crate::qsim::{
    rotation_unitary, z_phase_unitary, zz_unitary, DeviationMatrix, NoiseModel, Pauli, PauliString, PauliSum, QsimError,
};
use crate::spinsys::SpinSystem;

#[derive(Debug, Error, PartialEq)]
pub enum NetError {
    #[error("network needs at least one spin")]
    Empty,
    #[error("gate {index} touches spin {spin} but the network has {n} spins")]
    Unbound { index: usize, spin: usize, n: usize },
    #[error("gate {index} ({gate}) is not unitary")]
    NonUnitary { index: usize, gate: String },
    #[error("annotation mismatch after gate {position}: expected {expected}, deviation {deviation:.3e}")]
    AnnotationMismatch { position: usize, expected: String, deviation: f64 },
    #[error("network acts on {network} spins, state has {state}")]
    SizeMismatch { network: usize, state: usize },
    #[error("system is not a methyl group: {0}")]
    WrongSystem(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Qsim(#[from] QsimError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Gate {
    Rotation { spin: usize, phase: f64, angle: f64 },
    ZZ { i: usize, j: usize, theta: f64 },
    ZPhase { spin: usize, phi: f64 },
    Crusher,
    OrderFilter(i32),
    Barrier(String),
}

impl Gate {
    pub fn spins(&self) -> Vec<usize> {
        match *self {
            Gate::Rotation { spin, .. } | Gate::ZPhase { spin, .. } => vec![spin],
            Gate::ZZ { i, j, .. } => vec![i, j],
            _ => Vec::new(),
        }
    }

    pub fn is_unitary(&self) -> bool {
        !matches!(self, Gate::Crusher | Gate::OrderFilter(_))
    }

    fn relabeled(&self, map: &[usize]) -> Gate {
        match self {
            &Gate::Rotation { spin, phase, angle } => Gate::Rotation { spin: map[spin], phase, angle },
            &Gate::ZZ { i, j, theta } => Gate::ZZ { i: map[i], j: map[j], theta },
            &Gate::ZPhase { spin, phi } => Gate::ZPhase { spin: map[spin], phi },
            Gate::Barrier(label) => match classical_label(label) {
                Some((s, bit)) => Gate::Barrier(format!("classical:{}={bit}", map[s])),
                None => Gate::Barrier(label.clone()),
            },
            other => other.clone(),
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gate::Rotation { spin, phase, angle } => {
                write!(f, "ROT spin={spin} phase={} angle={}", phase.to_degrees(), angle.to_degrees())
            }
            Gate::ZZ { i, j, theta } => write!(f, "ZZ i={i} j={j} theta={}", theta.to_degrees()),
            Gate::ZPhase { spin, phi } => write!(f, "ZPHASE spin={spin} phi={}", phi.to_degrees()),
            Gate::Crusher => write!(f, "CRUSH"),
            Gate::OrderFilter(m) => write!(f, "FILTER m={m}"),
            Gate::Barrier(label) => write!(f, "BARRIER {label}"),
        }
    }
}

/// Parse a `classical:<spin>=<bit>` barrier label, which asserts that the
/// spin is in a known basis state at that point.
pub fn classical_label(label: &str) -> Option<(usize, u8)> {
    let rest = label.strip_prefix("classical:")?;
    let (s, b) = rest.split_once('=')?;
    let bit: u8 = b.trim().parse().ok()?;
    (bit <= 1).then_some((s.trim().parse().ok()?, bit))
}

/// An ordered gate list on `n` logical spins.
///
/// `annotations[p]` is the expected state after the first `p` gates, written
/// as a Pauli sum such as `-YYX`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub n: usize,
    pub gates: Vec<Gate>,
    pub annotations: BTreeMap<usize, String>,
}

impl Network {
    pub fn new(n: usize) -> Self {
        Self { n, gates: Vec::new(), annotations: BTreeMap::new() }
    }

    pub fn push(&mut self, g: Gate) -> &mut Self {
        self.gates.push(g);
        self
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn extend(&mut self, other: &Network) {
        self.gates.extend(other.gates.iter().cloned());
    }

    pub fn two_spin_count(&self) -> usize {
        self.gates.iter().filter(|g| matches!(g, Gate::ZZ { .. })).count()
    }

    pub fn rotation_count(&self) -> usize {
        self.gates.iter().filter(|g| matches!(g, Gate::Rotation { .. })).count()
    }

    pub fn check_bound(&self) -> Result<(), NetError> {
        for (index, g) in self.gates.iter().enumerate() {
            for spin in g.spins() {
                if spin >= self.n {
                    return Err(NetError::Unbound { index, spin, n: self.n });
                }
            }
        }
        Ok(())
    }

    /// Exact inverse. Fails on crushers and filters.
    pub fn inverse(&self) -> Result<Network, NetError> {
        let mut out = Network::new(self.n);
        for (index, g) in self.gates.iter().enumerate().rev() {
            out.gates.push(match g {
                &Gate::Rotation { spin, phase, angle } => Gate::Rotation { spin, phase, angle: -angle },
                &Gate::ZZ { i, j, theta } => Gate::ZZ { i, j, theta: -theta },
                &Gate::ZPhase { spin, phi } => Gate::ZPhase { spin, phi: -phi },
                Gate::Barrier(l) => Gate::Barrier(l.clone()),
                other => return Err(NetError::NonUnitary { index, gate: other.to_string() }),
            });
        }
        Ok(out)
    }

    /// Map logical spin `k` to `map[k]` on an `n`-spin register. Annotations
    /// are dropped since their letter order no longer applies.
    pub fn relabel(&self, map: &[usize], n: usize) -> Network {
        Network { n, gates: self.gates.iter().map(|g| g.relabeled(map)).collect(), annotations: BTreeMap::new() }
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("QUBITS n={}\n", self.n);
        for p in 0..=self.gates.len() {
            if let Some(a) = self.annotations.get(&p) {
                s.push_str(&format!("STATE {a}\n"));
            }
            if let Some(g) = self.gates.get(p) {
                s.push_str(&g.to_string());
                s.push('\n');
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Network, NetError> {
        let mut net: Option<Network> = None;
        for (k, raw) in text.lines().enumerate() {
            let line_no = k + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| NetError::Parse { line: line_no, message };
            let (head, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
            let rest = rest.trim();
            if head == "QUBITS" {
                let kv = parse_kv(rest).map_err(err)?;
                let n = get_usize(&kv, "n").map_err(|m| NetError::Parse { line: line_no, message: m })?;
                net = Some(Network::new(n));
                continue;
            }
            let net = net.as_mut().ok_or_else(|| err("missing QUBITS header".into()))?;
            if head == "STATE" {
                net.annotations.insert(net.gates.len(), rest.to_string());
                continue;
            }
            if head == "BARRIER" {
                net.gates.push(Gate::Barrier(rest.to_string()));
                continue;
            }
            let kv = parse_kv(rest).map_err(err)?;
            let wrap = |m: String| NetError::Parse { line: line_no, message: m };
            let g = match head {
                "ROT" => Gate::Rotation {
                    spin: get_usize(&kv, "spin").map_err(wrap)?,
                    phase: get_f64(&kv, "phase").map_err(wrap)?.to_radians(),
                    angle: get_f64(&kv, "angle").map_err(wrap)?.to_radians(),
                },
                "ZZ" => Gate::ZZ {
                    i: get_usize(&kv, "i").map_err(wrap)?,
                    j: get_usize(&kv, "j").map_err(wrap)?,
                    theta: get_f64(&kv, "theta").map_err(wrap)?.to_radians(),
                },
                "ZPHASE" => Gate::ZPhase {
                    spin: get_usize(&kv, "spin").map_err(wrap)?,
                    phi: get_f64(&kv, "phi").map_err(wrap)?.to_radians(),
                },
                "CRUSH" => Gate::Crusher,
                "FILTER" => Gate::OrderFilter(
                    kv.get("m").ok_or_else(|| wrap("missing m".into()))?.parse().map_err(|_| wrap("bad m".into()))?,
                ),
                other => return Err(wrap(format!("unknown gate {other:?}"))),
            };
            net.gates.push(g);
        }
        let net = net.ok_or(NetError::Parse { line: 0, message: "empty network file".into() })?;
        net.check_bound()?;
        Ok(net)
    }
}

fn parse_kv(s: &str) -> Result<BTreeMap<String, String>, String> {
    s.split_whitespace()
        .map(|tok| {
            tok.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| format!("expected key=value, got {tok:?}"))
        })
        .collect()
}

fn get_f64(kv: &BTreeMap<String, String>, key: &str) -> Result<f64, String> {
    let v = kv.get(key).ok_or_else(|| format!("missing {key}"))?;
    let x: f64 = v.parse().map_err(|_| format!("bad number for {key}: {v:?}"))?;
    if !x.is_finite() {
        return Err(format!("{key} must be finite"));
    }
    Ok(x)
}

fn get_usize(kv: &BTreeMap<String, String>, key: &str) -> Result<usize, String> {
    let v = kv.get(key).ok_or_else(|| format!("missing {key}"))?;
    v.parse().map_err(|_| format!("bad index for {key}: {v:?}"))
}

// Symbolic Pauli tracking for Clifford-angle gates, used to write the
// checkpoint annotations of generated networks.

fn letter_product(a: Pauli, b: Pauli) -> (C64, Pauli) {
    use Pauli::*;
    let i = C64::new(0.0, 1.0);
    let one = C64::new(1.0, 0.0);
    match (a, b) {
        (I, p) | (p, I) => (one, p),
        (X, X) | (Y, Y) | (Z, Z) => (one, I),
        (X, Y) => (i, Z),
        (Y, X) => (-i, Z),
        (Y, Z) => (i, X),
        (Z, Y) => (-i, X),
        (Z, X) => (i, Y),
        (X, Z) => (-i, Y),
    }
}

fn string_product(a: &PauliString, b: &PauliString) -> PauliString {
    let mut coeff = a.coeff * b.coeff;
    let letters = a
        .letters
        .iter()
        .zip(&b.letters)
        .map(|(&x, &y)| {
            let (c, p) = letter_product(x, y);
            coeff *= c;
            p
        })
        .collect();
    PauliString::new(letters, coeff)
}

fn anticommutes(a: &PauliString, b: &PauliString) -> bool {
    a.letters.iter().zip(&b.letters).filter(|(&x, &y)| x != Pauli::I && y != Pauli::I && x != y).count() % 2 == 1
}

/// `exp(-iθG/2) P exp(iθG/2)` for a Pauli generator `G`, when the result is a
/// single string.
fn conjugate_string(p: &PauliString, g: &PauliString, theta: f64) -> Option<PauliString> {
    if !anticommutes(p, g) {
        return Some(p.clone());
    }
    let (s, c) = theta.sin_cos();
    let tol = 1e-12;
    if s.abs() < tol {
        return Some(PauliString::new(p.letters.clone(), p.coeff * c.round()));
    }
    if c.abs() < tol {
        let gp = string_product(g, p);
        return Some(PauliString::new(gp.letters, gp.coeff * C64::new(0.0, -s.round())));
    }
    None
}

fn axis_generator(n: usize, spin: usize, phase: f64) -> Option<PauliString> {
    let (s, c) = phase.sin_cos();
    let tol = 1e-12;
    if s.abs() < tol {
        Some(PauliString::single(n, spin, Pauli::X, c.round()))
    } else if c.abs() < tol {
        Some(PauliString::single(n, spin, Pauli::Y, s.round()))
    } else {
        None
    }
}

/// Push a single Pauli string through a unitary gate symbolically.
pub fn track_pauli(p: &PauliString, gate: &Gate) -> Option<PauliString> {
    let n = p.n();
    match *gate {
        Gate::Rotation { spin, phase, angle } => conjugate_string(p, &axis_generator(n, spin, phase)?, angle),
        Gate::ZPhase { spin, phi } => conjugate_string(p, &PauliString::single(n, spin, Pauli::Z, 1.0), phi),
        Gate::ZZ { i, j, theta } => {
            let mut g = PauliString::single(n, i, Pauli::Z, 1.0);
            g.letters[j] = Pauli::Z;
            conjugate_string(p, &g, theta)
        }
        Gate::Barrier(_) => Some(p.clone()),
        Gate::Crusher | Gate::OrderFilter(_) => None,
    }
}

fn signed_label(p: &PauliString) -> String {
    let sign = if p.coeff.re < 0.0 { "-" } else { "" };
    format!("{sign}{}", p.label())
}

/// Fill annotations by tracking `start` through the leading Clifford gates.
pub fn annotate(net: &mut Network, start: &PauliString) {
    net.annotations.clear();
    let mut cur = start.clone();
    net.annotations.insert(0, signed_label(&cur));
    for (k, g) in net.gates.iter().enumerate() {
        match track_pauli(&cur, g) {
            Some(next) => {
                cur = next;
                net.annotations.insert(k + 1, signed_label(&cur));
            }
            None => break,
        }
    }
}

/// Phase of the excitation pulse that makes the encoded cat content `+X̃`.
fn encode_first_phase(n: usize) -> f64 {
    (PI - n as f64 * FRAC_PI_2).rem_euclid(2.0 * PI)
}

/// Cascade that turns `σz` on spin 0 into a product operator whose `±n`
/// coherence part is `X̃ = |0…0⟩⟨1…1| + |1…1⟩⟨0…0|`.
pub fn cat_encode_network(n: usize) -> Result<Network, NetError> {
    if n == 0 {
        return Err(NetError::Empty);
    }
    let mut net = Network::new(n);
    net.push(Gate::Rotation { spin: 0, phase: encode_first_phase(n), angle: FRAC_PI_2 });
    for k in 1..n {
        net.push(Gate::ZZ { i: k - 1, j: k, theta: FRAC_PI_2 });
        net.push(Gate::Rotation { spin: k, phase: FRAC_PI_2, angle: FRAC_PI_2 });
    }
    annotate(&mut net, &PauliString::single(n, 0, Pauli::Z, 1.0));
    Ok(net)
}

/// Inverse cascade taking `X̃` to `σx ⊗ |0…0⟩⟨0…0|` and `Ỹ` to
/// `σy ⊗ |0…0⟩⟨0…0|`. For one spin there is nothing to undo.
pub fn cat_decode_network(n: usize) -> Result<Network, NetError> {
    if n == 0 {
        return Err(NetError::Empty);
    }
    let mut net = Network::new(n);
    for k in (1..n).rev() {
        net.push(Gate::Rotation { spin: k, phase: FRAC_PI_2, angle: FRAC_PI_2 });
        net.push(Gate::ZZ { i: k - 1, j: k, theta: FRAC_PI_2 });
        net.push(Gate::Rotation { spin: k, phase: 0.0, angle: FRAC_PI_2 });
        net.push(Gate::Barrier(format!("classical:{k}=0")));
    }
    if n > 1 {
        net.push(Gate::ZPhase { spin: 0, phi: (n - 1) as f64 * FRAC_PI_2 });
    }
    Ok(net)
}

/// `X̃` (or `Ỹ` with `imag`) on `n` spins.
pub fn cat_coherence(n: usize, imag: bool) -> DeviationMatrix {
    let top = (1usize << n) - 1;
    let up = DeviationMatrix::ket_bra(n, top, 0);
    let down = DeviationMatrix::ket_bra(n, 0, top);
    if imag {
        // the n-spin analogue of σy = -i|0⟩⟨1| + i|1⟩⟨0|
        return down.scaled(C64::new(0.0, -1.0)).add(&up.scaled(C64::new(0.0, 1.0)));
    }
    up.add(&down)
}

/// `σx` (or `σy`) on spin 0 times the projector onto `|0…0⟩` of the rest.
pub fn pseudo_pure_target(n: usize, imag: bool) -> DeviationMatrix {
    let half = 1usize << (n - 1);
    let (a, b) = if imag { (C64::new(0.0, -1.0), C64::new(0.0, 1.0)) } else { (C64::new(1.0, 0.0), C64::new(1.0, 0.0)) };
    DeviationMatrix::ket_bra(n, 0, half).scaled(a).add(&DeviationMatrix::ket_bra(n, half, 0).scaled(b))
}

/// Execute ideal gates in order.
pub fn propagate(network: &Network, state: &DeviationMatrix) -> Result<DeviationMatrix, NetError> {
    propagate_with(network, state, None, &mut NoiseModel::noiseless(), false)
}

/// Execute gates, optionally with pulse-angle errors and with T2 decay during
/// each coupling gate (a `ZZ` of angle θ between `i` and `j` takes
/// `|θ|/(π|J_ij|)` seconds on `system`). With `check`, every annotated
/// position is compared against the dense state.
pub fn propagate_with(
    network: &Network,
    state: &DeviationMatrix,
    system: Option<&SpinSystem>,
    noise: &mut NoiseModel,
    check: bool,
) -> Result<DeviationMatrix, NetError> {
    if network.n != state.n() {
        return Err(NetError::SizeMismatch { network: network.n, state: state.n() });
    }
    network.check_bound()?;
    let mut rho = state.clone();
    if check {
        check_annotation(network, 0, &rho)?;
    }
    for (k, g) in network.gates.iter().enumerate() {
        match *g {
            Gate::Rotation { spin, phase, angle } => rho.rotate(spin, phase, noise.rotation_angle(angle))?,
            Gate::ZZ { i, j, theta } => {
                rho.zz(i, j, theta)?;
                if let Some(sys) = system.filter(|_| noise.t2_enabled()) {
                    let jij = sys.j_hz(i, j);
                    if jij != 0.0 {
                        rho.dephase(sys, theta.abs() / (PI * jij.abs()));
                    }
                }
            }
            Gate::ZPhase { spin, phi } => rho.z_phase(spin, phi)?,
            Gate::Crusher => rho = rho.crushed(),
            Gate::OrderFilter(m) => rho = rho.order_filtered(m),
            Gate::Barrier(_) => {}
        }
        if check {
            check_annotation(network, k + 1, &rho)?;
        }
    }
    Ok(rho)
}

fn check_annotation(network: &Network, position: usize, rho: &DeviationMatrix) -> Result<(), NetError> {
    let Some(expected) = network.annotations.get(&position) else {
        return Ok(());
    };
    let sum: PauliSum = expected.parse()?;
    let want = DeviationMatrix::from_pauli(&sum.0)?;
    let deviation = rho.max_abs_diff(&want);
    if deviation > 1e-9 {
        return Err(NetError::AnnotationMismatch { position, expected: expected.clone(), deviation });
    }
    Ok(())
}

pub fn gate_unitary(n: usize, gate: &Gate) -> Option<CMatrix> {
    match *gate {
        Gate::Rotation { spin, phase, angle } => Some(rotation_unitary(n, spin, phase, angle)),
        Gate::ZZ { i, j, theta } => Some(zz_unitary(n, i, j, theta)),
        Gate::ZPhase { spin, phi } => Some(z_phase_unitary(n, spin, phi)),
        Gate::Barrier(_) => Some(CMatrix::identity(1 << n)),
        Gate::Crusher | Gate::OrderFilter(_) => None,
    }
}

/// Ordered product of gate unitaries (last gate leftmost).
pub fn network_unitary(network: &Network) -> Result<CMatrix, NetError> {
    network.check_bound()?;
    let mut u = CMatrix::identity(1 << network.n);
    for (index, g) in network.gates.iter().enumerate() {
        if matches!(g, Gate::Barrier(_)) {
            continue;
        }
        let gu = gate_unitary(network.n, g).ok_or_else(|| NetError::NonUnitary { index, gate: g.to_string() })?;
        u = gu.matmul(&u);
    }
    Ok(u)
}

/// Delays (as coupling angles `π J τ`) at which the methyl template keeps
/// exactly the spin-½ part of the proton magnetization.
pub fn methyl_ideal_angles() -> [f64; 3] {
    [FRAC_PI_2, (-1.0 / 3f64.sqrt()).acos(), PI / 4.0]
}

/// Check that `system` is three equivalent protons (spins 0..3) sharing one
/// nonzero coupling to a carbon (spin 3). Returns that coupling.
pub fn methyl_coupling(system: &SpinSystem) -> Result<f64, NetError> {
    if system.n() != 4 {
        return Err(NetError::WrongSystem(format!("expected 4 spins, got {}", system.n())));
    }
    let j = system.j_hz(0, 3);
    if j == 0.0 || (1..3).any(|h| system.j_hz(h, 3) != j) {
        return Err(NetError::WrongSystem("protons 0..3 must share one nonzero coupling to spin 3".into()));
    }
    Ok(j)
}

/// Polarization-transfer template selecting the spin-½ manifolds of a methyl
/// group. `delays_s` are the three free-evolution periods; with J_HH = 0 each
/// delay is a set of commuting H–C couplings of angle `π J τ`.
pub fn methyl_selection_network(system: &SpinSystem, delays_s: [f64; 3]) -> Result<Network, NetError> {
    let j = methyl_coupling(system)?;
    let mut net = Network::new(4);
    let c = 3;
    let protons = |net: &mut Network, phase: f64, angle: f64| {
        for h in 0..3 {
            net.push(Gate::Rotation { spin: h, phase, angle });
        }
    };
    let delay = |net: &mut Network, tau: f64| {
        net.push(Gate::Barrier(format!("delay {tau:.6e}")));
        for h in 0..3 {
            net.push(Gate::ZZ { i: h, j: c, theta: PI * j * tau });
        }
    };
    protons(&mut net, 0.0, FRAC_PI_2);
    delay(&mut net, delays_s[0]);
    protons(&mut net, FRAC_PI_2, PI);
    net.push(Gate::Rotation { spin: c, phase: FRAC_PI_2, angle: FRAC_PI_2 });
    delay(&mut net, delays_s[1]);
    protons(&mut net, 0.0, FRAC_PI_2);
    net.push(Gate::Rotation { spin: c, phase: 0.0, angle: PI });
    delay(&mut net, delays_s[2]);
    protons(&mut net, FRAC_PI_2, PI);
    net.push(Gate::Rotation { spin: c, phase: 0.0, angle: FRAC_PI_2 });
    net.push(Gate::Crusher);
    Ok(net)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encode_gate_counts() {
        for n in 1..=7 {
            let net = cat_encode_network(n).unwrap();
            assert_eq!(net.two_spin_count(), n - 1);
            assert_eq!(net.rotation_count(), n);
        }
    }

    #[test]
    fn three_spin_checkpoints() {
        let net = cat_encode_network(3).unwrap();
        let labels: Vec<&str> = net.annotations.values().map(String::as_str).collect();
        assert_eq!(labels, ["ZII", "-XII", "-YZI", "-YXI", "-YYZ", "-YYX"]);
    }

    #[test]
    fn text_round_trip() {
        let net = cat_encode_network(3).unwrap();
        let back = Network::from_text(&net.to_text()).unwrap();
        assert_eq!(back.gates.len(), net.gates.len());
        assert_eq!(back.annotations, net.annotations);
        let (u, v) = (network_unitary(&net).unwrap(), network_unitary(&back).unwrap());
        assert!(u.max_abs_diff(&v) < 1e-12);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = Network::from_text("QUBITS n=2\nROT spin=0 phase=0\n").unwrap_err();
        assert!(matches!(err, NetError::Parse { line: 2, .. }));
        assert!(matches!(Network::from_text("QUBITS n=2\nZZ i=0 j=5 theta=90\n"), Err(NetError::Unbound { .. })));
    }

    #[test]
    fn zero_spins_rejected() {
        assert_eq!(cat_encode_network(0), Err(NetError::Empty));
        assert_eq!(cat_decode_network(0), Err(NetError::Empty));
    }

    #[test]
    fn non_unitary_inverse_fails() {
        let mut net = Network::new(1);
        net.push(Gate::Crusher);
        assert!(net.inverse().is_err());
        assert!(network_unitary(&net).is_err());
    }
}
