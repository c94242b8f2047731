//! Dense deviation-density-matrix simulator.
//!
//! Basis conventions used throughout the crate:
//!
//! * spin 0 is the leftmost Kronecker factor, so spin `k` is bit `n-1-k` of a
//!   basis index; bit value 0 is the σz = +1 state.
//! * the coherence order of `|a⟩⟨b|` is `h(a) - h(b)` where `h` counts set
//!   bits. A z-rotation by φ on every spin multiplies an order-`m` element by
//!   `e^{+imφ}`, so `|1…1⟩⟨0…0|` is the `+n` coherence.
//! * rotations are `exp(-i(θ/2)(cos φ σx + sin φ σy))`, z-phases
//!   `exp(-iφσz/2)` and couplings `exp(-i(θ/2)σz σz)`, each acting by
//!   conjugation `ρ → UρU†`.

mod noise;
mod pauli;

pub use noise::{NoiseModel, NoiseSettings};
pub use pauli::{Pauli, PauliString, PauliSum};

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::linalg::{mat2_adjoint, rotation_mat2, CMatrix, Mat2};
use crate::spinsys::SpinSystem;

#[derive(Debug, Error, PartialEq)]
pub enum QsimError {
    #[error("qubit count mismatch: expected {expected}, got {got}")]
    QubitMismatch { expected: usize, got: usize },
    #[error("matrix dimension {dim} is not 2^{n}")]
    BadDimension { n: usize, dim: usize },
    #[error("coupling needs two distinct spins, got {0} twice")]
    SameSpin(usize),
    #[error("spin index {spin} out of range for {n} spins")]
    SpinOutOfRange { spin: usize, n: usize },
    #[error("operator is not unitary")]
    NotUnitary,
    #[error("invalid noise settings: {0}")]
    InvalidNoise(String),
    #[error("parse error: {0}")]
    Parse(String),
}

/// Spin `k`'s σz eigenvalue (+1 or -1) in basis state `a`.
#[inline]
pub fn z_sign(n: usize, k: usize, a: usize) -> f64 {
    if (a >> (n - 1 - k)) & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Coherence order of the element `|a⟩⟨b|`.
#[inline]
pub fn coherence_order(a: usize, b: usize) -> i32 {
    a.count_ones() as i32 - b.count_ones() as i32
}

/// Deviation part of an n-spin density matrix.
///
/// The simulator is linear, so the same type is also used for full density
/// matrices and for arbitrary (non-Hermitian) operators such as single
/// coherence components.
#[derive(Clone, Debug, PartialEq)]
pub struct DeviationMatrix {
    n: usize,
    m: CMatrix,
}

/// One coherence-order slice of a state.
#[derive(Clone, Debug)]
pub struct OrderComponent {
    pub order: i32,
    pub component: DeviationMatrix,
}

impl DeviationMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, m: CMatrix::zeros(1 << n) }
    }

    pub fn from_matrix(n: usize, m: CMatrix) -> Result<Self, QsimError> {
        if m.dim() != 1 << n {
            return Err(QsimError::BadDimension { n, dim: m.dim() });
        }
        Ok(Self { n, m })
    }

    /// `|a⟩⟨b|` on `n` spins.
    pub fn ket_bra(n: usize, a: usize, b: usize) -> Self {
        let mut s = Self::zeros(n);
        s.m.set(a, b, C64::new(1.0, 0.0));
        s
    }

    /// Weighted Kronecker-product sum of Pauli strings.
    pub fn from_pauli(terms: &[PauliString]) -> Result<Self, QsimError> {
        let n = terms.first().map(|t| t.n()).ok_or_else(|| QsimError::Parse("empty Pauli sum".into()))?;
        let mut out = Self::zeros(n);
        for t in terms {
            if t.n() != n {
                return Err(QsimError::QubitMismatch { expected: n, got: t.n() });
            }
            out.add_pauli(t);
        }
        Ok(out)
    }

    fn add_pauli(&mut self, p: &PauliString) {
        let mask = p.flip_mask();
        for a in 0..self.dim() {
            let b = a ^ mask;
            let v = self.m.get(a, b) + p.coeff * p.element(a, b);
            self.m.set(a, b, v);
        }
    }

    /// Pauli decomposition `c_P = Tr(P ρ)/2^n`, dropping `|c_P| < threshold`.
    pub fn to_pauli(&self, threshold: f64) -> Vec<PauliString> {
        let n = self.n;
        let dim = self.dim();
        let mut out = Vec::new();
        let mut letters = vec![Pauli::I; n];
        for code in 0..(1usize << (2 * n)) {
            for (k, l) in letters.iter_mut().enumerate() {
                *l = Pauli::ALL[(code >> (2 * (n - 1 - k))) & 3];
            }
            let p = PauliString::new(letters.clone(), C64::new(1.0, 0.0));
            let mask = p.flip_mask();
            // Tr(Pρ) = Σ_a P[a, a^mask] ρ[a^mask, a]
            let tr: C64 = (0..dim).map(|a| p.element(a, a ^ mask) * self.m.get(a ^ mask, a)).sum();
            let c = tr / dim as f64;
            if c.norm() >= threshold && c.norm() > 0.0 {
                out.push(PauliString::new(letters.clone(), c));
            }
        }
        out
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn dim(&self) -> usize {
        1 << self.n
    }

    #[inline]
    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize) -> C64 {
        self.m.get(a, b)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.m.frobenius_norm()
    }

    pub fn trace(&self) -> C64 {
        self.m.trace()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.m.max_abs_diff(&other.m)
    }

    pub fn scaled(&self, s: C64) -> Self {
        Self { n: self.n, m: self.m.scale(s) }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { n: self.n, m: &self.m + &other.m }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self { n: self.n, m: &self.m - &other.m }
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.m.is_hermitian(tol)
    }

    /// Hermitian to `tol` and trace magnitude at most `tol`.
    pub fn is_valid_deviation(&self, tol: f64) -> bool {
        self.is_hermitian(tol) && self.trace().norm() <= tol
    }

    fn check_spin(&self, spin: usize) -> Result<(), QsimError> {
        if spin >= self.n {
            return Err(QsimError::SpinOutOfRange { spin, n: self.n });
        }
        Ok(())
    }

    /// In-place conjugation by a one-spin unitary.
    pub fn conjugate_1q(&mut self, spin: usize, u: &Mat2) {
        let dim = self.dim();
        let bit = 1usize << (self.n - 1 - spin);
        let ud = mat2_adjoint(u);
        let data = self.m.as_mut_slice();
        // rows: ρ → Uρ
        for r0 in (0..dim).filter(|r| r & bit == 0) {
            let r1 = r0 | bit;
            for c in 0..dim {
                let (x0, x1) = (data[r0 * dim + c], data[r1 * dim + c]);
                data[r0 * dim + c] = u[0][0] * x0 + u[0][1] * x1;
                data[r1 * dim + c] = u[1][0] * x0 + u[1][1] * x1;
            }
        }
        // columns: ρ → ρU†
        for r in 0..dim {
            let row = &mut data[r * dim..(r + 1) * dim];
            for c0 in (0..dim).filter(|c| c & bit == 0) {
                let c1 = c0 | bit;
                let (x0, x1) = (row[c0], row[c1]);
                row[c0] = x0 * ud[0][0] + x1 * ud[1][0];
                row[c1] = x0 * ud[0][1] + x1 * ud[1][1];
            }
        }
    }

    /// In-place conjugation by `diag(e^{-i E_a})`.
    fn conjugate_diag_phase(&mut self, energy: &[f64]) {
        let dim = self.dim();
        let phases: Vec<C64> = energy.iter().map(|&e| C64::from_polar(1.0, -e)).collect();
        let data = self.m.as_mut_slice();
        for a in 0..dim {
            for b in 0..dim {
                data[a * dim + b] *= phases[a] * phases[b].conj();
            }
        }
    }

    pub fn rotate(&mut self, spin: usize, phase: f64, angle: f64) -> Result<(), QsimError> {
        self.check_spin(spin)?;
        self.conjugate_1q(spin, &rotation_mat2(phase, angle));
        Ok(())
    }

    pub fn z_phase(&mut self, spin: usize, phi: f64) -> Result<(), QsimError> {
        self.check_spin(spin)?;
        let n = self.n;
        let energy: Vec<f64> = (0..self.dim()).map(|a| 0.5 * phi * z_sign(n, spin, a)).collect();
        self.conjugate_diag_phase(&energy);
        Ok(())
    }

    pub fn zz(&mut self, i: usize, j: usize, theta: f64) -> Result<(), QsimError> {
        self.check_spin(i)?;
        self.check_spin(j)?;
        if i == j {
            return Err(QsimError::SameSpin(i));
        }
        let n = self.n;
        let energy: Vec<f64> = (0..self.dim()).map(|a| 0.5 * theta * z_sign(n, i, a) * z_sign(n, j, a)).collect();
        self.conjugate_diag_phase(&energy);
        Ok(())
    }

    /// Free precession for `t_s` seconds under the weak-coupling Hamiltonian
    /// of `system`. Spins flagged in `shift_absorbed` skip their chemical-shift
    /// phase (it lives in their rotating frame instead).
    pub fn free_evolve(&mut self, system: &SpinSystem, t_s: f64, shift_absorbed: &[bool], t2_enabled: bool) -> Result<(), QsimError> {
        let n = self.n;
        if system.n() != n {
            return Err(QsimError::QubitMismatch { expected: n, got: system.n() });
        }
        if t_s == 0.0 {
            return Ok(());
        }
        let energy: Vec<f64> = (0..self.dim())
            .map(|a| {
                let mut e = 0.0;
                for i in 0..n {
                    if !shift_absorbed.get(i).copied().unwrap_or(false) {
                        e += std::f64::consts::PI * system.shift_hz(i) * t_s * z_sign(n, i, a);
                    }
                    for j in (i + 1)..n {
                        let jij = system.j_hz(i, j);
                        if jij != 0.0 {
                            e += 0.5 * std::f64::consts::PI * jij * t_s * z_sign(n, i, a) * z_sign(n, j, a);
                        }
                    }
                }
                e
            })
            .collect();
        self.conjugate_diag_phase(&energy);
        if t2_enabled {
            self.dephase(system, t_s);
        }
        Ok(())
    }

    /// Damp `|a⟩⟨b|` by `exp(-t Σ_{i: a_i ≠ b_i} 1/T2_i)`.
    pub fn dephase(&mut self, system: &SpinSystem, t_s: f64) {
        let n = self.n;
        let dim = self.dim();
        let rates: Vec<f64> = (0..n).map(|i| 1.0 / system.t2_s(i)).collect();
        // damping depends only on the differing-bit mask
        let factors: Vec<f64> = (0..dim)
            .map(|mask| {
                let r: f64 = (0..n).filter(|&i| (mask >> (n - 1 - i)) & 1 == 1).map(|i| rates[i]).sum();
                (-t_s * r).exp()
            })
            .collect();
        let data = self.m.as_mut_slice();
        for a in 0..dim {
            for b in 0..dim {
                data[a * dim + b] *= factors[a ^ b];
            }
        }
    }

    /// Split into coherence-order components, `m = -n..=n`.
    pub fn coherence_decompose(&self) -> Vec<OrderComponent> {
        let n = self.n as i32;
        (-n..=n)
            .map(|order| OrderComponent { order, component: self.keep_orders(|m| m == order) })
            .collect()
    }

    fn keep_orders(&self, keep: impl Fn(i32) -> bool) -> Self {
        let dim = self.dim();
        let mut out = Self::zeros(self.n);
        for a in 0..dim {
            for b in 0..dim {
                if keep(coherence_order(a, b)) {
                    out.m.set(a, b, self.m.get(a, b));
                }
            }
        }
        out
    }

    /// Ideal strong z-gradient: keep only zero-order terms.
    pub fn crushed(&self) -> Self {
        self.keep_orders(|m| m == 0)
    }

    /// Ideal gradient labeling and echo selecting orders `+m` and `-m`.
    pub fn order_filtered(&self, m: i32) -> Self {
        self.keep_orders(|o| o.abs() == m.abs())
    }

    /// `Tr(O† ρ)`.
    pub fn expectation(&self, observable: &CMatrix) -> Result<C64, QsimError> {
        if observable.dim() != self.dim() {
            return Err(QsimError::BadDimension { n: self.n, dim: observable.dim() });
        }
        Ok(observable.inner(&self.m))
    }

    pub fn expectation_pauli(&self, p: &PauliString) -> Result<C64, QsimError> {
        if p.n() != self.n {
            return Err(QsimError::QubitMismatch { expected: self.n, got: p.n() });
        }
        let mask = p.flip_mask();
        // Tr(P† ρ) with P†[b,a] = conj(P[a,b])
        Ok((0..self.dim()).map(|a| (p.coeff * p.element(a, a ^ mask)).conj() * self.m.get(a, a ^ mask)).sum())
    }

    /// Conjugate by an arbitrary unitary on the full register.
    pub fn conjugate(&self, u: &CMatrix) -> Result<Self, QsimError> {
        if u.dim() != self.dim() {
            return Err(QsimError::BadDimension { n: self.n, dim: u.dim() });
        }
        Ok(Self { n: self.n, m: u.matmul(&self.m).matmul(&u.adjoint()) })
    }
}

pub fn apply_rotation(state: &DeviationMatrix, spin: usize, phase: f64, angle: f64) -> Result<DeviationMatrix, QsimError> {
    let mut s = state.clone();
    s.rotate(spin, phase, angle)?;
    Ok(s)
}

pub fn apply_z_phase(state: &DeviationMatrix, spin: usize, phi: f64) -> Result<DeviationMatrix, QsimError> {
    let mut s = state.clone();
    s.z_phase(spin, phi)?;
    Ok(s)
}

pub fn apply_zz(state: &DeviationMatrix, i: usize, j: usize, theta: f64) -> Result<DeviationMatrix, QsimError> {
    let mut s = state.clone();
    s.zz(i, j, theta)?;
    Ok(s)
}

pub fn free_evolution(
    state: &DeviationMatrix,
    system: &SpinSystem,
    t_s: f64,
    shift_absorbed: &[bool],
    noise: &NoiseSettings,
) -> Result<DeviationMatrix, QsimError> {
    let mut s = state.clone();
    s.free_evolve(system, t_s, shift_absorbed, noise.t2_enabled)?;
    Ok(s)
}

pub fn coherence_decompose(state: &DeviationMatrix) -> Vec<OrderComponent> {
    state.coherence_decompose()
}

pub fn crusher(state: &DeviationMatrix) -> DeviationMatrix {
    state.crushed()
}

pub fn order_filter(state: &DeviationMatrix, m: i32) -> DeviationMatrix {
    state.order_filtered(m)
}

/// `|Tr(U†V)| / dim` for two unitaries of equal size.
pub fn unitary_fidelity(u: &CMatrix, v: &CMatrix) -> Result<f64, QsimError> {
    if u.dim() != v.dim() {
        return Err(QsimError::BadDimension { n: u.dim(), dim: v.dim() });
    }
    if !u.is_unitary(1e-9) || !v.is_unitary(1e-9) {
        return Err(QsimError::NotUnitary);
    }
    Ok(u.inner(v).norm() / u.dim() as f64)
}

/// Full-register unitary of a one-spin rotation.
pub fn rotation_unitary(n: usize, spin: usize, phase: f64, angle: f64) -> CMatrix {
    crate::linalg::embed_1q(n, spin, &rotation_mat2(phase, angle))
}

pub fn z_phase_unitary(n: usize, spin: usize, phi: f64) -> CMatrix {
    let diag: Vec<C64> = (0..1usize << n).map(|a| C64::from_polar(1.0, -0.5 * phi * z_sign(n, spin, a))).collect();
    CMatrix::from_diag(&diag)
}

pub fn zz_unitary(n: usize, i: usize, j: usize, theta: f64) -> CMatrix {
    let diag: Vec<C64> = (0..1usize << n)
        .map(|a| C64::from_polar(1.0, -0.5 * theta * z_sign(n, i, a) * z_sign(n, j, a)))
        .collect();
    CMatrix::from_diag(&diag)
}

/// Projector onto a computational basis state.
pub fn basis_projector(n: usize, a: usize) -> DeviationMatrix {
    DeviationMatrix::ket_bra(n, a, a)
}

/// Sum of squared moduli of the elements that `keep` selects.
pub fn weight_where(state: &DeviationMatrix, keep: impl Fn(usize, usize) -> bool) -> f64 {
    let dim = state.dim();
    let mut w = 0.0;
    for a in 0..dim {
        for b in 0..dim {
            if keep(a, b) {
                w += state.get(a, b).norm_sqr();
            }
        }
    }
    w
}
