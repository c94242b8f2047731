//! Small dense complex matrices.
//!
//! Everything in the simulator lives on at most a 2^10-dimensional Hilbert
//! space, so a flat row-major `Vec<Complex64>` is all the structure we need.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64 as C64;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Square complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![ZERO; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for k in 0..dim {
            m.data[k * dim + k] = ONE;
        }
        m
    }

    pub fn from_diag(diag: &[C64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (k, &d) in diag.iter().enumerate() {
            m.data[k * diag.len() + k] = d;
        }
        m
    }

    /// Build from a row-major buffer; panics if the length is not a square.
    pub fn from_vec(dim: usize, data: Vec<C64>) -> Self {
        assert_eq!(data.len(), dim * dim, "buffer is not {dim}x{dim}");
        Self { dim, data }
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                data.push(f(r, c));
            }
        }
        Self { dim, data }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.data[r * self.dim + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: C64) {
        self.data[r * self.dim + c] = v;
    }

    #[inline]
    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |r, c| self.get(c, r).conj())
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|k| self.get(k, k)).sum()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|&x| x * s).collect() }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest elementwise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim);
        let n = self.dim;
        let mut out = vec![ZERO; n * n];
        for r in 0..n {
            for k in 0..n {
                let a = self.data[r * n + k];
                if a == ZERO {
                    continue;
                }
                let row = &rhs.data[k * n..(k + 1) * n];
                let dst = &mut out[r * n..(r + 1) * n];
                for (d, &b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        Self { dim: n, data: out }
    }

    /// Kronecker product `self ⊗ rhs`.
    pub fn kron(&self, rhs: &Self) -> Self {
        let (n, m) = (self.dim, rhs.dim);
        Self::from_fn(n * m, |r, c| self.get(r / m, c / m) * rhs.get(r % m, c % m))
    }

    /// `Tr(self† · rhs)`.
    pub fn inner(&self, rhs: &Self) -> C64 {
        assert_eq!(self.dim, rhs.dim);
        self.data.iter().zip(&rhs.data).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        (0..self.dim).all(|r| (r..self.dim).all(|c| (self.get(r, c) - self.get(c, r).conj()).norm() <= tol))
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.adjoint().matmul(self).max_abs_diff(&Self::identity(self.dim)) <= tol
    }

    /// Matrix exponential by scaling and squaring of a Taylor series.
    ///
    /// Only used on small generators (pulse propagators on one or two spins),
    /// where it is accurate to machine precision.
    pub fn expm(&self) -> Self {
        let norm = self.data.iter().map(|x| x.norm()).sum::<f64>();
        let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
        let scaled = self.scale(ONE / f64::powi(2.0, squarings as i32));
        let mut result = Self::identity(self.dim);
        let mut term = Self::identity(self.dim);
        for k in 1..=24 {
            term = term.matmul(&scaled).scale(C64::new(1.0 / k as f64, 0.0));
            result = &result + &term;
            if term.frobenius_norm() < 1e-18 {
                break;
            }
        }
        for _ in 0..squarings {
            result = result.matmul(&result);
        }
        result
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;

    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim);
        CMatrix { dim: self.dim, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect() }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;

    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim);
        CMatrix { dim: self.dim, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect() }
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;

    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.matmul(rhs)
    }
}

/// 2x2 single-spin operator, row-major.
pub type Mat2 = [[C64; 2]; 2];

pub fn mat2_adjoint(u: &Mat2) -> Mat2 {
    [[u[0][0].conj(), u[1][0].conj()], [u[0][1].conj(), u[1][1].conj()]]
}

/// Rotation `exp(-i (angle/2)(cos φ σx + sin φ σy))`.
pub fn rotation_mat2(phase: f64, angle: f64) -> Mat2 {
    let (s, c) = (angle / 2.0).sin_cos();
    let e = C64::from_polar(1.0, phase);
    // -i sin(θ/2) (cos φ σx + sin φ σy) has off-diagonals -i s e^{-iφ} and -i s e^{iφ}
    [[C64::new(c, 0.0), -I * s * e.conj()], [-I * s * e, C64::new(c, 0.0)]]
}

/// Embed a one-spin operator on `spin` of an `n`-spin register (spin 0 is the
/// leftmost Kronecker factor).
pub fn embed_1q(n: usize, spin: usize, u: &Mat2) -> CMatrix {
    let dim = 1usize << n;
    let shift = n - 1 - spin;
    CMatrix::from_fn(dim, |r, c| {
        if (r ^ c) & !(1 << shift) != 0 {
            return ZERO;
        }
        u[(r >> shift) & 1][(c >> shift) & 1]
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expm_of_diagonal_generator() {
        let g = CMatrix::from_diag(&[C64::new(0.0, -0.3), C64::new(0.0, 2.5)]);
        let e = g.expm();
        assert!((e.get(0, 0) - C64::from_polar(1.0, -0.3)).norm() < 1e-14);
        assert!((e.get(1, 1) - C64::from_polar(1.0, 2.5)).norm() < 1e-14);
    }

    #[test]
    fn rotation_is_unitary_and_matches_pi_about_x() {
        let u = rotation_mat2(0.0, std::f64::consts::PI);
        let m = embed_1q(1, 0, &u);
        assert!(m.is_unitary(1e-14));
        assert!((m.get(0, 1) - C64::new(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn kron_dimensions_and_entries() {
        let x = CMatrix::from_vec(2, vec![ZERO, ONE, ONE, ZERO]);
        let z = CMatrix::from_diag(&[ONE, -ONE]);
        let xz = x.kron(&z);
        assert_eq!(xz.dim(), 4);
        assert_eq!(xz.get(0, 2), ONE);
        assert_eq!(xz.get(1, 3), -ONE);
    }
}
