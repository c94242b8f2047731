use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::QsimError;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    /// Does this letter flip the computational basis bit?
    #[inline]
    pub fn flips(self) -> bool {
        matches!(self, Pauli::X | Pauli::Y)
    }

    /// Matrix element `<row| P |col>` for single-spin bits.
    #[inline]
    pub fn element(self, row: usize, col: usize) -> C64 {
        match (self, row, col) {
            (Pauli::I, r, c) if r == c => C64::new(1.0, 0.0),
            (Pauli::X, r, c) if r != c => C64::new(1.0, 0.0),
            (Pauli::Y, 0, 1) => C64::new(0.0, -1.0),
            (Pauli::Y, 1, 0) => C64::new(0.0, 1.0),
            (Pauli::Z, 0, 0) => C64::new(1.0, 0.0),
            (Pauli::Z, 1, 1) => C64::new(-1.0, 0.0),
            _ => C64::new(0.0, 0.0),
        }
    }

    pub fn letter(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn from_letter(c: char) -> Option<Self> {
        match c.to_ascii_uppercase() {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }
}

/// A weighted tensor product of Pauli matrices; letter `k` acts on spin `k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PauliString {
    pub letters: Vec<Pauli>,
    pub coeff: C64,
}

impl PauliString {
    pub fn new(letters: Vec<Pauli>, coeff: C64) -> Self {
        Self { letters, coeff }
    }

    /// Parse letters like `"YYX"` with unit coefficient.
    pub fn from_letters(s: &str, coeff: f64) -> Result<Self, QsimError> {
        let letters = s
            .chars()
            .map(|c| Pauli::from_letter(c).ok_or_else(|| QsimError::Parse(format!("bad Pauli letter {c:?} in {s:?}"))))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { letters, coeff: C64::new(coeff, 0.0) })
    }

    /// A single letter on `spin`, identity elsewhere.
    pub fn single(n: usize, spin: usize, p: Pauli, coeff: f64) -> Self {
        let mut letters = vec![Pauli::I; n];
        letters[spin] = p;
        Self { letters, coeff: C64::new(coeff, 0.0) }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.letters.len()
    }

    /// Basis-flip mask: `<a|P|b>` is nonzero only for `b = a ^ mask`.
    pub fn flip_mask(&self) -> usize {
        let n = self.n();
        self.letters
            .iter()
            .enumerate()
            .filter(|(_, p)| p.flips())
            .fold(0, |m, (k, _)| m | (1 << (n - 1 - k)))
    }

    /// `<row| P |col>` without the coefficient.
    pub fn element(&self, row: usize, col: usize) -> C64 {
        let n = self.n();
        self.letters.iter().enumerate().fold(C64::new(1.0, 0.0), |acc, (k, p)| {
            let s = n - 1 - k;
            acc * p.element((row >> s) & 1, (col >> s) & 1)
        })
    }

    pub fn label(&self) -> String {
        self.letters.iter().map(|p| p.letter()).collect()
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = self.coeff;
        if c.im.abs() < 1e-12 {
            write!(f, "{:+.6} {}", c.re, self.label())
        } else {
            write!(f, "({:.6}{:+.6}i) {}", c.re, c.im, self.label())
        }
    }
}

/// A sum of Pauli strings parsed from text like `"-YYX + 0.25 ZII"` or
/// `"0.5*XZ - YI"`. Coefficients are real.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliSum(pub Vec<PauliString>);

impl FromStr for PauliSum {
    type Err = QsimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut terms = Vec::new();
        let mut sign = 1.0;
        let mut coeff: Option<f64> = None;
        for tok in s.replace('*', " ").replace('+', " + ").replace('-', " - ").split_whitespace() {
            match tok {
                "+" => {}
                "-" => sign = -sign,
                t if t.chars().all(|c| Pauli::from_letter(c).is_some()) => {
                    terms.push(PauliString::from_letters(t, sign * coeff.unwrap_or(1.0))?);
                    sign = 1.0;
                    coeff = None;
                }
                t => {
                    let v: f64 = t.parse().map_err(|_| QsimError::Parse(format!("bad coefficient {t:?}")))?;
                    coeff = Some(v);
                }
            }
        }
        if terms.is_empty() {
            return Err(QsimError::Parse(format!("no Pauli terms in {s:?}")));
        }
        Ok(PauliSum(terms))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_signed_sum() {
        let s: PauliSum = "-YYX + 0.25 ZII - 0.5*XXI".parse().unwrap();
        assert_eq!(s.0.len(), 3);
        assert_eq!(s.0[0].coeff.re, -1.0);
        assert_eq!(s.0[1].label(), "ZII");
        assert_eq!(s.0[2].coeff.re, -0.5);
    }

    #[test]
    fn y_element_sign() {
        let y = PauliString::from_letters("Y", 1.0).unwrap();
        assert_eq!(y.element(0, 1), C64::new(0.0, -1.0));
        assert_eq!(y.flip_mask(), 1);
    }

    #[test]
    fn rejects_garbage() {
        assert!("YQX".parse::<PauliSum>().is_err());
    }
}
