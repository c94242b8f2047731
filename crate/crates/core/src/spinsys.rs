//! Spin-register description: chemical shifts, scalar couplings, T2 and the
//! readout spin, plus the TOML file format and the shipped example systems.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest register the dense simulator accepts.
pub const MAX_SPINS: usize = 10;

#[derive(Debug, Error)]
pub enum SpinSysError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid spin system: {0}")]
    Invalid(ValidationReport),
    #[error("unknown example system {0:?}")]
    UnknownExample(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub errors: Vec<Finding>,
    pub warnings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }

    fn error(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.errors.push(Finding { path: path.into(), message: message.into() });
    }

    fn warn(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.warnings.push(Finding { path: path.into(), message: message.into() });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.errors {
            writeln!(f, "error: {e}")?;
        }
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        Ok(())
    }
}

/// A register of weakly coupled spin-½ nuclei.
///
/// Shifts are offsets in Hz from each spin's channel reference; the absolute
/// reference frequencies are metadata only.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinSystem {
    pub names: Vec<String>,
    pub channel_ref_mhz: Vec<f64>,
    pub shift_hz: Vec<f64>,
    /// Symmetric coupling matrix in Hz with zero diagonal.
    pub j_hz: Vec<Vec<f64>>,
    /// Per-spin T2 in seconds; `f64::INFINITY` means no dephasing.
    pub t2_s: Vec<f64>,
    pub observed: usize,
}

impl SpinSystem {
    #[inline]
    pub fn n(&self) -> usize {
        self.names.len()
    }

    #[inline]
    pub fn shift_hz(&self, i: usize) -> f64 {
        self.shift_hz[i]
    }

    #[inline]
    pub fn j_hz(&self, i: usize, j: usize) -> f64 {
        self.j_hz[i][j]
    }

    #[inline]
    pub fn t2_s(&self, i: usize) -> f64 {
        self.t2_s[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Check every invariant; never fails, the report carries the findings.
    pub fn validate(&self) -> ValidationReport {
        let mut r = ValidationReport::default();
        let n = self.n();
        if n == 0 || n > MAX_SPINS {
            r.error("n", format!("spin count must be in 1..={MAX_SPINS}, got {n}"));
        }
        for (path, len) in [
            ("channel_ref_mhz", self.channel_ref_mhz.len()),
            ("shift_hz", self.shift_hz.len()),
            ("t2_s", self.t2_s.len()),
            ("j_hz", self.j_hz.len()),
        ] {
            if len != n {
                r.error(path, format!("expected {n} entries, got {len}"));
            }
        }
        if !r.errors.is_empty() {
            return r;
        }
        for (i, &s) in self.shift_hz.iter().enumerate() {
            if !s.is_finite() {
                r.error(format!("shift_hz[{i}]"), "shift must be finite");
            }
        }
        for (i, &f) in self.channel_ref_mhz.iter().enumerate() {
            if !(f.is_finite() && f > 0.0) {
                r.error(format!("channel_ref_mhz[{i}]"), "reference frequency must be positive");
            }
        }
        for (i, &t) in self.t2_s.iter().enumerate() {
            if !(t > 0.0) {
                r.error(format!("t2_s[{i}]"), format!("T2 must be > 0, got {t}"));
            }
        }
        for (i, row) in self.j_hz.iter().enumerate() {
            if row.len() != n {
                r.error(format!("j_hz[{i}]"), format!("expected {n} columns, got {}", row.len()));
                continue;
            }
            if row[i] != 0.0 {
                r.error(format!("j_hz[{i}][{i}]"), "diagonal coupling must be zero");
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    r.error(format!("j_hz[{i}][{j}]"), "coupling must be finite");
                }
            }
        }
        if r.errors.is_empty() {
            for i in 0..n {
                for j in (i + 1)..n {
                    let (a, b) = (self.j_hz[i][j], self.j_hz[j][i]);
                    if a != b {
                        r.error(format!("j_hz[{i}][{j}]"), format!("asymmetric coupling: {a} vs {b}"));
                        continue;
                    }
                    let dnu = (self.channel_ref_mhz[i] - self.channel_ref_mhz[j]) * 1e6 + self.shift_hz[i] - self.shift_hz[j];
                    if a.abs() > dnu.abs() {
                        r.warn(
                            format!("j_hz[{i}][{j}]"),
                            format!("|J| = {} Hz exceeds frequency difference {} Hz; weak-coupling model suspect", a.abs(), dnu.abs()),
                        );
                    }
                }
            }
        }
        if self.observed >= n {
            r.error("observed", format!("observed spin {} out of range", self.observed));
        }
        r
    }

    /// Serialize to the TOML file format.
    pub fn to_toml_string(&self) -> String {
        toml::to_string(&SpinSystemDoc::from(self)).expect("spin system serializes")
    }

    /// Sub-register of the given spins (in that order).
    pub fn subsystem(&self, spins: &[usize]) -> SpinSystem {
        SpinSystem {
            names: spins.iter().map(|&i| self.names[i].clone()).collect(),
            channel_ref_mhz: spins.iter().map(|&i| self.channel_ref_mhz[i]).collect(),
            shift_hz: spins.iter().map(|&i| self.shift_hz[i]).collect(),
            j_hz: spins.iter().map(|&i| spins.iter().map(|&j| self.j_hz[i][j]).collect()).collect(),
            t2_s: spins.iter().map(|&i| self.t2_s[i]).collect(),
            observed: spins.iter().position(|&i| i == self.observed).unwrap_or(0),
        }
    }

    /// Same register with all T2 values replaced.
    pub fn with_t2(&self, t2_s: f64) -> SpinSystem {
        SpinSystem { t2_s: vec![t2_s; self.n()], ..self.clone() }
    }

    /// A stable hash of the serialized description, for provenance records.
    pub fn content_hash(&self) -> String {
        // FNV-1a over the canonical TOML text
        let mut h: u64 = 0xcbf29ce484222325;
        for b in self.to_toml_string().bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        format!("{h:016x}")
    }
}

/// On-disk form. `j_hz` is a list of `[i, j, value]` triples.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpinSystemDoc {
    n: usize,
    names: Option<Vec<String>>,
    channel_ref_mhz: Option<Vec<f64>>,
    shift_hz: Vec<f64>,
    #[serde(default)]
    j_hz: Vec<(f64, f64, f64)>,
    t2_s: Option<Vec<f64>>,
    #[serde(default)]
    observed: usize,
}

impl From<&SpinSystem> for SpinSystemDoc {
    fn from(s: &SpinSystem) -> Self {
        let n = s.n();
        let mut j = Vec::new();
        for a in 0..n {
            for b in (a + 1)..n {
                if s.j_hz[a][b] != 0.0 {
                    j.push((a as f64, b as f64, s.j_hz[a][b]));
                }
            }
        }
        SpinSystemDoc {
            n,
            names: Some(s.names.clone()),
            channel_ref_mhz: Some(s.channel_ref_mhz.clone()),
            shift_hz: s.shift_hz.clone(),
            j_hz: j,
            t2_s: Some(s.t2_s.clone()),
            observed: s.observed,
        }
    }
}

/// Parse and validate a spin-system document.
pub fn load_spin_system(text: &str) -> Result<SpinSystem, SpinSysError> {
    let doc: SpinSystemDoc = toml::from_str(text).map_err(|e| SpinSysError::Parse(e.to_string()))?;
    let n = doc.n;
    let mut report = ValidationReport::default();
    if n == 0 || n > MAX_SPINS {
        report.error("n", format!("spin count must be in 1..={MAX_SPINS}, got {n}"));
        return Err(SpinSysError::Invalid(report));
    }
    // upper triangle wins; a lower-triangle duplicate must agree
    let mut entries: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut j = vec![vec![0.0; n]; n];
    for (k, &(a, b, v)) in doc.j_hz.iter().enumerate() {
        let path = format!("j_hz[{k}]");
        if a.fract() != 0.0 || b.fract() != 0.0 || a < 0.0 || b < 0.0 || a as usize >= n || b as usize >= n {
            report.error(path, format!("indices ({a}, {b}) must be integers in 0..{n}"));
            continue;
        }
        let (a, b) = (a as usize, b as usize);
        if a == b {
            if v != 0.0 {
                report.error(path, "diagonal coupling must be zero");
            }
            continue;
        }
        let key = (a.min(b), a.max(b));
        match entries.get(&key) {
            Some(&prev) if prev != v => {
                report.error(path, format!("j[{}][{}] given as both {prev} and {v}", key.0, key.1));
            }
            _ => {
                entries.insert(key, v);
                j[a][b] = v;
                j[b][a] = v;
            }
        }
    }
    let system = SpinSystem {
        names: doc.names.unwrap_or_else(|| (0..n).map(|i| format!("S{i}")).collect()),
        channel_ref_mhz: doc.channel_ref_mhz.unwrap_or_else(|| vec![500.13; n]),
        shift_hz: doc.shift_hz,
        j_hz: j,
        t2_s: doc.t2_s.unwrap_or_else(|| vec![f64::INFINITY; n]),
        observed: doc.observed,
    };
    let v = system.validate();
    report.errors.extend(v.errors);
    report.warnings.extend(v.warnings);
    if !report.is_ok() {
        return Err(SpinSysError::Invalid(report));
    }
    Ok(system)
}

pub fn validate(system: &SpinSystem) -> ValidationReport {
    system.validate()
}

const HCC3: &str = include_str!("../data/hcc3.toml");
const CROTONIC7: &str = include_str!("../data/crotonic7.toml");
const METHYL4: &str = include_str!("../data/methyl4.toml");

/// Names of the shipped example systems.
pub const EXAMPLE_NAMES: [&str; 3] = ["hcc3", "crotonic7", "methyl4"];

/// The shipped catalog, keyed by name.
pub fn example_systems() -> BTreeMap<&'static str, SpinSystem> {
    EXAMPLE_NAMES.iter().map(|&name| (name, example_system(name).expect("shipped catalog is valid"))).collect()
}

pub fn example_system(name: &str) -> Result<SpinSystem, SpinSysError> {
    let text = match name {
        "hcc3" => HCC3,
        "crotonic7" => CROTONIC7,
        "methyl4" => METHYL4,
        other => return Err(SpinSysError::UnknownExample(other.to_string())),
    };
    load_spin_system(text)
}

/// Heteronuclear-looking linear chain of `n` spins for size sweeps: neighbours
/// couple at 100 Hz, everything else at 5 Hz, shifts 1 kHz apart.
pub fn chain_system(n: usize) -> SpinSystem {
    let mut j = vec![vec![0.0; n]; n];
    for a in 0..n {
        for b in 0..n {
            if a != b {
                j[a][b] = if a.abs_diff(b) == 1 { 100.0 } else { 5.0 };
            }
        }
    }
    SpinSystem {
        names: (0..n).map(|i| format!("Q{i}")).collect(),
        channel_ref_mhz: vec![125.76; n],
        shift_hz: (0..n).map(|i| 1000.0 * i as f64).collect(),
        j_hz: j,
        t2_s: vec![2.0; n],
        observed: 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_single_spin() {
        let s = load_spin_system("n = 1\nshift_hz = [0.0]\nj_hz = [[0, 0, 0.0]]\n").unwrap();
        assert_eq!(s.n(), 1);
        assert_eq!(s.t2_s(0), f64::INFINITY);
    }

    #[test]
    fn hcc3_reference_frequencies() {
        let s = example_system("hcc3").unwrap();
        assert_eq!(s.n(), 3);
        assert_eq!(s.observed, 0);
        assert_eq!(s.channel_ref_mhz, vec![500.13, 125.76, 125.76]);
    }

    #[test]
    fn asymmetric_coupling_names_j() {
        let doc = "n = 2\nshift_hz = [0.0, 900.0]\nj_hz = [[0, 1, 10.0], [1, 0, 12.0]]\n";
        match load_spin_system(doc) {
            Err(SpinSysError::Invalid(r)) => assert!(r.errors.iter().any(|e| e.path.starts_with("j_hz"))),
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn consistent_duplicate_is_fine() {
        let doc = "n = 2\nshift_hz = [0.0, 900.0]\nj_hz = [[0, 1, 10.0], [1, 0, 10.0]]\n";
        assert_eq!(load_spin_system(doc).unwrap().j_hz(1, 0), 10.0);
    }

    #[test]
    fn negative_t2_is_an_error() {
        let mut s = chain_system(2);
        s.t2_s[1] = -1.0;
        let r = s.validate();
        assert!(r.errors.iter().any(|e| e.path == "t2_s[1]"));
    }

    #[test]
    fn valid_seven_spin_system() {
        let s = example_system("crotonic7").unwrap();
        assert!(s.validate().errors.is_empty());
        assert_eq!(s.n(), 7);
        assert!(s.t2_s.iter().all(|&t| t == 2.0));
    }

    #[test]
    fn methyl4_is_symmetric_in_its_protons() {
        let s = example_system("methyl4").unwrap();
        assert_eq!(s.n(), 4);
        assert!(s.shift_hz[..3].iter().all(|&v| v == s.shift_hz[0]));
        assert!((0..3).all(|i| s.j_hz(i, 3) == s.j_hz(0, 3)));
    }

    #[test]
    fn observed_out_of_range() {
        let mut s = chain_system(3);
        s.observed = 3;
        assert!(!s.validate().is_ok());
    }

    #[test]
    fn unknown_key_is_a_parse_error() {
        assert!(matches!(load_spin_system("n = 1\nshift_hz=[0.0]\nbogus = 1\n"), Err(SpinSysError::Parse(_))));
    }

    #[test]
    fn catalog_has_required_entries() {
        let cat = example_systems();
        for name in ["hcc3", "crotonic7", "methyl4"] {
            assert!(cat.contains_key(name));
        }
    }
}
