use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use spinbench::spinsys::{chain_system, example_system, example_systems, EXAMPLE_NAMES};
use spinbench::{load_spin_system, SpinSystem};

fn pair(dnu: f64, j: f64) -> SpinSystem {
    load_spin_system(&format!(
        "n = 2\nchannel_ref_mhz = [500.0, 500.0]\nshift_hz = [0.0, {dnu}]\nj_hz = [[0, 1, {j}]]\nobserved = 0\n"
    ))
    .unwrap()
}

/// Largest admixture between Zeeman product states in the eigenvectors of
/// the full isotropic two-spin Hamiltonian (in units of rad/s).
fn eigen_mixing(dnu: f64, j: f64) -> f64 {
    // basis |00>, |01>, |10>, |11>; H = π ν1 Z1 + π ν2 Z2 + (π J / 2)(XX + YY + ZZ)
    let (n1, n2) = (0.0, dnu);
    let h = DMatrix::from_row_slice(
        4,
        4,
        &[
            PI * (n1 + n2) + PI * j / 2.0, 0.0, 0.0, 0.0,
            0.0, PI * (n1 - n2) - PI * j / 2.0, PI * j, 0.0,
            0.0, PI * j, PI * (n2 - n1) - PI * j / 2.0, 0.0,
            0.0, 0.0, 0.0, -PI * (n1 + n2) + PI * j / 2.0,
        ],
    );
    let eig = SymmetricEigen::new(h);
    let v = eig.eigenvectors;
    (0..4)
        .map(|c| {
            let col: Vec<f64> = (0..4).map(|r| v[(r, c)].abs()).collect();
            let top = col.iter().cloned().fold(0.0, f64::max);
            1.0 - top * top
        })
        .fold(0.0, f64::max)
}

#[test]
fn strong_coupling_warning_matches_eigenvector_mixing() {
    let strong = pair(5.0, 40.0);
    let report = strong.validate();
    assert!(report.errors.is_empty());
    assert_eq!(report.warnings.len(), 1);
    assert!(report.warnings[0].message.contains("weak-coupling"));
    // the product basis is far from the eigenbasis here
    assert!(eigen_mixing(5.0, 40.0) > 0.3);

    let weak = pair(1000.0, 40.0);
    assert!(weak.validate().warnings.is_empty());
    assert!(eigen_mixing(1000.0, 40.0) < 1e-3);
}

#[test]
fn heteronuclear_pairs_never_warn() {
    let s = example_system("hcc3").unwrap();
    let r = s.validate();
    assert!(r.is_ok(), "{r:?}");
    // H–C differ by hundreds of MHz
    assert!(r.warnings.iter().all(|w| !w.path.contains("[0][1]")));
}

#[test]
fn catalog_loads_and_round_trips() {
    let all = example_systems();
    assert_eq!(all.len(), EXAMPLE_NAMES.len());
    for (name, sys) in &all {
        assert!(sys.validate().is_ok(), "{name}");
        let again = load_spin_system(&sys.to_toml_string()).unwrap();
        assert_eq!(&again, sys, "{name}");
        assert_eq!(again.content_hash(), sys.content_hash());
    }
    assert_eq!(all["crotonic7"].n(), 7);
    assert!(example_system("nope").is_err());
}

#[test]
fn malformed_documents_are_rejected() {
    for bad in [
        "n = 2\nshift_hz = [0.0]\nj_hz = []\nobserved = 0\n",
        "n = 2\nshift_hz = [0.0, 1.0]\nj_hz = [[0, 0, 5.0]]\nobserved = 0\n",
        "n = 2\nshift_hz = [0.0, 1.0]\nj_hz = [[0, 2, 5.0]]\nobserved = 0\n",
        "n = 2\nshift_hz = [0.0, 1.0]\nj_hz = []\nobserved = 0\nbogus = 1\n",
        "n = 11\nshift_hz = [0,0,0,0,0,0,0,0,0,0,0]\nj_hz = []\nobserved = 0\n",
        "n = 2\nshift_hz = [0.0, 1.0]\nj_hz = [[0, 1, 5.0], [1, 0, 6.0]]\nobserved = 0\n",
        "not toml at all [",
    ] {
        assert!(load_spin_system(bad).is_err(), "{bad}");
    }
}

#[test]
fn subsystem_keeps_couplings() {
    let s = example_system("crotonic7").unwrap();
    let sub = s.subsystem(&[3, 4]);
    assert_eq!(sub.n(), 2);
    assert_eq!(sub.j_hz(0, 1), s.j_hz(3, 4));
    assert_eq!(sub.shift_hz(1), s.shift_hz(4));
}

#[test]
fn chain_has_strong_neighbours() {
    let c = chain_system(5);
    assert_eq!(c.n(), 5);
    assert_eq!(c.j_hz(1, 2), 100.0);
    assert_eq!(c.j_hz(0, 3), 5.0);
    assert!(c.validate().is_ok());
    assert_eq!(c.with_t2(0.5).t2_s(2), 0.5);
}
