use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn spinbench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spinbench")).args(args).env("SPINBENCH_THREADS", "1").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn data(name: &str) -> String {
    format!("{}/../core/data/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn validate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = spinbench(&["validate", "--system", &data("hcc3.toml")]);
    assert_eq!(ok.status.code(), Some(0), "{}", stdout(&ok));

    let asym = dir.path().join("asym.toml");
    fs::write(&asym, "n = 2\nshift_hz = [0.0, 10.0]\nj_hz = [[0, 1, 5.0], [1, 0, 6.0]]\n").unwrap();
    let o = spinbench(&["validate", "--system", p(&asym)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("j_hz[1]"), "{}", stdout(&o));

    let extra = dir.path().join("extra.toml");
    fs::write(&extra, "n = 1\nshift_hz = [0.0]\ncolor = \"red\"\n").unwrap();
    let o = spinbench(&["validate", "--system", p(&extra)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("schema"), "{}", stdout(&o));

    let o = spinbench(&["validate", "--system", p(&dir.path().join("missing.toml"))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(spinbench(&["benchmark"]).status.code(), Some(2));
    assert_eq!(spinbench(&["benchmark", "--example", "hcc3", "--level", "fast", "--out", "x"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let o = spinbench(&["sweep", "--example", "hcc3", "--sweep", "volume=1:2:3", "--out", p(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn compile_three_spin_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let o = spinbench(&["compile", "--system", &data("hcc3.toml"), "--n", "3", "--out", p(dir.path())]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("estimated retention 1.000000"), "{}", stdout(&o));
    let seq = fs::read_to_string(dir.path().join("sequence.txt")).unwrap();
    assert!(seq.contains("# encode") && seq.contains("# decode") && seq.contains("PULSE"));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["chain"], serde_json::json!([0, 1, 2]));
}

#[test]
fn compile_seven_spin_reports_every_pair() {
    let dir = tempfile::tempdir().unwrap();
    let o = spinbench(&["compile", "--example", "crotonic7", "--n", "7", "--out", p(dir.path())]);
    assert_eq!(o.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["encode"]["pairs"].as_array().unwrap().len(), 21);
    assert_eq!(report["decode"]["pairs"].as_array().unwrap().len(), 21);
}

#[test]
fn bad_shape_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let shape = dir.path().join("bad.csv");
    fs::write(&shape, "dt_s=5e-6,angle_deg=90\namplitude_hz,phase_deg\nnot,numbers\n").unwrap();
    let spec = format!("0={}", p(&shape));
    let o = spinbench(&["compile", "--example", "hcc3", "--n", "3", "--shape", &spec, "--out", p(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn compile_network_file() {
    let dir = tempfile::tempdir().unwrap();
    let net = spinbench::netir::cat_encode_network(2).unwrap();
    let file = dir.path().join("enc.net");
    fs::write(&file, net.to_text()).unwrap();
    let two = dir.path().join("pair.toml");
    fs::write(&two, "n = 2\nchannel_ref_mhz = [500.13, 125.76]\nshift_hz = [0.0, 100.0]\nj_hz = [[0, 1, 140.0]]\n").unwrap();
    let o = spinbench(&["compile", "--system", p(&two), "--network", p(&file), "--out", p(&dir.path().join("out"))]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("out/sequence.txt").exists());
}

#[test]
fn ideal_seven_spin_benchmark() {
    let dir = tempfile::tempdir().unwrap();
    for label in ["cycle", "gradient"] {
        let out = dir.path().join(label);
        let o = spinbench(&["benchmark", "--example", "crotonic7", "--n", "7", "--label", label, "--out", p(&out)]);
        assert_eq!(o.status.code(), Some(0));
        assert!(stdout(&o).contains("F = 1.000000"), "{}", stdout(&o));
        for f in ["result.json", "final_spectrum.csv", "reference_spectrum.csv"] {
            assert!(out.join(f).exists(), "{f}");
        }
        let csv = fs::read_to_string(out.join("final_spectrum.csv")).unwrap();
        assert_eq!(csv.lines().count(), 1 + 64);
    }
}

#[test]
fn state_dump_files() {
    let dir = tempfile::tempdir().unwrap();
    let o = spinbench(&["benchmark", "--example", "hcc3", "--n", "3", "--dump-state", "--out", p(dir.path())]);
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("state.csv")).unwrap();
    assert_eq!(csv.lines().count(), 8);
    assert!(csv.lines().all(|l| l.split(',').count() == 16));
    let pauli = fs::read_to_string(dir.path().join("state_pauli.txt")).unwrap();
    assert!(pauli.lines().any(|l| l.ends_with("XII")), "{pauli}");
}

fn sweep_column(dir: &Path, col: usize) -> Vec<f64> {
    fs::read_to_string(dir.join("sweep.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(col).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn sweep_over_register_size() {
    let dir = tempfile::tempdir().unwrap();
    let o = spinbench(&["sweep", "--example", "crotonic7", "--sweep", "n=2:7:6", "--out", p(dir.path())]);
    assert_eq!(o.status.code(), Some(0));
    let f = sweep_column(dir.path(), 1);
    assert_eq!(f.len(), 6);
    assert!(f.iter().all(|x| (x - 1.0).abs() < 1e-9), "{f:?}");
}

#[test]
fn eps_sweep_is_monotone() {
    let dir = tempfile::tempdir().unwrap();
    let o = spinbench(&["sweep", "--example", "hcc3", "--level", "compiled", "--sweep", "eps=0:0.05:6", "--out", p(dir.path())]);
    assert_eq!(o.status.code(), Some(0));
    let f = sweep_column(dir.path(), 1);
    assert!(f.windows(2).all(|w| w[1] < w[0]), "{f:?}");
}

#[test]
fn sample_sweep_slope() {
    let dir = tempfile::tempdir().unwrap();
    let o = spinbench(&[
        "sweep", "--example", "hcc3", "--noise-eps", "0.05", "--sweep", "N=16,64,256,1024", "--seed", "2", "--out", p(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let line = stdout(&o);
    let slope: f64 = line.trim().rsplit(' ').next().unwrap().parse().unwrap();
    assert!((slope + 0.5).abs() < 0.15, "{line}");
}

#[test]
fn seeded_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |out: &Path| {
        let o = spinbench(&[
            "benchmark", "--example", "hcc3", "--level", "compiled", "--noise-eps", "0.01", "--jitter", "0.02", "--seed", "7",
            "--replicates", "4", "--out", p(out),
        ]);
        assert_eq!(o.status.code(), Some(0));
    };
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run(&a);
    run(&b);
    for f in ["result.json", "final_spectrum.csv", "reference_spectrum.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}
