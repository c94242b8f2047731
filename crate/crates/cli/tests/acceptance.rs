use std::f64::consts::{FRAC_PI_2, PI};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use spinbench::bench::*;
use spinbench::linalg::CMatrix;
use spinbench::pulsec::{
    decompose_shaped_pulse, decomposition_unitary, optimize_delays, PairTerm, RefocusOptions, RefocusPlan, ShapedPulse,
    GAUSS90_1MS,
};
use spinbench::qsim::{coherence_order, order_filter, unitary_fidelity, Pauli, PauliString};
use spinbench::spinsys::example_system;
use spinbench::{load_spin_system, DeviationMatrix, NoiseSettings, SpinSystem};

const F_TOL: f64 = 1e-9;
const SELECT_TOL: f64 = 1e-10;
const RETENTION_SLACK: f64 = 0.01;
const TRACK_TOL: f64 = 0.05;
const GRID_SLACK: f64 = 1e-9;
const SHAPE_FIDELITY: f64 = 0.999;
const SHAPE_RESIDUAL: f64 = 1e-3;
const SLOPE: f64 = -0.5;
const SLOPE_TOL: f64 = 0.15;
const METHYL_TOL: f64 = 1e-6;
const IDEAL_SECONDS: f64 = 5.0;
const SUPPRESSION_SECONDS: f64 = 30.0;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn crotonic() -> SpinSystem {
    example_system("crotonic7").unwrap()
}

fn hcc3() -> SpinSystem {
    example_system("hcc3").unwrap()
}

fn ideal_round_trip() -> Outcome {
    let sys = crotonic();
    let t0 = Instant::now();
    let mut worst: f64 = 0.0;
    for n in 2..=7 {
        for labeling in [Labeling::PhaseCycle, Labeling::Gradient] {
            let r = run_cat_benchmark(&sys, &BenchmarkConfig::new(n, Level::Ideal, labeling)).map_err(|e| e.to_string())?;
            worst = worst.max((r.f - 1.0).abs());
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    check(worst <= F_TOL && secs < IDEAL_SECONDS, format!("max |F-1| = {worst:.2e}, {secs:.2} s"))
}

/// Matrix elements `(a, b)` to inject: every one for small registers, a
/// spread of every order (including both extremes) otherwise.
fn injected_elements(n: usize) -> Vec<(usize, usize)> {
    let dim = 1usize << n;
    if n <= 3 {
        return (0..dim).flat_map(|a| (0..dim).map(move |b| (a, b))).collect();
    }
    let mut v: Vec<(usize, usize)> = (0..400).map(|k| ((k * 37 + 3) % dim, (k * 91 + 5) % dim)).collect();
    v.extend([(dim - 1, 0), (0, dim - 1)]);
    v
}

fn selection_exactness() -> Outcome {
    let mut worst_reject: f64 = 0.0;
    let mut worst_keep: f64 = 0.0;
    let mut kept = 0;
    for n in [3usize, 7] {
        for (a, b) in injected_elements(n) {
            let m = coherence_order(a, b);
            let amplitude = C64::new(0.6, -0.3);
            let rho = DeviationMatrix::ket_bra(n, a, b).scaled(amplitude);
            let cycle = phase_cycle_select(n, |_, phi| -> Result<C64, BenchError> {
                let mut r = rho.clone();
                for s in 0..n {
                    r.z_phase(s, phi)?;
                }
                Ok(r.get(a, b))
            })
            .map_err(|e| e.to_string())?;
            if m == n as i32 {
                let oracle = order_filter(&rho, n as i32).get(a, b);
                worst_keep = worst_keep.max((cycle.o - oracle * (2 * n + 1) as f64).norm());
                worst_keep = worst_keep.max((oracle - amplitude).norm());
                kept += 1;
            } else {
                worst_reject = worst_reject.max(cycle.o.norm());
            }
        }
    }
    check(
        worst_reject < SELECT_TOL && worst_keep < SELECT_TOL && kept >= 2,
        format!("max |o| for m != n {worst_reject:.2e}; max |o - (2n+1)·oracle| for m = n {worst_keep:.2e}"),
    )
}

fn labeling_equivalence() -> Outcome {
    let mut worst: f64 = 0.0;
    for (sys, n) in [(hcc3(), 3), (crotonic(), 3), (crotonic(), 7)] {
        for level in [Level::Ideal, Level::Compiled] {
            let c = run_cat_benchmark(&sys, &BenchmarkConfig::new(n, level, Labeling::PhaseCycle)).map_err(|e| e.to_string())?;
            let g = run_cat_benchmark(&sys, &BenchmarkConfig::new(n, level, Labeling::Gradient)).map_err(|e| e.to_string())?;
            worst = worst.max((c.f - g.f).abs());
        }
    }
    check(worst <= F_TOL, format!("max |F_cycle - F_gradient| = {worst:.2e}"))
}

fn compiler_soundness() -> Outcome {
    let sys = hcc3();
    let mut cfg = BenchmarkConfig::new(3, Level::Compiled, Labeling::Gradient);
    let full = run_cat_benchmark(&sys, &cfg).map_err(|e| e.to_string())?;
    let full_ret = full.estimated_retention.ok_or("compiled run reports retention")?;
    cfg.compile.refocus = RefocusOptions { ignore_below_hz: 60.0, ..RefocusOptions::default() };
    let under = run_cat_benchmark(&sys, &cfg).map_err(|e| e.to_string())?;
    let under_ret = under.estimated_retention.ok_or("compiled run reports retention")?;
    let sound = full.f >= full_ret - RETENTION_SLACK;
    let drops = under_ret < full_ret - 1e-3;
    let tracks = (under.f - under_ret).abs() <= TRACK_TOL;
    check(
        sound && drops && tracks,
        format!(
            "full: F={:.6} retention={full_ret:.6}; couplings < 60 Hz unrefocused: F={:.6} retention={under_ret:.6}",
            full.f, under.f
        ),
    )
}

/// Smallest weighted residual over a uniform grid of interval durations.
fn grid_minimum(plan: &RefocusPlan, pairs: &[PairTerm], t_max: f64, steps: usize) -> f64 {
    let k = plan.intervals();
    let mut best = f64::INFINITY;
    let mut idx = vec![0usize; k];
    loop {
        let t: Vec<f64> = idx.iter().map(|&i| t_max * i as f64 / steps as f64).collect();
        let r: f64 = pairs
            .iter()
            .filter(|p| p.weight > 0.0)
            .map(|p| {
                let a = p.offset + (0..k).map(|c| plan.coefficient(p, c) * t[c]).sum::<f64>();
                p.weight * (a - p.target).powi(2)
            })
            .sum();
        best = best.min(r);
        let mut c = 0;
        while c < k {
            idx[c] += 1;
            if idx[c] <= steps {
                break;
            }
            idx[c] = 0;
            c += 1;
        }
        if c == k {
            return best;
        }
    }
}

fn delay_optimality() -> Outcome {
    let problems: Vec<(Vec<Vec<i8>>, Vec<PairTerm>)> = vec![
        (vec![vec![1], vec![1]], vec![PairTerm::new(0, 1, 37.0, 1.0)]),
        (vec![vec![1], vec![1], vec![1]], vec![PairTerm::new(0, 1, 100.0, FRAC_PI_2), PairTerm::new(1, 2, 50.0, 0.0)]),
        (
            vec![vec![1, 1], vec![1, 1], vec![1, -1]],
            vec![PairTerm::new(0, 1, 140.0, FRAC_PI_2), PairTerm::new(0, 2, -6.5, 0.0), PairTerm::new(1, 2, 54.0, 0.0)],
        ),
        (
            vec![vec![1, 1, 1], vec![1, -1, 1], vec![1, 1, -1]],
            vec![PairTerm::new(0, 1, 30.0, 2.0), PairTerm::new(0, 2, 70.0, -1.0), PairTerm::new(1, 2, 45.0, 0.5)],
        ),
        (
            vec![vec![1, 1, 1], vec![-1, 1, 1], vec![1, 1, -1]],
            vec![PairTerm::new(0, 1, 90.0, -0.7), PairTerm::new(0, 2, 10.0, 3.0), PairTerm::new(1, 2, 60.0, 0.2)],
        ),
    ];
    let mut worst = f64::NEG_INFINITY;
    let count = problems.len();
    for (signs, pairs) in problems {
        let n = signs.len();
        let plan = RefocusPlan::from_signs(signs, &vec![1; n]);
        let sol = optimize_delays(&plan, &pairs, 0.0);
        let steps = if plan.intervals() == 3 { 120 } else { 2000 };
        worst = worst.max(sol.residual - grid_minimum(&plan, &pairs, 0.06, steps));
    }
    check(worst <= GRID_SLACK, format!("{count} problems, max (solver - grid) = {worst:.2e}"))
}

fn pauli(c: char) -> DMatrix<C64> {
    let (o, z, i) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 1.0));
    match c {
        'I' => DMatrix::from_row_slice(2, 2, &[o, z, z, o]),
        'X' => DMatrix::from_row_slice(2, 2, &[z, o, o, z]),
        'Y' => DMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
        'Z' => DMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
        _ => unreachable!(),
    }
}

fn kron(s: &str) -> DMatrix<C64> {
    s.chars().map(pauli).reduce(|a, b| a.kronecker(&b)).unwrap()
}

/// Piecewise-constant propagator of a pulse on spin 0 of a heteronuclear
/// pair, in the channel-reference frame.
fn piecewise_oracle(pulse: &ShapedPulse, sys: &SpinSystem) -> CMatrix {
    let carrier = sys.shift_hz(0) + pulse.offset_hz;
    let r = |x: f64| C64::new(x, 0.0);
    let h0 = kron("ZI") * r(PI * (sys.shift_hz(0) - carrier))
        + kron("IZ") * r(PI * sys.shift_hz(1))
        + kron("ZZ") * r(0.5 * PI * sys.j_hz(0, 1));
    let mut u = DMatrix::<C64>::identity(4, 4);
    for &(amp, ph) in &pulse.samples {
        let h = &h0 + (kron("XI") * r(ph.cos()) + kron("YI") * r(ph.sin())) * r(PI * amp);
        u = (h * C64::new(0.0, -pulse.dt_s)).exp() * u;
    }
    let frame = (kron("ZI") * C64::new(0.0, -PI * carrier * pulse.duration())).exp();
    let m = frame * u;
    CMatrix::from_fn(4, |a, b| m[(a, b)])
}

fn shaped_decomposition() -> Outcome {
    let sys = load_spin_system(
        "n = 2\nchannel_ref_mhz = [500.13, 125.76]\nshift_hz = [300.0, -200.0]\nj_hz = [[0, 1, 50.0]]\nobserved = 0\n",
    )
    .map_err(|e| e.to_string())?;
    let pulse = ShapedPulse::from_csv("gauss90_1ms", GAUSS90_1MS, 0).map_err(|e| e.to_string())?;
    let d = decompose_shaped_pulse(&pulse, &sys).map_err(|e| e.to_string())?;
    let fit = decomposition_unitary(&d, pulse.nominal_angle, 0);
    let f = unitary_fidelity(&fit, &piecewise_oracle(&pulse, &sys)).map_err(|e| e.to_string())?;
    check(
        f >= SHAPE_FIDELITY && d.residual_infidelity <= SHAPE_RESIDUAL,
        format!("fidelity vs piecewise oracle {f:.6}, residual_infidelity {:.2e}", d.residual_infidelity),
    )
}

fn fidelity_bound() -> Outcome {
    let sys = hcc3().with_t2(0.05);
    let mut cases = 0;
    let mut worst = f64::NEG_INFINITY;
    for level in [Level::Ideal, Level::Compiled] {
        for eps in [0.01, 0.02, 0.05] {
            for t2 in [false, true] {
                let noise = NoiseSettings { rotation_angle_error: eps, t2_enabled: t2, ..Default::default() };
                let b = decoding_fidelity_bound_check(&sys, 3, level, &noise).map_err(|e| e.to_string())?;
                worst = worst.max(b.f - b.avg_fidelity);
                if !b.holds {
                    return Err(format!("{level:?} eps={eps} t2={t2}: F={} > avg {}", b.f, b.avg_fidelity));
                }
                cases += 1;
            }
        }
    }
    check(worst <= F_TOL, format!("{cases} cases, max (F - avg fidelity) = {worst:.3e}"))
}

fn gate_count() -> Outcome {
    let sys = crotonic();
    let (_, enc, dec) = benchmark_networks(&sys, 7).map_err(|e| e.to_string())?;
    let in_networks = enc.two_spin_count() + dec.two_spin_count();
    let mut cfg = BenchmarkConfig::new(7, Level::Ideal, Labeling::Gradient);
    cfg.noise.rotation_angle_error = 0.02;
    let r = run_cat_benchmark(&sys, &cfg).map_err(|e| e.to_string())?;
    let expect = (1.0 - r.f) / 12.0;
    check(
        in_networks == 12 && r.gate_error.two_spin_gates == 12 && (r.gate_error.per_gate_error - expect).abs() < 1e-15,
        format!("{in_networks} ZZ gates; eps=0.02 gives F={:.6}, per-gate error {:.6}", r.f, r.gate_error.per_gate_error),
    )
}

fn randomized_suppression_slope() -> Outcome {
    let mut state = spinbench::netir::pseudo_pure_target(3, false);
    state = state.add(&DeviationMatrix::from_pauli(&[PauliString::single(3, 1, Pauli::X, 0.1)]).unwrap());
    let t0 = Instant::now();
    let (_, slope) = suppression_curve(&state, &[1, 2], &[16, 64, 256, 1024], 200, 9).map_err(|e| e.to_string())?;
    let secs = t0.elapsed().as_secs_f64();
    check((slope - SLOPE).abs() <= SLOPE_TOL && secs < SUPPRESSION_SECONDS, format!("slope {slope:.4}, {secs:.2} s"))
}

fn methyl_selection() -> Outcome {
    let sys = example_system("methyl4").unwrap();
    let s = methyl_search(&sys, 12).map_err(|e| e.to_string())?;
    let rho = methyl_selected_state(&sys, s.delays_s).map_err(|e| e.to_string())?;
    let spectra = methyl_verification_spectra(&sys, &rho, &[PI / 6.0, PI / 4.0, PI / 3.0]).map_err(|e| e.to_string())?;
    let extreme = spectra.iter().map(|v| v.extreme_max).fold(0.0, f64::max);
    check(
        s.residual <= METHYL_TOL && extreme <= METHYL_TOL,
        format!("spin-3/2 residual {:.2e}, extreme-group peak {extreme:.2e}, retained {:.3}", s.residual, s.retained),
    )
}

fn run_cli(args: &[&str], out: &Path) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_spinbench"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("SPINBENCH_THREADS", "2")
        .output()
        .map_err(|e| e.to_string())?;
    if status.status.success() {
        Ok(())
    } else {
        Err(format!("{args:?}: {}", String::from_utf8_lossy(&status.stderr)))
    }
}

fn cli_determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let runs: [&[&str]; 4] = [
        &["benchmark", "--example", "hcc3", "--n", "3", "--level", "compiled", "--noise-eps", "0.02", "--jitter", "0.01", "--t2", "on", "--seed", "11", "--replicates", "3", "--dump-state"],
        &["benchmark", "--example", "crotonic7", "--n", "5", "--label", "cycle", "--jitter", "0.02", "--independent-seeds", "--seed", "4"],
        &["sweep", "--example", "hcc3", "--sweep", "eps=0:0.05:4", "--jitter", "0.01", "--seed", "3"],
        &["compile", "--example", "crotonic7", "--n", "7"],
    ];
    let mut files = 0;
    for (k, args) in runs.iter().enumerate() {
        let a = tmp.path().join(format!("{k}a"));
        let b = tmp.path().join(format!("{k}b"));
        run_cli(args, &a)?;
        run_cli(args, &b)?;
        let mut names: Vec<_> = std::fs::read_dir(&a).map_err(|e| e.to_string())?.map(|e| e.unwrap().file_name()).collect();
        names.sort();
        if names.is_empty() {
            return Err(format!("{args:?} wrote nothing"));
        }
        for name in names {
            let x = std::fs::read(a.join(&name)).map_err(|e| e.to_string())?;
            let y = std::fs::read(b.join(&name)).map_err(|e| format!("{name:?}: {e}"))?;
            if x != y {
                return Err(format!("{args:?}: {name:?} differs between runs"));
            }
            files += 1;
        }
    }
    check(true, format!("{} runs, {files} artifacts byte-identical", runs.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("ideal round trip", ideal_round_trip),
        ("selection exactness", selection_exactness),
        ("labeling-mode equivalence", labeling_equivalence),
        ("compiler soundness", compiler_soundness),
        ("delay-optimizer optimality", delay_optimality),
        ("shaped-pulse decomposition", shaped_decomposition),
        ("F lower bound", fidelity_bound),
        ("two-spin gate count", gate_count),
        ("randomized suppression", randomized_suppression_slope),
        ("methyl selection", methyl_selection),
        ("CLI determinism", cli_determinism),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", k + 1);
            }
        }
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
