use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::json;

use spinbench::bench::{
    benchmark_networks, cascade_order, pseudo_pure_prepare, run_cat_benchmark, suppression_curve, BenchmarkConfig,
    BenchmarkResult, Labeling, Level,
};
use spinbench::netir::Network;
use spinbench::pulsec::{compile, CompileOptions, DecompositionCache, RefocusOptions, ShapedPulse};
use spinbench::spinsys::{example_system, load_spin_system, ValidationReport};
use spinbench::{DeviationMatrix, SpinSystem};

const SCHEMA: &str = include_str!("../../../schemas/spin_system.schema.json");

#[derive(Parser)]
#[command(name = "spinbench", version, about = "Cat-state benchmark simulator and NMR pulse-sequence compiler")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a spin-system file against the schema and the physical invariants.
    Validate(SystemArgs),
    /// Compile the benchmark networks (or a network file) to a pulse sequence.
    Compile(CompileArgs),
    /// Run the cat-state benchmark and write the result and spectra.
    Benchmark(BenchArgs),
    /// Repeat the benchmark (or the twirl average) over a parameter range.
    Sweep(SweepArgs),
}

#[derive(Args, Clone)]
struct SystemArgs {
    /// Spin-system TOML file.
    #[arg(long, conflicts_with = "example", required_unless_present = "example")]
    system: Option<PathBuf>,
    /// Use a shipped system instead: hcc3, crotonic7 or methyl4.
    #[arg(long)]
    example: Option<String>,
}

#[derive(Args)]
struct CompileArgs {
    #[command(flatten)]
    system: SystemArgs,
    /// Compile the encode and decode networks of an n-spin benchmark.
    #[arg(long, conflicts_with = "network", required_unless_present = "network")]
    n: Option<usize>,
    /// Compile a network text file instead.
    #[arg(long)]
    network: Option<PathBuf>,
    /// Shaped pulse for one spin, as SPIN=PATH to a CSV shape. Repeatable.
    #[arg(long, value_name = "SPIN=PATH")]
    shape: Vec<String>,
    #[command(flatten)]
    refocus: RefocusArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Clone)]
struct RefocusArgs {
    /// Most refocusing pulses per segment.
    #[arg(long)]
    max_pulses: Option<usize>,
    /// Leave couplings weaker than this (Hz) unrefocused.
    #[arg(long, default_value_t = 0.0)]
    ignore_below_hz: f64,
    /// Refocus couplings to classical spins instead of absorbing them into frames.
    #[arg(long)]
    no_classical: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum LevelArg {
    Ideal,
    Compiled,
}

#[derive(Clone, Copy, ValueEnum)]
enum LabelArg {
    Cycle,
    Gradient,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Args, Clone)]
struct RunArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[arg(long, default_value_t = 3)]
    n: usize,
    #[arg(long, value_enum, default_value_t = LevelArg::Ideal)]
    level: LevelArg,
    #[arg(long, value_enum, default_value_t = LabelArg::Cycle)]
    label: LabelArg,
    /// Fractional rotation-angle error on every pulse.
    #[arg(long, default_value_t = 0.0)]
    noise_eps: f64,
    /// Standard deviation of a random per-pulse fractional angle error.
    #[arg(long, default_value_t = 0.0)]
    jitter: f64,
    /// T2 dephasing during delays.
    #[arg(long, value_enum, default_value_t = Switch::Off)]
    t2: Switch,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    replicates: usize,
    /// Apply cycle phases through the reference frames.
    #[arg(long)]
    frame_shift: bool,
    /// Fresh noise for every cycle step.
    #[arg(long)]
    independent_seeds: bool,
    #[command(flatten)]
    refocus: RefocusArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Also write the decoded pseudo-pure state as CSV and as a Pauli listing.
    #[arg(long)]
    dump_state: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,
    /// PARAM=START:STOP:STEPS or PARAM=V1,V2,... with PARAM one of eps, t2, n, N.
    #[arg(long)]
    sweep: String,
    /// Independent trials per point of an N sweep.
    #[arg(long, default_value_t = 200)]
    trials: usize,
}

enum Failure {
    Invalid(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Invalid(_) => 1,
            Failure::Io(_) => 2,
        }
    }
}

type Res<T> = Result<T, Failure>;

fn invalid(e: impl std::fmt::Display) -> Failure {
    Failure::Invalid(e.to_string())
}

fn read(path: &Path) -> Res<String> {
    fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn write(dir: &Path, name: &str, contents: &str) -> Res<()> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn make_dir(dir: &Path) -> Res<()> {
    fs::create_dir_all(dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))
}

/// Schema findings as `path: message`, empty when the document conforms.
fn schema_errors(text: &str) -> Res<Vec<String>> {
    let doc: toml::Value = toml::from_str(text).map_err(|e| Failure::Invalid(format!("parse error: {e}")))?;
    let value = serde_json::to_value(doc).map_err(invalid)?;
    let schema: serde_json::Value = serde_json::from_str(SCHEMA).expect("shipped schema is JSON");
    let validator = jsonschema::validator_for(&schema).expect("shipped schema compiles");
    Ok(validator
        .iter_errors(&value)
        .map(|e| {
            let path = e.instance_path().to_string();
            format!("{}: {e}", if path.is_empty() { "/" } else { &path })
        })
        .collect())
}

fn load(args: &SystemArgs) -> Res<SpinSystem> {
    if let Some(name) = &args.example {
        return example_system(name).map_err(invalid);
    }
    let path = args.system.as_ref().expect("clap enforces --system or --example");
    let text = read(path)?;
    let errors = schema_errors(&text)?;
    if !errors.is_empty() {
        return Err(Failure::Invalid(errors.join("\n")));
    }
    load_spin_system(&text).map_err(invalid)
}

fn cmd_validate(args: &SystemArgs) -> Res<()> {
    let (report, schema): (ValidationReport, Vec<String>) = match &args.example {
        Some(name) => (example_system(name).map_err(invalid)?.validate(), Vec::new()),
        None => {
            let text = read(args.system.as_ref().expect("clap enforces --system or --example"))?;
            let schema = schema_errors(&text)?;
            for e in &schema {
                println!("error: schema {e}");
            }
            let report = match load_spin_system(&text) {
                Ok(s) => s.validate(),
                Err(spinbench::spinsys::SpinSysError::Invalid(r)) => r,
                Err(e) => return Err(invalid(e)),
            };
            (report, schema)
        }
    };
    print!("{report}");
    if report.is_ok() && schema.is_empty() {
        println!("ok ({} warnings)", report.warnings.len());
        Ok(())
    } else {
        Err(Failure::Invalid(format!("{} errors", report.errors.len() + schema.len())))
    }
}

fn refocus_options(args: &RefocusArgs) -> CompileOptions {
    CompileOptions {
        refocus: RefocusOptions { max_pulses: args.max_pulses, ignore_below_hz: args.ignore_below_hz, ..RefocusOptions::default() },
        use_classical: !args.no_classical,
        ..CompileOptions::default()
    }
}

fn parse_shape(spec: &str, n: usize) -> Res<ShapedPulse> {
    let (spin, path) = spec.split_once('=').ok_or_else(|| Failure::Io(format!("--shape {spec:?}: expected SPIN=PATH")))?;
    let spin: usize = spin.parse().map_err(|_| Failure::Io(format!("--shape {spec:?}: bad spin index")))?;
    if spin >= n {
        return Err(Failure::Io(format!("--shape {spec:?}: spin out of range for {n} spins")));
    }
    let path = Path::new(path);
    let name = path.file_stem().map_or_else(|| "shape".into(), |s| s.to_string_lossy().into_owned());
    ShapedPulse::from_csv(&name, &read(path)?, spin).map_err(|e| Failure::Io(e.to_string()))
}

fn cmd_compile(args: &CompileArgs) -> Res<()> {
    let system = load(&args.system)?;
    let mut opts = refocus_options(&args.refocus);
    for s in &args.shape {
        opts.shapes.push(parse_shape(s, system.n())?);
    }
    let mut cache = DecompositionCache::new();
    let (text, report, retention, pulses) = match (args.n, &args.network) {
        (Some(n), _) => {
            let (chain, enc, dec) = benchmark_networks(&system, n).map_err(invalid)?;
            let (es, er) = compile(&enc, &system, &opts, &mut cache).map_err(invalid)?;
            let (ds, dr) = compile(&dec, &system, &opts, &mut cache).map_err(invalid)?;
            let retention = er.estimated_retention * dr.estimated_retention;
            let pulses = er.pulse_count + dr.pulse_count;
            let text = format!("# encode\n{}# decode\n{}", es.to_text(), ds.to_text());
            let report = json!({
                "chain": chain,
                "estimated_retention": retention,
                "pulse_count": pulses,
                "encode": er,
                "decode": dr,
            });
            (text, report, retention, pulses)
        }
        (None, Some(path)) => {
            let net = Network::from_text(&read(path)?).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
            let (seq, rep) = compile(&net, &system, &opts, &mut cache).map_err(invalid)?;
            let (r, p) = (rep.estimated_retention, rep.pulse_count);
            (seq.to_text(), serde_json::to_value(&rep).map_err(invalid)?, r, p)
        }
        (None, None) => unreachable!("clap enforces --n or --network"),
    };
    make_dir(&args.out)?;
    write(&args.out, "sequence.txt", &text)?;
    write(&args.out, "report.json", &(serde_json::to_string_pretty(&report).map_err(invalid)? + "\n"))?;
    println!("estimated retention {retention:.6}");
    println!("pulses {pulses}");
    Ok(())
}

fn bench_config(args: &RunArgs, n: usize, eps: f64) -> BenchmarkConfig {
    let level = match args.level {
        LevelArg::Ideal => Level::Ideal,
        LevelArg::Compiled => Level::Compiled,
    };
    let labeling = match args.label {
        LabelArg::Cycle => Labeling::PhaseCycle,
        LabelArg::Gradient => Labeling::Gradient,
    };
    let mut cfg = BenchmarkConfig::new(n, level, labeling);
    cfg.noise.rotation_angle_error = eps;
    cfg.noise.angle_jitter = args.jitter;
    cfg.noise.t2_enabled = args.t2 == Switch::On;
    cfg.noise.seed = args.seed;
    cfg.replicates = args.replicates;
    cfg.frame_shift = args.frame_shift;
    cfg.independent_seeds = args.independent_seeds;
    cfg.compile = refocus_options(&args.refocus);
    cfg
}

fn state_csv(state: &DeviationMatrix) -> String {
    let mut s = String::new();
    for a in 0..state.dim() {
        let row: Vec<String> = (0..state.dim()).map(|b| {
            let v = state.get(a, b);
            format!("{},{}", v.re, v.im)
        }).collect();
        let _ = writeln!(s, "{}", row.join(","));
    }
    s
}

fn state_pauli(state: &DeviationMatrix) -> String {
    let mut s = String::new();
    for t in state.to_pauli(1e-12) {
        let _ = writeln!(s, "{t}");
    }
    s
}

fn cmd_benchmark(args: &BenchArgs) -> Res<()> {
    let run = &args.run;
    let system = load(&run.system)?;
    let cfg = bench_config(run, run.n, run.noise_eps);
    let result = run_cat_benchmark(&system, &cfg).map_err(invalid)?;
    make_dir(&run.out)?;
    write_result(&run.out, &result)?;
    if args.dump_state {
        let pp = pseudo_pure_prepare(&system, &cfg).map_err(invalid)?;
        write(&run.out, "state.csv", &state_csv(&pp.state))?;
        write(&run.out, "state_pauli.txt", &state_pauli(&pp.state))?;
    }
    println!("F = {:.6} +/- {:.6}", result.f, result.f_uncertainty);
    println!("chain {:?}, off-target residual {:.3e}", result.chain, result.off_target_residual);
    if let Some(r) = result.estimated_retention {
        println!("estimated retention {r:.6}, pulses {}", result.pulse_count.unwrap_or(0));
    }
    if result.flagged {
        println!("warning: F exceeds 1 by more than 3 sigma");
    }
    Ok(())
}

fn write_result(dir: &Path, result: &BenchmarkResult) -> Res<()> {
    write(dir, "result.json", &(result.to_json() + "\n"))?;
    if let Some(s) = &result.final_spectrum {
        write(dir, "final_spectrum.csv", &s.to_csv())?;
    }
    if let Some(s) = &result.reference_spectrum {
        write(dir, "reference_spectrum.csv", &s.to_csv())?;
    }
    Ok(())
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Param {
    Eps,
    T2,
    N,
    Samples,
}

fn parse_sweep(spec: &str) -> Res<(Param, Vec<f64>)> {
    let bad = |m: &str| Failure::Io(format!("--sweep {spec:?}: {m}"));
    let (name, range) = spec.split_once('=').ok_or_else(|| bad("expected PARAM=START:STOP:STEPS"))?;
    let param = match name {
        "eps" | "noise-eps" => Param::Eps,
        "t2" => Param::T2,
        "n" => Param::N,
        "N" | "samples" => Param::Samples,
        other => return Err(bad(&format!("unknown parameter {other:?}; use eps, t2, n or N"))),
    };
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(&format!("{s:?} is not a number")));
    let values = if range.contains(':') {
        let parts: Vec<&str> = range.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("expected START:STOP:STEPS"));
        }
        let (start, stop) = (num(parts[0])?, num(parts[1])?);
        let steps: usize = parts[2].trim().parse().map_err(|_| bad("STEPS must be a positive integer"))?;
        match steps {
            0 => return Err(bad("STEPS must be a positive integer")),
            1 => vec![start],
            _ => (0..steps).map(|k| ((start + (stop - start) * k as f64 / (steps - 1) as f64) * 1e12).round() / 1e12).collect(),
        }
    } else {
        range.split(',').map(num).collect::<Res<Vec<f64>>>()?
    };
    if matches!(param, Param::N | Param::Samples) && values.iter().any(|v| v.fract() != 0.0 || *v < 1.0) {
        return Err(bad("values must be positive integers"));
    }
    Ok((param, values))
}

fn cmd_sweep(args: &SweepArgs) -> Res<()> {
    let run = &args.run;
    let (param, values) = parse_sweep(&args.sweep)?;
    let system = load(&run.system)?;
    let mut csv = String::new();
    let mut summary = String::new();
    if param == Param::Samples {
        let cfg = bench_config(run, run.n, run.noise_eps);
        let pp = pseudo_pure_prepare(&system, &cfg).map_err(invalid)?;
        let chain = cascade_order(&system, run.n).map_err(invalid)?;
        let twirl: Vec<usize> = chain.into_iter().filter(|&s| s != system.observed).collect();
        let counts: Vec<usize> = values.iter().map(|&v| v as usize).collect();
        let (points, slope) = suppression_curve(&pp.state, &twirl, &counts, args.trials, run.seed).map_err(invalid)?;
        csv.push_str("N,rms_residual,predicted\n");
        for p in &points {
            let _ = writeln!(csv, "{},{},{}", p.samples, p.rms_residual, p.predicted);
        }
        let _ = writeln!(summary, "log-log slope {slope:.4}");
    } else {
        let rows: Vec<Res<BenchmarkResult>> = values
            .par_iter()
            .map(|&v| {
                let (sys, cfg) = match param {
                    Param::Eps => (system.clone(), bench_config(run, run.n, v)),
                    Param::T2 => {
                        if v <= 0.0 {
                            return Err(Failure::Invalid(format!("T2 must be positive, got {v}")));
                        }
                        let mut cfg = bench_config(run, run.n, run.noise_eps);
                        cfg.noise.t2_enabled = true;
                        (system.with_t2(v), cfg)
                    }
                    Param::N => (system.clone(), bench_config(run, v as usize, run.noise_eps)),
                    Param::Samples => unreachable!(),
                };
                run_cat_benchmark(&sys, &cfg).map_err(invalid)
            })
            .collect();
        let name = match param {
            Param::Eps => "eps",
            Param::T2 => "t2_s",
            _ => "n",
        };
        let _ = writeln!(csv, "{name},f,f_phased,f_uncertainty,off_target_residual,estimated_retention");
        for (v, row) in values.iter().zip(rows) {
            let r = row?;
            let ret = r.estimated_retention.map_or(String::new(), |x| x.to_string());
            let _ = writeln!(csv, "{v},{},{},{},{},{ret}", r.f, r.f_phased, r.f_uncertainty, r.off_target_residual);
            let _ = writeln!(summary, "{name}={v}: F = {:.6}", r.f);
        }
    }
    make_dir(&run.out)?;
    write(&run.out, "sweep.csv", &csv)?;
    print!("{summary}");
    Ok(())
}

fn init_threads() {
    if let Some(n) = std::env::var("SPINBENCH_THREADS").ok().and_then(|v| v.parse::<usize>().ok()).filter(|&n| n > 0) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_threads();
    let outcome = match &cli.command {
        Command::Validate(a) => cmd_validate(a),
        Command::Compile(a) => cmd_compile(a),
        Command::Benchmark(a) => cmd_benchmark(a),
        Command::Sweep(a) => cmd_sweep(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Invalid(m) | Failure::Io(m) => eprintln!("error: {m}"),
            }
            ExitCode::from(f.code())
        }
    }
}
