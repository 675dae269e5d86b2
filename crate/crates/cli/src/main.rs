mod args;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;
use qpadmm::codes;
use qpadmm::sim::{
    self, BenchOptions, CodewordSource, DecoderChoice, SimConfig, SimError, SweepAxis,
};
use qpadmm::{BpParams, DecoderParams, ParityCheckMatrix};

use args::{
    AxisArg, BenchArgs, Cli, Command, DecoderArg, ExportArgs, RunArgs, SimArgs, SourceArg,
    SweepArgs,
};

/// Bad input (exit 2) versus failures while running (exit 1).
enum Failure {
    Validation(String),
    Runtime(anyhow::Error),
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        if e.is_validation() {
            Failure::Validation(e.to_string())
        } else {
            Failure::Runtime(e.into())
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure::Validation(msg.into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(a) => run(a),
        Command::Sweep(a) => sweep(a),
        Command::Bench(a) => bench(a),
        Command::Export(a) => export(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn load_code(spec: &str) -> Result<ParityCheckMatrix, Failure> {
    if let Some(name) = spec.strip_prefix("builtin:") {
        return codes::builtin(name).ok_or_else(|| {
            invalid(format!(
                "unknown built-in code `{name}` (known: {})",
                codes::BUILTIN_NAMES.join(", ")
            ))
        });
    }
    let text =
        std::fs::read_to_string(spec).map_err(|e| invalid(format!("cannot read {spec}: {e}")))?;
    ParityCheckMatrix::from_alist(&text).map_err(|e| invalid(format!("{spec}: {e}")))
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn sim_config(
    a: &SimArgs,
    decoder: DecoderChoice,
    ebno_list: Vec<f64>,
) -> Result<SimConfig, Failure> {
    Ok(SimConfig {
        code_label: a.code.clone(),
        decoder,
        ebno_list,
        admm: DecoderParams {
            mu: a.mu,
            alpha: a.alpha,
            epsilon: a.epsilon,
            max_iters: a.max_iters,
            early_exit: a.early_exit,
        },
        bp: BpParams {
            max_iters: a.max_iters,
            early_stop: true,
        },
        min_errors: a.min_errors,
        max_frames: args::parse_count(&a.max_frames)
            .map_err(|e| invalid(format!("--max-frames: {e}")))?,
        source: match a.source {
            SourceArg::Zeros => CodewordSource::AllZeros,
            SourceArg::Random => CodewordSource::Random,
        },
        seed: a.seed,
        workers: a.workers,
        rate: None,
    })
}

fn run(a: RunArgs) -> Result<(), Failure> {
    let h = load_code(&a.sim.code)?;
    let ebno = args::parse_range(&a.ebno).map_err(|e| invalid(format!("--ebno: {e}")))?;
    let decoder = match a.decoder {
        DecoderArg::Qpadmm => DecoderChoice::QpAdmm,
        DecoderArg::Bp => DecoderChoice::Bp,
        DecoderArg::Both => DecoderChoice::Both,
    };
    let cfg = sim_config(&a.sim, decoder, ebno)?;
    let report = sim::run_sim(&h, &cfg)?;

    for p in &report.points {
        eprintln!(
            "{:>7} {:>6.2} dB  frames {:>9}  errors {:>6}  FER {:.3e}  BER {:.3e}  iters {:.1}",
            p.decoder.name(),
            p.ebno_db,
            p.frames,
            p.frame_errors,
            p.fer,
            p.ber,
            p.mean_iters
        );
    }
    report.write_csv(open_out(a.sim.out.as_deref())?)?;
    let manifest = a.manifest.clone().or_else(|| {
        a.sim.out.as_ref().map(|p| {
            let mut s = p.clone().into_os_string();
            s.push(".manifest.json");
            PathBuf::from(s)
        })
    });
    if let Some(path) = manifest {
        std::fs::write(&path, report.manifest_json()?)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn sweep(a: SweepArgs) -> Result<(), Failure> {
    let h = load_code(&a.sim.code)?;
    let grid = args::parse_range(&a.grid).map_err(|e| invalid(format!("--grid: {e}")))?;
    let cfg = sim_config(&a.sim, DecoderChoice::QpAdmm, vec![a.ebno])?;
    let axis = match a.axis {
        AxisArg::Mu => SweepAxis::Mu,
        AxisArg::Alpha => SweepAxis::Alpha,
    };
    let rows = sim::sweep(&h, &cfg, axis, &grid)?;
    for r in &rows {
        match &r.error {
            Some(e) => eprintln!("{:>8.4}  invalid: {e}", r.value),
            None => eprintln!(
                "{:>8.4}  frames {:>9}  errors {:>6}  FER {:.3e}",
                r.value, r.frames, r.frame_errors, r.fer
            ),
        }
    }
    if let Some(best) = rows
        .iter()
        .filter(|r| r.is_valid())
        .min_by(|x, y| x.fer.total_cmp(&y.fer))
    {
        eprintln!("best FER at {}", best.value);
    }
    sim::write_sweep_csv(&rows, open_out(a.sim.out.as_deref())?)?;
    Ok(())
}

fn bench(a: BenchArgs) -> Result<(), Failure> {
    if a.codes.is_empty() {
        return Err(invalid("--codes needs at least one code"));
    }
    let codes = a
        .codes
        .iter()
        .map(|c| load_code(c).map(|h| (c.clone(), h)))
        .collect::<Result<Vec<_>, _>>()?;
    let opts = BenchOptions {
        admm: DecoderParams {
            mu: a.mu,
            alpha: a.alpha,
            ..DecoderParams::default()
        },
        qp_iterations: a.qp_iterations,
        bp_iterations: a.bp_iterations,
        repeats: a.repeats,
        ebno_db: a.ebno,
        seed: a.seed,
    };
    let rows = sim::scaling_bench(&codes, &opts)?;
    for r in &rows {
        eprintln!(
            "{:<24} n {:>6}  n+aux {:>6}  qpadmm {:>10.0} ns/iter  bp {:>10.0} ns/iter",
            r.label, r.n, r.n_ext, r.qp_ns_per_iter, r.bp_ns_per_iter
        );
    }
    sim::write_bench_csv(&rows, open_out(a.out.as_deref())?)?;
    Ok(())
}

fn export(a: ExportArgs) -> Result<(), Failure> {
    let h = load_code(&format!("builtin:{}", a.name))?;
    open_out(a.out.as_deref())?.write_all(h.to_alist().as_bytes())?;
    Ok(())
}
