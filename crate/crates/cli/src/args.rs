use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "decode-sim",
    version,
    about = "LDPC decoding simulations with QP-ADMM and sum-product BP"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// FER/BER simulation over a range of Eb/N0 values.
    Run(RunArgs),
    /// QP-ADMM FER over a grid of mu or alpha values at one Eb/N0.
    Sweep(SweepArgs),
    /// Per-iteration timing of both decoders on several codes.
    Bench(BenchArgs),
    /// Write a built-in code as an alist file.
    Export(ExportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DecoderArg {
    Qpadmm,
    Bp,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SourceArg {
    Zeros,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AxisArg {
    Mu,
    Alpha,
}

/// Options shared by `run` and `sweep`.
#[derive(Debug, Args)]
pub struct SimArgs {
    /// Alist file, or `builtin:<name>`.
    #[arg(long)]
    pub code: String,
    #[arg(long, default_value_t = 1.0)]
    pub mu: f64,
    #[arg(long, default_value_t = 0.9)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1e-5)]
    pub epsilon: f64,
    /// Iteration cap for both decoders.
    #[arg(long, default_value_t = 1000)]
    pub max_iters: usize,
    /// Stop QP-ADMM once its output is an integral codeword.
    #[arg(long)]
    pub early_exit: bool,
    #[arg(long, default_value_t = 200)]
    pub min_errors: u64,
    /// Accepts scientific notation, e.g. `1e7`.
    #[arg(long, default_value = "1e7")]
    pub max_frames: String,
    #[arg(long, value_enum, default_value_t = SourceArg::Zeros)]
    pub source: SourceArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// CSV output path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub sim: SimArgs,
    #[arg(long, value_enum, default_value_t = DecoderArg::Qpadmm)]
    pub decoder: DecoderArg,
    /// `start:step:stop`, a comma list, or a single value (dB).
    #[arg(long)]
    pub ebno: String,
    /// JSON manifest path; defaults to `<out>.manifest.json` when `--out` is set.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub sim: SimArgs,
    #[arg(long, value_enum)]
    pub axis: AxisArg,
    /// `start:step:stop` or a comma list.
    #[arg(long)]
    pub grid: String,
    /// Single Eb/N0 in dB.
    #[arg(long)]
    pub ebno: f64,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Comma-separated alist paths or `builtin:<name>` entries.
    #[arg(long, value_delimiter = ',')]
    pub codes: Vec<String>,
    #[arg(long, default_value_t = 1.0)]
    pub mu: f64,
    #[arg(long, default_value_t = 0.9)]
    pub alpha: f64,
    #[arg(long, default_value_t = 10_000)]
    pub qp_iterations: usize,
    #[arg(long, default_value_t = 1_000)]
    pub bp_iterations: usize,
    #[arg(long, default_value_t = 5)]
    pub repeats: usize,
    #[arg(long, default_value_t = 2.0)]
    pub ebno: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// Built-in code name.
    #[arg(long)]
    pub name: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `start:step:stop`, `a,b,c` or a single number.
pub fn parse_range(text: &str) -> Result<Vec<f64>, String> {
    let num = |s: &str| {
        let x: f64 = s
            .trim()
            .parse()
            .map_err(|_| format!("`{s}` is not a number"))?;
        if x.is_finite() {
            Ok(x)
        } else {
            Err(format!("`{s}` is not finite"))
        }
    };
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [start, step, stop] => {
            let (start, step, stop) = (num(start)?, num(step)?, num(stop)?);
            if step <= 0.0 {
                return Err(format!("range step must be positive, got {step}"));
            }
            if stop < start {
                return Err(format!("range stop {stop} is below start {start}"));
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            if count > 100_000 {
                return Err(format!("range has {count} points"));
            }
            // Index-based so values do not drift; rounded to kill binary noise.
            Ok((0..count)
                .map(|k| round12(start + k as f64 * step))
                .collect())
        }
        [single] => single.split(',').map(num).collect(),
        _ => Err(format!(
            "`{text}` is not `start:step:stop`, a comma list or a number"
        )),
    }
}

fn round12(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

/// Parses a frame count, allowing `1e7`-style input.
pub fn parse_count(text: &str) -> Result<u64, String> {
    if let Ok(n) = text.parse::<u64>() {
        return Ok(n);
    }
    let x: f64 = text
        .parse()
        .map_err(|_| format!("`{text}` is not a count"))?;
    if x.is_finite() && x >= 0.0 && x.fract() == 0.0 && x <= u64::MAX as f64 {
        Ok(x as u64)
    } else {
        Err(format!("`{text}` is not a non-negative integer"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(
            parse_range("1.0:0.2:2.0").unwrap(),
            vec![1.0, 1.2, 1.4, 1.6, 1.8, 2.0]
        );
        assert_eq!(parse_range("0.1:0.1:1.5").unwrap().len(), 15);
        assert_eq!(parse_range("2.5").unwrap(), vec![2.5]);
        assert_eq!(parse_range("1,2,4").unwrap(), vec![1.0, 2.0, 4.0]);
        assert_eq!(parse_range("3:1:3").unwrap(), vec![3.0]);
        for bad in ["1:0:2", "2:1:1", "a:1:2", "1:2", "", "1:-1:0", "nan"] {
            assert!(parse_range(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn counts() {
        assert_eq!(parse_count("1e7").unwrap(), 10_000_000);
        assert_eq!(parse_count("250").unwrap(), 250);
        assert!(parse_count("1.5").is_err());
        assert!(parse_count("-3").is_err());
    }
}
