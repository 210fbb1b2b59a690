//! Command-line front end.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::ablation::{ablation_csv, run_ablation, AblationKind};
use crate::error::{Error, Result};
use crate::imaging::checkpoint::load_checkpoint;
use crate::imaging::rain::{synth_rain, RainParams};
use crate::imaging::scenes::scene;
use crate::imaging::{load_image, load_pairs, psnr, save_image, ssim, write_pair, Pair};
use crate::model::{flops_estimate, param_count, Model, Variant};
use crate::swap::{subband_swap, swap_table, BandSet, SwapMode, SwapSpec};
use crate::tensor::Tensor;
use crate::train::{log_csv, train_loop, RunConfig, Sink};
use crate::wavelet::{filter_bank, FamilyTag};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "pwfnet", version, about = "Pyramid wavelet-Fourier image restoration")]
pub struct Cli {
    /// Worker threads (overrides PWF_THREADS; 1 is bit-reproducible)
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Swap selected sub-bands from the clean image into the degraded one
    Analyze(AnalyzeArgs),
    /// PSNR/SSIM for all sixteen sub-band swap subsets
    Table(TableArgs),
    /// Build a paired dataset with synthetic rain
    Synth(SynthArgs),
    /// Train a network on a paired dataset
    Train(TrainArgs),
    /// Restore one image with a trained checkpoint
    Infer(InferArgs),
    /// Report parameters, estimated MACs and latency
    Bench(BenchArgs),
    /// Compare wavelet families, mixer kernels or loss terms
    Ablate(AblateArgs),
    /// Run the built-in invariant checks
    Selftest,
}

#[derive(Debug, Args, Serialize)]
pub struct AnalyzeArgs {
    /// Degraded image (PNG or PPM)
    #[arg(long)]
    pub degraded: PathBuf,
    /// Clean reference image (PNG or PPM)
    #[arg(long)]
    pub clean: PathBuf,
    /// Pyramid depth
    #[arg(long, default_value_t = 3)]
    pub levels: usize,
    /// Bands to swap, e.g. HL,LL (or none / all)
    #[arg(long, default_value = "HL,LL")]
    pub bands: String,
    /// whole or masked
    #[arg(long, default_value = "whole")]
    pub mode: String,
    /// Radial cutoff in [0,1] for masked mode
    #[arg(long, default_value_t = 0.5)]
    pub cutoff: f64,
    /// haar, db2, sym4, coif1 or bior2.2
    #[arg(long, default_value = "db2")]
    pub family: String,
    /// Where to write the swapped image [default: not written]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct TableArgs {
    /// Degraded image (PNG or PPM)
    #[arg(long)]
    pub degraded: PathBuf,
    /// Clean reference image (PNG or PPM)
    #[arg(long)]
    pub clean: PathBuf,
    /// Pyramid depth
    #[arg(long, default_value_t = 3)]
    pub levels: usize,
    /// haar, db2, sym4, coif1 or bior2.2
    #[arg(long, default_value = "db2")]
    pub family: String,
    /// whole or masked
    #[arg(long, default_value = "whole")]
    pub mode: String,
    /// Radial cutoff in [0,1] for masked mode
    #[arg(long, default_value_t = 0.5)]
    pub cutoff: f64,
    /// CSV output path [default: not written]
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    /// Directory of clean images [default: procedural scenes]
    #[arg(long)]
    pub clean: Option<PathBuf>,
    /// Dataset root; pairs go to <out>/pairs
    #[arg(long)]
    pub out: PathBuf,
    /// Base seed for scenes and rain
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Rain streaks per pixel
    #[arg(long, default_value_t = 0.006)]
    pub density: f64,
    /// Number of procedural scenes (ignored with --clean)
    #[arg(long, default_value_t = 32)]
    pub count: usize,
    /// Procedural scene size in pixels (ignored with --clean)
    #[arg(long, default_value_t = 64)]
    pub size: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    /// JSON file with "model" and "train" sections [default: built-in defaults]
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Training dataset root
    #[arg(long)]
    pub data: PathBuf,
    /// Held-out dataset root [default: last --holdout pairs of --data]
    #[arg(long)]
    pub eval: Option<PathBuf>,
    /// Pairs held out from --data when --eval is absent
    #[arg(long, default_value_t = 4)]
    pub holdout: usize,
    /// Checkpoint path; the best-evaluating model goes to <out>.best
    #[arg(long, default_value = "model.pwfn")]
    pub out: PathBuf,
    /// Metrics CSV path
    #[arg(long, default_value = "train_log.csv")]
    pub log: PathBuf,
    /// Override the configured iteration count
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Override the configured training seed
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args, Serialize)]
pub struct InferArgs {
    /// Checkpoint written by `train`
    #[arg(long)]
    pub ckpt: PathBuf,
    /// Degraded input image; sides must be multiples of 4
    #[arg(long)]
    pub input: PathBuf,
    /// Restored output image
    #[arg(long)]
    pub output: PathBuf,
    /// s, m or l
    #[arg(long, default_value = "l")]
    pub variant: String,
    /// Write one line per activation (name, shape, SHA-256) to this file
    #[arg(long)]
    pub dump_activations: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct BenchArgs {
    /// Checkpoint to benchmark [default: freshly built model from --config]
    #[arg(long)]
    pub ckpt: Option<PathBuf>,
    /// JSON config used when no checkpoint is given [default: built-in defaults]
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Square input side in pixels
    #[arg(long, default_value_t = 256)]
    pub size: usize,
    /// s, m or l
    #[arg(long, default_value = "l")]
    pub variant: String,
    /// Timed forward passes
    #[arg(long, default_value_t = 5)]
    pub repeat: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct AblateArgs {
    /// wavelet, kernel or loss
    pub kind: String,
    /// Training dataset root
    #[arg(long)]
    pub data: PathBuf,
    /// Held-out dataset root [default: last --holdout pairs of --data]
    #[arg(long)]
    pub eval: Option<PathBuf>,
    /// Pairs held out from --data when --eval is absent
    #[arg(long, default_value_t = 4)]
    pub holdout: usize,
    /// Training iterations per setting
    #[arg(long, default_value_t = 300)]
    pub budget: usize,
    /// Base JSON config [default: built-in defaults]
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// CSV output path [default: stdout]
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
///
/// ```
/// assert_eq!(pwfnet::cli::run(["pwfnet", "--version"]), 0);
/// assert_eq!(pwfnet::cli::run(["pwfnet", "no-such-command"]), 2);
/// ```
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(e @ (Error::InvalidArgument(_) | Error::Unknown { .. })) => {
            eprintln!("error: {}", e);
            EXIT_USAGE
        }
        Err(e) => {
            eprintln!("error: {}", e);
            EXIT_RUNTIME
        }
    }
}

/// `--threads`, else `PWF_THREADS`, else 1.
pub fn resolve_threads(flag: Option<usize>) -> Result<usize> {
    if let Some(n) = flag {
        return if n == 0 {
            Err(Error::invalid("--threads must be at least 1"))
        } else {
            Ok(n)
        };
    }
    match std::env::var("PWF_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::invalid(format!("PWF_THREADS={} is not a positive integer", v))),
        Err(_) => Ok(1),
    }
}

fn echo(command: &str, args: &impl Serialize, threads: usize) -> Result<()> {
    eprintln!("{} {} threads={}", command, serde_json::to_string(args)?, threads);
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    let threads = resolve_threads(cli.threads)?;
    match cli.command {
        Command::Analyze(a) => {
            echo("analyze", &a, threads)?;
            analyze(&a)
        }
        Command::Table(a) => {
            echo("table", &a, threads)?;
            table(&a)
        }
        Command::Synth(a) => {
            echo("synth", &a, threads)?;
            synth(&a)
        }
        Command::Train(a) => train(&a, threads),
        Command::Infer(a) => {
            echo("infer", &a, threads)?;
            infer(&a)
        }
        Command::Bench(a) => {
            echo("bench", &a, threads)?;
            bench(&a)
        }
        Command::Ablate(a) => ablate(&a, threads),
        Command::Selftest => selftest(),
    }
}

fn load_pair(degraded: &Path, clean: &Path) -> Result<(Tensor, Tensor)> {
    let d = load_image(degraded)?;
    let c = load_image(clean)?;
    if d.shape() != c.shape() {
        return Err(Error::shape(format!("degraded {:?} vs clean {:?}", d.shape(), c.shape())));
    }
    Ok((d, c))
}

fn analyze(a: &AnalyzeArgs) -> Result<()> {
    let fam = filter_bank(a.family.parse::<FamilyTag>()?);
    let spec = SwapSpec {
        levels: a.levels,
        bands: a.bands.parse::<BandSet>()?,
        mode: a.mode.parse::<SwapMode>()?,
        cutoff: a.cutoff,
    };
    spec.validate()?;
    let (d, c) = load_pair(&a.degraded, &a.clean)?;
    let out = subband_swap(&d, &c, &spec, &fam)?;
    println!("input   PSNR {:.4} dB  SSIM {:.5}", psnr(&d, &c)?, ssim(&d, &c)?);
    println!(
        "swapped PSNR {:.4} dB  SSIM {:.5}  ({} {} levels={} cutoff={})",
        psnr(&out, &c)?,
        ssim(&out, &c)?,
        spec.bands,
        spec.mode,
        spec.levels,
        spec.cutoff
    );
    if let Some(p) = &a.out {
        save_image(&out, p)?;
    }
    Ok(())
}

fn table(a: &TableArgs) -> Result<()> {
    let fam = filter_bank(a.family.parse::<FamilyTag>()?);
    let mode = a.mode.parse::<SwapMode>()?;
    let (d, c) = load_pair(&a.degraded, &a.clean)?;
    let report = swap_table(&d, &c, a.levels, &fam, mode, a.cutoff)?;
    print!("{}", report.to_text());
    if let Some(p) = &a.csv {
        fs::write(p, report.to_csv())?;
    }
    Ok(())
}

fn synth(a: &SynthArgs) -> Result<()> {
    let rain = |i: u64| RainParams {
        density: a.density,
        seed: a.seed.wrapping_mul(1_000_003).wrapping_add(i),
        ..Default::default()
    };
    let mut n = 0;
    match &a.clean {
        Some(dir) => {
            let mut files: Vec<PathBuf> = fs::read_dir(dir)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| {
                    matches!(
                        p.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()).as_deref(),
                        Some("png") | Some("ppm")
                    )
                })
                .collect();
            files.sort();
            for (i, f) in files.iter().enumerate() {
                let clean = load_image(f)?;
                let name = f.file_stem().and_then(|s| s.to_str()).unwrap_or("image").to_string();
                write_pair(&a.out, &name, &clean, &synth_rain(&clean, &rain(i as u64))?)?;
                n += 1;
            }
        }
        None => {
            for i in 0..a.count {
                let clean = scene(a.size, a.size, a.seed.wrapping_add(i as u64));
                write_pair(&a.out, &format!("scene{:04}", i), &clean, &synth_rain(&clean, &rain(i as u64))?)?;
                n += 1;
            }
        }
    }
    if n == 0 {
        return Err(Error::invalid("no clean images found"));
    }
    println!("wrote {} pairs to {}", n, a.out.join("pairs").display());
    Ok(())
}

fn read_config(path: &Option<PathBuf>) -> Result<RunConfig> {
    let cfg: RunConfig = match path {
        Some(p) => serde_json::from_str(&fs::read_to_string(p)?)
            .map_err(|e| Error::invalid(format!("{}: {}", p.display(), e)))?,
        None => RunConfig::default(),
    };
    cfg.model.validate()?;
    cfg.train.validate()?;
    Ok(cfg)
}

fn split_data(data: &Path, eval: &Option<PathBuf>, holdout: usize) -> Result<(Vec<Pair>, Vec<Pair>)> {
    let mut train = load_pairs(data)?;
    let eval = match eval {
        Some(p) => load_pairs(p)?,
        None => {
            if holdout == 0 || holdout >= train.len() {
                return Err(Error::invalid(format!(
                    "cannot hold out {} of {} pairs; pass --eval",
                    holdout,
                    train.len()
                )));
            }
            train.split_off(train.len() - holdout)
        }
    };
    Ok((train, eval))
}

#[derive(Serialize)]
struct Resolved<'a, A: Serialize> {
    args: &'a A,
    config: &'a RunConfig,
}

fn train(a: &TrainArgs, threads: usize) -> Result<()> {
    let mut cfg = read_config(&a.config)?;
    if let Some(n) = a.iterations {
        cfg.train.iterations = n;
    }
    if let Some(s) = a.seed {
        cfg.train.seed = s;
    }
    echo("train", &Resolved { args: a, config: &cfg }, threads)?;
    let (train, eval) = split_data(&a.data, &a.eval, a.holdout)?;
    let model = Model::build(&cfg.model)?;
    let result = train_loop(model, &train, &eval, &cfg.train, threads, &Sink::to(&a.out));
    let out = result?;
    fs::write(&a.log, log_csv(&out.log))?;
    println!(
        "input PSNR {:.4} dB  initial {:.4} dB  final {:.4} dB  best {:.4} dB @ {}",
        out.input_psnr, out.initial_eval_psnr, out.final_eval_psnr, out.best_eval_psnr, out.best_iter
    );
    Ok(())
}

/// Hex SHA-256 over the little-endian bytes of the tensor data.
pub fn tensor_digest(t: &Tensor) -> String {
    let mut h = Sha256::new();
    for v in t.data() {
        h.update(v.to_le_bytes());
    }
    h.finalize().iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{:02x}", b);
        s
    })
}

fn infer(a: &InferArgs) -> Result<()> {
    let variant = a.variant.parse::<Variant>()?;
    let ck = load_checkpoint(&a.ckpt)?;
    let x = load_image(&a.input)?;
    let (out, trace) = ck.model.forward_traced(&x, variant)?;
    save_image(&out.o1, &a.output)?;
    if let Some(p) = &a.dump_activations {
        let mut s = String::new();
        for (name, t) in &trace {
            let _ = writeln!(s, "{} {:?} {}", name, t.shape(), tensor_digest(t));
        }
        fs::write(p, s)?;
    }
    println!("variant {}  wrote {}", variant, a.output.display());
    Ok(())
}

fn bench(a: &BenchArgs) -> Result<()> {
    let variant = a.variant.parse::<Variant>()?;
    let model = match &a.ckpt {
        Some(p) => load_checkpoint(p)?.model,
        None => Model::build(&read_config(&a.config)?.model)?,
    };
    if a.size == 0 || a.size % 4 != 0 || a.repeat == 0 {
        return Err(Error::invalid("--size must be a positive multiple of 4 and --repeat positive"));
    }
    let x = Tensor::full(&[model.cfg.io_channels, a.size, a.size], 0.5);
    let mut times = Vec::with_capacity(a.repeat);
    for _ in 0..a.repeat {
        let t = Instant::now();
        model.forward(&x, variant)?;
        times.push(t.elapsed().as_secs_f64());
    }
    times.sort_by(f64::total_cmp);
    let median = times[times.len() / 2];
    println!("variant {}", variant);
    println!("params {}", param_count(&model, variant));
    println!("macs {:.0}", flops_estimate(&model, a.size, a.size, variant)?);
    println!("latency_median_ms {:.3}", median * 1e3);
    Ok(())
}

fn ablate(a: &AblateArgs, threads: usize) -> Result<()> {
    let kind = a.kind.parse::<AblationKind>()?;
    let base = read_config(&a.config)?;
    echo("ablate", &Resolved { args: a, config: &base }, threads)?;
    let (train, eval) = split_data(&a.data, &a.eval, a.holdout)?;
    let rows = run_ablation(kind, &base, a.budget, &train, &eval, threads, |r| {
        eprintln!("{} {}: {:.4} dB", r.kind, r.setting, r.eval_psnr)
    })?;
    let csv = ablation_csv(&rows);
    match &a.csv {
        Some(p) => fs::write(p, csv)?,
        None => print!("{}", csv),
    }
    Ok(())
}

fn selftest() -> Result<()> {
    let checks = crate::selftest::run_all();
    let mut failed = 0;
    for c in &checks {
        match &c.outcome {
            Ok(msg) => println!("PASS {}: {}", c.name, msg),
            Err(msg) => {
                failed += 1;
                println!("FAIL {}: {}", c.name, msg);
            }
        }
    }
    println!("{} checks, {} failed", checks.len(), failed);
    if failed > 0 {
        return Err(Error::Contract(format!("{} selftest checks failed", failed)));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run(["pwfnet", "frobnicate"]), EXIT_USAGE);
        assert_eq!(run(["pwfnet", "table", "--bogus"]), EXIT_USAGE);
        assert_eq!(run(["pwfnet", "--help"]), EXIT_OK);
    }

    #[test]
    fn thread_flag_wins() {
        assert_eq!(resolve_threads(Some(3)).unwrap(), 3);
        assert!(resolve_threads(Some(0)).is_err());
    }
}
