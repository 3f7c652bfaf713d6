//! `monoseal`: capture simulation, key generation, encryption, restoration
//! and analysis of monospectral sub-image arrays.

mod commands;
mod config;
mod exit;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use monoseal::cipher::CombineScheme;

use crate::config::{PipelineConfig, Profile, SceneKind};
use crate::exit::Rejection;

#[derive(Parser, Debug)]
#[command(name = "monoseal", version, about = "Monospectral sub-image array encryption pipeline")]
struct Cli {
    /// Pipeline config document (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Seed for every random draw; overrides the config.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,

    /// Output directory; overrides the config.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Camera grid preset; overrides the config.
    #[arg(long, global = true, value_enum)]
    profile: Option<Profile>,

    /// Channels restored concurrently.
    #[arg(long, global = true, env = "MONOSEAL_THREADS", value_name = "N")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Render a colour scene through the camera grid into a mosaic and layout.
    Capture(CaptureArgs),
    /// Write a validated key file.
    Keygen(KeygenArgs),
    /// Encrypt a mosaic.
    Encrypt(CryptArgs),
    /// Decrypt a cipher file back to a mosaic.
    Decrypt(CryptArgs),
    /// Restore a colour image from a mosaic and its layout.
    Reconstruct(ReconstructArgs),
    /// Security and quality metrics for a mosaic and its cipher.
    Analyze(AnalyzeArgs),
    /// Encryption time and operation counts over image sizes.
    Bench(BenchArgs),
    /// Every stage end to end from one config.
    RunAll,
    /// Print the effective config document.
    ShowConfig,
}

#[derive(Args, Debug)]
struct CaptureArgs {
    /// Colour source image (binary PPM); a synthetic scene is used if absent.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Synthetic scene kind.
    #[arg(long, value_enum)]
    scene: Option<SceneKind>,
}

#[derive(Args, Debug)]
pub struct KeygenArgs {
    /// Comma-separated rules for the keystream register.
    #[arg(long)]
    fx_rules: Option<String>,
    /// Comma-separated rules for the seed-selection register.
    #[arg(long)]
    fy_rules: Option<String>,
    /// Keystream register seed as 8 bits, cell 1 first.
    #[arg(long)]
    fx_seed: Option<String>,
    #[arg(long)]
    fy_seed: Option<String>,
    #[arg(long, value_parser = parse_combine)]
    combine: Option<CombineScheme>,
    #[arg(long)]
    offset: Option<usize>,
    /// Chaos initial state `x,y,z,w`.
    #[arg(long, value_delimiter = ',')]
    chaos_init: Option<Vec<f64>>,
    /// Draw rules, seeds and chaos state from `--seed`.
    #[arg(long)]
    random: bool,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CryptArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    key: PathBuf,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReconstructArgs {
    /// Mosaic (PGM).
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    layout: PathBuf,
    /// Ground-truth colour image; adds PSNR columns.
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Magnify-and-superimpose baseline only.
    #[arg(long)]
    ciir_only: bool,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Metric {
    Stats,
    Histogram,
    Autocorr,
    Sensitivity,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    /// Plain mosaic (PGM).
    #[arg(long)]
    plain: PathBuf,
    /// Cipher file.
    #[arg(long)]
    cipher: PathBuf,
    /// Key; required for sensitivity rows.
    #[arg(long)]
    key: Option<PathBuf>,
    /// Restored colour image whose channel histograms are added.
    #[arg(long)]
    restored: Option<PathBuf>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "stats,histogram,autocorr,sensitivity")]
    metrics: Vec<Metric>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Sizes as `WxH`, comma-separated.
    #[arg(long, value_delimiter = ',', value_parser = parse_size, default_value = "800x600,2400x1800")]
    sizes: Vec<(usize, usize)>,
    #[arg(long, default_value_t = 3)]
    repeats: usize,
    #[arg(long)]
    key: Option<PathBuf>,
}

fn parse_combine(s: &str) -> Result<CombineScheme, String> {
    s.parse().map_err(|e: monoseal::Error| e.to_string())
}

fn parse_size(s: &str) -> Result<(usize, usize), String> {
    let (w, h) = s.split_once('x').ok_or_else(|| format!("size `{s}` is not WxH"))?;
    let parse = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("size `{s}`: {e}"));
    Ok((parse(w)?, parse(h)?))
}

/// Settings shared by every command after flags are merged into the config.
pub struct Context {
    pub cfg: PipelineConfig,
    pub out: PathBuf,
    pub threads: usize,
}

fn context(cli: &Cli) -> anyhow::Result<Context> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(p) = cli.profile {
        cfg.profile = p;
    }
    if let Some(out) = &cli.out {
        cfg.paths.out = Some(out.clone());
    }
    cfg.validate()?;
    let threads = match cli.threads {
        Some(0) => return Err(Rejection::Config("thread count must be at least 1".into()).into()),
        Some(n) => n,
        None => 3,
    };
    let out = cfg.paths.out.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out)?;
    Ok(Context { cfg, out, threads })
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let ctx = context(&cli)?;
    match cli.command {
        Command::Capture(a) => commands::capture(&ctx, a.input.as_deref(), a.scene),
        Command::Keygen(a) => commands::keygen(&ctx, &a),
        Command::Encrypt(a) => commands::encrypt(&ctx, &a.input, &a.key, a.output.as_deref()),
        Command::Decrypt(a) => commands::decrypt(&ctx, &a.input, &a.key, a.output.as_deref()),
        Command::Reconstruct(a) => commands::reconstruct(
            &ctx,
            &a.input,
            &a.layout,
            a.reference.as_deref(),
            a.ciir_only,
            a.output.as_deref(),
        ),
        Command::Analyze(a) => commands::analyze(
            &ctx,
            &a.plain,
            &a.cipher,
            a.key.as_deref(),
            a.restored.as_deref(),
            &a.metrics,
        ),
        Command::Bench(a) => commands::bench(&ctx, &a.sizes, a.repeats, a.key.as_deref()),
        Command::RunAll => commands::run_all(&ctx),
        Command::ShowConfig => {
            print!("{}", ctx.cfg.to_text());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::from(exit::OK),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit::code(&e))
        }
    }
}

