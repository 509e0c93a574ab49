//! Argument parsing and command dispatch.

use std::f64::consts::PI;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, ensure, Context};
use clap::{Args, Parser, Subcommand};
use phasecoder::bench::{generate_dataset, Head};
use phasecoder::{
    angle_to_phase, decode, decode_dual, encode, encode_dual, phase_to_angle, DualPhaseCode,
    PhaseCode, SymmetryConfig, DEFAULT_N_STEP,
};

use crate::bench;
use crate::config::{RunConfig, OUT_DIR_ENV};
use crate::format::{fixed12, join_values};
use crate::snapshot;
use crate::verify::{self, Hooks};

#[derive(Debug, Parser)]
#[command(
    name = "phasecoder",
    version,
    about = "Phase-shifting angle coder utilities and benchmark"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
#[allow(clippy::large_enum_variant)]
pub enum Command {
    /// Encode an orientation angle (radians) as a phase-shifting code.
    Encode(EncodeArgs),
    /// Decode a phase-shifting code back to an orientation angle.
    Decode(DecodeArgs),
    /// Run the property suite; exits nonzero if any property fails.
    Verify(VerifyArgs),
    /// Train and evaluate regression heads on the synthetic benchmark.
    Bench(BenchArgs),
    /// Write a synthetic dataset snapshot as CSV.
    Dataset(DatasetArgs),
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub theta: f64,
    #[arg(long, default_value_t = DEFAULT_N_STEP)]
    pub n_step: usize,
    /// Emit the concatenated dual-frequency code.
    #[arg(long)]
    pub dual: bool,
    /// Symmetry period of the angle; ignored with --dual.
    #[arg(long, default_value_t = PI)]
    pub period: f64,
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    #[arg(long)]
    pub dual: bool,
    #[arg(long, default_value_t = PI)]
    pub period: f64,
    /// Code values; put them after `--` so negative numbers parse.
    #[arg(required = true, num_args = 1.., allow_hyphen_values = true)]
    pub values: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Step counts for the coder, dual and benchmark properties.
    #[arg(long, value_delimiter = ',', default_values_t = [3usize, 4, 5])]
    pub n_step: Vec<usize>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// TOML config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub heads: Option<Vec<Head>>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub train_count: Option<usize>,
    #[arg(long)]
    pub test_count: Option<usize>,
    #[arg(long)]
    pub square_fraction: Option<f64>,
    #[arg(long)]
    pub noise_sigma: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long, conflicts_with = "sweep_nstep")]
    pub n_step: Option<usize>,
    /// Comma-separated step counts, one pass each.
    #[arg(long, value_delimiter = ',')]
    pub sweep_nstep: Option<Vec<usize>>,
    #[arg(long)]
    pub train_file: Option<PathBuf>,
    #[arg(long)]
    pub test_file: Option<PathBuf>,
    /// Output directory; falls back to $PHASECODER_OUT_DIR, then the config file.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub save_models: bool,
}

#[derive(Debug, Args)]
pub struct DatasetArgs {
    #[arg(long, default_value_t = 1000)]
    pub count: usize,
    #[arg(long, default_value_t = 0.0)]
    pub square_fraction: f64,
    #[arg(long, default_value_t = 0.01)]
    pub noise_sigma: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

impl BenchArgs {
    /// Merges config file, environment and flags into one config.
    pub fn resolve(&self, env_out_dir: Option<PathBuf>) -> anyhow::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(v) = &self.heads {
            cfg.heads = v.clone();
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.train_count {
            cfg.dataset.train_count = v;
        }
        if let Some(v) = self.test_count {
            cfg.dataset.test_count = v;
        }
        if let Some(v) = self.square_fraction {
            cfg.dataset.square_fraction = v;
        }
        if let Some(v) = self.noise_sigma {
            cfg.dataset.noise_sigma = v;
        }
        if let Some(v) = self.epochs {
            cfg.train.epochs = v;
        }
        if let Some(v) = self.batch {
            cfg.train.batch = v;
        }
        if let Some(v) = self.learning_rate {
            cfg.train.learning_rate = v;
        }
        if let Some(v) = self.n_step {
            cfg.n_steps = vec![v];
        }
        if let Some(v) = &self.sweep_nstep {
            cfg.n_steps = v.clone();
        }
        if let Some(v) = &self.train_file {
            cfg.dataset.train_file = Some(v.clone());
        }
        if let Some(v) = &self.test_file {
            cfg.dataset.test_file = Some(v.clone());
        }
        if let Some(v) = self.out_dir.clone().or(env_out_dir) {
            cfg.out_dir = v;
        }
        if self.save_models {
            cfg.save_models = true;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn env_out_dir() -> Option<PathBuf> {
    std::env::var_os(OUT_DIR_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
}

pub fn run(cli: Cli, out: &mut dyn Write) -> anyhow::Result<()> {
    match cli.command {
        Command::Encode(a) => cmd_encode(&a, out),
        Command::Decode(a) => cmd_decode(&a, out),
        Command::Verify(a) => cmd_verify(&a, &Hooks::default(), out),
        Command::Bench(a) => cmd_bench(&a.resolve(env_out_dir())?, out),
        Command::Dataset(a) => cmd_dataset(&a, out),
    }
}

pub fn cmd_encode(a: &EncodeArgs, out: &mut dyn Write) -> anyhow::Result<()> {
    let values = if a.dual {
        encode_dual(a.theta, a.n_step)?.to_vec()
    } else {
        let cfg = SymmetryConfig::new(a.period)?;
        encode(angle_to_phase(a.theta, &cfg)?, a.n_step)?.into_values()
    };
    writeln!(out, "{}", join_values(&values))?;
    Ok(())
}

pub fn cmd_decode(a: &DecodeArgs, out: &mut dyn Write) -> anyhow::Result<()> {
    if a.dual {
        let code = DualPhaseCode::from_concatenated(&a.values)?;
        let r = decode_dual(&code)?;
        let theta = phase_to_angle(r.phi, &SymmetryConfig::rectangle());
        writeln!(out, "theta_rad: {}", fixed12(theta))?;
        writeln!(out, "theta_deg: {}", fixed12(theta.to_degrees()))?;
        writeln!(out, "delta: {}", fixed12(r.delta))?;
        writeln!(out, "branch: {}", r.branch)?;
    } else {
        let cfg = SymmetryConfig::new(a.period)?;
        let theta = phase_to_angle(decode(&PhaseCode::new(a.values.clone())?)?, &cfg);
        writeln!(out, "theta_rad: {}", fixed12(theta))?;
        writeln!(out, "theta_deg: {}", fixed12(theta.to_degrees()))?;
    }
    Ok(())
}

pub fn cmd_verify(a: &VerifyArgs, hooks: &Hooks, out: &mut dyn Write) -> anyhow::Result<()> {
    ensure!(
        !a.n_step.is_empty(),
        "at least one --n-step value is required"
    );
    let outcomes = verify::run_suite(&verify::full_suite(&a.n_step), hooks);
    for o in &outcomes {
        writeln!(out, "{}", o.line())?;
    }
    let failed: Vec<&str> = outcomes
        .iter()
        .filter(|o| !o.passed())
        .map(|o| o.name.as_str())
        .collect();
    writeln!(
        out,
        "{}/{} properties passed",
        outcomes.len() - failed.len(),
        outcomes.len()
    )?;
    if !failed.is_empty() {
        bail!("property check failed: {}", failed.join(", "));
    }
    Ok(())
}

pub fn cmd_bench(cfg: &RunConfig, out: &mut dyn Write) -> anyhow::Result<()> {
    let result = bench::run(cfg)?;
    bench::write_outputs(&result, &cfg.out_dir)?;
    write!(out, "{}", bench::summary_table(&result))?;
    writeln!(out, "results written to {}", cfg.out_dir.display())?;
    let failed: Vec<String> = result
        .runs
        .iter()
        .filter_map(|r| r.failure.as_ref().map(|f| format!("{}: {f}", r.head)))
        .collect();
    if !failed.is_empty() {
        bail!("training failed for {}", failed.join("; "));
    }
    Ok(())
}

pub fn cmd_dataset(a: &DatasetArgs, out: &mut dyn Write) -> anyhow::Result<()> {
    let data = generate_dataset(a.count, a.square_fraction, a.noise_sigma, a.seed)?;
    snapshot::save_dataset(&a.out, &data)
        .with_context(|| format!("writing {}", a.out.display()))?;
    writeln!(out, "wrote {} samples to {}", data.len(), a.out.display())?;
    Ok(())
}
