//! Command-line front end: `analyze`, `simulate` and `bench`.

pub mod analyze;
pub mod bench;
pub mod config;
pub mod error;
pub mod io;
pub mod simulate;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use metapool_core::PresetVariant;

use crate::analyze::{AnalyzeRequest, OutputFormat};
use crate::error::CliError;
use crate::simulate::SimulateRequest;

pub use config::SEED_ENV;

#[derive(Debug, Parser)]
#[command(name = "metapool", version, about = "Random-effects meta-analysis with estimated within-study variances")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Pool a `study,y,se,df` dataset.
    Analyze(AnalyzeArgs),
    /// Generate synthetic datasets from a benchmark setting.
    Simulate(SimulateArgs),
    /// Run the Monte Carlo benchmark and write result tables.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Comma-separated subset of DL,HT,NB,GS,BD.
    #[arg(long, default_value = "DL,HT,NB,GS,BD")]
    pub methods: String,
    /// inverse_df | inverse_n_minus_3:n,.. | two_group:n0/n1,.. | custom:eta,..
    #[arg(long, default_value = "inverse_df")]
    pub eta: String,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub setting: u32,
    #[arg(long)]
    pub m: usize,
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    /// Falls back to METAPOOL_SEED, then 1.
    #[arg(long)]
    pub seed: Option<u64>,
    /// printed | reported
    #[arg(long, default_value = "printed")]
    pub variant: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Overrides METAPOOL_SEED and the config file.
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Run one invocation and return the process exit code. `env_seed` is the
/// value of `METAPOOL_SEED`, if set.
pub fn run<I, T>(args: I, env_seed: Option<&str>, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    match dispatch(cli.command, env_seed, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command, env_seed: Option<&str>, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let write_out = |out: &mut dyn Write, text: &str| out.write_all(text.as_bytes()).map_err(|e| CliError::io("stdout", e));
    match command {
        Command::Analyze(a) => {
            let req = AnalyzeRequest {
                input: a.input,
                alpha: a.alpha,
                methods: config::parse_methods(&a.methods).map_err(|e| CliError::Validation(e.to_string()))?,
                eta: analyze::parse_eta(&a.eta)?,
                format: a.format,
            };
            let report = analyze::analyze(&req)?;
            write_out(out, &analyze::render(&report, req.format))?;
            let mut failed = false;
            for (method, msg) in report.failures() {
                failed = true;
                let _ = writeln!(err, "error: {method}: {msg}");
            }
            Ok(if failed { 3 } else { 0 })
        }
        Command::Simulate(s) => {
            let req = SimulateRequest {
                setting: s.setting,
                m: s.m,
                count: s.count,
                seed: config::resolve_seed(s.seed, env_seed, 1).map_err(|e| CliError::Validation(e.to_string()))?,
                variant: s
                    .variant
                    .parse::<PresetVariant>()
                    .map_err(|e| CliError::Validation(e.to_string()))?,
                out: s.out,
            };
            let manifest = simulate::simulate(&req)?;
            let _ = writeln!(err, "wrote {} datasets to {}", manifest.count, req.out.display());
            Ok(0)
        }
        Command::Bench(b) => {
            let text = std::fs::read_to_string(&b.config)
                .map_err(|e| CliError::Config(format!("{}: {e}", b.config.display())))?;
            let mut cfg = config::parse_config(&text)?;
            cfg.master_seed = config::resolve_seed(b.seed, env_seed, cfg.master_seed)?;
            let summaries = bench::bench(&cfg, b.workers, &b.out)?;
            let failed: usize = summaries.iter().flat_map(|p| &p.methods).map(|m| m.n_failed).sum();
            if failed > 0 {
                let _ = writeln!(err, "{failed} method fits failed; see diagnostics.csv");
            }
            Ok(0)
        }
    }
}
