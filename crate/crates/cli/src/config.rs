//! Command-line flags, the optional TOML config file and the resolved [`RunConfig`].

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use srwalk_core::coupling::DEFAULT_EPSILON;
use srwalk_core::sampler::{ClusterBuilder, Start};
use srwalk_core::{RunPlan, UpdateMix};

use crate::Failure;

#[derive(Parser, Debug)]
#[command(name = "srwalk", version, about = "Self-repelling walks and their long-range Ising chains")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CommandLine,
}

#[derive(Subcommand, Debug)]
pub enum CommandLine {
    /// Exact walk and spin enumeration with their equivalence check.
    Enumerate(Flags),
    /// Bound fit, Griffiths inequalities and the exact identities.
    Check(Flags),
    /// One Monte Carlo run.
    Sample(Flags),
    /// Monte Carlo over an (alpha, beta, N) grid with scaling fits.
    Scan(Flags),
    /// Scaling fit of existing sample or scan outputs.
    Fit(Flags),
}

impl CommandLine {
    fn split(self) -> (Command, Flags) {
        match self {
            CommandLine::Enumerate(f) => (Command::Enumerate, f),
            CommandLine::Check(f) => (Command::Check, f),
            CommandLine::Sample(f) => (Command::Sample, f),
            CommandLine::Scan(f) => (Command::Scan, f),
            CommandLine::Fit(f) => (Command::Fit, f),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Enumerate,
    Check,
    Sample,
    Scan,
    Fit,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Enumerate => "enumerate",
            Command::Check => "check",
            Command::Sample => "sample",
            Command::Scan => "scan",
            Command::Fit => "fit",
        }
    }

    fn default_n(self) -> usize {
        match self {
            Command::Enumerate => 6,
            Command::Check => 64,
            Command::Sample | Command::Scan | Command::Fit => 256,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BuilderArg {
    Majorant,
    Naive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum StartArg {
    Ordered,
    Random,
}

/// Flags shared by all subcommands; those a command does not use are ignored.
#[derive(Args, Debug, Default)]
pub struct Flags {
    /// TOML file with any of the keys below; flags win on conflict.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Worker threads for scans, 0 for all cores.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Bulk margin of the bound fit.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub n_therm: Option<u64>,
    #[arg(long)]
    pub n_measure: Option<u64>,
    #[arg(long)]
    pub stride: Option<u64>,
    #[arg(long)]
    pub cluster_updates: Option<u32>,
    #[arg(long)]
    pub metropolis_sweeps: Option<u32>,
    #[arg(long, value_enum)]
    pub builder: Option<BuilderArg>,
    #[arg(long, value_enum)]
    pub start: Option<StartArg>,
    #[arg(long)]
    pub validate_every: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    pub alphas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub betas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub ns: Option<Vec<usize>>,
    /// Inverse temperatures of the Griffiths check.
    #[arg(long, value_delimiter = ',')]
    pub griffiths_betas: Option<Vec<f64>>,
    /// Input files of `fit`.
    #[arg(long = "input", num_args = 1..)]
    pub inputs: Option<Vec<PathBuf>>,
}

/// Keys accepted in a config file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub n: Option<usize>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub jobs: Option<usize>,
    pub epsilon: Option<f64>,
    pub n_therm: Option<u64>,
    pub n_measure: Option<u64>,
    pub measure_stride: Option<u64>,
    pub cluster_updates: Option<u32>,
    pub metropolis_sweeps: Option<u32>,
    pub cluster_builder: Option<ClusterBuilder>,
    pub start: Option<Start>,
    pub validate_every: Option<u64>,
    pub alphas: Option<Vec<f64>>,
    pub betas: Option<Vec<f64>>,
    pub ns: Option<Vec<usize>>,
    pub griffiths_betas: Option<Vec<f64>>,
    pub inputs: Option<Vec<PathBuf>>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub n: usize,
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grids {
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub ns: Vec<usize>,
    pub griffiths_betas: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputSpec {
    pub path: Option<PathBuf>,
    pub format: Format,
}

/// Everything a run depends on; embedded in every output file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub model: ModelConfig,
    pub seed: u64,
    pub epsilon: f64,
    pub plan: RunPlan,
    pub grids: Grids,
    pub inputs: Vec<PathBuf>,
    pub output: OutputSpec,
    pub jobs: usize,
}

pub const DEFAULT_ALPHA: f64 = 3.5;
pub const DEFAULT_BETA: f64 = 1.0;
pub const DEFAULT_SCAN_BETAS: [f64; 6] = [0.0, 0.05, 0.5, 1.0, 2.0, 5.0];
pub const DEFAULT_SCAN_NS: [usize; 5] = [64, 128, 256, 512, 1024];
pub const DEFAULT_GRIFFITHS_BETAS: [f64; 5] = [0.0, 0.5, 1.0, 2.0, 4.0];

impl RunConfig {
    /// Merge flags over the config file over defaults.
    pub fn resolve(command: Command, flags: Flags) -> Result<Self, Failure> {
        let file = match &flags.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        let seed = flags.seed.or(file.seed).unwrap_or(0);
        let defaults = RunPlan::default();
        let plan = RunPlan {
            n_therm: flags.n_therm.or(file.n_therm).or(defaults.n_therm),
            n_measure: flags.n_measure.or(file.n_measure).unwrap_or(defaults.n_measure),
            measure_stride: flags.stride.or(file.measure_stride).unwrap_or(defaults.measure_stride),
            update_mix: UpdateMix {
                cluster_updates: flags.cluster_updates.or(file.cluster_updates).unwrap_or(defaults.update_mix.cluster_updates),
                metropolis_sweeps: flags
                    .metropolis_sweeps
                    .or(file.metropolis_sweeps)
                    .unwrap_or(defaults.update_mix.metropolis_sweeps),
            },
            cluster_builder: flags
                .builder
                .map(|b| match b {
                    BuilderArg::Majorant => ClusterBuilder::Majorant,
                    BuilderArg::Naive => ClusterBuilder::Naive,
                })
                .or(file.cluster_builder)
                .unwrap_or(defaults.cluster_builder),
            seed,
            stream: 0,
            start: flags
                .start
                .map(|s| match s {
                    StartArg::Ordered => Start::Ordered,
                    StartArg::Random => Start::Random,
                })
                .or(file.start)
                .unwrap_or(defaults.start),
            validate_every: flags.validate_every.or(file.validate_every).unwrap_or(defaults.validate_every),
        };
        let config = RunConfig {
            command,
            model: ModelConfig {
                n: flags.n.or(file.n).unwrap_or(command.default_n()),
                alpha: flags.alpha.or(file.alpha).unwrap_or(DEFAULT_ALPHA),
                beta: flags.beta.or(file.beta).unwrap_or(DEFAULT_BETA),
            },
            seed,
            epsilon: flags.epsilon.or(file.epsilon).unwrap_or(DEFAULT_EPSILON),
            plan,
            grids: Grids {
                alphas: flags.alphas.or(file.alphas).unwrap_or_else(|| vec![DEFAULT_ALPHA]),
                betas: flags.betas.or(file.betas).unwrap_or_else(|| DEFAULT_SCAN_BETAS.to_vec()),
                ns: flags.ns.or(file.ns).unwrap_or_else(|| DEFAULT_SCAN_NS.to_vec()),
                griffiths_betas: flags.griffiths_betas.or(file.griffiths_betas).unwrap_or_else(|| DEFAULT_GRIFFITHS_BETAS.to_vec()),
            },
            inputs: flags.inputs.or(file.inputs).unwrap_or_default(),
            output: OutputSpec { path: flags.out.or(file.out), format: flags.format.or(file.format).unwrap_or_default() },
            jobs: flags.jobs.or(file.jobs).unwrap_or(0),
        };
        Ok(config)
    }
}

/// Parse the command line into a resolved config.
pub fn parse<I, T>(args: I) -> Result<RunConfig, Failure>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(Failure::Clap)?;
    let (command, flags) = cli.command.split();
    RunConfig::resolve(command, flags)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_depend_on_the_command() {
        let cfg = parse(["srwalk", "enumerate"]).unwrap();
        assert_eq!(cfg.model, ModelConfig { n: 6, alpha: 3.5, beta: 1.0 });
        assert_eq!(parse(["srwalk", "check"]).unwrap().model.n, 64);
        let scan = parse(["srwalk", "scan"]).unwrap();
        assert_eq!(scan.grids.ns, DEFAULT_SCAN_NS.to_vec());
    }

    #[test]
    fn lists_and_plan_flags() {
        let cfg = parse([
            "srwalk", "scan", "--betas", "0.05,5", "--ns", "64,128,512", "--n-measure", "500", "--stride", "2", "--builder",
            "naive", "--seed", "9",
        ])
        .unwrap();
        assert_eq!(cfg.grids.betas, vec![0.05, 5.0]);
        assert_eq!(cfg.grids.ns, vec![64, 128, 512]);
        assert_eq!(cfg.plan.n_measure, 500);
        assert_eq!(cfg.plan.measure_stride, 2);
        assert_eq!(cfg.plan.cluster_builder, ClusterBuilder::Naive);
        assert_eq!(cfg.plan.seed, 9);
    }

    #[test]
    fn flags_override_the_file() {
        let dir = std::env::temp_dir().join(format!("srwalk-config-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.toml");
        std::fs::write(&path, "n = 32\nalpha = 4.0\nseed = 5\nbetas = [0.1, 0.2]\nstart = \"random\"\n").unwrap();
        let cfg = parse(["srwalk", "sample", "--config", path.to_str().unwrap(), "--n", "48"]).unwrap();
        assert_eq!(cfg.model.n, 48);
        assert_eq!(cfg.model.alpha, 4.0);
        assert_eq!(cfg.seed, 5);
        assert_eq!(cfg.grids.betas, vec![0.1, 0.2]);
        assert_eq!(cfg.plan.start, Start::Random);
        std::fs::write(&path, "bogus = 1\n").unwrap();
        assert!(matches!(parse(["srwalk", "sample", "--config", path.to_str().unwrap()]), Err(Failure::Usage(_))));
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
