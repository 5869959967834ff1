//! Run configuration shared by every subcommand. Values come from flags,
//! optionally layered over a TOML file given with `--config`; flags win.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use rks_core::modelsel::{KernelKind, MapKind};
use rks_core::Task;
use serde::{Deserialize, Serialize};

use crate::data::{CsvOptions, TargetSelector};
use crate::error::{CliError, Result};
use crate::synth::SyntheticKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Fit,
    Predict,
    Cv,
    ApproxReport,
    Benchmark,
    GenData,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum MethodArg {
    Lr,
    Krr,
    Rks,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum FamilyArg {
    Fourier,
    Squarewave,
    Walsh,
    Stump,
    Binning,
}

impl FamilyArg {
    pub fn kind(self) -> MapKind {
        match self {
            FamilyArg::Fourier => MapKind::Fourier,
            FamilyArg::Squarewave => MapKind::SquareWave,
            FamilyArg::Walsh => MapKind::Walsh,
            FamilyArg::Stump => MapKind::Stump,
            FamilyArg::Binning => MapKind::Binning,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            FamilyArg::Fourier => "fourier",
            FamilyArg::Squarewave => "squarewave",
            FamilyArg::Walsh => "walsh",
            FamilyArg::Stump => "stump",
            FamilyArg::Binning => "binning",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum KernelArg {
    Linear,
    Rbf,
    Laplacian,
    Polynomial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum TaskArg {
    Regression,
    Classification,
}

impl From<TaskArg> for Task {
    fn from(t: TaskArg) -> Task {
        match t {
            TaskArg::Regression => Task::Regression,
            TaskArg::Classification => Task::BinaryClassification,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Text,
}

/// Every option is optional so a file and the command line can be merged.
/// Lists are comma separated on the command line and arrays in the file.
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunArgs {
    /// TOML file with default values for any of these options.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Input CSV file.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Held-out CSV file used for scoring.
    #[arg(long)]
    pub test_data: Option<PathBuf>,
    /// Model snapshot (written by `fit`, read by `predict`).
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Target columns: `last`, `last:N`, zero-based indices `0,3` or header names.
    #[arg(long)]
    pub targets: Option<String>,
    #[arg(long, value_enum)]
    pub task: Option<TaskArg>,
    /// First line of every CSV file is a header.
    #[arg(long, num_args = 0..=1, default_missing_value = "true", require_equals = true)]
    pub header: Option<bool>,
    /// Map 0/1 class labels to -1/+1.
    #[arg(long, num_args = 0..=1, default_missing_value = "true", require_equals = true)]
    pub remap01: Option<bool>,
    /// Standardize inputs and center targets before fitting (default true).
    #[arg(long, num_args = 0..=1, default_missing_value = "true", require_equals = true)]
    pub scale: Option<bool>,

    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    /// Exact kernel for `krr` (default rbf).
    #[arg(long, value_enum)]
    pub kernel: Option<KernelArg>,
    /// Random feature family for `rks` (default fourier).
    #[arg(long, value_enum)]
    pub family: Option<FamilyArg>,
    /// Bandwidth for RBF, Laplacian, Fourier, square-wave, Walsh and binning.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Stump kernel scale, or the polynomial kernel's input scale.
    #[arg(long)]
    pub a: Option<f64>,
    /// Polynomial kernel offset (default 1).
    #[arg(long)]
    pub offset: Option<f64>,
    /// Polynomial kernel degree (default 2).
    #[arg(long)]
    pub degree: Option<u32>,
    /// Number of random features D.
    #[arg(long)]
    pub features: Option<usize>,
    /// Ridge penalty (default 1e-3).
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Base random seed (default 0).
    #[arg(long)]
    pub seed: Option<u64>,

    /// Grid of ridge penalties for `cv`.
    #[arg(long, value_delimiter = ',')]
    pub lambdas: Option<Vec<f64>>,
    /// Grid of kernel parameters (sigma or a) for `cv`.
    #[arg(long, value_delimiter = ',')]
    pub params: Option<Vec<f64>>,
    /// Feature counts: the `cv` grid, the `approx-report` sequence or the `benchmark` sweep.
    #[arg(long, value_delimiter = ',')]
    pub feature_counts: Option<Vec<usize>>,
    #[arg(long)]
    pub folds: Option<usize>,
    /// Where `cv` writes the refitted best model.
    #[arg(long)]
    pub save_model: Option<PathBuf>,

    /// Synthetic dataset kind.
    #[arg(long, value_enum)]
    pub kind: Option<SyntheticKind>,
    /// Sample count (generated rows, approx-report points).
    #[arg(long)]
    pub n: Option<usize>,
    /// Input dimension for generated data.
    #[arg(long)]
    pub d: Option<usize>,
    /// Noise standard deviation for generated data.
    #[arg(long)]
    pub noise: Option<f64>,
    /// Number of seeds (seed, seed + 1, ...) for reports and benchmarks.
    #[arg(long)]
    pub seeds: Option<u64>,
    /// Training sizes for `benchmark`.
    #[arg(long, value_delimiter = ',')]
    pub n_list: Option<Vec<usize>>,
    /// Methods for `benchmark`.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub methods: Option<Vec<MethodArg>>,
    /// Random feature families for `benchmark`.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub families: Option<Vec<FamilyArg>>,
    /// Test set size for `benchmark`.
    #[arg(long)]
    pub n_test: Option<usize>,
    /// Largest training set exact KRR may be asked for (default 8000).
    #[arg(long)]
    pub krr_n_max: Option<usize>,
    /// Timed repetitions per benchmark cell, after one warmup (default 3).
    #[arg(long)]
    pub reps: Option<usize>,

    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

macro_rules! merge_fields {
    ($a:ident, $b:ident; $($f:ident),*) => {
        RunArgs { config: $a.config.or($b.config), $($f: $a.$f.or($b.$f)),* }
    };
}

impl RunArgs {
    /// Fills unset options from `fallback`.
    pub fn or(self, fallback: RunArgs) -> RunArgs {
        let (a, b) = (self, fallback);
        merge_fields!(a, b; data, test_data, model, targets, task, header, remap01, scale, method, kernel,
            family, sigma, a, offset, degree, features, lambda, seed, lambdas, params, feature_counts, folds,
            save_model, kind, n, d, noise, seeds, n_list, methods, families, n_test, krr_n_max, reps, out, format)
    }

    pub fn from_toml(text: &str) -> Result<RunArgs> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("config file: {e}")))
    }

    /// Merges the `--config` file, if any, under the flags.
    pub fn resolve(self) -> Result<RunArgs> {
        match &self.config {
            None => Ok(self),
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
                let mut file = RunArgs::from_toml(&text)?;
                file.config = None;
                Ok(self.or(file))
            }
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda.unwrap_or(1e-3)
    }

    pub fn format(&self) -> Format {
        self.format.unwrap_or_default()
    }

    pub fn task(&self) -> Task {
        self.task.map_or(Task::Regression, Task::from)
    }

    pub fn csv_options(&self) -> CsvOptions {
        CsvOptions {
            header: self.header.unwrap_or(false),
            task: self.task(),
            remap01: self.remap01.unwrap_or(false),
        }
    }

    pub fn target_selector(&self) -> Result<TargetSelector> {
        self.targets.as_deref().map_or(Ok(TargetSelector::default()), str::parse)
    }

    pub fn require_data(&self) -> Result<&Path> {
        self.data
            .as_deref()
            .ok_or_else(|| CliError::Usage("--data is required".into()))
    }

    pub fn kernel_kind(&self) -> KernelKind {
        match self.kernel.unwrap_or(KernelArg::Rbf) {
            KernelArg::Linear => KernelKind::Linear,
            KernelArg::Rbf => KernelKind::Rbf,
            KernelArg::Laplacian => KernelKind::Laplacian,
            KernelArg::Polynomial => KernelKind::Polynomial {
                b: self.offset.unwrap_or(1.0),
                p: self.degree.unwrap_or(2),
            },
        }
    }

    pub fn family(&self) -> FamilyArg {
        self.family.unwrap_or(FamilyArg::Fourier)
    }

    /// The kernel parameter: `a` for stumps and the polynomial kernel,
    /// `sigma` otherwise.
    pub fn param_for(&self, method: MethodArg, family: FamilyArg) -> f64 {
        let uses_a = match method {
            MethodArg::Rks => family == FamilyArg::Stump,
            MethodArg::Krr => self.kernel == Some(KernelArg::Polynomial),
            MethodArg::Lr => false,
        };
        if uses_a {
            self.a.unwrap_or(4.0)
        } else {
            self.sigma.unwrap_or(1.0)
        }
    }
}

/// The resolved configuration recorded in every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub seed: u64,
    pub args: RunArgs,
}

impl RunConfig {
    pub fn new(command: Command, args: RunArgs) -> RunConfig {
        RunConfig {
            command,
            seed: args.seed(),
            args,
        }
    }

    /// `# key: value` comment lines placed at the top of reports.
    pub fn header_lines(&self) -> String {
        let json = serde_json::to_string(self).expect("configuration serializes");
        format!("# rks {}\n# seed: {}\n# config: {json}\n", self.command_name(), self.seed)
    }

    pub fn command_name(&self) -> &'static str {
        match self.command {
            Command::Fit => "fit",
            Command::Predict => "predict",
            Command::Cv => "cv",
            Command::ApproxReport => "approx-report",
            Command::Benchmark => "benchmark",
            Command::GenData => "gen-data",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_values() {
        let file = RunArgs::from_toml(
            "sigma = 2.0\nlambda = 0.5\nfeature_counts = [10, 20]\nfamily = \"stump\"\nheader = true\n",
        )
        .unwrap();
        let flags = RunArgs {
            sigma: Some(0.7),
            header: Some(false),
            ..RunArgs::default()
        };
        let merged = flags.or(file);
        assert_eq!(merged.sigma, Some(0.7));
        assert_eq!(merged.lambda, Some(0.5));
        assert_eq!(merged.header, Some(false));
        assert_eq!(merged.feature_counts, Some(vec![10, 20]));
        assert_eq!(merged.family, Some(FamilyArg::Stump));
    }

    #[test]
    fn unknown_file_keys_are_usage_errors() {
        let err = RunArgs::from_toml("sigmaa = 1.0").unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn report_header_records_the_seed() {
        let cfg = RunConfig::new(
            Command::ApproxReport,
            RunArgs {
                seed: Some(17),
                ..RunArgs::default()
            },
        );
        let h = cfg.header_lines();
        assert!(h.starts_with("# rks approx-report\n# seed: 17\n# config: {"));
        assert!(h.lines().all(|l| l.starts_with('#')));
        let json = h.lines().nth(2).unwrap().trim_start_matches("# config: ");
        let back: RunConfig = serde_json::from_str(json).unwrap();
        assert_eq!(back, cfg);
    }
}
