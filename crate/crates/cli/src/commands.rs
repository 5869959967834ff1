//! Subcommand implementations.

use std::path::Path;

use clap::{Parser, Subcommand};
use ndarray::{Array2, Axis};
use rks_core::modelsel::{default_lambdas, default_sigmas, KernelKind};
use rks_core::solvers::{fit_krr_with, fit_lr_with, fit_rks_with};
use rks_core::standardize::Scaling;
use rks_core::{
    cross_validate, predict, Dataset, FeatureMapSpec, FitModel, FitOptions, GridSpec, Method, Metric, RngStream,
    Standardizer, Task,
};
use serde::{Deserialize, Serialize};

use crate::bench::{records_to_csv, records_to_text, run_benchmark, BenchConfig, DEFAULT_KRR_N_MAX};
use crate::config::{Command, FamilyArg, Format, KernelArg, MethodArg, RunArgs, RunConfig};
use crate::data::{load_csv, read_table, to_dataset, write_csv};
use crate::error::{CliError, Result};
use crate::report::{approx_rows, rows_to_csv, rows_to_text, ApproxConfig};
use crate::synth::{gen_synthetic, SyntheticKind};

#[derive(Debug, Parser)]
#[command(name = "rks", version, about = "Random feature kernel machines: fit, predict, tune and benchmark")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Train a model on a CSV file and write a snapshot.
    Fit(RunArgs),
    /// Predict with a saved snapshot.
    Predict(RunArgs),
    /// Cross-validated grid search.
    Cv(RunArgs),
    /// Gram matrix deviation of random features from their exact kernel.
    ApproxReport(RunArgs),
    /// Time and score LR, exact KRR and random features on synthetic data.
    Benchmark(RunArgs),
    /// Write a synthetic dataset as CSV.
    GenData(RunArgs),
}

/// A saved model and the configuration that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub config: RunConfig,
    pub model: FitModel,
}

impl ModelFile {
    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string(self).expect("models serialize");
        std::fs::write(path, json).map_err(|e| CliError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<ModelFile> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: not a model snapshot: {e}", path.display())))
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let (command, args) = match cli.command {
        Sub::Fit(a) => (Command::Fit, a),
        Sub::Predict(a) => (Command::Predict, a),
        Sub::Cv(a) => (Command::Cv, a),
        Sub::ApproxReport(a) => (Command::ApproxReport, a),
        Sub::Benchmark(a) => (Command::Benchmark, a),
        Sub::GenData(a) => (Command::GenData, a),
    };
    let cfg = RunConfig::new(command, args.resolve()?);
    match command {
        Command::Fit => fit(&cfg),
        Command::Predict => predict_cmd(&cfg),
        Command::Cv => cv(&cfg),
        Command::ApproxReport => approx_report(&cfg),
        Command::Benchmark => benchmark(&cfg),
        Command::GenData => gen_data(&cfg),
    }
}

fn emit(args: &RunArgs, text: &str) -> Result<()> {
    match &args.out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::io(path, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn fit_options(args: &RunArgs, task: Task) -> FitOptions {
    FitOptions {
        scaling: if args.scale.unwrap_or(true) { Scaling::Full } else { Scaling::None },
        task,
        ..FitOptions::default()
    }
}

fn require_method(args: &RunArgs) -> Result<MethodArg> {
    args.method.ok_or_else(|| CliError::Usage("--method is required (lr, krr or rks)".into()))
}

/// Fits the model described by the flags. Random features draw from the
/// stream `(seed, 0)`, the same stream `cv` refits with.
pub fn fit_from_args(args: &RunArgs, data: &Dataset) -> Result<FitModel> {
    let method = require_method(args)?;
    let opts = fit_options(args, data.task());
    let (x, y) = (data.inputs().view(), data.targets().view());
    let param = args.param_for(method, args.family());
    Ok(match method {
        MethodArg::Lr => fit_lr_with(x, y, args.lambda(), &opts)?,
        MethodArg::Krr => fit_krr_with(x, y, &args.kernel_kind().spec(param), args.lambda(), &opts)?,
        MethodArg::Rks => {
            let d = data.n_inputs();
            let family = args.family().kind().family(param, d);
            let spec = FeatureMapSpec::new(family, args.features.unwrap_or(500), RngStream::new(args.seed(), 0));
            fit_rks_with(x, y, spec.sample(d)?, args.lambda(), &opts)?
        }
    })
}

fn load_data(args: &RunArgs) -> Result<Dataset> {
    load_csv(args.require_data()?, &args.target_selector()?, args.csv_options())
}

fn fit(cfg: &RunConfig) -> Result<()> {
    let args = &cfg.args;
    let out = args
        .out
        .as_deref()
        .ok_or_else(|| CliError::Usage("fit needs --out for the model snapshot".into()))?;
    let data = load_data(args)?;
    let model = fit_from_args(args, &data)?;
    ModelFile {
        config: cfg.clone(),
        model,
    }
    .save(out)?;
    eprintln!("wrote model to {}", out.display());
    Ok(())
}

fn predict_cmd(cfg: &RunConfig) -> Result<()> {
    let args = &cfg.args;
    let path = args
        .model
        .as_deref()
        .ok_or_else(|| CliError::Usage("predict needs --model".into()))?;
    let saved = ModelFile::load(path)?;
    let model = &saved.model;
    let table = read_table(args.require_data()?, args.header.unwrap_or(false))?;
    let (inputs, truth) = match &args.targets {
        Some(_) => {
            let mut opts = args.csv_options();
            opts.task = model.task;
            let data = to_dataset(&table, &args.target_selector()?, opts)?;
            let (x, y, _) = data.into_parts();
            (x, Some(y))
        }
        None => (table.values, None),
    };
    let pred = predict(model, inputs.view())?;
    let o = pred.ncols();
    let mut header: Vec<String> = (0..o).map(|j| if o == 1 { "prediction".into() } else { format!("prediction{j}") }).collect();
    let mut columns = pred.clone();
    if model.task == Task::BinaryClassification {
        header.push("label".into());
        let labels = pred.column(0).mapv(rks_core::solvers::label_of).insert_axis(Axis(1));
        columns = ndarray::concatenate(Axis(1), &[pred.view(), labels.view()]).expect("same row count");
    }
    if let Some(y) = truth {
        let (name, value) = match model.task {
            Task::Regression => ("rmse", rks_core::modelsel::rmse(pred.view(), y.view())),
            Task::BinaryClassification => ("accuracy", rks_core::modelsel::accuracy(pred.view(), y.view())),
        };
        eprintln!("{name} = {value}");
    }
    let text = match args.format() {
        Format::Csv => {
            let mut buf = Vec::new();
            write_csv(&mut buf, Some(&header), columns.view())?;
            String::from_utf8(buf).expect("CSV output is UTF-8")
        }
        Format::Text => {
            let mut out = header.join(" ") + "\n";
            for row in columns.rows() {
                out += &row.iter().map(|v| format!("{v:.6}")).collect::<Vec<_>>().join(" ");
                out += "\n";
            }
            out
        }
    };
    emit(args, &text)
}

fn cv_method(args: &RunArgs) -> Result<Method> {
    Ok(match require_method(args)? {
        MethodArg::Lr => Method::Lr,
        MethodArg::Krr => Method::Krr {
            kernel: args.kernel_kind(),
        },
        MethodArg::Rks => Method::Rks {
            family: args.family().kind(),
        },
    })
}

/// Kernel parameters to search when none are given: bandwidths around the
/// median distance of the standardized inputs, or stump scales sized to the
/// standardized data range.
fn default_params(args: &RunArgs, method: &Method, data: &Dataset) -> Result<Vec<f64>> {
    let d = data.n_inputs() as f64;
    Ok(match method {
        Method::Lr | Method::Krr { kernel: KernelKind::Linear } => vec![],
        Method::Krr {
            kernel: KernelKind::Polynomial { .. },
        } => vec![0.1, 1.0, 10.0],
        Method::Rks { family } if *family == FamilyArg::Stump.kind() => vec![3.0 * d, 6.0 * d, 12.0 * d],
        _ => {
            let x = data.inputs().view();
            let scaling = if args.scale.unwrap_or(true) { Scaling::Full } else { Scaling::None };
            let xs = Standardizer::fit_with(x, data.targets().view(), scaling)?.transform_inputs(x)?;
            default_sigmas(xs.view(), 5)
        }
    })
}

fn cv(cfg: &RunConfig) -> Result<()> {
    let args = &cfg.args;
    let data = load_data(args)?;
    let method = cv_method(args)?;
    let params = match &args.params {
        Some(p) => p.clone(),
        None => default_params(args, &method, &data)?,
    };
    let counts = match method {
        Method::Rks { .. } => args.feature_counts.clone().unwrap_or_else(|| vec![100, 300]),
        _ => vec![],
    };
    let mut grid = GridSpec::new(
        args.lambdas.clone().unwrap_or_else(default_lambdas),
        params,
        counts,
        Metric::for_task(data.task()),
        RngStream::new(args.seed(), 0),
    );
    grid.folds = args.folds.unwrap_or(5);
    grid.scaling = fit_options(args, data.task()).scaling;
    let report = cross_validate(&data, &method, &grid)?;
    if let Some(path) = &args.save_model {
        let model = report.refit(&data, &grid)?;
        ModelFile {
            config: cfg.clone(),
            model,
        }
        .save(path)?;
    }
    let body = match args.format() {
        Format::Csv => report.to_csv(),
        Format::Text => report.summary(),
    };
    emit(args, &(cfg.header_lines() + &body))
}

fn seeds(args: &RunArgs, default_count: u64) -> Vec<u64> {
    let base = args.seed();
    (0..args.seeds.unwrap_or(default_count)).map(|i| base + i).collect()
}

fn approx_report(cfg: &RunConfig) -> Result<()> {
    let args = &cfg.args;
    let family = args.family();
    let rc = ApproxConfig {
        family,
        param: args.param_for(MethodArg::Rks, family),
        n_points: args.n.unwrap_or(100),
        d: args.d.unwrap_or(2),
        feature_counts: args.feature_counts.clone().unwrap_or_else(|| vec![1, 5, 100, 1000]),
        seeds: seeds(args, 10),
    };
    let rows = approx_rows(&rc)?;
    let body = match args.format() {
        Format::Csv => rows_to_csv(&rows),
        Format::Text => rows_to_text(&rows),
    };
    emit(args, &(cfg.header_lines() + &body))
}

fn benchmark(cfg: &RunConfig) -> Result<()> {
    let args = &cfg.args;
    let kernel = args.kernel_kind();
    if args.kernel == Some(KernelArg::Linear) {
        return Err(CliError::Usage("benchmark the linear kernel with the lr method".into()));
    }
    let bc = BenchConfig {
        methods: args
            .methods
            .clone()
            .unwrap_or_else(|| vec![MethodArg::Lr, MethodArg::Krr, MethodArg::Rks]),
        families: args.families.clone().unwrap_or_else(|| vec![args.family()]),
        kernel,
        kind: args.kind.unwrap_or(SyntheticKind::SumSines),
        d: args.d.unwrap_or(4),
        noise: args.noise.unwrap_or(0.1),
        n_list: args.n_list.clone().unwrap_or_else(|| vec![500, 1000, 2000]),
        feature_counts: args.feature_counts.clone().unwrap_or_else(|| vec![100, 500]),
        n_test: args.n_test.unwrap_or(1000),
        seeds: seeds(args, 1),
        lambda: args.lambda(),
        sigma: args.sigma.unwrap_or(1.0),
        a: args.a.unwrap_or(4.0),
        krr_n_max: args.krr_n_max.unwrap_or(DEFAULT_KRR_N_MAX),
        reps: args.reps.unwrap_or(3),
        fit: fit_options(args, Task::Regression),
    };
    let records = run_benchmark(&bc)?;
    let body = match args.format() {
        Format::Csv => records_to_csv(&records),
        Format::Text => records_to_text(&records),
    };
    emit(args, &(cfg.header_lines() + &body))
}

fn gen_data(cfg: &RunConfig) -> Result<()> {
    let args = &cfg.args;
    let kind = args
        .kind
        .ok_or_else(|| CliError::Usage("gen-data needs --kind".into()))?;
    let data = gen_synthetic(
        kind,
        args.n.unwrap_or(1000),
        args.d.unwrap_or(2),
        args.noise.unwrap_or(0.1),
        &RngStream::new(args.seed(), 0),
    )?;
    let d = data.n_inputs();
    let header: Vec<String> = (1..=d).map(|m| format!("x{m}")).chain(std::iter::once("y".into())).collect();
    let rows: Array2<f64> =
        ndarray::concatenate(Axis(1), &[data.inputs().view(), data.targets().view()]).expect("same row count");
    let mut buf = Vec::new();
    write_csv(&mut buf, args.header.unwrap_or(false).then_some(header.as_slice()), rows.view())?;
    emit(args, &String::from_utf8(buf).expect("CSV output is UTF-8"))
}
