//! Accuracy-versus-cost benchmark: fit and predict timings, model size and
//! test score for linear regression, exact KRR and random features.

use std::fmt::Write as _;
use std::time::Instant;

use ndarray::s;
use rks_core::features::MapParams;
use rks_core::modelsel::{accuracy, rmse, KernelKind};
use rks_core::solvers::{fit_krr_with, fit_lr_with, fit_rks_with};
use rks_core::{predict, Dataset, FeatureMapSpec, FitModel, FitOptions, RngStream, Task};

use crate::config::{FamilyArg, MethodArg};
use crate::error::{CliError, Result};
use crate::synth::{gen_synthetic, SyntheticKind};

pub const DEFAULT_KRR_N_MAX: usize = 8000;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub methods: Vec<MethodArg>,
    pub families: Vec<FamilyArg>,
    pub kernel: KernelKind,
    pub kind: SyntheticKind,
    pub d: usize,
    pub noise: f64,
    pub n_list: Vec<usize>,
    pub feature_counts: Vec<usize>,
    pub n_test: usize,
    pub seeds: Vec<u64>,
    pub lambda: f64,
    pub sigma: f64,
    pub a: f64,
    pub krr_n_max: usize,
    pub reps: usize,
    pub fit: FitOptions,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub method: String,
    pub n_train: usize,
    pub features: Option<usize>,
    pub fit_seconds: f64,
    pub predict_seconds_per_1k: f64,
    /// Largest of the fitted model and the dense working set of the fit.
    pub peak_model_bytes: usize,
    pub score: f64,
    pub seed: u64,
}

/// Runs `f` once as warmup, then `reps` timed times, and returns the median
/// wall-clock seconds together with the last result.
pub fn median_time<T>(reps: usize, mut f: impl FnMut() -> Result<T>) -> Result<(f64, T)> {
    let mut last = f()?;
    let mut times = Vec::with_capacity(reps);
    for _ in 0..reps.max(1) {
        let start = Instant::now();
        last = f()?;
        times.push(start.elapsed().as_secs_f64());
    }
    times.sort_by(f64::total_cmp);
    let m = times.len();
    let median = if m % 2 == 1 {
        times[m / 2]
    } else {
        0.5 * (times[m / 2 - 1] + times[m / 2])
    };
    Ok((median, last))
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

impl BenchConfig {
    fn validate(&self) -> Result<()> {
        let usage = |m: String| Err(CliError::Usage(m));
        if self.methods.is_empty() {
            return usage("benchmark needs at least one method".into());
        }
        if self.n_list.is_empty() || self.n_list.contains(&0) {
            return usage("benchmark needs positive training sizes".into());
        }
        if self.n_test == 0 || self.seeds.is_empty() {
            return usage("benchmark needs a test set and at least one seed".into());
        }
        if self.reps < 3 {
            return usage(format!("benchmark timings take the median of at least 3 repetitions, got {}", self.reps));
        }
        if self.methods.contains(&MethodArg::Rks)
            && (self.families.is_empty() || self.feature_counts.is_empty() || self.feature_counts.contains(&0))
        {
            return usage("random features need families and positive feature counts".into());
        }
        if self.methods.contains(&MethodArg::Krr) {
            if let Some(n) = self.n_list.iter().find(|&&n| n > self.krr_n_max) {
                return usage(format!(
                    "exact KRR at n = {n} exceeds the n_max of {} (the n x n Gram needs {} MB); \
                     drop krr from the methods or raise --krr-n-max",
                    self.krr_n_max,
                    n * n * 8 / 1_000_000
                ));
            }
        }
        Ok(())
    }
}

type Fitter<'a> = Box<dyn Fn(&Dataset) -> Result<FitModel> + 'a>;

struct Cell<'a> {
    method: String,
    features: Option<usize>,
    fit: Fitter<'a>,
    working_bytes: usize,
}

fn test_score(model: &FitModel, test: &Dataset) -> Result<f64> {
    let pred = predict(model, test.inputs().view())?;
    Ok(match test.task() {
        Task::Regression => rmse(pred.view(), test.targets().view()),
        Task::BinaryClassification => accuracy(pred.view(), test.targets().view()),
    })
}

/// One record per (seed, n, method, family, D), in that nesting order.
/// Training sets for smaller `n` are prefixes of the largest one.
pub fn run_benchmark(cfg: &BenchConfig) -> Result<Vec<BenchRecord>> {
    cfg.validate()?;
    let n_max = *cfg.n_list.iter().max().expect("validated non-empty");
    let opts = FitOptions {
        task: cfg.kind.task(),
        ..cfg.fit
    };
    let mut records = Vec::new();
    for &seed in &cfg.seeds {
        let full = gen_synthetic(cfg.kind, n_max, cfg.d, cfg.noise, &RngStream::new(seed, 0))?;
        let test = gen_synthetic(cfg.kind, cfg.n_test, cfg.d, cfg.noise, &RngStream::new(seed, 1))?;
        for &n in &cfg.n_list {
            let train = Dataset::new(
                full.inputs().slice(s![..n, ..]).to_owned(),
                full.targets().slice(s![..n, ..]).to_owned(),
                full.task(),
            )?;
            let (d, o) = (cfg.d, train.n_outputs());
            let mut cells: Vec<Cell> = Vec::new();
            for method in &cfg.methods {
                match method {
                    MethodArg::Lr => cells.push(Cell {
                        method: "lr".into(),
                        features: None,
                        fit: Box::new(|t: &Dataset| {
                            Ok(fit_lr_with(t.inputs().view(), t.targets().view(), cfg.lambda, &opts)?)
                        }),
                        working_bytes: 8 * (n * d + d * d + n * o),
                    }),
                    MethodArg::Krr => {
                        let spec = cfg.kernel.spec(match cfg.kernel {
                            KernelKind::Polynomial { .. } => cfg.a,
                            _ => cfg.sigma,
                        });
                        cells.push(Cell {
                            method: "krr".into(),
                            features: None,
                            fit: Box::new(move |t: &Dataset| {
                                Ok(fit_krr_with(t.inputs().view(), t.targets().view(), &spec, cfg.lambda, &opts)?)
                            }),
                            working_bytes: 8 * (n * n + n * d + n * o),
                        })
                    }
                    MethodArg::Rks => {
                        for &family in &cfg.families {
                            for &features in &cfg.feature_counts {
                                let param = if family == FamilyArg::Stump { cfg.a } else { cfg.sigma };
                                let spec = FeatureMapSpec::new(
                                    family.kind().family(param, d),
                                    features,
                                    RngStream::new(seed, 2).derive(features as u64),
                                );
                                let width = if family == FamilyArg::Stump { 2 * features } else { features };
                                let binning = family == FamilyArg::Binning;
                                cells.push(Cell {
                                    method: format!("rks-{}", family.label()),
                                    features: Some(features),
                                    fit: Box::new(move |t: &Dataset| {
                                        let map = spec.sample(d)?;
                                        Ok(fit_rks_with(t.inputs().view(), t.targets().view(), map, cfg.lambda, &opts)?)
                                    }),
                                    working_bytes: rks_working_bytes(n, width, features, binning, o),
                                });
                            }
                        }
                    }
                }
            }
            for cell in cells {
                let (fit_seconds, model) = median_time(cfg.reps, || (cell.fit)(&train))?;
                let (predict_seconds, _) = median_time(cfg.reps, || Ok(predict(&model, test.inputs().view())?))?;
                let working = match &cell.features {
                    // Binning widths are only known after fitting.
                    Some(features) => model.feature_map().map_or(cell.working_bytes, |m| {
                        let binning = matches!(m.params, MapParams::Binning(_));
                        rks_working_bytes(n, m.output_dim(), *features, binning, o)
                    }),
                    None => cell.working_bytes,
                };
                records.push(BenchRecord {
                    method: cell.method,
                    n_train: n,
                    features: cell.features,
                    fit_seconds,
                    predict_seconds_per_1k: predict_seconds * 1000.0 / cfg.n_test as f64,
                    peak_model_bytes: working.max(model.model_bytes()),
                    score: test_score(&model, &test)?,
                    seed,
                });
            }
        }
    }
    Ok(records)
}

/// Bytes held while fitting random features of realized width `w`: the
/// feature matrix (or per-row bin columns when binning wide), the smaller of
/// the primal and dual systems, the weights and the targets.
fn rks_working_bytes(n: usize, w: usize, features: usize, binning: bool, o: usize) -> usize {
    if binning && w > n {
        8 * (n * features + n * n + w * o + n * o) + 4 * n * n
    } else {
        let m = w.min(n);
        8 * (n * w + m * m + w * o + n * o)
    }
}

pub fn records_to_csv(records: &[BenchRecord]) -> String {
    let mut out = String::from("method,n_train,D,fit_seconds,predict_seconds_per_1k,peak_model_bytes,score,seed\n");
    for r in records {
        let d = r.features.map_or(String::new(), |d| d.to_string());
        let _ = writeln!(
            out,
            "{},{},{d},{},{},{},{},{}",
            r.method, r.n_train, r.fit_seconds, r.predict_seconds_per_1k, r.peak_model_bytes, r.score, r.seed
        );
    }
    out
}

pub fn records_to_text(records: &[BenchRecord]) -> String {
    let mut out = format!(
        "{:<16} {:>8} {:>6} {:>12} {:>14} {:>14} {:>12} {:>6}\n",
        "method", "n_train", "D", "fit_s", "predict_s/1k", "peak_bytes", "score", "seed"
    );
    for r in records {
        let d = r.features.map_or("-".to_string(), |d| d.to_string());
        let _ = writeln!(
            out,
            "{:<16} {:>8} {d:>6} {:>12.5} {:>14.5} {:>14} {:>12.6} {:>6}",
            r.method, r.n_train, r.fit_seconds, r.predict_seconds_per_1k, r.peak_model_bytes, r.score, r.seed
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> BenchConfig {
        BenchConfig {
            methods: vec![MethodArg::Lr, MethodArg::Krr, MethodArg::Rks],
            families: vec![FamilyArg::Fourier, FamilyArg::Binning],
            kernel: KernelKind::Rbf,
            kind: SyntheticKind::SumSines,
            d: 2,
            noise: 0.1,
            n_list: vec![50, 100],
            feature_counts: vec![20],
            n_test: 40,
            seeds: vec![3],
            lambda: 1e-2,
            sigma: 0.5,
            a: 4.0,
            krr_n_max: DEFAULT_KRR_N_MAX,
            reps: 3,
            fit: FitOptions::default(),
        }
    }

    #[test]
    fn one_record_per_cell() {
        let records = run_benchmark(&small()).unwrap();
        assert_eq!(records.len(), 2 * 4);
        assert_eq!(records[0].method, "lr");
        assert_eq!(records[3].method, "rks-binning");
        assert!(records.iter().all(|r| r.fit_seconds > 0.0 && r.peak_model_bytes > 0 && r.score.is_finite()));
        let krr_small = &records[1];
        assert_eq!(krr_small.peak_model_bytes, 8 * (50 * 50 + 50 * 2 + 50));
    }

    #[test]
    fn non_timing_columns_are_reproducible() {
        let strip = |rs: Vec<BenchRecord>| -> Vec<(String, usize, Option<usize>, usize, f64)> {
            rs.into_iter().map(|r| (r.method, r.n_train, r.features, r.peak_model_bytes, r.score)).collect()
        };
        assert_eq!(strip(run_benchmark(&small()).unwrap()), strip(run_benchmark(&small()).unwrap()));
    }

    #[test]
    fn oversized_krr_is_refused() {
        let mut cfg = small();
        cfg.krr_n_max = 80;
        let err = run_benchmark(&cfg).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("n = 100"));
        cfg.methods = vec![MethodArg::Lr];
        assert!(run_benchmark(&cfg).is_ok());
    }

    #[test]
    fn too_few_repetitions_are_refused() {
        let mut cfg = small();
        cfg.reps = 2;
        assert!(run_benchmark(&cfg).is_err());
    }

    #[test]
    fn slope_of_a_power_law() {
        let xs = [500.0, 1000.0, 2000.0, 4000.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(1.5)).collect();
        assert!((loglog_slope(&xs, &ys) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn median_of_repetitions() {
        let mut calls = 0;
        let (t, v) = median_time(3, || {
            calls += 1;
            Ok(calls)
        })
        .unwrap();
        assert_eq!((calls, v), (4, 4));
        assert!(t >= 0.0);
    }
}
