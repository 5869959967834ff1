//! k-fold cross-validated grid search over `lambda`, the kernel parameter
//! (`sigma` or stump scale `a`) and, for random features, the feature count.

use std::fmt::Write as _;
use std::time::Instant;

use ndarray::ArrayView2;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Task};
use crate::error::{Error, Result};
use crate::features::{FeatureFamily, FeatureMapSpec};
use crate::kernels::KernelSpec;
use crate::rng::RngStream;
use crate::solvers::{fit_krr_with, fit_lr_with, fit_rks_with, label_of, predict, FitModel, FitOptions};
use crate::standardize::Scaling;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Rmse,
    Accuracy,
}

impl Metric {
    pub fn for_task(task: Task) -> Metric {
        match task {
            Task::Regression => Metric::Rmse,
            Task::BinaryClassification => Metric::Accuracy,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Metric::Rmse => "rmse",
            Metric::Accuracy => "accuracy",
        }
    }
}

/// Exact kernels that can be tuned by cross-validation. The grid parameter
/// is `sigma` for RBF/Laplacian and `a` for the polynomial kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Linear,
    Rbf,
    Laplacian,
    Polynomial { b: f64, p: u32 },
}

impl KernelKind {
    pub fn spec(&self, param: f64) -> KernelSpec {
        match *self {
            KernelKind::Linear => KernelSpec::Linear,
            KernelKind::Rbf => KernelSpec::Rbf { sigma: param },
            KernelKind::Laplacian => KernelSpec::Laplacian { sigma: param },
            KernelKind::Polynomial { b, p } => KernelSpec::Polynomial { a: param, b, p },
        }
    }

    fn has_param(&self) -> bool {
        !matches!(self, KernelKind::Linear)
    }
}

/// Random feature families, parameterized for inputs that have already been
/// standardized. Stumps use the box `[-w/2, w/2]^d` with `w = a/d`, which
/// makes their expected kernel exactly `1 - |x - y|_1 / a` inside the box;
/// binning grids are anchored at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    Fourier,
    SquareWave,
    Walsh,
    Stump,
    Binning,
}

impl MapKind {
    pub fn family(&self, param: f64, d: usize) -> FeatureFamily {
        match self {
            MapKind::Fourier => FeatureFamily::Fourier { sigma: param },
            MapKind::SquareWave => FeatureFamily::SquareWave { sigma: param },
            MapKind::Walsh => FeatureFamily::Walsh { sigma: param },
            MapKind::Stump => {
                let half = param / (2.0 * d as f64);
                FeatureFamily::Stump {
                    a: param,
                    box_lo: vec![-half; d],
                    box_hi: vec![half; d],
                }
            }
            MapKind::Binning => FeatureFamily::Binning {
                sigma: param,
                box_lo: vec![0.0; d],
                box_hi: vec![1.0; d],
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Method {
    Lr,
    Krr { kernel: KernelKind },
    Rks { family: MapKind },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lambdas: Vec<f64>,
    pub kernel_params: Vec<f64>,
    pub feature_counts: Vec<usize>,
    pub folds: usize,
    pub metric: Metric,
    pub rng: RngStream,
    #[serde(default)]
    pub scaling: Scaling,
}

impl GridSpec {
    pub fn new(lambdas: Vec<f64>, kernel_params: Vec<f64>, feature_counts: Vec<usize>, metric: Metric, rng: RngStream) -> Self {
        Self {
            lambdas,
            kernel_params,
            feature_counts,
            folds: 5,
            metric,
            rng,
            scaling: Scaling::Full,
        }
    }

    fn validate(&self, method: &Method, n: usize) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if self.lambdas.is_empty() {
            return bad("grid needs at least one lambda");
        }
        if self.lambdas.iter().any(|l| !(*l >= 0.0 && l.is_finite())) {
            return bad("lambdas must be finite and non-negative");
        }
        if self.folds < 2 {
            return bad("cross-validation needs at least 2 folds");
        }
        if self.folds > n {
            return Err(Error::InvalidParameter(format!(
                "{} folds requested for {n} samples",
                self.folds
            )));
        }
        let needs_param = match method {
            Method::Lr => false,
            Method::Krr { kernel } => kernel.has_param(),
            Method::Rks { .. } => true,
        };
        if needs_param && self.kernel_params.is_empty() {
            return bad("grid needs at least one kernel parameter");
        }
        if needs_param && self.kernel_params.iter().any(|p| !(*p > 0.0 && p.is_finite())) {
            return bad("kernel parameters must be positive");
        }
        match method {
            Method::Rks { .. } if self.feature_counts.is_empty() => bad("random features need feature counts"),
            Method::Rks { .. } if self.feature_counts.contains(&0) => bad("feature counts must be >= 1"),
            Method::Lr | Method::Krr { .. } if !self.feature_counts.is_empty() => {
                bad("feature counts only apply to random features")
            }
            _ => Ok(()),
        }
    }

    /// Grid points in a fixed order: parameter, then feature count, then lambda.
    fn configs(&self, method: &Method) -> Vec<CvConfig> {
        let mut lambdas = self.lambdas.clone();
        lambdas.sort_by(f64::total_cmp);
        let params: Vec<Option<f64>> = match method {
            Method::Lr | Method::Krr { kernel: KernelKind::Linear } => vec![None],
            _ => self.kernel_params.iter().map(|p| Some(*p)).collect(),
        };
        let counts: Vec<Option<usize>> = match method {
            Method::Rks { .. } => self.feature_counts.iter().map(|d| Some(*d)).collect(),
            _ => vec![None],
        };
        let mut out = Vec::new();
        for &param in &params {
            for &features in &counts {
                for &lambda in &lambdas {
                    out.push(CvConfig {
                        lambda,
                        param,
                        features,
                    });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub lambda: f64,
    pub param: Option<f64>,
    pub features: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvEntry {
    pub config: CvConfig,
    pub mean_score: f64,
    pub std_score: f64,
    pub mean_fit_seconds: f64,
    pub fold_scores: Vec<f64>,
    /// The configuration failed to factorize on some fold; it is never selected.
    pub failed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub method: Method,
    pub metric: Metric,
    pub entries: Vec<CvEntry>,
    pub selected: usize,
    pub fold_assignment: Vec<usize>,
    /// Folds whose training or held-out part contains a single class.
    pub degenerate_folds: Vec<usize>,
}

/// Shuffled assignment of `n` samples to `k` folds of size `floor(n/k)` or
/// `ceil(n/k)`.
pub fn kfold_split(n: usize, k: usize, rng: &RngStream) -> Result<Vec<usize>> {
    if k < 2 || k > n {
        return Err(Error::InvalidParameter(format!(
            "k-fold split needs 2 <= k <= n, got k = {k}, n = {n}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng.generator());
    let mut folds = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        folds[i] = pos % k;
    }
    Ok(folds)
}

/// Training and held-out row indices for one fold.
pub fn fold_indices(assignment: &[usize], fold: usize) -> (Vec<usize>, Vec<usize>) {
    (0..assignment.len()).partition(|&i| assignment[i] != fold)
}

/// Stream used for the feature map of one fold and feature count.
pub fn fold_stream(base: &RngStream, fold: usize, features: usize) -> RngStream {
    base.derive_all(&[1 + fold as u64, features as u64])
}

/// Fits one grid configuration. `map_rng` seeds the random features (ignored
/// for LR and KRR).
pub fn fit_config(
    train: &Dataset,
    method: &Method,
    config: &CvConfig,
    map_rng: RngStream,
    scaling: Scaling,
) -> Result<FitModel> {
    let opts = FitOptions {
        scaling,
        task: train.task(),
        ..FitOptions::default()
    };
    let (x, y) = (train.inputs().view(), train.targets().view());
    let param = || {
        config
            .param
            .ok_or_else(|| Error::InvalidParameter("configuration is missing its kernel parameter".into()))
    };
    match method {
        Method::Lr => fit_lr_with(x, y, config.lambda, &opts),
        Method::Krr { kernel } => {
            let spec = kernel.spec(config.param.unwrap_or(1.0));
            fit_krr_with(x, y, &spec, config.lambda, &opts)
        }
        Method::Rks { family } => {
            let d = train.n_inputs();
            let features = config
                .features
                .ok_or_else(|| Error::InvalidParameter("configuration is missing its feature count".into()))?;
            let map = FeatureMapSpec::new(family.family(param()?, d), features, map_rng).sample(d)?;
            fit_rks_with(x, y, map, config.lambda, &opts)
        }
    }
}

/// Root-mean-square error over every output entry.
pub fn rmse(pred: ArrayView2<'_, f64>, truth: ArrayView2<'_, f64>) -> f64 {
    let n = pred.len().max(1) as f64;
    ((&pred - &truth).iter().map(|v| v * v).sum::<f64>() / n).sqrt()
}

/// Fraction of samples whose sign-readout matches the label.
pub fn accuracy(scores: ArrayView2<'_, f64>, labels: ArrayView2<'_, f64>) -> f64 {
    let n = scores.nrows().max(1) as f64;
    scores
        .column(0)
        .iter()
        .zip(labels.column(0))
        .filter(|(s, l)| label_of(**s) == **l)
        .count() as f64
        / n
}

pub fn score(model: &FitModel, test: &Dataset, metric: Metric) -> Result<f64> {
    let pred = predict(model, test.inputs().view())?;
    Ok(match metric {
        Metric::Rmse => rmse(pred.view(), test.targets().view()),
        Metric::Accuracy => accuracy(pred.view(), test.targets().view()),
    })
}

fn single_class(data: &Dataset, rows: &[usize]) -> bool {
    let t = data.targets();
    rows.iter().all(|&i| t[[i, 0]] == 1.0) || rows.iter().all(|&i| t[[i, 0]] == -1.0)
}

pub fn cross_validate(data: &Dataset, method: &Method, grid: &GridSpec) -> Result<CvReport> {
    let n = data.n_samples();
    grid.validate(method, n)?;
    if grid.metric == Metric::Accuracy && data.task() != Task::BinaryClassification {
        return Err(Error::InvalidParameter("accuracy needs a classification dataset".into()));
    }
    let fold_assignment = kfold_split(n, grid.folds, &grid.rng)?;
    let splits: Vec<_> = (0..grid.folds).map(|f| fold_indices(&fold_assignment, f)).collect();
    let degenerate_folds = if data.task() == Task::BinaryClassification {
        (0..grid.folds)
            .filter(|&f| single_class(data, &splits[f].0) || single_class(data, &splits[f].1))
            .collect()
    } else {
        Vec::new()
    };
    let parts: Vec<(Dataset, Dataset)> = splits.iter().map(|(tr, te)| (data.subset(tr), data.subset(te))).collect();

    let mut entries = Vec::new();
    for config in grid.configs(method) {
        let mut fold_scores = Vec::with_capacity(grid.folds);
        let mut seconds = 0.0;
        let mut failed = false;
        for (fold, (train, test)) in parts.iter().enumerate() {
            let stream = fold_stream(&grid.rng, fold, config.features.unwrap_or(0));
            let start = Instant::now();
            let fitted = fit_config(train, method, &config, stream, grid.scaling);
            seconds += start.elapsed().as_secs_f64();
            match fitted {
                Ok(model) => fold_scores.push(score(&model, test, grid.metric)?),
                Err(e) if e.is_numeric() => {
                    failed = true;
                    fold_scores.push(f64::NAN);
                }
                Err(e) => return Err(e),
            }
        }
        let k = fold_scores.len() as f64;
        let mean = fold_scores.iter().sum::<f64>() / k;
        let std = (fold_scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / k).sqrt();
        entries.push(CvEntry {
            config,
            mean_score: mean,
            std_score: std,
            mean_fit_seconds: seconds / k,
            fold_scores,
            failed,
        });
    }
    let selected = select(&entries, grid.metric)
        .ok_or(Error::Factorization { jitter: 0.0 })?;
    Ok(CvReport {
        method: *method,
        metric: grid.metric,
        entries,
        selected,
        fold_assignment,
        degenerate_folds,
    })
}

/// Best entry by mean score; ties go to larger lambda, then fewer features,
/// then smaller kernel parameter.
pub fn select(entries: &[CvEntry], metric: Metric) -> Option<usize> {
    use std::cmp::Ordering;
    let better = |a: &CvEntry, b: &CvEntry| -> Ordering {
        let by_score = match metric {
            Metric::Rmse => b.mean_score.total_cmp(&a.mean_score),
            Metric::Accuracy => a.mean_score.total_cmp(&b.mean_score),
        };
        by_score
            .then(a.config.lambda.total_cmp(&b.config.lambda))
            .then(b.config.features.cmp(&a.config.features))
            .then(
                b.config
                    .param
                    .unwrap_or(0.0)
                    .total_cmp(&a.config.param.unwrap_or(0.0)),
            )
    };
    entries
        .iter()
        .enumerate()
        .filter(|(_, e)| !e.failed && e.mean_score.is_finite())
        .max_by(|(_, a), (_, b)| better(a, b))
        .map(|(i, _)| i)
}

impl CvReport {
    pub fn best(&self) -> &CvEntry {
        &self.entries[self.selected]
    }

    /// Refits the selected configuration on all of `data`, seeding random
    /// features from the grid's base stream.
    pub fn refit(&self, data: &Dataset, grid: &GridSpec) -> Result<FitModel> {
        fit_config(data, &self.method, &self.best().config, grid.rng, grid.scaling)
    }

    /// One row per configuration.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lambda,param,features,mean_score,std_score,mean_fit_seconds,failed,selected\n");
        for (i, e) in self.entries.iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                e.config.lambda,
                e.config.param.map_or(String::new(), |p| p.to_string()),
                e.config.features.map_or(String::new(), |d| d.to_string()),
                e.mean_score,
                e.std_score,
                e.mean_fit_seconds,
                e.failed,
                i == self.selected
            );
        }
        out
    }

    /// `key = value` summary naming the selected configuration.
    pub fn summary(&self) -> String {
        let best = self.best();
        let mut out = String::new();
        let _ = writeln!(out, "[selected]");
        let _ = writeln!(out, "index = {}", self.selected);
        let _ = writeln!(out, "lambda = {:?}", best.config.lambda);
        if let Some(p) = best.config.param {
            let _ = writeln!(out, "param = {p:?}");
        }
        if let Some(d) = best.config.features {
            let _ = writeln!(out, "features = {d}");
        }
        let _ = writeln!(out, "metric = \"{}\"", self.metric.name());
        let _ = writeln!(out, "mean_score = {:?}", best.mean_score);
        let _ = writeln!(out, "std_score = {:?}", best.std_score);
        let _ = writeln!(out, "folds = {}", self.fold_assignment.iter().max().map_or(0, |m| m + 1));
        let _ = writeln!(out, "configurations = {}", self.entries.len());
        if !self.degenerate_folds.is_empty() {
            let _ = writeln!(out, "degenerate_folds = {:?}", self.degenerate_folds);
        }
        out
    }
}

/// `1e-6, 1e-5, ..., 1e1`.
pub fn default_lambdas() -> Vec<f64> {
    (-6..=1).map(|e| 10f64.powi(e)).collect()
}

/// `count` log-spaced bandwidths centred (geometrically) on the median
/// pairwise distance of up to 500 rows, spanning a factor of 4 either side.
pub fn default_sigmas(x: ArrayView2<'_, f64>, count: usize) -> Vec<f64> {
    let m = x.nrows().min(500);
    let mut dists = Vec::with_capacity(m * m.saturating_sub(1) / 2);
    for i in 0..m {
        for j in 0..i {
            let d2: f64 = x.row(i).iter().zip(x.row(j)).map(|(a, b)| (a - b) * (a - b)).sum();
            dists.push(d2.sqrt());
        }
    }
    dists.sort_by(f64::total_cmp);
    let median = dists.get(dists.len() / 2).copied().filter(|d| *d > 0.0).unwrap_or(1.0);
    if count <= 1 {
        return vec![median];
    }
    (0..count)
        .map(|i| median * 4f64.powf(-1.0 + 2.0 * i as f64 / (count - 1) as f64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn entry(lambda: f64, param: Option<f64>, features: Option<usize>, mean: f64) -> CvEntry {
        CvEntry {
            config: CvConfig { lambda, param, features },
            mean_score: mean,
            std_score: 0.0,
            mean_fit_seconds: 0.0,
            fold_scores: vec![mean],
            failed: false,
        }
    }

    #[test]
    fn split_sizes() {
        let rng = RngStream::new(1, 0);
        let f = kfold_split(10, 5, &rng).unwrap();
        for k in 0..5 {
            assert_eq!(f.iter().filter(|&&v| v == k).count(), 2);
        }
        let f = kfold_split(10, 3, &rng).unwrap();
        let mut sizes: Vec<usize> = (0..3).map(|k| f.iter().filter(|&&v| v == k).count()).collect();
        sizes.sort();
        assert_eq!(sizes, vec![3, 3, 4]);
        assert_eq!(f, kfold_split(10, 3, &rng).unwrap());
        assert!(kfold_split(3, 4, &rng).is_err());
        assert!(kfold_split(3, 1, &rng).is_err());
    }

    #[test]
    fn tie_breaking() {
        let es = vec![
            entry(0.1, Some(1.0), Some(100), 0.5),
            entry(1.0, Some(1.0), Some(200), 0.5),
            entry(1.0, Some(2.0), Some(100), 0.5),
            entry(1.0, Some(1.0), Some(100), 0.5),
            entry(10.0, Some(1.0), Some(100), 0.6),
        ];
        assert_eq!(select(&es, Metric::Rmse), Some(3));
        assert_eq!(select(&es, Metric::Accuracy), Some(4));
        let mut failed = es.clone();
        failed[3].failed = true;
        assert_eq!(select(&failed, Metric::Rmse), Some(2));
    }

    #[test]
    fn grid_validation() {
        let g = GridSpec::new(vec![1.0], vec![], vec![], Metric::Rmse, RngStream::new(0, 0));
        assert!(g.validate(&Method::Lr, 10).is_ok());
        assert!(g.validate(&Method::Krr { kernel: KernelKind::Rbf }, 10).is_err());
        assert!(g.validate(&Method::Rks { family: MapKind::Fourier }, 10).is_err());
        let mut g2 = g.clone();
        g2.folds = 11;
        assert!(g2.validate(&Method::Lr, 10).is_err());
        let g3 = GridSpec::new(vec![1.0], vec![1.0], vec![10], Metric::Rmse, RngStream::new(0, 0));
        assert!(g3.validate(&Method::Rks { family: MapKind::Stump }, 10).is_ok());
        assert!(g3.validate(&Method::Lr, 10).is_err());
    }

    #[test]
    fn config_order_and_counts() {
        let g = GridSpec::new(vec![1.0, 0.1], vec![0.5, 2.0], vec![10, 20, 30], Metric::Rmse, RngStream::new(0, 0));
        let c = g.configs(&Method::Rks { family: MapKind::Fourier });
        assert_eq!(c.len(), 12);
        assert_eq!(c[0].lambda, 0.1);
        assert_eq!(g.configs(&Method::Krr { kernel: KernelKind::Linear }).len(), 2);
    }

    #[test]
    fn default_grids() {
        let l = default_lambdas();
        assert_eq!(l.len(), 8);
        assert_eq!(l[0], 1e-6);
        assert_eq!(l[7], 10.0);
        let x = Array2::from_shape_fn((20, 1), |(i, _)| i as f64);
        let s = default_sigmas(x.view(), 5);
        assert_eq!(s.len(), 5);
        assert!((s[4] / s[0] - 16.0).abs() < 1e-9);
    }

    #[test]
    fn stump_family_box() {
        let FeatureFamily::Stump { a, box_lo, box_hi } = MapKind::Stump.family(3.0, 2) else { panic!() };
        assert_eq!(a, 3.0);
        assert_eq!(box_lo, vec![-0.75, -0.75]);
        assert_eq!(box_hi, vec![0.75, 0.75]);
    }
}
