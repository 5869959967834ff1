//! Ridge solvers: linear (LR), exact kernel (KRR / LS-SVM) and random
//! feature (RKS) models, all resting on one jittered Cholesky solve.
//!
//! Every fit standardizes inputs and centers targets first; the target means
//! play the role of the bias term. Primal fits solve `(F^T F + lambda I) W =
//! F^T Y` with `F` either the standardized inputs or their random features,
//! so only a `d x d` or `D x D` system is formed. Dual fits solve
//! `(K + lambda I) L = Y` on the `n x n` Gram matrix and keep the
//! (standardized) training inputs for prediction.

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::data::{check_finite, DenseMatrix, Task};
use crate::error::{Error, Result};
use crate::features::{one_hot, FittedFeatureMap};
use crate::kernels::KernelSpec;
use crate::standardize::{Scaling, Standardizer};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub jitter_start: f64,
    pub jitter_max: f64,
    pub sym_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            jitter_start: 1e-10,
            jitter_max: 1e-4,
            sym_tol: 1e-8,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.jitter_start > 0.0 && self.jitter_start <= self.jitter_max) {
            return Err(Error::InvalidParameter(format!(
                "jitter ladder requires 0 < start <= max, got start {} max {}",
                self.jitter_start, self.jitter_max
            )));
        }
        if !(self.sym_tol >= 0.0) {
            return Err(Error::InvalidParameter("sym_tol must be non-negative".into()));
        }
        Ok(())
    }

    /// `0, start, 10 start, ...` up to and including `max`.
    pub fn jitter_ladder(&self) -> Vec<f64> {
        let mut ladder = vec![0.0];
        for i in 0.. {
            let e = self.jitter_start * 10f64.powi(i);
            if e >= self.jitter_max * (1.0 - 1e-9) {
                break;
            }
            ladder.push(e);
        }
        ladder.push(self.jitter_max);
        ladder
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpdSolution {
    pub solution: DenseMatrix,
    /// Diagonal shift that made the factorization succeed.
    pub jitter: f64,
}

/// Solves `(A + eps I) X = B` for symmetric positive (semi)definite `A`,
/// with `eps` the first rung of the jitter ladder at which Cholesky succeeds.
pub fn solve_spd(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>, opts: &SolveOptions) -> Result<SpdSolution> {
    opts.validate()?;
    let m = a.nrows();
    if a.ncols() != m {
        return Err(Error::dims("spd matrix columns", m, a.ncols()));
    }
    if b.nrows() != m {
        return Err(Error::dims("spd right-hand side rows", m, b.nrows()));
    }
    check_finite(a)?;
    check_finite(b)?;
    let scale = a.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
    let mut asym = 0.0f64;
    for i in 0..m {
        for j in 0..i {
            asym = asym.max((a[[i, j]] - a[[j, i]]).abs());
        }
    }
    if asym > opts.sym_tol * scale {
        return Err(Error::Asymmetric(asym));
    }

    for jitter in opts.jitter_ladder() {
        let mut l = a.as_standard_layout().into_owned();
        if jitter > 0.0 {
            l.diag_mut().mapv_inplace(|v| v + jitter);
        }
        if cholesky_lower(&mut l) {
            let solution = cholesky_solve(&l, b);
            return Ok(SpdSolution { solution, jitter });
        }
    }
    Err(Error::Factorization {
        jitter: opts.jitter_max,
    })
}

const BLOCK: usize = 64;

fn dot(x: &[f64], y: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (xc, yc) = (x.chunks_exact(4), y.chunks_exact(4));
    let tail: f64 = xc.remainder().iter().zip(yc.remainder()).map(|(a, b)| a * b).sum();
    for (a, b) in xc.zip(yc) {
        for t in 0..4 {
            acc[t] += a[t] * b[t];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// In-place blocked Cholesky on a standard-layout matrix; on success the
/// lower triangle holds `L` with `A = L L^T`. Entries above the diagonal are
/// left as scratch.
fn cholesky_lower(a: &mut Array2<f64>) -> bool {
    let m = a.nrows();
    let mut row_j = [0.0; BLOCK];
    let mut k = 0;
    while k < m {
        let end = (k + BLOCK).min(m);
        let data = a.as_slice_mut().expect("standard layout");
        // Columns k..end of L, left-looking within the panel.
        for j in k..end {
            let rj = j * m;
            let w = j - k;
            row_j[..w].copy_from_slice(&data[rj + k..rj + j]);
            let d = data[rj + j] - dot(&row_j[..w], &row_j[..w]);
            if !(d > 0.0 && d.is_finite()) {
                return false;
            }
            let d = d.sqrt();
            data[rj + j] = d;
            for i in j + 1..m {
                let ri = i * m;
                let v = data[ri + j] - dot(&data[ri + k..ri + j], &row_j[..w]);
                data[ri + j] = v / d;
            }
        }
        if end < m {
            // Lower block triangle of the trailing matrix only.
            let panel = a.slice(s![end.., k..end]).to_owned();
            let mut r = end;
            while r < m {
                let r_end = (r + BLOCK).min(m);
                let lhs = panel.slice(s![r - end..r_end - end, ..]);
                let rhs = panel.slice(s![..r_end - end, ..]);
                let mut target = a.slice_mut(s![r..r_end, end..r_end]);
                general_mat_mul(-1.0, &lhs, &rhs.t(), 1.0, &mut target);
                r = r_end;
            }
        }
        k = end;
    }
    true
}

fn cholesky_solve(l: &Array2<f64>, b: ArrayView2<'_, f64>) -> DenseMatrix {
    let m = l.nrows();
    let mut x = b.to_owned();
    let mut col = vec![0.0; m];
    for c in 0..b.ncols() {
        for (i, v) in col.iter_mut().enumerate() {
            *v = b[[i, c]];
        }
        // L y = b
        for i in 0..m {
            let row = l.row(i);
            let mut v = col[i];
            for j in 0..i {
                v -= row[j] * col[j];
            }
            col[i] = v / row[i];
        }
        // L^T x = y, column-oriented so rows of L are read contiguously
        for i in (0..m).rev() {
            let xi = col[i] / l[[i, i]];
            col[i] = xi;
            let row = l.row(i);
            for j in 0..i {
                col[j] -= row[j] * xi;
            }
        }
        for (i, v) in col.iter().enumerate() {
            x[[i, c]] = *v;
        }
    }
    x
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub scaling: Scaling,
    pub solve: SolveOptions,
    pub task: Task,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            scaling: Scaling::Full,
            solve: SolveOptions::default(),
            task: Task::Regression,
        }
    }
}

impl FitOptions {
    pub fn with_task(task: Task) -> Self {
        Self {
            task,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelKind {
    /// Weights over the standardized inputs (LR) or their features (RKS).
    Primal {
        weights: DenseMatrix,
        feature_map: Option<FittedFeatureMap>,
    },
    /// Dual weights over the stored, standardized training inputs.
    Dual {
        dual_weights: DenseMatrix,
        train_inputs: DenseMatrix,
        kernel: KernelSpec,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitModel {
    pub kind: ModelKind,
    pub lambda: f64,
    pub standardizer: Standardizer,
    pub task: Task,
    /// Jitter the solver needed on top of `lambda`.
    pub jitter: f64,
}

impl FitModel {
    pub fn n_inputs(&self) -> usize {
        self.standardizer.n_inputs()
    }

    pub fn n_outputs(&self) -> usize {
        self.standardizer.n_outputs()
    }

    /// Primal or dual weight matrix.
    pub fn weights(&self) -> &DenseMatrix {
        match &self.kind {
            ModelKind::Primal { weights, .. } => weights,
            ModelKind::Dual { dual_weights, .. } => dual_weights,
        }
    }

    pub fn feature_map(&self) -> Option<&FittedFeatureMap> {
        match &self.kind {
            ModelKind::Primal { feature_map, .. } => feature_map.as_ref(),
            ModelKind::Dual { .. } => None,
        }
    }

    /// Approximate heap footprint of the parameters needed at prediction time.
    pub fn model_bytes(&self) -> usize {
        let f = std::mem::size_of::<f64>();
        let std_bytes = (2 * self.n_inputs() + self.n_outputs()) * f;
        std_bytes
            + match &self.kind {
                ModelKind::Primal {
                    weights,
                    feature_map,
                } => weights.len() * f + feature_map.as_ref().map_or(0, map_bytes),
                ModelKind::Dual {
                    dual_weights,
                    train_inputs,
                    ..
                } => (dual_weights.len() + train_inputs.len()) * f,
            }
    }
}

fn map_bytes(map: &FittedFeatureMap) -> usize {
    use crate::features::MapParams;
    let f = std::mem::size_of::<f64>();
    match &map.params {
        MapParams::Periodic { omegas, phases, .. } => (omegas.len() + phases.len()) * f,
        MapParams::Stump { dims, thresholds } => dims.len() * std::mem::size_of::<usize>() + thresholds.len() * f,
        MapParams::Binning(g) => {
            (g.pitches.len() + g.offsets.len()) * f
                + g.n_columns() * (map.dim * std::mem::size_of::<i64>() + std::mem::size_of::<usize>())
        }
    }
}

fn check_fit_inputs(x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>, lambda: f64) -> Result<()> {
    if x.nrows() == 0 {
        return Err(Error::InvalidData("cannot fit on zero samples".into()));
    }
    if x.nrows() != y.nrows() {
        return Err(Error::dims("target rows", x.nrows(), y.nrows()));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "lambda must be finite and non-negative, got {lambda}"
        )));
    }
    Ok(())
}

/// Solves the primal ridge system `(F^T F + lambda I) W = F^T Y`.
pub fn ridge_primal(
    features: ArrayView2<'_, f64>,
    targets: ArrayView2<'_, f64>,
    lambda: f64,
    opts: &SolveOptions,
) -> Result<SpdSolution> {
    let (n, p) = features.dim();
    if p > n {
        // W = F^T (F F^T + lambda I)^-1 Y, the same weights from the smaller system.
        let mut gram = features.dot(&features.t());
        gram.diag_mut().mapv_inplace(|v| v + lambda);
        let dual = solve_spd(gram.view(), targets, opts)?;
        return Ok(SpdSolution {
            solution: features.t().dot(&dual.solution),
            jitter: dual.jitter,
        });
    }
    let mut gram = features.t().dot(&features);
    gram.diag_mut().mapv_inplace(|v| v + lambda);
    let rhs = features.t().dot(&targets);
    solve_spd(gram.view(), rhs.view(), opts)
}

/// Ridge regression on one-hot binning features given as occupied columns
/// per row, each with value `1/sqrt(n_grids)`. Narrow problems go through
/// [`ridge_primal`]; wide ones build the `n x n` Gram from shared columns and
/// never form the features densely.
fn ridge_bins(
    cols: &[Vec<usize>],
    width: usize,
    n_grids: usize,
    targets: ArrayView2<'_, f64>,
    lambda: f64,
    opts: &SolveOptions,
) -> Result<SpdSolution> {
    let n = cols.len();
    if width <= n {
        let z = one_hot(cols, width, n_grids);
        return ridge_primal(z.view(), targets, lambda, opts);
    }
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); width];
    for (i, row) in cols.iter().enumerate() {
        for &c in row {
            members[c].push(i);
        }
    }
    let mut counts = Array2::<u32>::zeros((n, n));
    for rows in &members {
        for &i in rows {
            for &j in rows {
                counts[[i, j]] += 1;
            }
        }
    }
    let mut gram = counts.mapv(|c| c as f64 / n_grids as f64);
    gram.diag_mut().mapv_inplace(|v| v + lambda);
    let dual = solve_spd(gram.view(), targets, opts)?;
    let v = 1.0 / (n_grids as f64).sqrt();
    let mut weights = Array2::zeros((width, targets.ncols()));
    for (c, rows) in members.iter().enumerate() {
        let mut w = weights.row_mut(c);
        for &i in rows {
            w.scaled_add(v, &dual.solution.row(i));
        }
    }
    Ok(SpdSolution {
        solution: weights,
        jitter: dual.jitter,
    })
}

/// `|Y - F W|^2 + lambda |W|^2` (Frobenius norms).
pub fn regularized_loss(
    features: ArrayView2<'_, f64>,
    targets: ArrayView2<'_, f64>,
    weights: ArrayView2<'_, f64>,
    lambda: f64,
) -> f64 {
    let resid = &targets - &features.dot(&weights);
    resid.iter().map(|v| v * v).sum::<f64>() + lambda * weights.iter().map(|v| v * v).sum::<f64>()
}

pub fn fit_lr(x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>, lambda: f64) -> Result<FitModel> {
    fit_lr_with(x, y, lambda, &FitOptions::default())
}

pub fn fit_lr_with(
    x: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
    lambda: f64,
    opts: &FitOptions,
) -> Result<FitModel> {
    check_fit_inputs(x, y, lambda)?;
    let standardizer = Standardizer::fit_with(x, y, opts.scaling)?;
    let (xs, ys) = standardizer.apply(x, Some(y))?;
    let sol = ridge_primal(xs.view(), ys.unwrap().view(), lambda, &opts.solve)?;
    Ok(FitModel {
        kind: ModelKind::Primal {
            weights: sol.solution,
            feature_map: None,
        },
        lambda,
        standardizer,
        task: opts.task,
        jitter: sol.jitter,
    })
}

pub fn fit_krr(
    x: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
    kernel: &KernelSpec,
    lambda: f64,
) -> Result<FitModel> {
    fit_krr_with(x, y, kernel, lambda, &FitOptions::default())
}

pub fn fit_krr_with(
    x: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
    kernel: &KernelSpec,
    lambda: f64,
    opts: &FitOptions,
) -> Result<FitModel> {
    check_fit_inputs(x, y, lambda)?;
    let standardizer = Standardizer::fit_with(x, y, opts.scaling)?;
    let (xs, ys) = standardizer.apply(x, Some(y))?;
    let mut k = kernel.gram(xs.view(), xs.view())?;
    k.diag_mut().mapv_inplace(|v| v + lambda);
    let sol = solve_spd(k.view(), ys.unwrap().view(), &opts.solve)?;
    Ok(FitModel {
        kind: ModelKind::Dual {
            dual_weights: sol.solution,
            train_inputs: xs,
            kernel: kernel.clone(),
        },
        lambda,
        standardizer,
        task: opts.task,
        jitter: sol.jitter,
    })
}

/// Random kitchen sinks: ridge regression on `z(x)` from `map`. The map is
/// moved into the model; binning maps grow their bin table over `x` here.
pub fn fit_rks(
    x: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
    map: FittedFeatureMap,
    lambda: f64,
) -> Result<FitModel> {
    fit_rks_with(x, y, map, lambda, &FitOptions::default())
}

pub fn fit_rks_with(
    x: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
    mut map: FittedFeatureMap,
    lambda: f64,
    opts: &FitOptions,
) -> Result<FitModel> {
    check_fit_inputs(x, y, lambda)?;
    let standardizer = Standardizer::fit_with(x, y, opts.scaling)?;
    let (xs, ys) = standardizer.apply(x, Some(y))?;
    let ys = ys.expect("targets were supplied");
    let sol = match map.bin_columns_mut(xs.view())? {
        Some(cols) => ridge_bins(&cols, map.output_dim(), map.n_features(), ys.view(), lambda, &opts.solve)?,
        None => ridge_primal(map.transform(xs.view())?.view(), ys.view(), lambda, &opts.solve)?,
    };
    Ok(FitModel {
        kind: ModelKind::Primal {
            weights: sol.solution,
            feature_map: Some(map),
        },
        lambda,
        standardizer,
        task: opts.task,
        jitter: sol.jitter,
    })
}

/// Predictions in the original target units.
pub fn predict(model: &FitModel, x: ArrayView2<'_, f64>) -> Result<DenseMatrix> {
    if x.ncols() != model.n_inputs() {
        return Err(Error::dims("prediction input columns", model.n_inputs(), x.ncols()));
    }
    if x.nrows() == 0 {
        return Ok(Array2::zeros((0, model.n_outputs())));
    }
    let xs = model.standardizer.transform_inputs(x)?;
    let centered = match &model.kind {
        ModelKind::Primal {
            weights,
            feature_map: None,
        } => xs.dot(weights),
        ModelKind::Primal {
            weights,
            feature_map: Some(map),
        } => map.apply_weights(xs.view(), weights.view())?,
        ModelKind::Dual {
            dual_weights,
            train_inputs,
            kernel,
        } => kernel.gram(xs.view(), train_inputs.view())?.dot(dual_weights),
    };
    model.standardizer.inverse_targets(centered.view())
}

/// `sign` of the single-output prediction, with `sign(0) = +1`.
pub fn predict_class(model: &FitModel, x: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
    if model.task != Task::BinaryClassification {
        return Err(Error::NotClassification);
    }
    if model.n_outputs() != 1 {
        return Err(Error::dims("classification outputs", 1, model.n_outputs()));
    }
    let scores = predict(model, x)?;
    Ok(scores.index_axis(Axis(1), 0).iter().map(|&v| label_of(v)).collect())
}

pub fn label_of(score: f64) -> f64 {
    if score >= 0.0 {
        1.0
    } else {
        -1.0
    }
}
