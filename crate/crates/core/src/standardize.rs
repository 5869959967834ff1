//! Column centering and scaling of inputs, centering of targets.

use ndarray::{Array1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::data::{check_finite, DenseMatrix};
use crate::error::{Error, Result};

/// Fitted per-column affine transform. Inputs map to `(x - mean) / scale`,
/// targets to `y - mean`. Scales use the population standard deviation, and
/// constant columns get scale 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub input_means: Array1<f64>,
    pub input_scales: Array1<f64>,
    pub target_means: Array1<f64>,
}

/// How much of the standardization to fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Scaling {
    /// Center inputs and targets, scale inputs to unit variance.
    #[default]
    Full,
    /// Center only; input scales fixed at 1.
    CenterOnly,
    /// Identity transform.
    None,
}

impl Standardizer {
    pub fn fit(x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>) -> Result<Self> {
        Self::fit_with(x, y, Scaling::Full)
    }

    pub fn fit_with(x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>, scaling: Scaling) -> Result<Self> {
        if x.nrows() == 0 {
            return Err(Error::InvalidData("cannot standardize an empty matrix".into()));
        }
        if x.nrows() != y.nrows() {
            return Err(Error::dims("standardize target rows", x.nrows(), y.nrows()));
        }
        check_finite(x)?;
        check_finite(y)?;
        let (d, o) = (x.ncols(), y.ncols());
        if scaling == Scaling::None {
            return Ok(Self::identity(d, o));
        }
        let input_means = x.mean_axis(Axis(0)).expect("non-empty");
        let target_means = y.mean_axis(Axis(0)).expect("non-empty");
        let input_scales = match scaling {
            Scaling::Full => x.std_axis(Axis(0), 0.0).mapv(|s| if s > 0.0 { s } else { 1.0 }),
            _ => Array1::ones(d),
        };
        Ok(Self {
            input_means,
            input_scales,
            target_means,
        })
    }

    pub fn identity(n_inputs: usize, n_outputs: usize) -> Self {
        Self {
            input_means: Array1::zeros(n_inputs),
            input_scales: Array1::ones(n_inputs),
            target_means: Array1::zeros(n_outputs),
        }
    }

    pub fn n_inputs(&self) -> usize {
        self.input_means.len()
    }

    pub fn n_outputs(&self) -> usize {
        self.target_means.len()
    }

    pub fn transform_inputs(&self, x: ArrayView2<'_, f64>) -> Result<DenseMatrix> {
        if x.ncols() != self.n_inputs() {
            return Err(Error::dims("standardize input columns", self.n_inputs(), x.ncols()));
        }
        Ok((&x - &self.input_means) / &self.input_scales)
    }

    pub fn transform_targets(&self, y: ArrayView2<'_, f64>) -> Result<DenseMatrix> {
        if y.ncols() != self.n_outputs() {
            return Err(Error::dims("standardize target columns", self.n_outputs(), y.ncols()));
        }
        Ok(&y - &self.target_means)
    }

    /// Applies the transform to inputs and, when given, targets.
    pub fn apply(
        &self,
        x: ArrayView2<'_, f64>,
        y: Option<ArrayView2<'_, f64>>,
    ) -> Result<(DenseMatrix, Option<DenseMatrix>)> {
        let xs = self.transform_inputs(x)?;
        let ys = y.map(|y| self.transform_targets(y)).transpose()?;
        Ok((xs, ys))
    }

    pub fn inverse_inputs(&self, x: ArrayView2<'_, f64>) -> Result<DenseMatrix> {
        if x.ncols() != self.n_inputs() {
            return Err(Error::dims("standardize input columns", self.n_inputs(), x.ncols()));
        }
        Ok(&x * &self.input_scales + &self.input_means)
    }

    pub fn inverse_targets(&self, y: ArrayView2<'_, f64>) -> Result<DenseMatrix> {
        if y.ncols() != self.n_outputs() {
            return Err(Error::dims("standardize target columns", self.n_outputs(), y.ncols()));
        }
        Ok(&y + &self.target_means)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};
    use proptest::prelude::*;

    #[test]
    fn two_point_example() {
        let s = Standardizer::fit(array![[1.0], [3.0]].view(), array![[0.0], [4.0]].view()).unwrap();
        assert_eq!(s.input_means[0], 2.0);
        assert_eq!(s.target_means[0], 2.0);
        // population std of {1, 3} is 1
        assert!((s.input_scales[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn single_row_formula() {
        let s = Standardizer {
            input_means: array![2.0],
            input_scales: array![2f64.sqrt()],
            target_means: array![0.0],
        };
        let z = s.transform_inputs(array![[3.0]].view()).unwrap();
        assert!((z[[0, 0]] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        let z = s.transform_inputs(array![[2.0]].view()).unwrap();
        assert_eq!(z[[0, 0]], 0.0);
    }

    #[test]
    fn constant_column_gets_unit_scale() {
        let x = array![[0.0, 1.0], [0.0, 2.0], [0.0, 4.0]];
        let s = Standardizer::fit(x.view(), Array2::zeros((3, 1)).view()).unwrap();
        assert_eq!(s.input_scales[0], 1.0);
        assert!(s.input_scales[1] > 0.0);
    }

    #[test]
    fn already_standard_is_identity() {
        let x = array![[1.0, -1.0], [-1.0, 1.0]];
        let s = Standardizer::fit(x.view(), Array2::zeros((2, 1)).view()).unwrap();
        let z = s.transform_inputs(x.view()).unwrap();
        assert!((&z - &x).iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn errors() {
        let x = array![[1.0], [2.0]];
        assert!(Standardizer::fit(x.view(), array![[1.0]].view()).is_err());
        assert!(Standardizer::fit(Array2::zeros((0, 1)).view(), Array2::zeros((0, 1)).view()).is_err());
        assert!(Standardizer::fit(array![[f64::INFINITY]].view(), array![[0.0]].view()).is_err());
        let s = Standardizer::fit(x.view(), x.view()).unwrap();
        assert!(s.transform_inputs(array![[1.0, 2.0]].view()).is_err());
    }

    #[test]
    fn scaling_modes() {
        let x = array![[1.0], [5.0]];
        let y = array![[3.0], [5.0]];
        let c = Standardizer::fit_with(x.view(), y.view(), Scaling::CenterOnly).unwrap();
        assert_eq!(c.input_scales[0], 1.0);
        assert_eq!(c.input_means[0], 3.0);
        let n = Standardizer::fit_with(x.view(), y.view(), Scaling::None).unwrap();
        assert_eq!(n, Standardizer::identity(1, 1));
    }

    proptest! {
        #[test]
        fn round_trip(rows in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 3), 2..20)) {
            let n = rows.len();
            let x = Array2::from_shape_vec((n, 3), rows.concat()).unwrap();
            let y = x.column(0).to_owned().insert_axis(ndarray::Axis(1));
            let s = Standardizer::fit(x.view(), y.view()).unwrap();
            let (xs, ys) = s.apply(x.view(), Some(y.view())).unwrap();
            let xb = s.inverse_inputs(xs.view()).unwrap();
            let yb = s.inverse_targets(ys.unwrap().view()).unwrap();
            let scale = x.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            for (a, b) in x.iter().zip(xb.iter()).chain(y.iter().zip(yb.iter())) {
                prop_assert!((a - b).abs() <= 1e-12 * scale);
            }
        }
    }
}
