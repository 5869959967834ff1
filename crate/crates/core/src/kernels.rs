//! Exact kernel functions and Gram matrices.
//!
//! These are the ground truth that the random feature maps in
//! [`crate::features`] approximate. Distances are accumulated directly as
//! sums of squared (or absolute) coordinate differences rather than through
//! the `|x|^2 + |y|^2 - 2 x.y` expansion, which cancels badly for nearby
//! points.
//!
//! The Laplacian kernel uses the bandwidth form `exp(-|x - y|_1 / (2 sigma^2))`;
//! the equivalent rate is `gamma = 1 / (2 sigma^2)`.
//!
//! The polynomial kernel `(a x.y + b)^p` is only positive semidefinite for
//! `a, b >= 0`. Other values are accepted but the Gram matrix may then be
//! indefinite and kernel ridge solves may need jitter or fail.

use ndarray::{Array2, ArrayView1, ArrayView2, Zip};
use serde::{Deserialize, Serialize};

use crate::data::DenseMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum KernelSpec {
    Linear,
    Polynomial { a: f64, b: f64, p: u32 },
    Rbf { sigma: f64 },
    Laplacian { sigma: f64 },
    /// `1 - |x - y|_1 / a`, valid on the box `[box_lo, box_hi]`.
    StumpL1 {
        a: f64,
        box_lo: Vec<f64>,
        box_hi: Vec<f64>,
    },
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
    }
}

pub(crate) fn validate_box(lo: &[f64], hi: &[f64]) -> Result<()> {
    if lo.len() != hi.len() {
        return Err(Error::dims("box bounds", lo.len(), hi.len()));
    }
    if lo.is_empty() {
        return Err(Error::InvalidParameter("box must have at least one dimension".into()));
    }
    if lo.iter().zip(hi).any(|(l, h)| !(l < h) || !l.is_finite() || !h.is_finite()) {
        return Err(Error::InvalidParameter("box requires lo < hi in every dimension".into()));
    }
    Ok(())
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            KernelSpec::Linear => Ok(()),
            KernelSpec::Polynomial { a, b, p } => {
                if !a.is_finite() || !b.is_finite() {
                    return Err(Error::InvalidParameter("polynomial a and b must be finite".into()));
                }
                if *p == 0 {
                    return Err(Error::InvalidParameter("polynomial degree must be >= 1".into()));
                }
                Ok(())
            }
            KernelSpec::Rbf { sigma } | KernelSpec::Laplacian { sigma } => positive("sigma", *sigma),
            KernelSpec::StumpL1 { a, box_lo, box_hi } => {
                positive("stump a", *a)?;
                validate_box(box_lo, box_hi)
            }
        }
    }

    /// Input dimension fixed by the spec, if any.
    pub fn dim(&self) -> Option<usize> {
        match self {
            KernelSpec::StumpL1 { box_lo, .. } => Some(box_lo.len()),
            _ => None,
        }
    }

    /// Same kernel with its bandwidth (`sigma`) or scale (`a`) replaced.
    pub fn with_param(&self, value: f64) -> KernelSpec {
        let mut k = self.clone();
        match &mut k {
            KernelSpec::Rbf { sigma } | KernelSpec::Laplacian { sigma } => *sigma = value,
            KernelSpec::StumpL1 { a, .. } | KernelSpec::Polynomial { a, .. } => *a = value,
            KernelSpec::Linear => {}
        }
        k
    }

    pub fn eval(&self, x: ArrayView1<'_, f64>, y: ArrayView1<'_, f64>) -> Result<f64> {
        if x.len() != y.len() {
            return Err(Error::dims("kernel argument length", x.len(), y.len()));
        }
        if let Some(d) = self.dim() {
            if x.len() != d {
                return Err(Error::dims("kernel input dimension", d, x.len()));
            }
        }
        if let KernelSpec::StumpL1 { box_lo, box_hi, .. } = self {
            check_in_box(x, box_lo, box_hi)?;
            check_in_box(y, box_lo, box_hi)?;
        }
        Ok(self.eval_unchecked(x, y))
    }

    fn eval_unchecked(&self, x: ArrayView1<'_, f64>, y: ArrayView1<'_, f64>) -> f64 {
        match self {
            KernelSpec::Linear => x.dot(&y),
            KernelSpec::Polynomial { a, b, p } => (a * x.dot(&y) + b).powi(*p as i32),
            KernelSpec::Rbf { sigma } => {
                let d2: f64 = Zip::from(&x).and(&y).fold(0.0, |acc, a, b| acc + (a - b) * (a - b));
                (-d2 / (2.0 * sigma * sigma)).exp()
            }
            KernelSpec::Laplacian { sigma } => {
                let d1: f64 = Zip::from(&x).and(&y).fold(0.0, |acc, a, b| acc + (a - b).abs());
                (-d1 / (2.0 * sigma * sigma)).exp()
            }
            KernelSpec::StumpL1 { a, .. } => {
                let d1: f64 = Zip::from(&x).and(&y).fold(0.0, |acc, a, b| acc + (a - b).abs());
                1.0 - d1 / a
            }
        }
    }

    /// `K[i, j] = k(x1_i, x2_j)`.
    pub fn gram(&self, x1: ArrayView2<'_, f64>, x2: ArrayView2<'_, f64>) -> Result<DenseMatrix> {
        self.validate()?;
        if x1.ncols() != x2.ncols() {
            return Err(Error::dims("gram input columns", x1.ncols(), x2.ncols()));
        }
        if let Some(d) = self.dim() {
            if x1.ncols() != d {
                return Err(Error::dims("kernel input dimension", d, x1.ncols()));
            }
        }
        if let KernelSpec::StumpL1 { box_lo, box_hi, .. } = self {
            for row in x1.rows().into_iter().chain(x2.rows()) {
                check_in_box(row, box_lo, box_hi)?;
            }
        }
        match self {
            KernelSpec::Linear => Ok(x1.dot(&x2.t())),
            KernelSpec::Polynomial { a, b, p } => {
                Ok(x1.dot(&x2.t()).mapv(|v| (a * v + b).powi(*p as i32)))
            }
            KernelSpec::Rbf { sigma } => {
                let scale = -1.0 / (2.0 * sigma * sigma);
                Ok(pairwise(x1, x2, |a, b| (a - b) * (a - b)).mapv(|d2| (d2 * scale).exp()))
            }
            KernelSpec::Laplacian { sigma } => {
                let scale = -1.0 / (2.0 * sigma * sigma);
                Ok(pairwise(x1, x2, |a, b| (a - b).abs()).mapv(|d1| (d1 * scale).exp()))
            }
            KernelSpec::StumpL1 { a, .. } => {
                Ok(pairwise(x1, x2, |a, b| (a - b).abs()).mapv(|d1| 1.0 - d1 / a))
            }
        }
    }
}

fn check_in_box(x: ArrayView1<'_, f64>, lo: &[f64], hi: &[f64]) -> Result<()> {
    for (m, v) in x.iter().enumerate() {
        if *v < lo[m] || *v > hi[m] {
            return Err(Error::InvalidData(format!(
                "input {v} in dimension {m} lies outside the kernel box [{}, {}]",
                lo[m], hi[m]
            )));
        }
    }
    Ok(())
}

/// Sum over coordinates of `term(x1_im, x2_jm)` for every pair of rows.
fn pairwise(
    x1: ArrayView2<'_, f64>,
    x2: ArrayView2<'_, f64>,
    term: impl Fn(f64, f64) -> f64,
) -> DenseMatrix {
    let a = x1.as_standard_layout();
    let b = x2.as_standard_layout();
    let d = a.ncols();
    let a = a.as_slice().expect("standard layout");
    let b = b.as_slice().expect("standard layout");
    let (n1, n2) = (x1.nrows(), x2.nrows());
    let mut out = Vec::with_capacity(n1 * n2);
    for i in 0..n1 {
        let xi = &a[i * d..(i + 1) * d];
        for j in 0..n2 {
            let xj = &b[j * d..(j + 1) * d];
            out.push(xi.iter().zip(xj).map(|(&u, &v)| term(u, v)).sum::<f64>());
        }
    }
    Array2::from_shape_vec((n1, n2), out).expect("sized above")
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    #[test]
    fn analytic_values() {
        let rbf = KernelSpec::Rbf { sigma: 1.0 };
        let x = array![0.3, -1.2];
        assert_eq!(rbf.eval(x.view(), x.view()).unwrap(), 1.0);
        let v = rbf.eval(array![0.0, 0.0].view(), array![1.0, 1.0].view()).unwrap();
        assert!((v - (-1f64).exp()).abs() < 1e-15);
        assert!((v - 0.367879).abs() < 1e-6);

        let stump = KernelSpec::StumpL1 {
            a: 4.0,
            box_lo: vec![0.0],
            box_hi: vec![4.0],
        };
        assert_eq!(stump.eval(array![0.0].view(), array![1.0].view()).unwrap(), 0.75);

        let lap = KernelSpec::Laplacian { sigma: 0.5 };
        let v = lap.eval(array![0.0, 0.0].view(), array![0.25, -0.25].view()).unwrap();
        assert!((v - (-1f64).exp()).abs() < 1e-15);

        let poly = KernelSpec::Polynomial { a: 2.0, b: 1.0, p: 3 };
        assert_eq!(poly.eval(array![1.0, 1.0].view(), array![1.0, 0.5].view()).unwrap(), 64.0);
    }

    #[test]
    fn eval_errors() {
        let rbf = KernelSpec::Rbf { sigma: 1.0 };
        assert!(rbf.eval(array![0.0].view(), array![0.0, 1.0].view()).is_err());
        let stump = KernelSpec::StumpL1 {
            a: 1.0,
            box_lo: vec![0.0],
            box_hi: vec![1.0],
        };
        assert!(stump.eval(array![0.0].view(), array![1.5].view()).is_err());
        assert!(stump.gram(array![[0.5], [2.0]].view(), array![[0.5]].view()).is_err());
        assert!(KernelSpec::Rbf { sigma: 0.0 }.validate().is_err());
        assert!(KernelSpec::Polynomial { a: 1.0, b: 0.0, p: 0 }.validate().is_err());
    }

    #[test]
    fn linear_gram_on_identity() {
        let x = array![[1.0, 0.0], [0.0, 1.0]];
        let k = KernelSpec::Linear.gram(x.view(), x.view()).unwrap();
        assert_eq!(k, Array2::eye(2));
    }

    #[test]
    fn rbf_gram_matches_eval() {
        let x1 = array![[0.0, 1.0], [2.0, -1.0], [0.5, 0.5]];
        let x2 = array![[1.0, 1.0], [0.0, 0.0]];
        let spec = KernelSpec::Rbf { sigma: 0.7 };
        let k = spec.gram(x1.view(), x2.view()).unwrap();
        for i in 0..3 {
            for j in 0..2 {
                let e = spec.eval(x1.row(i), x2.row(j)).unwrap();
                assert!((k[[i, j]] - e).abs() < 1e-15);
            }
        }
        let kk = spec.gram(x1.view(), x1.view()).unwrap();
        assert!(kk.diag().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn with_param_replaces_bandwidth() {
        assert_eq!(KernelSpec::Rbf { sigma: 1.0 }.with_param(2.0), KernelSpec::Rbf { sigma: 2.0 });
        assert_eq!(KernelSpec::Linear.with_param(2.0), KernelSpec::Linear);
    }
}
