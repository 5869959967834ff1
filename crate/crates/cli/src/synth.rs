//! Synthetic datasets.
//!
//! * `sinc-nd`: `x ~ U[-2, 2]^d`, `y = sin(pi r) / (pi r)` with `r = |x|` (1 at the origin).
//! * `sum-sines`: `x ~ U[-2, 2]^d`, `y = sum_m sin(3 x_m)`.
//! * `xor-blobs`: the first two inputs sit at a random corner of `{-1, 1}^2`
//!   plus `N(0, s^2)` jitter with `s = noise_std`, remaining inputs are
//!   `N(0, 1)` distractors; the label is `sign(x_1 x_2)` with `sign(0) = +1`.
//! * `linear-noise`: `x ~ N(0, 1)^d`, `y = sum_m x_m / (m + 1)`.
//!
//! Regression targets receive additive `N(0, noise_std^2)` noise.

use std::str::FromStr;

use ndarray::{Array2, Axis};
use rks_core::rng::{draw_gaussian, draw_uniform};
use rks_core::{Dataset, RngStream, Task};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SyntheticKind {
    SincNd,
    SumSines,
    XorBlobs,
    LinearNoise,
}

impl FromStr for SyntheticKind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        <Self as clap::ValueEnum>::from_str(s, true).map_err(|_| CliError::Usage(format!("unknown dataset kind {s:?}")))
    }
}

impl SyntheticKind {
    pub fn task(&self) -> Task {
        match self {
            SyntheticKind::XorBlobs => Task::BinaryClassification,
            _ => Task::Regression,
        }
    }
}

pub fn gen_synthetic(kind: SyntheticKind, n: usize, d: usize, noise_std: f64, rng: &RngStream) -> Result<Dataset> {
    if n == 0 || d == 0 {
        return Err(CliError::Usage("synthetic data needs n >= 1 and d >= 1".into()));
    }
    if !(noise_std >= 0.0 && noise_std.is_finite()) {
        return Err(CliError::Usage(format!("noise_std must be finite and >= 0, got {noise_std}")));
    }
    let uniform = |lo, hi| -> Result<Array2<f64>> {
        let v = draw_uniform(&rng.derive(0), n * d, lo, hi)?;
        Ok(Array2::from_shape_vec((n, d), v).expect("n*d values"))
    };
    let noise = || gaussian_or_zero(&rng.derive(1), n, 1, noise_std);
    let (x, y) = match kind {
        SyntheticKind::SincNd => {
            let x = uniform(-2.0, 2.0)?;
            let y = x.map_axis(Axis(1), |r| sinc(r.dot(&r).sqrt())).insert_axis(Axis(1));
            (x, y + noise()?)
        }
        SyntheticKind::SumSines => {
            let x = uniform(-2.0, 2.0)?;
            let y = x.map_axis(Axis(1), |r| sum_sines(r.iter())).insert_axis(Axis(1));
            (x, y + noise()?)
        }
        SyntheticKind::LinearNoise => {
            let x = draw_gaussian(&rng.derive(0), n, d, 1.0)?;
            let beta = Array2::from_shape_fn((d, 1), |(m, _)| 1.0 / (m as f64 + 1.0));
            let y = x.dot(&beta);
            (x, y + noise()?)
        }
        SyntheticKind::XorBlobs => {
            if d < 2 {
                return Err(CliError::Usage("xor-blobs needs d >= 2".into()));
            }
            let mut x = draw_gaussian(&rng.derive(0), n, d, 1.0)?;
            let jitter = gaussian_or_zero(&rng.derive(1), n, 2, noise_std)?;
            let coins = draw_uniform(&rng.derive(2), 2 * n, 0.0, 1.0)?;
            for i in 0..n {
                for m in 0..2 {
                    let corner = if coins[2 * i + m] < 0.5 { -1.0 } else { 1.0 };
                    x[[i, m]] = corner + jitter[[i, m]];
                }
            }
            let y = x
                .map_axis(Axis(1), |r| if r[0] * r[1] >= 0.0 { 1.0 } else { -1.0 })
                .insert_axis(Axis(1));
            (x, y)
        }
    };
    Ok(Dataset::new(x, y, kind.task())?)
}

fn gaussian_or_zero(rng: &RngStream, rows: usize, cols: usize, std: f64) -> rks_core::Result<Array2<f64>> {
    if std == 0.0 {
        Ok(Array2::zeros((rows, cols)))
    } else {
        draw_gaussian(rng, rows, cols, std)
    }
}

fn sum_sines<'a>(x: impl Iterator<Item = &'a f64>) -> f64 {
    x.map(|v| (3.0 * v).sin()).sum()
}

fn sinc(r: f64) -> f64 {
    if r == 0.0 {
        1.0
    } else {
        let t = std::f64::consts::PI * r;
        t.sin() / t
    }
}
