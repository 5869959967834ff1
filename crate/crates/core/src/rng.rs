//! Deterministic random streams keyed by `(seed, stream_id)`.
//!
//! Each stream is a ChaCha20 generator whose key comes from `seed` and whose
//! stream selector is `stream_id`, so sub-streams derived for folds, features
//! or repetitions never share state and never depend on evaluation order.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::DenseMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// A fresh generator positioned at the start of this stream.
    pub fn generator(&self) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// Independent child stream identified by `tag`. Same seed, different
    /// stream selector; deriving with equal tags gives equal streams.
    pub fn derive(&self, tag: u64) -> RngStream {
        RngStream {
            seed: self.seed,
            stream_id: splitmix64(self.stream_id ^ splitmix64(tag.wrapping_add(1))),
        }
    }

    /// Child stream keyed by several tags, folded left to right.
    pub fn derive_all(&self, tags: &[u64]) -> RngStream {
        tags.iter().fold(*self, |s, &t| s.derive(t))
    }
}

/// `rows x cols` matrix of i.i.d. `N(0, std^2)` entries, filled row-major.
pub fn draw_gaussian(rng: &RngStream, rows: usize, cols: usize, std: f64) -> Result<DenseMatrix> {
    if !(std > 0.0 && std.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "gaussian std must be positive, got {std}"
        )));
    }
    let mut g = rng.generator();
    Ok(Array2::from_shape_simple_fn((rows, cols), || {
        let v: f64 = StandardNormal.sample(&mut g);
        v * std
    }))
}

/// `count` i.i.d. draws uniform on `[lo, hi)`.
pub fn draw_uniform(rng: &RngStream, count: usize, lo: f64, hi: f64) -> Result<Vec<f64>> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "uniform range requires lo < hi, got [{lo}, {hi})"
        )));
    }
    let mut g = rng.generator();
    Ok((0..count).map(|_| uniform_in(&mut g, lo, hi)).collect())
}

/// One uniform draw on `[lo, hi)`; guards the rounding case `lo + u*(hi-lo) == hi`.
pub(crate) fn uniform_in<R: Rng>(g: &mut R, lo: f64, hi: f64) -> f64 {
    let u: f64 = g.random();
    let v = lo + u * (hi - lo);
    if v >= hi {
        lo.max(hi - (hi - lo) * f64::EPSILON)
    } else {
        v
    }
}
