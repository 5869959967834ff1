//! Explicit random feature maps `z(x)` with `z(x).z(y) ~ k(x, y)`.
//!
//! | family       | feature                                   | target kernel                 |
//! |--------------|-------------------------------------------|-------------------------------|
//! | `Fourier`    | `sqrt(2/D) cos(w.x + b)`                  | RBF(sigma)                    |
//! | `SquareWave` | `sqrt(2/D) sgn(cos(w.x + b))`             | none claimed                  |
//! | `Walsh`      | square wave with `b` snapped to `k pi/2`  | none claimed                  |
//! | `Stump`      | `(1, sgn(x_m - t)) / sqrt(2D)` per stump  | `1 - |x - y|_1 / a` (d = 1)   |
//! | `Binning`    | one-hot bin indicator `/ sqrt(D)` per grid| Laplacian(sigma)              |
//!
//! Frequencies `w` are drawn from `N(0, I / sigma^2)`, the spectral density
//! of the RBF kernel, and phases `b` uniformly from `[0, 2 pi)`.
//!
//! Stumps pick a dimension `m` uniformly and a threshold `t` uniformly inside
//! the box along `m`. Pairing each sign with a constant channel gives
//! `z(x).z(y) = mean_k (1 + s_k(x) s_k(y)) / 2`, whose expectation in one
//! dimension is `1 - |x - y| / a` when `a` is the box width. With `d`
//! dimensions of equal width `w` the expectation is `1 - |x - y|_1 / (d w)`.
//!
//! Binning grids draw, per dimension, a pitch from `Gamma(2, rate = 1/(2 sigma^2))`
//! and an offset uniform on `[0, pitch)`. Two points share a bin of one grid
//! with probability `exp(-|x - y|_1 / (2 sigma^2))`. Bin tuples are mapped
//! to output columns on first sight, in row-major order, by
//! [`FittedFeatureMap::transform_mut`]; [`FittedFeatureMap::transform`]
//! reuses the frozen table and leaves unseen bins at zero.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, PI};

use ndarray::{Array1, Array2, ArrayView2};
use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::data::DenseMatrix;
use crate::error::{Error, Result};
use crate::kernels::{validate_box, KernelSpec};
use crate::rng::{draw_gaussian, draw_uniform, uniform_in, RngStream};

const TWO_PI: f64 = 2.0 * PI;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FeatureFamily {
    Fourier { sigma: f64 },
    SquareWave { sigma: f64 },
    Walsh { sigma: f64 },
    Stump { a: f64, box_lo: Vec<f64>, box_hi: Vec<f64> },
    Binning { sigma: f64, box_lo: Vec<f64>, box_hi: Vec<f64> },
}

impl FeatureFamily {
    pub fn name(&self) -> &'static str {
        match self {
            FeatureFamily::Fourier { .. } => "fourier",
            FeatureFamily::SquareWave { .. } => "squarewave",
            FeatureFamily::Walsh { .. } => "walsh",
            FeatureFamily::Stump { .. } => "stump",
            FeatureFamily::Binning { .. } => "binning",
        }
    }

    /// Same family with its bandwidth (`sigma`) or stump scale (`a`) replaced.
    pub fn with_param(&self, value: f64) -> FeatureFamily {
        let mut f = self.clone();
        match &mut f {
            FeatureFamily::Fourier { sigma }
            | FeatureFamily::SquareWave { sigma }
            | FeatureFamily::Walsh { sigma }
            | FeatureFamily::Binning { sigma, .. } => *sigma = value,
            FeatureFamily::Stump { a, .. } => *a = value,
        }
        f
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMapSpec {
    pub family: FeatureFamily,
    pub n_features: usize,
    pub rng: RngStream,
}

impl FeatureMapSpec {
    pub fn new(family: FeatureFamily, n_features: usize, rng: RngStream) -> Self {
        Self {
            family,
            n_features,
            rng,
        }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        if self.n_features == 0 {
            return Err(Error::InvalidParameter("feature count must be >= 1".into()));
        }
        if d == 0 {
            return Err(Error::InvalidParameter("input dimension must be >= 1".into()));
        }
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
            }
        };
        match &self.family {
            FeatureFamily::Fourier { sigma }
            | FeatureFamily::SquareWave { sigma }
            | FeatureFamily::Walsh { sigma } => positive("sigma", *sigma),
            FeatureFamily::Stump { a, box_lo, box_hi } => {
                positive("stump a", *a)?;
                validate_box(box_lo, box_hi)?;
                if box_lo.len() != d {
                    return Err(Error::dims("stump box dimension", d, box_lo.len()));
                }
                Ok(())
            }
            FeatureFamily::Binning { sigma, box_lo, box_hi } => {
                positive("sigma", *sigma)?;
                validate_box(box_lo, box_hi)?;
                if box_lo.len() != d {
                    return Err(Error::dims("binning box dimension", d, box_lo.len()));
                }
                Ok(())
            }
        }
    }

    /// The exact kernel this family approximates, when one is known.
    pub fn target_kernel(&self) -> Option<KernelSpec> {
        match &self.family {
            FeatureFamily::Fourier { sigma } => Some(KernelSpec::Rbf { sigma: *sigma }),
            FeatureFamily::Stump { a, box_lo, box_hi } => Some(KernelSpec::StumpL1 {
                a: *a,
                box_lo: box_lo.clone(),
                box_hi: box_hi.clone(),
            }),
            FeatureFamily::Binning { sigma, .. } => Some(KernelSpec::Laplacian { sigma: *sigma }),
            FeatureFamily::SquareWave { .. } | FeatureFamily::Walsh { .. } => None,
        }
    }

    /// Draws the random parameters for inputs of dimension `d`.
    pub fn sample(&self, d: usize) -> Result<FittedFeatureMap> {
        FittedFeatureMap::sample(self.clone(), d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Waveform {
    Cosine,
    Square,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MapParams {
    /// Fourier, square-wave and Walsh maps. `omegas` is `D x d`.
    Periodic {
        omegas: DenseMatrix,
        phases: Array1<f64>,
        waveform: Waveform,
    },
    Stump {
        dims: Vec<usize>,
        thresholds: Vec<f64>,
    },
    Binning(BinningGrids),
}

/// Random grids for the binning map and the tuple-to-column tables that
/// grow as new bins are seen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "BinningRepr", from = "BinningRepr")]
pub struct BinningGrids {
    /// `D x d` pitches.
    pub pitches: DenseMatrix,
    /// `D x d` offsets, each in `[0, pitch)`.
    pub offsets: DenseMatrix,
    pub origin: Vec<f64>,
    tables: Vec<HashMap<Vec<i64>, usize>>,
    n_columns: usize,
}

#[derive(Serialize, Deserialize)]
struct BinningRepr {
    pitches: DenseMatrix,
    offsets: DenseMatrix,
    origin: Vec<f64>,
    /// Per grid, `(bin tuple, column)` sorted by column.
    tables: Vec<Vec<(Vec<i64>, usize)>>,
    n_columns: usize,
}

impl From<BinningGrids> for BinningRepr {
    fn from(g: BinningGrids) -> Self {
        let tables = g
            .tables
            .into_iter()
            .map(|t| {
                let mut entries: Vec<_> = t.into_iter().collect();
                entries.sort_by_key(|(_, c)| *c);
                entries
            })
            .collect();
        BinningRepr {
            pitches: g.pitches,
            offsets: g.offsets,
            origin: g.origin,
            tables,
            n_columns: g.n_columns,
        }
    }
}

impl From<BinningRepr> for BinningGrids {
    fn from(r: BinningRepr) -> Self {
        BinningGrids {
            pitches: r.pitches,
            offsets: r.offsets,
            origin: r.origin,
            tables: r.tables.into_iter().map(|t| t.into_iter().collect()).collect(),
            n_columns: r.n_columns,
        }
    }
}

impl BinningGrids {
    fn bin_of(&self, grid: usize, x: &[f64]) -> Vec<i64> {
        x.iter()
            .enumerate()
            .map(|(m, &v)| {
                let p = self.pitches[[grid, m]];
                ((v - self.origin[m] - self.offsets[[grid, m]]) / p).floor() as i64
            })
            .collect()
    }

    pub fn n_columns(&self) -> usize {
        self.n_columns
    }

    pub fn n_grids(&self) -> usize {
        self.tables.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedFeatureMap {
    pub spec: FeatureMapSpec,
    pub dim: usize,
    pub params: MapParams,
}

impl FittedFeatureMap {
    pub fn sample(spec: FeatureMapSpec, d: usize) -> Result<Self> {
        spec.validate(d)?;
        let n = spec.n_features;
        let params = match &spec.family {
            FeatureFamily::Fourier { sigma }
            | FeatureFamily::SquareWave { sigma }
            | FeatureFamily::Walsh { sigma } => {
                let omegas = draw_gaussian(&spec.rng.derive(0), n, d, 1.0 / sigma)?;
                let mut phases = Array1::from(draw_uniform(&spec.rng.derive(1), n, 0.0, TWO_PI)?);
                let waveform = match spec.family {
                    FeatureFamily::Fourier { .. } => Waveform::Cosine,
                    _ => Waveform::Square,
                };
                if let FeatureFamily::Walsh { .. } = spec.family {
                    phases.mapv_inplace(snap_dyadic);
                }
                MapParams::Periodic {
                    omegas,
                    phases,
                    waveform,
                }
            }
            FeatureFamily::Stump { box_lo, box_hi, .. } => {
                let mut g = spec.rng.derive(0).generator();
                let mut dims = Vec::with_capacity(n);
                let mut thresholds = Vec::with_capacity(n);
                for _ in 0..n {
                    let m = g.random_range(0..d);
                    dims.push(m);
                    thresholds.push(uniform_in(&mut g, box_lo[m], box_hi[m]));
                }
                MapParams::Stump { dims, thresholds }
            }
            FeatureFamily::Binning { sigma, box_lo, .. } => {
                // Gamma(shape 2, rate gamma) has scale 1/gamma = 2 sigma^2.
                let gamma = Gamma::new(2.0, 2.0 * sigma * sigma)
                    .map_err(|e| Error::InvalidParameter(e.to_string()))?;
                let mut g = spec.rng.derive(0).generator();
                let mut pitches = Array2::zeros((n, d));
                let mut offsets = Array2::zeros((n, d));
                for k in 0..n {
                    for m in 0..d {
                        let p: f64 = gamma.sample(&mut g);
                        pitches[[k, m]] = p;
                        offsets[[k, m]] = uniform_in(&mut g, 0.0, p);
                    }
                }
                MapParams::Binning(BinningGrids {
                    pitches,
                    offsets,
                    origin: box_lo.clone(),
                    tables: vec![HashMap::new(); n],
                    n_columns: 0,
                })
            }
        };
        Ok(Self {
            spec,
            dim: d,
            params,
        })
    }

    /// A Fourier-family map with explicitly supplied frequencies and phases.
    pub fn from_periodic_parts(
        spec: FeatureMapSpec,
        omegas: DenseMatrix,
        phases: Array1<f64>,
    ) -> Result<Self> {
        let d = omegas.ncols();
        spec.validate(d)?;
        if omegas.nrows() != spec.n_features {
            return Err(Error::dims("omega rows", spec.n_features, omegas.nrows()));
        }
        if phases.len() != spec.n_features {
            return Err(Error::dims("phase count", spec.n_features, phases.len()));
        }
        let waveform = match spec.family {
            FeatureFamily::Fourier { .. } => Waveform::Cosine,
            FeatureFamily::SquareWave { .. } | FeatureFamily::Walsh { .. } => Waveform::Square,
            _ => {
                return Err(Error::InvalidParameter(
                    "explicit frequencies only apply to periodic families".into(),
                ))
            }
        };
        Ok(Self {
            spec,
            dim: d,
            params: MapParams::Periodic {
                omegas,
                phases,
                waveform,
            },
        })
    }

    pub fn n_features(&self) -> usize {
        self.spec.n_features
    }

    /// Current output width: `D`, `2D` for stumps, or the number of bins
    /// allocated so far for binning.
    pub fn output_dim(&self) -> usize {
        match &self.params {
            MapParams::Periodic { .. } => self.spec.n_features,
            MapParams::Stump { .. } => 2 * self.spec.n_features,
            MapParams::Binning(g) => g.n_columns,
        }
    }

    pub fn target_kernel(&self) -> Option<KernelSpec> {
        self.spec.target_kernel()
    }

    fn check_input(&self, x: ArrayView2<'_, f64>) -> Result<()> {
        if x.ncols() != self.dim {
            return Err(Error::dims("feature map input columns", self.dim, x.ncols()));
        }
        Ok(())
    }

    /// Applies the map. For binning, bins not present in the frozen table
    /// contribute nothing.
    pub fn transform(&self, x: ArrayView2<'_, f64>) -> Result<DenseMatrix> {
        self.check_input(x)?;
        match &self.params {
            MapParams::Binning(grids) => {
                let cols = (0..x.nrows())
                    .map(|i| {
                        let row = x.row(i).to_vec();
                        (0..grids.n_grids())
                            .filter_map(|k| grids.tables[k].get(&grids.bin_of(k, &row)).copied())
                            .collect::<Vec<_>>()
                    })
                    .collect::<Vec<_>>();
                Ok(one_hot(&cols, grids.n_columns, self.spec.n_features))
            }
            _ => Ok(self.transform_fixed(x)),
        }
    }

    /// Applies the map, allocating columns for unseen bins (binning only;
    /// other families behave exactly like [`transform`](Self::transform)).
    pub fn transform_mut(&mut self, x: ArrayView2<'_, f64>) -> Result<DenseMatrix> {
        match self.bin_columns_mut(x)? {
            Some(cols) => Ok(one_hot(&cols, self.output_dim(), self.spec.n_features)),
            None => Ok(self.transform_fixed(x)),
        }
    }

    /// For binning maps, the occupied column of every grid for each row,
    /// growing the tables as needed; `None` for other families.
    pub fn bin_columns_mut(&mut self, x: ArrayView2<'_, f64>) -> Result<Option<Vec<Vec<usize>>>> {
        self.check_input(x)?;
        let MapParams::Binning(grids) = &mut self.params else {
            return Ok(None);
        };
        let mut cols = Vec::with_capacity(x.nrows());
        for i in 0..x.nrows() {
            let row = x.row(i).to_vec();
            let mut row_cols = Vec::with_capacity(grids.n_grids());
            for k in 0..grids.n_grids() {
                let key = grids.bin_of(k, &row);
                let next = grids.n_columns;
                let c = *grids.tables[k].entry(key).or_insert(next);
                if c == next {
                    grids.n_columns += 1;
                }
                row_cols.push(c);
            }
            cols.push(row_cols);
        }
        Ok(Some(cols))
    }

    /// `transform(x) . weights` without materializing binning features.
    pub fn apply_weights(&self, x: ArrayView2<'_, f64>, weights: ArrayView2<'_, f64>) -> Result<DenseMatrix> {
        self.check_input(x)?;
        if weights.nrows() != self.output_dim() {
            return Err(Error::dims("weight rows", self.output_dim(), weights.nrows()));
        }
        let MapParams::Binning(grids) = &self.params else {
            return Ok(self.transform_fixed(x).dot(&weights));
        };
        let v = 1.0 / (self.spec.n_features as f64).sqrt();
        let mut out = Array2::zeros((x.nrows(), weights.ncols()));
        for (i, mut out_row) in out.rows_mut().into_iter().enumerate() {
            let row = x.row(i).to_vec();
            for k in 0..grids.n_grids() {
                if let Some(&c) = grids.tables[k].get(&grids.bin_of(k, &row)) {
                    out_row.scaled_add(v, &weights.row(c));
                }
            }
        }
        Ok(out)
    }

    fn transform_fixed(&self, x: ArrayView2<'_, f64>) -> DenseMatrix {
        let big_d = self.spec.n_features as f64;
        match &self.params {
            MapParams::Periodic {
                omegas,
                phases,
                waveform,
            } => {
                let amp = (2.0 / big_d).sqrt();
                let mut z = x.dot(&omegas.t());
                for mut row in z.rows_mut() {
                    for (v, b) in row.iter_mut().zip(phases.iter()) {
                        let c = (*v + b).cos();
                        *v = match waveform {
                            Waveform::Cosine => amp * c,
                            Waveform::Square => amp * sign(c),
                        };
                    }
                }
                z
            }
            MapParams::Stump { dims, thresholds } => {
                let amp = 1.0 / (2.0 * big_d).sqrt();
                let mut z = Array2::zeros((x.nrows(), 2 * dims.len()));
                for (i, row) in x.rows().into_iter().enumerate() {
                    for (k, (&m, &t)) in dims.iter().zip(thresholds).enumerate() {
                        z[[i, 2 * k]] = amp;
                        z[[i, 2 * k + 1]] = amp * sign(row[m] - t);
                    }
                }
                z
            }
            MapParams::Binning(_) => unreachable!("binning handled by the callers"),
        }
    }

    /// `transform(x1) . transform(x2)^T`, evaluated without materializing the
    /// features where an exact shortcut exists. Stump and binning entries are
    /// computed from integer agreement counts, so self-similarities are
    /// exactly 1. Binning uses a table shared by both inputs, equivalent to
    /// growing the map's table over `x1` then `x2`.
    pub fn approx_gram(&self, x1: ArrayView2<'_, f64>, x2: ArrayView2<'_, f64>) -> Result<DenseMatrix> {
        self.check_input(x1)?;
        self.check_input(x2)?;
        let big_d = self.spec.n_features;
        match &self.params {
            MapParams::Periodic { .. } => {
                let z1 = self.transform_fixed(x1);
                let z2 = self.transform_fixed(x2);
                Ok(z1.dot(&z2.t()))
            }
            MapParams::Stump { dims, thresholds } => {
                let signs = |x: ArrayView2<'_, f64>| {
                    Array2::from_shape_fn((x.nrows(), big_d), |(i, k)| sign(x[[i, dims[k]]] - thresholds[k]))
                };
                let agree = signs(x1).dot(&signs(x2).t());
                let denom = 2.0 * big_d as f64;
                Ok(agree.mapv(|s| (big_d as f64 + s) / denom))
            }
            MapParams::Binning(grids) => {
                let mut counts = Array2::<u32>::zeros((x1.nrows(), x2.nrows()));
                let rows1: Vec<Vec<f64>> = x1.rows().into_iter().map(|r| r.to_vec()).collect();
                let rows2: Vec<Vec<f64>> = x2.rows().into_iter().map(|r| r.to_vec()).collect();
                for k in 0..grids.n_grids() {
                    let mut ids: HashMap<Vec<i64>, usize> = HashMap::new();
                    let mut id_of = |row: &[f64]| {
                        let next = ids.len();
                        *ids.entry(grids.bin_of(k, row)).or_insert(next)
                    };
                    let a: Vec<usize> = rows1.iter().map(|r| id_of(r)).collect();
                    let b: Vec<usize> = rows2.iter().map(|r| id_of(r)).collect();
                    for (i, &ai) in a.iter().enumerate() {
                        for (j, &bj) in b.iter().enumerate() {
                            if ai == bj {
                                counts[[i, j]] += 1;
                            }
                        }
                    }
                }
                Ok(counts.mapv(|c| c as f64 / big_d as f64))
            }
        }
    }
}

/// `sgn` with `sgn(0) = +1`.
fn sign(v: f64) -> f64 {
    if v >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Rounds a phase to the nearest multiple of `pi/2`, wrapped into `[0, 2 pi)`.
fn snap_dyadic(b: f64) -> f64 {
    let q = (b / FRAC_PI_2).round() as i64;
    q.rem_euclid(4) as f64 * FRAC_PI_2
}

pub(crate) fn one_hot(cols: &[Vec<usize>], width: usize, n_grids: usize) -> DenseMatrix {
    let v = 1.0 / (n_grids as f64).sqrt();
    let mut z = Array2::zeros((cols.len(), width));
    for (i, row) in cols.iter().enumerate() {
        for &c in row {
            z[[i, c]] = v;
        }
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn fourier(sigma: f64, n: usize, seed: u64) -> FeatureMapSpec {
        FeatureMapSpec::new(FeatureFamily::Fourier { sigma }, n, RngStream::new(seed, 0))
    }

    #[test]
    fn fourier_frequency_variance() {
        let map = fourier(2.0, 100_000, 3).sample(1).unwrap();
        let MapParams::Periodic { omegas, phases, .. } = &map.params else {
            panic!()
        };
        let n = omegas.len() as f64;
        let mean = omegas.sum() / n;
        let var = omegas.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / n;
        assert!((var - 0.25).abs() <= 0.01, "var {var}");
        assert!(phases.iter().all(|b| (0.0..TWO_PI).contains(b)));
    }

    #[test]
    fn sampling_is_deterministic() {
        let spec = FeatureMapSpec::new(
            FeatureFamily::Binning {
                sigma: 1.0,
                box_lo: vec![0.0, 0.0],
                box_hi: vec![1.0, 1.0],
            },
            50,
            RngStream::new(9, 2),
        );
        assert_eq!(spec.sample(2).unwrap(), spec.sample(2).unwrap());
        let f = fourier(1.0, 20, 1);
        assert_eq!(f.sample(3).unwrap(), f.sample(3).unwrap());
    }

    #[test]
    fn explicit_fourier_value() {
        let map = FittedFeatureMap::from_periodic_parts(fourier(1.0, 1, 0), array![[1.0]], array![0.0]).unwrap();
        let z = map.transform(array![[0.0]].view()).unwrap();
        assert!((z[[0, 0]] - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn fourier_entries_bounded() {
        let map = fourier(0.5, 64, 4).sample(3).unwrap();
        let x = crate::rng::draw_gaussian(&RngStream::new(1, 1), 30, 3, 2.0).unwrap();
        let z = map.transform(x.view()).unwrap();
        let bound = (2.0 / 64.0f64).sqrt();
        assert!(z.iter().all(|v| v.abs() <= bound + 1e-15));
    }

    #[test]
    fn walsh_phases_are_dyadic() {
        let spec = FeatureMapSpec::new(FeatureFamily::Walsh { sigma: 1.0 }, 200, RngStream::new(5, 0));
        let map = spec.sample(2).unwrap();
        let MapParams::Periodic { phases, waveform, .. } = &map.params else {
            panic!()
        };
        assert_eq!(*waveform, Waveform::Square);
        for b in phases {
            let q = b / FRAC_PI_2;
            assert!((q - q.round()).abs() < 1e-12 && *b < TWO_PI && *b >= 0.0);
        }
        assert_eq!(snap_dyadic(TWO_PI - 0.1), 0.0);
    }

    #[test]
    fn square_wave_values() {
        let spec = FeatureMapSpec::new(FeatureFamily::SquareWave { sigma: 1.0 }, 4, RngStream::new(0, 0));
        let map = FittedFeatureMap::from_periodic_parts(
            spec,
            array![[1.0], [1.0], [0.0], [0.0]],
            array![0.0, PI, FRAC_PI_2, 0.0],
        )
        .unwrap();
        let z = map.transform(array![[0.0]].view()).unwrap();
        // cos(pi/2) rounds to a tiny positive value, so sgn gives +1.
        let amp = (2.0 / 4.0f64).sqrt();
        assert_eq!(z.row(0).to_vec(), vec![amp, -amp, amp, amp]);
    }

    #[test]
    fn stump_self_similarity_is_one() {
        let spec = FeatureMapSpec::new(
            FeatureFamily::Stump {
                a: 2.0,
                box_lo: vec![-1.0, -1.0],
                box_hi: vec![1.0, 1.0],
            },
            37,
            RngStream::new(2, 0),
        );
        let map = spec.sample(2).unwrap();
        let MapParams::Stump { dims, thresholds } = &map.params else {
            panic!()
        };
        for (&m, &t) in dims.iter().zip(thresholds) {
            assert!((-1.0..1.0).contains(&t) && m < 2);
        }
        let x = array![[0.1, 0.2], [-0.5, 0.9], [0.3, -0.3]];
        let k = map.approx_gram(x.view(), x.view()).unwrap();
        assert!(k.diag().iter().all(|&v| v == 1.0));
        let z = map.transform(x.view()).unwrap();
        assert_eq!(z.ncols(), 74);
        let zz = z.dot(&z.t());
        assert!((&zz - &k).iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn binning_identical_rows_collide() {
        let spec = FeatureMapSpec::new(
            FeatureFamily::Binning {
                sigma: 0.3,
                box_lo: vec![0.0],
                box_hi: vec![1.0],
            },
            25,
            RngStream::new(8, 0),
        );
        let mut map = spec.sample(1).unwrap();
        let x = array![[0.2], [0.2], [0.9]];
        let k = map.approx_gram(x.view(), x.view()).unwrap();
        assert_eq!(k[[0, 1]], 1.0);
        assert!(k.diag().iter().all(|&v| v == 1.0));

        let z = map.transform_mut(x.view()).unwrap();
        assert!(z.rows().into_iter().all(|r| r.iter().filter(|v| **v != 0.0).count() == 25));
        let zz = z.dot(&z.t());
        assert!((&zz - &k).iter().all(|v| v.abs() < 1e-12));

        // Frozen transform keeps width and ignores unseen bins.
        let width = map.output_dim();
        let z_new = map.transform(array![[1e6]].view()).unwrap();
        assert_eq!(z_new.dim(), (1, width));
        assert!(z_new.iter().all(|v| *v == 0.0));
        assert_eq!(map.transform(x.view()).unwrap(), z);
    }

    #[test]
    fn binning_offsets_within_pitch() {
        let spec = FeatureMapSpec::new(
            FeatureFamily::Binning {
                sigma: 1.0,
                box_lo: vec![0.0; 3],
                box_hi: vec![1.0; 3],
            },
            100,
            RngStream::new(1, 7),
        );
        let MapParams::Binning(g) = spec.sample(3).unwrap().params else {
            panic!()
        };
        for (o, p) in g.offsets.iter().zip(g.pitches.iter()) {
            assert!(*p > 0.0 && *o >= 0.0 && o < p);
        }
    }

    #[test]
    fn target_kernels() {
        assert_eq!(fourier(1.5, 1, 0).target_kernel(), Some(KernelSpec::Rbf { sigma: 1.5 }));
        let sq = FeatureMapSpec::new(FeatureFamily::SquareWave { sigma: 1.0 }, 1, RngStream::new(0, 0));
        assert_eq!(sq.target_kernel(), None);
        let bin = FeatureMapSpec::new(
            FeatureFamily::Binning {
                sigma: 1.0,
                box_lo: vec![0.0],
                box_hi: vec![1.0],
            },
            1,
            RngStream::new(0, 0),
        );
        assert_eq!(bin.target_kernel(), Some(KernelSpec::Laplacian { sigma: 1.0 }));
    }

    #[test]
    fn invalid_specs() {
        assert!(fourier(1.0, 0, 0).sample(1).is_err());
        assert!(fourier(-1.0, 3, 0).sample(1).is_err());
        assert!(fourier(1.0, 3, 0).sample(0).is_err());
        let stump = FeatureMapSpec::new(
            FeatureFamily::Stump {
                a: 1.0,
                box_lo: vec![0.0],
                box_hi: vec![1.0],
            },
            3,
            RngStream::new(0, 0),
        );
        assert!(stump.sample(2).is_err());
        let map = fourier(1.0, 3, 0).sample(2).unwrap();
        assert!(map.transform(array![[1.0]].view()).is_err());
    }
}
