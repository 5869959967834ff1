//! Kernel approximation report: Gram deviation of random feature maps from
//! their exact target kernel as the feature count grows.

use std::fmt::Write as _;
use std::time::Instant;

use ndarray::Array2;
use rks_core::rng::{draw_gaussian, draw_uniform};
use rks_core::{DenseMatrix, FeatureMapSpec, RngStream};

use crate::config::FamilyArg;
use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ApproxConfig {
    pub family: FamilyArg,
    /// `sigma`, or `a` for stumps.
    pub param: f64,
    pub n_points: usize,
    pub d: usize,
    pub feature_counts: Vec<usize>,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApproxRow {
    /// Family name, or `exact` for the control row.
    pub family: String,
    pub features: Option<usize>,
    pub seed: u64,
    pub mae: f64,
    pub max_err: f64,
    pub seconds: f64,
}

/// Points the family's target kernel is defined on: standard Gaussian, or
/// uniform over the stump box.
pub fn sample_points(cfg: &ApproxConfig, seed: u64) -> Result<DenseMatrix> {
    let rng = RngStream::new(seed, 0);
    let (n, d) = (cfg.n_points, cfg.d);
    Ok(match cfg.family {
        FamilyArg::Stump => {
            let half = cfg.param / (2.0 * d as f64);
            let v = draw_uniform(&rng, n * d, -half, half)?;
            Array2::from_shape_vec((n, d), v).expect("n*d values")
        }
        _ => draw_gaussian(&rng, n, d, 1.0)?,
    })
}

fn deviation(a: &DenseMatrix, b: &DenseMatrix) -> (f64, f64) {
    let n = a.len().max(1) as f64;
    let (sum, max) = a
        .iter()
        .zip(b.iter())
        .fold((0.0, 0.0f64), |(s, m), (x, y)| ((s + (x - y).abs()), m.max((x - y).abs())));
    (sum / n, max)
}

/// One control row per seed, then one row per (seed, D).
pub fn approx_rows(cfg: &ApproxConfig) -> Result<Vec<ApproxRow>> {
    if cfg.n_points == 0 || cfg.d == 0 {
        return Err(CliError::Usage("approx-report needs n >= 1 points and d >= 1".into()));
    }
    if cfg.feature_counts.is_empty() || cfg.seeds.is_empty() {
        return Err(CliError::Usage("approx-report needs feature counts and at least one seed".into()));
    }
    let family = cfg.family.kind().family(cfg.param, cfg.d);
    let probe = FeatureMapSpec::new(family.clone(), 1, RngStream::new(0, 0));
    probe.validate(cfg.d)?;
    let kernel = probe.target_kernel().ok_or_else(|| {
        CliError::Usage(format!(
            "{} features have no closed-form target kernel; square-wave and Walsh maps can only be \
             compared empirically (e.g. with `cv` or `benchmark`)",
            cfg.family.label()
        ))
    })?;
    let mut rows = Vec::new();
    for &seed in &cfg.seeds {
        let x = sample_points(cfg, seed)?;
        let exact = kernel.gram(x.view(), x.view())?;
        let start = Instant::now();
        let again = kernel.gram(x.view(), x.view())?;
        let (mae, max_err) = deviation(&again, &exact);
        rows.push(ApproxRow {
            family: "exact".into(),
            features: None,
            seed,
            mae,
            max_err,
            seconds: start.elapsed().as_secs_f64(),
        });
        for &features in &cfg.feature_counts {
            let spec = FeatureMapSpec::new(family.clone(), features, RngStream::new(seed, 1).derive(features as u64));
            let start = Instant::now();
            let map = spec.sample(cfg.d)?;
            let approx = map.approx_gram(x.view(), x.view())?;
            let seconds = start.elapsed().as_secs_f64();
            let (mae, max_err) = deviation(&approx, &exact);
            rows.push(ApproxRow {
                family: cfg.family.label().into(),
                features: Some(features),
                seed,
                mae,
                max_err,
                seconds,
            });
        }
    }
    Ok(rows)
}

pub fn rows_to_csv(rows: &[ApproxRow]) -> String {
    let mut out = String::from("family,D,seed,mae,max_err,seconds\n");
    for r in rows {
        let d = r.features.map_or(String::new(), |d| d.to_string());
        let _ = writeln!(out, "{},{d},{},{},{},{}", r.family, r.seed, r.mae, r.max_err, r.seconds);
    }
    out
}

pub fn rows_to_text(rows: &[ApproxRow]) -> String {
    let mut out = format!("{:<10} {:>8} {:>6} {:>12} {:>12} {:>10}\n", "family", "D", "seed", "mae", "max_err", "seconds");
    for r in rows {
        let d = r.features.map_or("-".to_string(), |d| d.to_string());
        let _ = writeln!(
            out,
            "{:<10} {d:>8} {:>6} {:>12.6e} {:>12.6e} {:>10.4}",
            r.family, r.seed, r.mae, r.max_err, r.seconds
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(family: FamilyArg, param: f64) -> ApproxConfig {
        ApproxConfig {
            family,
            param,
            n_points: 30,
            d: 2,
            feature_counts: vec![1, 5, 1000],
            seeds: vec![0, 1],
        }
    }

    #[test]
    fn control_rows_are_exact() {
        let rows = approx_rows(&config(FamilyArg::Fourier, 1.0)).unwrap();
        assert_eq!(rows.len(), 2 * 4);
        for r in rows.iter().filter(|r| r.family == "exact") {
            assert_eq!((r.mae, r.max_err), (0.0, 0.0));
        }
    }

    #[test]
    fn error_shrinks_with_more_features() {
        for (family, param) in [(FamilyArg::Fourier, 1.0), (FamilyArg::Stump, 4.0), (FamilyArg::Binning, 1.0)] {
            let rows = approx_rows(&config(family, param)).unwrap();
            for seed_rows in rows.chunks(4) {
                assert!(seed_rows[3].mae < seed_rows[1].mae, "{family:?} {seed_rows:?}");
                assert!(seed_rows[3].mae < 0.06, "{family:?} {}", seed_rows[3].mae);
            }
        }
    }

    #[test]
    fn families_without_target_kernel_are_refused() {
        for family in [FamilyArg::Squarewave, FamilyArg::Walsh] {
            let err = approx_rows(&config(family, 1.0)).unwrap_err();
            assert_eq!(err.exit_code(), 2);
            assert!(err.to_string().contains("Walsh"));
        }
    }

    #[test]
    fn csv_layout() {
        let rows = approx_rows(&config(FamilyArg::Fourier, 1.0)).unwrap();
        let csv = rows_to_csv(&rows);
        assert!(csv.starts_with("family,D,seed,mae,max_err,seconds\nexact,,0,0,0,"));
        assert_eq!(csv.lines().count(), 9);
    }
}
