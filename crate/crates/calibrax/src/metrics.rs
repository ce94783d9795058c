//! Calibration metrics: the curve-based true-calibration-error estimate,
//! exact TCE on known specs, the binned ECE family, KS-error, and the
//! grid-based curve distance EAD.

use serde::{Deserialize, Serialize};

use crate::binning::{bin_stats, equal_mass_bins, equal_width_bins, BinningKind};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::estimator::{estimate_curve, EstimatorConfig};
use crate::numeric::Scalar;
use crate::prior::{beta_moment_fit, TrueDistributionSpec};
use crate::quad::integrate;
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricConfig {
    pub bins: usize,
    pub p: u32,
    pub binning: BinningKind,
    pub quadrature_points: usize,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            bins: 15,
            p: 1,
            binning: BinningKind::EqualMass,
            quadrature_points: 20_000,
        }
    }
}

impl MetricConfig {
    pub fn validate(&self) -> Result<()> {
        if self.bins == 0 || self.p == 0 || self.quadrature_points == 0 {
            return Err(Error::InvalidParameter(
                "bins, p and quadrature points must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Curve-based TCE estimate: fit the prior curve, moment-fit a beta density
/// to the confidences, and integrate |g(s) - s|^p ξ(s) over (0,1).
pub fn tce_bpm(
    dataset: &Dataset,
    est_config: &EstimatorConfig,
    metric_config: &MetricConfig,
) -> Result<Real> {
    metric_config.validate()?;
    let est = estimate_curve(dataset, est_config)?;
    let density = beta_moment_fit(&dataset.confidences())?;
    let p = metric_config.p as i32;
    let v = integrate(
        |s| {
            let g = prior_eval_unchecked(&est.params, s);
            (g - s).abs().powi(p) * beta_density_unchecked(&density, s)
        },
        0.0,
        1.0,
        metric_config.quadrature_points,
    )?;
    Ok(v.powf(1.0 / p as Real))
}

fn prior_eval_unchecked(params: &crate::prior::PriorCurveParams, s: Real) -> Real {
    crate::prior::prior_curve(s, params.alpha, params.beta, params.c)
}

fn beta_density_unchecked(params: &crate::prior::BetaParams, s: Real) -> Real {
    crate::prior::beta_density(s, params.a1, params.a2)
}

/// Exact TCE of a known true distribution: (∫ |curve(s) - s|^p ξ(s) ds)^{1/p}.
pub fn tce_exact(spec: &TrueDistributionSpec, p: u32, quadrature_points: usize) -> Result<Real> {
    let pi = p as i32;
    let v = integrate(
        |s| {
            let c = spec.curve_value(s).unwrap_or(Real::NAN);
            (c - s).abs().powi(pi) * beta_density_unchecked(&spec.confidence, s)
        },
        0.0,
        1.0,
        quadrature_points,
    )?;
    Ok(v.powf(1.0 / p as Real))
}

fn binned_ece(stats: &[crate::binning::BinStats], p: u32) -> Real {
    let pi = p as i32;
    let sum: Real = stats
        .iter()
        .map(|b| b.weight * (b.accuracy() - b.mean_confidence).abs().powi(pi))
        .sum();
    sum.powf(1.0 / p as Real)
}

/// Binning-based expected calibration error over the configured partition.
pub fn ece_bin(dataset: &Dataset, config: &MetricConfig) -> Result<Real> {
    config.validate()?;
    if config.bins > dataset.len() {
        return Err(Error::InvalidBinCount {
            bins: config.bins,
            samples: dataset.len(),
        });
    }
    let scheme = match config.binning {
        BinningKind::EqualMass => equal_mass_bins(dataset, config.bins)?,
        BinningKind::EqualWidth => equal_width_bins(dataset, config.bins)?,
    };
    Ok(binned_ece(&bin_stats(dataset, &scheme)?, config.p))
}

/// Debiased squared-error ECE: subtracts the jackknife within-bin variance
/// acc(1-acc)/(n-1) from each squared residual, floors the total at zero and
/// takes the square root.
pub fn ece_debiased(dataset: &Dataset, config: &MetricConfig) -> Result<Real> {
    config.validate()?;
    if config.bins > dataset.len() {
        return Err(Error::InvalidBinCount {
            bins: config.bins,
            samples: dataset.len(),
        });
    }
    let scheme = match config.binning {
        BinningKind::EqualMass => equal_mass_bins(dataset, config.bins)?,
        BinningKind::EqualWidth => equal_width_bins(dataset, config.bins)?,
    };
    let stats = bin_stats(dataset, &scheme)?;
    let mut total = 0.0;
    for b in &stats {
        if b.count < 2 {
            return Err(Error::InsufficientData(
                "debiased ECE needs every bin to hold at least 2 samples".into(),
            ));
        }
        let acc = b.accuracy();
        let r = acc - b.mean_confidence;
        total += b.weight * (r * r - acc * (1.0 - acc) / (b.count as Real - 1.0));
    }
    Ok(total.max(0.0).sqrt())
}

fn accuracies_monotone(stats: &[crate::binning::BinStats]) -> bool {
    stats.windows(2).all(|w| w[1].accuracy() >= w[0].accuracy())
}

/// Monotone-sweep ECE: equal-mass ECE at the largest bin count (swept upward
/// from 1) whose per-bin accuracies are still non-decreasing.
pub fn ece_sweep(dataset: &Dataset, p: u32) -> Result<Real> {
    if p == 0 {
        return Err(Error::InvalidParameter("p must be >= 1".into()));
    }
    let mut best_stats = bin_stats(dataset, &equal_mass_bins(dataset, 1)?)?;
    for b in 2..=dataset.len() {
        let stats = bin_stats(dataset, &equal_mass_bins(dataset, b)?)?;
        if accuracies_monotone(&stats) {
            best_stats = stats;
        } else {
            break;
        }
    }
    Ok(binned_ece(&best_stats, p))
}

/// Kolmogorov-Smirnov style calibration error: max absolute prefix mean of
/// (h_i - s_i) over samples sorted by confidence.
pub fn ks_error(dataset: &Dataset) -> Result<Real> {
    let order = dataset.sorted_indices();
    let n = dataset.len() as Real;
    let mut acc = 0.0;
    let mut max = 0.0f64;
    for &i in &order {
        let s = dataset.samples()[i];
        acc += s.hit_value() - s.confidence;
        max = max.max((acc / n).abs());
    }
    Ok(max)
}

/// Mean absolute difference of two curves on the uniform 1001-point grid,
/// with the literal 1/1000 normalization.
pub fn ead<F, A, B>(curve_a: A, curve_b: B) -> Result<F>
where
    F: Scalar,
    A: Fn(F) -> F,
    B: Fn(F) -> F,
{
    let grid = F::c(1000.0);
    let mut sum = F::zero();
    for i in 0..=1000usize {
        let s = F::from_usize(i).unwrap() / grid;
        let d = (curve_a(s) - curve_b(s)).abs();
        if !d.is_finite() {
            return Err(Error::NonFinite(format!("curve difference at grid point {i}")));
        }
        sum = sum + d;
    }
    Ok(sum / grid)
}

/// EAD between an estimated prior curve and a known true curve.
pub fn ead_to_spec(params: &crate::prior::PriorCurveParams, spec: &TrueDistributionSpec) -> Result<Real> {
    ead(
        |s| prior_eval_unchecked(params, s),
        |s| spec.curve_value(s).unwrap_or(Real::NAN),
    )
}
