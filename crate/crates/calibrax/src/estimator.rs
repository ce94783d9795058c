//! Calibration-curve estimation: the Bayesian-averaged binomial-process
//! objective and its Nelder-Mead minimization over (alpha, beta, c).

use serde::{Deserialize, Serialize};

use crate::binning::{bin_stats, equal_mass_bins, scheme_space, BinningScheme};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::prior::{prior_curve, PriorCurveParams};
use crate::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    /// Equal-mass bin counts to average over; `None` derives them from the
    /// dataset size.
    pub scheme_counts: Option<Vec<usize>>,
    pub init: PriorCurveParams,
    pub max_iterations: usize,
    pub tolerance: Real,
    pub restarts: usize,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            scheme_counts: None,
            init: PriorCurveParams::identity(),
            max_iterations: 2000,
            tolerance: 1e-8,
            restarts: 2,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter("max_iterations must be >= 1".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParameter("tolerance must be > 0".into()));
        }
        if let Some(counts) = &self.scheme_counts {
            if counts.is_empty() {
                return Err(Error::InvalidParameter("scheme set must be nonempty".into()));
            }
        }
        Ok(())
    }
}

/// Per-bin cache: everything the objective needs besides the curve params.
/// ln(s) and ln(1-s) are precomputed so each objective evaluation costs one
/// exp per bin.
struct CachedBin {
    ln_s: Real,
    ln_one_minus_s: Real,
    s: Real,
    pos_fraction: Real,
    weight: Real,
}

struct CachedScheme {
    bins: Vec<CachedBin>,
}

fn cache_schemes(dataset: &Dataset, counts: &[usize]) -> Result<Vec<CachedScheme>> {
    counts
        .iter()
        .map(|&b| {
            let scheme = equal_mass_bins(dataset, b)?;
            let stats = bin_stats(dataset, &scheme)?;
            Ok(CachedScheme {
                bins: stats
                    .iter()
                    .map(|st| CachedBin {
                        ln_s: st.mean_confidence.ln(),
                        ln_one_minus_s: (1.0 - st.mean_confidence).ln(),
                        s: st.mean_confidence,
                        pos_fraction: st.accuracy(),
                        weight: st.weight,
                    })
                    .collect(),
            })
        })
        .collect()
}

fn curve_at(bin: &CachedBin, alpha: Real, beta: Real, c: Real) -> Real {
    // same endpoint limits as prior_curve, but on cached logs
    if bin.s == 0.0 || bin.s == 1.0 {
        return prior_curve(bin.s, alpha, beta, c);
    }
    1.0 / (1.0 + (c - alpha * bin.ln_s + beta * bin.ln_one_minus_s).exp())
}

/// Objective value for cached schemes; alpha and beta are clamped at zero
/// before evaluating the curve, which is how the box constraints enter the
/// unconstrained simplex search.
fn cached_objective(schemes: &[CachedScheme], theta: &[Real]) -> Real {
    let alpha = theta[0].max(0.0);
    let beta = theta[1].max(0.0);
    let c = theta[2];
    let scheme_weight = 1.0 / schemes.len() as Real;
    let mut total = 0.0;
    for scheme in schemes {
        let mut acc = 0.0;
        for bin in &scheme.bins {
            let r = curve_at(bin, alpha, beta, c) - bin.pos_fraction;
            acc += bin.weight * (r * r).exp();
        }
        total += scheme_weight * acc;
    }
    total
}

/// The Bayesian-averaged objective: sum over schemes (uniform weight) of the
/// weighted per-bin exp((g - pos/count)^2). Always in [1, e].
pub fn objective(
    dataset: &Dataset,
    schemes: &[BinningScheme],
    params: &PriorCurveParams,
) -> Result<Real> {
    if schemes.is_empty() {
        return Err(Error::InvalidParameter("empty scheme set".into()));
    }
    let scheme_weight = 1.0 / schemes.len() as Real;
    let mut total = 0.0;
    for scheme in schemes {
        let stats = bin_stats(dataset, scheme)?;
        let mut acc = 0.0;
        for st in &stats {
            let g = params.eval(st.mean_confidence)?;
            let r = g - st.accuracy();
            acc += st.weight * (r * r).exp();
        }
        total += scheme_weight * acc;
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateDiagnostics {
    pub objective: Real,
    pub iterations: usize,
    pub scheme_counts: Vec<usize>,
    pub scheme_fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveEstimate {
    pub params: PriorCurveParams,
    pub diagnostics: EstimateDiagnostics,
}

/// Fit the prior curve to a dataset (the calibration-curve estimation
/// algorithm): cache bin statistics once per scheme, then minimize the
/// objective from the configured start plus perturbed restarts.
pub fn estimate_curve(dataset: &Dataset, config: &EstimatorConfig) -> Result<CurveEstimate> {
    config.validate()?;
    let first = dataset.samples()[0];
    if dataset
        .iter()
        .all(|s| s.confidence == first.confidence && s.hit == first.hit)
    {
        return Err(Error::NoCurveInformation);
    }

    let (counts, fallback) = match &config.scheme_counts {
        Some(c) => {
            for &b in c {
                if b == 0 || b > dataset.len() {
                    return Err(Error::InvalidBinCount {
                        bins: b,
                        samples: dataset.len(),
                    });
                }
            }
            (c.clone(), false)
        }
        None => {
            let space = scheme_space(dataset.len());
            (space.counts, space.fallback)
        }
    };
    let schemes = cache_schemes(dataset, &counts)?;

    let opts = NelderMeadOptions {
        max_iterations: config.max_iterations,
        tolerance: config.tolerance,
        initial_step: 0.25,
    };
    let base = [config.init.alpha, config.init.beta, config.init.c];
    let mut best: Option<(Vec<Real>, Real, usize)> = None;
    let mut any_finite = false;
    for attempt in 0..=config.restarts {
        let mut start = base;
        if attempt > 0 {
            // perturb one coordinate per restart, cycling through them
            start[(attempt - 1) % 3] += 0.5;
        }
        match nelder_mead(|theta| cached_objective(&schemes, theta), &start, &opts) {
            Ok(r) => {
                any_finite = true;
                let better = best
                    .as_ref()
                    .map(|(_, v, _)| r.value < *v)
                    .unwrap_or(true);
                if better {
                    best = Some((r.x, r.value, r.iterations));
                }
            }
            Err(Error::NonFiniteObjective) => continue,
            Err(e) => return Err(e),
        }
    }
    if !any_finite {
        return Err(Error::NonFiniteObjective);
    }
    let (theta, value, iterations) = best.expect("at least one finite attempt");
    let params = PriorCurveParams::new(theta[0].max(0.0), theta[1].max(0.0), theta[2])?;
    Ok(CurveEstimate {
        params,
        diagnostics: EstimateDiagnostics {
            objective: value,
            iterations,
            scheme_counts: counts,
            scheme_fallback: fallback,
        },
    })
}
