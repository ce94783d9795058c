//! Post-hoc calibration maps: the fitted prior curve used as a map (TPM),
//! histogram binning, temperature scaling, Platt scaling and isotonic
//! regression.

use serde::{Deserialize, Serialize};

use crate::binning::{bin_stats, equal_mass_bins};
use crate::data::{CalibrationSample, Dataset, LogitRecord};
use crate::error::{Error, Result};
use crate::estimator::{estimate_curve, EstimatorConfig};
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::prior::PriorCurveParams;
use crate::Real;

const PLATT_CLAMP: Real = 1e-12;
const TEMPERATURE_CAP: Real = 1e3;
const L2_PENALTY: Real = 1e-6;

/// A fitted calibration map. `tpm`, `histogram`, `platt` and `isotonic`
/// transform confidences; `temperature` rescales logit records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CalibrationMap {
    Tpm {
        params: PriorCurveParams,
    },
    Histogram {
        /// Upper confidence edge of each bin but the last (half-open cells);
        /// confidences above the final edge fall into the last bin.
        edges: Vec<Real>,
        values: Vec<Real>,
    },
    Temperature {
        t: Real,
        /// Set when the likelihood kept improving toward unbounded T and the
        /// fit was capped.
        diverged: bool,
    },
    Platt {
        w: Real,
        b: Real,
    },
    Isotonic {
        /// Training confidences (sorted, unique) with fitted values; applied
        /// as the right-continuous step through these points.
        xs: Vec<Real>,
        values: Vec<Real>,
    },
}

impl CalibrationMap {
    pub fn kind(&self) -> &'static str {
        match self {
            CalibrationMap::Tpm { .. } => "tpm",
            CalibrationMap::Histogram { .. } => "histogram",
            CalibrationMap::Temperature { .. } => "temperature",
            CalibrationMap::Platt { .. } => "platt",
            CalibrationMap::Isotonic { .. } => "isotonic",
        }
    }

    /// Mapped confidence for a scalar input; errors for temperature maps,
    /// which need full logit vectors.
    pub fn eval(&self, s: Real) -> Result<Real> {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::InvalidParameter(format!(
                "confidence {s} outside [0,1]"
            )));
        }
        match self {
            CalibrationMap::Tpm { params } => params.eval(s),
            CalibrationMap::Histogram { edges, values } => {
                let i = edges.iter().position(|&e| s < e).unwrap_or(values.len() - 1);
                Ok(values[i])
            }
            CalibrationMap::Platt { w, b } => {
                let z = logit(s.clamp(PLATT_CLAMP, 1.0 - PLATT_CLAMP));
                Ok(sigmoid(w * z + b))
            }
            CalibrationMap::Isotonic { xs, values } => {
                // last training point at or below s; below the range, nearest
                let i = match xs.binary_search_by(|x| x.partial_cmp(&s).unwrap()) {
                    Ok(i) => i,
                    Err(0) => 0,
                    Err(i) => i - 1,
                };
                Ok(values[i])
            }
            CalibrationMap::Temperature { .. } => Err(Error::IncompatibleMap {
                kind: "temperature".into(),
                input: "scalar confidence".into(),
            }),
        }
    }
}

fn logit(s: Real) -> Real {
    (s / (1.0 - s)).ln()
}

fn sigmoid(x: Real) -> Real {
    1.0 / (1.0 + (-x).exp())
}

/// Fit the prior curve and use it as a calibration map.
pub fn fit_tpm(dataset: &Dataset, config: &EstimatorConfig) -> Result<CalibrationMap> {
    let est = estimate_curve(dataset, config)?;
    Ok(CalibrationMap::Tpm { params: est.params })
}

/// Histogram binning: equal-mass bins, each mapped to its empirical accuracy.
pub fn fit_histogram_binning(dataset: &Dataset, bins: usize) -> Result<CalibrationMap> {
    let scheme = equal_mass_bins(dataset, bins)?;
    let stats = bin_stats(dataset, &scheme)?;
    let order = dataset.sorted_indices();
    // cell edges at the midpoint between adjacent bins' extreme confidences
    let mut edges = Vec::with_capacity(stats.len().saturating_sub(1));
    let mut offset = 0;
    for bin in scheme.bins.iter().filter(|b| !b.is_empty()) {
        offset += bin.len();
        if offset < order.len() {
            let last = dataset.samples()[order[offset - 1]].confidence;
            let next = dataset.samples()[order[offset]].confidence;
            edges.push(0.5 * (last + next));
        }
    }
    Ok(CalibrationMap::Histogram {
        edges,
        values: stats.iter().map(|b| b.accuracy()).collect(),
    })
}

fn mean_nll_temperature(records: &[LogitRecord], t: Real) -> Real {
    let mut total = 0.0;
    for r in records {
        let m = r.logits.iter().cloned().fold(Real::NEG_INFINITY, Real::max);
        let sum: Real = r.logits.iter().map(|&l| ((l - m) / t).exp()).sum();
        total += sum.ln() - (r.logits[r.label] - m) / t;
    }
    total / records.len() as Real
}

/// Temperature scaling: T > 0 minimizing the softmax NLL, searched over ln T.
pub fn fit_temperature(records: &[LogitRecord]) -> Result<CalibrationMap> {
    if records.len() < 2 {
        return Err(Error::InsufficientData(
            "temperature scaling needs at least 2 records".into(),
        ));
    }
    for r in records {
        r.validate()?;
    }
    let first = records[0].label;
    if records.iter().all(|r| r.label == first) {
        return Err(Error::SingleClassData);
    }
    let r = nelder_mead(
        |x: &[Real]| mean_nll_temperature(records, x[0].exp()),
        &[0.0],
        &NelderMeadOptions {
            max_iterations: 500,
            tolerance: 1e-10,
            initial_step: 0.25,
        },
    )?;
    let t = r.x[0].exp();
    if t > TEMPERATURE_CAP {
        return Ok(CalibrationMap::Temperature {
            t: TEMPERATURE_CAP,
            diverged: true,
        });
    }
    Ok(CalibrationMap::Temperature { t, diverged: false })
}

/// Platt scaling on logit(confidence): sigma(w z + b) fitted by penalized NLL.
pub fn fit_platt(dataset: &Dataset) -> Result<CalibrationMap> {
    let hits = dataset.iter().filter(|s| s.hit).count();
    if hits == 0 || hits == dataset.len() {
        return Err(Error::SingleClassData);
    }
    let zs: Vec<(Real, Real)> = dataset
        .iter()
        .map(|s| {
            (
                logit(s.confidence.clamp(PLATT_CLAMP, 1.0 - PLATT_CLAMP)),
                s.hit_value(),
            )
        })
        .collect();
    let n = zs.len() as Real;
    let nll = |x: &[Real]| -> Real {
        let (w, b) = (x[0], x[1]);
        let mut total = 0.0;
        for &(z, h) in &zs {
            let u = w * z + b;
            // -[h ln sigma(u) + (1-h) ln(1-sigma(u))] = ln(1+e^u) - h u, stably
            total += u.max(0.0) + (-u.abs()).exp().ln_1p() - h * u;
        }
        total / n + L2_PENALTY * (w * w + b * b)
    };
    let r = nelder_mead(
        nll,
        &[1.0, 0.0],
        &NelderMeadOptions {
            max_iterations: 1000,
            tolerance: 1e-10,
            initial_step: 0.25,
        },
    )?;
    Ok(CalibrationMap::Platt { w: r.x[0], b: r.x[1] })
}

/// Isotonic regression by pool-adjacent-violators over samples sorted by
/// confidence, with equal confidences pooled up front.
pub fn fit_isotonic(dataset: &Dataset) -> Result<CalibrationMap> {
    let order = dataset.sorted_indices();
    // pre-pool ties so equal confidences share one block
    let mut xs: Vec<Real> = Vec::new();
    let mut sums: Vec<Real> = Vec::new();
    let mut weights: Vec<Real> = Vec::new();
    for &i in &order {
        let s = dataset.samples()[i];
        if xs.last() == Some(&s.confidence) {
            *sums.last_mut().unwrap() += s.hit_value();
            *weights.last_mut().unwrap() += 1.0;
        } else {
            xs.push(s.confidence);
            sums.push(s.hit_value());
            weights.push(1.0);
        }
    }
    // PAVA over (value, weight, span) blocks
    let mut blocks: Vec<(Real, Real, usize)> = Vec::with_capacity(xs.len());
    for (i, &s) in sums.iter().enumerate() {
        blocks.push((s / weights[i], weights[i], 1));
        while blocks.len() >= 2 {
            let (v2, w2, c2) = blocks[blocks.len() - 1];
            let (v1, w1, c1) = blocks[blocks.len() - 2];
            if v2 >= v1 {
                break;
            }
            blocks.pop();
            blocks.pop();
            blocks.push(((v1 * w1 + v2 * w2) / (w1 + w2), w1 + w2, c1 + c2));
        }
    }
    let mut values = Vec::with_capacity(xs.len());
    for &(v, _, span) in &blocks {
        values.extend(std::iter::repeat(v).take(span));
    }
    Ok(CalibrationMap::Isotonic { xs, values })
}

/// Input for [`apply_map`]: either confidence pairs or raw logit records.
#[derive(Debug, Clone, Copy)]
pub enum MapInput<'a> {
    Pairs(&'a Dataset),
    Logits(&'a [LogitRecord]),
}

/// Apply a fitted map, producing a dataset with remapped confidences and the
/// original hits. Temperature maps take logits; every other kind takes pairs.
pub fn apply_map(map: &CalibrationMap, input: MapInput<'_>) -> Result<Dataset> {
    match (map, input) {
        (CalibrationMap::Temperature { t, .. }, MapInput::Logits(records)) => {
            let scaled: Vec<LogitRecord> = records
                .iter()
                .map(|r| LogitRecord {
                    logits: r.logits.iter().map(|&l| l / t).collect(),
                    label: r.label,
                })
                .collect();
            crate::data::ingest_logits(&scaled)
        }
        (CalibrationMap::Temperature { .. }, MapInput::Pairs(_)) => Err(Error::IncompatibleMap {
            kind: "temperature".into(),
            input: "confidence pairs".into(),
        }),
        (_, MapInput::Logits(_)) => Err(Error::IncompatibleMap {
            kind: map.kind().into(),
            input: "logit records".into(),
        }),
        (_, MapInput::Pairs(dataset)) => {
            let samples = dataset
                .iter()
                .map(|s| CalibrationSample::new(map.eval(s.confidence)?.clamp(0.0, 1.0), s.hit))
                .collect::<Result<Vec<_>>>()?;
            Dataset::new(samples)
        }
    }
}
