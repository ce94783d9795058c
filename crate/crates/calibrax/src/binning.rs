//! Equal-mass and equal-width binnings, per-bin statistics, and the binning
//! scheme space used by the Bayesian average.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BinningKind {
    EqualMass,
    EqualWidth,
}

/// A partition of a dataset's samples into bins.
///
/// `bins` holds, per bin, the original sample indices it contains. For
/// equal-mass schemes the indices follow the stable (confidence, index) sort;
/// for equal-width schemes they follow insertion order within each interval.
#[derive(Debug, Clone)]
pub struct BinningScheme {
    pub kind: BinningKind,
    pub bins: Vec<Vec<usize>>,
    dataset_len: usize,
}

impl BinningScheme {
    pub fn bin_count(&self) -> usize {
        self.bins.len()
    }

    pub fn dataset_len(&self) -> usize {
        self.dataset_len
    }
}

/// Per-bin aggregate statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinStats {
    pub mean_confidence: Real,
    pub count: usize,
    pub positives: usize,
    pub weight: Real,
}

impl BinStats {
    pub fn accuracy(&self) -> Real {
        self.positives as Real / self.count as Real
    }
}

/// Equal-mass partition: stable sort by (confidence, original index), sizes
/// floor(N/B) with the first N mod B bins one larger.
pub fn equal_mass_bins(dataset: &Dataset, bin_count: usize) -> Result<BinningScheme> {
    let n = dataset.len();
    if bin_count == 0 || bin_count > n {
        return Err(Error::InvalidBinCount {
            bins: bin_count,
            samples: n,
        });
    }
    let order = dataset.sorted_indices();
    let base = n / bin_count;
    let extra = n % bin_count;
    let mut bins = Vec::with_capacity(bin_count);
    let mut offset = 0;
    for b in 0..bin_count {
        let size = base + usize::from(b < extra);
        bins.push(order[offset..offset + size].to_vec());
        offset += size;
    }
    Ok(BinningScheme {
        kind: BinningKind::EqualMass,
        bins,
        dataset_len: n,
    })
}

/// Equal-width partition of [0,1] into `bin_count` intervals; the last
/// interval is closed at 1. Empty intervals stay as empty bins.
pub fn equal_width_bins(dataset: &Dataset, bin_count: usize) -> Result<BinningScheme> {
    let n = dataset.len();
    if bin_count == 0 || bin_count > n {
        return Err(Error::InvalidBinCount {
            bins: bin_count,
            samples: n,
        });
    }
    let mut bins = vec![Vec::new(); bin_count];
    for (i, s) in dataset.iter().enumerate() {
        let raw = (s.confidence * bin_count as Real).floor() as usize;
        bins[raw.min(bin_count - 1)].push(i);
    }
    Ok(BinningScheme {
        kind: BinningKind::EqualWidth,
        bins,
        dataset_len: n,
    })
}

/// Per-bin (mean confidence, count, positives, weight). Empty bins (possible
/// under equal-width schemes) are skipped.
pub fn bin_stats(dataset: &Dataset, scheme: &BinningScheme) -> Result<Vec<BinStats>> {
    if scheme.dataset_len != dataset.len() {
        return Err(Error::SchemeMismatch {
            scheme: scheme.dataset_len,
            dataset: dataset.len(),
        });
    }
    let n = dataset.len() as Real;
    Ok(scheme
        .bins
        .iter()
        .filter(|bin| !bin.is_empty())
        .map(|bin| {
            let count = bin.len();
            let mut conf_sum = 0.0;
            let mut positives = 0;
            for &i in bin {
                let s = dataset.samples()[i];
                conf_sum += s.confidence;
                positives += usize::from(s.hit);
            }
            BinStats {
                mean_confidence: conf_sum / count as Real,
                count,
                positives,
                weight: count as Real / n,
            }
        })
        .collect())
}

/// The set of equal-mass bin counts considered by the Bayesian average,
/// with a uniform scheme weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeSpace {
    pub counts: Vec<usize>,
    /// Set when the 20-100 samples-per-bin constraint was unsatisfiable and
    /// the single-scheme fallback was used, or when N < 40.
    pub fallback: bool,
}

impl SchemeSpace {
    pub fn scheme_weight(&self) -> Real {
        1.0 / self.counts.len() as Real
    }
}

/// Bin counts from ceil(N/100) to floor(N/20), keeping every bin between 20
/// and 100 samples. Falls back to the single count max(1, N/20) when the
/// range is empty, with a warning flag instead of a hard error.
pub fn scheme_space(n: usize) -> SchemeSpace {
    let lo = n.div_ceil(100).max(1);
    let hi = n / 20;
    if n >= 40 && lo <= hi {
        SchemeSpace {
            counts: (lo..=hi).collect(),
            fallback: false,
        }
    } else {
        SchemeSpace {
            counts: vec![(n / 20).max(1)],
            fallback: true,
        }
    }
}
