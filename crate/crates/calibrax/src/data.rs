//! Canonical calibration datasets: (confidence, hit) pairs, logit ingestion,
//! CSV/JSONL interchange and seeded splitting.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::Real;

/// Slack for confidences that drift just outside [0,1] from upstream float
/// error. Larger violations are rejected.
const CLAMP_TOLERANCE: Real = 1e-12;

/// One observation (s_hat, h).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSample {
    pub confidence: Real,
    pub hit: bool,
}

impl CalibrationSample {
    pub fn new(confidence: Real, hit: bool) -> Result<Self> {
        let confidence = clamp_confidence(confidence, 0)?;
        Ok(CalibrationSample { confidence, hit })
    }

    pub fn hit_value(&self) -> Real {
        if self.hit {
            1.0
        } else {
            0.0
        }
    }
}

fn clamp_confidence(value: Real, line: usize) -> Result<Real> {
    if !value.is_finite() || value < -CLAMP_TOLERANCE || value > 1.0 + CLAMP_TOLERANCE {
        return Err(Error::ConfidenceOutOfRange { value, line });
    }
    Ok(value.clamp(0.0, 1.0))
}

/// Immutable ordered collection of calibration samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    samples: Vec<CalibrationSample>,
}

impl Dataset {
    pub fn new(samples: Vec<CalibrationSample>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Ok(Dataset { samples })
    }

    pub fn from_pairs(pairs: &[(Real, u8)]) -> Result<Self> {
        let samples = pairs
            .iter()
            .map(|&(c, h)| CalibrationSample::new(c, h != 0))
            .collect::<Result<Vec<_>>>()?;
        Dataset::new(samples)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[CalibrationSample] {
        &self.samples
    }

    pub fn iter(&self) -> impl Iterator<Item = &CalibrationSample> {
        self.samples.iter()
    }

    pub fn confidences(&self) -> Vec<Real> {
        self.samples.iter().map(|s| s.confidence).collect()
    }

    pub fn hit_rate(&self) -> Real {
        self.samples.iter().map(|s| s.hit_value()).sum::<Real>() / self.len() as Real
    }

    pub fn mean_confidence(&self) -> Real {
        self.samples.iter().map(|s| s.confidence).sum::<Real>() / self.len() as Real
    }

    /// Indices sorted stably by (confidence, original index).
    pub fn sorted_indices(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&a, &b| {
            self.samples[a]
                .confidence
                .partial_cmp(&self.samples[b].confidence)
                .expect("confidences are finite")
                .then(a.cmp(&b))
        });
        idx
    }
}

/// Raw classifier output record: a logit vector plus the true label.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogitRecord {
    pub logits: Vec<Real>,
    pub label: usize,
}

impl LogitRecord {
    pub fn validate(&self) -> Result<()> {
        if self.logits.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "logit record needs at least 2 classes, got {}",
                self.logits.len()
            )));
        }
        if self.logits.iter().any(|l| !l.is_finite()) {
            return Err(Error::NonFinite("reading logits".into()));
        }
        if self.label >= self.logits.len() {
            return Err(Error::InvalidParameter(format!(
                "label {} out of range for {} classes",
                self.label,
                self.logits.len()
            )));
        }
        Ok(())
    }

    /// Argmax with lowest-index tie-break.
    pub fn predicted_class(&self) -> usize {
        let mut best = 0;
        for (i, &l) in self.logits.iter().enumerate().skip(1) {
            if l > self.logits[best] {
                best = i;
            }
        }
        best
    }

    /// Max softmax probability, computed with max-subtraction.
    pub fn max_softmax(&self) -> Real {
        let m = self.logits.iter().cloned().fold(Real::NEG_INFINITY, Real::max);
        let sum: Real = self.logits.iter().map(|&l| (l - m).exp()).sum();
        1.0 / sum * (self.logits[self.predicted_class()] - m).exp()
    }
}

/// Convert logit records to (confidence, hit) pairs.
pub fn ingest_logits(records: &[LogitRecord]) -> Result<Dataset> {
    if records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let samples = records
        .iter()
        .map(|r| {
            r.validate()?;
            let pred = r.predicted_class();
            CalibrationSample::new(r.max_softmax(), pred == r.label)
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(samples)
}

/// Read logit records from a JSON-lines file (`{"logits": [...], "label": k}`).
pub fn load_logits(path: &Path) -> Result<Vec<LogitRecord>> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let reader = BufReader::new(file);
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: LogitRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        records.push(record);
    }
    Ok(records)
}

/// Load a `confidence,hit` CSV.
pub fn load_pairs(path: &Path) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(BufReader::new(file));
    {
        let headers = reader.headers().map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })?;
        if headers.len() != 2 || &headers[0] != "confidence" || &headers[1] != "hit" {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected header `confidence,hit`, got `{}`", headers.iter().collect::<Vec<_>>().join(",")),
            });
        }
    }
    let mut samples = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let line = i + 2; // header is line 1
        let row = row.map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        if row.len() != 2 {
            return Err(Error::Parse {
                line,
                message: format!("expected 2 fields, got {}", row.len()),
            });
        }
        let confidence: Real = row[0].trim().parse().map_err(|_| Error::Parse {
            line,
            message: format!("bad confidence `{}`", &row[0]),
        })?;
        let confidence = clamp_confidence(confidence, line)?;
        let hit = match row[1].trim() {
            "0" => false,
            "1" => true,
            other => {
                return Err(Error::Parse {
                    line,
                    message: format!("hit must be 0 or 1, got `{other}`"),
                })
            }
        };
        samples.push(CalibrationSample { confidence, hit });
    }
    Dataset::new(samples)
}

/// Serialize a dataset as `confidence,hit` CSV text.
///
/// Confidences use the shortest decimal representation that round-trips the
/// exact f64 value, so save/load is lossless byte-for-byte.
pub fn pairs_to_csv(dataset: &Dataset) -> String {
    let mut out = String::from("confidence,hit\n");
    for s in dataset.iter() {
        out.push_str(&format!("{},{}\n", s.confidence, if s.hit { 1 } else { 0 }));
    }
    out
}

pub fn save_pairs(dataset: &Dataset, path: &Path) -> Result<()> {
    let mut file = std::fs::File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    file.write_all(pairs_to_csv(dataset).as_bytes())
        .map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
}

/// Deterministic seeded shuffle-and-split. The first part gets
/// `round(fraction * N)` samples.
pub fn split(dataset: &Dataset, fraction: Real, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(0.0..1.0).contains(&fraction) || fraction <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "split fraction must be in (0,1), got {fraction}"
        )));
    }
    let n = dataset.len();
    if n < 2 {
        return Err(Error::InvalidParameter(
            "split needs at least 2 samples".into(),
        ));
    }
    let first = (fraction * n as Real).round() as usize;
    if first == 0 || first == n {
        return Err(Error::InvalidParameter(format!(
            "fraction {fraction} leaves an empty part for {n} samples"
        )));
    }
    let mut rng = SplitMix64::new(seed);
    let perm = rng.permutation(n);
    let take = |ids: &[usize]| -> Dataset {
        Dataset {
            samples: ids.iter().map(|&i| dataset.samples[i]).collect(),
        }
    };
    Ok((take(&perm[..first]), take(&perm[first..])))
}
