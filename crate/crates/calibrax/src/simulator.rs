//! Synthetic dataset generation from a known true distribution: draw a
//! confidence from the beta marginal, evaluate the true curve, flip a coin.

use serde::{Deserialize, Serialize};

use crate::data::{CalibrationSample, Dataset};
use crate::error::Result;
use crate::prior::TrueDistributionSpec;
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationRequest {
    pub spec: TrueDistributionSpec,
    pub n: usize,
    pub seed: u64,
}

/// Generate `n` (confidence, hit) pairs. The variate stream is fixed: one
/// beta draw then one uniform per sample, in that order, so outputs are
/// bit-reproducible for a given seed regardless of the curve. The uniform is
/// consumed even when the curve value makes the outcome certain.
pub fn simulate(request: &SimulationRequest) -> Result<Dataset> {
    let mut rng = SplitMix64::new(request.seed);
    let mut samples = Vec::with_capacity(request.n);
    for _ in 0..request.n {
        let s = request.spec.confidence.sample(&mut rng);
        let p = request.spec.curve_value(s)?;
        let u = rng.uniform_bernoulli();
        let hit = if p >= 1.0 {
            true
        } else if p <= 0.0 {
            false
        } else {
            u < p
        };
        samples.push(CalibrationSample::new(s, hit)?);
    }
    Dataset::new(samples)
}
