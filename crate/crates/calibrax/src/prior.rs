//! The three-parameter prior curve family g(s; alpha, beta, c), beta
//! distributions for confidence scores, and the GLM-style true calibration
//! curves used by the simulator and benchmark.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{ln_beta, Scalar};
use crate::rng::SplitMix64;
use crate::Real;

/// g(s) = 1 / (1 + s^{-alpha} (1-s)^{beta} e^{c}), non-decreasing on [0,1]
/// whenever alpha, beta >= 0. Endpoints are defined by limits.
pub fn prior_curve<F: Scalar>(s: F, alpha: F, beta: F, c: F) -> F {
    let zero = F::zero();
    let one = F::one();
    if s == zero && alpha > zero {
        return zero;
    }
    if s == one && beta > zero {
        return one;
    }
    // exponent form: 1 / (1 + exp(c - alpha ln s + beta ln(1-s)))
    let mut t = c;
    if alpha > zero {
        t = t - alpha * s.ln();
    }
    if beta > zero {
        t = t + beta * (one - s).ln();
    }
    one / (one + t.exp())
}

/// Parameters (alpha, beta, c) of the prior curve family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorCurveParams {
    pub alpha: Real,
    pub beta: Real,
    pub c: Real,
}

impl PriorCurveParams {
    pub fn new(alpha: Real, beta: Real, c: Real) -> Result<Self> {
        if !(alpha.is_finite() && beta.is_finite() && c.is_finite()) || alpha < 0.0 || beta < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "prior curve needs alpha, beta >= 0 and finite c, got ({alpha}, {beta}, {c})"
            )));
        }
        Ok(PriorCurveParams { alpha, beta, c })
    }

    /// The identity curve g(s) = s.
    pub fn identity() -> Self {
        PriorCurveParams {
            alpha: 1.0,
            beta: 1.0,
            c: 0.0,
        }
    }

    pub fn eval(&self, s: Real) -> Result<Real> {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::InvalidParameter(format!(
                "curve argument {s} outside [0,1]"
            )));
        }
        Ok(prior_curve(s, self.alpha, self.beta, self.c))
    }
}

/// Beta distribution parameters (a1, a2) for the confidence density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaParams {
    pub a1: Real,
    pub a2: Real,
}

impl BetaParams {
    pub fn new(a1: Real, a2: Real) -> Result<Self> {
        if !(a1.is_finite() && a2.is_finite()) || a1 <= 0.0 || a2 <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "beta parameters must be positive and finite, got ({a1}, {a2})"
            )));
        }
        Ok(BetaParams { a1, a2 })
    }

    /// Density at s in the open interval (0,1), via log-gamma.
    pub fn pdf(&self, s: Real) -> Result<Real> {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "beta pdf argument {s} outside open (0,1)"
            )));
        }
        Ok(beta_density(s, self.a1, self.a2))
    }

    pub fn mean(&self) -> Real {
        self.a1 / (self.a1 + self.a2)
    }

    pub fn variance(&self) -> Real {
        let t = self.a1 + self.a2;
        self.a1 * self.a2 / (t * t * (t + 1.0))
    }

    /// One variate from the dedicated generator (gamma-ratio construction).
    pub fn sample(&self, rng: &mut SplitMix64) -> Real {
        rng.beta(self.a1, self.a2)
    }
}

/// Beta density for s strictly inside (0,1); generic over the scalar type.
pub fn beta_density<F: Scalar>(s: F, a1: F, a2: F) -> F {
    let one = F::one();
    ((a1 - one) * s.ln() + (a2 - one) * (one - s).ln() - ln_beta(a1, a2)).exp()
}

/// Moment fit of a beta distribution to confidences, with divide-by-N
/// (population) variance.
pub fn beta_moment_fit(confidences: &[Real]) -> Result<BetaParams> {
    if confidences.len() < 2 {
        return Err(Error::DegenerateMomentFit(format!(
            "need at least 2 values, got {}",
            confidences.len()
        )));
    }
    let n = confidences.len() as Real;
    let m = confidences.iter().sum::<Real>() / n;
    let v = confidences.iter().map(|&c| (c - m) * (c - m)).sum::<Real>() / n;
    // rounding can leave a nonzero variance of order eps^2 on constant input
    if v <= Real::EPSILON * m.abs().max(1.0 - m) {
        return Err(Error::DegenerateMomentFit("zero variance".into()));
    }
    if m <= 0.0 || m >= 1.0 {
        return Err(Error::DegenerateMomentFit(format!("mean {m} not in (0,1)")));
    }
    let a1 = m * m * (1.0 - m) / v - m;
    let a2 = a1 * (1.0 - m) / m;
    if a1 <= 0.0 || a2 <= 0.0 || !a1.is_finite() || !a2.is_finite() {
        return Err(Error::DegenerateMomentFit(format!(
            "fitted parameters ({a1}, {a2}) not positive"
        )));
    }
    BetaParams::new(a1, a2)
}

/// Link functions used by the benchmark true curves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkFn {
    Logit,
    Log,
    /// log(1 - x)
    Logflip,
}

impl LinkFn {
    /// Forward link; endpoints map to the appropriate infinite limits.
    pub fn forward(self, s: Real) -> Real {
        match self {
            LinkFn::Logit => {
                if s == 0.0 {
                    Real::NEG_INFINITY
                } else if s == 1.0 {
                    Real::INFINITY
                } else {
                    (s / (1.0 - s)).ln()
                }
            }
            LinkFn::Log => {
                if s == 0.0 {
                    Real::NEG_INFINITY
                } else {
                    s.ln()
                }
            }
            LinkFn::Logflip => {
                if s == 1.0 {
                    Real::NEG_INFINITY
                } else {
                    (1.0 - s).ln()
                }
            }
        }
    }

    /// Inverse link; infinite arguments take the limiting value.
    pub fn inverse(self, x: Real) -> Real {
        match self {
            LinkFn::Logit => {
                if x == Real::NEG_INFINITY {
                    0.0
                } else if x == Real::INFINITY {
                    1.0
                } else {
                    1.0 / (1.0 + (-x).exp())
                }
            }
            LinkFn::Log => x.exp(),
            LinkFn::Logflip => 1.0 - x.exp(),
        }
    }
}

/// A known true calibration curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CurveSpec {
    Glm {
        inverse_link: LinkFn,
        intercept: Real,
        slope: Real,
        predictor_link: LinkFn,
    },
    /// Constant curve; a testing aid, not one of the built-ins.
    Constant { value: Real },
}

impl CurveSpec {
    fn raw_value(&self, s: Real) -> Real {
        match *self {
            CurveSpec::Constant { value } => value,
            CurveSpec::Glm {
                inverse_link,
                intercept,
                slope,
                predictor_link,
            } => {
                let link = predictor_link.forward(s);
                let term = if slope == 0.0 && link.is_infinite() {
                    0.0
                } else {
                    slope * link
                };
                inverse_link.inverse(intercept + term)
            }
        }
    }
}

/// A true calibration distribution: curve plus beta confidence distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrueDistributionSpec {
    pub curve: CurveSpec,
    pub confidence: BetaParams,
}

const GRID_CLIP: Real = 1e-12;

impl TrueDistributionSpec {
    /// Validates that the curve maps [0,1] into [0,1] on a 1001-point grid.
    pub fn new(curve: CurveSpec, confidence: BetaParams) -> Result<Self> {
        let spec = TrueDistributionSpec { curve, confidence };
        for i in 0..=1000 {
            let s = i as Real / 1000.0;
            let v = curve.raw_value(s);
            if !v.is_finite() || v < -GRID_CLIP || v > 1.0 + GRID_CLIP {
                return Err(Error::InvalidParameter(format!(
                    "curve leaves [0,1] at s={s}: {v}"
                )));
            }
        }
        Ok(spec)
    }

    /// Curve value with limit handling at the endpoints; values within 1e-12
    /// of the bounds are clipped.
    pub fn curve_value(&self, s: Real) -> Result<Real> {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::InvalidParameter(format!(
                "curve argument {s} outside [0,1]"
            )));
        }
        let v = self.curve.raw_value(s);
        if v < 0.0 && v >= -GRID_CLIP {
            return Ok(0.0);
        }
        if v > 1.0 && v <= 1.0 + GRID_CLIP {
            return Ok(1.0);
        }
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::NonFinite(format!("evaluating curve at {s}")));
        }
        Ok(v)
    }

    /// Identity curve with the given confidence distribution; in-family and
    /// perfectly calibrated.
    pub fn identity(confidence: BetaParams) -> Self {
        TrueDistributionSpec {
            curve: CurveSpec::Glm {
                inverse_link: LinkFn::Logit,
                intercept: 0.0,
                slope: 1.0,
                predictor_link: LinkFn::Logit,
            },
            confidence,
        }
    }

    /// Built-in benchmark distributions D1-D5.
    pub fn builtin(name: &str) -> Option<Self> {
        let glm = |inv: LinkFn, b0: Real, b1: Real, pred: LinkFn, a1: Real, a2: Real| {
            TrueDistributionSpec {
                curve: CurveSpec::Glm {
                    inverse_link: inv,
                    intercept: b0,
                    slope: b1,
                    predictor_link: pred,
                },
                confidence: BetaParams { a1, a2 },
            }
        };
        match name {
            "D1" => Some(glm(LinkFn::Logit, -0.88, 0.49, LinkFn::Logit, 2.77, 0.04)),
            "D2" => Some(glm(LinkFn::Logflip, -0.12, 0.58, LinkFn::Logflip, 2.17, 0.03)),
            "D3" => Some(glm(LinkFn::Log, -0.03, 1.27, LinkFn::Log, 1.12, 0.11)),
            "D4" => Some(glm(LinkFn::Logit, -0.77, -0.80, LinkFn::Logflip, 1.13, 0.20)),
            "D5" => Some(glm(LinkFn::Logit, -0.97, 0.34, LinkFn::Logit, 1.19, 0.22)),
            _ => None,
        }
    }

    pub fn builtin_names() -> [&'static str; 5] {
        ["D1", "D2", "D3", "D4", "D5"]
    }
}
