//! Composite midpoint quadrature. The open rule never touches the interval
//! endpoints, so integrable beta-density singularities at 0 and 1 stay finite.

use crate::error::{Error, Result};
use crate::numeric::Scalar;

/// Midpoint rule on `points` uniform subintervals of [lo, hi].
pub fn integrate<F, G>(f: G, lo: F, hi: F, points: usize) -> Result<F>
where
    F: Scalar,
    G: Fn(F) -> F,
{
    if points == 0 {
        return Err(Error::InvalidParameter("quadrature needs points >= 1".into()));
    }
    if !(lo < hi) {
        return Err(Error::InvalidParameter(
            "quadrature needs lo < hi".into(),
        ));
    }
    let n = F::from_usize(points).expect("points representable");
    let h = (hi - lo) / n;
    let half = F::c(0.5);
    let mut acc = F::zero();
    for i in 0..points {
        let x = lo + (F::from_usize(i).unwrap() + half) * h;
        let v = f(x);
        if !v.is_finite() {
            return Err(Error::NonFinite(format!(
                "integrating (node {i} of {points})"
            )));
        }
        acc = acc + v;
    }
    Ok(acc * h)
}
