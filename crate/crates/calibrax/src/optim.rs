//! Nelder-Mead simplex minimization with the standard coefficients
//! (reflection 1, expansion 2, contraction 0.5, shrink 0.5).

use crate::error::{Error, Result};
use crate::numeric::Scalar;

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions<F> {
    pub max_iterations: usize,
    /// Stop when the objective spread across the simplex drops below this.
    pub tolerance: F,
    /// Step used to build the initial simplex around x0.
    pub initial_step: F,
}

impl<F: Scalar> Default for NelderMeadOptions<F> {
    fn default() -> Self {
        NelderMeadOptions {
            max_iterations: 2000,
            tolerance: F::c(1e-8),
            initial_step: F::c(0.25),
        }
    }
}

#[derive(Debug, Clone)]
pub struct NelderMeadResult<F> {
    pub x: Vec<F>,
    pub value: F,
    pub iterations: usize,
}

/// Minimize `f` starting from `x0`. Non-finite objective values during the
/// search rank worst; a non-finite value at any initial vertex is an error.
pub fn nelder_mead<F, G>(
    mut f: G,
    x0: &[F],
    opts: &NelderMeadOptions<F>,
) -> Result<NelderMeadResult<F>>
where
    F: Scalar,
    G: FnMut(&[F]) -> F,
{
    let dim = x0.len();
    if dim == 0 {
        return Err(Error::InvalidParameter("empty start point".into()));
    }
    let score = |f: &mut G, x: &[F]| -> F {
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            F::infinity()
        }
    };

    let mut simplex: Vec<Vec<F>> = Vec::with_capacity(dim + 1);
    simplex.push(x0.to_vec());
    for i in 0..dim {
        let mut p = x0.to_vec();
        p[i] = p[i] + opts.initial_step;
        simplex.push(p);
    }
    let mut values: Vec<F> = simplex.iter().map(|p| score(&mut f, p)).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteObjective);
    }

    let two = F::c(2.0);
    let half = F::c(0.5);
    let mut iterations = 0;
    while iterations < opts.max_iterations {
        iterations += 1;
        // order: best first
        let mut order: Vec<usize> = (0..=dim).collect();
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite scores"));
        let best = order[0];
        let worst = order[dim];
        let second_worst = order[dim - 1];
        // value spread alone can vanish on a simplex straddling the optimum
        // symmetrically, so also require the simplex itself to have collapsed
        let diameter = simplex
            .iter()
            .flat_map(|p| p.iter().zip(&simplex[best]).map(|(&x, &b)| (x - b).abs()))
            .fold(F::zero(), |a, d| if d > a { d } else { a });
        if values[worst] - values[best] < opts.tolerance && diameter < opts.tolerance.sqrt() {
            break;
        }

        // centroid of all but the worst vertex
        let mut centroid = vec![F::zero(); dim];
        for &i in order.iter().take(dim) {
            for (c, &x) in centroid.iter_mut().zip(&simplex[i]) {
                *c = *c + x;
            }
        }
        let inv = F::one() / F::from_usize(dim).unwrap();
        for c in centroid.iter_mut() {
            *c = *c * inv;
        }

        let blend = |a: &[F], b: &[F], t: F| -> Vec<F> {
            a.iter().zip(b).map(|(&x, &y)| x + t * (y - x)).collect()
        };

        // reflection
        let reflected = blend(&centroid, &simplex[worst], -F::one());
        let fr = score(&mut f, &reflected);
        if fr < values[best] {
            // expansion
            let expanded = blend(&centroid, &simplex[worst], -two);
            let fe = score(&mut f, &expanded);
            if fe < fr {
                simplex[worst] = expanded;
                values[worst] = fe;
            } else {
                simplex[worst] = reflected;
                values[worst] = fr;
            }
            continue;
        }
        if fr < values[second_worst] {
            simplex[worst] = reflected;
            values[worst] = fr;
            continue;
        }
        // contraction (outside if reflection improved on the worst)
        let contracted = if fr < values[worst] {
            blend(&centroid, &reflected, half)
        } else {
            blend(&centroid, &simplex[worst], half)
        };
        let fc = score(&mut f, &contracted);
        if fc < values[worst].min(fr) {
            simplex[worst] = contracted;
            values[worst] = fc;
            continue;
        }
        // shrink toward the best vertex
        let best_point = simplex[best].clone();
        for i in 0..=dim {
            if i == best {
                continue;
            }
            simplex[i] = blend(&best_point, &simplex[i], half);
            values[i] = score(&mut f, &simplex[i]);
        }
    }

    let (arg, _) = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).expect("finite scores"))
        .expect("non-empty simplex");
    Ok(NelderMeadResult {
        x: simplex[arg].clone(),
        value: values[arg],
        iterations,
    })
}
