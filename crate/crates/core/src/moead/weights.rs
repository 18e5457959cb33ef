//! Weight vectors, neighbor lists, Chebyshev aggregation and weight rotation.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct WeightVector<F = f64> {
    pub lambda: [F; 2],
    /// Indices of the T nearest weight vectors, self included, nearest first.
    pub neighbors: Vec<usize>,
    /// Consecutive updates of the bound individual on the same side of the ray.
    pub counter: usize,
    /// Side of the last update: -1, 0 or 1.
    pub side: i8,
}

/// `popsize` evenly spread weights `(i/(n-1), 1 - i/(n-1))` with T-nearest
/// neighbor lists.
pub fn init_weights<F: Scalar>(popsize: usize, t: usize) -> Result<Vec<WeightVector<F>>> {
    if popsize < 2 {
        return Err(Error::param("popsize", "at least two subproblems are needed"));
    }
    if t < 2 || t > popsize {
        return Err(Error::param("neighbors_t", format!("must lie in 2..={popsize}")));
    }
    let denom = F::from_count(popsize - 1);
    let mut w: Vec<WeightVector<F>> = (0..popsize)
        .map(|i| {
            let a = F::from_count(i) / denom;
            WeightVector {
                lambda: [a, F::one() - a],
                neighbors: Vec::new(),
                counter: 0,
                side: 0,
            }
        })
        .collect();
    for i in 0..popsize {
        w[i].neighbors = nearest(&w, i, t);
    }
    Ok(w)
}

/// The `t` weight vectors closest to vector `i` (ties by index).
pub fn nearest<F: Scalar>(weights: &[WeightVector<F>], i: usize, t: usize) -> Vec<usize> {
    let li = weights[i].lambda;
    let mut idx: Vec<usize> = (0..weights.len()).collect();
    let d = |j: usize| {
        let lj = weights[j].lambda;
        (li[0] - lj[0]).powi(2) + (li[1] - lj[1]).powi(2)
    };
    idx.sort_by(|&a, &b| d(a).partial_cmp(&d(b)).expect("finite weights").then(a.cmp(&b)));
    idx.truncate(t);
    idx
}

/// Chebyshev aggregate `max_k λ_k (f_k - z_k)`.
pub fn aggregate<F: Scalar>(f: [F; 2], lambda: [F; 2], ideal: [F; 2]) -> F {
    (lambda[0] * (f[0] - ideal[0])).max(lambda[1] * (f[1] - ideal[1]))
}

/// Chebyshev aggregate on objectives divided by `scale`.
pub fn aggregate_scaled<F: Scalar>(f: [F; 2], lambda: [F; 2], ideal: [F; 2], scale: [F; 2]) -> F {
    (lambda[0] * (f[0] - ideal[0]) / scale[0]).max(lambda[1] * (f[1] - ideal[1]) / scale[1])
}

/// Records an update of the bound individual whose (scaled) offset from the
/// ideal point is `d`. After `l` consecutive updates on the same side of the
/// weight ray, λ is rotated halfway toward `d` and true is returned.
pub fn observe_update<F: Scalar>(w: &mut WeightVector<F>, d: [F; 2], l: usize) -> bool {
    let cross = w.lambda[0] * d[1] - w.lambda[1] * d[0];
    let side: i8 = if cross > F::zero() {
        1
    } else if cross < F::zero() {
        -1
    } else {
        0
    };
    if side == 0 {
        w.counter = 0;
        w.side = 0;
        return false;
    }
    if side == w.side {
        w.counter += 1;
    } else {
        w.side = side;
        w.counter = 1;
    }
    if w.counter < l {
        return false;
    }
    w.lambda = rotate_half(w.lambda, d);
    w.counter = 0;
    w.side = 0;
    true
}

/// λ turned by half the angle between λ and `d`, renormalized to sum 1.
pub fn rotate_half<F: Scalar>(lambda: [F; 2], d: [F; 2]) -> [F; 2] {
    let a = lambda[1].atan2(lambda[0]);
    let b = d[1].max(F::zero()).atan2(d[0].max(F::zero()));
    let mid = (a + b) / F::lit(2.0);
    let v = [mid.cos().max(F::zero()), mid.sin().max(F::zero())];
    let sum = v[0] + v[1];
    [v[0] / sum, v[1] / sum]
}
