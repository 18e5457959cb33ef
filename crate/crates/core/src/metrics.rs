//! Front quality indicators (HV, IGD, Spread) and Friedman mean ranks.
//!
//! Points are `[makespan, tec]` pairs; both objectives are minimized.

use crate::error::{Error, Result};
use crate::pareto::nondominated_points;
use crate::scalar::Scalar;

/// Per-objective bounds used for normalization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bounds<F> {
    pub ideal: [F; 2],
    pub nadir: [F; 2],
}

impl<F: Scalar> Bounds<F> {
    /// Componentwise min and max over all given points.
    pub fn of<'a>(points: impl IntoIterator<Item = &'a [F; 2]>) -> Option<Self> {
        let mut it = points.into_iter();
        let first = *it.next()?;
        let mut b = Bounds {
            ideal: first,
            nadir: first,
        };
        for p in it {
            for k in 0..2 {
                b.ideal[k] = b.ideal[k].min(p[k]);
                b.nadir[k] = b.nadir[k].max(p[k]);
            }
        }
        Some(b)
    }

    /// Maps a point into [0, 1]²; a degenerate axis maps to 0.
    pub fn normalize(&self, p: &[F; 2]) -> [F; 2] {
        let mut out = [F::zero(); 2];
        for k in 0..2 {
            let range = self.nadir[k] - self.ideal[k];
            out[k] = if range > F::zero() {
                (p[k] - self.ideal[k]) / range
            } else {
                F::zero()
            };
        }
        out
    }
}

/// `1.1 ×` the componentwise nadir of the union of `fronts`.
pub fn reference_point<F: Scalar>(fronts: &[Vec<[F; 2]>]) -> Option<[F; 2]> {
    let b = Bounds::of(fronts.iter().flatten())?;
    Some([b.nadir[0] * F::lit(1.1), b.nadir[1] * F::lit(1.1)])
}

/// Exact 2-D hypervolume dominated by `front` and bounded by `reference`.
/// Dominated and duplicate points are ignored.
pub fn hypervolume<F: Scalar>(front: &[[F; 2]], reference: [F; 2]) -> Result<F> {
    if let Some(p) = front.iter().find(|p| !(p[0] < reference[0] && p[1] < reference[1])) {
        return Err(Error::Metric(format!(
            "point ({}, {}) is outside the reference box ({}, {})",
            p[0], p[1], reference[0], reference[1]
        )));
    }
    // nondominated points sorted by f1 ascending have f2 descending
    let nd = nondominated_points(front);
    let mut hv = F::zero();
    let mut prev_f2 = reference[1];
    for p in &nd {
        hv += (reference[0] - p[0]) * (prev_f2 - p[1]);
        prev_f2 = p[1];
    }
    Ok(hv)
}

/// Mean distance from each reference point to its nearest front point, after
/// normalizing both sets over their union.
pub fn igd<F: Scalar>(front: &[[F; 2]], reference: &[[F; 2]]) -> Result<F> {
    if front.is_empty() || reference.is_empty() {
        return Err(Error::Metric("IGD needs non-empty front and reference".into()));
    }
    let b = Bounds::of(front.iter().chain(reference)).expect("non-empty");
    let nf: Vec<[F; 2]> = front.iter().map(|p| b.normalize(p)).collect();
    let total: F = reference
        .iter()
        .map(|r| {
            let r = b.normalize(r);
            nf.iter()
                .map(|p| ((p[0] - r[0]).powi(2) + (p[1] - r[1]).powi(2)).sqrt())
                .fold(F::infinity(), F::min)
        })
        .sum();
    Ok(total / F::from_count(reference.len()))
}

/// Spread Δ with the front's own extremes (`d_f = d_l = 0`), on the front
/// normalized over its own bounds.
pub fn spread<F: Scalar>(front: &[[F; 2]]) -> Result<F> {
    let mut pts = nondominated_points(front);
    if pts.len() < 2 {
        return Err(Error::Metric("spread is undefined for fewer than two distinct points".into()));
    }
    let b = Bounds::of(pts.iter()).expect("non-empty");
    for p in pts.iter_mut() {
        *p = b.normalize(p);
    }
    let gaps: Vec<F> = pts
        .windows(2)
        .map(|w| ((w[1][0] - w[0][0]).powi(2) + (w[1][1] - w[0][1]).powi(2)).sqrt())
        .collect();
    let mean = gaps.iter().copied().sum::<F>() / F::from_count(gaps.len());
    if mean == F::zero() {
        return Ok(F::zero());
    }
    let dev: F = gaps.iter().map(|&d| (d - mean).abs()).sum();
    Ok(dev / (F::from_count(gaps.len()) * mean))
}

/// Friedman ranking of algorithms (rows) over cases (columns).
#[derive(Clone, Debug, PartialEq)]
pub struct FriedmanResult {
    /// Mean rank per algorithm; the best algorithm of a case gets rank `k`.
    pub mean_ranks: Vec<f64>,
    pub chi_square: f64,
}

/// Ranks within each case, averaging tied ranks. Higher mean rank is better.
pub fn friedman_mean_ranks(scores: &[Vec<f64>], higher_is_better: bool) -> Result<FriedmanResult> {
    let k = scores.len();
    if k < 2 {
        return Err(Error::Metric("Friedman ranking needs at least two algorithms".into()));
    }
    let n = scores[0].len();
    if n < 1 {
        return Err(Error::Metric("Friedman ranking needs at least one case".into()));
    }
    if scores.iter().any(|r| r.len() != n) {
        return Err(Error::Metric("score matrix is ragged".into()));
    }
    let mut sums = vec![0.0; k];
    for c in 0..n {
        // ascending "goodness": the worst algorithm comes first and gets rank 1
        let key = |a: usize| if higher_is_better { scores[a][c] } else { -scores[a][c] };
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| key(a).total_cmp(&key(b)));
        let mut i = 0;
        while i < k {
            let mut j = i;
            while j + 1 < k && key(order[j + 1]) == key(order[i]) {
                j += 1;
            }
            let rank = (i + j) as f64 / 2.0 + 1.0;
            for &a in &order[i..=j] {
                sums[a] += rank;
            }
            i = j + 1;
        }
    }
    let mean_ranks: Vec<f64> = sums.iter().map(|s| s / n as f64).collect();
    let kf = k as f64;
    let chi_square = 12.0 * n as f64 / (kf * (kf + 1.0))
        * (mean_ranks.iter().map(|r| r * r).sum::<f64>() - kf * (kf + 1.0).powi(2) / 4.0);
    Ok(FriedmanResult { mean_ranks, chi_square })
}
