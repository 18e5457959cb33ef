//! Pareto-set helpers shared by the archive, the oracle and the metrics.

use crate::scalar::Scalar;
use crate::schedule::Objectives;

/// Nondominated subset with duplicates removed, sorted by makespan.
pub fn nondominated<F: Scalar>(points: &[Objectives<F>]) -> Vec<Objectives<F>> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.makespan.cmp(&b.makespan).then(a.tec.partial_cmp(&b.tec).expect("finite TEC")));
    let mut out: Vec<Objectives<F>> = Vec::new();
    for p in pts {
        // sorted by makespan then TEC, so p is kept iff it beats the last kept TEC
        match out.last() {
            Some(last) if p.tec >= last.tec => {}
            _ => out.push(p),
        }
    }
    out
}

/// Nondominated subset of raw 2-D points (both minimized), sorted by the first coordinate.
pub fn nondominated_points<F: Scalar>(points: &[[F; 2]]) -> Vec<[F; 2]> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap().then(a[1].partial_cmp(&b[1]).unwrap()));
    let mut out: Vec<[F; 2]> = Vec::new();
    for p in pts {
        match out.last() {
            Some(last) if p[1] >= last[1] => {}
            _ => out.push(p),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn filters_and_dedups() {
        let pts = vec![
            Objectives::new(5, 10.0),
            Objectives::new(3, 12.0),
            Objectives::new(5, 10.0),
            Objectives::new(6, 9.0),
            Objectives::new(6, 11.0),
            Objectives::new(3, 13.0),
        ];
        assert_eq!(
            nondominated(&pts),
            vec![Objectives::new(3, 12.0), Objectives::new(5, 10.0), Objectives::new(6, 9.0)]
        );
    }

    #[test]
    fn raw_points() {
        let pts = [[1.0, 3.0], [2.0, 2.0], [2.5, 2.0], [3.0, 1.0]];
        assert_eq!(nondominated_points(&pts), vec![[1.0, 3.0], [2.0, 2.0], [3.0, 1.0]]);
    }
}
