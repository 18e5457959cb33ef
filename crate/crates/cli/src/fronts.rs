//! Front CSV files and per-instance front scoring.

use std::path::Path;

use anyhow::{Context, Result};
use pbhfsp_core::metrics::{hypervolume, igd, reference_point, spread};
use pbhfsp_core::pareto::nondominated_points;

#[derive(Debug, serde::Deserialize)]
struct Row {
    makespan: f64,
    tec: f64,
}

pub fn read_front(path: &Path) -> Result<Vec<[f64; 2]>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    r.deserialize::<Row>()
        .map(|row| {
            let row = row.with_context(|| format!("parsing {}", path.display()))?;
            Ok([row.makespan, row.tec])
        })
        .collect()
}

/// HV, IGD and Spread of one front; Spread is `None` below two points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scores {
    pub hv: f64,
    pub igd: f64,
    pub spread: Option<f64>,
}

/// Scores every front against the reference point and reference front built
/// from their union.
pub fn score_fronts(fronts: &[Vec<[f64; 2]>]) -> Result<Vec<Scores>> {
    let reference = reference_point(fronts).context("no points to score")?;
    let union: Vec<[f64; 2]> = fronts.iter().flatten().copied().collect();
    let ref_front = nondominated_points(&union);
    fronts
        .iter()
        .map(|f| {
            Ok(Scores {
                hv: hypervolume(f, reference)?,
                igd: igd(f, &ref_front)?,
                spread: spread(f).ok(),
            })
        })
        .collect()
}
