//! Evolution operator: assignment crossover followed by an occasional
//! relocate or swap mutation. Both keep the encoding valid.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::model::{Instance, JobId, MachineId};
use crate::scalar::Scalar;
use crate::schedule::{fits, Batch, Operation, Schedule};

/// Offspring of `parent` in which every job with `subset[job]` set takes the
/// machine and batch position it has in `mate`. A job joins the batch now at
/// that position if it fits there, otherwise a new batch is opened.
pub fn crossover_with_subset<F: Scalar>(inst: &Instance<F>, parent: &Schedule, mate: &Schedule, subset: &[bool]) -> Schedule {
    let s = inst.n_stages();
    let mut child = parent.clone();
    for line in 0..child.n_machines() {
        let l = child.line_mut(line);
        for b in l.iter_mut() {
            b.jobs.retain(|&j| !subset[j]);
        }
        l.retain(|b| !b.is_empty());
    }
    for stage in 0..s {
        // (position, machine, job) in the mate, placed in mate order
        let mut moved: Vec<(usize, MachineId, JobId)> = Vec::new();
        for m in inst.stage_machines(stage) {
            for (pos, b) in mate.line(m).iter().enumerate() {
                moved.extend(b.jobs.iter().filter(|&&j| subset[j]).map(|&j| (pos, m, j)));
            }
        }
        moved.sort();
        for (pos, m, job) in moved {
            let line = child.line_mut(m);
            if pos < line.len() && fits(inst, m, &line[pos], job) {
                let b = &mut line[pos].jobs;
                let at = b.partition_point(|&j| j < job);
                b.insert(at, job);
            } else {
                line.insert(pos.min(line.len()), Batch::single(job));
            }
        }
        debug_assert!((0..inst.n_jobs()).all(|j| child.locate(inst, Operation::new(j, stage)).is_some()));
    }
    child
}

/// Moves one random operation to a random eligible machine. With even odds
/// it joins the last batch there that can take it, or opens a new batch at a
/// random position; it also opens one when nothing fits.
pub fn relocate_mutation<F: Scalar, R: Rng>(inst: &Instance<F>, schedule: &mut Schedule, rng: &mut R) {
    let op = Operation::new(rng.gen_range(0..inst.n_jobs()), rng.gen_range(0..inst.n_stages()));
    schedule.remove_operation(inst, op).expect("operation is placed");
    let machines: Vec<MachineId> = inst.eligible_machines(op.job, op.stage).collect();
    let m = *machines.choose(rng).expect("eligible machine exists");
    let line = schedule.line_mut(m);
    let last_fit = line.iter().rposition(|b| fits(inst, m, b, op.job));
    match last_fit {
        Some(p) if rng.gen_bool(0.5) => {
            let b = &mut line[p].jobs;
            let at = b.partition_point(|&j| j < op.job);
            b.insert(at, op.job);
        }
        _ => {
            let at = rng.gen_range(0..=line.len());
            line.insert(at, Batch::single(op.job));
        }
    }
}

/// Swaps two adjacent batches on a random machine that has at least two.
/// Returns false if no machine qualifies.
pub fn swap_mutation<R: Rng>(schedule: &mut Schedule, rng: &mut R) -> bool {
    let lines: Vec<usize> = (0..schedule.n_machines()).filter(|&m| schedule.line(m).len() >= 2).collect();
    let Some(&m) = lines.choose(rng) else {
        return false;
    };
    let line = schedule.line_mut(m);
    let p = rng.gen_range(0..line.len() - 1);
    line.swap(p, p + 1);
    true
}

/// Crossover with a uniformly drawn job subset, then with probability
/// `mutation_prob` one relocate or swap mutation (even odds).
pub fn evolve<F: Scalar, R: Rng>(
    inst: &Instance<F>,
    parent: &Schedule,
    mate: &Schedule,
    mutation_prob: f64,
    rng: &mut R,
) -> Schedule {
    let subset: Vec<bool> = (0..inst.n_jobs()).map(|_| rng.gen_bool(0.5)).collect();
    let mut child = crossover_with_subset(inst, parent, mate, &subset);
    if rng.gen_bool(mutation_prob) {
        if rng.gen_bool(0.5) || !swap_mutation(&mut child, rng) {
            relocate_mutation(inst, &mut child, rng);
        }
    }
    child
}
