//! Batch recombination: after taking a critical operation off its machine,
//! pull operations from a batch into the batch before it, one at a time, by
//! smallest `RV = max(0, f_v - f_u) + t_v + max(0, p_vk - p_uk)`; `v` is the
//! pulled operation and `u` the longest member of the receiving batch. When
//! the chosen operation no longer fits, the pair moves one batch earlier.
//! The removed operation is finally put back by minimum BV.

use crate::model::{Instance, JobId, MachineId};
use crate::scalar::Scalar;
use crate::schedule::{fits, Operation, Schedule, Solution};

use super::insertion::{reduced_graph, reinsert_min_bv};
use super::SearchStats;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PullCandidate {
    pub job: JobId,
    pub rv: i64,
    /// Whether the job fits into the preceding batch.
    pub fits: bool,
}

/// RV of every member of the batch at `position` (which must be ≥ 1) for a
/// pull into the batch at `position - 1`, each scored in the graph without it.
pub fn pull_candidates<F: Scalar>(
    inst: &Instance<F>,
    schedule: &Schedule,
    machine: MachineId,
    position: usize,
) -> Vec<PullCandidate> {
    assert!(position >= 1, "a pull needs a preceding batch");
    let s = inst.n_stages();
    let stage = inst.machine_stage(machine);
    let line = schedule.line(machine);
    let prev = &line[position - 1];
    let u_job = prev.longest_member(inst, machine).expect("batches are non-empty");
    let u = Operation::new(u_job, stage).index(s);
    let p_uk = inst.pt(u_job, machine) as i64;
    line[position]
        .jobs
        .iter()
        .map(|&job| {
            let op = Operation::new(job, stage);
            let mut reduced = schedule.clone();
            reduced.remove_operation(inst, op);
            let g = reduced_graph(inst, &reduced, op, inst.pt(job, machine));
            let v = op.index(s);
            let p_vk = inst.pt(job, machine) as i64;
            let rv = (g.earliest(v) as i64 - g.earliest(u) as i64).max(0)
                + g.tail(v) as i64
                + (p_vk - p_uk).max(0);
            PullCandidate {
                job,
                rv,
                fits: fits(inst, machine, prev, job),
            }
        })
        .collect()
}

/// Moves `job` from the batch at `position` to the one before it, deleting
/// the source batch if it empties.
pub(crate) fn pull(schedule: &mut Schedule, machine: MachineId, position: usize, job: JobId) {
    let line = schedule.line_mut(machine);
    line[position].jobs.retain(|&j| j != job);
    let dst = &mut line[position - 1].jobs;
    let at = dst.partition_point(|&j| j < job);
    dst.insert(at, job);
    if line[position].is_empty() {
        line.remove(position);
    }
}

/// Smallest RV; ties go to the longest operation, whose removal shortens the
/// source batch the most, then to the lowest job id.
pub fn best_pull<F: Scalar>(inst: &Instance<F>, machine: MachineId, candidates: &[PullCandidate]) -> PullCandidate {
    *candidates
        .iter()
        .min_by_key(|c| (c.rv, std::cmp::Reverse(inst.pt(c.job, machine)), c.job))
        .expect("batches are non-empty")
}

/// Runs the pull cascade on `machine`, starting with the pair
/// (`position - 1`, `position`).
pub(crate) fn recombine_line<F: Scalar>(inst: &Instance<F>, schedule: &mut Schedule, machine: MachineId, position: usize) {
    let mut p = position;
    // every pull moves an operation strictly earlier, so this terminates
    while p >= 1 && p < schedule.line(machine).len() {
        let best = best_pull(inst, machine, &pull_candidates(inst, schedule, machine, p));
        if best.fits {
            pull(schedule, machine, p, best.job);
        } else {
            p -= 1;
        }
    }
}

/// Batch-recombination neighbor of `sol` for the critical operation `op`.
/// Returns `sol` unchanged when the machine keeps fewer than two batches.
pub fn batch_recombination<F: Scalar>(
    inst: &Instance<F>,
    sol: &Solution<F>,
    op: Operation,
    stats: &mut SearchStats,
) -> Solution<F> {
    let mut sched = sol.schedule.clone();
    let (m, pos, _) = sched.remove_operation(inst, op).expect("operation is placed");
    let len = sched.line(m).len();
    if len < 2 {
        return sol.clone();
    }
    recombine_line(inst, &mut sched, m, pos.clamp(1, len - 1));
    reinsert_min_bv(inst, sched, op, inst.pt(op.job, m), stats).0
}
