//! Batch insertion: take a critical operation off its machine and put it into
//! the existing batch with the smallest insertion value
//! `BV = max(0, f_u - f_v) + max(0, p_uk - p_vk, t_u - t_v)`, where `u` is the
//! longest member of the target batch and all labels are taken in the graph
//! without the operation.

use crate::graph::{Detached, DisjunctiveGraph};
use crate::model::{Instance, MachineId};
use crate::scalar::Scalar;
use crate::schedule::{fits, Batch, Operation, Schedule, Solution};

use super::SearchStats;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InsertionCandidate {
    pub machine: MachineId,
    pub position: usize,
    pub bv: i64,
}

/// Where a detached operation went back in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reinsertion {
    /// Joined the existing batch at (machine, position) with this BV.
    Joined(InsertionCandidate),
    /// Opened a new singleton batch at (machine, position).
    Opened { machine: MachineId, position: usize },
}

/// Removes `op` from `schedule` and builds the reduced graph around it.
///
/// Returns the former machine and position of the operation.
pub fn detach<F: Scalar>(
    inst: &Instance<F>,
    schedule: &mut Schedule,
    op: Operation,
) -> (MachineId, usize, DisjunctiveGraph) {
    let (m, pos, _) = schedule
        .remove_operation(inst, op)
        .expect("operation to detach is placed");
    let g = reduced_graph(inst, schedule, op, inst.pt(op.job, m));
    (m, pos, g)
}

pub(crate) fn reduced_graph<F: Scalar>(
    inst: &Instance<F>,
    schedule: &Schedule,
    op: Operation,
    weight: u64,
) -> DisjunctiveGraph {
    match DisjunctiveGraph::build_reduced(inst, schedule, Detached { op, weight }) {
        Ok(g) => g,
        Err(e) => panic!("reduced graph after removing {op}: {e}"),
    }
}

/// All existing batches that can take `op` (eligible machine, capacity left),
/// scored by BV. `reduced` must not contain `op`.
pub fn insertion_candidates<F: Scalar>(
    inst: &Instance<F>,
    reduced: &Schedule,
    graph: &DisjunctiveGraph,
    op: Operation,
) -> Vec<InsertionCandidate> {
    let s = inst.n_stages();
    let v = op.index(s);
    let f_v = graph.earliest(v) as i64;
    let t_v = graph.tail(v) as i64;
    let mut out = Vec::new();
    for k in inst.eligible_machines(op.job, op.stage) {
        let p_vk = inst.pt(op.job, k) as i64;
        for (pos, b) in reduced.line(k).iter().enumerate() {
            if !fits(inst, k, b, op.job) {
                continue;
            }
            let u_job = b.longest_member(inst, k).expect("batches are non-empty");
            let u = Operation::new(u_job, op.stage).index(s);
            let p_uk = inst.pt(u_job, k) as i64;
            let f_u = graph.earliest(u) as i64;
            let t_u = graph.tail(u) as i64;
            let bv = (f_u - f_v).max(0) + 0.max(p_uk - p_vk).max(t_u - t_v);
            out.push(InsertionCandidate {
                machine: k,
                position: pos,
                bv,
            });
        }
    }
    out
}

/// Puts `job` into the batch at `position` on `machine`, or opens a new
/// singleton batch there when `open` is set.
pub fn insert_at(schedule: &mut Schedule, machine: MachineId, position: usize, job: usize, open: bool) {
    let line = schedule.line_mut(machine);
    if open {
        line.insert(position, Batch::single(job));
    } else {
        let jobs = &mut line[position].jobs;
        let at = jobs.partition_point(|&j| j < job);
        jobs.insert(at, job);
    }
}

/// Reinserts a detached operation: the minimum-BV batch if any batch fits
/// (ties by machine, then position), otherwise a new singleton batch at the
/// position with the smallest resulting makespan. `weight` is the node
/// weight the detached operation keeps in the reduced graph.
pub fn reinsert_min_bv<F: Scalar>(
    inst: &Instance<F>,
    mut reduced: Schedule,
    op: Operation,
    weight: u64,
    stats: &mut SearchStats,
) -> (Solution<F>, Reinsertion) {
    let g = reduced_graph(inst, &reduced, op, weight);
    reinsert_with_graph(inst, &mut reduced, &g, op, stats)
}

fn reinsert_with_graph<F: Scalar>(
    inst: &Instance<F>,
    reduced: &mut Schedule,
    graph: &DisjunctiveGraph,
    op: Operation,
    stats: &mut SearchStats,
) -> (Solution<F>, Reinsertion) {
    let best = insertion_candidates(inst, reduced, graph, op)
        .into_iter()
        .min_by_key(|c| (c.bv, c.machine, c.position));
    if let Some(c) = best {
        insert_at(reduced, c.machine, c.position, op.job, false);
        let sol = stats.evaluate(inst, reduced.clone());
        return (sol, Reinsertion::Joined(c));
    }
    let mut best: Option<(Solution<F>, MachineId, usize)> = None;
    for k in inst.eligible_machines(op.job, op.stage) {
        for pos in 0..=reduced.line(k).len() {
            let mut cand = reduced.clone();
            insert_at(&mut cand, k, pos, op.job, true);
            let sol = stats.evaluate(inst, cand);
            if best
                .as_ref()
                .map_or(true, |(b, _, _)| sol.objectives.makespan < b.objectives.makespan)
            {
                best = Some((sol, k, pos));
            }
        }
    }
    let (sol, machine, position) = best.expect("operation has an eligible machine");
    (sol, Reinsertion::Opened { machine, position })
}

/// Batch-insertion neighbor of `sol` for the critical operation `op`.
pub fn batch_insertion<F: Scalar>(
    inst: &Instance<F>,
    sol: &Solution<F>,
    op: Operation,
    stats: &mut SearchStats,
) -> Solution<F> {
    let mut reduced = sol.schedule.clone();
    let (_, _, g) = detach(inst, &mut reduced, op);
    reinsert_with_graph(inst, &mut reduced, &g, op, stats).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{tiny_a, InstanceMeta, StageKind};
    use crate::schedule::decode;

    #[test]
    fn own_batch_reinsertion_is_identity() {
        let inst: Instance = tiny_a();
        let sched = Schedule::from_vecs(vec![vec![vec![0, 1]], vec![vec![0], vec![1]]]);
        let sol = Solution::evaluate(&inst, sched.clone()).unwrap();
        let op = Operation::new(1, 0);
        let mut reduced = sched.clone();
        let (m, pos, g) = detach(&inst, &mut reduced, op);
        let cands = insertion_candidates(&inst, &reduced, &g, op);
        assert!(cands.iter().any(|c| (c.machine, c.position) == (m, pos)));
        insert_at(&mut reduced, m, pos, op.job, false);
        assert_eq!(reduced, sched);
        assert_eq!(decode(&inst, &reduced).unwrap().objectives, sol.objectives);
    }

    #[test]
    fn bv_of_tiny_a_stage_one() {
        // remove O(1,0) from the joint batch: f_v = 0, t_v = 4 (J2 on M2 after J1),
        // u = O(0,0) with p_u = 3 < p_v = 5 and t_u = 6 -> BV = 0 + max(0, -2, 2) = 2
        let inst: Instance = tiny_a();
        let mut sched = Schedule::from_vecs(vec![vec![vec![0, 1]], vec![vec![0], vec![1]]]);
        let op = Operation::new(1, 0);
        let (_, _, g) = detach(&inst, &mut sched, op);
        let s = inst.n_stages();
        assert_eq!(g.earliest(op.index(s)), 0);
        assert_eq!(g.tail(Operation::new(0, 0).index(s)), 2 + 4);
        let cands = insertion_candidates(&inst, &sched, &g, op);
        assert_eq!(
            cands,
            vec![InsertionCandidate {
                machine: 0,
                position: 0,
                bv: 2
            }]
        );
    }

    #[test]
    fn oversized_operation_opens_new_batch() {
        // capacity 10, sizes 6 and 6: the two jobs can never share a batch
        let inst = Instance::<f64>::new(
            vec![StageKind::Batch],
            vec![vec![10]],
            vec![6, 6],
            vec![vec![vec![3]], vec![vec![4]]],
            2.0,
            1.0,
            InstanceMeta::default(),
        )
        .unwrap();
        let sched = Schedule::from_vecs(vec![vec![vec![0], vec![1]]]);
        let sol = Solution::evaluate(&inst, sched).unwrap();
        let mut stats = SearchStats::default();
        let out = batch_insertion(&inst, &sol, Operation::new(1, 0), &mut stats);
        assert_eq!(out.schedule.line(0).len(), 2);
        assert!(out.schedule.line(0).iter().all(|b| b.len() == 1));
        assert_eq!(out.objectives.makespan, 7);
    }

    #[test]
    fn discrete_stage_picks_best_position() {
        // J0 must go first on the discrete machine to keep the makespan at 11
        let inst: Instance = tiny_a();
        let sched = Schedule::from_vecs(vec![vec![vec![0, 1]], vec![vec![1], vec![0]]]);
        let sol = Solution::evaluate(&inst, sched).unwrap();
        let mut stats = SearchStats::default();
        let out = batch_insertion(&inst, &sol, Operation::new(0, 1), &mut stats);
        assert_eq!(out.objectives.makespan, 11);
    }
}
