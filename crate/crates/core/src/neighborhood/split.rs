//! Energy-saving batch splitting on non-critical batches.
//!
//! Moving a member with processing time `pt2` out of a batch of duration
//! `pt1` into a new batch right behind it lowers load energy by
//! `(pt1 - pt2) * Ep` and idle energy by `pt2 * Es`. A split is applied only
//! if the makespan stays exactly the same.

use crate::model::{Instance, JobId, MachineId, Time};
use crate::scalar::Scalar;
use crate::schedule::{Batch, Operation, Solution};

use super::{graph_of, MoveEvaluation, MoveKind, SearchStats};

/// One applied split.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitRecord<F> {
    pub machine: MachineId,
    pub position: usize,
    pub job: JobId,
    /// Duration of the batch before the split.
    pub pt_long: Time,
    pub pt_moved: Time,
    pub tec_before: F,
    pub tec_after: F,
    pub makespan: Time,
}

impl<F: Scalar> SplitRecord<F> {
    /// TEC change predicted by the load/idle identities.
    pub fn predicted_delta(&self, inst: &Instance<F>) -> F {
        -(F::from_time(self.pt_long - self.pt_moved) * inst.power_load() + F::from_time(self.pt_moved) * inst.power_idle())
    }
}

/// [`tec_split`] that also reports every applied split.
pub fn tec_split_traced<F: Scalar>(
    inst: &Instance<F>,
    start: &Solution<F>,
    stats: &mut SearchStats,
) -> (Solution<F>, Vec<SplitRecord<F>>) {
    let s = inst.n_stages();
    let mut cur = start.clone();
    let mut records = Vec::new();
    'scan: loop {
        let g = graph_of(inst, &cur.schedule);
        for (m, line) in cur.schedule.lines().iter().enumerate() {
            let stage = inst.machine_stage(m);
            for (pos, b) in line.iter().enumerate() {
                if b.len() < 2 {
                    continue;
                }
                if b.jobs.iter().any(|&i| g.is_critical(Operation::new(i, stage).index(s))) {
                    continue;
                }
                let dur = b.duration(inst, m);
                let mut shorter: Vec<JobId> = b.jobs.iter().copied().filter(|&i| inst.pt(i, m) < dur).collect();
                shorter.sort_by_key(|&i| (inst.pt(i, m), i));
                for job in shorter {
                    let mut sched = cur.schedule.clone();
                    let line = sched.line_mut(m);
                    line[pos].jobs.retain(|&j| j != job);
                    line.insert(pos + 1, Batch::single(job));
                    let cand = stats.evaluate(inst, sched);
                    let accepted =
                        cand.objectives.makespan == cur.objectives.makespan && cand.objectives.tec < cur.objectives.tec;
                    MoveEvaluation {
                        kind: MoveKind::Split,
                        machine: Some(m),
                        position: Some(pos),
                        operation: Some(Operation::new(job, stage)),
                        score: None,
                        objectives: cand.objectives,
                        accepted,
                    }
                    .trace(&cur.objectives);
                    if accepted {
                        records.push(SplitRecord {
                            machine: m,
                            position: pos,
                            job,
                            pt_long: dur,
                            pt_moved: inst.pt(job, m),
                            tec_before: cur.objectives.tec,
                            tec_after: cand.objectives.tec,
                            makespan: cand.objectives.makespan,
                        });
                        stats.splits += 1;
                        cur = cand;
                        continue 'scan;
                    }
                }
            }
        }
        break;
    }
    (cur, records)
}

/// Splits non-critical batches greedily while TEC drops and makespan holds.
pub fn tec_split<F: Scalar>(inst: &Instance<F>, start: &Solution<F>, stats: &mut SearchStats) -> Solution<F> {
    tec_split_traced(inst, start, stats).0
}
