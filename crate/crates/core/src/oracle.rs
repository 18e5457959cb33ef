//! Exhaustive enumeration of every encoding of a tiny instance, used as the
//! ground truth for search-quality and theorem-style tests.

use crate::error::{Error, Result};
use crate::model::{Instance, JobId, MachineId, StageId};
use crate::pareto::nondominated;
use crate::scalar::Scalar;
use crate::schedule::{decode, Batch, Objectives, Schedule};

/// Largest instance (in operations) the oracle accepts.
pub const ORACLE_MAX_OPERATIONS: usize = 8;

/// Calls `visit` for every structurally valid schedule of the instance:
/// all machine assignments, batch partitions and batch orders.
pub fn for_each_schedule<F: Scalar>(inst: &Instance<F>, mut visit: impl FnMut(&Schedule)) -> Result<()> {
    if inst.n_operations() > ORACLE_MAX_OPERATIONS {
        return Err(Error::OracleTooLarge {
            operations: inst.n_operations(),
            limit: ORACLE_MAX_OPERATIONS,
        });
    }
    let layouts: Vec<Vec<Vec<Vec<Batch>>>> = (0..inst.n_stages()).map(|j| stage_layouts(inst, j)).collect();
    let mut sched = Schedule::empty(inst.n_machines());
    product(inst, &layouts, 0, &mut sched, &mut visit);
    Ok(())
}

fn product<F: Scalar>(
    inst: &Instance<F>,
    layouts: &[Vec<Vec<Vec<Batch>>>],
    stage: StageId,
    sched: &mut Schedule,
    visit: &mut impl FnMut(&Schedule),
) {
    if stage == layouts.len() {
        visit(sched);
        return;
    }
    let machines = inst.stage_machines(stage);
    for layout in &layouts[stage] {
        for (m, line) in machines.clone().zip(layout) {
            *sched.line_mut(m) = line.clone();
        }
        product(inst, layouts, stage + 1, sched, visit);
    }
}

/// Every way to lay out one stage: per machine of the stage, an ordered list of batches.
fn stage_layouts<F: Scalar>(inst: &Instance<F>, stage: StageId) -> Vec<Vec<Vec<Batch>>> {
    let machines: Vec<MachineId> = inst.stage_machines(stage).collect();
    let mut out = Vec::new();
    let mut assign = vec![0usize; inst.n_jobs()];
    assign_jobs(inst, stage, &machines, 0, &mut assign, &mut out);
    out
}

fn assign_jobs<F: Scalar>(
    inst: &Instance<F>,
    stage: StageId,
    machines: &[MachineId],
    job: JobId,
    assign: &mut Vec<usize>,
    out: &mut Vec<Vec<Vec<Batch>>>,
) {
    if job == inst.n_jobs() {
        let per_machine: Vec<Vec<Vec<Batch>>> = machines
            .iter()
            .enumerate()
            .map(|(k, &m)| {
                let jobs: Vec<JobId> = (0..inst.n_jobs()).filter(|&i| assign[i] == k).collect();
                let mut seqs = Vec::new();
                ordered_partitions(inst, m, &jobs, &mut Vec::new(), &mut seqs);
                seqs
            })
            .collect();
        let mut current = Vec::with_capacity(machines.len());
        cross(&per_machine, &mut current, out);
        return;
    }
    for (k, &m) in machines.iter().enumerate() {
        if inst.is_eligible(job, m) {
            assign[job] = k;
            assign_jobs(inst, stage, machines, job + 1, assign, out);
        }
    }
}

fn cross(per_machine: &[Vec<Vec<Batch>>], current: &mut Vec<Vec<Batch>>, out: &mut Vec<Vec<Vec<Batch>>>) {
    if current.len() == per_machine.len() {
        out.push(current.clone());
        return;
    }
    for seq in &per_machine[current.len()] {
        current.push(seq.clone());
        cross(per_machine, current, out);
        current.pop();
    }
}

/// Ordered partitions of `jobs` into batches that respect the machine's rules.
fn ordered_partitions<F: Scalar>(
    inst: &Instance<F>,
    machine: MachineId,
    jobs: &[JobId],
    prefix: &mut Vec<Batch>,
    out: &mut Vec<Vec<Batch>>,
) {
    if jobs.is_empty() {
        out.push(prefix.clone());
        return;
    }
    let batch_stage = inst.stage_kind(inst.machine_stage(machine)).is_batch();
    let n = jobs.len();
    for mask in 1u32..(1 << n) {
        if !batch_stage && mask.count_ones() != 1 {
            continue;
        }
        let (inside, rest): (Vec<JobId>, Vec<JobId>) = {
            let mut a = Vec::new();
            let mut b = Vec::new();
            for (k, &j) in jobs.iter().enumerate() {
                if mask & (1 << k) != 0 {
                    a.push(j)
                } else {
                    b.push(j)
                }
            }
            (a, b)
        };
        let batch = Batch { jobs: inside };
        if batch_stage && batch.volume(inst) > inst.capacity(machine) {
            continue;
        }
        prefix.push(batch);
        ordered_partitions(inst, machine, &rest, prefix, out);
        prefix.pop();
    }
}

/// Exact Pareto front over all encodings, sorted by makespan.
pub fn enumerate_pareto_oracle<F: Scalar>(inst: &Instance<F>) -> Result<Vec<Objectives<F>>> {
    let mut front: Vec<Objectives<F>> = Vec::new();
    for_each_schedule(inst, |s| {
        let obj = decode(inst, s).expect("enumerated schedules are valid").objectives;
        if !front.iter().any(|f| f.weakly_dominates(&obj)) {
            front.retain(|f| !obj.dominates(f));
            front.push(obj);
        }
    })?;
    Ok(nondominated(&front))
}
