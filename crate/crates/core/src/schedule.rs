//! Solution encoding, decoding into start/end times, objective evaluation and
//! the feasibility checker.
//!
//! A [`Schedule`] stores, for every machine, the ordered list of batches it
//! processes. Decoding is semi-active: every batch starts as soon as its
//! machine is free and all members have finished the previous stage.

use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Instance, JobId, MachineId, StageId, Time};
use crate::scalar::Scalar;

/// Flat index of operation (job, stage): `job * n_stages + stage`.
pub type OpId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Operation {
    pub job: JobId,
    pub stage: StageId,
}

impl Operation {
    pub fn new(job: JobId, stage: StageId) -> Self {
        Operation { job, stage }
    }

    #[inline]
    pub fn index(self, n_stages: usize) -> OpId {
        self.job * n_stages + self.stage
    }

    #[inline]
    pub fn from_index(op: OpId, n_stages: usize) -> Self {
        Operation {
            job: op / n_stages,
            stage: op % n_stages,
        }
    }
}

impl fmt::Display for Operation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "O({},{})", self.job, self.stage)
    }
}

/// Jobs processed together on one machine. The stage is implied by the machine.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Batch {
    pub jobs: Vec<JobId>,
}

impl Batch {
    pub fn single(job: JobId) -> Self {
        Batch { jobs: vec![job] }
    }

    pub fn len(&self) -> usize {
        self.jobs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jobs.is_empty()
    }

    pub fn contains(&self, job: JobId) -> bool {
        self.jobs.contains(&job)
    }

    pub fn volume<F: Scalar>(&self, inst: &Instance<F>) -> u32 {
        self.jobs.iter().map(|&i| inst.job_size(i)).sum()
    }

    /// Longest member processing time on `machine`.
    pub fn duration<F: Scalar>(&self, inst: &Instance<F>, machine: MachineId) -> Time {
        self.jobs.iter().map(|&i| inst.pt(i, machine)).max().unwrap_or(0)
    }

    /// Member with the longest processing time on `machine` (lowest id on ties).
    pub fn longest_member<F: Scalar>(&self, inst: &Instance<F>, machine: MachineId) -> Option<JobId> {
        self.jobs
            .iter()
            .copied()
            .max_by(|&a, &b| inst.pt(a, machine).cmp(&inst.pt(b, machine)).then(b.cmp(&a)))
    }
}

/// Whether `job` may join a batch with `volume` already loaded on `machine`.
pub fn fits<F: Scalar>(inst: &Instance<F>, machine: MachineId, batch: &Batch, job: JobId) -> bool {
    let stage = inst.machine_stage(machine);
    if !inst.stage_kind(stage).is_batch() {
        return batch.is_empty();
    }
    batch.volume(inst) + inst.job_size(job) <= inst.capacity(machine)
}

/// Per-machine ordered batch lists.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Schedule {
    machines: Vec<Vec<Batch>>,
}

impl Schedule {
    pub fn empty(n_machines: usize) -> Self {
        Schedule {
            machines: vec![Vec::new(); n_machines],
        }
    }

    pub fn from_lines(machines: Vec<Vec<Batch>>) -> Self {
        Schedule { machines }
    }

    /// Convenience constructor from nested job-id vectors.
    pub fn from_vecs(machines: Vec<Vec<Vec<JobId>>>) -> Self {
        Schedule {
            machines: machines
                .into_iter()
                .map(|line| line.into_iter().map(|jobs| Batch { jobs }).collect())
                .collect(),
        }
    }

    pub fn n_machines(&self) -> usize {
        self.machines.len()
    }

    pub fn line(&self, machine: MachineId) -> &[Batch] {
        &self.machines[machine]
    }

    pub fn line_mut(&mut self, machine: MachineId) -> &mut Vec<Batch> {
        &mut self.machines[machine]
    }

    pub fn lines(&self) -> &[Vec<Batch>] {
        &self.machines
    }

    pub fn n_batches(&self) -> usize {
        self.machines.iter().map(Vec::len).sum()
    }

    /// (machine, batch position) of an operation, if it is placed.
    pub fn locate<F: Scalar>(&self, inst: &Instance<F>, op: Operation) -> Option<(MachineId, usize)> {
        inst.stage_machines(op.stage).find_map(|m| {
            self.machines[m]
                .iter()
                .position(|b| b.contains(op.job))
                .map(|pos| (m, pos))
        })
    }

    /// Removes an operation from its batch, deleting the batch if it empties.
    ///
    /// Returns the former (machine, position) and whether the batch was deleted.
    pub fn remove_operation<F: Scalar>(&mut self, inst: &Instance<F>, op: Operation) -> Option<(MachineId, usize, bool)> {
        let (m, pos) = self.locate(inst, op)?;
        let batch = &mut self.machines[m][pos];
        batch.jobs.retain(|&j| j != op.job);
        let deleted = batch.is_empty();
        if deleted {
            self.machines[m].remove(pos);
        }
        Some((m, pos, deleted))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

pub fn read_schedule(path: impl AsRef<Path>) -> Result<Schedule> {
    Schedule::from_json(&fs::read_to_string(path)?)
}

pub fn write_schedule(schedule: &Schedule, path: impl AsRef<Path>) -> Result<()> {
    let mut text = schedule.to_json()?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Makespan and total energy consumption; both minimized.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Objectives<F = f64> {
    pub makespan: Time,
    pub tec: F,
}

impl<F: Scalar> Objectives<F> {
    pub fn new(makespan: Time, tec: F) -> Self {
        Objectives { makespan, tec }
    }

    /// Pareto dominance: no worse in both, strictly better in one.
    pub fn dominates(&self, other: &Self) -> bool {
        self.makespan <= other.makespan
            && self.tec <= other.tec
            && (self.makespan < other.makespan || self.tec < other.tec)
    }

    pub fn weakly_dominates(&self, other: &Self) -> bool {
        self.makespan <= other.makespan && self.tec <= other.tec
    }

    pub fn as_array(&self) -> [F; 2] {
        [F::from_time(self.makespan), self.tec]
    }
}

/// Load and idle energy of one machine.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MachineEnergy<F> {
    pub busy: Time,
    pub load: F,
    pub idle: F,
}

/// Per-machine energy: load is batch duration times member count times `Ep`,
/// idle is `(makespan - busy) * Es`.
pub fn machine_energy<F: Scalar>(inst: &Instance<F>, schedule: &Schedule, makespan: Time) -> Vec<MachineEnergy<F>> {
    schedule
        .lines()
        .iter()
        .enumerate()
        .map(|(m, line)| {
            let mut busy = 0;
            let mut load = F::zero();
            for b in line {
                let d = b.duration(inst, m);
                busy += d;
                load += F::from_time(d) * F::from_count(b.len()) * inst.power_load();
            }
            let idle = F::from_time(makespan.saturating_sub(busy)) * inst.power_idle();
            MachineEnergy { busy, load, idle }
        })
        .collect()
}

/// Decoded timing, indexed by [`OpId`] for per-operation data and by
/// `[machine][position]` for per-batch data.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Timing {
    pub start: Vec<Time>,
    pub end: Vec<Time>,
    pub machine: Vec<MachineId>,
    pub batch: Vec<usize>,
    pub batch_start: Vec<Vec<Time>>,
    pub batch_duration: Vec<Vec<Time>>,
    pub makespan: Time,
}

impl Timing {
    /// CSV table `job,stage,machine,batch,start,end`, one row per operation.
    pub fn to_csv(&self, n_stages: usize) -> String {
        let mut out = String::from("job,stage,machine,batch,start,end\n");
        for op in 0..self.start.len() {
            let o = Operation::from_index(op, n_stages);
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                o.job, o.stage, self.machine[op], self.batch[op], self.start[op], self.end[op]
            ));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Decoded<F> {
    pub objectives: Objectives<F>,
    pub timing: Timing,
}

/// Decodes a structurally valid schedule.
pub fn decode<F: Scalar>(inst: &Instance<F>, schedule: &Schedule) -> Result<Decoded<F>> {
    if let Some(v) = check_structure(inst, schedule) {
        return Err(Error::InfeasibleEncoding {
            machine: v.machine.unwrap_or(usize::MAX),
            batch: v.batch.unwrap_or(usize::MAX),
            reason: v.to_string(),
        });
    }
    let timing = compute_timing(inst, schedule);
    let tec = machine_energy(inst, schedule, timing.makespan)
        .iter()
        .map(|e| e.load + e.idle)
        .sum();
    Ok(Decoded {
        objectives: Objectives::new(timing.makespan, tec),
        timing,
    })
}

/// Semi-active timing without structural validation. Unplaced operations keep
/// zero times; duplicated ones keep the last placement.
pub fn compute_timing<F: Scalar>(inst: &Instance<F>, schedule: &Schedule) -> Timing {
    let s = inst.n_stages();
    let n_ops = inst.n_operations();
    let mut t = Timing {
        start: vec![0; n_ops],
        end: vec![0; n_ops],
        machine: vec![usize::MAX; n_ops],
        batch: vec![usize::MAX; n_ops],
        batch_start: vec![Vec::new(); schedule.n_machines()],
        batch_duration: vec![Vec::new(); schedule.n_machines()],
        makespan: 0,
    };
    // Stage j only waits on stage j-1 and on its own machine, so a
    // stage-by-stage sweep reaches the fixed point directly.
    for stage in 0..s {
        for m in inst.stage_machines(stage) {
            if m >= schedule.n_machines() {
                continue;
            }
            let mut ready = 0;
            for (pos, b) in schedule.line(m).iter().enumerate() {
                let release = if stage == 0 {
                    0
                } else {
                    b.jobs
                        .iter()
                        .filter(|&&i| i < inst.n_jobs())
                        .map(|&i| t.end[i * s + stage - 1])
                        .max()
                        .unwrap_or(0)
                };
                let start = ready.max(release);
                let dur = b
                    .jobs
                    .iter()
                    .filter(|&&i| i < inst.n_jobs())
                    .map(|&i| inst.pt(i, m))
                    .max()
                    .unwrap_or(0);
                for &i in b.jobs.iter().filter(|&&i| i < inst.n_jobs()) {
                    let op = i * s + stage;
                    t.start[op] = start;
                    t.end[op] = start + dur;
                    t.machine[op] = m;
                    t.batch[op] = pos;
                }
                t.batch_start[m].push(start);
                t.batch_duration[m].push(dur);
                ready = start + dur;
                t.makespan = t.makespan.max(ready);
            }
        }
    }
    t
}

/// A schedule together with its decoded timing and objectives.
#[derive(Clone, Debug, PartialEq)]
pub struct Solution<F = f64> {
    pub schedule: Schedule,
    pub objectives: Objectives<F>,
    pub timing: Timing,
}

impl<F: Scalar> Solution<F> {
    pub fn evaluate(inst: &Instance<F>, schedule: Schedule) -> Result<Self> {
        let Decoded { objectives, timing } = decode(inst, &schedule)?;
        Ok(Solution {
            schedule,
            objectives,
            timing,
        })
    }

    /// Evaluates a schedule produced by a structure-preserving operator.
    pub(crate) fn evaluate_valid(inst: &Instance<F>, schedule: Schedule) -> Self {
        match Self::evaluate(inst, schedule) {
            Ok(s) => s,
            Err(e) => panic!("operator produced an invalid encoding: {e}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Constraint {
    /// Every operation in exactly one batch of one machine of its stage.
    Assignment,
    /// Operation placed on a machine where its processing time is zero.
    Eligibility,
    /// Batch volume exceeds machine capacity.
    Capacity,
    /// Discrete-stage batch with more than one job.
    SingleJob,
    /// Batch with no jobs.
    EmptyBatch,
    /// Consecutive batches on a machine overlap.
    Overlap,
    /// Batch members do not share start and completion times.
    BatchSync,
    /// Operation starts before its previous-stage batch completes.
    Precedence,
    /// Reported makespan differs from the last completion.
    Makespan,
}

impl Constraint {
    pub fn name(self) -> &'static str {
        match self {
            Constraint::Assignment => "assignment",
            Constraint::Eligibility => "eligibility",
            Constraint::Capacity => "capacity",
            Constraint::SingleJob => "single-job",
            Constraint::EmptyBatch => "empty-batch",
            Constraint::Overlap => "overlap",
            Constraint::BatchSync => "batch-sync",
            Constraint::Precedence => "precedence",
            Constraint::Makespan => "makespan",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub constraint: Constraint,
    pub machine: Option<MachineId>,
    pub batch: Option<usize>,
    pub operation: Option<Operation>,
    pub detail: String,
}

impl Violation {
    fn new(constraint: Constraint, detail: impl Into<String>) -> Self {
        Violation {
            constraint,
            machine: None,
            batch: None,
            operation: None,
            detail: detail.into(),
        }
    }

    fn at(mut self, machine: MachineId, batch: usize) -> Self {
        self.machine = Some(machine);
        self.batch = Some(batch);
        self
    }

    fn op(mut self, op: Operation) -> Self {
        self.operation = Some(op);
        self
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} violated", self.constraint.name())?;
        if let (Some(m), Some(b)) = (self.machine, self.batch) {
            write!(f, " at machine {m} batch {b}")?;
        }
        if let Some(op) = self.operation {
            write!(f, " for {op}")?;
        }
        write!(f, ": {}", self.detail)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FeasibilityReport {
    Pass,
    Violated(Violation),
}

impl FeasibilityReport {
    pub fn is_pass(&self) -> bool {
        matches!(self, FeasibilityReport::Pass)
    }
}

/// First structural violation of the encoding, if any.
pub fn check_structure<F: Scalar>(inst: &Instance<F>, schedule: &Schedule) -> Option<Violation> {
    if schedule.n_machines() != inst.n_machines() {
        return Some(Violation::new(
            Constraint::Assignment,
            format!("{} machine lines for {} machines", schedule.n_machines(), inst.n_machines()),
        ));
    }
    let s = inst.n_stages();
    let mut seen = vec![0usize; inst.n_operations()];
    for (m, line) in schedule.lines().iter().enumerate() {
        let stage = inst.machine_stage(m);
        for (pos, b) in line.iter().enumerate() {
            if b.is_empty() {
                return Some(Violation::new(Constraint::EmptyBatch, "batch has no jobs").at(m, pos));
            }
            for &i in &b.jobs {
                if i >= inst.n_jobs() {
                    return Some(Violation::new(Constraint::Assignment, format!("unknown job {i}")).at(m, pos));
                }
                let op = Operation::new(i, stage);
                if !inst.is_eligible(i, m) {
                    return Some(
                        Violation::new(Constraint::Eligibility, "processing time is zero on this machine")
                            .at(m, pos)
                            .op(op),
                    );
                }
                seen[op.index(s)] += 1;
            }
            if inst.stage_kind(stage).is_batch() {
                let vol = b.volume(inst);
                if vol > inst.capacity(m) {
                    return Some(
                        Violation::new(
                            Constraint::Capacity,
                            format!("volume {vol} exceeds capacity {}", inst.capacity(m)),
                        )
                        .at(m, pos),
                    );
                }
            } else if b.len() > 1 {
                return Some(
                    Violation::new(Constraint::SingleJob, format!("{} jobs in a discrete-stage batch", b.len()))
                        .at(m, pos),
                );
            }
        }
    }
    seen.iter().enumerate().find(|(_, &c)| c != 1).map(|(op, &c)| {
        Violation::new(Constraint::Assignment, format!("operation placed {c} times")).op(Operation::from_index(op, s))
    })
}

/// Verifies assignment, capacity, single-job, non-overlap, batch
/// synchronization, precedence and makespan consistency of `timing`.
pub fn check_feasibility<F: Scalar>(inst: &Instance<F>, schedule: &Schedule, timing: &Timing) -> FeasibilityReport {
    if let Some(v) = check_structure(inst, schedule) {
        return FeasibilityReport::Violated(v);
    }
    let s = inst.n_stages();
    if timing.start.len() != inst.n_operations() || timing.end.len() != inst.n_operations() {
        return FeasibilityReport::Violated(Violation::new(Constraint::Assignment, "timing table is incomplete"));
    }
    for (m, line) in schedule.lines().iter().enumerate() {
        let stage = inst.machine_stage(m);
        let mut prev: Option<(Time, Time)> = None;
        for (pos, b) in line.iter().enumerate() {
            let dur = b.duration(inst, m);
            let start = timing.start[Operation::new(b.jobs[0], stage).index(s)];
            for &i in &b.jobs {
                let op = Operation::new(i, stage);
                let k = op.index(s);
                if timing.start[k] != start || timing.end[k] != start + dur {
                    return FeasibilityReport::Violated(
                        Violation::new(
                            Constraint::BatchSync,
                            format!(
                                "({}, {}) differs from batch window ({start}, {})",
                                timing.start[k],
                                timing.end[k],
                                start + dur
                            ),
                        )
                        .at(m, pos)
                        .op(op),
                    );
                }
            }
            if let Some((ps, pd)) = prev {
                if start < ps + pd {
                    return FeasibilityReport::Violated(
                        Violation::new(
                            Constraint::Overlap,
                            format!("starts at {start} before previous batch ends at {}", ps + pd),
                        )
                        .at(m, pos),
                    );
                }
            }
            prev = Some((start, dur));
        }
    }
    for i in 0..inst.n_jobs() {
        for j in 1..s {
            let (a, b) = (Operation::new(i, j - 1).index(s), Operation::new(i, j).index(s));
            if timing.start[b] < timing.end[a] {
                return FeasibilityReport::Violated(
                    Violation::new(
                        Constraint::Precedence,
                        format!("starts at {} before stage {} completes at {}", timing.start[b], j - 1, timing.end[a]),
                    )
                    .op(Operation::new(i, j)),
                );
            }
        }
    }
    let last = timing.end.iter().copied().max().unwrap_or(0);
    if last != timing.makespan {
        return FeasibilityReport::Violated(Violation::new(
            Constraint::Makespan,
            format!("reported {} but last completion is {last}", timing.makespan),
        ));
    }
    FeasibilityReport::Pass
}
