//! Hybrid initialization: a job-sequence rule combined with a machine
//! placement rule gives 10 construction strategies, used in equal shares.

use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::model::{Instance, JobId, MachineId, Time};
use crate::scalar::Scalar;
use crate::schedule::{fits, Batch, Schedule, Solution};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum SequenceRule {
    Random,
    Kmeans,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum PlacementRule {
    /// Earliest start time.
    Mfbf,
    /// Earliest completion time.
    Mcbf,
    /// Smallest energy increase.
    Mtbf,
    /// Smallest processing time.
    Mpbf,
    /// Uniformly random machine.
    Mrbf,
}

impl PlacementRule {
    pub const ALL: [PlacementRule; 5] = [
        PlacementRule::Mfbf,
        PlacementRule::Mcbf,
        PlacementRule::Mtbf,
        PlacementRule::Mpbf,
        PlacementRule::Mrbf,
    ];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct InitStrategy {
    pub sequence: SequenceRule,
    pub placement: PlacementRule,
}

impl InitStrategy {
    /// The 10 strategies in round-robin order: all placements with RANDOM,
    /// then all with KMEANS.
    pub fn all() -> Vec<InitStrategy> {
        [SequenceRule::Random, SequenceRule::Kmeans]
            .into_iter()
            .flat_map(|sequence| PlacementRule::ALL.into_iter().map(move |placement| InitStrategy { sequence, placement }))
            .collect()
    }

    /// Purely random construction.
    pub fn random() -> InitStrategy {
        InitStrategy {
            sequence: SequenceRule::Random,
            placement: PlacementRule::Mrbf,
        }
    }
}

impl fmt::Display for InitStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}+{:?}", self.sequence, self.placement)
    }
}

fn mean_pt_features<F: Scalar>(inst: &Instance<F>) -> Vec<Vec<f64>> {
    (0..inst.n_jobs())
        .map(|i| {
            (0..inst.n_stages())
                .map(|j| {
                    let pts: Vec<Time> = inst.eligible_machines(i, j).map(|m| inst.pt(i, m)).collect();
                    pts.iter().sum::<Time>() as f64 / pts.len() as f64
                })
                .collect()
        })
        .collect()
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Lloyd's k-means. Seeds are spread evenly over the points sorted by norm,
/// so the result is deterministic. Returns non-empty clusters of point
/// indices.
pub fn kmeans(points: &[Vec<f64>], k: usize) -> Vec<Vec<usize>> {
    let n = points.len();
    if n == 0 {
        return Vec::new();
    }
    let k = k.clamp(1, n);
    let mut by_norm: Vec<usize> = (0..n).collect();
    by_norm.sort_by(|&a, &b| norm(&points[a]).total_cmp(&norm(&points[b])).then(a.cmp(&b)));
    let mut centroids: Vec<Vec<f64>> = (0..k).map(|c| points[by_norm[c * n / k]].clone()).collect();
    let mut assign = vec![usize::MAX; n];
    for _ in 0..100 {
        let mut changed = false;
        for (p, a) in points.iter().zip(assign.iter_mut()) {
            let best = (0..centroids.len())
                .min_by(|&x, &y| dist2(p, &centroids[x]).total_cmp(&dist2(p, &centroids[y])))
                .unwrap();
            if *a != best {
                *a = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        for (c, centroid) in centroids.iter_mut().enumerate() {
            let members: Vec<&Vec<f64>> = (0..n).filter(|&i| assign[i] == c).map(|i| &points[i]).collect();
            if members.is_empty() {
                continue;
            }
            for (d, v) in centroid.iter_mut().enumerate() {
                *v = members.iter().map(|m| m[d]).sum::<f64>() / members.len() as f64;
            }
        }
    }
    (0..centroids.len())
        .map(|c| (0..n).filter(|&i| assign[i] == c).collect::<Vec<_>>())
        .filter(|c| !c.is_empty())
        .collect()
}

/// Job order of the first stage.
pub fn make_sequence<F: Scalar, R: Rng>(inst: &Instance<F>, rule: SequenceRule, rng: &mut R) -> Vec<JobId> {
    let n = inst.n_jobs();
    match rule {
        SequenceRule::Random => {
            let mut seq: Vec<JobId> = (0..n).collect();
            seq.shuffle(rng);
            seq
        }
        SequenceRule::Kmeans => {
            let feats = mean_pt_features(inst);
            let mut clusters: Vec<(f64, Vec<usize>)> = kmeans(&feats, n.min(5))
                .into_iter()
                .map(|c| {
                    let dim = feats[0].len();
                    let centroid: Vec<f64> =
                        (0..dim).map(|d| c.iter().map(|&i| feats[i][d]).sum::<f64>() / c.len() as f64).collect();
                    (norm(&centroid), c)
                })
                .collect();
            clusters.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1[0].cmp(&b.1[0])));
            let mut seq = Vec::with_capacity(n);
            for (_, mut c) in clusters {
                c.shuffle(rng);
                seq.extend(c);
            }
            seq
        }
    }
}

/// Open batch state of one machine during construction.
#[derive(Clone, Copy, Debug, Default)]
struct LineState {
    /// End of the last batch.
    ready: Time,
    last_start: Time,
    last_duration: Time,
    has_batch: bool,
}

/// Effect of putting one operation on one machine.
#[derive(Clone, Copy, Debug)]
struct Outcome<F> {
    machine: MachineId,
    join: bool,
    start: Time,
    end: Time,
    energy: F,
    pt: Time,
}

fn outcome<F: Scalar>(
    inst: &Instance<F>,
    sched: &Schedule,
    state: &LineState,
    m: MachineId,
    job: JobId,
    release: Time,
) -> Outcome<F> {
    let p = inst.pt(job, m);
    let ep = inst.power_load();
    let es = inst.power_idle();
    let join = state.has_batch && fits(inst, m, sched.line(m).last().expect("line has a batch"), job);
    if join {
        let start = state.last_start.max(release);
        let dur = state.last_duration.max(p);
        let energy = F::from_time(dur - state.last_duration) * ep + F::from_time(start - state.last_start) * es;
        Outcome {
            machine: m,
            join,
            start,
            end: start + dur,
            energy,
            pt: p,
        }
    } else {
        let start = state.ready.max(release);
        Outcome {
            machine: m,
            join,
            start,
            end: start + p,
            energy: F::from_time(p) * ep + F::from_time(start - state.ready) * es,
            pt: p,
        }
    }
}

fn choose<F: Scalar, R: Rng>(rule: PlacementRule, cands: &[Outcome<F>], rng: &mut R) -> Outcome<F> {
    // min_by keeps the first minimum, i.e. the lowest machine id on ties
    let pick = |key: &dyn Fn(&Outcome<F>) -> F| {
        *cands
            .iter()
            .min_by(|a, b| key(a).partial_cmp(&key(b)).expect("finite keys"))
            .expect("eligible machine exists")
    };
    match rule {
        PlacementRule::Mfbf => pick(&|o| F::from_time(o.start)),
        PlacementRule::Mcbf => pick(&|o| F::from_time(o.end)),
        PlacementRule::Mtbf => pick(&|o| o.energy),
        PlacementRule::Mpbf => pick(&|o| F::from_time(o.pt)),
        PlacementRule::Mrbf => *cands.choose(rng).expect("eligible machine exists"),
    }
}

/// Builds a schedule stage by stage. Stage one follows `sequence`; later
/// stages take jobs by ascending release time (ties by the previous order).
/// A job joins the last batch of its chosen machine when it fits, otherwise
/// opens a new batch.
pub fn place<F: Scalar, R: Rng>(inst: &Instance<F>, sequence: &[JobId], rule: PlacementRule, rng: &mut R) -> Schedule {
    let mut sched = Schedule::empty(inst.n_machines());
    let mut release = vec![0 as Time; inst.n_jobs()];
    let mut order = sequence.to_vec();
    for stage in 0..inst.n_stages() {
        if stage > 0 {
            order.sort_by_key(|&i| release[i]);
        }
        let mut states = vec![LineState::default(); inst.n_machines()];
        for &job in &order {
            let cands: Vec<Outcome<F>> = inst
                .eligible_machines(job, stage)
                .map(|m| outcome(inst, &sched, &states[m], m, job, release[job]))
                .collect();
            let o = choose(rule, &cands, rng);
            let m = o.machine;
            let line = sched.line_mut(m);
            if o.join {
                let b = line.last_mut().unwrap();
                let at = b.jobs.partition_point(|&j| j < job);
                b.jobs.insert(at, job);
            } else {
                line.push(Batch::single(job));
            }
            states[m] = LineState {
                ready: o.end,
                last_start: o.start,
                last_duration: o.end - o.start,
                has_batch: true,
            };
        }
        // joins may have pushed earlier members back, so read releases off
        // the decoded partial schedule
        let timing = crate::schedule::compute_timing(inst, &sched);
        for i in 0..inst.n_jobs() {
            release[i] = timing.end[i * inst.n_stages() + stage];
        }
    }
    sched
}

/// One individual built with `strategy`.
pub fn construct<F: Scalar, R: Rng>(inst: &Instance<F>, strategy: InitStrategy, rng: &mut R) -> Solution<F> {
    let seq = make_sequence(inst, strategy.sequence, rng);
    Solution::evaluate_valid(inst, place(inst, &seq, strategy.placement, rng))
}

/// `popsize` individuals, strategies assigned round-robin in the given order.
pub fn init_population<F: Scalar, R: Rng>(
    inst: &Instance<F>,
    popsize: usize,
    strategies: &[InitStrategy],
    rng: &mut R,
) -> Vec<(InitStrategy, Solution<F>)> {
    (0..popsize)
        .map(|i| {
            let s = strategies[i % strategies.len()];
            (s, construct(inst, s, rng))
        })
        .collect()
}

/// Uniformly shaped random encoding: per stage a random job order, each job
/// on a random eligible machine, joining a random fitting batch there or
/// opening a new batch at a random position.
pub fn random_schedule<F: Scalar, R: Rng>(inst: &Instance<F>, rng: &mut R) -> Schedule {
    let mut sched = Schedule::empty(inst.n_machines());
    let mut jobs: Vec<JobId> = (0..inst.n_jobs()).collect();
    for stage in 0..inst.n_stages() {
        jobs.shuffle(rng);
        for &job in &jobs {
            let machines: Vec<MachineId> = inst.eligible_machines(job, stage).collect();
            let m = *machines.choose(rng).expect("eligible machine exists");
            let fitting: Vec<usize> = sched
                .line(m)
                .iter()
                .enumerate()
                .filter(|(_, b)| fits(inst, m, b, job))
                .map(|(p, _)| p)
                .collect();
            let line = sched.line_mut(m);
            let options = fitting.len() + line.len() + 1;
            let pick = rng.gen_range(0..options);
            if pick < fitting.len() {
                let b = &mut line[fitting[pick]].jobs;
                let at = b.partition_point(|&j| j < job);
                b.insert(at, job);
            } else {
                line.insert(pick - fitting.len(), Batch::single(job));
            }
        }
    }
    sched
}

pub fn random_solution<F: Scalar, R: Rng>(inst: &Instance<F>, rng: &mut R) -> Solution<F> {
    Solution::evaluate_valid(inst, random_schedule(inst, rng))
}
