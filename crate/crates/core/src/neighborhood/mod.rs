//! Critical-path local search for makespan, batch splitting for energy, and
//! the Q-learning controller that sizes the makespan search.

mod controller;
mod insertion;
mod n6;
mod recombination;
mod split;

use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;

pub use controller::{nei_time, QController, SearchState, THETA_LEVELS};
pub use insertion::{
    batch_insertion, detach, insert_at, insertion_candidates, reinsert_min_bv, InsertionCandidate, Reinsertion,
};
pub use n6::{n6_moves, n6_search};
pub use recombination::{batch_recombination, best_pull, pull_candidates, PullCandidate};
pub use split::{tec_split, tec_split_traced, SplitRecord};

use crate::graph::DisjunctiveGraph;
use crate::model::{Instance, MachineId};
use crate::scalar::Scalar;
use crate::schedule::{Objectives, Operation, Schedule, Solution};

/// Move-evaluation credits for one makespan search (`NeiTime`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MoveBudget {
    limit: u64,
    used: u64,
}

impl MoveBudget {
    pub fn new(limit: u64) -> Self {
        MoveBudget { limit, used: 0 }
    }

    pub fn exhausted(&self) -> bool {
        self.used >= self.limit
    }

    /// Takes one credit; false once the budget is spent.
    pub fn spend(&mut self) -> bool {
        if self.exhausted() {
            return false;
        }
        self.used += 1;
        true
    }

    pub fn used(&self) -> u64 {
        self.used
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }
}

/// Counters shared by all search operators of one solver run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SearchStats {
    /// Schedules decoded.
    pub evaluations: u64,
    pub moves_tried: u64,
    pub moves_accepted: u64,
    pub splits: u64,
}

impl SearchStats {
    pub(crate) fn evaluate<F: Scalar>(&mut self, inst: &Instance<F>, schedule: Schedule) -> Solution<F> {
        self.evaluations += 1;
        Solution::evaluate_valid(inst, schedule)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MoveKind {
    N6,
    Insertion,
    Recombination,
    Split,
}

impl fmt::Display for MoveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MoveKind::N6 => "n6",
            MoveKind::Insertion => "insertion",
            MoveKind::Recombination => "recombination",
            MoveKind::Split => "split",
        })
    }
}

/// One evaluated neighbor; emitted to the move trace.
#[derive(Clone, Debug, PartialEq)]
pub struct MoveEvaluation<F> {
    pub kind: MoveKind,
    pub machine: Option<MachineId>,
    pub position: Option<usize>,
    pub operation: Option<Operation>,
    /// BV or RV when the move was ranked by one.
    pub score: Option<i64>,
    pub objectives: Objectives<F>,
    pub accepted: bool,
}

impl<F: Scalar> MoveEvaluation<F> {
    pub(crate) fn trace(&self, before: &Objectives<F>) {
        log::trace!(
            "move kind={} machine={:?} position={:?} op={} score={:?} df1={} df2={} accepted={}",
            self.kind,
            self.machine,
            self.position,
            self.operation.map(|o| o.to_string()).unwrap_or_else(|| "-".into()),
            self.score,
            self.objectives.makespan as i64 - before.makespan as i64,
            self.objectives.tec - before.tec,
            self.accepted
        );
    }
}

pub(crate) fn graph_of<F: Scalar>(inst: &Instance<F>, schedule: &Schedule) -> DisjunctiveGraph {
    match DisjunctiveGraph::build(inst, schedule) {
        Ok(g) => g,
        Err(e) => panic!("disjunctive graph of a valid schedule: {e}"),
    }
}

fn critical_by_stage<F: Scalar>(inst: &Instance<F>, sol: &Solution<F>) -> Vec<Vec<Operation>> {
    let s = inst.n_stages();
    let g = graph_of(inst, &sol.schedule);
    let mut by_stage = vec![Vec::new(); s];
    for v in g.critical_operations() {
        let op = Operation::from_index(v, s);
        by_stage[op.stage].push(op);
    }
    by_stage
}

/// Critical-path neighborhood search for makespan under a move budget.
///
/// Phase one sweeps N6 moves over the critical blocks until a sweep brings no
/// improvement. Phase two alternates batch insertion and batch recombination
/// of one random critical operation per stage. Only dominating neighbors are
/// accepted, so the result is never dominated by the input.
pub fn makespan_search<F: Scalar, R: Rng>(
    inst: &Instance<F>,
    start: &Solution<F>,
    budget: &mut MoveBudget,
    rng: &mut R,
    stats: &mut SearchStats,
) -> Solution<F> {
    let mut cur = n6_search(inst, start, budget, stats);
    let mut critical = critical_by_stage(inst, &cur);
    type Operator<F> = fn(&Instance<F>, &Solution<F>, Operation, &mut SearchStats) -> Solution<F>;
    let operators: [(MoveKind, Operator<F>); 2] = [
        (MoveKind::Insertion, batch_insertion::<F>),
        (MoveKind::Recombination, batch_recombination::<F>),
    ];
    while !budget.exhausted() {
        for &(kind, op_fn) in &operators {
            for stage in 0..inst.n_stages() {
                let Some(&op) = critical[stage].choose(rng) else {
                    continue;
                };
                if !budget.spend() {
                    return cur;
                }
                let cand = op_fn(inst, &cur, op, stats);
                stats.moves_tried += 1;
                let accepted = cand.objectives.dominates(&cur.objectives);
                MoveEvaluation {
                    kind,
                    machine: None,
                    position: None,
                    operation: Some(op),
                    score: None,
                    objectives: cand.objectives,
                    accepted,
                }
                .trace(&cur.objectives);
                if accepted {
                    stats.moves_accepted += 1;
                    cur = cand;
                    critical = critical_by_stage(inst, &cur);
                }
            }
        }
    }
    cur
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{generate_instance, GeneratorConfig};
    use crate::schedule::check_feasibility;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn budget_counts_down() {
        let mut b = MoveBudget::new(2);
        assert!(b.spend());
        assert!(b.spend());
        assert!(!b.spend());
        assert!(b.exhausted());
        assert_eq!(b.used(), 2);
    }

    #[test]
    fn search_never_returns_a_dominated_schedule() {
        for seed in 0..30 {
            let inst: Instance = generate_instance(&GeneratorConfig::new(6, 3, 2, 0.5, seed)).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let start = crate::init::random_solution(&inst, &mut rng);
            let mut stats = SearchStats::default();
            let mut budget = MoveBudget::new(40);
            let out = makespan_search(&inst, &start, &mut budget, &mut rng, &mut stats);
            assert!(!start.objectives.dominates(&out.objectives));
            assert!(out == start || out.objectives.dominates(&start.objectives));
            assert!(check_feasibility(&inst, &out.schedule, &out.timing).is_pass());
            assert!(budget.used() <= 40);
        }
    }
}
