//! N6 moves over critical blocks: move a non-head batch of a block to the
//! block head, or the head to a later position inside the block.

use crate::graph::critical_blocks;
use crate::model::{Instance, MachineId};
use crate::scalar::Scalar;
use crate::schedule::{Schedule, Solution};

use super::{graph_of, MoveBudget, MoveEvaluation, MoveKind, SearchStats};

/// Candidate N6 moves of a schedule as (machine, from, to) batch positions.
pub fn n6_moves<F: Scalar>(inst: &Instance<F>, schedule: &Schedule) -> Vec<(MachineId, usize, usize)> {
    let g = graph_of(inst, schedule);
    let mut moves = Vec::new();
    for block in critical_blocks(inst, &g, schedule) {
        if block.len < 2 {
            continue;
        }
        let head = block.first;
        for pos in head + 1..head + block.len {
            moves.push((block.machine, pos, head));
        }
        for pos in head + 1..head + block.len {
            moves.push((block.machine, head, pos));
        }
    }
    moves
}

fn relocate(schedule: &Schedule, machine: MachineId, from: usize, to: usize) -> Schedule {
    let mut out = schedule.clone();
    let line = out.line_mut(machine);
    let b = line.remove(from);
    line.insert(to, b);
    out
}

/// Applies dominating N6 moves until a full sweep finds none or the budget
/// runs out. Each evaluated move costs one credit.
pub fn n6_search<F: Scalar>(
    inst: &Instance<F>,
    start: &Solution<F>,
    budget: &mut MoveBudget,
    stats: &mut SearchStats,
) -> Solution<F> {
    let mut cur = start.clone();
    'sweep: loop {
        for (m, from, to) in n6_moves(inst, &cur.schedule) {
            if !budget.spend() {
                break 'sweep;
            }
            let cand = stats.evaluate(inst, relocate(&cur.schedule, m, from, to));
            stats.moves_tried += 1;
            let accepted = cand.objectives.dominates(&cur.objectives);
            MoveEvaluation {
                kind: MoveKind::N6,
                machine: Some(m),
                position: Some(from),
                operation: None,
                score: None,
                objectives: cand.objectives,
                accepted,
            }
            .trace(&cur.objectives);
            if accepted {
                stats.moves_accepted += 1;
                cur = cand;
                continue 'sweep;
            }
        }
        break;
    }
    cur
}
