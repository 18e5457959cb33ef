//! Batch-aware disjunctive graph of a schedule.
//!
//! Nodes are the operations plus a source and a sink, weighted by the
//! operation's processing time on its machine. Three arc sets link them:
//!
//! * process arcs join consecutive operations of a job,
//! * machine arcs join every member of a batch to every member of the next
//!   batch on the same machine,
//! * batch arcs join every member of the previous-stage batches of an
//!   operation's batch-mates to that operation.
//!
//! Earliest starts `f_v` come from a forward longest-path pass, tails `t_v`
//! (longest path to the sink, excluding `pt_v`) from a backward pass.

use std::collections::HashSet;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::{Instance, MachineId, Time};
use crate::scalar::Scalar;
use crate::schedule::{OpId, Operation, Schedule};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ArcKind {
    Process,
    Machine,
    Batch,
}

impl ArcKind {
    pub fn tag(self) -> char {
        match self {
            ArcKind::Process => 'A',
            ArcKind::Machine => 'E',
            ArcKind::Batch => 'B',
        }
    }
}

#[derive(Clone, Debug)]
pub struct DisjunctiveGraph {
    n_ops: usize,
    n_stages: usize,
    weight: Vec<Time>,
    preds: Vec<Vec<usize>>,
    succs: Vec<Vec<usize>>,
    arcs: Vec<(usize, usize, ArcKind)>,
    earliest: Vec<Time>,
    tail: Vec<Time>,
}

/// An operation taken off its machine together with the weight it keeps in
/// the reduced graph.
#[derive(Clone, Copy, Debug)]
pub struct Detached {
    pub op: Operation,
    pub weight: Time,
}

impl DisjunctiveGraph {
    /// Builds the graph of a complete schedule and computes its labels.
    pub fn build<F: Scalar>(inst: &Instance<F>, schedule: &Schedule) -> Result<Self> {
        Self::build_inner(inst, schedule, None)
    }

    /// Builds the reduced graph in which `detached` is on no machine: it keeps
    /// only its process arcs, and no machine or batch arc touches it.
    pub fn build_reduced<F: Scalar>(inst: &Instance<F>, schedule: &Schedule, detached: Detached) -> Result<Self> {
        Self::build_inner(inst, schedule, Some(detached))
    }

    fn build_inner<F: Scalar>(inst: &Instance<F>, schedule: &Schedule, detached: Option<Detached>) -> Result<Self> {
        let s = inst.n_stages();
        let n_ops = inst.n_operations();
        let source = n_ops;
        let sink = n_ops + 1;
        let mut weight = vec![0; n_ops + 2];
        // (machine, position) per operation
        let mut place: Vec<Option<(MachineId, usize)>> = vec![None; n_ops];
        for (m, line) in schedule.lines().iter().enumerate() {
            let stage = inst.machine_stage(m);
            for (pos, b) in line.iter().enumerate() {
                for &i in &b.jobs {
                    let op = Operation::new(i, stage).index(s);
                    place[op] = Some((m, pos));
                    weight[op] = inst.pt(i, m);
                }
            }
        }
        if let Some(d) = detached {
            let k = d.op.index(s);
            debug_assert!(place[k].is_none(), "detached operation still placed");
            weight[k] = d.weight;
        }

        let mut arcs = Vec::new();
        for i in 0..inst.n_jobs() {
            arcs.push((source, Operation::new(i, 0).index(s), ArcKind::Process));
            for j in 1..s {
                arcs.push((Operation::new(i, j - 1).index(s), Operation::new(i, j).index(s), ArcKind::Process));
            }
            arcs.push((Operation::new(i, s - 1).index(s), sink, ArcKind::Process));
        }
        for (m, line) in schedule.lines().iter().enumerate() {
            let stage = inst.machine_stage(m);
            for pair in line.windows(2) {
                for &a in &pair[0].jobs {
                    for &b in &pair[1].jobs {
                        arcs.push((Operation::new(a, stage).index(s), Operation::new(b, stage).index(s), ArcKind::Machine));
                    }
                }
            }
            if stage == 0 {
                continue;
            }
            for b in line {
                // union of the previous-stage batches of all batch-mates
                let mut sources: Vec<OpId> = Vec::new();
                for &mate in &b.jobs {
                    let prev = Operation::new(mate, stage - 1).index(s);
                    if let Some((pm, ppos)) = place[prev] {
                        for &u in &schedule.line(pm)[ppos].jobs {
                            let src = Operation::new(u, stage - 1).index(s);
                            if !sources.contains(&src) {
                                sources.push(src);
                            }
                        }
                    }
                }
                for &i in &b.jobs {
                    let dst = Operation::new(i, stage).index(s);
                    for &src in &sources {
                        arcs.push((src, dst, ArcKind::Batch));
                    }
                }
            }
        }

        let n = n_ops + 2;
        let mut preds = vec![Vec::new(); n];
        let mut succs = vec![Vec::new(); n];
        let mut seen = HashSet::with_capacity(arcs.len());
        for &(u, v, _) in &arcs {
            if seen.insert((u, v)) {
                preds[v].push(u);
                succs[u].push(v);
            }
        }

        let mut g = DisjunctiveGraph {
            n_ops,
            n_stages: s,
            weight,
            preds,
            succs,
            arcs,
            earliest: vec![0; n],
            tail: vec![0; n],
        };
        g.compute_labels()?;
        Ok(g)
    }

    fn topological_order(&self) -> Result<Vec<usize>> {
        let n = self.weight.len();
        let mut indeg: Vec<usize> = self.preds.iter().map(Vec::len).collect();
        let mut stack: Vec<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = stack.pop() {
            order.push(v);
            for &w in &self.succs[v] {
                indeg[w] -= 1;
                if indeg[w] == 0 {
                    stack.push(w);
                }
            }
        }
        if order.len() != n {
            return Err(Error::CyclicGraph);
        }
        Ok(order)
    }

    fn compute_labels(&mut self) -> Result<()> {
        let order = self.topological_order()?;
        for &v in &order {
            self.earliest[v] = self.preds[v]
                .iter()
                .map(|&q| self.earliest[q] + self.weight[q])
                .max()
                .unwrap_or(0);
        }
        for &v in order.iter().rev() {
            self.tail[v] = self.succs[v]
                .iter()
                .map(|&p| self.weight[p] + self.tail[p])
                .max()
                .unwrap_or(0);
        }
        Ok(())
    }

    pub fn n_operations(&self) -> usize {
        self.n_ops
    }

    pub fn source(&self) -> usize {
        self.n_ops
    }

    pub fn sink(&self) -> usize {
        self.n_ops + 1
    }

    pub fn weight(&self, node: usize) -> Time {
        self.weight[node]
    }

    pub fn predecessors(&self, node: usize) -> &[usize] {
        &self.preds[node]
    }

    pub fn successors(&self, node: usize) -> &[usize] {
        &self.succs[node]
    }

    pub fn arcs(&self) -> &[(usize, usize, ArcKind)] {
        &self.arcs
    }

    /// Whether the arc u -> v exists, irrespective of its kind.
    pub fn has_arc(&self, u: usize, v: usize) -> bool {
        self.succs[u].contains(&v)
    }

    /// Earliest start `f_v = L(s, v)`.
    pub fn earliest(&self, node: usize) -> Time {
        self.earliest[node]
    }

    /// Tail `t_v = L(v, e)`, not counting `pt_v`.
    pub fn tail(&self, node: usize) -> Time {
        self.tail[node]
    }

    /// Latest start that keeps the makespan: `C_max - pt_v - t_v`.
    pub fn latest(&self, node: usize) -> Time {
        self.makespan() - self.weight[node] - self.tail[node]
    }

    /// `L(s, e)`.
    pub fn makespan(&self) -> Time {
        self.earliest[self.sink()]
    }

    pub fn is_critical(&self, node: usize) -> bool {
        self.earliest[node] + self.weight[node] + self.tail[node] == self.makespan()
    }

    /// Operations with `f_v + pt_v + t_v = C_max`, ascending.
    pub fn critical_operations(&self) -> Vec<OpId> {
        (0..self.n_ops).filter(|&v| self.is_critical(v)).collect()
    }

    /// Plain-text edge list (`<tag> <from> <to>` per line) for graph viewers.
    pub fn edge_list(&self) -> String {
        let name = |v: usize| -> String {
            if v == self.source() {
                "s".into()
            } else if v == self.sink() {
                "e".into()
            } else {
                let o = Operation::from_index(v, self.n_stages);
                format!("O{}_{}", o.job, o.stage)
            }
        };
        let mut out = String::new();
        let mut seen = HashSet::new();
        for &(u, v, k) in &self.arcs {
            if seen.insert((u, v, k)) {
                let _ = writeln!(out, "{} {} {}", k.tag(), name(u), name(v));
            }
        }
        out
    }
}

/// Maximal run of consecutive critical batches on one machine.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CriticalBlock {
    pub machine: MachineId,
    pub first: usize,
    pub len: usize,
}

impl CriticalBlock {
    pub fn positions(&self) -> std::ops::Range<usize> {
        self.first..self.first + self.len
    }
}

/// All critical blocks, singletons included, ordered by machine then position.
/// A batch is critical when any member is a critical operation.
pub fn critical_blocks<F: Scalar>(inst: &Instance<F>, graph: &DisjunctiveGraph, schedule: &Schedule) -> Vec<CriticalBlock> {
    let s = inst.n_stages();
    let mut blocks = Vec::new();
    for (m, line) in schedule.lines().iter().enumerate() {
        let stage = inst.machine_stage(m);
        let mut run: Option<CriticalBlock> = None;
        for (pos, b) in line.iter().enumerate() {
            let critical = b.jobs.iter().any(|&i| graph.is_critical(Operation::new(i, stage).index(s)));
            match (&mut run, critical) {
                (Some(r), true) => r.len += 1,
                (None, true) => {
                    run = Some(CriticalBlock {
                        machine: m,
                        first: pos,
                        len: 1,
                    })
                }
                (Some(_), false) => blocks.extend(run.take()),
                (None, false) => {}
            }
        }
        blocks.extend(run);
    }
    blocks
}
