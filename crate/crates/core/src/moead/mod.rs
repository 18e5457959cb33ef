//! Decomposition-based multi-objective search (AMOEA/D) and its ablation
//! variants.

mod evolution;
mod weights;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use evolution::{crossover_with_subset, evolve, relocate_mutation, swap_mutation};
pub use weights::{aggregate, aggregate_scaled, init_weights, nearest, observe_update, rotate_half, WeightVector};

use crate::error::{Error, Result};
use crate::init::{init_population, InitStrategy};
use crate::model::Instance;
use crate::neighborhood::{makespan_search, nei_time, tec_split, MoveBudget, QController, SearchState, SearchStats, THETA_LEVELS};
use crate::scalar::Scalar;
use crate::schedule::{Objectives, Schedule, Solution};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    /// Full algorithm.
    #[serde(rename = "AMOEAD")]
    Amoead,
    /// Random initialization only.
    #[serde(rename = "AMOEAD1")]
    Amoead1,
    /// No critical-path makespan search.
    #[serde(rename = "AMOEAD2")]
    Amoead2,
    /// Classic neighborhood replacement, no re-matching, no weight rotation.
    #[serde(rename = "AMOEAD3")]
    Amoead3,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Amoead, Variant::Amoead1, Variant::Amoead2, Variant::Amoead3];
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Amoead => "AMOEAD",
            Variant::Amoead1 => "AMOEAD1",
            Variant::Amoead2 => "AMOEAD2",
            Variant::Amoead3 => "AMOEAD3",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::param("variant", format!("unknown variant {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    pub popsize: usize,
    /// Same-side updates before a weight vector rotates (L).
    pub rotation_l: usize,
    /// Neighborhood size (T).
    pub neighbors_t: usize,
    /// Q-learning rate.
    pub alpha: f64,
    /// Q-learning discount.
    pub gamma: f64,
    pub mutation_prob: f64,
    /// Stop after this many schedule decodes.
    pub budget_evals: Option<u64>,
    /// Stop after this much wall-clock time.
    pub runtime_ms: Option<u64>,
    pub variant: Variant,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            popsize: 40,
            rotation_l: 2,
            neighbors_t: 5,
            alpha: 0.1,
            gamma: 0.9,
            mutation_prob: 0.1,
            budget_evals: Some(20_000),
            runtime_ms: None,
            variant: Variant::Amoead,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        if self.popsize < 2 {
            return Err(Error::param("popsize", "must be at least 2"));
        }
        if self.neighbors_t < 2 || self.neighbors_t > self.popsize {
            return Err(Error::param("neighbors_t", format!("must lie in 2..={}", self.popsize)));
        }
        if self.rotation_l == 0 {
            return Err(Error::param("rotation_l", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.alpha) || !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::param("alpha/gamma", "must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.mutation_prob) {
            return Err(Error::param("mutation_prob", "must lie in [0, 1]"));
        }
        if self.budget_evals.is_none() && self.runtime_ms.is_none() {
            return Err(Error::param("budget", "set an evaluation budget, a runtime, or both"));
        }
        Ok(())
    }
}

/// External nondominated archive, unbounded.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Archive<F = f64> {
    members: Vec<Solution<F>>,
}

impl<F: Scalar> Archive<F> {
    pub fn new() -> Self {
        Archive { members: Vec::new() }
    }

    /// Adds `sol` unless an equal or dominating point is present; evicts what
    /// it dominates. Returns whether it was added.
    pub fn insert(&mut self, sol: &Solution<F>) -> bool {
        if self.members.iter().any(|m| m.objectives.weakly_dominates(&sol.objectives)) {
            return false;
        }
        self.members.retain(|m| !sol.objectives.dominates(&m.objectives));
        self.members.push(sol.clone());
        true
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Members sorted by makespan.
    pub fn sorted(&self) -> Vec<Solution<F>> {
        let mut v = self.members.clone();
        v.sort_by(|a, b| {
            a.objectives
                .makespan
                .cmp(&b.objectives.makespan)
                .then(a.objectives.tec.partial_cmp(&b.objectives.tec).expect("finite TEC"))
        });
        v
    }

    pub fn front(&self) -> Vec<Objectives<F>> {
        self.sorted().into_iter().map(|s| s.objectives).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UpdateRule {
    /// Replace only the best-matching neighbor, else re-match over all weights.
    Single,
    /// Replace every neighbor the offspring improves.
    Classic,
}

/// Subproblems whose incumbents the offspring `child` replaces. Objectives
/// are divided by `scale` before aggregation.
pub fn select_replacements<F: Scalar>(
    weights: &[WeightVector<F>],
    incumbents: &[[F; 2]],
    child: [F; 2],
    source: usize,
    ideal: [F; 2],
    scale: [F; 2],
    rule: UpdateRule,
) -> Vec<usize> {
    let g = |f: [F; 2], w: usize| aggregate_scaled(f, weights[w].lambda, ideal, scale);
    let better = |w: usize| g(child, w) < g(incumbents[w], w);
    match rule {
        UpdateRule::Classic => weights[source].neighbors.iter().copied().filter(|&w| better(w)).collect(),
        UpdateRule::Single => {
            let argmin = |cands: &mut dyn Iterator<Item = usize>| {
                cands
                    .min_by(|&a, &b| g(child, a).partial_cmp(&g(child, b)).expect("finite aggregate"))
                    .expect("non-empty")
            };
            let best = argmin(&mut weights[source].neighbors.iter().copied());
            if better(best) {
                return vec![best];
            }
            let best = argmin(&mut (0..weights.len()));
            if better(best) {
                vec![best]
            } else {
                Vec::new()
            }
        }
    }
}

/// Binds each individual to a distinct weight by repeatedly taking the
/// globally smallest remaining aggregate. Returns `order[w]` = individual.
pub fn greedy_matching<F: Scalar>(weights: &[WeightVector<F>], objs: &[[F; 2]], ideal: [F; 2], scale: [F; 2]) -> Vec<usize> {
    let n = weights.len();
    let mut pairs: Vec<(F, usize, usize)> = Vec::with_capacity(n * objs.len());
    for (w, wv) in weights.iter().enumerate() {
        for (k, f) in objs.iter().enumerate() {
            pairs.push((aggregate_scaled(*f, wv.lambda, ideal, scale), w, k));
        }
    }
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite aggregate").then((a.1, a.2).cmp(&(b.1, b.2))));
    let mut order = vec![usize::MAX; n];
    let mut used = vec![false; objs.len()];
    for (_, w, k) in pairs {
        if order[w] == usize::MAX && !used[k] {
            order[w] = k;
            used[k] = true;
        }
    }
    order
}

fn ideal_of<F: Scalar>(objs: impl IntoIterator<Item = [F; 2]>) -> [F; 2] {
    objs.into_iter()
        .fold([F::infinity(); 2], |z, f| [z[0].min(f[0]), z[1].min(f[1])])
}

/// Nadir minus ideal of the population; degenerate axes scale by 1.
fn population_scale<F: Scalar>(objs: &[[F; 2]], ideal: [F; 2]) -> [F; 2] {
    let mut s = [F::one(); 2];
    for k in 0..2 {
        let nadir = objs.iter().map(|f| f[k]).fold(F::neg_infinity(), F::max);
        let r = nadir - ideal[k];
        if r > F::zero() {
            s[k] = r;
        }
    }
    s
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub evaluations: u64,
    pub offspring: u64,
    pub moves_tried: u64,
    pub moves_accepted: u64,
    pub splits: u64,
    pub replacements: u64,
    /// Replacements made through the global re-match.
    pub rematches: u64,
    pub rotations: u64,
    pub max_replacements_per_offspring: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceSummary {
    pub n_jobs: usize,
    pub n_stages: usize,
    pub n_machines: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct RunReport<F = f64> {
    pub params: SolverParams,
    pub seed: u64,
    pub instance: InstanceSummary,
    pub generations: usize,
    /// Archive size after each generation.
    pub archive_sizes: Vec<usize>,
    pub ideal: [F; 2],
    pub front: Vec<Objectives<F>>,
    /// Schedules of the front, same order.
    pub schedules: Vec<Schedule>,
    pub counters: Counters,
    /// Rows are states, columns θ levels; absent when the search is disabled.
    pub q_table: Option<[[F; 5]; 4]>,
    /// Only reported in wall-clock mode so budget runs stay reproducible.
    pub wall_time_ms: Option<u64>,
}

impl<F: Scalar> RunReport<F> {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// `makespan,tec` rows.
    pub fn front_csv(&self) -> String {
        let mut out = String::from("makespan,tec\n");
        for o in &self.front {
            out.push_str(&format!("{},{}\n", o.makespan, o.tec));
        }
        out
    }
}

/// Everything a run produces.
#[derive(Clone, Debug)]
pub struct SolveOutcome<F = f64> {
    pub report: RunReport<F>,
    pub archive: Vec<Solution<F>>,
    pub population: Vec<Solution<F>>,
    pub weights: Vec<WeightVector<F>>,
}

struct Stop {
    evals: Option<u64>,
    runtime_ms: Option<u64>,
    started: Instant,
}

impl Stop {
    fn elapsed_ms(&self) -> f64 {
        self.started.elapsed().as_secs_f64() * 1e3
    }

    fn done(&self, evaluations: u64) -> bool {
        self.evals.is_some_and(|b| evaluations >= b) || self.runtime_ms.is_some_and(|r| self.elapsed_ms() >= r as f64)
    }

    /// Fraction of the run used, the larger of both clocks.
    fn progress(&self, evaluations: u64) -> f64 {
        let a = self.evals.map_or(0.0, |b| evaluations as f64 / b.max(1) as f64);
        let b = self.runtime_ms.map_or(0.0, |r| self.elapsed_ms() / r.max(1) as f64);
        a.max(b).min(1.0)
    }
}

fn objs_of<F: Scalar>(pop: &[Solution<F>]) -> Vec<[F; 2]> {
    pop.iter().map(|s| s.objectives.as_array()).collect()
}

/// Runs one solver instance. Deterministic for a fixed seed unless a
/// wall-clock limit is set.
pub fn solve<F: Scalar>(inst: &Instance<F>, params: &SolverParams, seed: u64) -> Result<SolveOutcome<F>> {
    params.validate()?;
    let stop = Stop {
        evals: params.budget_evals,
        runtime_ms: params.runtime_ms,
        started: Instant::now(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stats = SearchStats::default();
    let mut counters = Counters::default();
    let n = params.popsize;
    let strategies = if params.variant == Variant::Amoead1 {
        vec![InitStrategy::random()]
    } else {
        InitStrategy::all()
    };
    let init: Vec<Solution<F>> = init_population(inst, n, &strategies, &mut rng)
        .into_iter()
        .map(|(_, s)| s)
        .collect();
    stats.evaluations += n as u64;
    let mut archive = Archive::new();
    for s in &init {
        archive.insert(s);
    }
    let mut ideal = ideal_of(objs_of(&init));
    let mut scale = population_scale(&objs_of(&init), ideal);
    let mut weights: Vec<WeightVector<F>> = init_weights(n, params.neighbors_t)?;
    let order = greedy_matching(&weights, &objs_of(&init), ideal, scale);
    let mut pop: Vec<Solution<F>> = order.iter().map(|&k| init[k].clone()).collect();

    let search = params.variant != Variant::Amoead2;
    let rule = if params.variant == Variant::Amoead3 {
        UpdateRule::Classic
    } else {
        UpdateRule::Single
    };
    let mut controller = QController::<F>::new(F::lit(params.alpha), F::lit(params.gamma));
    let mut state = SearchState::NoGain;
    let max_machines = (0..inst.n_stages()).map(|j| inst.stage_machines(j).len()).max().unwrap_or(1);
    let mut archive_sizes = Vec::new();
    let mut generations = 0;

    'run: loop {
        for i in 0..n {
            if stop.done(stats.evaluations) {
                break 'run;
            }
            let mate = *weights[i].neighbors.choose(&mut rng).expect("non-empty neighbors");
            let child = evolve(inst, &pop[i].schedule, &pop[mate].schedule, params.mutation_prob, &mut rng);
            let mut child = stats.evaluate(inst, child);
            counters.offspring += 1;
            archive.insert(&child);
            if search {
                let action = controller.select(state, F::lit(stop.progress(stats.evaluations)), &mut rng);
                let mut budget = MoveBudget::new(nei_time(THETA_LEVELS[action], inst.n_stages(), inst.n_jobs(), max_machines));
                let searched = makespan_search(inst, &child, &mut budget, &mut rng, &mut stats);
                let d1 = searched.objectives.makespan as i64 - child.objectives.makespan as i64;
                let d2 = searched.objectives.tec - child.objectives.tec;
                state = controller.update(state, action, d1, d2);
                child = searched;
                archive.insert(&child);
            }
            child = tec_split(inst, &child, &mut stats);
            archive.insert(&child);

            let f = child.objectives.as_array();
            ideal = [ideal[0].min(f[0]), ideal[1].min(f[1])];
            let incumbents = objs_of(&pop);
            let replaced = select_replacements(&weights, &incumbents, f, i, ideal, scale, rule);
            if rule == UpdateRule::Single && replaced.first().is_some_and(|w| !weights[i].neighbors.contains(w)) {
                counters.rematches += 1;
            }
            counters.replacements += replaced.len() as u64;
            counters.max_replacements_per_offspring = counters.max_replacements_per_offspring.max(replaced.len());
            for &w in &replaced {
                pop[w] = child.clone();
                if rule == UpdateRule::Single {
                    let d = [(f[0] - ideal[0]) / scale[0], (f[1] - ideal[1]) / scale[1]];
                    if observe_update(&mut weights[w], d, params.rotation_l) {
                        weights[w].neighbors = nearest(&weights, w, params.neighbors_t);
                        counters.rotations += 1;
                    }
                }
            }
        }
        generations += 1;
        archive_sizes.push(archive.len());
        scale = population_scale(&objs_of(&pop), ideal);
        log::debug!(
            "generation {generations}: archive {} evaluations {} ideal ({}, {})",
            archive.len(),
            stats.evaluations,
            ideal[0],
            ideal[1]
        );
    }
    if archive_sizes.last() != Some(&archive.len()) {
        archive_sizes.push(archive.len());
    }

    counters.evaluations = stats.evaluations;
    counters.moves_tried = stats.moves_tried;
    counters.moves_accepted = stats.moves_accepted;
    counters.splits = stats.splits;
    let sorted = archive.sorted();
    let report = RunReport {
        params: params.clone(),
        seed,
        instance: InstanceSummary {
            n_jobs: inst.n_jobs(),
            n_stages: inst.n_stages(),
            n_machines: inst.n_machines(),
        },
        generations,
        archive_sizes,
        ideal,
        front: sorted.iter().map(|s| s.objectives).collect(),
        schedules: sorted.iter().map(|s| s.schedule.clone()).collect(),
        counters,
        q_table: search.then(|| *controller.table()),
        wall_time_ms: params.runtime_ms.map(|_| stop.started.elapsed().as_millis() as u64),
    };
    Ok(SolveOutcome {
        report,
        archive: sorted,
        population: pop,
        weights,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{generate_instance, tiny_a, GeneratorConfig};
    use crate::oracle::enumerate_pareto_oracle;
    use crate::schedule::check_feasibility;

    fn params(evals: u64, variant: Variant) -> SolverParams {
        SolverParams {
            budget_evals: Some(evals),
            variant,
            ..SolverParams::default()
        }
    }

    #[test]
    fn variant_names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.to_string().parse::<Variant>().unwrap(), v);
        }
        assert_eq!("amoead3".parse::<Variant>().unwrap(), Variant::Amoead3);
        assert!("nsga".parse::<Variant>().is_err());
    }

    #[test]
    fn params_are_validated() {
        assert!(SolverParams::default().validate().is_ok());
        let bad = [
            SolverParams { popsize: 1, ..SolverParams::default() },
            SolverParams { neighbors_t: 41, ..SolverParams::default() },
            SolverParams { alpha: 1.5, ..SolverParams::default() },
            SolverParams { budget_evals: None, ..SolverParams::default() },
        ];
        for p in bad {
            assert!(p.validate().is_err());
        }
    }

    #[test]
    fn archive_keeps_nondominated_set() {
        let inst: Instance = tiny_a();
        let mut a = Archive::new();
        let s = |v: Vec<Vec<Vec<usize>>>| Solution::evaluate(&inst, Schedule::from_vecs(v)).unwrap();
        let joint = s(vec![vec![vec![0, 1]], vec![vec![0], vec![1]]]);
        let best = s(vec![vec![vec![1], vec![0]], vec![vec![1], vec![0]]]);
        assert!(a.insert(&joint));
        assert!(!a.insert(&joint));
        assert!(a.insert(&best));
        assert_eq!(a.front(), vec![best.objectives]);
    }

    fn weights3() -> Vec<WeightVector<f64>> {
        init_weights(3, 2).unwrap()
    }

    #[test]
    fn single_rule_replaces_argmin_neighbor() {
        // λ = (0,1), (0.5,0.5), (1,0); z* = 0, unit scale
        let w = weights3();
        let inc = [[1.0, 4.0], [4.0, 4.0], [3.0, 1.0]];
        // child (2,2): g = 2, 1, 2 against incumbents' 4, 2, 3; source 1 has neighbors {1, 0}
        let r = select_replacements(&w, &inc, [2.0, 2.0], 1, [0.0, 0.0], [1.0, 1.0], UpdateRule::Single);
        assert_eq!(r, vec![1]);
        let r = select_replacements(&w, &inc, [2.0, 2.0], 1, [0.0, 0.0], [1.0, 1.0], UpdateRule::Classic);
        assert_eq!(r, vec![1, 0]);
    }

    #[test]
    fn single_rule_rematches_globally() {
        let w = weights3();
        // neighbors of 0 are {0, 1}; neither improves, weight 2 does
        let inc = [[0.0, 1.0], [1.0, 1.0], [9.0, 9.0]];
        let r = select_replacements(&w, &inc, [2.0, 5.0], 0, [0.0, 0.0], [1.0, 1.0], UpdateRule::Single);
        assert_eq!(r, vec![2]);
        // dominated by every incumbent on its best weight: no change
        let inc = [[0.0, 1.0], [1.0, 1.0], [1.0, 9.0]];
        assert!(select_replacements(&w, &inc, [2.0, 5.0], 0, [0.0, 0.0], [1.0, 1.0], UpdateRule::Single).is_empty());
    }

    #[test]
    fn child_at_ideal_replaces() {
        let w = weights3();
        let inc = [[1.0, 2.0], [2.0, 2.0], [2.0, 1.0]];
        let r = select_replacements(&w, &inc, [1.0, 1.0], 1, [1.0, 1.0], [1.0, 1.0], UpdateRule::Single);
        assert_eq!(r, vec![1]);
    }

    #[test]
    fn matching_is_a_permutation() {
        let w = init_weights::<f64>(4, 2).unwrap();
        let objs = [[3.0, 0.0], [0.0, 3.0], [1.0, 1.0], [2.0, 0.5]];
        let order = greedy_matching(&w, &objs, [0.0, 0.0], [1.0, 1.0]);
        let mut sorted = order.clone();
        sorted.sort();
        assert_eq!(sorted, vec![0, 1, 2, 3]);
        // λ = (0,1) favors the smallest f2 among the rest, λ = (1,0) the smallest f1
        assert_eq!(order[3], 1);
        assert_eq!(order[0], 0);
    }

    #[test]
    fn tiny_a_reaches_oracle_front() {
        let inst: Instance = tiny_a();
        let out = solve(&inst, &params(2_000, Variant::Amoead), 1).unwrap();
        assert_eq!(out.report.front, enumerate_pareto_oracle(&inst).unwrap());
    }

    #[test]
    fn budget_runs_are_reproducible() {
        let inst: Instance = generate_instance(&GeneratorConfig::new(8, 2, 2, 0.5, 3)).unwrap();
        let a = solve(&inst, &params(3_000, Variant::Amoead), 9).unwrap();
        let b = solve(&inst, &params(3_000, Variant::Amoead), 9).unwrap();
        assert_eq!(a.report.to_json().unwrap(), b.report.to_json().unwrap());
        assert!(a.report.wall_time_ms.is_none());
    }

    #[test]
    fn invariants_hold_for_every_variant() {
        let inst: Instance = generate_instance(&GeneratorConfig::new(8, 3, 2, 0.5, 5)).unwrap();
        for v in Variant::ALL {
            let out = solve(&inst, &params(3_000, v), 2).unwrap();
            let r = &out.report;
            for (i, a) in r.front.iter().enumerate() {
                for (j, b) in r.front.iter().enumerate() {
                    assert!(i == j || !a.dominates(b));
                }
            }
            for s in out.archive.iter().chain(&out.population) {
                assert!(check_feasibility(&inst, &s.schedule, &s.timing).is_pass());
            }
            for p in &out.population {
                assert!(r.ideal[0] <= p.objectives.makespan as f64 && r.ideal[1] <= p.objectives.tec);
            }
            for w in &out.weights {
                assert!((w.lambda[0] + w.lambda[1] - 1.0).abs() < 1e-9 && w.lambda.iter().all(|&x| x >= 0.0));
                assert_eq!(w.neighbors.len(), 5);
            }
            match v {
                Variant::Amoead3 => assert_eq!(r.counters.rotations + r.counters.rematches, 0),
                _ => assert!(r.counters.max_replacements_per_offspring <= 1),
            }
            assert_eq!(r.q_table.is_none(), v == Variant::Amoead2);
        }
    }
}
