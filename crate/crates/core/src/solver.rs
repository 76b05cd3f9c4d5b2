//! Branch-and-cut over the max-cut formulation.
//!
//! The root relaxation has bounds only. Odd-cycle and transitivity
//! inequalities are separated on demand and kept in a shared pool; rows that
//! stay slack for a while leave the LP but remain in the pool. Open nodes are
//! processed best bound first.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::heuristic::barycenter_heuristic;
use crate::instance::{count_crossings, validate_instance, MlcmInstance, Solution};
use crate::lp::{DualSimplex, LpStatus, RelaxationBackend, RowId, Sense};
use crate::maxcut::{
    build_maxcut, cut_consistency, cut_to_solution, separate_odd_cycles, separate_transitivity, MaxCutGraph,
    OddCycleInequality,
};
use crate::model::{build_model_with_order, identify_variables, OrderingModel, ReducedModel};
use crate::transform::{merge_layers, MergeMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BranchingRule {
    /// Value nearest 0.5, lowest index on ties; class variables first.
    MostFractional,
    /// Lowest index with a fractional value.
    FirstFractional,
}

#[derive(Debug, Clone)]
pub struct SolveConfig {
    pub time_limit: Duration,
    pub tolerance: f64,
    pub max_cuts_per_round: usize,
    pub branching: BranchingRule,
    /// Only used to break ties in parallel scheduling; the serial solver is
    /// deterministic regardless.
    pub seed: u64,
    pub merge_layers: bool,
    pub heuristic_sweeps: usize,
    pub threads: usize,
    /// Rows slack by more than this ...
    pub inactive_slack: f64,
    /// ... for this many consecutive LPs leave the relaxation.
    pub inactive_rounds: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            time_limit: Duration::from_secs(3600),
            tolerance: 1e-6,
            max_cuts_per_round: 500,
            branching: BranchingRule::MostFractional,
            seed: 0,
            merge_layers: true,
            heuristic_sweeps: 20,
            threads: 1,
            inactive_slack: 0.1,
            inactive_rounds: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    /// Heuristic answer with a lower bound, no search performed.
    Feasible,
    InfeasibleInput,
    Timeout,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub n_var: usize,
    pub n_oddc: usize,
    pub n_trans: usize,
    pub n_sub: usize,
    #[serde(rename = "n_LPs")]
    pub n_lps: usize,
    /// Wall time in seconds.
    pub time: f64,
}

#[derive(Debug, Clone)]
pub struct OptResult {
    pub status: SolveStatus,
    pub solution: Option<Solution>,
    pub crossings: Option<u64>,
    pub lower_bound: u64,
    pub stats: SolveStats,
    /// Validation report text for rejected input.
    pub message: Option<String>,
}

/// Prepared problem shared by all workers.
struct Problem<'a> {
    merged: &'a MlcmInstance,
    model: OrderingModel,
    reduced: ReducedModel,
    graph: MaxCutGraph,
    config: &'a SolveConfig,
    start: Instant,
    /// Root edge fixed to 0 against the complement symmetry.
    fixed_root: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum CutKey {
    Odd(Vec<(usize, bool)>),
    Trans(usize, bool),
}

#[derive(Debug, Clone)]
struct Cut {
    coeffs: Vec<(usize, f64)>,
    rhs: f64,
}

impl Cut {
    fn violation(&self, y: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(e, a)| a * y[e]).sum::<f64>() - self.rhs
    }

    fn odd(c: &OddCycleInequality) -> Cut {
        Cut {
            coeffs: c.coefficients(),
            rhs: c.rhs(),
        }
    }

    /// Upper `x_a + x_b - x_c <= 1`, lower `-x_a - x_b + x_c <= 0`.
    fn transitivity(problem: &Problem, triple: usize, upper: bool) -> Cut {
        let t = problem.reduced.triples[triple];
        let s = if upper { 1.0 } else { -1.0 };
        let mut acc: HashMap<usize, f64> = HashMap::new();
        for (class, a) in [(t.a, s), (t.b, s), (t.c, -s)] {
            *acc.entry(problem.graph.root_edge(class)).or_insert(0.0) += a;
        }
        let mut coeffs: Vec<(usize, f64)> = acc.into_iter().filter(|&(_, a)| a != 0.0).collect();
        coeffs.sort_by_key(|&(e, _)| e);
        Cut {
            coeffs,
            rhs: if upper { 1.0 } else { 0.0 },
        }
    }
}

#[derive(Debug, Clone)]
struct OpenNode {
    bound: f64,
    id: u64,
    fixings: Vec<(usize, bool)>,
}

impl PartialEq for OpenNode {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for OpenNode {}

impl Ord for OpenNode {
    // max-heap: the smallest bound, then the oldest node, comes first
    fn cmp(&self, other: &Self) -> Ordering {
        other.bound.total_cmp(&self.bound).then_with(|| other.id.cmp(&self.id))
    }
}

impl PartialOrd for OpenNode {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Shared {
    heap: BinaryHeap<OpenNode>,
    /// Bound of the node each worker is processing.
    active: Vec<Option<f64>>,
    next_id: u64,
    incumbent: i64,
    best: Solution,
    pool: Vec<Cut>,
    pool_keys: HashMap<CutKey, usize>,
    stats: SolveStats,
    timed_out: bool,
}

enum Outcome {
    Pruned,
    Integral(i64, Vec<bool>),
    Branch(f64, usize),
    Interrupted(f64),
}

fn bound_to_int(bound: f64) -> i64 {
    (bound - 1e-6).ceil() as i64
}

struct Worker<'p> {
    problem: &'p Problem<'p>,
    lp: &'p mut dyn RelaxationBackend,
    /// Pool index -> (row, consecutive slack LPs).
    rows: HashMap<usize, (RowId, usize)>,
    current: Vec<Option<bool>>,
}

impl<'p> Worker<'p> {
    fn new(problem: &'p Problem<'p>, lp: &'p mut dyn RelaxationBackend) -> Self {
        let g = &problem.graph;
        let cost: Vec<f64> = g.edges.iter().map(|e| e.weight as f64).collect();
        let n = cost.len();
        lp.load(&cost, &vec![0.0; n], &vec![1.0; n]);
        let mut current = vec![None; n];
        if let Some(e) = problem.fixed_root {
            lp.set_bounds(e, 0.0, 0.0);
            current[e] = Some(false);
        }
        Worker {
            problem,
            lp,
            rows: HashMap::new(),
            current,
        }
    }

    fn apply_fixings(&mut self, fixings: &[(usize, bool)]) {
        let mut want: Vec<Option<bool>> = vec![None; self.current.len()];
        if let Some(e) = self.problem.fixed_root {
            want[e] = Some(false);
        }
        for &(e, v) in fixings {
            want[e] = Some(v);
        }
        for (e, w) in want.into_iter().enumerate() {
            if w != self.current[e] {
                let (l, u) = match w {
                    None => (0.0, 1.0),
                    Some(false) => (0.0, 0.0),
                    Some(true) => (1.0, 1.0),
                };
                self.lp.set_bounds(e, l, u);
                self.current[e] = w;
            }
        }
    }

    fn add_local(&mut self, idx: usize, cut: &Cut) {
        if !self.rows.contains_key(&idx) {
            let id = self.lp.add_row(&cut.coeffs, Sense::Le, cut.rhs);
            self.rows.insert(idx, (id, 0));
        }
    }

    /// Ages rows after an LP solve and drops long inactive ones.
    fn age_rows(&mut self, shared: &Mutex<Shared>) {
        let limit = self.problem.config.inactive_rounds;
        let slack_limit = self.problem.config.inactive_slack;
        let pool: Vec<(usize, f64)> = {
            let s = shared.lock().unwrap();
            self.rows.keys().map(|&idx| (idx, s.pool[idx].rhs)).collect()
        };
        let mut drop = Vec::new();
        for (idx, rhs) in pool {
            let entry = self.rows.get_mut(&idx).unwrap();
            let activity = self.lp.row_activity(entry.0).unwrap_or(rhs);
            if rhs - activity > slack_limit {
                entry.1 += 1;
                if entry.1 >= limit {
                    drop.push(idx);
                }
            } else {
                entry.1 = 0;
            }
        }
        if !drop.is_empty() {
            let ids: Vec<RowId> = drop.iter().map(|idx| self.rows.remove(idx).unwrap().0).collect();
            self.lp.remove_rows(&ids);
        }
    }

    /// Adds separated cuts to the shared pool and to the local LP. Returns
    /// how many rows were added locally.
    fn add_cuts(&mut self, shared: &Mutex<Shared>, cuts: Vec<(CutKey, Cut)>) -> usize {
        let mut indices = Vec::with_capacity(cuts.len());
        {
            let mut s = shared.lock().unwrap();
            for (key, cut) in cuts {
                let idx = match s.pool_keys.get(&key) {
                    Some(&idx) => idx,
                    None => {
                        let idx = s.pool.len();
                        match key {
                            CutKey::Odd(_) => s.stats.n_oddc += 1,
                            CutKey::Trans(..) => s.stats.n_trans += 1,
                        }
                        s.pool.push(cut);
                        s.pool_keys.insert(key, idx);
                        idx
                    }
                };
                indices.push(idx);
            }
        }
        let mut added = 0;
        let s = shared.lock().unwrap();
        for idx in indices {
            if !self.rows.contains_key(&idx) {
                let cut = s.pool[idx].clone();
                self.add_local(idx, &cut);
                added += 1;
            }
        }
        added
    }

    fn separate(&self, y: &[f64]) -> Vec<(CutKey, Cut)> {
        let p = self.problem;
        let tol = p.config.tolerance;
        let max = p.config.max_cuts_per_round;
        let mut cuts: Vec<(CutKey, Cut)> = separate_odd_cycles(&p.graph, y, tol, max)
            .into_iter()
            .map(|c| (CutKey::Odd(c.key()), Cut::odd(&c)))
            .collect();
        for t in separate_transitivity(&p.reduced, &p.graph, y, tol).into_iter().take(max) {
            cuts.push((CutKey::Trans(t.triple, t.upper), Cut::transitivity(p, t.triple, t.upper)));
        }
        cuts
    }

    /// Pool cuts missing from the local LP that `y` violates.
    fn pool_violations(&self, shared: &Mutex<Shared>, y: &[f64]) -> Vec<usize> {
        let tol = self.problem.config.tolerance;
        let s = shared.lock().unwrap();
        (0..s.pool.len())
            .filter(|idx| !self.rows.contains_key(idx) && s.pool[*idx].violation(y) > tol)
            .take(self.problem.config.max_cuts_per_round)
            .collect()
    }

    fn timed_out(&self) -> bool {
        self.problem.start.elapsed() >= self.problem.config.time_limit
    }

    fn choose_branch(&self, y: &[f64]) -> Option<usize> {
        let tol = self.problem.config.tolerance;
        let classes = self.problem.graph.class_count();
        let frac = |e: &usize| self.current[*e].is_none() && y[*e] > tol && y[*e] < 1.0 - tol;
        let pick = |range: std::ops::Range<usize>| -> Option<usize> {
            match self.problem.config.branching {
                BranchingRule::FirstFractional => range.clone().find(frac),
                BranchingRule::MostFractional => range
                    .filter(frac)
                    .min_by(|&a, &b| (y[a] - 0.5).abs().total_cmp(&(y[b] - 0.5).abs()).then(a.cmp(&b))),
            }
        };
        pick(0..classes).or_else(|| pick(classes..y.len()))
    }

    /// Class values are all fixed: evaluate the node directly.
    fn evaluate_fixed(&self) -> Outcome {
        let p = self.problem;
        let x: Vec<bool> = (0..p.graph.class_count())
            .map(|c| self.current[p.graph.root_edge(c)] == Some(true))
            .collect();
        if !p.reduced.is_transitive(&x) {
            return Outcome::Pruned;
        }
        let y = p.graph.cut_from_assignment(&x);
        Outcome::Integral(p.graph.integral_objective(&y), y)
    }

    fn process(&mut self, node: &OpenNode, shared: &Mutex<Shared>) -> Outcome {
        let p = self.problem;
        let tol = p.config.tolerance;
        self.apply_fixings(&node.fixings);
        let mut bound = node.bound;
        loop {
            if self.timed_out() {
                return Outcome::Interrupted(bound);
            }
            let status = self.lp.solve();
            let incumbent = {
                let mut s = shared.lock().unwrap();
                s.stats.n_lps += 1;
                s.incumbent
            };
            match status {
                LpStatus::Infeasible => return Outcome::Pruned,
                LpStatus::NumericalFailure => {
                    let classes = p.graph.class_count();
                    return match (0..classes).map(|c| p.graph.root_edge(c)).find(|&e| self.current[e].is_none()) {
                        Some(e) => Outcome::Branch(bound, e),
                        None => self.evaluate_fixed(),
                    };
                }
                LpStatus::Optimal => {}
            }
            let z = self.lp.objective() + p.graph.offset as f64;
            bound = bound.max(z);
            if bound_to_int(bound) >= incumbent {
                return Outcome::Pruned;
            }
            self.age_rows(shared);
            let y = self.lp.primal();
            let from_pool = self.pool_violations(shared, &y);
            if !from_pool.is_empty() {
                let s = shared.lock().unwrap();
                let cuts: Vec<(usize, Cut)> = from_pool.into_iter().map(|i| (i, s.pool[i].clone())).collect();
                drop(s);
                for (i, c) in cuts {
                    self.add_local(i, &c);
                }
                continue;
            }
            let cuts = self.separate(&y);
            if !cuts.is_empty() && self.add_cuts(shared, cuts) > 0 {
                continue;
            }
            if let Some(e) = self.choose_branch(&y) {
                return Outcome::Branch(bound, e);
            }
            let yb: Vec<bool> = y.iter().map(|&v| v > 0.5).collect();
            if let Err(cycle) = cut_consistency(&p.graph, &yb) {
                let in_f: Vec<bool> = cycle.iter().map(|&e| yb[e]).collect();
                let ineq = OddCycleInequality { edges: cycle, in_f };
                let cut = Cut::odd(&ineq);
                if cut.violation(&y) > tol && self.add_cuts(shared, vec![(CutKey::Odd(ineq.key()), cut)]) > 0 {
                    continue;
                }
                return self.evaluate_or_branch();
            }
            let x = p.graph.assignment_from_cut(&yb);
            if !p.reduced.is_transitive(&x) {
                return self.evaluate_or_branch();
            }
            return Outcome::Integral(p.graph.integral_objective(&yb), yb);
        }
    }

    /// Fallback when an integral point fails a check that its rows should
    /// have enforced: branch on a free class variable.
    fn evaluate_or_branch(&self) -> Outcome {
        let p = self.problem;
        match (0..p.graph.class_count()).map(|c| p.graph.root_edge(c)).find(|&e| self.current[e].is_none()) {
            Some(e) => Outcome::Branch(f64::NEG_INFINITY, e),
            None => self.evaluate_fixed(),
        }
    }

    fn run(&mut self, index: usize, shared: &Mutex<Shared>, wake: &Condvar) {
        loop {
            let node = {
                let mut s = shared.lock().unwrap();
                loop {
                    if s.timed_out {
                        return;
                    }
                    while let Some(top) = s.heap.peek() {
                        if bound_to_int(top.bound) >= s.incumbent {
                            s.heap.pop();
                        } else {
                            break;
                        }
                    }
                    if let Some(n) = s.heap.pop() {
                        s.active[index] = Some(n.bound);
                        s.stats.n_sub += 1;
                        break n;
                    }
                    if s.active.iter().all(Option::is_none) {
                        wake.notify_all();
                        return;
                    }
                    s = wake.wait(s).unwrap();
                }
            };
            let outcome = self.process(&node, shared);
            let mut s = shared.lock().unwrap();
            s.active[index] = None;
            match outcome {
                Outcome::Pruned => {}
                Outcome::Integral(value, y) => {
                    if value < s.incumbent {
                        let p = self.problem;
                        if let Ok(sol) = cut_to_solution(&p.model, &p.reduced, &p.graph, &y) {
                            if sol.check_consistent(p.merged).is_ok()
                                && count_crossings(p.merged, &sol).ok() == Some(value as u64)
                            {
                                s.incumbent = value;
                                s.best = sol;
                            }
                        }
                    }
                }
                Outcome::Branch(bound, e) => {
                    let bound = bound.max(node.bound);
                    for v in [false, true] {
                        let mut fixings = node.fixings.clone();
                        fixings.push((e, v));
                        let id = s.next_id;
                        s.next_id += 1;
                        s.heap.push(OpenNode { bound, id, fixings });
                    }
                }
                Outcome::Interrupted(bound) => {
                    let mut back = node.clone();
                    back.bound = bound.max(node.bound);
                    s.heap.push(back);
                    s.timed_out = true;
                }
            }
            wake.notify_all();
        }
    }
}

fn rejected(message: String, start: Instant) -> OptResult {
    OptResult {
        status: SolveStatus::InfeasibleInput,
        solution: None,
        crossings: None,
        lower_bound: 0,
        stats: SolveStats {
            time: start.elapsed().as_secs_f64(),
            ..Default::default()
        },
        message: Some(message),
    }
}

/// Heuristic solution without search; the lower bound is the trivial 0
/// unless the heuristic found a crossing-free drawing.
pub fn heuristic_only(instance: &MlcmInstance, config: &SolveConfig) -> OptResult {
    let start = Instant::now();
    let report = validate_instance(instance);
    if !report.is_empty() {
        return rejected(report.to_string(), start);
    }
    let sol = barycenter_heuristic(instance, config.heuristic_sweeps);
    let count = count_crossings(instance, &sol).expect("heuristic output matches the instance");
    OptResult {
        status: if count == 0 { SolveStatus::Optimal } else { SolveStatus::Feasible },
        solution: Some(sol),
        crossings: Some(count),
        lower_bound: 0,
        stats: SolveStats {
            time: start.elapsed().as_secs_f64(),
            ..Default::default()
        },
        message: None,
    }
}

/// Exact solve on the calling thread with the given relaxation backend.
pub fn branch_and_cut(instance: &MlcmInstance, config: &SolveConfig, backend: &mut dyn RelaxationBackend) -> OptResult {
    run(instance, config, Some(backend))
}

/// Exact solve with the bundled LP backend; `config.threads > 1` processes
/// open nodes on several threads.
pub fn solve(instance: &MlcmInstance, config: &SolveConfig) -> OptResult {
    if config.threads > 1 {
        run(instance, config, None)
    } else {
        let mut lp = DualSimplex::new();
        run(instance, config, Some(&mut lp))
    }
}

fn prepare<'a>(merged: &'a MlcmInstance, config: &'a SolveConfig, start: Instant, heuristic: &Solution) -> Result<Problem<'a>> {
    let model = build_model_with_order(merged, heuristic)?;
    let reduced = identify_variables(&model);
    let graph = build_maxcut(&reduced);
    let fixed_root = (graph.class_count() > 0).then(|| graph.root_edge(0));
    Ok(Problem {
        merged,
        model,
        reduced,
        graph,
        config,
        start,
        fixed_root,
    })
}

fn run(instance: &MlcmInstance, config: &SolveConfig, backend: Option<&mut dyn RelaxationBackend>) -> OptResult {
    let start = Instant::now();
    let report = validate_instance(instance);
    if !report.is_empty() {
        return rejected(report.to_string(), start);
    }
    let (merged, map) = if config.merge_layers {
        merge_layers(instance)
    } else {
        (instance.clone(), MergeMap::identity(instance))
    };
    let heuristic = barycenter_heuristic(&merged, config.heuristic_sweeps);
    let h_count = count_crossings(&merged, &heuristic).expect("heuristic output matches the instance");
    let problem = match prepare(&merged, config, start, &heuristic) {
        Ok(p) => p,
        Err(e) => return rejected(e.to_string(), start),
    };
    let mut stats = SolveStats {
        n_var: problem.graph.edge_count(),
        ..Default::default()
    };
    let finish = |status, sol: Solution, count: i64, lower: i64, mut stats: SolveStats| {
        stats.time = start.elapsed().as_secs_f64();
        let sol = map.expand(&sol);
        debug_assert_eq!(count_crossings(instance, &sol).ok(), Some(count as u64));
        OptResult {
            status,
            solution: Some(sol),
            crossings: Some(count as u64),
            lower_bound: lower.clamp(0, count) as u64,
            stats,
            message: None,
        }
    };
    if h_count == 0 {
        stats.n_sub = 1;
        return finish(SolveStatus::Optimal, heuristic, 0, 0, stats);
    }
    let threads = if backend.is_some() { 1 } else { config.threads.max(1) };
    let shared = Mutex::new(Shared {
        heap: BinaryHeap::from([OpenNode {
            bound: f64::NEG_INFINITY,
            id: 0,
            fixings: Vec::new(),
        }]),
        active: vec![None; threads],
        next_id: 1,
        incumbent: h_count as i64,
        best: heuristic,
        pool: Vec::new(),
        pool_keys: HashMap::new(),
        stats,
        timed_out: false,
    });
    let wake = Condvar::new();
    match backend {
        Some(lp) => Worker::new(&problem, lp).run(0, &shared, &wake),
        None => std::thread::scope(|scope| {
            for w in 0..threads {
                let (problem, shared, wake) = (&problem, &shared, &wake);
                scope.spawn(move || {
                    let mut lp = DualSimplex::new();
                    Worker::new(problem, &mut lp).run(w, shared, wake);
                });
            }
        }),
    }
    let s = shared.into_inner().unwrap();
    let open_bound = s.heap.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min);
    if s.timed_out && open_bound.is_finite() && bound_to_int(open_bound) < s.incumbent {
        let lower = if open_bound == f64::NEG_INFINITY { 0 } else { bound_to_int(open_bound) };
        finish(SolveStatus::Timeout, s.best, s.incumbent, lower, s.stats)
    } else {
        finish(SolveStatus::Optimal, s.best, s.incumbent, s.incumbent, s.stats)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{Layer, LayerTree, NodeId};
    use crate::oracle::{brute_force_optimum, DEFAULT_BUDGET};

    fn layer(n: usize, blocks: &[&[NodeId]]) -> Layer {
        let blocks: Vec<(Option<String>, Vec<NodeId>)> = blocks
            .iter()
            .enumerate()
            .map(|(k, b)| (Some(format!("s{k}")), b.to_vec()))
            .collect();
        Layer {
            labels: (0..n).map(|i| format!("v{i}")).collect(),
            tree: LayerTree::with_blocks(n, &blocks),
        }
    }

    fn bundle_swap() -> MlcmInstance {
        MlcmInstance {
            layers: vec![layer(4, &[&[0, 1], &[2, 3]]), layer(4, &[&[0, 2], &[1, 3]])],
            edges: vec![(0..4).map(|v| (v, v)).collect()],
        }
    }

    #[test]
    fn bundle_swap_is_one() {
        let r = solve(&bundle_swap(), &SolveConfig::default());
        assert_eq!(r.status, SolveStatus::Optimal);
        assert_eq!(r.crossings, Some(1));
        assert_eq!(r.lower_bound, 1);
        assert!(r.stats.n_sub >= 1);
    }

    #[test]
    fn zero_heuristic_stops_at_root() {
        let inst = MlcmInstance {
            layers: vec![layer(3, &[]), layer(3, &[])],
            edges: vec![vec![(0, 2), (1, 1), (2, 0)]],
        };
        let r = solve(&inst, &SolveConfig::default());
        assert_eq!(r.status, SolveStatus::Optimal);
        assert_eq!(r.crossings, Some(0));
        assert_eq!(r.stats.n_sub, 1);
    }

    #[test]
    fn star_layers_need_search() {
        // K_{2,2}-like gaps force crossings no layer order avoids
        let inst = MlcmInstance {
            layers: vec![layer(3, &[]), layer(3, &[]), layer(3, &[])],
            edges: vec![
                vec![(0, 0), (0, 1), (1, 0), (1, 2), (2, 1), (2, 2)],
                vec![(0, 0), (0, 1), (1, 1), (1, 2), (2, 0), (2, 2)],
            ],
        };
        let r = solve(&inst, &SolveConfig::default());
        let (best, _) = brute_force_optimum(&inst, DEFAULT_BUDGET).unwrap();
        assert_eq!(r.crossings, Some(best));
        assert_eq!(r.status, SolveStatus::Optimal);
    }

    #[test]
    fn rejects_invalid_input() {
        let inst = MlcmInstance {
            layers: vec![layer(2, &[]), layer(2, &[])],
            edges: vec![vec![(0, 0), (0, 0)]],
        };
        assert_eq!(solve(&inst, &SolveConfig::default()).status, SolveStatus::InfeasibleInput);
    }

    #[test]
    fn parallel_matches_serial() {
        let inst = bundle_swap();
        let config = SolveConfig {
            threads: 3,
            ..Default::default()
        };
        assert_eq!(solve(&inst, &config).crossings, Some(1));
    }

    #[test]
    fn zero_time_limit_keeps_incumbent() {
        let config = SolveConfig {
            time_limit: Duration::ZERO,
            merge_layers: false,
            ..Default::default()
        };
        let r = solve(&bundle_swap(), &config);
        assert!(r.crossings.is_some());
        assert!(r.lower_bound <= r.crossings.unwrap());
        assert!(matches!(r.status, SolveStatus::Timeout | SolveStatus::Optimal));
    }
}
