//! Max-cut form of a reduced ordering model, and separation routines for the
//! branch-and-cut driver.
//!
//! Node `0` is the extra root node; node `c + 1` stands for variable class
//! `c`. Edge `c` is the root edge of class `c`, so `y[c]` is the value of
//! `x_c`. A pair edge `{a, b}` carries the net weight of the crossing terms
//! between the two classes: xor terms count the edge when it is cut, xnor
//! terms when it is not (their weight moves to the constant offset and the
//! edge weight is negated).

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, HashSet, VecDeque};
use std::fmt::Write as _;

use crate::error::Result;
use crate::instance::Solution;
use crate::model::{ClassId, OrderingModel, Parity, ReducedModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CutEdge {
    pub u: usize,
    pub v: usize,
    pub weight: i64,
}

#[derive(Debug, Clone)]
pub struct MaxCutGraph {
    node_count: usize,
    pub edges: Vec<CutEdge>,
    pub offset: i64,
    adjacency: Vec<Vec<(usize, usize)>>,
}

/// Edge values, fractional while solving.
pub type CutVector = Vec<f64>;

pub fn build_maxcut(reduced: &ReducedModel) -> MaxCutGraph {
    let n = reduced.class_count();
    let mut offset = reduced.offset;
    let mut net: BTreeMap<(ClassId, ClassId), i64> = BTreeMap::new();
    for t in &reduced.terms {
        let w = t.weight as i64;
        let entry = net.entry((t.a.min(t.b), t.a.max(t.b))).or_insert(0);
        match t.parity {
            Parity::Xor => *entry += w,
            Parity::Xnor => {
                *entry -= w;
                offset += w;
            }
        }
    }
    let mut edges: Vec<CutEdge> = (0..n)
        .map(|c| CutEdge {
            u: 0,
            v: c + 1,
            weight: 0,
        })
        .collect();
    edges.extend(net.into_iter().filter(|&(_, w)| w != 0).map(|((a, b), w)| CutEdge {
        u: a + 1,
        v: b + 1,
        weight: w,
    }));
    MaxCutGraph::new(n + 1, edges, offset)
}

impl MaxCutGraph {
    pub fn new(node_count: usize, edges: Vec<CutEdge>, offset: i64) -> Self {
        let mut adjacency = vec![Vec::new(); node_count];
        for (e, edge) in edges.iter().enumerate() {
            adjacency[edge.u].push((edge.v, e));
            adjacency[edge.v].push((edge.u, e));
        }
        MaxCutGraph {
            node_count,
            edges,
            offset,
            adjacency,
        }
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn class_count(&self) -> usize {
        self.node_count - 1
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn neighbors(&self, v: usize) -> &[(usize, usize)] {
        &self.adjacency[v]
    }

    /// Root edge of a class.
    pub fn root_edge(&self, class: ClassId) -> usize {
        class
    }

    /// Crossing count represented by `y` (exact on integral cuts).
    pub fn objective(&self, y: &[f64]) -> f64 {
        self.offset as f64
            + self
                .edges
                .iter()
                .zip(y)
                .map(|(e, &v)| e.weight as f64 * v)
                .sum::<f64>()
    }

    pub fn integral_objective(&self, y: &[bool]) -> i64 {
        self.offset
            + self
                .edges
                .iter()
                .zip(y)
                .filter(|(_, &v)| v)
                .map(|(e, _)| e.weight)
                .sum::<i64>()
    }

    /// Cut induced by the class values: `W = {z_c : x_c = 1}`.
    pub fn cut_from_assignment(&self, x: &[bool]) -> Vec<bool> {
        let side = |node: usize| node > 0 && x[node - 1];
        self.edges.iter().map(|e| side(e.u) != side(e.v)).collect()
    }

    pub fn assignment_from_cut(&self, y: &[bool]) -> Vec<bool> {
        (0..self.class_count()).map(|c| y[self.root_edge(c)]).collect()
    }

    pub fn dump(&self) -> String {
        let mut out = String::new();
        writeln!(out, "nodes {}", self.node_count).unwrap();
        for e in &self.edges {
            writeln!(out, "edge {} {} {}", e.u, e.v, e.weight).unwrap();
        }
        writeln!(out, "offset {}", self.offset).unwrap();
        out
    }
}

/// Checks that an integral edge vector is a cut: every cycle has an even
/// number of cut edges. On failure returns the edges of a cycle with an odd
/// number of cut edges.
pub fn cut_consistency(graph: &MaxCutGraph, y: &[bool]) -> std::result::Result<(), Vec<usize>> {
    let n = graph.node_count();
    let mut label = vec![None::<bool>; n];
    let mut parent = vec![None::<(usize, usize)>; n];
    let mut depth = vec![0usize; n];
    for start in 0..n {
        if label[start].is_some() {
            continue;
        }
        label[start] = Some(false);
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &(v, e) in graph.neighbors(u) {
                if label[v].is_none() {
                    label[v] = Some(label[u].unwrap() ^ y[e]);
                    parent[v] = Some((u, e));
                    depth[v] = depth[u] + 1;
                    queue.push_back(v);
                }
            }
        }
    }
    for (e, edge) in graph.edges.iter().enumerate() {
        let (lu, lv) = (label[edge.u].unwrap(), label[edge.v].unwrap());
        if (lu ^ lv) != y[e] {
            // tree path between the endpoints closes the cycle with e
            let mut cycle = vec![e];
            let (mut a, mut b) = (edge.u, edge.v);
            while a != b {
                if depth[a] >= depth[b] {
                    let (p, pe) = parent[a].unwrap();
                    cycle.push(pe);
                    a = p;
                } else {
                    let (p, pe) = parent[b].unwrap();
                    cycle.push(pe);
                    b = p;
                }
            }
            return Err(cycle);
        }
    }
    Ok(())
}

/// `sum_{e in F} y_e - sum_{e in C \ F} y_e <= |F| - 1` for a cycle `C`
/// and an odd subset `F`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OddCycleInequality {
    /// Cycle edges in traversal order.
    pub edges: Vec<usize>,
    /// Membership in `F`, parallel to `edges`.
    pub in_f: Vec<bool>,
}

impl OddCycleInequality {
    pub fn f_size(&self) -> usize {
        self.in_f.iter().filter(|&&b| b).count()
    }

    pub fn rhs(&self) -> f64 {
        self.f_size() as f64 - 1.0
    }

    pub fn coefficients(&self) -> Vec<(usize, f64)> {
        self.edges
            .iter()
            .zip(&self.in_f)
            .map(|(&e, &f)| (e, if f { 1.0 } else { -1.0 }))
            .collect()
    }

    /// Left-hand side minus right-hand side; positive means violated.
    pub fn violation(&self, y: &[f64]) -> f64 {
        self.coefficients().iter().map(|&(e, c)| c * y[e]).sum::<f64>() - self.rhs()
    }

    /// Order-independent identity of the inequality.
    pub fn key(&self) -> Vec<(usize, bool)> {
        let mut k: Vec<(usize, bool)> = self.edges.iter().copied().zip(self.in_f.iter().copied()).collect();
        k.sort_unstable();
        k
    }

    /// The edges form one simple cycle and `|F|` is odd.
    pub fn is_well_formed(&self, graph: &MaxCutGraph) -> bool {
        if self.edges.len() < 3 || self.f_size().is_multiple_of(2) {
            return false;
        }
        let mut degree = std::collections::HashMap::new();
        let mut seen = HashSet::new();
        for &e in &self.edges {
            if !seen.insert(e) {
                return false;
            }
            *degree.entry(graph.edges[e].u).or_insert(0) += 1;
            *degree.entry(graph.edges[e].v).or_insert(0) += 1;
        }
        degree.values().all(|&d| d == 2) && degree.len() == self.edges.len()
    }
}

#[derive(Clone, Copy, PartialEq)]
struct QueueItem {
    dist: f64,
    node: usize,
}

impl Eq for QueueItem {}

impl Ord for QueueItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .partial_cmp(&self.dist)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for QueueItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Splits a closed walk at repeated nodes until a simple cycle with an odd
/// number of `F` edges remains. Lengths are nonnegative, so the kept part is
/// never longer than the walk.
fn simple_odd_cycle(graph: &MaxCutGraph, start: usize, mut walk: Vec<(usize, bool)>) -> Option<OddCycleInequality> {
    let mut start = start;
    loop {
        let mut nodes = Vec::with_capacity(walk.len());
        let mut cur = start;
        for &(e, _) in &walk {
            nodes.push(cur);
            let edge = graph.edges[e];
            cur = if edge.u == cur { edge.v } else { edge.u };
        }
        let mut first_seen = std::collections::HashMap::new();
        let mut split = None;
        for (pos, &v) in nodes.iter().enumerate() {
            if let Some(&prev) = first_seen.get(&v) {
                split = Some((prev, pos));
                break;
            }
            first_seen.insert(v, pos);
        }
        match split {
            None => {
                if walk.len() < 3 {
                    return None;
                }
                let (edges, in_f): (Vec<usize>, Vec<bool>) = walk.into_iter().unzip();
                return Some(OddCycleInequality { edges, in_f });
            }
            Some((a, b)) => {
                let inner: Vec<(usize, bool)> = walk[a..b].to_vec();
                let odd = inner.iter().filter(|x| x.1).count() % 2 == 1;
                if odd {
                    start = nodes[a];
                    walk = inner;
                } else {
                    let mut outer = walk[..a].to_vec();
                    outer.extend_from_slice(&walk[b..]);
                    walk = outer;
                }
            }
        }
    }
}

/// Finds odd-cycle inequalities violated by more than `tolerance`.
///
/// Every node is split into an even and an odd copy. An edge contributes arcs
/// of length `y_e` between copies of equal parity (edge outside `F`) and arcs
/// of length `1 - y_e` between copies of opposite parity (edge in `F`). A
/// closed walk from the even to the odd copy of a node of length below one
/// is a violated inequality. The search from every node is exact; at most
/// `max_cuts` distinct inequalities are returned, most violated first.
pub fn separate_odd_cycles(graph: &MaxCutGraph, y: &[f64], tolerance: f64, max_cuts: usize) -> Vec<OddCycleInequality> {
    let n = graph.node_count();
    let limit = 1.0 - tolerance;
    let mut found: Vec<(f64, OddCycleInequality)> = Vec::new();
    let mut keys = HashSet::new();
    let mut dist = vec![f64::INFINITY; 2 * n];
    let mut pred: Vec<Option<(usize, usize, bool)>> = vec![None; 2 * n];
    let mut touched = Vec::new();
    for s in 0..n {
        if found.len() >= max_cuts {
            break;
        }
        for &t in &touched {
            dist[t] = f64::INFINITY;
            pred[t] = None;
        }
        touched.clear();
        let source = 2 * s;
        let target = 2 * s + 1;
        dist[source] = 0.0;
        touched.push(source);
        let mut heap = BinaryHeap::from([QueueItem { dist: 0.0, node: source }]);
        while let Some(QueueItem { dist: d, node }) = heap.pop() {
            if d > dist[node] {
                continue;
            }
            if node == target {
                break;
            }
            let (v, parity) = (node / 2, node % 2);
            for &(w, e) in graph.neighbors(v) {
                let ye = y[e].clamp(0.0, 1.0);
                for cross in [false, true] {
                    let len = if cross { 1.0 - ye } else { ye };
                    let nd = d + len;
                    let next = 2 * w + (parity ^ cross as usize);
                    if nd < limit && nd < dist[next] {
                        if dist[next].is_infinite() {
                            touched.push(next);
                        }
                        dist[next] = nd;
                        pred[next] = Some((node, e, cross));
                        heap.push(QueueItem { dist: nd, node: next });
                    }
                }
            }
        }
        if dist[target] >= limit {
            continue;
        }
        let mut walk = Vec::new();
        let mut cur = target;
        while cur != source {
            let (prev, e, cross) = pred[cur].expect("reached node has predecessor");
            walk.push((e, cross));
            cur = prev;
        }
        walk.reverse();
        if let Some(cycle) = simple_odd_cycle(graph, s, walk) {
            let violation = cycle.violation(y);
            if violation > tolerance && keys.insert(cycle.key()) {
                found.push((violation, cycle));
            }
        }
    }
    found.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal));
    found.truncate(max_cuts);
    found.into_iter().map(|(_, c)| c).collect()
}

/// A transitivity inequality over classes found violated; `upper` selects
/// `x_a + x_b - x_c <= 1`, otherwise `x_a + x_b - x_c >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitivityCut {
    pub triple: usize,
    pub upper: bool,
    pub violation: f64,
}

/// Complete enumeration of the reduced transitivity triples.
pub fn separate_transitivity(reduced: &ReducedModel, graph: &MaxCutGraph, y: &[f64], tolerance: f64) -> Vec<TransitivityCut> {
    let x: Vec<f64> = (0..reduced.class_count()).map(|c| y[graph.root_edge(c)]).collect();
    let mut cuts: Vec<TransitivityCut> = reduced
        .triples
        .iter()
        .enumerate()
        .filter_map(|(k, t)| {
            let v = t.value(&x);
            if v - 1.0 > tolerance {
                Some(TransitivityCut {
                    triple: k,
                    upper: true,
                    violation: v - 1.0,
                })
            } else if -v > tolerance {
                Some(TransitivityCut {
                    triple: k,
                    upper: false,
                    violation: -v,
                })
            } else {
                None
            }
        })
        .collect();
    cuts.sort_by(|a, b| b.violation.partial_cmp(&a.violation).unwrap_or(Ordering::Equal));
    cuts
}

/// Decodes an integral, consistent, transitive cut into permutations.
pub fn cut_to_solution(model: &OrderingModel, reduced: &ReducedModel, graph: &MaxCutGraph, y: &[bool]) -> Result<Solution> {
    let x = graph.assignment_from_cut(y);
    model.decode_assignment(&reduced.expand(&x))
}
