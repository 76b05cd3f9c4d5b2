//! Quadratic ordering model: one precedence variable per node pair and layer,
//! crossing terms between consecutive layers, transitivity triples and tree
//! equalities; plus the reduction that identifies tree-equal variables.
//!
//! Every layer is indexed by a tree-consistent reference order. Under such an
//! indexing the two families of tree equalities together with transitivity
//! describe exactly the tree-consistent permutations.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::instance::{LcaTable, MlcmInstance, NodeId, Solution};

pub type VarId = usize;
pub type ClassId = usize;

/// Dense numbering of the pairs `(a, b)`, `a < b`, of ranks of every layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableIndex {
    /// Reference order per layer: rank -> node.
    orders: Vec<Vec<NodeId>>,
    /// node -> rank, per layer.
    ranks: Vec<Vec<usize>>,
    offsets: Vec<usize>,
    total: usize,
}

impl VariableIndex {
    fn new(orders: Vec<Vec<NodeId>>) -> Self {
        let mut offsets = Vec::with_capacity(orders.len());
        let mut total = 0;
        let ranks = orders
            .iter()
            .map(|order| {
                offsets.push(total);
                total += order.len() * order.len().saturating_sub(1) / 2;
                let mut rank = vec![0; order.len()];
                for (k, &v) in order.iter().enumerate() {
                    rank[v] = k;
                }
                rank
            })
            .collect();
        VariableIndex {
            orders,
            ranks,
            offsets,
            total,
        }
    }

    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn layers(&self) -> usize {
        self.orders.len()
    }

    pub fn order(&self, r: usize) -> &[NodeId] {
        &self.orders[r]
    }

    /// Variable of the rank pair `a < b` on layer `r`.
    pub fn var(&self, r: usize, a: usize, b: usize) -> VarId {
        debug_assert!(a < b);
        let n = self.orders[r].len();
        self.offsets[r] + a * (2 * n - a - 1) / 2 + (b - a - 1)
    }

    /// The literal meaning "`u` above `v`" on layer `r`: the variable and
    /// whether it appears un-complemented.
    pub fn literal(&self, r: usize, u: NodeId, v: NodeId) -> (VarId, bool) {
        let (a, b) = (self.ranks[r][u], self.ranks[r][v]);
        if a < b {
            (self.var(r, a, b), true)
        } else {
            (self.var(r, b, a), false)
        }
    }

    /// `(layer, i, j)` with `i` before `j` in the reference order.
    pub fn pair(&self, id: VarId) -> (usize, NodeId, NodeId) {
        // last layer whose offset is <= id; empty layers before it share its offset
        let r = self.offsets.partition_point(|&o| o <= id) - 1;
        let n = self.orders[r].len();
        let mut rest = id - self.offsets[r];
        let mut a = 0;
        while rest >= n - a - 1 {
            rest -= n - a - 1;
            a += 1;
        }
        (r, self.orders[r][a], self.orders[r][a + 1 + rest])
    }

    pub fn layer_of(&self, id: VarId) -> usize {
        self.pair(id).0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Parity {
    /// Crossing iff the two variables differ.
    Xor,
    /// Crossing iff the two variables agree.
    Xnor,
}

impl Parity {
    pub fn indicator(self, a: bool, b: bool) -> bool {
        match self {
            Parity::Xor => a != b,
            Parity::Xnor => a == b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CrossingTerm {
    pub a: VarId,
    pub b: VarId,
    pub parity: Parity,
    pub weight: u64,
}

/// `0 <= x_hi + x_ij - x_hj <= 1` for ranks `h < i < j` of one layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TransitivityTriple {
    pub layer: usize,
    pub nodes: [NodeId; 3],
    pub hi: VarId,
    pub ij: VarId,
    pub hj: VarId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeEquality {
    pub u: VarId,
    pub v: VarId,
}

#[derive(Debug, Clone)]
pub struct OrderingModel {
    pub index: VariableIndex,
    pub terms: Vec<CrossingTerm>,
    pub triples: Vec<TransitivityTriple>,
    pub equalities: Vec<TreeEquality>,
}

/// Builds the model indexed by each tree's depth-first leaf order.
pub fn build_model(instance: &MlcmInstance) -> OrderingModel {
    build_model_with_order(instance, &instance.canonical_solution()).expect("canonical order is tree-consistent")
}

/// Builds the model with layer indexing taken from a tree-consistent solution.
pub fn build_model_with_order(instance: &MlcmInstance, reference: &Solution) -> Result<OrderingModel> {
    reference.check_consistent(instance)?;
    let index = VariableIndex::new(reference.perms.clone());

    let mut aggregated: BTreeMap<(VarId, VarId, Parity), u64> = BTreeMap::new();
    for (r, gap) in instance.edges.iter().enumerate() {
        for (x, &(i, k)) in gap.iter().enumerate() {
            for &(j, l) in &gap[x + 1..] {
                if i == j || k == l {
                    continue;
                }
                let (a, pa) = index.literal(r, i, j);
                let (b, pb) = index.literal(r + 1, k, l);
                // crossing iff "i above j" differs from "k above l"
                let parity = if pa == pb { Parity::Xor } else { Parity::Xnor };
                *aggregated.entry((a, b, parity)).or_insert(0) += 1;
            }
        }
    }
    let terms = aggregated
        .into_iter()
        .map(|((a, b, parity), weight)| CrossingTerm { a, b, parity, weight })
        .collect();

    let mut triples = Vec::new();
    let mut equalities = Vec::new();
    for (r, layer) in instance.layers.iter().enumerate() {
        let order = index.order(r);
        let n = order.len();
        let lca = LcaTable::new(&layer.tree);
        for a in 0..n {
            for b in a + 1..n {
                for c in b + 1..n {
                    let (h, i, j) = (order[a], order[b], order[c]);
                    let hi = index.var(r, a, b);
                    let ij = index.var(r, b, c);
                    let hj = index.var(r, a, c);
                    triples.push(TransitivityTriple {
                        layer: r,
                        nodes: [h, i, j],
                        hi,
                        ij,
                        hj,
                    });
                    // j outside the smallest subtree holding h and i
                    let p_hi = lca.lca(h, i);
                    if lca.lca_nodes(p_hi, lca.tree_node(j)) != p_hi {
                        equalities.push(TreeEquality { u: hj, v: ij });
                    }
                    // h outside the smallest subtree holding i and j
                    let p_ij = lca.lca(i, j);
                    if lca.lca_nodes(lca.tree_node(h), p_ij) != p_ij {
                        equalities.push(TreeEquality { u: hi, v: hj });
                    }
                }
            }
        }
    }
    Ok(OrderingModel {
        index,
        terms,
        triples,
        equalities,
    })
}

fn check_len(assignment: &[bool], expected: usize) -> Result<()> {
    if assignment.len() != expected {
        return Err(Error::AssignmentLength {
            expected,
            found: assignment.len(),
        });
    }
    Ok(())
}

impl OrderingModel {
    pub fn var_count(&self) -> usize {
        self.index.len()
    }

    pub fn objective_value(&self, assignment: &[bool]) -> Result<i64> {
        check_len(assignment, self.var_count())?;
        Ok(self
            .terms
            .iter()
            .filter(|t| t.parity.indicator(assignment[t.a], assignment[t.b]))
            .map(|t| t.weight as i64)
            .sum())
    }

    pub fn violated_triple(&self, assignment: &[bool]) -> Option<&TransitivityTriple> {
        self.triples.iter().find(|t| {
            let s = assignment[t.hi] as i32 + assignment[t.ij] as i32 - assignment[t.hj] as i32;
            !(0..=1).contains(&s)
        })
    }

    pub fn satisfies_equalities(&self, assignment: &[bool]) -> bool {
        self.equalities.iter().all(|e| assignment[e.u] == assignment[e.v])
    }

    /// Precedence variables of a solution.
    pub fn encode_solution(&self, sol: &Solution) -> Result<Vec<bool>> {
        if sol.perms.len() != self.index.layers() {
            return Err(Error::LayerCountMismatch {
                expected: self.index.layers(),
                found: sol.perms.len(),
            });
        }
        let pos = sol.positions();
        let mut x = vec![false; self.var_count()];
        for (r, pos) in pos.iter().enumerate() {
            let order = self.index.order(r);
            if pos.len() != order.len() || pos.contains(&usize::MAX) {
                return Err(Error::PermutationMismatch { layer: r });
            }
            for a in 0..order.len() {
                for b in a + 1..order.len() {
                    x[self.index.var(r, a, b)] = pos[order[a]] < pos[order[b]];
                }
            }
        }
        Ok(x)
    }

    /// Permutations described by a transitive assignment.
    pub fn decode_assignment(&self, assignment: &[bool]) -> Result<Solution> {
        check_len(assignment, self.var_count())?;
        if let Some(t) = self.violated_triple(assignment) {
            return Err(Error::NotTransitive {
                layer: t.layer,
                h: t.nodes[0],
                i: t.nodes[1],
                j: t.nodes[2],
            });
        }
        let perms = (0..self.index.layers())
            .map(|r| {
                let order = self.index.order(r);
                let n = order.len();
                // number of nodes each node is placed above
                let mut above = vec![0usize; n];
                for a in 0..n {
                    for b in a + 1..n {
                        if assignment[self.index.var(r, a, b)] {
                            above[a] += 1;
                        } else {
                            above[b] += 1;
                        }
                    }
                }
                let mut ranks: Vec<usize> = (0..n).collect();
                ranks.sort_by(|&a, &b| above[b].cmp(&above[a]));
                ranks.into_iter().map(|a| order[a]).collect()
            })
            .collect();
        Ok(Solution { perms })
    }

    pub fn dump(&self) -> String {
        let mut out = String::new();
        writeln!(out, "variables {}", self.var_count()).unwrap();
        for id in 0..self.var_count() {
            let (r, i, j) = self.index.pair(id);
            writeln!(out, "var {id} layer {} {i} {j}", r + 1).unwrap();
        }
        for t in &self.terms {
            writeln!(out, "term {} {} {} {}", t.a, t.b, parity_name(t.parity), t.weight).unwrap();
        }
        for t in &self.triples {
            writeln!(
                out,
                "triple layer {} nodes {} {} {} vars {} {} {}",
                t.layer + 1,
                t.nodes[0],
                t.nodes[1],
                t.nodes[2],
                t.hi,
                t.ij,
                t.hj
            )
            .unwrap();
        }
        for e in &self.equalities {
            writeln!(out, "eq {} {}", e.u, e.v).unwrap();
        }
        out
    }
}

fn parity_name(p: Parity) -> &'static str {
    match p {
        Parity::Xor => "xor",
        Parity::Xnor => "xnor",
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        // smaller id stays the root, so representatives are class minima
        if ra < rb {
            self.parent[rb] = ra;
        } else if rb < ra {
            self.parent[ra] = rb;
        }
    }
}

/// Partition of the variables into classes forced equal by tree equalities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableClasses {
    pub class_of: Vec<ClassId>,
    /// Smallest variable id of each class.
    pub representative: Vec<VarId>,
    pub members: Vec<Vec<VarId>>,
}

impl VariableClasses {
    pub fn len(&self) -> usize {
        self.representative.len()
    }

    pub fn is_empty(&self) -> bool {
        self.representative.is_empty()
    }
}

/// `0 <= x_a + x_b - x_c <= 1` over classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ReducedTriple {
    pub a: ClassId,
    pub b: ClassId,
    pub c: ClassId,
}

impl ReducedTriple {
    pub fn value(&self, x: &[f64]) -> f64 {
        x[self.a] + x[self.b] - x[self.c]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReducedTerm {
    pub a: ClassId,
    pub b: ClassId,
    pub parity: Parity,
    pub weight: u64,
}

#[derive(Debug, Clone)]
pub struct ReducedModel {
    pub classes: VariableClasses,
    pub terms: Vec<ReducedTerm>,
    pub triples: Vec<ReducedTriple>,
    pub offset: i64,
    /// Layer of each class.
    pub class_layer: Vec<usize>,
}

/// Replaces variables by class representatives.
pub fn identify_variables(model: &OrderingModel) -> ReducedModel {
    let n = model.var_count();
    let mut uf = UnionFind::new(n);
    for e in &model.equalities {
        uf.union(e.u, e.v);
    }
    let mut class_of = vec![usize::MAX; n];
    let mut representative = Vec::new();
    let mut members: Vec<Vec<VarId>> = Vec::new();
    for v in 0..n {
        let root = uf.find(v);
        if class_of[root] == usize::MAX {
            class_of[root] = representative.len();
            representative.push(root);
            members.push(Vec::new());
        }
        class_of[v] = class_of[root];
        members[class_of[v]].push(v);
    }

    let mut offset = 0i64;
    let mut aggregated: BTreeMap<(ClassId, ClassId, Parity), u64> = BTreeMap::new();
    for t in &model.terms {
        let (ca, cb) = (class_of[t.a], class_of[t.b]);
        if ca == cb {
            if t.parity == Parity::Xnor {
                offset += t.weight as i64;
            }
            continue;
        }
        *aggregated.entry((ca.min(cb), ca.max(cb), t.parity)).or_insert(0) += t.weight;
    }
    let terms = aggregated
        .into_iter()
        .map(|((a, b, parity), weight)| ReducedTerm { a, b, parity, weight })
        .collect();

    let mut seen = HashSet::new();
    let mut triples = Vec::new();
    for t in &model.triples {
        let (a, b, c) = (class_of[t.hi], class_of[t.ij], class_of[t.hj]);
        // x_hi or x_ij equal to x_hj leaves only a 0/1 bound
        if a == c || b == c {
            continue;
        }
        // a == b would force x_a = x_c; it cannot arise under a tree-consistent
        // indexing, but it is a real constraint, so it is kept
        let key = ReducedTriple {
            a: a.min(b),
            b: a.max(b),
            c,
        };
        if seen.insert(key) {
            triples.push(key);
        }
    }
    let class_layer = representative.iter().map(|&v| model.index.layer_of(v)).collect();
    ReducedModel {
        classes: VariableClasses {
            class_of,
            representative,
            members,
        },
        terms,
        triples,
        offset,
        class_layer,
    }
}

impl ReducedModel {
    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    pub fn objective_value(&self, assignment: &[bool]) -> Result<i64> {
        check_len(assignment, self.class_count())?;
        Ok(self.offset
            + self
                .terms
                .iter()
                .filter(|t| t.parity.indicator(assignment[t.a], assignment[t.b]))
                .map(|t| t.weight as i64)
                .sum::<i64>())
    }

    pub fn is_transitive(&self, assignment: &[bool]) -> bool {
        self.triples.iter().all(|t| {
            let s = assignment[t.a] as i32 + assignment[t.b] as i32 - assignment[t.c] as i32;
            (0..=1).contains(&s)
        })
    }

    /// Class values -> values of every original variable.
    pub fn expand(&self, assignment: &[bool]) -> Vec<bool> {
        self.classes.class_of.iter().map(|&c| assignment[c]).collect()
    }

    /// Original assignment -> class values (reads each representative).
    pub fn restrict(&self, full: &[bool]) -> Vec<bool> {
        self.classes.representative.iter().map(|&v| full[v]).collect()
    }

    pub fn dump(&self) -> String {
        let mut out = String::new();
        writeln!(out, "classes {}", self.class_count()).unwrap();
        for (c, m) in self.classes.members.iter().enumerate() {
            let list: Vec<String> = m.iter().map(|v| v.to_string()).collect();
            writeln!(out, "class {c} layer {} members {}", self.class_layer[c] + 1, list.join(" ")).unwrap();
        }
        for t in &self.terms {
            writeln!(out, "term {} {} {} {}", t.a, t.b, parity_name(t.parity), t.weight).unwrap();
        }
        for t in &self.triples {
            writeln!(out, "triple {} {} {}", t.a, t.b, t.c).unwrap();
        }
        writeln!(out, "offset {}", self.offset).unwrap();
        out
    }
}
