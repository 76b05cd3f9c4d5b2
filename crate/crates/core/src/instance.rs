//! Layered graphs with one constraint tree per layer (proper T-level graphs).
//!
//! Nodes of layer `r` are the dense ids `0..layers[r].len()`. Edges of gap
//! `r` join a node of layer `r` to a node of layer `r + 1`. The leaves of the
//! tree of layer `r` are exactly its nodes; every internal tree node forces
//! its leaves to be contiguous in the layer order.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use crate::error::{Error, Location, Result, ValidationReport};

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TreeNodeKind {
    Leaf(NodeId),
    /// Labeled internal nodes are scene blocks; an unlabeled one is a plain
    /// grouping node such as the artificial root.
    Internal { label: Option<String> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeNode {
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub kind: TreeNodeKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerTree {
    pub nodes: Vec<TreeNode>,
    pub root: usize,
}

impl LayerTree {
    /// A root with every leaf as direct child.
    pub fn star(n: usize) -> Self {
        Self::with_blocks(n, &[])
    }

    /// Height-2 tree: one labeled internal node per block, remaining leaves
    /// hang off an unlabeled root. A single block covering every leaf becomes
    /// the root itself.
    pub fn with_blocks(n: usize, blocks: &[(Option<String>, Vec<NodeId>)]) -> Self {
        let mut b = TreeBuilder::default();
        let covered: HashSet<NodeId> = blocks.iter().flat_map(|(_, m)| m.iter().copied()).collect();
        if blocks.len() == 1 && covered.len() == n && n > 0 {
            let root = b.internal(None, blocks[0].0.clone());
            for &v in &blocks[0].1 {
                b.leaf(root, v);
            }
            return b.finish(root);
        }
        let root = b.internal(None, None);
        for (label, members) in blocks {
            let s = b.internal(Some(root), label.clone());
            for &v in members {
                b.leaf(s, v);
            }
        }
        for v in (0..n).filter(|v| !covered.contains(v)) {
            b.leaf(root, v);
        }
        b.finish(root)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn is_internal(&self, t: usize) -> bool {
        matches!(self.nodes[t].kind, TreeNodeKind::Internal { .. })
    }

    pub fn label(&self, t: usize) -> Option<&str> {
        match &self.nodes[t].kind {
            TreeNodeKind::Internal { label } => label.as_deref(),
            TreeNodeKind::Leaf(_) => None,
        }
    }

    /// Map from layer node id to its tree node. Assumes a valid tree.
    pub fn leaf_index(&self) -> HashMap<NodeId, usize> {
        self.nodes
            .iter()
            .enumerate()
            .filter_map(|(t, n)| match n.kind {
                TreeNodeKind::Leaf(v) => Some((v, t)),
                _ => None,
            })
            .collect()
    }

    pub fn depths(&self) -> Vec<usize> {
        let mut depth = vec![0; self.nodes.len()];
        let mut stack = vec![self.root];
        while let Some(t) = stack.pop() {
            for &c in &self.nodes[t].children {
                depth[c] = depth[t] + 1;
                stack.push(c);
            }
        }
        depth
    }

    pub fn height(&self) -> usize {
        self.depths().into_iter().max().unwrap_or(0)
    }

    /// Leaves in depth-first order; always a tree-consistent permutation.
    pub fn dfs_leaf_order(&self) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![self.root];
        while let Some(t) = stack.pop() {
            match self.nodes[t].kind {
                TreeNodeKind::Leaf(v) => out.push(v),
                TreeNodeKind::Internal { .. } => {
                    stack.extend(self.nodes[t].children.iter().rev().copied())
                }
            }
        }
        out
    }

    /// Leaves below each tree node (layer node ids), indexed by tree node.
    pub fn leaf_sets(&self) -> Vec<Vec<NodeId>> {
        let mut sets = vec![Vec::new(); self.nodes.len()];
        for (t, n) in self.nodes.iter().enumerate() {
            if let TreeNodeKind::Leaf(v) = n.kind {
                let mut cur = Some(t);
                while let Some(c) = cur {
                    sets[c].push(v);
                    cur = self.nodes[c].parent;
                }
            }
        }
        sets
    }

    /// Structural equality ignoring child order and labels, after renaming
    /// leaves through `map` (leaf of `self` -> leaf of `other`).
    pub fn same_shape(&self, other: &LayerTree, map: &dyn Fn(NodeId) -> NodeId) -> bool {
        fn canon(tree: &LayerTree, t: usize, map: &dyn Fn(NodeId) -> NodeId) -> String {
            match tree.nodes[t].kind {
                TreeNodeKind::Leaf(v) => map(v).to_string(),
                TreeNodeKind::Internal { .. } => {
                    let mut parts: Vec<String> = tree.nodes[t]
                        .children
                        .iter()
                        .map(|&c| canon(tree, c, map))
                        .collect();
                    parts.sort();
                    format!("({})", parts.join(" "))
                }
            }
        }
        canon(self, self.root, map) == canon(other, other.root, &|v| v)
    }

    fn write_nested(&self, t: usize, names: &[String], out: &mut String) {
        match &self.nodes[t].kind {
            TreeNodeKind::Leaf(v) => out.push_str(&names[*v]),
            TreeNodeKind::Internal { label } => {
                if let Some(l) = label {
                    out.push_str(l);
                }
                out.push('(');
                for (k, &c) in self.nodes[t].children.iter().enumerate() {
                    if k > 0 {
                        out.push(' ');
                    }
                    self.write_nested(c, names, out);
                }
                out.push(')');
            }
        }
    }
}

#[derive(Debug, Default)]
pub struct TreeBuilder {
    nodes: Vec<TreeNode>,
}

impl TreeBuilder {
    pub fn internal(&mut self, parent: Option<usize>, label: Option<String>) -> usize {
        self.push(parent, TreeNodeKind::Internal { label })
    }

    pub fn leaf(&mut self, parent: usize, v: NodeId) -> usize {
        self.push(Some(parent), TreeNodeKind::Leaf(v))
    }

    fn push(&mut self, parent: Option<usize>, kind: TreeNodeKind) -> usize {
        let id = self.nodes.len();
        self.nodes.push(TreeNode {
            parent,
            children: Vec::new(),
            kind,
        });
        if let Some(p) = parent {
            self.nodes[p].children.push(id);
        }
        id
    }

    pub fn finish(self, root: usize) -> LayerTree {
        LayerTree {
            nodes: self.nodes,
            root,
        }
    }
}

/// Lowest common ancestor of two leaves of a tree.
pub fn lca(tree: &LayerTree, i: NodeId, j: NodeId) -> Result<usize> {
    let leaves = tree.leaf_index();
    let a = *leaves.get(&i).ok_or(Error::UnknownLeaf(i))?;
    let b = *leaves.get(&j).ok_or(Error::UnknownLeaf(j))?;
    Ok(LcaTable::new(tree).lca_nodes(a, b))
}

/// Precomputed parent/depth arrays for repeated LCA queries on one tree.
#[derive(Debug, Clone)]
pub struct LcaTable {
    parent: Vec<Option<usize>>,
    depth: Vec<usize>,
    leaf: Vec<usize>,
}

impl LcaTable {
    pub fn new(tree: &LayerTree) -> Self {
        let leaves = tree.leaf_index();
        let mut leaf = vec![usize::MAX; leaves.len()];
        for (v, t) in leaves {
            if v < leaf.len() {
                leaf[v] = t;
            }
        }
        LcaTable {
            parent: tree.nodes.iter().map(|n| n.parent).collect(),
            depth: tree.depths(),
            leaf,
        }
    }

    pub fn tree_node(&self, v: NodeId) -> usize {
        self.leaf[v]
    }

    pub fn lca_nodes(&self, mut a: usize, mut b: usize) -> usize {
        while self.depth[a] > self.depth[b] {
            a = self.parent[a].expect("non-root has parent");
        }
        while self.depth[b] > self.depth[a] {
            b = self.parent[b].expect("non-root has parent");
        }
        while a != b {
            a = self.parent[a].expect("non-root has parent");
            b = self.parent[b].expect("non-root has parent");
        }
        a
    }

    /// LCA of two layer nodes.
    pub fn lca(&self, i: NodeId, j: NodeId) -> usize {
        self.lca_nodes(self.leaf[i], self.leaf[j])
    }
}

/// True iff every internal node's leaves form a contiguous block of `pi`.
pub fn is_tree_consistent(tree: &LayerTree, pi: &[NodeId]) -> Result<bool> {
    let n = pi.len();
    let mut pos = vec![usize::MAX; n];
    for (p, &v) in pi.iter().enumerate() {
        if v >= n || pos[v] != usize::MAX {
            return Err(Error::PermutationMismatch { layer: 0 });
        }
        pos[v] = p;
    }
    let sets = tree.leaf_sets();
    let leaf_count = sets[tree.root].len();
    if leaf_count != n {
        return Err(Error::PermutationMismatch { layer: 0 });
    }
    for (t, set) in sets.iter().enumerate() {
        if !tree.is_internal(t) || set.is_empty() {
            continue;
        }
        let lo = set.iter().map(|&v| pos[v]).min().unwrap();
        let hi = set.iter().map(|&v| pos[v]).max().unwrap();
        if hi - lo + 1 != set.len() {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layer {
    /// Display name per node id (character id for storyline instances).
    pub labels: Vec<String>,
    pub tree: LayerTree,
}

impl Layer {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MlcmInstance {
    pub layers: Vec<Layer>,
    /// `edges[r]` joins layer `r` to layer `r + 1`.
    pub edges: Vec<Vec<(NodeId, NodeId)>>,
}

impl MlcmInstance {
    pub fn p(&self) -> usize {
        self.layers.len()
    }

    pub fn node_count(&self) -> usize {
        self.layers.iter().map(Layer::len).sum()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.iter().map(Vec::len).sum()
    }

    /// Each layer in the depth-first order of its tree.
    pub fn canonical_solution(&self) -> Solution {
        Solution {
            perms: self.layers.iter().map(|l| l.tree.dfs_leaf_order()).collect(),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "p={}", self.p()).unwrap();
        for (r, layer) in self.layers.iter().enumerate() {
            writeln!(out, "layer {}: {}", r + 1, layer.labels.join(" ")).unwrap();
            let mut tree = String::new();
            layer.tree.write_nested(layer.tree.root, &layer.labels, &mut tree);
            writeln!(out, "tree {}: {}", r + 1, tree).unwrap();
        }
        for (r, gap) in self.edges.iter().enumerate() {
            let list: Vec<String> = gap
                .iter()
                .map(|&(i, k)| format!("{}-{}", self.layers[r].labels[i], self.layers[r + 1].labels[k]))
                .collect();
            writeln!(out, "edges {}: {}", r + 1, list.join(", ")).unwrap();
        }
        out
    }
}

/// One top-to-bottom permutation per layer.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Solution {
    pub perms: Vec<Vec<NodeId>>,
}

impl Solution {
    pub fn positions(&self) -> Vec<Vec<usize>> {
        self.perms
            .iter()
            .map(|pi| {
                let mut pos = vec![usize::MAX; pi.len()];
                for (p, &v) in pi.iter().enumerate() {
                    pos[v] = p;
                }
                pos
            })
            .collect()
    }

    pub fn reversed(&self) -> Solution {
        Solution {
            perms: self
                .perms
                .iter()
                .map(|p| p.iter().rev().copied().collect())
                .collect(),
        }
    }

    pub fn to_text(&self, instance: &MlcmInstance, crossings: u64) -> String {
        let mut out = String::new();
        for (r, pi) in self.perms.iter().enumerate() {
            let names: Vec<&str> = pi.iter().map(|&v| instance.layers[r].labels[v].as_str()).collect();
            writeln!(out, "layer {}: {}", r + 1, names.join(" ")).unwrap();
        }
        writeln!(out, "crossings={crossings}").unwrap();
        out
    }

    /// Checks shape against `instance` and that every layer is tree-consistent.
    pub fn check_consistent(&self, instance: &MlcmInstance) -> Result<()> {
        check_shape(instance, self)?;
        for (r, (layer, pi)) in instance.layers.iter().zip(&self.perms).enumerate() {
            if !is_tree_consistent(&layer.tree, pi).map_err(|_| Error::PermutationMismatch { layer: r })? {
                return Err(Error::NotTreeConsistent { layer: r });
            }
        }
        Ok(())
    }
}

fn check_shape(instance: &MlcmInstance, sol: &Solution) -> Result<()> {
    if sol.perms.len() != instance.p() {
        return Err(Error::LayerCountMismatch {
            expected: instance.p(),
            found: sol.perms.len(),
        });
    }
    for (r, (layer, pi)) in instance.layers.iter().zip(&sol.perms).enumerate() {
        let mut seen = vec![false; layer.len()];
        if pi.len() != layer.len() {
            return Err(Error::PermutationMismatch { layer: r });
        }
        for &v in pi {
            if v >= seen.len() || std::mem::replace(&mut seen[v], true) {
                return Err(Error::PermutationMismatch { layer: r });
            }
        }
    }
    Ok(())
}

/// Crossings in one gap given endpoint positions on both layers.
pub fn gap_crossings(edges: &[(NodeId, NodeId)], upper: &[usize], lower: &[usize]) -> u64 {
    // Crossing pairs are the strict inversions of the lower positions once
    // edges are sorted by (upper, lower) position; shared endpoints tie and
    // never count.
    let mut keyed: Vec<(usize, usize)> = edges.iter().map(|&(i, k)| (upper[i], lower[k])).collect();
    keyed.sort_unstable();
    let size = lower.len() + 1;
    let mut fenwick = vec![0u64; size + 1];
    let mut total = 0u64;
    let mut inserted = 0u64;
    let mut idx = 0;
    while idx < keyed.len() {
        // Edges sharing an upper endpoint must not count against each other.
        let mut end = idx;
        while end < keyed.len() && keyed[end].0 == keyed[idx].0 {
            end += 1;
        }
        for &(_, lo) in &keyed[idx..end] {
            // earlier edges with lower position strictly greater than lo
            let mut at_most = 0;
            let mut x = lo + 1;
            while x > 0 {
                at_most += fenwick[x];
                x &= x - 1;
            }
            total += inserted - at_most;
        }
        for &(_, lo) in &keyed[idx..end] {
            let mut x = lo + 1;
            while x <= size {
                fenwick[x] += 1;
                x += x & x.wrapping_neg();
            }
            inserted += 1;
        }
        idx = end;
    }
    total
}

/// Total number of crossings of `sol` (tree consistency not required).
pub fn count_crossings(instance: &MlcmInstance, sol: &Solution) -> Result<u64> {
    check_shape(instance, sol)?;
    let pos = sol.positions();
    Ok(instance
        .edges
        .iter()
        .enumerate()
        .map(|(r, gap)| gap_crossings(gap, &pos[r], &pos[r + 1]))
        .sum())
}

pub fn validate_instance(instance: &MlcmInstance) -> ValidationReport {
    let mut report = ValidationReport::default();
    let p = instance.p();
    if p == 0 {
        report.push("no_layers", "instance has no layers");
    }
    if instance.edges.len() != p.saturating_sub(1) {
        report.push(
            "edge_gap_count",
            format!("expected {} edge gaps, found {}", p.saturating_sub(1), instance.edges.len()),
        );
    }
    for (r, gap) in instance.edges.iter().enumerate() {
        let mut seen = HashSet::new();
        for &(i, k) in gap {
            let ok_i = r < p && i < instance.layers[r].len();
            let ok_k = r + 1 < p && k < instance.layers[r + 1].len();
            if !ok_i || !ok_k {
                report.push(
                    "edge_not_consecutive",
                    format!("edge {i}-{k} of gap {} is not between consecutive layers", r + 1),
                );
                continue;
            }
            if !seen.insert((i, k)) {
                report.push("multi_edge", format!("edge {i}-{k} of gap {} repeated", r + 1));
            }
        }
    }
    for (r, layer) in instance.layers.iter().enumerate() {
        validate_tree(&layer.tree, layer.len(), r, &mut report);
    }
    report
}

fn validate_tree(tree: &LayerTree, n: usize, r: usize, report: &mut ValidationReport) {
    let layer = r + 1;
    if tree.root >= tree.nodes.len() {
        report.push("tree_structure", format!("tree {layer} has no root"));
        return;
    }
    if !tree.is_internal(tree.root) {
        report.push("tree_no_internal", format!("root of tree {layer} is not internal"));
    }
    if tree.nodes[tree.root].parent.is_some() {
        report.push("tree_structure", format!("root of tree {layer} has a parent"));
    }
    // Reachability from the root through child links, with parent links
    // agreeing, detects cycles and disconnected parts.
    let mut reached = vec![false; tree.nodes.len()];
    let mut stack = vec![tree.root];
    reached[tree.root] = true;
    while let Some(t) = stack.pop() {
        for &c in &tree.nodes[t].children {
            if c >= tree.nodes.len() || reached[c] || tree.nodes[c].parent != Some(t) {
                report.push("tree_structure", format!("tree {layer} is not a rooted tree"));
                return;
            }
            reached[c] = true;
            stack.push(c);
        }
    }
    if reached.iter().any(|&x| !x) {
        report.push("tree_structure", format!("tree {layer} is disconnected"));
    }
    let mut leaf_seen = vec![false; n];
    for (t, node) in tree.nodes.iter().enumerate() {
        match node.kind {
            TreeNodeKind::Leaf(v) => {
                if !node.children.is_empty() {
                    report.push("tree_structure", format!("leaf of tree {layer} has children"));
                }
                if v >= n {
                    report.push(
                        "tree_leaf_mismatch",
                        format!("tree {layer} has leaf {v} which is not a node of the layer"),
                    );
                } else if std::mem::replace(&mut leaf_seen[v], true) {
                    report.push("tree_leaf_mismatch", format!("node {v} appears twice in tree {layer}"));
                }
            }
            TreeNodeKind::Internal { .. } => {
                if node.children.is_empty() && reached[t] {
                    report.push(
                        "tree_leaf_mismatch",
                        format!("tree {layer} has an internal node without leaves"),
                    );
                }
            }
        }
    }
    for (v, seen) in leaf_seen.iter().enumerate() {
        if !seen {
            report.push("tree_leaf_mismatch", format!("node {v} of layer {layer} is not a tree leaf"));
        }
    }
}

// ---------------------------------------------------------------------------
// Text format

struct Cursor<'a> {
    line: usize,
    text: &'a str,
    offset: usize,
    base_column: usize,
}

impl<'a> Cursor<'a> {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::Syntax {
            location: Location {
                line: self.line,
                column: self.base_column + self.offset + 1,
            },
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.text[self.offset..].chars().next() {
            if !c.is_whitespace() {
                break;
            }
            self.offset += c.len_utf8();
        }
    }

    fn peek(&self) -> Option<char> {
        self.text[self.offset..].chars().next()
    }

    fn ident(&mut self) -> Option<&'a str> {
        let start = self.offset;
        while let Some(c) = self.peek() {
            if c.is_whitespace() || "(),-:".contains(c) {
                break;
            }
            self.offset += c.len_utf8();
        }
        (self.offset > start).then(|| &self.text[start..self.offset])
    }
}

fn is_name(s: &str) -> bool {
    !s.is_empty() && !s.chars().any(|c| c.is_whitespace() || "(),-:".contains(c))
}

fn parse_tree(cur: &mut Cursor, names: &HashMap<&str, NodeId>) -> Result<LayerTree> {
    let mut b = TreeBuilder::default();
    let mut leaves = HashSet::new();
    fn node(
        cur: &mut Cursor,
        names: &HashMap<&str, NodeId>,
        b: &mut TreeBuilder,
        parent: Option<usize>,
        leaves: &mut HashSet<NodeId>,
    ) -> Result<usize> {
        cur.skip_ws();
        let label = cur.ident();
        if cur.peek() == Some('(') {
            cur.offset += 1;
            let me = b.internal(parent, label.map(str::to_string));
            loop {
                cur.skip_ws();
                match cur.peek() {
                    Some(')') => {
                        cur.offset += 1;
                        return Ok(me);
                    }
                    None => return Err(cur.err("unterminated '('")),
                    _ => {
                        node(cur, names, b, Some(me), leaves)?;
                    }
                }
            }
        }
        let name = label.ok_or_else(|| cur.err("expected a node name or '('"))?;
        let v = *names
            .get(name)
            .ok_or_else(|| cur.err(format!("tree leaf {name} is not a node of this layer")))?;
        if !leaves.insert(v) {
            return Err(cur.err(format!("tree leaf {name} appears twice")));
        }
        let parent = parent.ok_or_else(|| cur.err("tree root must be internal"))?;
        Ok(b.leaf(parent, v))
    }
    let root = node(cur, names, &mut b, None, &mut leaves)?;
    cur.skip_ws();
    if cur.peek().is_some() {
        return Err(cur.err("trailing input after tree"));
    }
    if leaves.len() != names.len() {
        return Err(cur.err("tree does not cover every node of the layer"));
    }
    Ok(b.finish(root))
}

/// Parses the instance text format:
///
/// ```text
/// p=2
/// layer 1: a b c
/// tree 1: (s1(a b) c)
/// layer 2: a b c
/// edges 1: a-a, b-b, c-c
/// ```
///
/// A layer without a `tree` line gets a star tree. Names may not contain
/// whitespace or any of `(),-:`.
pub fn parse_instance(text: &str) -> Result<MlcmInstance> {
    let mut p: Option<usize> = None;
    let mut labels: Vec<Option<Vec<String>>> = Vec::new();
    let mut trees: Vec<Option<(usize, usize, String)>> = Vec::new();
    let mut edges: Vec<Option<(usize, usize, String)>> = Vec::new();

    let layer_index = |cur: &Cursor, raw: &str, limit: usize| -> Result<usize> {
        let r: usize = raw
            .trim()
            .parse()
            .map_err(|_| cur.err(format!("bad layer index `{raw}`")))?;
        if r == 0 || r > limit {
            return Err(cur.err(format!("layer index {r} out of range")));
        }
        Ok(r - 1)
    };

    for (ln, raw_line) in text.lines().enumerate() {
        let line_no = ln + 1;
        let line = raw_line.trim();
        let cur = Cursor {
            line: line_no,
            text: raw_line,
            offset: 0,
            base_column: 0,
        };
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("p=") {
            let n: usize = rest.trim().parse().map_err(|_| cur.err("bad layer count"))?;
            if n == 0 {
                return Err(cur.err("layer count must be positive"));
            }
            p = Some(n);
            labels = vec![None; n];
            trees = vec![None; n];
            edges = vec![None; n.saturating_sub(1)];
            continue;
        }
        let n = p.ok_or_else(|| cur.err("expected `p=<int>` first"))?;
        let (head, body) = line.split_once(':').ok_or_else(|| cur.err("expected `<kind> <r>: ...`"))?;
        let body_col = raw_line.find(':').unwrap() + 1;
        let (kind, idx) = head.split_once(' ').ok_or_else(|| cur.err("expected `<kind> <r>`"))?;
        match kind {
            "layer" => {
                let r = layer_index(&cur, idx, n)?;
                let names: Vec<String> = body.split_whitespace().map(str::to_string).collect();
                if let Some(bad) = names.iter().find(|s| !is_name(s)) {
                    return Err(cur.err(format!("invalid node name `{bad}`")));
                }
                let unique: HashSet<&String> = names.iter().collect();
                if unique.len() != names.len() {
                    return Err(cur.err("duplicate node name in layer"));
                }
                if labels[r].replace(names).is_some() {
                    return Err(cur.err("layer defined twice"));
                }
            }
            "tree" => {
                let r = layer_index(&cur, idx, n)?;
                trees[r] = Some((line_no, body_col, raw_line[body_col..].to_string()));
            }
            "edges" => {
                let r = layer_index(&cur, idx, n.saturating_sub(1))?;
                edges[r] = Some((line_no, body_col, raw_line[body_col..].to_string()));
            }
            other => return Err(cur.err(format!("unknown line kind `{other}`"))),
        }
    }
    let p = p.ok_or_else(|| Error::Syntax {
        location: Location { line: 1, column: 1 },
        message: "missing `p=<int>`".into(),
    })?;
    let mut layers = Vec::with_capacity(p);
    for r in 0..p {
        let names = labels[r].take().ok_or_else(|| Error::Syntax {
            location: Location { line: 1, column: 1 },
            message: format!("layer {} not defined", r + 1),
        })?;
        let index: HashMap<&str, NodeId> = names.iter().enumerate().map(|(k, s)| (s.as_str(), k)).collect();
        let tree = match &trees[r] {
            None => LayerTree::star(names.len()),
            Some((line, col, body)) => {
                let mut cur = Cursor {
                    line: *line,
                    text: body,
                    offset: 0,
                    base_column: *col,
                };
                parse_tree(&mut cur, &index)?
            }
        };
        drop(index);
        layers.push(Layer { labels: names, tree });
    }
    let mut gaps = Vec::with_capacity(p - 1);
    for r in 0..p - 1 {
        let mut gap = Vec::new();
        if let Some((line, col, body)) = &edges[r] {
            let up: HashMap<&str, NodeId> =
                layers[r].labels.iter().enumerate().map(|(k, s)| (s.as_str(), k)).collect();
            let down: HashMap<&str, NodeId> =
                layers[r + 1].labels.iter().enumerate().map(|(k, s)| (s.as_str(), k)).collect();
            let cur = Cursor {
                line: *line,
                text: body,
                offset: 0,
                base_column: *col,
            };
            for item in body.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                let (a, b) = item
                    .split_once('-')
                    .ok_or_else(|| cur.err(format!("bad edge `{item}`")))?;
                let i = *up.get(a.trim()).ok_or_else(|| {
                    Error::InvalidInput(format!(
                        "edge {item}: {a} is not a node of layer {}; edges must join consecutive layers",
                        r + 1
                    ))
                })?;
                let k = *down.get(b.trim()).ok_or_else(|| {
                    Error::InvalidInput(format!(
                        "edge {item}: {b} is not a node of layer {}; edges must join consecutive layers",
                        r + 2
                    ))
                })?;
                gap.push((i, k));
            }
        }
        gaps.push(gap);
    }
    Ok(MlcmInstance { layers, edges: gaps })
}

/// Parses the solution format (`layer r: <nodes top to bottom>` lines and an
/// optional trailing `crossings=<int>`).
pub fn parse_solution(instance: &MlcmInstance, text: &str) -> Result<(Solution, Option<u64>)> {
    let mut perms: Vec<Option<Vec<NodeId>>> = vec![None; instance.p()];
    let mut crossings = None;
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let err = |m: String| Error::Syntax {
            location: Location { line: ln + 1, column: 1 },
            message: m,
        };
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("crossings=") {
            crossings = Some(rest.trim().parse().map_err(|_| err("bad crossing count".into()))?);
            continue;
        }
        let (head, body) = line.split_once(':').ok_or_else(|| err("expected `layer r: ...`".into()))?;
        let r: usize = head
            .strip_prefix("layer ")
            .and_then(|s| s.trim().parse().ok())
            .filter(|&r: &usize| r >= 1 && r <= instance.p())
            .ok_or_else(|| err(format!("bad layer header `{head}`")))?;
        let names: HashMap<&str, NodeId> = instance.layers[r - 1]
            .labels
            .iter()
            .enumerate()
            .map(|(k, s)| (s.as_str(), k))
            .collect();
        let pi = body
            .split_whitespace()
            .map(|s| names.get(s).copied().ok_or_else(|| err(format!("unknown node `{s}`"))))
            .collect::<Result<Vec<_>>>()?;
        perms[r - 1] = Some(pi);
    }
    let perms = perms
        .into_iter()
        .enumerate()
        .map(|(r, p)| p.ok_or(Error::PermutationMismatch { layer: r }))
        .collect::<Result<Vec<_>>>()?;
    let sol = Solution { perms };
    check_shape(instance, &sol)?;
    Ok((sol, crossings))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(n: usize) -> Vec<String> {
        (0..n).map(|k| ((b'a' + k as u8) as char).to_string()).collect()
    }

    fn two_block_tree() -> LayerTree {
        LayerTree::with_blocks(4, &[(Some("s1".into()), vec![0, 1]), (Some("s2".into()), vec![2, 3])])
    }

    #[test]
    fn lca_cases() {
        let star = LayerTree::star(2);
        assert_eq!(lca(&star, 0, 1).unwrap(), star.root);

        let t = LayerTree::with_blocks(3, &[(Some("s1".into()), vec![0, 1])]);
        let s1 = t.nodes[t.root].children[0];
        assert_eq!(lca(&t, 0, 1).unwrap(), s1);
        assert_eq!(lca(&t, 0, 2).unwrap(), t.root);

        let t = two_block_tree();
        assert_eq!(lca(&t, 1, 2).unwrap(), t.root);
        assert!(matches!(lca(&t, 0, 9), Err(Error::UnknownLeaf(9))));
    }

    #[test]
    fn tree_consistency() {
        let t = two_block_tree();
        assert!(is_tree_consistent(&t, &[0, 1, 2, 3]).unwrap());
        assert!(!is_tree_consistent(&t, &[0, 2, 1, 3]).unwrap());
        assert!(is_tree_consistent(&t, &[3, 2, 0, 1]).unwrap());
        assert!(is_tree_consistent(&LayerTree::star(4), &[2, 0, 3, 1]).unwrap());
        assert!(is_tree_consistent(&t, &[0, 1, 2]).is_err());
        assert!(is_tree_consistent(&t, &[0, 1, 1, 3]).is_err());
    }

    fn matched(p: usize, n: usize) -> MlcmInstance {
        MlcmInstance {
            layers: (0..p)
                .map(|_| Layer {
                    labels: labels(n),
                    tree: LayerTree::star(n),
                })
                .collect(),
            edges: (0..p - 1).map(|_| (0..n).map(|v| (v, v)).collect()).collect(),
        }
    }

    #[test]
    fn crossing_cases() {
        let inst = matched(2, 2);
        let same = Solution {
            perms: vec![vec![0, 1], vec![0, 1]],
        };
        assert_eq!(count_crossings(&inst, &same).unwrap(), 0);
        let flip = Solution {
            perms: vec![vec![0, 1], vec![1, 0]],
        };
        assert_eq!(count_crossings(&inst, &flip).unwrap(), 1);
        let bad = Solution {
            perms: vec![vec![0, 1], vec![1]],
        };
        assert!(count_crossings(&inst, &bad).is_err());
    }

    #[test]
    fn shared_endpoints_never_cross() {
        let mut inst = matched(2, 2);
        inst.edges[0] = vec![(0, 0), (0, 1), (1, 0)];
        let sol = Solution {
            perms: vec![vec![0, 1], vec![1, 0]],
        };
        // the only pair with four distinct endpoints is (0,1)-(1,0)
        assert_eq!(count_crossings(&inst, &sol).unwrap(), 0);
        let sol = Solution {
            perms: vec![vec![0, 1], vec![0, 1]],
        };
        assert_eq!(count_crossings(&inst, &sol).unwrap(), 1);
    }

    #[test]
    fn validation_catches_defects() {
        let inst = matched(3, 3);
        assert!(validate_instance(&inst).is_empty());

        let mut bad = inst.clone();
        bad.edges[0].push((0, 7));
        assert!(validate_instance(&bad).has("edge_not_consecutive"));

        let mut bad = inst.clone();
        bad.edges[1].push((1, 1));
        assert!(validate_instance(&bad).has("multi_edge"));

        let mut bad = inst.clone();
        bad.layers[0].tree = LayerTree::star(4);
        assert!(validate_instance(&bad).has("tree_leaf_mismatch"));

        let mut bad = inst.clone();
        bad.layers[1].tree = LayerTree::star(2);
        assert!(validate_instance(&bad).has("tree_leaf_mismatch"));

        let mut bad = inst;
        bad.edges.pop();
        assert!(validate_instance(&bad).has("edge_gap_count"));
    }

    #[test]
    fn text_round_trip() {
        let text = "p=2\nlayer 1: a b c\ntree 1: (s1(a b) c)\nlayer 2: a b c\nedges 1: a-a, b-c, c-b\n";
        let inst = parse_instance(text).unwrap();
        assert_eq!(inst.p(), 2);
        assert_eq!(inst.edges[0], vec![(0, 0), (1, 2), (2, 1)]);
        assert_eq!(inst.layers[0].tree.height(), 2);
        assert!(validate_instance(&inst).is_empty());
        let again = parse_instance(&inst.to_text()).unwrap();
        assert_eq!(again, inst);

        let sol = inst.canonical_solution();
        let c = count_crossings(&inst, &sol).unwrap();
        let (back, n) = parse_solution(&inst, &sol.to_text(&inst, c)).unwrap();
        assert_eq!(back, sol);
        assert_eq!(n, Some(c));
    }

    #[test]
    fn text_errors() {
        let e = parse_instance("p=2\nlayer 1: a\nlayer 2: b\nedges 1: a-c\n").unwrap_err();
        assert!(e.to_string().contains("consecutive layers"));
        let e = parse_instance("p=1\nlayer 1: a b\ntree 1: (a b\n").unwrap_err();
        assert_eq!(e.code(), "syntax");
        let e = parse_instance("p=1\nlayer 1: a b\ntree 1: (a)\n").unwrap_err();
        assert!(e.to_string().contains("cover"));
        let e = parse_instance("layer 1: a\n").unwrap_err();
        assert_eq!(e.location().unwrap().line, 1);
        let e = parse_instance("p=1\nlayer 1: a b\ntree 1: (a  q)\n").unwrap_err();
        assert_eq!(e.location().unwrap().column, 14);
    }

    #[test]
    fn single_block_covering_layer_is_root() {
        let t = LayerTree::with_blocks(2, &[(Some("s".into()), vec![0, 1])]);
        assert_eq!(t.label(t.root), Some("s"));
        assert_eq!(t.height(), 1);
    }

    #[test]
    fn same_shape_ignores_order() {
        let a = two_block_tree();
        let b = LayerTree::with_blocks(4, &[(None, vec![3, 2]), (None, vec![1, 0])]);
        assert!(a.same_shape(&b, &|v| v));
        assert!(!a.same_shape(&b, &|v| [0, 2, 1, 3][v]));
    }
}
