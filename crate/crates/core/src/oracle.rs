//! Brute-force reference solver over tree-consistent permutations.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::instance::{count_crossings, LayerTree, MlcmInstance, NodeId, Solution, TreeNodeKind};

pub const DEFAULT_LEAF_CAP: usize = 9;
pub const DEFAULT_BUDGET: u64 = 10_000_000;

/// Number of tree-consistent permutations: the product of `children!` over
/// internal nodes.
pub fn count_tree_orderings(tree: &LayerTree) -> u64 {
    tree.nodes
        .iter()
        .filter(|n| matches!(n.kind, TreeNodeKind::Internal { .. }))
        .map(|n| (1..=n.children.len() as u64).fold(1u64, |acc, k| acc.saturating_mul(k)))
        .fold(1u64, |acc, f| acc.saturating_mul(f))
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for rest in permutations(k - 1) {
        for at in 0..=rest.len() {
            let mut p = rest.clone();
            p.insert(at, k - 1);
            out.push(p);
        }
    }
    out.sort();
    out
}

fn orderings_below(tree: &LayerTree, t: usize) -> Vec<Vec<NodeId>> {
    match tree.nodes[t].kind {
        TreeNodeKind::Leaf(v) => vec![vec![v]],
        TreeNodeKind::Internal { .. } => {
            let children = &tree.nodes[t].children;
            let child_orders: Vec<Vec<Vec<NodeId>>> = children.iter().map(|&c| orderings_below(tree, c)).collect();
            let mut out = Vec::new();
            for perm in permutations(children.len()) {
                let mut partial: Vec<Vec<NodeId>> = vec![Vec::new()];
                for &c in &perm {
                    partial = partial
                        .iter()
                        .flat_map(|pre| {
                            child_orders[c].iter().map(move |suffix| {
                                let mut v = pre.clone();
                                v.extend_from_slice(suffix);
                                v
                            })
                        })
                        .collect();
                }
                out.extend(partial);
            }
            out
        }
    }
}

/// Every tree-consistent permutation of the tree's leaves, each exactly once.
pub fn enumerate_tree_orderings(tree: &LayerTree, leaf_cap: usize) -> Result<Vec<Vec<NodeId>>> {
    let leaves = tree.leaf_index().len();
    if leaves > leaf_cap {
        return Err(Error::LimitExceeded(format!("{leaves} leaves exceed the cap of {leaf_cap}")));
    }
    Ok(orderings_below(tree, tree.root))
}

/// Order relation of the edge pairs that can cross, as a bitset. For the
/// upper side bit `k` is set when pair `k`'s first edge starts above the
/// second; the pair crosses iff the upper and lower bits differ.
#[derive(Debug, Clone)]
struct GapPairs {
    pairs: Vec<(usize, usize)>,
}

impl GapPairs {
    fn new(edges: &[(NodeId, NodeId)]) -> Self {
        let mut pairs = Vec::new();
        for e in 0..edges.len() {
            for f in e + 1..edges.len() {
                if edges[e].0 != edges[f].0 && edges[e].1 != edges[f].1 {
                    pairs.push((e, f));
                }
            }
        }
        GapPairs { pairs }
    }

    fn mask(&self, edges: &[(NodeId, NodeId)], pos: &[usize], upper: bool) -> Vec<u64> {
        let mut bits = vec![0u64; self.pairs.len().div_ceil(64)];
        for (k, &(e, f)) in self.pairs.iter().enumerate() {
            let (a, b) = if upper { (edges[e].0, edges[f].0) } else { (edges[e].1, edges[f].1) };
            if pos[a] < pos[b] {
                bits[k / 64] |= 1 << (k % 64);
            }
        }
        bits
    }
}

fn xor_count(a: &[u64], b: &[u64]) -> u64 {
    a.iter().zip(b).map(|(x, y)| (x ^ y).count_ones() as u64).sum()
}

fn positions(pi: &[NodeId]) -> Vec<usize> {
    let mut pos = vec![0; pi.len()];
    for (p, &v) in pi.iter().enumerate() {
        pos[v] = p;
    }
    pos
}

/// Minimum crossing count and a witness, by dynamic programming over the
/// layers. Each layer may have at most `budget` tree-consistent orderings.
pub fn brute_force_optimum(instance: &MlcmInstance, budget: u64) -> Result<(u64, Solution)> {
    let p = instance.p();
    if p == 0 {
        return Ok((0, Solution { perms: Vec::new() }));
    }
    for (r, layer) in instance.layers.iter().enumerate() {
        let count = count_tree_orderings(&layer.tree);
        if count > budget {
            return Err(Error::LimitExceeded(format!(
                "layer {} has {count} tree-consistent orderings, budget {budget}",
                r + 1
            )));
        }
    }
    let states: Vec<Vec<Vec<NodeId>>> = instance
        .layers
        .iter()
        .map(|l| orderings_below(&l.tree, l.tree.root))
        .collect();
    let gaps: Vec<GapPairs> = instance.edges.iter().map(|e| GapPairs::new(e)).collect();
    // value and predecessor of every state of the current layer
    let mut value: Vec<u64> = vec![0; states[0].len()];
    let mut back: Vec<Vec<usize>> = Vec::with_capacity(p);
    back.push(vec![usize::MAX; states[0].len()]);
    for r in 0..p - 1 {
        let edges = &instance.edges[r];
        let gap = &gaps[r];
        // best state per distinct upper mask
        let mut by_upper: HashMap<Vec<u64>, (u64, usize)> = HashMap::new();
        for (s, pi) in states[r].iter().enumerate() {
            let m = gap.mask(edges, &positions(pi), true);
            let entry = by_upper.entry(m).or_insert((u64::MAX, usize::MAX));
            if value[s] < entry.0 || (value[s] == entry.0 && s < entry.1) {
                *entry = (value[s], s);
            }
        }
        let mut uppers: Vec<(Vec<u64>, (u64, usize))> = by_upper.into_iter().collect();
        uppers.sort_by_key(|a| a.1 .1);
        let mut by_lower: HashMap<Vec<u64>, (u64, usize)> = HashMap::new();
        let mut next_value = Vec::with_capacity(states[r + 1].len());
        let mut next_back = Vec::with_capacity(states[r + 1].len());
        for pi in &states[r + 1] {
            let m = gap.mask(edges, &positions(pi), false);
            let best = *by_lower.entry(m.clone()).or_insert_with(|| {
                uppers
                    .iter()
                    .map(|(um, (v, s))| (v + xor_count(um, &m), *s))
                    .min()
                    .expect("layer has at least one ordering")
            });
            next_value.push(best.0);
            next_back.push(best.1);
        }
        value = next_value;
        back.push(next_back);
    }
    let (mut s, &best) = value.iter().enumerate().min_by_key(|&(s, v)| (*v, s)).unwrap();
    let mut perms = vec![Vec::new(); p];
    for r in (0..p).rev() {
        perms[r] = states[r][s].clone();
        s = back[r][s];
    }
    Ok((best, Solution { perms }))
}

/// Minimum over the full product of per-layer orderings. Independent of the
/// dynamic program; only usable on tiny instances.
pub fn naive_optimum(instance: &MlcmInstance, budget: u64) -> Result<(u64, Solution)> {
    let states: Vec<Vec<Vec<NodeId>>> = instance
        .layers
        .iter()
        .map(|l| orderings_below(&l.tree, l.tree.root))
        .collect();
    let total = states.iter().fold(1u64, |acc, s| acc.saturating_mul(s.len() as u64));
    if total > budget {
        return Err(Error::LimitExceeded(format!("{total} combinations, budget {budget}")));
    }
    let mut index = vec![0usize; states.len()];
    let mut best: Option<(u64, Solution)> = None;
    loop {
        let sol = Solution {
            perms: index.iter().zip(&states).map(|(&i, s)| s[i].clone()).collect(),
        };
        let c = count_crossings(instance, &sol)?;
        if best.as_ref().is_none_or(|(b, _)| c < *b) {
            best = Some((c, sol));
        }
        let mut r = 0;
        loop {
            if r == index.len() {
                return Ok(best.unwrap_or((0, Solution { perms: Vec::new() })));
            }
            index[r] += 1;
            if index[r] < states[r].len() {
                break;
            }
            index[r] = 0;
            r += 1;
        }
    }
}
