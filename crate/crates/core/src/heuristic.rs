//! Layer-sweep barycenter heuristic that respects the layer trees.

use crate::instance::{count_crossings, LayerTree, MlcmInstance, NodeId, Solution, TreeNodeKind};

fn relative(pos: usize, len: usize) -> f64 {
    if len <= 1 {
        0.5
    } else {
        pos as f64 / (len - 1) as f64
    }
}

/// Reorders one layer. `neighbors[v]` lists relative positions of `v`'s
/// neighbours on the reference layer.
fn order_layer(tree: &LayerTree, current: &[NodeId], neighbors: &[Vec<f64>]) -> Vec<NodeId> {
    let n = current.len();
    let mut pos = vec![0; n];
    for (p, &v) in current.iter().enumerate() {
        pos[v] = p;
    }
    let leaf_bary: Vec<f64> = (0..n)
        .map(|v| {
            if neighbors[v].is_empty() {
                relative(pos[v], n)
            } else {
                neighbors[v].iter().sum::<f64>() / neighbors[v].len() as f64
            }
        })
        .collect();
    let sets = tree.leaf_sets();
    let key = |t: usize| -> (f64, usize) {
        let set = &sets[t];
        let bary = set.iter().map(|&v| leaf_bary[v]).sum::<f64>() / set.len().max(1) as f64;
        let first = set.iter().map(|&v| pos[v]).min().unwrap_or(0);
        (bary, first)
    };
    let mut out = Vec::with_capacity(n);
    let mut stack = vec![tree.root];
    while let Some(t) = stack.pop() {
        match tree.nodes[t].kind {
            TreeNodeKind::Leaf(v) => out.push(v),
            TreeNodeKind::Internal { .. } => {
                let mut children: Vec<(f64, usize, usize)> = tree.nodes[t]
                    .children
                    .iter()
                    .map(|&c| {
                        let (b, f) = key(c);
                        (b, f, c)
                    })
                    .collect();
                children.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                stack.extend(children.into_iter().rev().map(|c| c.2));
            }
        }
    }
    out
}

/// Alternating left-to-right and right-to-left sweeps starting from the
/// depth-first order. Returns the best solution seen.
pub fn barycenter_heuristic(instance: &MlcmInstance, sweeps: usize) -> Solution {
    let p = instance.p();
    let mut sol = instance.canonical_solution();
    let mut best = sol.clone();
    let mut best_count = count_crossings(instance, &sol).unwrap_or(u64::MAX);
    if p < 2 {
        return best;
    }
    for s in 0..sweeps.max(1) {
        if best_count == 0 {
            break;
        }
        let forward = s % 2 == 0;
        let order: Vec<usize> = if forward { (1..p).collect() } else { (0..p - 1).rev().collect() };
        for r in order {
            let reference = if forward { r - 1 } else { r + 1 };
            let ref_len = sol.perms[reference].len();
            let mut ref_pos = vec![0; ref_len];
            for (q, &v) in sol.perms[reference].iter().enumerate() {
                ref_pos[v] = q;
            }
            let mut neighbors = vec![Vec::new(); instance.layers[r].len()];
            if forward {
                for &(u, v) in &instance.edges[r - 1] {
                    neighbors[v].push(relative(ref_pos[u], ref_len));
                }
            } else {
                for &(u, v) in &instance.edges[r] {
                    neighbors[u].push(relative(ref_pos[v], ref_len));
                }
            }
            sol.perms[r] = order_layer(&instance.layers[r].tree, &sol.perms[r], &neighbors);
        }
        let count = count_crossings(instance, &sol).unwrap_or(u64::MAX);
        if count < best_count {
            best_count = count;
            best = sol.clone();
        }
    }
    best
}
