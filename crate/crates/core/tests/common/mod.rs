#![allow(dead_code)]

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use storymin::instance::{Layer, LayerTree, MlcmInstance, NodeId, Solution};
use storymin::lp::Sense;
use storymin::maxcut::{CutEdge, MaxCutGraph};
use storymin::random::{random_instance, InstanceParams};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn layer(n: usize, blocks: &[&[NodeId]]) -> Layer {
    let blocks: Vec<(Option<String>, Vec<NodeId>)> = blocks
        .iter()
        .enumerate()
        .map(|(k, b)| (Some(format!("s{}", k + 1)), b.to_vec()))
        .collect();
    Layer {
        labels: (0..n).map(|i| format!("v{}", i + 1)).collect(),
        tree: LayerTree::with_blocks(n, &blocks),
    }
}

/// Layer 1 groups {a,b},{c,d}; layer 2 groups {a,c},{b,d}.
pub fn bundle_swap() -> MlcmInstance {
    MlcmInstance {
        layers: vec![layer(4, &[&[0, 1], &[2, 3]]), layer(4, &[&[0, 2], &[1, 3]])],
        edges: vec![(0..4).map(|v| (v, v)).collect()],
    }
}

pub const BUNDLE_SWAP_STORY: &str = r#"{
  "characters": ["a", "b", "c", "d"],
  "scenes": [
    {"id": "s1", "members": ["a", "b"], "begin": 0, "end": 1},
    {"id": "s2", "members": ["c", "d"], "begin": 0, "end": 1},
    {"id": "s3", "members": ["a", "c"], "begin": 2, "end": 3},
    {"id": "s4", "members": ["b", "d"], "begin": 2, "end": 3}
  ]
}"#;

pub const FIG1_STORY: &str = r#"{
  "characters": ["c1", "c2", "c3", "c4"],
  "scenes": [
    {"id": "s1", "members": ["c1", "c2"], "begin": 0, "end": 2},
    {"id": "s2", "members": ["c1", "c3"], "begin": 3, "end": 6},
    {"id": "s3", "members": ["c4"], "begin": 4, "end": 5},
    {"id": "s4", "members": ["c1", "c3", "c4"], "begin": 7, "end": 9}
  ]
}"#;

pub fn corpus(count: usize, seed: u64) -> Vec<MlcmInstance> {
    let mut r = rng(seed);
    let params = InstanceParams::default();
    (0..count).map(|_| random_instance(&mut r, &params)).collect()
}

/// Every pair of edges in every gap, compared directly.
pub fn pairwise_crossings(instance: &MlcmInstance, sol: &Solution) -> u64 {
    let pos = sol.positions();
    let mut total = 0;
    for (r, gap) in instance.edges.iter().enumerate() {
        for (a, &(i, k)) in gap.iter().enumerate() {
            for &(j, l) in &gap[a + 1..] {
                if i == j || k == l {
                    continue;
                }
                let above = pos[r][i] < pos[r][j];
                let below = pos[r + 1][k] < pos[r + 1][l];
                if above != below {
                    total += 1;
                }
            }
        }
    }
    total
}

pub struct LpRowSpec {
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs()))?;
        if a[p][c].abs() < 1e-10 {
            return None;
        }
        a.swap(p, c);
        b.swap(p, c);
        for r in 0..n {
            if r != c {
                let f = a[r][c] / a[c][c];
                if f != 0.0 {
                    for k in c..n {
                        a[r][k] -= f * a[c][k];
                    }
                    b[r] -= f * b[c];
                }
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// Minimum of a bounded LP by enumerating every basic solution. `None`
/// means infeasible.
pub fn vertex_enumeration(cost: &[f64], lower: &[f64], upper: &[f64], rows: &[LpRowSpec]) -> Option<f64> {
    let n = cost.len();
    // candidate hyperplanes: rows, then x_j = lower_j, then x_j = upper_j
    let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
    for row in rows {
        let mut a = vec![0.0; n];
        for &(j, v) in &row.coeffs {
            a[j] += v;
        }
        planes.push((a, row.rhs));
    }
    for j in 0..n {
        let mut a = vec![0.0; n];
        a[j] = 1.0;
        planes.push((a.clone(), lower[j]));
        planes.push((a, upper[j]));
    }
    let feasible = |x: &[f64]| {
        (0..n).all(|j| x[j] >= lower[j] - 1e-9 && x[j] <= upper[j] + 1e-9)
            && rows.iter().all(|row| {
                let act: f64 = row.coeffs.iter().map(|&(j, v)| v * x[j]).sum();
                match row.sense {
                    Sense::Le => act <= row.rhs + 1e-9,
                    Sense::Ge => act >= row.rhs - 1e-9,
                    Sense::Eq => (act - row.rhs).abs() <= 1e-9,
                }
            })
    };
    let mut best: Option<f64> = None;
    let mut chosen = Vec::new();
    fn rec(
        start: usize,
        n: usize,
        planes: &[(Vec<f64>, f64)],
        chosen: &mut Vec<usize>,
        visit: &mut dyn FnMut(&[usize]),
    ) {
        if chosen.len() == n {
            visit(chosen);
            return;
        }
        for k in start..planes.len() {
            chosen.push(k);
            rec(k + 1, n, planes, chosen, visit);
            chosen.pop();
        }
    }
    let mut visit = |set: &[usize]| {
        let a: Vec<Vec<f64>> = set.iter().map(|&k| planes[k].0.clone()).collect();
        let b: Vec<f64> = set.iter().map(|&k| planes[k].1).collect();
        if let Some(x) = solve_square(a, b) {
            if feasible(&x) {
                let z: f64 = cost.iter().zip(&x).map(|(c, v)| c * v).sum();
                if best.is_none_or(|bz| z < bz) {
                    best = Some(z);
                }
            }
        }
    };
    rec(0, n, &planes, &mut chosen, &mut visit);
    best
}

pub fn random_graph<R: Rng>(rng: &mut R, nodes: usize, density: f64) -> MaxCutGraph {
    let mut edges = Vec::new();
    for u in 0..nodes {
        for v in u + 1..nodes {
            if rng.gen_bool(density) {
                edges.push(CutEdge {
                    u,
                    v,
                    weight: rng.gen_range(-3..=3),
                });
            }
        }
    }
    MaxCutGraph::new(nodes, edges, 0)
}

/// Edge sets of all simple cycles.
pub fn simple_cycles(graph: &MaxCutGraph) -> Vec<Vec<usize>> {
    let n = graph.node_count();
    let mut found = std::collections::BTreeSet::new();
    fn dfs(
        graph: &MaxCutGraph,
        start: usize,
        v: usize,
        visited: &mut Vec<bool>,
        path: &mut Vec<usize>,
        found: &mut std::collections::BTreeSet<Vec<usize>>,
    ) {
        for &(w, e) in graph.neighbors(v) {
            if path.contains(&e) {
                continue;
            }
            if w == start && path.len() >= 2 {
                let mut cycle = path.clone();
                cycle.push(e);
                cycle.sort_unstable();
                found.insert(cycle);
            } else if w > start && !visited[w] {
                visited[w] = true;
                path.push(e);
                dfs(graph, start, w, visited, path, found);
                path.pop();
                visited[w] = false;
            }
        }
    }
    for s in 0..n {
        let mut visited = vec![false; n];
        visited[s] = true;
        dfs(graph, s, s, &mut visited, &mut Vec::new(), &mut found);
    }
    found.into_iter().collect()
}

/// Largest violation over all odd subsets `F` of one cycle.
pub fn max_cycle_violation(cycle: &[usize], y: &[f64]) -> f64 {
    let k = cycle.len();
    let mut best = f64::NEG_INFINITY;
    for mask in 0u32..(1 << k) {
        if mask.count_ones() % 2 == 0 {
            continue;
        }
        let mut v = 0.0;
        for (b, &e) in cycle.iter().enumerate() {
            if mask >> b & 1 == 1 {
                v += y[e];
            } else {
                v -= y[e];
            }
        }
        v -= mask.count_ones() as f64 - 1.0;
        best = best.max(v);
    }
    best
}
