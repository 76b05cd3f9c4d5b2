//! Seeded generators for test corpora.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::instance::{Layer, LayerTree, MlcmInstance, NodeId, Solution, TreeNodeKind};
use crate::story::{Scene, Story};

#[derive(Debug, Clone)]
pub struct InstanceParams {
    pub layers: (usize, usize),
    pub nodes: (usize, usize),
    pub max_blocks: usize,
    /// Probability that a gap is a perfect matching when layer sizes agree.
    pub perfect_matching: f64,
}

impl Default for InstanceParams {
    fn default() -> Self {
        InstanceParams {
            layers: (2, 4),
            nodes: (3, 7),
            max_blocks: 2,
            perfect_matching: 0.3,
        }
    }
}

fn random_tree<R: Rng>(rng: &mut R, n: usize, max_blocks: usize, layer: usize) -> LayerTree {
    let mut nodes: Vec<NodeId> = (0..n).collect();
    nodes.shuffle(rng);
    let mut blocks = Vec::new();
    let mut rest = &nodes[..];
    for k in 0..rng.gen_range(0..=max_blocks) {
        if rest.len() < 2 {
            break;
        }
        let size = rng.gen_range(2..=rest.len().min(4));
        let mut members = rest[..size].to_vec();
        members.sort_unstable();
        blocks.push((Some(format!("s{}_{}", layer + 1, k + 1)), members));
        rest = &rest[size..];
    }
    LayerTree::with_blocks(n, &blocks)
}

fn random_gap<R: Rng>(rng: &mut R, a: usize, b: usize, perfect: f64) -> Vec<(NodeId, NodeId)> {
    let mut left: Vec<NodeId> = (0..a).collect();
    let mut right: Vec<NodeId> = (0..b).collect();
    left.shuffle(rng);
    right.shuffle(rng);
    let max = a.min(b);
    let k = if a == b && rng.gen_bool(perfect) {
        max
    } else {
        rng.gen_range(1.min(max)..=max)
    };
    let mut gap: Vec<(NodeId, NodeId)> = left.into_iter().zip(right).take(k).collect();
    gap.sort_unstable();
    gap
}

fn labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("v{}", i + 1)).collect()
}

/// Random instance with height-two trees and random matchings between
/// consecutive layers.
pub fn random_instance<R: Rng>(rng: &mut R, params: &InstanceParams) -> MlcmInstance {
    let p = rng.gen_range(params.layers.0..=params.layers.1);
    let sizes: Vec<usize> = (0..p).map(|_| rng.gen_range(params.nodes.0..=params.nodes.1)).collect();
    let layers = sizes
        .iter()
        .enumerate()
        .map(|(r, &n)| Layer {
            labels: labels(n),
            tree: random_tree(rng, n, params.max_blocks, r),
        })
        .collect();
    let edges = (0..p.saturating_sub(1))
        .map(|r| random_gap(rng, sizes[r], sizes[r + 1], params.perfect_matching))
        .collect();
    MlcmInstance { layers, edges }
}

/// Random instance in which some layer is duplicated behind an identity
/// matching, so at least one merge is possible.
pub fn random_mergeable_instance<R: Rng>(rng: &mut R, params: &InstanceParams) -> MlcmInstance {
    let mut inst = random_instance(rng, params);
    let r = rng.gen_range(0..inst.p());
    let copy = inst.layers[r].clone();
    let n = copy.len();
    inst.layers.insert(r + 1, copy);
    // edges that left layer r now leave its copy
    let identity: Vec<(NodeId, NodeId)> = (0..n).map(|v| (v, v)).collect();
    inst.edges.insert(r, identity);
    inst
}

/// Uniformly shuffles the children of every internal node.
pub fn random_tree_ordering<R: Rng>(rng: &mut R, tree: &LayerTree) -> Vec<NodeId> {
    let mut out = Vec::new();
    let mut stack = vec![tree.root];
    while let Some(t) = stack.pop() {
        match tree.nodes[t].kind {
            TreeNodeKind::Leaf(v) => out.push(v),
            TreeNodeKind::Internal { .. } => {
                let mut children = tree.nodes[t].children.clone();
                children.shuffle(rng);
                stack.extend(children.into_iter().rev());
            }
        }
    }
    out
}

pub fn random_solution<R: Rng>(rng: &mut R, instance: &MlcmInstance) -> Solution {
    Solution {
        perms: instance.layers.iter().map(|l| random_tree_ordering(rng, &l.tree)).collect(),
    }
}

/// Random valid story: in every time slot the characters are split into
/// random groups, each group forming one scene.
pub fn random_story<R: Rng>(rng: &mut R, characters: usize, slots: usize) -> Story {
    let names: Vec<String> = (0..characters).map(|i| format!("c{}", i + 1)).collect();
    let mut scenes = Vec::new();
    let mut used = vec![false; characters];
    for t in 0..slots {
        let mut present: Vec<usize> = (0..characters).filter(|_| rng.gen_bool(0.7)).collect();
        if t + 1 == slots {
            present.extend((0..characters).filter(|&c| !used[c]));
            present.sort_unstable();
            present.dedup();
        }
        present.shuffle(rng);
        while !present.is_empty() {
            let size = rng.gen_range(1..=present.len().min(3));
            let mut group: Vec<usize> = present.drain(..size).collect();
            group.sort_unstable();
            for &c in &group {
                used[c] = true;
            }
            let members: Vec<&str> = group.iter().map(|&c| names[c].as_str()).collect();
            let begin = 2 * t as i64;
            scenes.push(Scene::new(&format!("s{}", scenes.len() + 1), &members, begin, begin + 1));
        }
    }
    Story {
        characters: names,
        scenes,
    }
}
