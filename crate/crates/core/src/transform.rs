//! Story to layered-graph construction, and merging of redundant layers.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::instance::{Layer, LayerTree, MlcmInstance, NodeId, Solution};
use crate::story::{self, Story, StoryMode, Time};

/// Provenance of a built instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransformTrace {
    /// One time point per layer, strictly increasing.
    pub times: Vec<Time>,
    /// Indices of the scenes active on each layer.
    pub active_scenes: Vec<Vec<usize>>,
    /// Character index of each node, per layer.
    pub characters: Vec<Vec<usize>>,
    /// `(character index, layer) -> node id`.
    pub node_of: HashMap<(usize, usize), NodeId>,
}

/// Builds the layered instance of a valid story.
///
/// Equal time points share a layer. Each layer holds the characters alive at
/// its time point, in declaration order; each active scene becomes a labeled
/// block of its members.
pub fn build_instance(story: &Story) -> Result<(MlcmInstance, TransformTrace)> {
    let report = story::validate_story(story);
    if !report.is_empty() {
        return Err(Error::InvalidInput(report.to_string().trim_end().to_string()));
    }
    let mut times: Vec<Time> = story.scenes.iter().flat_map(|s| [s.begin, s.end]).collect();
    times.sort();
    times.dedup();

    let spans = story::lifespans(story);
    let char_index: HashMap<&str, usize> = story
        .characters
        .iter()
        .enumerate()
        .map(|(k, c)| (c.as_str(), k))
        .collect();

    let mut layers = Vec::with_capacity(times.len());
    let mut characters = Vec::with_capacity(times.len());
    let mut active_scenes = Vec::with_capacity(times.len());
    let mut node_of = HashMap::new();
    for (r, &t) in times.iter().enumerate() {
        let alive: Vec<usize> = story
            .characters
            .iter()
            .enumerate()
            .filter(|(_, c)| spans.get(c.as_str()).is_some_and(|l| l.contains(t)))
            .map(|(k, _)| k)
            .collect();
        for (v, &c) in alive.iter().enumerate() {
            node_of.insert((c, r), v);
        }
        let active: Vec<usize> = (0..story.scenes.len())
            .filter(|&k| story.scenes[k].contains_time(t))
            .collect();
        let blocks: Vec<(Option<String>, Vec<NodeId>)> = active
            .iter()
            .map(|&k| {
                let s = &story.scenes[k];
                let members = s
                    .members
                    .iter()
                    .map(|m| node_of[&(char_index[m.as_str()], r)])
                    .collect();
                (Some(s.id.clone()), members)
            })
            .collect();
        layers.push(Layer {
            labels: alive.iter().map(|&c| story.characters[c].clone()).collect(),
            tree: LayerTree::with_blocks(alive.len(), &blocks),
        });
        characters.push(alive);
        active_scenes.push(active);
    }

    let edges = (0..times.len().saturating_sub(1))
        .map(|r| {
            characters[r]
                .iter()
                .enumerate()
                .filter_map(|(v, c)| node_of.get(&(*c, r + 1)).map(|&w| (v, w)))
                .collect()
        })
        .collect();

    Ok((
        MlcmInstance { layers, edges },
        TransformTrace {
            times,
            active_scenes,
            characters,
            node_of,
        },
    ))
}

/// Parses a story file and builds its instance.
pub fn instance_from_story_text(text: &str, mode: StoryMode) -> Result<(MlcmInstance, TransformTrace)> {
    build_instance(&story::parse_story_with(text, mode)?)
}

/// Correspondence between original and merged layers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergeMap {
    /// Original layer -> merged layer; monotone and surjective.
    pub layer_of: Vec<usize>,
    /// Merged layer -> the original layer it was taken from (first of its group).
    pub representative: Vec<usize>,
    /// Original layer `r`, node `v` -> node of merged layer `layer_of[r]`.
    pub node_map: Vec<Vec<NodeId>>,
}

impl MergeMap {
    pub fn identity(instance: &MlcmInstance) -> Self {
        MergeMap {
            layer_of: (0..instance.p()).collect(),
            representative: (0..instance.p()).collect(),
            node_map: instance.layers.iter().map(|l| (0..l.len()).collect()).collect(),
        }
    }

    pub fn merged_count(&self) -> usize {
        self.representative.len()
    }

    /// Lifts a solution of the merged instance to the original layers.
    pub fn expand(&self, merged: &Solution) -> Solution {
        let perms = self
            .layer_of
            .iter()
            .enumerate()
            .map(|(r, &g)| {
                let mut back = vec![usize::MAX; self.node_map[r].len()];
                for (v, &w) in self.node_map[r].iter().enumerate() {
                    back[w] = v;
                }
                merged.perms[g].iter().map(|&w| back[w]).collect()
            })
            .collect();
        Solution { perms }
    }

    /// Restricts a solution of the original instance to the representatives.
    pub fn project(&self, original: &Solution) -> Solution {
        let perms = self
            .representative
            .iter()
            .map(|&r| original.perms[r].iter().map(|&v| self.node_map[r][v]).collect())
            .collect();
        Solution { perms }
    }

    fn compose(&self, next: &MergeMap) -> MergeMap {
        MergeMap {
            layer_of: self.layer_of.iter().map(|&g| next.layer_of[g]).collect(),
            representative: next.representative.iter().map(|&g| self.representative[g]).collect(),
            node_map: self
                .node_map
                .iter()
                .zip(&self.layer_of)
                .map(|(m, &g)| m.iter().map(|&w| next.node_map[g][w]).collect())
                .collect(),
        }
    }
}

/// `Some(map)` iff the gap's edges form a perfect matching of the two layers.
fn perfect_matching(edges: &[(NodeId, NodeId)], upper: usize, lower: usize) -> Option<Vec<NodeId>> {
    if upper != lower || edges.len() != upper {
        return None;
    }
    let mut map = vec![usize::MAX; upper];
    let mut hit = vec![false; lower];
    for &(i, k) in edges {
        if map[i] != usize::MAX || hit[k] {
            return None;
        }
        map[i] = k;
        hit[k] = true;
    }
    Some(map)
}

fn max_degree(edges: &[(NodeId, NodeId)], n: usize, upper_side: bool) -> usize {
    let mut deg = vec![0usize; n];
    for &(i, k) in edges {
        deg[if upper_side { i } else { k }] += 1;
    }
    deg.into_iter().max().unwrap_or(0)
}

fn merge_pass(instance: &MlcmInstance) -> (MlcmInstance, MergeMap) {
    let p = instance.p();
    let mut layer_of = vec![0; p];
    let mut representative = vec![0];
    let mut node_map: Vec<Vec<NodeId>> = vec![(0..instance.layers[0].len()).collect()];
    let mut merged_layers = vec![instance.layers[0].clone()];
    let mut merged_edges: Vec<Vec<(NodeId, NodeId)>> = Vec::new();

    for r in 0..p.saturating_sub(1) {
        let g = representative.len() - 1;
        let rep = representative[g];
        let gap = &instance.edges[r];
        let next = &instance.layers[r + 1];
        // `cur` maps nodes of layer r onto the merged layer g.
        let cur = &node_map[r];
        let mut joined = None;
        if let Some(matching) = perfect_matching(gap, instance.layers[r].len(), next.len()) {
            // next-layer node -> merged node
            let mut into = vec![usize::MAX; next.len()];
            for (v, &k) in matching.iter().enumerate() {
                into[k] = cur[v];
            }
            let same_tree = merged_layers[g].tree.same_shape(&next.tree, &|w| {
                // merged node -> next-layer node
                into.iter().position(|&x| x == w).unwrap()
            });
            let left_ok = rep == 0 || max_degree(&instance.edges[rep - 1], instance.layers[rep].len(), false) <= 1;
            let right_ok = r + 1 >= p - 1 || max_degree(&instance.edges[r + 1], next.len(), true) <= 1;
            if same_tree && left_ok && right_ok {
                joined = Some(into);
            }
        }
        match joined {
            Some(into) => {
                layer_of[r + 1] = g;
                node_map.push(into);
            }
            None => {
                merged_edges.push(gap.iter().map(|&(i, k)| (cur[i], k)).collect());
                layer_of[r + 1] = g + 1;
                representative.push(r + 1);
                node_map.push((0..next.len()).collect());
                merged_layers.push(next.clone());
            }
        }
    }
    (
        MlcmInstance {
            layers: merged_layers,
            edges: merged_edges,
        },
        MergeMap {
            layer_of,
            representative,
            node_map,
        },
    )
}

/// Identifies consecutive layers whose trees agree under a perfect matching
/// of the gap between them, repeating until no pair qualifies.
///
/// A pair is only merged when the outer neighbours have degree at most one
/// on the merged side, which holds for every storyline instance and keeps
/// the optimum unchanged for general inputs.
pub fn merge_layers(instance: &MlcmInstance) -> (MlcmInstance, MergeMap) {
    if instance.p() == 0 {
        return (instance.clone(), MergeMap::identity(instance));
    }
    let mut map = MergeMap::identity(instance);
    let mut current = instance.clone();
    loop {
        let (next, step) = merge_pass(&current);
        if next.p() == current.p() {
            return (current, map);
        }
        map = map.compose(&step);
        current = next;
    }
}
