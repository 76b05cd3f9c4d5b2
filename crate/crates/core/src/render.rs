//! SVG storyline drawing of an instance and a tree-consistent solution.

use std::fmt::Write as _;

use crate::error::Result;
use crate::instance::{count_crossings, LcaTable, MlcmInstance, NodeId, Solution};

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

#[derive(Debug, Clone)]
pub struct RenderOptions {
    /// Horizontal distance between consecutive layers.
    pub column_width: f64,
    /// Vertical distance of one slot.
    pub row_height: f64,
    pub smooth: bool,
    /// Left margin reserved for names.
    pub margin: f64,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            column_width: 80.0,
            row_height: 12.0,
            smooth: false,
            margin: 60.0,
        }
    }
}

/// Vertical slot of every node, indexed `[layer][node]`. Neighbours in a
/// common scene are one slot apart, all other neighbours two.
pub fn assign_slots(instance: &MlcmInstance, sol: &Solution) -> Result<Vec<Vec<i64>>> {
    sol.check_consistent(instance)?;
    Ok(instance
        .layers
        .iter()
        .zip(&sol.perms)
        .map(|(layer, pi)| {
            let lca = LcaTable::new(&layer.tree);
            let mut slots = vec![0i64; pi.len()];
            let mut y = 0;
            for (k, &v) in pi.iter().enumerate() {
                if k > 0 {
                    let shared = lca.lca(pi[k - 1], v);
                    y += if layer.tree.label(shared).is_some() { 1 } else { 2 };
                }
                slots[v] = y;
            }
            slots
        })
        .collect())
}

/// Maximal chains of edges through nodes with one incoming and one outgoing
/// edge; every edge lies on exactly one path. Nodes without edges form
/// single-node paths.
pub fn paths(instance: &MlcmInstance) -> Vec<(usize, Vec<NodeId>)> {
    let p = instance.p();
    let mut out_deg: Vec<Vec<usize>> = instance.layers.iter().map(|l| vec![0; l.len()]).collect();
    let mut in_deg = out_deg.clone();
    let mut next: Vec<Vec<Option<NodeId>>> = instance.layers.iter().map(|l| vec![None; l.len()]).collect();
    let mut prev = next.clone();
    for (r, gap) in instance.edges.iter().enumerate() {
        for &(u, v) in gap {
            out_deg[r][u] += 1;
            in_deg[r + 1][v] += 1;
            next[r][u] = Some(v);
            prev[r + 1][v] = Some(u);
        }
    }
    // v continues the chain through its single predecessor
    let continues = |r: usize, v: NodeId| in_deg[r][v] == 1 && out_deg[r - 1][prev[r][v].unwrap()] == 1;
    let mut result = Vec::new();
    for r in 0..p {
        for v in 0..instance.layers[r].len() {
            if continues(r, v) {
                continue;
            }
            if in_deg[r][v] == 0 && out_deg[r][v] == 0 {
                result.push((r, vec![v]));
                continue;
            }
            if out_deg[r][v] == 0 {
                continue;
            }
            for &(_, w) in instance.edges[r].iter().filter(|e| e.0 == v) {
                let mut path = vec![v, w];
                let (mut layer, mut cur) = (r + 1, w);
                while continues(layer, cur) && out_deg[layer][cur] == 1 {
                    cur = next[layer][cur].unwrap();
                    layer += 1;
                    path.push(cur);
                }
                result.push((r, path));
            }
        }
    }
    result
}

fn fmt(v: f64) -> String {
    let s = format!("{v:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

pub fn render_svg(instance: &MlcmInstance, sol: &Solution, options: &RenderOptions) -> Result<String> {
    let slots = assign_slots(instance, sol)?;
    let crossings = count_crossings(instance, sol)?;
    let max_slot = slots.iter().flat_map(|s| s.iter().copied()).max().unwrap_or(0);
    let top = 20.0;
    let x_of = |r: usize| options.margin + r as f64 * options.column_width;
    let y_of = |r: usize, v: NodeId| top + slots[r][v] as f64 * options.row_height;
    let width = x_of(instance.p().saturating_sub(1)) + options.margin;
    let height = top + max_slot as f64 * options.row_height + 30.0;
    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" data-crossings="{}">"#,
        fmt(width),
        fmt(height),
        crossings
    )
    .unwrap();
    for (k, (r, path)) in paths(instance).iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let pts: Vec<(f64, f64)> = path.iter().enumerate().map(|(i, &v)| (x_of(r + i), y_of(r + i, v))).collect();
        let name = escape(&instance.layers[*r].labels[path[0]]);
        writeln!(
            out,
            r#"  <text x="{}" y="{}" font-size="10" text-anchor="end">{}</text>"#,
            fmt(pts[0].0 - 4.0),
            fmt(pts[0].1 + 3.0),
            name
        )
        .unwrap();
        if pts.len() == 1 {
            writeln!(out, r#"  <circle cx="{}" cy="{}" r="2" fill="{color}"/>"#, fmt(pts[0].0), fmt(pts[0].1)).unwrap();
        } else if options.smooth {
            let mut d = format!("M {} {}", fmt(pts[0].0), fmt(pts[0].1));
            for w in pts.windows(2) {
                let mx = (w[0].0 + w[1].0) / 2.0;
                write!(d, " C {} {} {} {} {} {}", fmt(mx), fmt(w[0].1), fmt(mx), fmt(w[1].1), fmt(w[1].0), fmt(w[1].1)).unwrap();
            }
            writeln!(out, r#"  <path d="{d}" fill="none" stroke="{color}" stroke-width="2"/>"#).unwrap();
        } else {
            let list: Vec<String> = pts.iter().map(|&(x, y)| format!("{},{}", fmt(x), fmt(y))).collect();
            writeln!(
                out,
                r#"  <polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
                list.join(" ")
            )
            .unwrap();
        }
    }
    writeln!(
        out,
        r#"  <text class="crossings" x="{}" y="{}" font-size="10">crossings: {}</text>"#,
        fmt(options.margin),
        fmt(height - 8.0),
        crossings
    )
    .unwrap();
    out.push_str("</svg>\n");
    Ok(out)
}
