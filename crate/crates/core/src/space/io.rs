//! Line-oriented text import/export of space models.
//!
//! Format (whitespace-separated, `#` comments):
//!
//! ```text
//! space <r_max> <mesh_rel> <uniformity_hint> <base_x> <base_y> <inner_radius> <analytic_boundary 0|1>
//! node <id> <x> <y> <radial> <mu_weight> <boundary_adjacent 0|1>
//! edge <a> <b> <length>
//! ```

use super::{NodeId, SpaceModel, SpaceNode};
use crate::error::{Error, Result};
use std::io::{BufRead, Write};

pub fn export<W: Write>(model: &SpaceModel, mut w: W) -> Result<()> {
    writeln!(
        w,
        "space {} {} {} {} {} {} {}",
        model.r_max,
        model.mesh_rel,
        model.uniformity_hint,
        model.base_point[0],
        model.base_point[1],
        model.inner_edge_radius,
        model.analytic_boundary as u8,
    )?;
    for (i, n) in model.nodes.iter().enumerate() {
        writeln!(
            w,
            "node {} {} {} {} {} {}",
            i, n.xy[0], n.xy[1], n.radial, n.mu_weight, n.boundary_adjacent as u8
        )?;
    }
    for &(a, b, len) in &model.edges {
        writeln!(w, "edge {a} {b} {len}")?;
    }
    Ok(())
}

pub fn import<R: BufRead>(r: R) -> Result<SpaceModel> {
    let mut header: Option<Vec<f64>> = None;
    let mut nodes: Vec<(usize, SpaceNode)> = Vec::new();
    let mut edges: Vec<(u32, u32, f64)> = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |msg: &str| Error::InvalidInput(format!("line {}: {msg}", lineno + 1));
        let mut parts = line.split_whitespace();
        let kind = parts.next().unwrap();
        let rest: Vec<f64> = parts
            .map(|p| p.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad("non-numeric field"))?;
        match kind {
            "space" => {
                if rest.len() != 7 {
                    return Err(bad("space record needs 7 fields"));
                }
                header = Some(rest);
            }
            "node" => {
                if rest.len() != 6 {
                    return Err(bad("node record needs 6 fields"));
                }
                nodes.push((
                    rest[0] as usize,
                    SpaceNode {
                        xy: [rest[1], rest[2]],
                        radial: rest[3],
                        mu_weight: rest[4],
                        boundary_adjacent: rest[5] != 0.0,
                    },
                ));
            }
            "edge" => {
                if rest.len() != 3 {
                    return Err(bad("edge record needs 3 fields"));
                }
                edges.push((rest[0] as u32, rest[1] as u32, rest[2]));
            }
            other => return Err(bad(&format!("unknown record '{other}'"))),
        }
    }
    let header = header.ok_or_else(|| Error::InvalidInput("missing space header".into()))?;
    nodes.sort_by_key(|(id, _)| *id);
    for (expect, (id, _)) in nodes.iter().enumerate() {
        if *id != expect {
            return Err(Error::InvalidInput(format!("node ids must be 0..n, missing {expect}")));
        }
    }
    let node_list: Vec<SpaceNode> = nodes.into_iter().map(|(_, n)| n).collect();
    let outer_ring = outermost_ring(&node_list);
    SpaceModel::from_parts(
        node_list,
        edges,
        [header[3], header[4]],
        header[0],
        header[1],
        header[2],
        header[5],
        outer_ring,
        header[6] != 0.0,
        None,
    )
}

/// For imports the outer ring is taken as the nodes whose radial value is
/// within one local cell of the maximum.
fn outermost_ring(nodes: &[SpaceNode]) -> Vec<NodeId> {
    let r_top = nodes.iter().map(|n| n.radial).fold(0.0f64, f64::max);
    nodes
        .iter()
        .enumerate()
        .filter(|(_, n)| n.radial >= r_top * 0.98)
        .map(|(i, _)| i)
        .collect()
}
