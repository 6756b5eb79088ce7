//! Graded polar meshing of the Euclidean upper half-plane.
//!
//! The model covers {x : inner ≤ |x| ≤ R_max} ∩ (ℝ × (0,∞)) with base point
//! b = (0,0). Rings sit at geometric radii (factor ≈ 1+mesh_rel), so every
//! radial decade gets the same resolution; angular columns are cell-centered
//! with an odd column count, which puts a node column exactly on the
//! vertical ray θ = π/2. Each node carries the exact area of its annular
//! sector, so the total measure telescopes to (π/2)(R_max² − inner²).
//! Connectivity is 8-neighbor (ring, radial, two diagonals), capping the
//! shortest-path anisotropy near the square-grid factor 1.083.

use super::{NodeId, PolarIndex, SpaceModel, SpaceNode};
use crate::error::{Error, Result};
use std::f64::consts::{FRAC_PI_2, PI};

/// Shortest-path overestimate factor of an 8-neighbor grid vs Euclid.
pub const ANISOTROPY_8: f64 = 1.083;

/// Node budget guard for the builder.
pub const NODE_BUDGET: usize = 2_000_000;

/// Ratio of the inner (unmeshed) hole radius to R_max.
pub const INNER_RATIO: f64 = 1e-5;

pub fn build_halfplane(mesh_rel: f64, r_max: f64) -> Result<SpaceModel> {
    if !(mesh_rel > 0.0 && mesh_rel < 0.5) {
        return Err(Error::InvalidInput(format!("mesh_rel = {mesh_rel} out of (0, 0.5)")));
    }
    if !(r_max > 0.0) || r_max <= mesh_rel {
        return Err(Error::Resource(format!(
            "degenerate truncation radius {r_max} for mesh {mesh_rel}"
        )));
    }
    let inner = r_max * INNER_RATIO;
    let n_rings = ((r_max / inner).ln() / (1.0 + mesh_rel).ln()).ceil() as usize;
    if n_rings < 2 {
        return Err(Error::Resource("fewer than two rings; refine the mesh".into()));
    }
    // snap the growth factor so ring edges land exactly on inner and r_max
    let ln_g = (r_max / inner).ln() / n_rings as f64;
    let mut n_angles = (PI / mesh_rel).round() as usize;
    if n_angles % 2 == 0 {
        n_angles += 1;
    }
    if n_angles < 3 {
        n_angles = 3;
    }
    if n_rings * n_angles > NODE_BUDGET {
        return Err(Error::Resource(format!(
            "node budget exceeded: {} rings × {} angles",
            n_rings, n_angles
        )));
    }

    let dtheta = PI / n_angles as f64;
    let ln_inner = inner.ln();
    let ring_radius = |k: usize| (ln_inner + (k as f64 + 0.5) * ln_g).exp();
    let edge_radius = |k: usize| (ln_inner + k as f64 * ln_g).exp();

    let mut nodes = Vec::with_capacity(n_rings * n_angles);
    for k in 0..n_rings {
        let r = ring_radius(k);
        let (e0, e1) = (edge_radius(k), edge_radius(k + 1));
        let cell_area = 0.5 * dtheta * (e1 * e1 - e0 * e0);
        for j in 0..n_angles {
            let theta = (j as f64 + 0.5) * dtheta;
            nodes.push(SpaceNode {
                xy: [r * theta.cos(), r * theta.sin()],
                radial: r,
                mu_weight: cell_area,
                boundary_adjacent: j == 0 || j == n_angles - 1,
            });
        }
    }

    let id = |k: usize, j: usize| (k * n_angles + j) as u32;
    let mut edges: Vec<(u32, u32, f64)> = Vec::with_capacity(nodes.len() * 4);
    let len = |a: u32, b: u32| super::dist2(nodes[a as usize].xy, nodes[b as usize].xy);
    for k in 0..n_rings {
        for j in 0..n_angles {
            let a = id(k, j);
            if j + 1 < n_angles {
                let b = id(k, j + 1);
                edges.push((a, b, len(a, b)));
            }
            if k + 1 < n_rings {
                let b = id(k + 1, j);
                edges.push((a, b, len(a, b)));
                if j + 1 < n_angles {
                    let b = id(k + 1, j + 1);
                    edges.push((a, b, len(a, b)));
                }
                if j > 0 {
                    let b = id(k + 1, j - 1);
                    edges.push((a, b, len(a, b)));
                }
            }
        }
    }

    let outer_ring: Vec<NodeId> = (0..n_angles).map(|j| (n_rings - 1) * n_angles + j).collect();
    let polar = PolarIndex {
        n_rings,
        n_angles,
        ln_r0: ln_inner + 0.5 * ln_g,
        ln_g,
        dtheta,
    };
    SpaceModel::from_parts(
        nodes,
        edges,
        [0.0, 0.0],
        r_max,
        mesh_rel,
        FRAC_PI_2,
        inner,
        outer_ring,
        true,
        Some(polar),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::dijkstra::graph_distance;

    #[test]
    fn mesh_is_connected_with_exact_total_measure() {
        let m = build_halfplane(0.05, 1000.0).unwrap();
        let half_disk = 0.5 * PI * (1000.0f64.powi(2) - m.inner_edge_radius.powi(2));
        let total = m.total_measure();
        assert!(
            (total - half_disk).abs() / half_disk < 1e-9,
            "total {total} vs half-disk {half_disk}"
        );
        // and within 1% of the untruncated half-disk area
        assert!((total - 0.5 * PI * 1e6).abs() / (0.5 * PI * 1e6) < 0.01);
    }

    #[test]
    fn degenerate_radius_is_rejected() {
        assert!(build_halfplane(0.05, 0.04).is_err());
    }

    #[test]
    fn node_budget_is_enforced() {
        assert!(matches!(
            build_halfplane(0.001, 1e6),
            Err(crate::error::Error::Resource(_))
        ));
    }

    #[test]
    fn node_count_scales_with_log_radius_over_mesh_squared() {
        let m1 = build_halfplane(0.1, 100.0).unwrap();
        let m2 = build_halfplane(0.05, 100.0).unwrap();
        let ratio = m2.node_count() as f64 / m1.node_count() as f64;
        assert!((ratio - 4.0).abs() < 0.4, "halving the mesh should ~4× nodes, got {ratio}");
    }

    #[test]
    fn radial_consistency_and_boundary_offset() {
        let m = build_halfplane(0.05, 100.0).unwrap();
        for n in &m.nodes {
            let r = (n.xy[0] * n.xy[0] + n.xy[1] * n.xy[1]).sqrt();
            assert!((r - n.radial).abs() <= 1e-12 * n.radial);
            assert!(n.xy[1] > 0.0, "node on or below the boundary line");
        }
        // boundary-adjacent nodes sit at roughly half a cell above the line
        let adj: Vec<_> = m.nodes.iter().filter(|n| n.boundary_adjacent).collect();
        for n in adj {
            let local = m.mesh_rel * n.radial;
            assert!(n.xy[1] < local, "offset should be sub-cell");
            assert!(n.xy[1] > 0.2 * local);
        }
    }

    #[test]
    fn edge_lengths_bounded_by_local_mesh() {
        let m = build_halfplane(0.05, 100.0).unwrap();
        for &(a, b, len) in &m.edges {
            let r = m.nodes[a as usize].radial.max(m.nodes[b as usize].radial);
            assert!(len <= 1.8 * m.mesh_rel * r, "edge {len} too long at r = {r}");
        }
    }

    #[test]
    fn graph_distance_stays_within_anisotropy_of_euclid() {
        let m = build_halfplane(0.05, 100.0).unwrap();
        let cases = [
            ([0.0f64, 1.0], [0.0f64, 3.0]),
            ([-1.0, 1.0], [1.0, 1.0]),
            ([2.0, 2.0], [7.0, 5.0]),
        ];
        for (p, q) in cases {
            let a = m.nearest_node(p);
            let b = m.nearest_node(q);
            let graph = graph_distance(&m, a, &[b]).unwrap()[0];
            let euclid = m.euclid(a, b);
            assert!(graph >= euclid * (1.0 - 1e-9));
            assert!(
                graph <= euclid * ANISOTROPY_8 * (1.0 + 2.0 * m.mesh_rel),
                "graph {graph} vs euclid {euclid}"
            );
        }
    }
}
