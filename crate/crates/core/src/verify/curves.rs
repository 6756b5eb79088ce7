//! Curve samples: polylines measured in both metrics, with per-point
//! boundary clearances.

use crate::error::{Error, Result};
use crate::space::dijkstra::dijkstra;
use crate::space::{dist2, NodeId};
use crate::sphere::{rho_segment, SphereView};
use serde::Serialize;

/// d_ρ distance to the deformed boundary ∂X ∪ {∞}, estimated per node as
/// the min over boundary-adjacent nodes of (d_ρ to the node + the ρ-cost of
/// its residual drop to the boundary), and the bracketed distance to ∞.
#[derive(Debug, Clone)]
pub struct BoundaryRhoField {
    pub dist: Vec<f64>,
}

pub fn boundary_rho_field(view: &SphereView) -> BoundaryRhoField {
    let space = &view.space;
    let base = space.base_point;
    let sources: Vec<(NodeId, f64)> = space
        .nodes
        .iter()
        .enumerate()
        .filter(|(_, n)| n.boundary_adjacent)
        .map(|(i, n)| {
            let drop = if space.analytic_boundary {
                rho_segment(&view.density, base, n.xy, [n.xy[0], 0.0])
            } else {
                0.0
            };
            (i, drop)
        })
        .collect();
    let field = dijkstra(space, view.rho_weights(), &sources);
    let mut dist = field.dist;
    if let Some(brackets) = &view.infinity {
        for (i, d) in dist.iter_mut().enumerate() {
            *d = d.min(brackets[i].point);
        }
    }
    BoundaryRhoField { dist }
}

/// An ordered polyline with leg lengths and cumulative arclengths in both
/// metrics, plus boundary clearances at every vertex.
#[derive(Debug, Clone, Serialize)]
pub struct CurveSample {
    pub pts: Vec<[f64; 2]>,
    pub node_ids: Option<Vec<NodeId>>,
    pub leg_d: Vec<f64>,
    pub leg_rho: Vec<f64>,
    pub cum_d: Vec<f64>,
    pub cum_rho: Vec<f64>,
    pub d_x: Vec<f64>,
    pub d_x_rho: Vec<f64>,
}

impl CurveSample {
    pub fn from_nodes(view: &SphereView, boundary: &BoundaryRhoField, path: &[NodeId]) -> Result<Self> {
        if path.len() < 2 {
            return Err(Error::Degenerate("curve needs at least two nodes".into()));
        }
        let pts: Vec<[f64; 2]> = path.iter().map(|&v| view.space.nodes[v].xy).collect();
        let mut c = Self::from_polyline(view, &pts)?;
        c.node_ids = Some(path.to_vec());
        // node clearances come from the precomputed field rather than the
        // nearest-node fallback
        c.d_x_rho = path.iter().map(|&v| boundary.dist[v]).collect();
        c.validate()?;
        Ok(c)
    }

    pub fn from_points(
        view: &SphereView,
        boundary: &BoundaryRhoField,
        pts: &[[f64; 2]],
    ) -> Result<Self> {
        let mut c = Self::from_polyline(view, pts)?;
        let base = view.space.base_point;
        c.d_x_rho = pts
            .iter()
            .map(|&p| {
                let v = view.space.nearest_node(p);
                boundary.dist[v] + rho_segment(&view.density, base, p, view.space.nodes[v].xy)
            })
            .collect();
        c.validate()?;
        Ok(c)
    }

    fn from_polyline(view: &SphereView, pts: &[[f64; 2]]) -> Result<Self> {
        if pts.len() < 2 {
            return Err(Error::Degenerate("curve needs at least two points".into()));
        }
        let base = view.space.base_point;
        let mut leg_d = Vec::with_capacity(pts.len() - 1);
        let mut leg_rho = Vec::with_capacity(pts.len() - 1);
        for w in pts.windows(2) {
            leg_d.push(dist2(w[0], w[1]));
            leg_rho.push(rho_segment(&view.density, base, w[0], w[1]));
        }
        let cum = |legs: &[f64]| {
            let mut c = Vec::with_capacity(legs.len() + 1);
            c.push(0.0);
            let mut acc = 0.0;
            for &l in legs {
                acc += l;
                c.push(acc);
            }
            c
        };
        let cum_d = cum(&leg_d);
        let cum_rho = cum(&leg_rho);
        let d_x = pts.iter().map(|&p| view.space.d_boundary_point(p)).collect();
        Ok(Self {
            pts: pts.to_vec(),
            node_ids: None,
            leg_d,
            leg_rho,
            cum_d,
            cum_rho,
            d_x,
            d_x_rho: Vec::new(),
        })
    }

    fn validate(&self) -> Result<()> {
        let monotone = |c: &[f64]| c.windows(2).all(|w| w[1] >= w[0]);
        if !monotone(&self.cum_d) || !monotone(&self.cum_rho) {
            return Err(Error::InvalidInput("cumulative arclength not monotone".into()));
        }
        // interior points must be strictly inside the deformed domain
        for i in 1..self.pts.len() - 1 {
            if !(self.d_x_rho[i] > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "interior curve point {i} has no boundary clearance"
                )));
            }
        }
        Ok(())
    }

    pub fn len_d(&self) -> f64 {
        *self.cum_d.last().unwrap()
    }

    pub fn len_rho(&self) -> f64 {
        *self.cum_rho.last().unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{classify, DensityFn};
    use crate::grid::GeoGrid;
    use crate::space::build_halfplane;
    use crate::sphere::sphericalize;
    use std::sync::Arc;

    fn view() -> SphereView {
        let space = Arc::new(build_halfplane(0.08, 100.0).unwrap());
        let f = DensityFn::powlog(-2.0, 0.0);
        let report = classify(&f, &GeoGrid::classification_default(), 1.0, 1e-10).unwrap();
        sphericalize(space, f, Some(report), 2.0, false).unwrap()
    }

    #[test]
    fn cumulative_lengths_are_monotone_and_consistent() {
        let v = view();
        let b = boundary_rho_field(&v);
        let c = CurveSample::from_points(&v, &b, &[[0.0, 1.0], [0.0, 2.0], [0.0, 3.0]]).unwrap();
        assert!((c.len_d() - 2.0).abs() < 1e-12);
        // ρ-length of the radial polyline ≈ ∫₁³ (t+2)^(−2) = 2/15
        assert!((c.len_rho() - 2.0 / 15.0).abs() < 1e-4);
        assert_eq!(c.cum_d.len(), 3);
    }

    #[test]
    fn boundary_clearance_positive_and_tracks_height() {
        let v = view();
        let b = boundary_rho_field(&v);
        let c = CurveSample::from_points(&v, &b, &[[-2.0, 1.0], [0.0, 2.0], [2.0, 1.0]]).unwrap();
        assert!(c.d_x.iter().zip(&c.pts).all(|(&d, p)| (d - p[1]).abs() < 1e-12));
        assert!(c.d_x_rho.iter().all(|&d| d > 0.0));
    }
}
