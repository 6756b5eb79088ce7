//! The sphericalized overlay of a space model.
//!
//! A [`SphereView`] pairs an immutable [`SpaceModel`] with a density ρ and
//! exponent σ > 0 and carries everything the deformed space needs:
//!
//! - per-edge weights `∫_e ρ(|·|) ds` (two-point Gauss along the straight
//!   edge), so shortest paths realize `d_ρ`;
//! - per-node measures `μ·ρ(|x|)^σ` realizing `μ_ρ`;
//! - the augmented point `∞`, represented by a bracketed distance
//!   `(lower, point, upper)` per node: any curve to `∞` must cross the
//!   outer ring, and from a ring node `y` the cheapest continuation is the
//!   radial escape costing the tail `T(|y|)`, so
//!   `point(x) = min_y (d_ρ(x,y) + T(|y|))` is an upper construction and
//!   `max(T(|x|), ring distance)` brackets it from below.

pub mod condition_c;

pub use condition_c::{check_condition_c, ConditionCOutcome};

use crate::density::{DensityFn, DensityReport};
use crate::error::{Error, Result};
use crate::space::dijkstra::{dijkstra, DistanceField, EdgeWeights};
use crate::space::{dist2, NodeId, SpaceModel};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct InfinityBracket {
    pub lower: f64,
    pub point: f64,
    pub upper: f64,
}

#[derive(Debug, Clone)]
pub struct SphereView {
    pub space: Arc<SpaceModel>,
    pub density: DensityFn,
    pub report: Option<DensityReport>,
    pub sigma: f64,
    /// ∫ ρ(|·|) ds per undirected edge, aligned with `space.edges`
    pub edge_rho: Vec<f64>,
    /// μ_ρ node weights
    pub node_mu_rho: Vec<f64>,
    /// per-node distance bracket to ∞; None when ρ is not integrable
    pub infinity: Option<Vec<InfinityBracket>>,
    pub diam_rho_hat: f64,
    /// μ_ρ(X): node sum plus the analytic tail beyond the truncation radius
    pub mu_rho_total: f64,
    pub quad_tol: f64,
}

/// Derived comparison constants, all from the estimated (C_A, C_B) and the
/// domain's uniformity constant.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ComparisonConstants {
    pub c_a: f64,
    pub c_b: f64,
    pub c_u: f64,
    pub c_qd: f64,
    pub eps: f64,
    pub tau1: f64,
    /// distance-to-∞ bracket factor: 3·C_U·C_A^(4+log₂C_U)·C_B
    pub c1: f64,
    /// metric comparability factor: C_U·C_A^(3+log₂C_U)
    pub c2: f64,
    /// small-radius regime threshold: 1/(2·C1·C_A²·C_B)
    pub c0: f64,
    /// inner ball factor 1/C2
    pub a1: f64,
    /// outer ball factor C_A³·C_B
    pub a2: f64,
}

/// Two-point Gauss quadrature of ρ(|·|) along the straight segment a→b.
pub fn rho_segment(density: &DensityFn, base: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    const T1: f64 = 0.211_324_865_405_187_1; // (1 − 1/√3)/2
    const T2: f64 = 0.788_675_134_594_812_9;
    let len = dist2(a, b);
    let floor = density.domain_floor;
    let at = |t: f64| {
        let p = [a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t];
        let r = dist2(p, base).max(floor);
        density.ln_rho_unchecked(r).exp()
    };
    0.5 * len * (at(T1) + at(T2))
}

/// Builds the sphericalized overlay. Densities that fail classification are
/// rejected unless `force` is set (counterexample runs need it).
pub fn sphericalize(
    space: Arc<SpaceModel>,
    density: DensityFn,
    report: Option<DensityReport>,
    sigma: f64,
    force: bool,
) -> Result<SphereView> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidInput(format!("sigma = {sigma} must be > 0")));
    }
    let admissible = report.as_ref().map(|r| r.both_pass()).unwrap_or(false);
    if !admissible && !force {
        return Err(Error::Prereq(
            "density does not pass both classification conditions; rerun with force to \
             sphericalize anyway"
                .into(),
        ));
    }

    let base = space.base_point;
    // fast-decaying densities underflow f64 on the outermost edges; the
    // weights stay positive (metric axioms) by clamping at the smallest
    // positive float
    let edge_rho: Vec<f64> = space
        .edges
        .iter()
        .map(|&(a, b, _)| {
            rho_segment(&density, base, space.nodes[a as usize].xy, space.nodes[b as usize].xy)
                .max(f64::MIN_POSITIVE)
        })
        .collect();
    if edge_rho.iter().any(|&w| !(w > 0.0)) {
        return Err(Error::InvalidInput("non-positive ρ edge weight".into()));
    }

    let floor = density.domain_floor;
    let node_mu_rho: Vec<f64> = space
        .nodes
        .iter()
        .map(|n| n.mu_weight * (sigma * density.ln_rho_unchecked(n.radial.max(floor))).exp())
        .collect();

    let quad_tol = 1e-10;
    let mut view = SphereView {
        space,
        density,
        report,
        sigma,
        edge_rho,
        node_mu_rho,
        infinity: None,
        diam_rho_hat: 0.0,
        mu_rho_total: 0.0,
        quad_tol,
    };
    view.infinity = view.compute_infinity()?;
    view.mu_rho_total = view.compute_mu_rho_total()?;
    view.diam_rho_hat = view.estimate_diameter();
    Ok(view)
}

impl SphereView {
    pub fn rho_weights(&self) -> EdgeWeights<'_> {
        EdgeWeights::Custom(&self.edge_rho)
    }

    /// d_ρ distance field from one node.
    pub fn d_rho_field(&self, source: NodeId) -> DistanceField {
        dijkstra(&self.space, self.rho_weights(), &[(source, 0.0)])
    }

    pub fn d_rho(&self, source: NodeId, targets: &[NodeId]) -> Result<Vec<f64>> {
        let field = self.d_rho_field(source);
        targets
            .iter()
            .map(|&t| {
                let d = field.dist[t];
                if d.is_finite() {
                    Ok(d)
                } else {
                    Err(Error::Unreachable(format!("node {t} unreachable from {source}")))
                }
            })
            .collect()
    }

    /// d_ρ between arbitrary points of the domain: both endpoints attach to
    /// nearby mesh nodes through straight connector segments weighted by the
    /// same two-point quadrature as graph edges.
    pub fn d_rho_points(&self, p: [f64; 2], q: [f64; 2]) -> Result<f64> {
        let base = self.space.base_point;
        let sources: Vec<(NodeId, f64)> = self
            .space
            .connector_candidates(p)
            .into_iter()
            .map(|v| (v, rho_segment(&self.density, base, p, self.space.nodes[v].xy)))
            .collect();
        let field = dijkstra(&self.space, self.rho_weights(), &sources);
        let mut best = f64::INFINITY;
        for v in self.space.connector_candidates(q) {
            let tail = rho_segment(&self.density, base, self.space.nodes[v].xy, q);
            best = best.min(field.dist[v] + tail);
        }
        // degenerate short hop: the direct segment may beat any node detour
        let direct = rho_segment(&self.density, base, p, q);
        best = best.min(direct);
        if best.is_finite() {
            Ok(best)
        } else {
            Err(Error::Unreachable("point query found no attached path".into()))
        }
    }

    /// Bracketed d_ρ(x, ∞) per node.
    pub fn d_rho_infinity(&self, x: NodeId) -> Result<InfinityBracket> {
        self.infinity
            .as_ref()
            .map(|v| v[x])
            .ok_or_else(|| Error::Prereq("no point at ∞: density tail diverges".into()))
    }

    fn compute_infinity(&self) -> Result<Option<Vec<InfinityBracket>>> {
        if !self.density.is_integrable() {
            return Ok(None);
        }
        let tol = self.quad_tol;
        let ring_sources: Vec<(NodeId, f64)> = {
            let mut v = Vec::with_capacity(self.space.outer_ring.len());
            for &y in &self.space.outer_ring {
                v.push((y, self.density.tail_integral(self.space.nodes[y].radial, tol)?));
            }
            v
        };
        let point_field = dijkstra(&self.space, self.rho_weights(), &ring_sources);
        let zero_sources: Vec<(NodeId, f64)> =
            self.space.outer_ring.iter().map(|&y| (y, 0.0)).collect();
        let ring_dist = dijkstra(&self.space, self.rho_weights(), &zero_sources);
        let t_truncation = self.density.tail_integral(self.space.r_max, tol)?;
        let mut out = Vec::with_capacity(self.space.node_count());
        for (i, n) in self.space.nodes.iter().enumerate() {
            let t_here = self.density.tail_integral(n.radial, tol)?;
            let point = point_field.dist[i];
            let lower = t_here.max(ring_dist.dist[i]).min(point);
            out.push(InfinityBracket { lower, point, upper: point + t_truncation });
        }
        Ok(Some(out))
    }

    fn compute_mu_rho_total(&self) -> Result<f64> {
        let nodes: f64 = self.node_mu_rho.iter().sum();
        if self.space.analytic_boundary {
            match condition_c::weighted_radial_tail(
                &self.density,
                self.sigma,
                self.space.r_max,
                self.quad_tol,
            ) {
                Ok(t) => Ok(nodes + std::f64::consts::PI * t),
                Err(Error::Divergence(_)) => Ok(f64::INFINITY),
                Err(e) => Err(e),
            }
        } else {
            Ok(nodes)
        }
    }

    /// Sampled diameter of (X ∪ {∞}, d_ρ): a handful of extremal sources,
    /// with every pair allowed to route through ∞.
    fn estimate_diameter(&self) -> f64 {
        let sources = self.diameter_probes();
        let via_inf = |x: NodeId, y: NodeId| -> f64 {
            match &self.infinity {
                Some(br) => br[x].point + br[y].point,
                None => f64::INFINITY,
            }
        };
        let mut diam: f64 = 0.0;
        if let Some(br) = &self.infinity {
            for b in br.iter() {
                diam = diam.max(b.point);
            }
        }
        for &s in &sources {
            let field = self.d_rho_field(s);
            for y in 0..self.space.node_count() {
                let d = field.dist[y].min(via_inf(s, y));
                if d.is_finite() {
                    diam = diam.max(d);
                }
            }
        }
        diam
    }

    fn diameter_probes(&self) -> Vec<NodeId> {
        if let Some(polar) = &self.space.polar {
            let (nr, na) = (polar.n_rings, polar.n_angles);
            vec![
                0,
                na - 1,
                na / 2,
                (nr / 2) * na,
                (nr / 2) * na + na - 1,
                (nr - 1) * na + na / 2,
            ]
        } else {
            let far = self
                .space
                .nodes
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.radial.total_cmp(&b.1.radial))
                .map(|(i, _)| i)
                .unwrap_or(0);
            vec![0, far]
        }
    }

    /// Constants used by the geometric comparison checks; requires both
    /// classification verdicts.
    pub fn constants(&self) -> Result<ComparisonConstants> {
        let report = self
            .report
            .as_ref()
            .ok_or_else(|| Error::Prereq("sphericalization built without a density report".into()))?;
        let (c_a, c_b) = report.constants()?;
        let c_u = self.space.uniformity_hint;
        let c_qd = report.c_qd_hat.max(1.0);
        let eps = report.epsilon_hat.unwrap_or(1.0 / (c_a * c_b));
        let tau1 = report
            .tau1_hat
            .ok_or_else(|| Error::Prereq("τ₁ unavailable".into()))?;
        let c2 = c_u * c_a.powf(3.0 + c_u.log2());
        let c1 = 3.0 * c_u * c_a.powf(4.0 + c_u.log2()) * c_b;
        let c0 = 1.0 / (2.0 * c1 * c_a * c_a * c_b);
        Ok(ComparisonConstants {
            c_a,
            c_b,
            c_u,
            c_qd,
            eps,
            tau1,
            c1,
            c2,
            c0,
            a1: 1.0 / c2,
            a2: c_a.powi(3) * c_b,
        })
    }

    /// Nodes in the d_ρ ball around ∞: point estimate below the radius.
    pub fn infinity_ball(&self, radius: f64) -> Result<Vec<NodeId>> {
        let br = self
            .infinity
            .as_ref()
            .ok_or_else(|| Error::Prereq("no point at ∞".into()))?;
        Ok((0..self.space.node_count()).filter(|&i| br[i].point < radius).collect())
    }

    /// μ_ρ of a node set.
    pub fn mu_rho_of(&self, nodes: &[NodeId]) -> f64 {
        nodes.iter().map(|&i| self.node_mu_rho[i]).sum()
    }

    /// Resolves a ball query to its node set in the tagged metric.
    pub fn ball(&self, query: crate::space::BallQuery) -> Result<Vec<NodeId>> {
        use crate::space::{BallCenter, MetricTag};
        query.validate()?;
        match (query.center, query.metric) {
            (BallCenter::Infinity, _) => self.infinity_ball(query.radius),
            (BallCenter::Base, _) => Ok((0..self.space.node_count())
                .filter(|&i| self.space.nodes[i].radial < query.radius)
                .collect()),
            (BallCenter::Node(v), MetricTag::Original) => {
                Ok(self.space.euclid_ball(self.space.nodes[v].xy, query.radius))
            }
            (BallCenter::Node(v), MetricTag::Sphericalized) => {
                let field = self.d_rho_field(v);
                Ok((0..self.space.node_count()).filter(|&i| field.dist[i] < query.radius).collect())
            }
        }
    }

    /// μ_ρ(B_ρ(∞, r)) including the analytic mass beyond the truncation
    /// radius. For r at or above the truncation tail scale the whole
    /// truncated region is inside; below it only the sliver
    /// {s : T(s) < r} belongs, resolved analytically.
    pub fn mu_rho_infinity_ball(&self, radius: f64) -> Result<f64> {
        let nodes = self.infinity_ball(radius)?;
        let mut beyond = 0.0;
        if self.mu_rho_total.is_finite() && self.space.analytic_boundary {
            let tol = self.quad_tol;
            let t_trunc = self.density.tail_integral(self.space.r_max, tol)?;
            beyond = if radius >= t_trunc {
                self.mu_rho_total - self.node_mu_rho.iter().sum::<f64>()
            } else {
                let from = self.density.tail_inverse(radius, tol)?;
                std::f64::consts::PI
                    * condition_c::weighted_radial_tail(&self.density, self.sigma, from, tol)?
            };
        }
        Ok(self.mu_rho_of(&nodes) + beyond)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{classify, DensityFn};
    use crate::grid::GeoGrid;
    use crate::space::build_halfplane;

    fn view_powlog2() -> SphereView {
        let space = Arc::new(build_halfplane(0.05, 200.0).unwrap());
        let f = DensityFn::powlog(-2.0, 0.0);
        let report = classify(&f, &GeoGrid::classification_default(), 1.0, 1e-10).unwrap();
        sphericalize(space, f, Some(report), 2.0, false).unwrap()
    }

    #[test]
    fn rejects_nonpositive_sigma() {
        let space = Arc::new(build_halfplane(0.1, 50.0).unwrap());
        let f = DensityFn::powlog(-2.0, 0.0);
        let report = classify(&f, &GeoGrid::classification_default(), 1.0, 1e-10).unwrap();
        assert!(sphericalize(space, f, Some(report), 0.0, false).is_err());
    }

    #[test]
    fn failing_density_needs_force() {
        let space = Arc::new(build_halfplane(0.1, 50.0).unwrap());
        let f = DensityFn::exponential(1.0);
        let report = classify(&f, &GeoGrid::classification_default(), 1.0, 1e-10).unwrap();
        assert!(matches!(
            sphericalize(space.clone(), f.clone(), Some(report.clone()), 2.0, false),
            Err(Error::Prereq(_))
        ));
        assert!(sphericalize(space, f, Some(report), 2.0, true).is_ok());
    }

    #[test]
    fn weights_positive_and_total_mass_matches_polar_oracle() {
        let v = view_powlog2();
        assert!(v.edge_rho.iter().all(|&w| w > 0.0));
        assert!(v.node_mu_rho.iter().all(|&w| w > 0.0));
        // polar oracle: μ_ρ(X) = π ∫₀^∞ t (t+2)^(−4) dt = π/24
        let oracle = std::f64::consts::PI / 24.0;
        let rel = (v.mu_rho_total - oracle).abs() / oracle;
        assert!(rel < 0.01, "μ_ρ(X) = {} vs oracle {oracle} ({rel:.4} rel)", v.mu_rho_total);
    }

    #[test]
    fn crude_weight_envelope_bounds_d_rho() {
        // d_ρ(x,y) ≤ (sup ρ) · d(x,y): the cheapest sanity envelope
        let v = view_powlog2();
        let sup_rho = v.density.eval(v.density.domain_floor).unwrap();
        let x = v.space.nearest_node([0.5, 0.5]);
        for probe in [[3.0, 4.0], [-20.0, 1.0], [0.0, 80.0]] {
            let y = v.space.nearest_node(probe);
            let dr = v.d_rho(x, &[y]).unwrap()[0];
            let dd = crate::space::dijkstra::graph_distance(&v.space, x, &[y]).unwrap()[0];
            assert!(dr <= sup_rho * dd * (1.0 + 1e-9), "{dr} vs {}", sup_rho * dd);
        }
    }

    #[test]
    fn infinity_ball_mass_matches_analytic_annulus() {
        // for s(r) = T⁻¹(r) ≫ 1: μ_ρ(B_ρ(∞, r)) ≈ π ∫_{s(r)}^∞ t(t+2)^(−4) dt
        let v = view_powlog2();
        let r = 0.02; // s(r) = 48, well inside the mesh
        let got = v.mu_rho_infinity_ball(r).unwrap();
        let s = v.density.tail_inverse(r, 1e-12).unwrap();
        assert!((s - (1.0 / r - 2.0)).abs() < 1e-6 * s);
        let oracle = std::f64::consts::PI
            * crate::quad::tail(&|t: f64| t * (t + 2.0).powi(-4), s, 1e-13).unwrap();
        let rel = (got - oracle).abs() / oracle;
        // the node-set boundary is an upper construction: expect a modest
        // one-sided bias at mesh resolution
        assert!(rel < 0.15, "mass {got} vs oracle {oracle} (rel {rel:.4})");
    }

    #[test]
    fn ball_queries_resolve_per_center_and_metric() {
        use crate::space::{BallCenter, BallQuery, MetricTag};
        let v = view_powlog2();
        // invalid combinations are rejected
        assert!(v
            .ball(BallQuery { center: BallCenter::Infinity, radius: 0.1, metric: MetricTag::Original })
            .is_err());
        assert!(v
            .ball(BallQuery {
                center: BallCenter::Base,
                radius: 1.0,
                metric: MetricTag::Sphericalized
            })
            .is_err());
        // base-centered balls use radial distance exactly
        let b = v
            .ball(BallQuery { center: BallCenter::Base, radius: 5.0, metric: MetricTag::Original })
            .unwrap();
        assert!(b.iter().all(|&i| v.space.nodes[i].radial < 5.0));
        assert!(!b.is_empty());
        // ∞-centered balls collect the far tail
        let inf = v
            .ball(BallQuery {
                center: BallCenter::Infinity,
                radius: 0.01,
                metric: MetricTag::Sphericalized,
            })
            .unwrap();
        assert!(!inf.is_empty());
        assert!(inf.iter().all(|&i| v.space.nodes[i].radial > 50.0));
    }

    #[test]
    fn radial_probe_matches_closed_form_tail_difference() {
        // d_ρ((0,1),(0,3)) = ∫₁³ (t+2)^(−2) dt = 1/3 − 1/5 = 2/15
        let v = view_powlog2();
        let d = v.d_rho_points([0.0, 1.0], [0.0, 3.0]).unwrap();
        let expect = 2.0 / 15.0;
        assert!(
            (d - expect).abs() / expect < 0.02,
            "d_rho probe {d} vs {expect} ({}% off)",
            100.0 * (d - expect).abs() / expect
        );
    }

    #[test]
    fn constant_density_rescales_both_structures_exactly() {
        let space = Arc::new(build_halfplane(0.1, 50.0).unwrap());
        let c = 0.5;
        // constant tabulated density diverges, so force is required
        let f = DensityFn::tabulated(vec![(1e-6, c), (1e6, c)]).unwrap();
        let v = sphericalize(space.clone(), f, None, 2.0, true).unwrap();
        for (i, &(a, b, len)) in space.edges.iter().enumerate() {
            let _ = (a, b);
            assert!((v.edge_rho[i] - c * len).abs() <= 1e-12 * len);
        }
        for (i, n) in space.nodes.iter().enumerate() {
            assert!((v.node_mu_rho[i] - c * c * n.mu_weight).abs() <= 1e-12 * n.mu_weight);
        }
        assert!(v.infinity.is_none(), "divergent tail cannot reach ∞");
        // d_ρ = c·d on a sampled pair
        let x = 3usize;
        let y = space.node_count() / 2;
        let dr = v.d_rho(x, &[y]).unwrap()[0];
        let dd = crate::space::dijkstra::graph_distance(&space, x, &[y]).unwrap()[0];
        assert!((dr - c * dd).abs() <= 1e-9 * dd);
    }

    #[test]
    fn infinity_brackets_are_ordered_and_ring_degenerates_to_tail() {
        let v = view_powlog2();
        let br = v.infinity.as_ref().unwrap();
        for b in br.iter() {
            assert!(b.lower <= b.point * (1.0 + 1e-12));
            assert!(b.point <= b.upper);
        }
        // on the outer ring the graph leg vanishes: point ≈ T(|x|)
        for &y in &v.space.outer_ring {
            let t = v.density.tail_integral(v.space.nodes[y].radial, 1e-10).unwrap();
            assert!((br[y].point - t).abs() <= 1e-9 + 1e-6 * t);
        }
        // lower bound from the tail at |x| = 1: T(1) = 1/3
        let x = v.space.nearest_node([0.0, 1.0]);
        assert!(br[x].lower >= 1.0 / 3.0 - 0.02);
    }

    #[test]
    fn diameter_bounded_by_quasidecreasing_envelope() {
        // explicit boundedness constant: 6·C_qd·C_U·(1+C_U)·∫₀^∞ ρ
        let v = view_powlog2();
        let c_u = v.space.uniformity_hint;
        let c_qd = v.report.as_ref().unwrap().c_qd_hat;
        let total = v.density.total_integral(1e-10).unwrap();
        let bound = 6.0 * c_qd * c_u * (1.0 + c_u) * total;
        assert!(
            v.diam_rho_hat <= bound,
            "diam {} exceeds envelope {}",
            v.diam_rho_hat,
            bound
        );
        assert!(v.diam_rho_hat > 0.0);
    }
}
