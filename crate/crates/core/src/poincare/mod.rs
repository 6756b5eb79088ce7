//! Discrete upper gradients and the empirical p-Poincaré inequality.
//!
//! The discrete upper gradient of a node function `u` is its local
//! Lipschitz constant over incident edges in the tagged metric — the
//! standard graph realization, an upper gradient for graph curves by
//! construction. Around it:
//!
//! - path-integral transform identity: `∫_γ g ds_ρ = ∫_γ ρ(|·|)·g ds`
//!   per curve, specializing to the length identity at g ≡ 1;
//! - gradient/measure transform: `ρ·g` is an upper gradient in the base
//!   metric iff `g` is one in the deformed metric (checked edge-wise with
//!   the per-edge quadrature bias), and the L^p mass identity
//!   `‖g‖_{L^p(μ)} = ‖ρ^(−σ/p) g‖_{L^p(μ_ρ)}`, exact on node sums;
//! - ball sweeps of the Poincaré ratio: mean oscillation of `u` on a ball
//!   against `r·(λ-ball p-mean of g^p)^(1/p)`, run identically in both
//!   metrics. The ratio of the two empirical constants is the preservation
//!   factor.
//!
//! The test-function suite is versioned (distance cones from 5 anchors,
//! 2 coordinates, the log-radial profile, 8 seeded scale-free waves
//! smoothed 3 steps); the empirical constants are suite-dependent by
//! nature, so the suite is part of the configuration.

use crate::error::{Error, Result};
use crate::report::VerifierReport;
use crate::space::dijkstra::{dijkstra, EdgeWeights};
use crate::space::{MetricTag, NodeId};
use crate::sphere::SphereView;
use crate::verify::curves::boundary_rho_field;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct ScalarField {
    pub values: Vec<f64>,
    pub tag: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct GradientField {
    pub values: Vec<f64>,
    pub metric: MetricTag,
}

/// g(x) = max over incident edges of |u(x) − u(y)| / (edge length in the
/// tagged metric). Satisfies the edge-wise upper gradient inequality by
/// construction.
pub fn local_upper_gradient(view: &SphereView, u: &ScalarField, metric: MetricTag) -> GradientField {
    let space = &view.space;
    let mut g = vec![0.0f64; space.node_count()];
    for v in 0..space.node_count() {
        let mut best = 0.0f64;
        for (w, len, eix) in space.neighbors(v) {
            let step = match metric {
                MetricTag::Original => len,
                MetricTag::Sphericalized => view.edge_rho[eix],
            };
            if step > 0.0 {
                best = best.max((u.values[v] - u.values[w]).abs() / step);
            }
        }
        g[v] = best;
    }
    GradientField { values: g, metric }
}

// ---------------------------------------------------------------------
// test-function suite
// ---------------------------------------------------------------------

/// Anchored distance cones, coordinates, the log-radial profile, and seeded
/// scale-free waves; `version` pins the construction.
pub fn test_function_suite(view: &SphereView, version: u32, seed: u64) -> Result<Vec<ScalarField>> {
    if version != 1 {
        return Err(Error::InvalidInput(format!("unknown suite version {version}")));
    }
    let space = &view.space;
    let n = space.node_count();
    let mut fields = Vec::new();

    let anchors = [[0.0, 1.0], [-2.0, 1.5], [3.0, 2.0], [0.0, 6.0], [-8.0, 4.0]];
    for (i, &a) in anchors.iter().enumerate() {
        let v = space.nearest_node(a);
        let field = dijkstra(space, EdgeWeights::Length, &[(v, 0.0)]);
        fields.push(ScalarField { values: field.dist, tag: format!("distance_anchor_{i}") });
    }
    fields.push(ScalarField {
        values: space.nodes.iter().map(|nd| nd.xy[0]).collect(),
        tag: "coordinate_x".into(),
    });
    fields.push(ScalarField {
        values: space.nodes.iter().map(|nd| nd.xy[1]).collect(),
        tag: "coordinate_y".into(),
    });
    fields.push(ScalarField {
        values: space.nodes.iter().map(|nd| (nd.radial + 1.0).ln()).collect(),
        tag: "log_radial".into(),
    });

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..8 {
        // scale-free waves: oscillation in ln(|x|+1) and angle stays
        // resolved at every radius of the graded mesh and is independent of
        // the mesh itself
        let mut modes = Vec::new();
        for _ in 0..5 {
            let amp: f64 = rng.gen_range(-1.0..1.0);
            let omega: f64 = rng.gen_range(0.5..3.0);
            let m: f64 = rng.gen_range(0..5) as f64;
            let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            modes.push((amp, omega, m, phase));
        }
        let mut values: Vec<f64> = space
            .nodes
            .iter()
            .map(|nd| {
                let lr = (nd.radial + 1.0).ln();
                let theta = nd.xy[1].atan2(nd.xy[0]);
                modes
                    .iter()
                    .map(|&(a, w, m, p)| a * (w * lr + m * theta + p).cos())
                    .sum()
            })
            .collect();
        for _ in 0..3 {
            values = jacobi_smooth(view, &values);
        }
        fields.push(ScalarField { values, tag: format!("random_smooth_{i}") });
    }
    let _ = n;
    Ok(fields)
}

fn jacobi_smooth(view: &SphereView, values: &[f64]) -> Vec<f64> {
    let space = &view.space;
    (0..space.node_count())
        .map(|v| {
            let mut acc = values[v];
            let mut cnt = 1.0;
            for (w, _, _) in space.neighbors(v) {
                acc += values[w];
                cnt += 1.0;
            }
            acc / cnt
        })
        .collect()
}

// ---------------------------------------------------------------------
// transform identities
// ---------------------------------------------------------------------

/// Worst relative error of `∫_γ g ds_ρ = ∫_γ ρ(|·|) g ds` over node paths.
/// With g ≡ 1 both sides are the two discretizations of the ρ-length.
pub fn transform_identity_check(
    view: &SphereView,
    paths: &[Vec<NodeId>],
    g: &GradientField,
) -> Result<f64> {
    let space = &view.space;
    let base = space.base_point;
    let floor = view.density.domain_floor;
    let mut worst = 0.0f64;
    for path in paths {
        if path.len() < 2 {
            return Err(Error::Degenerate("path too short".into()));
        }
        let mut lhs = 0.0;
        let mut rhs = 0.0;
        for w in path.windows(2) {
            let (a, b) = (w[0], w[1]);
            let gbar = 0.5 * (g.values[a] + g.values[b]);
            let (pa, pb) = (space.nodes[a].xy, space.nodes[b].xy);
            lhs += gbar * crate::sphere::rho_segment(&view.density, base, pa, pb);
            let mid = [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])];
            let r_mid = crate::space::dist2(mid, base).max(floor);
            rhs += gbar
                * view.density.ln_rho_unchecked(r_mid).exp()
                * crate::space::dist2(pa, pb);
        }
        let scale = lhs.abs().max(rhs.abs());
        if scale > 0.0 {
            worst = worst.max((lhs - rhs).abs() / scale);
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Serialize)]
pub struct UgTransformReport {
    /// worst edge ratio of |Δu| against max(ρ·g)·(d edge length)
    pub worst_edge_ratio: f64,
    pub edge_tolerance: f64,
    pub holds: bool,
    /// relative error of the L^p mass identity per tested p
    pub lp_identity: Vec<(f64, f64)>,
}

/// Builds g as the deformed-metric upper gradient of u and checks that
/// ρ(|·|)·g is an upper gradient of u edge-wise in the base metric, plus
/// the exact L^p mass identity.
pub fn ug_transform_check(view: &SphereView, u: &ScalarField, ps: &[f64]) -> UgTransformReport {
    let space = &view.space;
    let floor = view.density.domain_floor;
    let g = local_upper_gradient(view, u, MetricTag::Sphericalized);
    let rho_at =
        |v: NodeId| view.density.ln_rho_unchecked(space.nodes[v].radial.max(floor)).exp();
    let mut worst = 0.0f64;
    for &(a, b, len) in space.edges.iter() {
        let (a, b) = (a as usize, b as usize);
        let du = (u.values[a] - u.values[b]).abs();
        let cap = (rho_at(a) * g.values[a]).max(rho_at(b) * g.values[b]) * len;
        if cap > 0.0 {
            worst = worst.max(du / cap);
        } else if du > 0.0 {
            worst = f64::INFINITY;
        }
    }
    // per-edge quadrature bias: ρ varies by O(mesh_rel) along one edge
    let edge_tolerance = 1.0 + 5.0 * space.mesh_rel;

    let mut lp = Vec::new();
    for &p in ps {
        let base_mass: f64 = (0..space.node_count())
            .map(|v| g.values[v].powf(p) * space.nodes[v].mu_weight)
            .sum();
        let deformed_mass: f64 = (0..space.node_count())
            .map(|v| {
                let w = rho_at(v).powf(-view.sigma / p) * g.values[v];
                w.powf(p) * view.node_mu_rho[v]
            })
            .sum();
        let scale = base_mass.abs().max(deformed_mass.abs()).max(1e-300);
        lp.push((p, (base_mass - deformed_mass).abs() / scale));
    }
    UgTransformReport { worst_edge_ratio: worst, edge_tolerance, holds: worst <= edge_tolerance, lp_identity: lp }
}

// ---------------------------------------------------------------------
// Poincaré ball sweeps
// ---------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct PoincareSample {
    pub center: NodeId,
    pub radius: f64,
    pub metric: MetricTag,
    pub field_tag: String,
    pub p: f64,
    pub lambda: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepOutcome {
    pub metric: MetricTag,
    pub p: f64,
    pub lambda: f64,
    pub c_p_hat: f64,
    pub skipped: usize,
    pub samples: Vec<PoincareSample>,
}

/// Stratified ball list for a metric; balls whose dilation exits the model
/// are skipped at evaluation time.
pub fn sample_balls(
    view: &SphereView,
    metric: MetricTag,
    count: usize,
    lambda_max: f64,
    seed: u64,
) -> Vec<(NodeId, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let space = &view.space;
    let strata = crate::space::doubling::radial_strata(space);
    let mut out = Vec::with_capacity(count);
    let mut tries = 0usize;
    while out.len() < count && tries < 40 * count {
        tries += 1;
        let stratum = &strata[tries % strata.len()];
        let center = stratum[rng.gen_range(0..stratum.len())];
        let nd = &space.nodes[center];
        let local = space.local_mesh(nd.radial);
        let (lo, hi) = match metric {
            MetricTag::Original => {
                let room = (space.r_max - nd.radial) / lambda_max * 0.9;
                (8.0 * local, room)
            }
            MetricTag::Sphericalized => {
                let rho_here = view
                    .density
                    .ln_rho_unchecked(nd.radial.max(view.density.domain_floor))
                    .exp();
                let room = view
                    .infinity
                    .as_ref()
                    .map(|br| br[center].point / lambda_max * 0.9)
                    .unwrap_or(f64::INFINITY);
                (8.0 * local * rho_here, room)
            }
        };
        if !(hi > lo) {
            continue;
        }
        let r = (lo.ln() + rng.gen::<f64>() * (hi.ln() - lo.ln())).exp();
        out.push((center, r));
    }
    out
}

/// One full sweep: every (ball, field) pair at fixed p and λ.
pub fn poincare_sweep(
    view: &SphereView,
    metric: MetricTag,
    fields: &[ScalarField],
    balls: &[(NodeId, f64)],
    p: f64,
    lambda: f64,
) -> Result<SweepOutcome> {
    if !(p >= 1.0) || !(lambda >= 1.0) {
        return Err(Error::InvalidInput("need p ≥ 1 and λ ≥ 1".into()));
    }
    let space = &view.space;
    let gradients: Vec<GradientField> =
        fields.iter().map(|u| local_upper_gradient(view, u, metric)).collect();
    let weights: Vec<f64> = match metric {
        MetricTag::Original => space.nodes.iter().map(|n| n.mu_weight).collect(),
        MetricTag::Sphericalized => view.node_mu_rho.clone(),
    };
    let outer: Vec<NodeId> = space.outer_ring.clone();

    let per_ball: Vec<Vec<PoincareSample>> = balls
        .par_iter()
        .map(|&(center, radius)| {
            let field = match metric {
                MetricTag::Original => dijkstra(space, EdgeWeights::Length, &[(center, 0.0)]),
                MetricTag::Sphericalized => {
                    dijkstra(space, view.rho_weights(), &[(center, 0.0)])
                }
            };
            let dilated = lambda * radius;
            // skip when the dilated ball exits the truncated model
            if outer.iter().any(|&v| field.dist[v] < dilated) {
                return Vec::new();
            }
            if let (MetricTag::Sphericalized, Some(br)) = (metric, &view.infinity) {
                if br[center].point < dilated {
                    return Vec::new();
                }
            }
            let ball: Vec<NodeId> =
                (0..space.node_count()).filter(|&v| field.dist[v] < radius).collect();
            if ball.len() < 12 {
                return Vec::new();
            }
            let ball_mass: f64 = ball.iter().map(|&v| weights[v]).sum();
            let dil: Vec<NodeId> =
                (0..space.node_count()).filter(|&v| field.dist[v] < dilated).collect();
            let dil_mass: f64 = dil.iter().map(|&v| weights[v]).sum();
            let mut out = Vec::with_capacity(fields.len());
            for (u, g) in fields.iter().zip(&gradients) {
                let mean: f64 =
                    ball.iter().map(|&v| u.values[v] * weights[v]).sum::<f64>() / ball_mass;
                let lhs: f64 = ball
                    .iter()
                    .map(|&v| (u.values[v] - mean).abs() * weights[v])
                    .sum::<f64>()
                    / ball_mass;
                let gmean: f64 = dil
                    .iter()
                    .map(|&v| g.values[v].powf(p) * weights[v])
                    .sum::<f64>()
                    / dil_mass;
                let rhs = radius * gmean.powf(1.0 / p);
                let ratio = if rhs > 0.0 { lhs / rhs } else { 0.0 };
                out.push(PoincareSample {
                    center,
                    radius,
                    metric,
                    field_tag: u.tag.clone(),
                    p,
                    lambda,
                    lhs,
                    rhs,
                    ratio,
                });
            }
            out
        })
        .collect();

    let mut samples = Vec::new();
    let mut skipped = 0usize;
    for group in per_ball {
        if group.is_empty() {
            skipped += 1;
        } else {
            samples.extend(group);
        }
    }
    let c_p_hat = samples.iter().map(|s| s.ratio).fold(0.0f64, f64::max);
    Ok(SweepOutcome { metric, p, lambda, c_p_hat, skipped, samples })
}

/// Deep-point existence: inside every sampled ball B_ρ(z, r) with
/// r ≤ 2·diam hat there is a point with boundary clearance ≥ r/(16·C).
pub fn deep_point_check(view: &SphereView, c_hat: f64, samples: usize, seed: u64) -> VerifierReport {
    let clearance = boundary_rho_field(view);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = view.space.node_count();
    let mut worst = 0.0f64;
    let mut checked = 0usize;
    for _ in 0..samples {
        let z = rng.gen_range(0..n);
        let u: f64 = rng.gen();
        let r = 2.0 * view.diam_rho_hat * (0.02 + 0.98 * u);
        let field = dijkstra(&view.space, view.rho_weights(), &[(z, 0.0)]);
        let deepest = (0..n)
            .filter(|&v| field.dist[v] < r)
            .map(|v| clearance.dist[v])
            .fold(0.0f64, f64::max);
        if deepest <= 0.0 {
            continue;
        }
        checked += 1;
        // required: deepest ≥ r/(16·C); report the violation ratio
        worst = worst.max(r / (16.0 * c_hat) / deepest);
    }
    VerifierReport::classify("deep_point_existence", checked, worst, 1.0)
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
    fn constant_field_has_zero_gradient_and_zero_ratio() {
        let v = view();
        let u = ScalarField { values: vec![3.5; v.space.node_count()], tag: "const".into() };
        let g = local_upper_gradient(&v, &u, MetricTag::Original);
        assert!(g.values.iter().all(|&x| x == 0.0));
        let balls = sample_balls(&v, MetricTag::Original, 10, 2.0, 3);
        let out = poincare_sweep(&v, MetricTag::Original, &[u], &balls, 1.0, 2.0).unwrap();
        // lhs is pure roundoff for constant fields; the ratio must be 0
        assert!(out.samples.iter().all(|s| s.lhs < 1e-12 && s.ratio == 0.0));
    }

    #[test]
    fn distance_field_gradient_is_at_most_one_plus_slack() {
        let v = view();
        let anchor = v.space.nearest_node([0.0, 2.0]);
        let field = dijkstra(&v.space, EdgeWeights::Length, &[(anchor, 0.0)]);
        let u = ScalarField { values: field.dist, tag: "dist".into() };
        let g = local_upper_gradient(&v, &u, MetricTag::Original);
        let worst = g.values.iter().copied().fold(0.0f64, f64::max);
        assert!(worst <= 1.0 + 1e-9, "distance gradient {worst}");
    }

    #[test]
    fn coordinate_field_gradient_near_one() {
        let v = view();
        let u = ScalarField {
            values: v.space.nodes.iter().map(|n| n.xy[0]).collect(),
            tag: "x".into(),
        };
        let g = local_upper_gradient(&v, &u, MetricTag::Original);
        let worst = g.values.iter().copied().fold(0.0f64, f64::max);
        assert!(worst <= 1.0 + 1e-9, "linear gradient {worst}");
        let avg: f64 = g.values.iter().sum::<f64>() / g.values.len() as f64;
        assert!(avg > 0.8);
    }

    #[test]
    fn lp_mass_identity_is_exact() {
        let v = view();
        let suite = test_function_suite(&v, 1, 5).unwrap();
        for u in suite.iter().take(4) {
            let rep = ug_transform_check(&v, u, &[1.0, 2.0, 3.0]);
            for &(p, err) in &rep.lp_identity {
                assert!(err < 1e-12, "p = {p}: rel err {err}");
            }
            assert!(rep.holds, "edge transform ratio {}", rep.worst_edge_ratio);
        }
    }

    #[test]
    fn identity_specializes_to_length_at_unit_gradient() {
        let v = view();
        // the radial path from (0,1) to (0,3) along the θ=π/2 column
        let a = v.space.nearest_node([0.0, 1.0]);
        let b = v.space.nearest_node([0.0, 3.0]);
        let field = dijkstra(&v.space, v.rho_weights(), &[(a, 0.0)]);
        let path = field.path_to(b);
        let ones = GradientField {
            values: vec![1.0; v.space.node_count()],
            metric: MetricTag::Sphericalized,
        };
        let worst = transform_identity_check(&v, &[path], &ones).unwrap();
        // two-point Gauss vs midpoint per leg: difference is O(mesh²)
        assert!(worst < 1e-3, "both sides discretize ∫ρ: err {worst}");
    }

    #[test]
    fn zero_gradient_identity_both_sides_zero() {
        let v = view();
        let zeros = GradientField {
            values: vec![0.0; v.space.node_count()],
            metric: MetricTag::Sphericalized,
        };
        let worst = transform_identity_check(&v, &[vec![0, 1, 2]], &zeros).unwrap();
        assert_eq!(worst, 0.0);
    }

    #[test]
    fn scale_covariance_is_exact() {
        let v = view();
        let suite = test_function_suite(&v, 1, 5).unwrap();
        let u = &suite[7]; // log-radial
        let scaled = ScalarField {
            values: u.values.iter().map(|&x| 10.0 * x).collect(),
            tag: "scaled".into(),
        };
        let balls = sample_balls(&v, MetricTag::Original, 6, 2.0, 9);
        let a = poincare_sweep(&v, MetricTag::Original, &[u.clone()], &balls, 1.0, 2.0).unwrap();
        let b = poincare_sweep(&v, MetricTag::Original, &[scaled], &balls, 1.0, 2.0).unwrap();
        for (sa, sb) in a.samples.iter().zip(&b.samples) {
            assert!((sa.lhs * 10.0 - sb.lhs).abs() <= 1e-9 * sb.lhs.abs().max(1e-12));
            assert!((sa.ratio - sb.ratio).abs() <= 1e-9 * sa.ratio.max(1e-12));
        }
    }

    #[test]
    fn edgewise_inequality_holds_in_the_generating_metric() {
        let v = view();
        let suite = test_function_suite(&v, 1, 9).unwrap();
        for metric in [MetricTag::Original, MetricTag::Sphericalized] {
            for u in suite.iter().step_by(5) {
                let g = local_upper_gradient(&v, u, metric);
                for (i, &(a, b, len)) in v.space.edges.iter().enumerate() {
                    let (a, b) = (a as usize, b as usize);
                    let step = match metric {
                        MetricTag::Original => len,
                        MetricTag::Sphericalized => v.edge_rho[i],
                    };
                    let cap = g.values[a].max(g.values[b]) * step;
                    let du = (u.values[a] - u.values[b]).abs();
                    assert!(du <= cap * (1.0 + 1e-12), "{}: {du} > {cap}", u.tag);
                }
            }
        }
    }

    #[test]
    fn balls_contain_a_deep_point() {
        let v = view();
        // a generous constant: the estimator value for this view is ~O(10)
        let rep = deep_point_check(&v, 20.0, 30, 4);
        assert_eq!(rep.verdict, crate::report::CheckVerdict::Holds, "{rep:?}");
        assert!(rep.sample_count > 10);
    }

    #[test]
    fn lambda_dilation_does_not_inflate_ratios() {
        let v = view();
        let suite = test_function_suite(&v, 1, 5).unwrap();
        let fields = &suite[..4];
        let balls = sample_balls(&v, MetricTag::Original, 12, 4.0, 13);
        let r1 = poincare_sweep(&v, MetricTag::Original, fields, &balls, 1.0, 1.0).unwrap();
        let r2 = poincare_sweep(&v, MetricTag::Original, fields, &balls, 1.0, 2.0).unwrap();
        let r4 = poincare_sweep(&v, MetricTag::Original, fields, &balls, 1.0, 4.0).unwrap();
        let key = |s: &PoincareSample| (s.center, s.field_tag.clone());
        use std::collections::HashMap;
        let m1: HashMap<_, f64> = r1.samples.iter().map(|s| (key(s), s.ratio)).collect();
        let m2: HashMap<_, f64> = r2.samples.iter().map(|s| (key(s), s.ratio)).collect();
        for s in &r4.samples {
            let k = key(s);
            if let (Some(&a), Some(&b)) = (m1.get(&k), m2.get(&k)) {
                // near-constant gradients over nested balls: allow 5% slack
                assert!(s.ratio <= b * 1.05 + 1e-12, "λ=4 {} vs λ=2 {b}", s.ratio);
                assert!(b <= a * 1.05 + 1e-12, "λ=2 {b} vs λ=1 {a}");
            }
        }
    }
}
