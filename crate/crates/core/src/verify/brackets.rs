//! Two-sided comparison bounds between d, d_ρ, ρ and the distance to ∞,
//! checked on sampled pairs and witness curves.
//!
//! Each check filters pairs to its hypothesis, computes the worst ratio
//! against the allowed constant (derived from C_A_hat, C_B_hat and the
//! domain's uniformity constant), and classifies holds / violated /
//! resolution-limited with the shared discretization tolerance. A verdict
//! of violated always carries a concrete witness.

use super::curves::{boundary_rho_field, CurveSample};
use super::violation_tolerance;
use crate::error::Result;
use crate::report::VerifierReport;
use crate::space::dijkstra::{dijkstra, EdgeWeights};
use crate::space::{MetricTag, NodeId};
use crate::sphere::SphereView;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct BracketChecks {
    /// the comparison constants every check was evaluated against
    pub constants: crate::sphere::ComparisonConstants,
    pub reports: Vec<VerifierReport>,
}

#[derive(Debug, Clone, Copy, Serialize)]
struct PairRatio {
    x: NodeId,
    y: NodeId,
    ratio: f64,
}

fn polar_point(r: f64, theta: f64) -> [f64; 2] {
    [r * theta.cos(), r * theta.sin()]
}

/// Pairs in the comparability annulus ½(|x|+1) ≤ |y|+1 ≤ 2(|x|+1), sampled
/// in coordinate space so refinement reruns probe the same geometry.
fn annulus_pairs(view: &SphereView, count: usize, seed: u64) -> Vec<(NodeId, NodeId)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let space = &view.space;
    let (r_lo, r_hi) = ((space.inner_edge_radius * 4.0).max(space.r_max * 1e-6), space.r_max * 0.45);
    let mut out = Vec::with_capacity(count);
    let mut tries = 0;
    while out.len() < count && tries < 40 * count {
        tries += 1;
        let rx = (r_lo.ln() + rng.gen::<f64>() * (r_hi.ln() - r_lo.ln())).exp();
        // |y|+1 = (|x|+1)·2^u keeps the pair inside the hypothesis exactly
        let u: f64 = rng.gen_range(-0.95..0.95);
        let ry = (rx + 1.0) * 2f64.powf(u) - 1.0;
        if ry < r_lo || ry > space.r_max * 0.9 {
            continue;
        }
        let x = space.nearest_node(polar_point(rx, rng.gen_range(0.0..std::f64::consts::PI)));
        let y = space.nearest_node(polar_point(ry, rng.gen_range(0.0..std::f64::consts::PI)));
        let (nx, ny) = (&space.nodes[x], &space.nodes[y]);
        if x != y
            && 0.5 * (nx.radial + 1.0) <= ny.radial + 1.0
            && ny.radial + 1.0 <= 2.0 * (nx.radial + 1.0)
        {
            out.push((x, y));
        }
    }
    out
}

/// Pairs with |y| ≥ 2|x| + 1 (the far regime controlling the ∞ bracket).
fn far_pairs(view: &SphereView, count: usize, seed: u64) -> Vec<(NodeId, NodeId)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let space = &view.space;
    let (r_lo, r_hi) = ((space.inner_edge_radius * 4.0).max(space.r_max * 1e-6), space.r_max * 0.9);
    let mut out = Vec::with_capacity(count);
    let mut tries = 0;
    while out.len() < count && tries < 50 * count {
        tries += 1;
        let rx = (r_lo.ln() + rng.gen::<f64>() * ((r_hi / 3.0).ln() - r_lo.ln())).exp();
        let y_floor = 2.0 * rx + 1.0;
        if y_floor >= r_hi {
            continue;
        }
        let ry = (y_floor.ln() + rng.gen::<f64>() * (r_hi.ln() - y_floor.ln())).exp();
        let x = space.nearest_node(polar_point(rx, rng.gen_range(0.0..std::f64::consts::PI)));
        let y = space.nearest_node(polar_point(ry, rng.gen_range(0.0..std::f64::consts::PI)));
        if space.nodes[y].radial >= 2.0 * space.nodes[x].radial + 1.0 {
            out.push((x, y));
        }
    }
    out
}

/// Batch d_ρ for pairs grouped by source.
fn rho_distances(view: &SphereView, pairs: &[(NodeId, NodeId)]) -> Vec<f64> {
    use std::collections::BTreeMap;
    let mut by_source: BTreeMap<NodeId, Vec<usize>> = BTreeMap::new();
    for (i, &(x, _)) in pairs.iter().enumerate() {
        by_source.entry(x).or_default().push(i);
    }
    let mut out = vec![f64::NAN; pairs.len()];
    for (x, ids) in by_source {
        let field = dijkstra(&view.space, view.rho_weights(), &[(x, 0.0)]);
        for i in ids {
            out[i] = field.dist[pairs[i].1];
        }
    }
    out
}

/// Runs the full bracket suite on freshly sampled pairs.
pub fn verify_bracket_bounds(view: &SphereView, samples: usize, seed: u64) -> Result<BracketChecks> {
    let consts = view.constants()?;
    let tol = violation_tolerance(view);
    let density = &view.density;
    let floor = density.domain_floor;
    let mut reports = Vec::new();

    // metric comparability: ρ(|x|)d(x,y)/(C_A³C_B) ≤ d_ρ(x,y) ≤ C₂ ρ(|x|) d(x,y)
    {
        let pairs = annulus_pairs(view, samples, seed);
        let d_rho = rho_distances(view, &pairs);
        let mut worst = 0.0f64;
        let mut witness = None;
        for (i, &(x, y)) in pairs.iter().enumerate() {
            let rho_x = density.ln_rho_unchecked(view.space.nodes[x].radial.max(floor)).exp();
            let d = view.space.euclid(x, y);
            if d == 0.0 {
                continue;
            }
            let lower = rho_x * d / (consts.c_a.powi(3) * consts.c_b);
            let upper = consts.c2 * rho_x * d;
            let ratio = (lower / d_rho[i]).max(d_rho[i] / upper);
            if ratio > worst {
                worst = ratio;
                witness = Some(PairRatio { x, y, ratio });
            }
        }
        let mut rep = VerifierReport::classify("metric_comparability", pairs.len(), worst, tol);
        if let Some(w) = witness {
            rep = rep.with_witness(w);
        }
        reports.push(rep);
    }

    // ∞-distance bracket via far pairs: h(|x|)/C_A ≤ d_ρ(x,y) ≤ C₁ h(|x|)
    {
        let pairs = far_pairs(view, samples, seed ^ 0x9e37);
        let d_rho = rho_distances(view, &pairs);
        let mut worst = 0.0f64;
        let mut witness = None;
        for (i, &(x, y)) in pairs.iter().enumerate() {
            let h = density.ln_h_unchecked(view.space.nodes[x].radial.max(floor)).exp();
            let ratio = ((h / consts.c_a) / d_rho[i]).max(d_rho[i] / (consts.c1 * h));
            if ratio > worst {
                worst = ratio;
                witness = Some(PairRatio { x, y, ratio });
            }
        }
        let mut rep = VerifierReport::classify("far_pair_distance_bracket", pairs.len(), worst, tol);
        if let Some(w) = witness {
            rep = rep.with_witness(w);
        }
        reports.push(rep);
    }

    // the same bracket against the ∞ point estimate itself
    if let Some(brackets) = &view.infinity {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x51ed);
        let mut worst = 0.0f64;
        let mut witness = None;
        let n = view.space.node_count();
        for _ in 0..samples {
            let x = rng.gen_range(0..n);
            let h = density.ln_h_unchecked(view.space.nodes[x].radial.max(floor)).exp();
            let point = brackets[x].point;
            let ratio = ((h / consts.c_a) / point).max(point / (consts.c1 * h));
            if ratio > worst {
                worst = ratio;
                witness = Some(PairRatio { x, y: x, ratio });
            }
        }
        let mut rep = VerifierReport::classify("infinity_distance_bracket", samples, worst, tol);
        if let Some(w) = witness {
            rep = rep.with_witness(w);
        }
        reports.push(rep);
    }

    // curve envelopes along witness d-geodesics between annulus pairs:
    // radius envelope |x|/(1+F) ≤ |z| ≤ (1+F)|x| + F|y| with the curve's own
    // measured functional F, and density comparability with the hint C_U
    {
        let boundary = boundary_rho_field(view);
        let pairs = annulus_pairs(view, (samples / 4).max(8), seed ^ 0xabcd);
        let mut worst_radius = 0.0f64;
        let mut worst_density = 0.0f64;
        let mut used = 0usize;
        let rho_factor = consts.c_a.powf(3.0 + consts.c_u.log2());
        for &(x, y) in &pairs {
            if x == y {
                continue;
            }
            let field = dijkstra(&view.space, EdgeWeights::Length, &[(x, 0.0)]);
            let path = field.path_to(y);
            let Ok(curve) = CurveSample::from_nodes(view, &boundary, &path) else {
                continue;
            };
            let Ok(f) = super::uniformity::functional_with_dist(
                view,
                &curve,
                MetricTag::Original,
                None,
            ) else {
                continue;
            };
            // hypothesis filter: the witness must behave like a uniform curve
            if f > consts.c_u * tol {
                continue;
            }
            used += 1;
            let (rx, ry) = (view.space.nodes[x].radial, view.space.nodes[y].radial);
            let (rmin, rmax) = (rx.min(ry), rx.max(ry));
            let lo = rmin / (1.0 + f);
            let hi = (1.0 + f) * rmin + f * rmax;
            let rho_x = density.ln_rho_unchecked(rx.max(floor)).exp();
            for &z in &path {
                let rz = view.space.nodes[z].radial;
                worst_radius = worst_radius.max((lo / rz).max(rz / hi));
                let rho_z = density.ln_rho_unchecked(rz.max(floor)).exp();
                worst_density =
                    worst_density.max((rho_z / (rho_factor * rho_x)).max(rho_x / (rho_factor * rho_z)));
            }
        }
        reports.push(VerifierReport::classify("curve_radius_envelope", used, worst_radius, tol));
        reports.push(VerifierReport::classify(
            "curve_density_comparability",
            used,
            worst_density,
            tol,
        ));
    }

    // witness curves between radially separated endpoints: splitting at the
    // first radius-doubling crossings leaves F(2F+3)-uniform subcurves, and
    // ρ is quasimonotone along the whole curve
    {
        let boundary = boundary_rho_field(view);
        let pairs = far_pairs(view, (samples / 4).max(8), seed ^ 0x1331);
        let mut worst_sub = 0.0f64;
        let mut worst_mono = 0.0f64;
        let mut used = 0usize;
        // two comparability hops (one per subcurve endpoint scale) plus the
        // quasidecreasing slack
        let sub_factor = |f: f64| consts.c_a.powf(3.0 + (f * (2.0 * f + 3.0)).log2());
        for &(x, y) in &pairs {
            let field = dijkstra(&view.space, EdgeWeights::Length, &[(x, 0.0)]);
            let path = field.path_to(y);
            let Ok(curve) = CurveSample::from_nodes(view, &boundary, &path) else {
                continue;
            };
            let Ok(f) =
                super::uniformity::functional_with_dist(view, &curve, MetricTag::Original, None)
            else {
                continue;
            };
            if f > consts.c_u * tol {
                continue;
            }
            used += 1;
            // subcurve splits: first crossing of each doubled radius
            let rx = view.space.nodes[x].radial;
            let mut splits = vec![0usize];
            let mut next_scale = 2.0 * rx;
            for (i, &z) in path.iter().enumerate() {
                if view.space.nodes[z].radial >= next_scale {
                    splits.push(i);
                    next_scale *= 2.0;
                }
            }
            if *splits.last().unwrap() != path.len() - 1 {
                splits.push(path.len() - 1);
            }
            let allowed = f * (2.0 * f + 3.0);
            for w in splits.windows(2) {
                let sub = &path[w[0]..=w[1]];
                if sub.len() < 2 || sub[0] == sub[sub.len() - 1] {
                    continue;
                }
                let Ok(subcurve) = CurveSample::from_nodes(view, &boundary, sub) else {
                    continue;
                };
                if let Ok(sf) = super::uniformity::functional_with_dist(
                    view,
                    &subcurve,
                    MetricTag::Original,
                    None,
                ) {
                    worst_sub = worst_sub.max(sf / allowed);
                }
            }
            // quasimonotone density along the curve, ordered from the
            // smaller-radius endpoint
            let mono_cap = sub_factor(f).powi(2) * consts.c_a * consts.c_b;
            let mut running_max_later = f64::NEG_INFINITY;
            for &z in path.iter().rev() {
                let ln_rho_z =
                    density.ln_rho_unchecked(view.space.nodes[z].radial.max(floor));
                if running_max_later.is_finite() {
                    worst_mono =
                        worst_mono.max((running_max_later - ln_rho_z).exp() / mono_cap);
                }
                running_max_later = running_max_later.max(ln_rho_z);
            }
        }
        reports.push(VerifierReport::classify("subcurve_uniformity", used, worst_sub, tol));
        reports.push(VerifierReport::classify("curve_density_monotone", used, worst_mono, tol));
    }

    Ok(BracketChecks { constants: consts, reports })
}
