//! Empirical doubling constant of the base measure μ.

use super::{NodeId, SpaceModel};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MuDoublingSample {
    pub center: NodeId,
    pub radius: f64,
    pub mu_small: f64,
    pub mu_large: f64,
    pub ratio: f64,
    pub resolution_limited: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MuDoublingOutcome {
    pub c_mu_hat: f64,
    pub worst: Option<MuDoublingSample>,
    pub resolution_limited: usize,
    pub samples: Vec<MuDoublingSample>,
}

/// max over sampled (x, r) of μ(B(x,2r)) / μ(B(x,r)), with centers
/// stratified over radial decades and radii log-uniform up to R_max/4.
/// Radii under 5 local cells are evaluated but flagged resolution-limited
/// and excluded from the reported constant.
pub fn doubling_constant_mu(model: &SpaceModel, samples: usize, seed: u64) -> MuDoublingOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let strata = radial_strata(model);
    let r_cap = model.r_max / 4.0;

    let mut picks: Vec<(NodeId, f64)> = Vec::with_capacity(samples);
    for i in 0..samples {
        let stratum = &strata[i % strata.len()];
        let center = stratum[rng.gen_range(0..stratum.len())];
        let local = model.local_mesh(model.nodes[center].radial);
        let lo = (1.5 * local).min(r_cap * 0.5);
        let r = (lo.ln() + rng.gen::<f64>() * (r_cap.ln() - lo.ln())).exp();
        picks.push((center, r));
    }

    let samples: Vec<MuDoublingSample> = picks
        .par_iter()
        .map(|&(center, radius)| {
            let xy = model.nodes[center].xy;
            let mu_small: f64 = model
                .euclid_ball(xy, radius)
                .iter()
                .map(|&i| model.nodes[i].mu_weight)
                .sum();
            let mu_large: f64 = model
                .euclid_ball(xy, 2.0 * radius)
                .iter()
                .map(|&i| model.nodes[i].mu_weight)
                .sum();
            let ratio = if mu_small > 0.0 { mu_large / mu_small } else { f64::INFINITY };
            let local = model.local_mesh(model.nodes[center].radial);
            MuDoublingSample {
                center,
                radius,
                mu_small,
                mu_large,
                ratio,
                resolution_limited: radius < 5.0 * local,
            }
        })
        .collect();

    let mut c_mu_hat = 0.0f64;
    let mut worst = None;
    let mut limited = 0usize;
    for s in &samples {
        if s.resolution_limited {
            limited += 1;
            continue;
        }
        if s.ratio > c_mu_hat {
            c_mu_hat = s.ratio;
            worst = Some(*s);
        }
    }
    MuDoublingOutcome { c_mu_hat, worst, resolution_limited: limited, samples }
}

/// Node ids grouped by radial decade (non-empty groups only).
pub fn radial_strata(model: &SpaceModel) -> Vec<Vec<NodeId>> {
    use std::collections::BTreeMap;
    let mut map: BTreeMap<i32, Vec<NodeId>> = BTreeMap::new();
    for (i, n) in model.nodes.iter().enumerate() {
        map.entry(n.radial.log10().floor() as i32).or_default().push(i);
    }
    map.into_values().collect()
}
