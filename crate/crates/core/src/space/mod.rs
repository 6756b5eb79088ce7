//! Discretized metric measure spaces.
//!
//! A [`SpaceModel`] is a connected weighted graph with node coordinates,
//! radial distances to a base point `b` on the removed boundary, per-node
//! cell measures, and boundary-adjacency flags. The built-in builder meshes
//! the Euclidean upper half-plane (see [`halfplane`]); arbitrary graphs can
//! be imported through the line-oriented text format in [`io`].

pub mod doubling;
pub mod halfplane;
pub mod io;
pub use halfplane::build_halfplane;

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

pub type NodeId = usize;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpaceNode {
    pub xy: [f64; 2],
    /// |x| = d(b, x)
    pub radial: f64,
    /// cell measure
    pub mu_weight: f64,
    pub boundary_adjacent: bool,
}

/// Ring/angle index layout of a built polar mesh (node id = ring·n_angles + angle).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolarIndex {
    pub n_rings: usize,
    pub n_angles: usize,
    /// ring node radius = exp(ln_r0 + k·ln_g)
    pub ln_r0: f64,
    pub ln_g: f64,
    pub dtheta: f64,
}

impl PolarIndex {
    pub fn ring_of_radius(&self, r: f64) -> usize {
        let k = ((r.ln() - self.ln_r0) / self.ln_g).round();
        (k.max(0.0) as usize).min(self.n_rings - 1)
    }

    pub fn angle_of(&self, theta: f64) -> usize {
        let j = (theta / self.dtheta - 0.5).round();
        (j.max(0.0) as usize).min(self.n_angles - 1)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpaceModel {
    pub nodes: Vec<SpaceNode>,
    /// unique undirected edges (a, b, length)
    pub edges: Vec<(u32, u32, f64)>,
    pub base_point: [f64; 2],
    pub r_max: f64,
    pub mesh_rel: f64,
    /// uniformity constant of the continuum domain (π/2 for the half-plane)
    pub uniformity_hint: f64,
    /// radius of the unmeshed hole around b (0 when unknown/imported)
    pub inner_edge_radius: f64,
    /// nodes on the outermost ring (used for tail estimates toward ∞)
    pub outer_ring: Vec<NodeId>,
    /// true when the boundary is the line y = 0 and d_X(z) = z.y exactly
    pub analytic_boundary: bool,
    pub polar: Option<PolarIndex>,

    // CSR adjacency, derived from `edges`
    #[serde(skip)]
    pub(crate) adj_offsets: Vec<u32>,
    #[serde(skip)]
    pub(crate) adj_targets: Vec<u32>,
    #[serde(skip)]
    pub(crate) adj_lengths: Vec<f64>,
    /// undirected edge index behind each directed CSR entry
    #[serde(skip)]
    pub(crate) adj_edge_ix: Vec<u32>,
}

impl SpaceModel {
    pub fn from_parts(
        nodes: Vec<SpaceNode>,
        edges: Vec<(u32, u32, f64)>,
        base_point: [f64; 2],
        r_max: f64,
        mesh_rel: f64,
        uniformity_hint: f64,
        inner_edge_radius: f64,
        outer_ring: Vec<NodeId>,
        analytic_boundary: bool,
        polar: Option<PolarIndex>,
    ) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::InvalidInput("space model has no nodes".into()));
        }
        for &(a, b, len) in &edges {
            if a as usize >= nodes.len() || b as usize >= nodes.len() || !(len > 0.0) {
                return Err(Error::InvalidInput(format!("bad edge ({a},{b},{len})")));
            }
        }
        let mut m = Self {
            nodes,
            edges,
            base_point,
            r_max,
            mesh_rel,
            uniformity_hint,
            inner_edge_radius,
            outer_ring,
            analytic_boundary,
            polar,
            adj_offsets: Vec::new(),
            adj_targets: Vec::new(),
            adj_lengths: Vec::new(),
            adj_edge_ix: Vec::new(),
        };
        m.rebuild_adjacency();
        if !m.is_connected() {
            return Err(Error::InvalidInput("space model graph is not connected".into()));
        }
        Ok(m)
    }

    pub(crate) fn rebuild_adjacency(&mut self) {
        let n = self.nodes.len();
        let mut degree = vec![0u32; n];
        for &(a, b, _) in &self.edges {
            degree[a as usize] += 1;
            degree[b as usize] += 1;
        }
        let mut offsets = vec![0u32; n + 1];
        for i in 0..n {
            offsets[i + 1] = offsets[i] + degree[i];
        }
        let total = offsets[n] as usize;
        let mut targets = vec![0u32; total];
        let mut lengths = vec![0f64; total];
        let mut edge_ix = vec![0u32; total];
        let mut cursor: Vec<u32> = offsets[..n].to_vec();
        for (ei, &(a, b, len)) in self.edges.iter().enumerate() {
            let ca = cursor[a as usize] as usize;
            targets[ca] = b;
            lengths[ca] = len;
            edge_ix[ca] = ei as u32;
            cursor[a as usize] += 1;
            let cb = cursor[b as usize] as usize;
            targets[cb] = a;
            lengths[cb] = len;
            edge_ix[cb] = ei as u32;
            cursor[b as usize] += 1;
        }
        self.adj_offsets = offsets;
        self.adj_targets = targets;
        self.adj_lengths = lengths;
        self.adj_edge_ix = edge_ix;
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn neighbors(&self, v: NodeId) -> impl Iterator<Item = (NodeId, f64, usize)> + '_ {
        let lo = self.adj_offsets[v] as usize;
        let hi = self.adj_offsets[v + 1] as usize;
        (lo..hi).map(move |i| {
            (self.adj_targets[i] as usize, self.adj_lengths[i], self.adj_edge_ix[i] as usize)
        })
    }

    pub fn is_connected(&self) -> bool {
        let n = self.nodes.len();
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1usize;
        while let Some(v) = stack.pop() {
            for (w, _, _) in self.neighbors(v) {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == n
    }

    pub fn total_measure(&self) -> f64 {
        self.nodes.iter().map(|n| n.mu_weight).sum()
    }

    pub fn euclid(&self, a: NodeId, b: NodeId) -> f64 {
        dist2(self.nodes[a].xy, self.nodes[b].xy)
    }

    /// Distance from a node to the boundary ∂X; exact (the height above the
    /// line y = 0) for built half-planes, a boundary-adjacent-node estimate
    /// for imported graphs.
    pub fn d_boundary(&self, v: NodeId) -> f64 {
        if self.analytic_boundary {
            self.nodes[v].xy[1]
        } else {
            self.nodes
                .iter()
                .enumerate()
                .filter(|(_, n)| n.boundary_adjacent)
                .map(|(w, _)| self.euclid(v, w))
                .fold(f64::INFINITY, f64::min)
        }
    }

    pub fn d_boundary_point(&self, p: [f64; 2]) -> f64 {
        if self.analytic_boundary {
            p[1]
        } else {
            self.nodes
                .iter()
                .filter(|n| n.boundary_adjacent)
                .map(|n| dist2(p, n.xy))
                .fold(f64::INFINITY, f64::min)
        }
    }

    /// Local cell scale at radius r (graded meshes scale with max(r, inner)).
    pub fn local_mesh(&self, radial: f64) -> f64 {
        self.mesh_rel * radial.max(self.inner_edge_radius.max(f64::MIN_POSITIVE))
    }

    pub fn nearest_node(&self, p: [f64; 2]) -> NodeId {
        if let Some(polar) = &self.polar {
            let r = dist2(p, self.base_point).max(1e-300);
            let theta = angle_in_halfplane(p, self.base_point);
            let k = polar.ring_of_radius(r);
            let j = polar.angle_of(theta);
            // search the 5×5 index window around the analytic guess
            let mut best = k * polar.n_angles + j;
            let mut best_d = dist2(p, self.nodes[best].xy);
            for dk in -2i64..=2 {
                for dj in -2i64..=2 {
                    let kk = k as i64 + dk;
                    let jj = j as i64 + dj;
                    if kk < 0 || jj < 0 || kk >= polar.n_rings as i64 || jj >= polar.n_angles as i64
                    {
                        continue;
                    }
                    let id = kk as usize * polar.n_angles + jj as usize;
                    let d = dist2(p, self.nodes[id].xy);
                    if d < best_d {
                        best_d = d;
                        best = id;
                    }
                }
            }
            best
        } else {
            (0..self.nodes.len())
                .min_by(|&a, &b| {
                    dist2(p, self.nodes[a].xy).total_cmp(&dist2(p, self.nodes[b].xy))
                })
                .unwrap()
        }
    }

    /// Candidate attachment nodes for an off-graph query point.
    pub fn connector_candidates(&self, p: [f64; 2]) -> Vec<NodeId> {
        if let Some(polar) = &self.polar {
            let r = dist2(p, self.base_point).max(1e-300);
            let theta = angle_in_halfplane(p, self.base_point);
            let k = polar.ring_of_radius(r) as i64;
            let j = polar.angle_of(theta) as i64;
            let mut out = Vec::with_capacity(25);
            for dk in -2i64..=2 {
                for dj in -2i64..=2 {
                    let (kk, jj) = (k + dk, j + dj);
                    if kk >= 0 && jj >= 0 && kk < polar.n_rings as i64 && jj < polar.n_angles as i64
                    {
                        out.push(kk as usize * polar.n_angles + jj as usize);
                    }
                }
            }
            out
        } else {
            vec![self.nearest_node(p)]
        }
    }

    /// Nodes inside the Euclidean ball B(center, radius) (the exact metric
    /// ball for the convex half-plane).
    pub fn euclid_ball(&self, center: [f64; 2], radius: f64) -> Vec<NodeId> {
        let r2 = radius * radius;
        (0..self.nodes.len())
            .filter(|&i| {
                let d = [self.nodes[i].xy[0] - center[0], self.nodes[i].xy[1] - center[1]];
                d[0] * d[0] + d[1] * d[1] < r2
            })
            .collect()
    }

    /// μ(B(b, r)): radial values are exact, plus the unmeshed hole area.
    pub fn mu_ball_at_base(&self, r: f64) -> f64 {
        let hole = if self.analytic_boundary {
            let rr = r.min(self.inner_edge_radius);
            0.5 * std::f64::consts::PI * rr * rr
        } else {
            0.0
        };
        hole + self
            .nodes
            .iter()
            .filter(|n| n.radial < r)
            .map(|n| n.mu_weight)
            .sum::<f64>()
    }
}

pub fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    (dx * dx + dy * dy).sqrt()
}

fn angle_in_halfplane(p: [f64; 2], base: [f64; 2]) -> f64 {
    let dx = p[0] - base[0];
    let dy = (p[1] - base[1]).max(0.0);
    dy.atan2(dx)
}

pub mod dijkstra;
pub use dijkstra::{dijkstra, DistanceField, EdgeWeights};

/// Ball query identifier: a node, the augmented point ∞, or the base point b.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BallCenter {
    Node(NodeId),
    Infinity,
    Base,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricTag {
    Original,
    Sphericalized,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BallQuery {
    pub center: BallCenter,
    pub radius: f64,
    pub metric: MetricTag,
}

impl BallQuery {
    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0) {
            return Err(Error::InvalidInput("ball radius must be > 0".into()));
        }
        match (self.center, self.metric) {
            (BallCenter::Infinity, MetricTag::Original) => Err(Error::InvalidInput(
                "∞-centered balls exist only in the sphericalized metric".into(),
            )),
            (BallCenter::Base, MetricTag::Sphericalized) => Err(Error::InvalidInput(
                "b-centered balls are queried in the original metric".into(),
            )),
            _ => Ok(()),
        }
    }
}
