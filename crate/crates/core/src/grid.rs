//! Geometric (log-uniform) sample grids.

use serde::{Deserialize, Serialize};

/// A geometric grid on [lo, hi] with a fixed number of points per decade.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GeoGrid {
    pub lo: f64,
    pub hi: f64,
    pub per_decade: u32,
}

impl GeoGrid {
    pub fn new(lo: f64, hi: f64, per_decade: u32) -> Self {
        assert!(lo > 0.0 && hi > lo && per_decade > 0);
        Self { lo, hi, per_decade }
    }

    /// Default classification grid spanning [1e-3, 1e6].
    pub fn classification_default() -> Self {
        Self::new(1e-3, 1e6, 16)
    }

    pub fn points(&self) -> Vec<f64> {
        let ln_lo = self.lo.ln();
        let ln_hi = self.hi.ln();
        let step = std::f64::consts::LN_10 / self.per_decade as f64;
        let n = ((ln_hi - ln_lo) / step).ceil() as usize;
        let mut pts: Vec<f64> = (0..=n).map(|k| (ln_lo + k as f64 * step).exp()).collect();
        if let Some(last) = pts.last_mut() {
            if *last > self.hi {
                *last = self.hi;
            }
        }
        pts
    }

    /// Same span with twice the density, for refinement-stabilization checks.
    pub fn refined(&self) -> Self {
        Self { per_decade: self.per_decade * 2, ..*self }
    }

    pub fn spans(&self, lo: f64, hi: f64) -> bool {
        self.lo <= lo && self.hi >= hi
    }
}

/// Decade index of r relative to 1.0 (…, -1 for [0.1,1), 0 for [1,10), …).
pub fn decade_of(r: f64) -> i32 {
    r.log10().floor() as i32
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_monotone_and_spans() {
        let g = GeoGrid::classification_default();
        let pts = g.points();
        assert!(pts.windows(2).all(|w| w[0] < w[1]));
        assert!((pts[0] - 1e-3).abs() / 1e-3 < 1e-12);
        assert!(*pts.last().unwrap() <= 1e6 * (1.0 + 1e-12));
        assert!(*pts.last().unwrap() >= 1e6 * (1.0 - 1e-12));
    }

    #[test]
    fn refined_doubles_density() {
        let g = GeoGrid::new(1.0, 100.0, 8);
        assert_eq!(g.refined().points().len(), 2 * g.points().len() - 1);
    }
}
