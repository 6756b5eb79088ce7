//! Metric density functions ρ and their derived quantities.
//!
//! A density is a positive function on (0,∞) used to reweight arclength
//! (`d_ρ`) and measure (`μ_ρ`). Everything downstream hinges on a few
//! scalar quantities of ρ alone:
//!
//! - the tail `T(r) = ∫_r^∞ ρ(t) dt`,
//! - `h(t) = (t+1)·ρ(t)` and its decreasing generalized inverse `h⁻¹`
//!   (these control the distance to the point `∞`),
//! - the classification constants of [`conditions`].
//!
//! Evaluations are done in log space (`ln_rho`): the exponential family
//! overflows f64 in ratio form long before the sampling grids top out, and
//! every growth/stabilization decision only needs log-ratios.

pub mod conditions;

pub use conditions::{
    check_condition_a, check_condition_b, check_equivalence, classify, decay_exponent,
    ConditionOutcome, DecayOutcome, DensityReport, EquivalenceOutcome, PairWitness, Verdict,
};

use crate::error::{Error, Result};
use crate::grid::GeoGrid;
use crate::quad;
use serde::{Deserialize, Serialize};

/// Default evaluation floor; the families in scope are bounded near 0, so
/// behavior below this is irrelevant but evaluation there is still an error.
pub const DEFAULT_DOMAIN_FLOOR: f64 = 1e-6;

/// Default absolute quadrature tolerance for analytic families.
pub const DEFAULT_QUAD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "family")]
pub enum DensityFamily {
    /// ρ(t) = (t+2)^α · (ln(t+2))^β
    PowLog { alpha: f64, beta: f64 },
    /// ρ(t) = e^(−rate·t), rate > 0
    Exponential { rate: f64 },
    /// Log-log linear interpolation through sorted knots (t_i, ρ_i), t_i > 0;
    /// extended beyond the ends by the adjacent segment's slope.
    Tabulated { knots: Vec<(f64, f64)> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityFn {
    pub family: DensityFamily,
    pub domain_floor: f64,
}

impl DensityFn {
    pub fn new(family: DensityFamily, domain_floor: f64) -> Result<Self> {
        if !(domain_floor > 0.0) {
            return Err(Error::InvalidInput("domain_floor must be > 0".into()));
        }
        if let DensityFamily::Exponential { rate } = family {
            if !(rate > 0.0) {
                return Err(Error::InvalidInput("exponential rate must be > 0".into()));
            }
        }
        if let DensityFamily::Tabulated { ref knots } = family {
            if knots.len() < 2 {
                return Err(Error::InvalidInput("tabulated density needs ≥ 2 knots".into()));
            }
            for w in knots.windows(2) {
                if !(w[0].0 < w[1].0) {
                    return Err(Error::InvalidInput("tabulated knots must be strictly increasing in t".into()));
                }
            }
            if knots.iter().any(|&(t, v)| !(t > 0.0) || !(v > 0.0)) {
                return Err(Error::InvalidInput("tabulated knots must be positive".into()));
            }
        }
        Ok(Self { family, domain_floor })
    }

    pub fn powlog(alpha: f64, beta: f64) -> Self {
        Self::new(DensityFamily::PowLog { alpha, beta }, DEFAULT_DOMAIN_FLOOR).unwrap()
    }

    pub fn exponential(rate: f64) -> Self {
        Self::new(DensityFamily::Exponential { rate }, DEFAULT_DOMAIN_FLOOR).unwrap()
    }

    pub fn tabulated(knots: Vec<(f64, f64)>) -> Result<Self> {
        Self::new(DensityFamily::Tabulated { knots }, DEFAULT_DOMAIN_FLOOR)
    }

    pub fn describe(&self) -> String {
        match &self.family {
            DensityFamily::PowLog { alpha, beta } => format!("powlog(alpha={alpha},beta={beta})"),
            DensityFamily::Exponential { rate } => format!("exponential(rate={rate})"),
            DensityFamily::Tabulated { knots } => format!("tabulated({} knots)", knots.len()),
        }
    }

    fn check_domain(&self, t: f64) -> Result<()> {
        if !(t > 0.0) || t < self.domain_floor {
            return Err(Error::Domain(format!(
                "density evaluated at t = {t}, below domain floor {}",
                self.domain_floor
            )));
        }
        Ok(())
    }

    /// ln ρ(t) without the domain check (t already validated or structural).
    pub(crate) fn ln_rho_unchecked(&self, t: f64) -> f64 {
        match &self.family {
            DensityFamily::PowLog { alpha, beta } => {
                let u = (t + 2.0).ln();
                alpha * u + beta * u.ln()
            }
            DensityFamily::Exponential { rate } => -rate * t,
            DensityFamily::Tabulated { knots } => {
                let lt = t.ln();
                let n = knots.len();
                // segment index: last i with knots[i].0 <= t, clamped to interior
                let i = match knots.partition_point(|&(kt, _)| kt <= t) {
                    0 => 0,
                    p => (p - 1).min(n - 2),
                };
                let (t0, v0) = knots[i];
                let (t1, v1) = knots[i + 1];
                let s = (v1.ln() - v0.ln()) / (t1.ln() - t0.ln());
                v0.ln() + s * (lt - t0.ln())
            }
        }
    }

    pub fn ln_rho(&self, t: f64) -> Result<f64> {
        self.check_domain(t)?;
        Ok(self.ln_rho_unchecked(t))
    }

    /// ρ(t) per the family formula.
    pub fn eval(&self, t: f64) -> Result<f64> {
        Ok(self.ln_rho(t)?.exp())
    }

    /// Log-log slope of the tabulated extension beyond the last knot.
    fn tabulated_tail_slope(knots: &[(f64, f64)]) -> f64 {
        let n = knots.len();
        let (t0, v0) = knots[n - 2];
        let (t1, v1) = knots[n - 1];
        (v1.ln() - v0.ln()) / (t1.ln() - t0.ln())
    }

    /// Checks that ∫₀^∞ ρ converges; classification refuses divergent families.
    pub fn require_integrable(&self) -> Result<()> {
        let reject = |msg: String| Err(Error::Divergence(msg));
        match &self.family {
            DensityFamily::PowLog { alpha, beta } => {
                if *alpha > -1.0 {
                    return reject(format!("powlog alpha = {alpha} > -1: not integrable"));
                }
                if *alpha == -1.0 && *beta >= -1.0 {
                    return reject(format!(
                        "powlog alpha = -1, beta = {beta} >= -1: not integrable"
                    ));
                }
                Ok(())
            }
            DensityFamily::Exponential { .. } => Ok(()),
            DensityFamily::Tabulated { knots } => {
                let s = Self::tabulated_tail_slope(knots);
                if s < -1.0 {
                    Ok(())
                } else {
                    reject(format!("tabulated tail slope {s:.4} >= -1: not integrable"))
                }
            }
        }
    }

    pub fn is_integrable(&self) -> bool {
        self.require_integrable().is_ok()
    }

    /// Closed-form tail T(r) when the family admits one.
    pub fn tail_closed_form(&self, r: f64) -> Option<f64> {
        if r < 0.0 {
            return None;
        }
        match &self.family {
            DensityFamily::PowLog { alpha, beta } => {
                if *alpha < -1.0 && *beta == 0.0 {
                    // ∫_r^∞ (t+2)^α dt = (r+2)^(α+1) / (−(α+1))
                    Some((r + 2.0).powf(alpha + 1.0) / -(alpha + 1.0))
                } else if *alpha == -1.0 && *beta < -1.0 {
                    // ∫_r^∞ (t+2)^(−1) ln(t+2)^β dt = ln(r+2)^(β+1) / (−(β+1))
                    Some((r + 2.0).ln().powf(beta + 1.0) / -(beta + 1.0))
                } else {
                    None
                }
            }
            DensityFamily::Exponential { rate } => Some((-rate * r).exp() / rate),
            DensityFamily::Tabulated { knots } => Some(tabulated_tail(knots, r)),
        }
    }

    /// Tail by adaptive quadrature (independent of the closed forms).
    pub fn tail_numeric(&self, r: f64, abs_tol: f64) -> Result<f64> {
        self.require_integrable()?;
        let lo = r.max(self.domain_floor);
        match &self.family {
            DensityFamily::PowLog { alpha, beta } => {
                // substitute u = ln(t+2): ∫ e^((α+1)u) u^β du — exponential decay
                let (a, b) = (*alpha, *beta);
                let u0 = (lo + 2.0).ln();
                let f = move |u: f64| ((a + 1.0) * u + b * u.ln().max(-700.0) * 1.0).exp();
                let g = move |u: f64| ((a + 1.0) * u).exp() * u.powf(b);
                // u ≥ ln(2) > 0 on the whole range so u^β is safe; prefer g
                let _ = f;
                quad::tail(&g, u0, abs_tol)
            }
            _ => {
                let f = |t: f64| self.ln_rho_unchecked(t).exp();
                quad::tail(&f, lo, abs_tol)
            }
        }
    }

    /// T(r) = ∫_r^∞ ρ(t) dt within absolute tolerance; closed forms preferred.
    pub fn tail_integral(&self, r: f64, abs_tol: f64) -> Result<f64> {
        self.require_integrable()?;
        match self.tail_closed_form(r) {
            Some(v) => Ok(v),
            None => self.tail_numeric(r, abs_tol),
        }
    }

    /// ln T(r), stable for tails that underflow f64.
    pub fn ln_tail(&self, r: f64, abs_tol: f64) -> Result<f64> {
        self.require_integrable()?;
        match &self.family {
            DensityFamily::PowLog { alpha, beta } => {
                if *alpha < -1.0 && *beta == 0.0 {
                    return Ok((alpha + 1.0) * (r + 2.0).ln() - (-(alpha + 1.0)).ln());
                }
                if *alpha == -1.0 && *beta < -1.0 {
                    return Ok((beta + 1.0) * (r + 2.0).ln().ln() - (-(beta + 1.0)).ln());
                }
                // generic: T(r) = (r+1)·ρ(r)·ratio with an O(1) normalized ratio
                let ratio = self.tail_over_h(r, abs_tol)?;
                Ok(ratio.ln() + (r + 1.0).ln() + self.ln_rho_unchecked(r.max(self.domain_floor)))
            }
            DensityFamily::Exponential { rate } => Ok(-rate * r - rate.ln()),
            DensityFamily::Tabulated { .. } => Ok(self.tail_integral(r, abs_tol)?.ln()),
        }
    }

    /// The condition-(B) ratio T(r) / ((r+1)·ρ(r)), computed without under-
    /// or overflow: the integrand is normalized by ρ(r) before integration.
    pub fn tail_over_h(&self, r: f64, abs_tol: f64) -> Result<f64> {
        self.require_integrable()?;
        let lo = r.max(self.domain_floor);
        match &self.family {
            DensityFamily::Exponential { rate } => {
                // ∫_r^∞ e^(−k(t−r)) dt / (r+1) = 1/(k(r+1))
                Ok(1.0 / (rate * (r + 1.0)))
            }
            DensityFamily::PowLog { alpha, beta } => {
                if (*alpha < -1.0 && *beta == 0.0) || (*alpha == -1.0 && *beta < -1.0) {
                    let v = self.ln_tail(r, abs_tol)? - (r + 1.0).ln() - self.ln_rho_unchecked(lo);
                    return Ok(v.exp());
                }
                let ln_rho_r = self.ln_rho_unchecked(lo);
                let f = |t: f64| (self.ln_rho_unchecked(t) - ln_rho_r).exp();
                Ok(quad::tail(&f, lo, abs_tol)? / (r + 1.0))
            }
            DensityFamily::Tabulated { .. } => {
                let t = self.tail_integral(r, abs_tol)?;
                Ok(t / ((r + 1.0) * self.ln_rho_unchecked(lo).exp()))
            }
        }
    }

    /// h(t) = (t+1)·ρ(t).
    pub fn h(&self, t: f64) -> Result<f64> {
        Ok((t + 1.0) * self.eval(t)?)
    }

    pub fn ln_h_unchecked(&self, t: f64) -> f64 {
        (t + 1.0).ln() + self.ln_rho_unchecked(t)
    }

    /// ∫₀^∞ ρ(t) dt (families in scope are bounded near 0, so the piece
    /// below the floor is included by evaluating the closed form at 0).
    pub fn total_integral(&self, abs_tol: f64) -> Result<f64> {
        self.tail_integral(0.0, abs_tol)
    }

    /// The radius r with T(r) = tau (T strictly decreasing), by bisection
    /// in log space. Errors when tau is outside (0, T(floor)).
    pub fn tail_inverse(&self, tau: f64, abs_tol: f64) -> Result<f64> {
        if !(tau > 0.0) {
            return Err(Error::InvalidInput(format!("tail inverse of {tau}")));
        }
        let target = tau.ln();
        let mut lo = self.domain_floor;
        if self.ln_tail(lo, abs_tol)? < target {
            return Err(Error::InvalidInput(
                "tail inverse target exceeds the total integral".into(),
            ));
        }
        let mut hi = lo.max(1.0) * 2.0;
        let mut guard = 0;
        while self.ln_tail(hi, abs_tol)? > target {
            hi *= 2.0;
            guard += 1;
            if guard > 4000 || !hi.is_finite() {
                return Err(Error::InvalidInput("tail inverse target unreachable".into()));
            }
        }
        for _ in 0..200 {
            let mid = (0.5 * (lo.ln() + hi.ln())).exp();
            if self.ln_tail(mid, abs_tol)? > target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi / lo < 1.0 + 1e-13 {
                break;
            }
        }
        Ok((0.5 * (lo.ln() + hi.ln())).exp())
    }
}

/// Exact tail of the log-log piecewise-linear model: each segment is a pure
/// power ρ(t) = v_i (t/t_i)^(s_i), integrable in closed form.
fn tabulated_tail(knots: &[(f64, f64)], r: f64) -> f64 {
    let n = knots.len();
    let seg = |t0: f64, v0: f64, t1: f64, v1: f64, from: f64, to: f64| -> f64 {
        let s = (v1.ln() - v0.ln()) / (t1.ln() - t0.ln());
        let c = v0 / t0.powf(s);
        if (s + 1.0).abs() < 1e-14 {
            c * (to / from).ln()
        } else {
            c * (to.powf(s + 1.0) - from.powf(s + 1.0)) / (s + 1.0)
        }
    };
    let mut total = 0.0;
    for i in 0..n - 1 {
        let (t0, v0) = knots[i];
        let (t1, v1) = knots[i + 1];
        let from = r.max(t0).min(t1);
        if from < t1 {
            // first segment also covers (r, t0) when r falls below the knots
            let lo = if i == 0 { r.max(1e-300).min(t1) } else { from };
            total += seg(t0, v0, t1, v1, lo, t1);
        } else if i == 0 && r < t0 {
            total += seg(t0, v0, t1, v1, r.max(1e-300), t1);
        }
    }
    // extension beyond the last knot by the last segment's slope
    let (t0, v0) = knots[n - 2];
    let (t1, v1) = knots[n - 1];
    let s = (v1.ln() - v0.ln()) / (t1.ln() - t0.ln());
    if s < -1.0 {
        let c = v1 / t1.powf(s);
        let from = r.max(t1);
        total += c * -from.powf(s + 1.0) / (s + 1.0);
    } else {
        total = f64::INFINITY;
    }
    total
}

/// Tabulated tail values T(r) on a geometric grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailTable {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub abs_tol: f64,
}

impl TailTable {
    pub fn build(f: &DensityFn, grid: &GeoGrid, abs_tol: f64) -> Result<Self> {
        let pts = grid.points();
        let mut values = Vec::with_capacity(pts.len());
        for &r in &pts {
            values.push(f.tail_integral(r, abs_tol)?);
        }
        let table = Self { grid: pts, values, abs_tol };
        table.validate()?;
        Ok(table)
    }

    /// Strict decrease and positivity across the grid.
    pub fn validate(&self) -> Result<()> {
        for w in self.values.windows(2) {
            if !(w[0] > w[1]) || !(w[1] >= 0.0) {
                return Err(Error::InvalidInput(
                    "tail table is not strictly decreasing and positive".into(),
                ));
            }
        }
        Ok(())
    }
}

/// h(t) tabulated on a grid, with the conservative generalized inverse.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HTable {
    pub grid: Vec<f64>,
    pub h: Vec<f64>,
}

/// h⁻¹(τ) estimated against the table: the smallest grid t with h(t) ≤ τ,
/// plus the preceding grid point as the lower bracket.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HInverse {
    pub value: f64,
    pub lower_bracket: Option<f64>,
}

impl HTable {
    pub fn build(f: &DensityFn, grid: &GeoGrid) -> Result<Self> {
        let pts = grid.points();
        let mut h = Vec::with_capacity(pts.len());
        for &t in &pts {
            h.push(f.ln_h_unchecked(t.max(f.domain_floor)).exp());
        }
        Ok(Self { grid: pts, h })
    }

    /// None when no grid point satisfies h ≤ τ (the infimum lies beyond the
    /// grid); the caller treats that as "larger than the grid maximum".
    pub fn inverse(&self, tau: f64) -> Option<HInverse> {
        for (i, &hv) in self.h.iter().enumerate() {
            if hv <= tau {
                return Some(HInverse {
                    value: self.grid[i],
                    lower_bracket: if i > 0 { Some(self.grid[i - 1]) } else { None },
                });
            }
        }
        None
    }
}

/// Outcome of tabulating h and h⁻¹ plus the halving-stability check
/// h⁻¹(τ) ≤ h⁻¹(τ/2) ≤ K·h⁻¹(τ) on sampled τ ∈ (0, τ₁].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HInverseCheck {
    pub sampled: usize,
    pub worst_ratio: f64,
    pub bound: f64,
    pub holds: bool,
}

pub fn h_and_inverse(
    f: &DensityFn,
    report: &DensityReport,
    grid: &GeoGrid,
) -> Result<(HTable, HInverseCheck)> {
    if report.verdict_a != Verdict::Pass || report.verdict_b != Verdict::Pass {
        return Err(Error::Prereq(
            "h / h⁻¹ tables require both classification verdicts to pass".into(),
        ));
    }
    let table = HTable::build(f, grid)?;
    let c_a = report.c_a_hat.ok_or_else(|| Error::Prereq("C_A unavailable".into()))?;
    let c_b = report.c_b_hat.ok_or_else(|| Error::Prereq("C_B unavailable".into()))?;
    let eps = 1.0 / (c_a * c_b);
    let tau1 = report.tau1_hat.ok_or_else(|| Error::Prereq("τ₁ unavailable".into()))?;
    // K from the halving bound: h⁻¹(τ/2) ≤ 2(2·C_A·C_B)^(1/ε)·h⁻¹(τ)
    let bound = 2.0 * (2.0 * c_a * c_b).powf(1.0 / eps);
    let h_min = *table.h.last().unwrap();
    let tau_lo = (2.0 * h_min).max(tau1 * 1e-12);
    let mut worst: f64 = 1.0;
    let mut sampled = 0usize;
    let n = 40;
    for k in 0..=n {
        let tau = (tau_lo.ln() + (tau1.ln() - tau_lo.ln()) * k as f64 / n as f64).exp();
        let (Some(a), Some(b)) = (table.inverse(tau), table.inverse(tau / 2.0)) else {
            continue;
        };
        sampled += 1;
        if !(a.value <= b.value * (1.0 + 1e-12)) {
            worst = f64::INFINITY;
        }
        worst = worst.max(b.value / a.value);
    }
    let holds = worst.is_finite() && worst <= bound;
    Ok((table, HInverseCheck { sampled, worst_ratio: worst, bound, holds }))
}
