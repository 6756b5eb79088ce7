//! Numerical verification of the geometric behavior of the sphericalized
//! space: curve functionals and uniformity estimation, refutation
//! certificates for inadmissible densities, two-sided comparison bounds,
//! and doubling sweeps for μ_ρ.
//!
//! Estimators and certificates are deliberately paired: the uniformity
//! estimator produces an upper value (min over candidate curves of the
//! functional, max over pairs), while the certificates produce lower bounds
//! valid for *any* curve. The preservation results predict the first stays
//! bounded; the sharpness counterexamples predict the second diverges.
//! Neither side alone is numerically decidable.

pub mod brackets;
pub mod certificates;
pub mod curves;
pub mod doubling;
pub mod uniformity;

pub use brackets::{verify_bracket_bounds, BracketChecks};
pub use certificates::{
    certificate_a_radii, certificate_b_radii, certificate_fails_a, certificate_fails_b,
    refute_ladder, CertificateA, CertificateB,
};
pub use curves::{boundary_rho_field, BoundaryRhoField, CurveSample};
pub use doubling::{
    doubling_verdict, trend_strictly_increasing, verify_doubling_rho, DoublingRhoOutcome,
};
pub use uniformity::{
    estimate_uniformity, stratified_pairs, uniformity_functional, witness_curve, PairEstimate,
    UniformityOutcome,
};

use crate::space::halfplane::ANISOTROPY_8;
use crate::sphere::SphereView;

/// Combined discretization tolerance: a bound is only "violated" when the
/// worst ratio exceeds the allowed constant by more than this factor.
pub fn violation_tolerance(view: &SphereView) -> f64 {
    ANISOTROPY_8 * (1.0 + 5.0 * view.space.mesh_rel)
}
