//! Primal checks on outcome tables and dual certificates of optimality.

mod checks;
mod dual;

pub use checks::{
    check_bic, check_feasibility, check_ir, check_mechanism, expected_revenue, DualShape, Shape,
    VerificationReport, Violation, DEFAULT_TOL,
};
pub use dual::{
    build_dual_certificate, build_dual_certificate_multi, build_dual_certificate_single,
    check_dual_feasibility, classify_dual_shape, duality_gap, gamma_fn, pi_fn, DualCertificate,
    DualLoop, GAP_TOL,
};
