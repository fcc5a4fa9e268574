//! Dual certificates for the optimal-mechanism linear program.
//!
//! For buyer `i` and value index `k` the two dual constraint families are
//!
//! ```text
//! Gamma_{i,k}(z) = f_k z + sum_k' (l[k][k'] u(v_k - z) - l[k'][k] u(v_k' - z)) + mu_k u(v_k - z)
//! Pi_{i,k}(z)    = f_k z + sum_k' (l[k][k'] - l[k'][k]) u(-z)                  + mu_k u(-z)
//! ```
//!
//! A single buyer needs `Gamma_k(z_j) <= nu_k` and `Pi_k(z_j) <= nu_k`; with
//! several buyers every profile `p` needs
//! `f(p_{-i}) Gamma_{i,p_i}(z_j) <= nu_{i,p} + gamma_p` and
//! `f(p_{-i}) Pi_{i,p_i}(z_j) <= nu_{i,p}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::verify::checks::{DualShape, Shape, VerificationReport};
use crate::virtual_value::{
    iron, virtual_values_multi, virtual_values_single, IronedVirtualValues, VirtualKind,
    VirtualValues,
};

/// Largest `|gap|` at which a feasible certificate proves optimality.
pub const GAP_TOL: f64 = 1e-8;

/// A pair of extra `lambda` entries between adjacent values in an ironed
/// interval: `upper_amount` on `lambda[upper][lower]` and `lower_amount` on
/// `lambda[lower][upper]`. `shift` is how much it raises
/// `Gamma_upper(0)` and lowers `Gamma_lower(0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualLoop {
    pub upper: usize,
    pub lower: usize,
    pub upper_amount: f64,
    pub lower_amount: f64,
    pub shift: f64,
}

/// Dual variables for one instance. Single-buyer certificates store one
/// buyer; `nu[0][k]` is then indexed by value and `gamma` is empty. Multi-buyer
/// certificates index `nu[i][p]` and `gamma[p]` by profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualCertificate {
    pub kind: VirtualKind,
    /// `lambda[i][k][k']`, weight on "value `k` does not gain by reporting `k'`".
    pub lambda: Vec<Vec<Vec<f64>>>,
    pub mu: Vec<Vec<f64>>,
    pub nu: Vec<Vec<f64>>,
    pub gamma: Vec<f64>,
    pub objective: f64,
    pub loops: Vec<DualLoop>,
}

/// `Gamma_{i,k}(z)` without the `f(p_{-i})` weight.
pub fn gamma_fn(cert: &DualCertificate, inst: &Instance, buyer: usize, k: usize, z: f64) -> f64 {
    let u = inst.utility();
    let v = inst.values();
    let lam = &cert.lambda[buyer];
    let mut total = inst.pmf()[k] * z + cert.mu[buyer][k] * u.at(v[k] - z);
    for k2 in 0..inst.k() {
        if lam[k][k2] != 0.0 {
            total += lam[k][k2] * u.at(v[k] - z);
        }
        if lam[k2][k] != 0.0 {
            total -= lam[k2][k] * u.at(v[k2] - z);
        }
    }
    total
}

/// `Pi_{i,k}(z)` without the `f(p_{-i})` weight.
pub fn pi_fn(cert: &DualCertificate, inst: &Instance, buyer: usize, k: usize, z: f64) -> f64 {
    let lam = &cert.lambda[buyer];
    let net: f64 = (0..inst.k()).map(|k2| lam[k][k2] - lam[k2][k]).sum::<f64>() + cert.mu[buyer][k];
    inst.pmf()[k] * z + net * inst.utility().at(-z)
}

/// Whether `Gamma` and `Pi` are increasing or strongly convex in `z` at
/// `(buyer, k)`: writing `Gamma = f z + beta (B e^{-alpha z} - A)` and
/// `Pi = f z + beta A (e^{-alpha z} - 1)`, positive `B` (resp. `A`) means
/// strongly convex.
pub fn classify_dual_shape(cert: &DualCertificate, inst: &Instance, buyer: usize, k: usize) -> Result<DualShape> {
    let (alpha, _) = inst.require_exponential("dual shape classification")?;
    let v = inst.values();
    let lam = &cert.lambda[buyer];
    let mu = cert.mu[buyer][k];
    let ek = (alpha * v[k]).exp();
    let mut a = mu;
    let mut b = mu * ek;
    for k2 in 0..inst.k() {
        a += lam[k][k2] - lam[k2][k];
        b += lam[k][k2] * ek - lam[k2][k] * (alpha * v[k2]).exp();
    }
    let shape = |x: f64| {
        if x > 0.0 {
            Shape::StronglyConvex
        } else {
            Shape::Increasing
        }
    };
    Ok(DualShape {
        buyer,
        k,
        a,
        b,
        gamma: shape(b),
        pi: shape(a),
    })
}

/// Forward pass over each ironed interval. `deltas(lower, upper, t)`
/// returns the loop entries that move `t` of `Gamma(0)` from `lower` to
/// `upper`.
fn add_loops(
    lambda: &mut [Vec<f64>],
    vv: &VirtualValues,
    ironed: &IronedVirtualValues,
    inst: &Instance,
    deltas: impl Fn(usize, usize, f64) -> (f64, f64),
) -> Vec<DualLoop> {
    let f = inst.pmf();
    let z = inst.z_max();
    let mut loops = Vec::new();
    for &(a, b) in &ironed.intervals {
        let mut surplus = 0.0;
        for lower in a..b {
            surplus += f[lower] * (vv.phi[lower] - ironed.phi_ironed[lower]) * z;
            if surplus <= 0.0 {
                continue;
            }
            let upper = lower + 1;
            let (upper_amount, lower_amount) = deltas(lower, upper, surplus);
            lambda[upper][lower] += upper_amount;
            lambda[lower][upper] += lower_amount;
            loops.push(DualLoop {
                upper,
                lower,
                upper_amount,
                lower_amount,
                shift: surplus,
            });
        }
    }
    loops
}

/// Certificate for the randomized take-it-or-leave-it price.
///
/// `lambda[k][k-1] = Pr[t >= v_k] z_M / (u(v_k) - u(v_k - z_M))`. The lowest
/// value has no downward neighbour, so the same expression with the outside
/// option in place of `v_{k-1}` goes on its IR multiplier `mu[0]`. Loops
/// then flatten `Gamma_k(0)` to `f_k phi~(k) z_M` on ironed intervals and
/// `nu_k = max(0, f_k phi~(k) z_M)`.
pub fn build_dual_certificate_single(inst: &Instance) -> Result<DualCertificate> {
    if inst.n() != 1 {
        return Err(Error::Usage(format!(
            "single-buyer certificate needs n = 1, got n = {}",
            inst.n()
        )));
    }
    let (alpha, beta) = inst.require_exponential("dual certificates")?;
    let vv = virtual_values_single(inst)?;
    let ironed = iron(&vv, inst)?;
    let k_count = inst.k();
    let (u, z, v) = (inst.utility(), inst.z_max(), inst.values());

    let mut lambda = vec![vec![0.0; k_count]; k_count];
    let mut mu = vec![0.0; k_count];
    mu[0] = z / u.spread(0.0, z);
    for k in 1..k_count {
        lambda[k][k - 1] = inst.tail_mass(k) * z / u.spread(v[k], z);
    }
    // loop entries t / (beta (e^{alpha dv} - 1)) and t / (beta (1 - e^{-alpha dv}))
    let loops = add_loops(&mut lambda, &vv, &ironed, inst, |lower, upper, t| {
        let dv = alpha * (v[upper] - v[lower]);
        (t / (beta * dv.exp_m1()), t / (beta * -(-dv).exp_m1()))
    });

    let nu: Vec<f64> = (0..k_count)
        .map(|k| (inst.pmf()[k] * ironed.phi_ironed[k] * z).max(0.0))
        .collect();
    let objective = nu.iter().sum();
    Ok(DualCertificate {
        kind: VirtualKind::Single,
        lambda: vec![lambda],
        mu: vec![mu],
        nu: vec![nu],
        gamma: Vec::new(),
        objective,
        loops,
    })
}

/// Certificate for the loser-pay auction: per buyer
/// `lambda[k][k-1] = Pr[t >= v_k] z_M e^{alpha v_k} / (u(v_k) - u(v_k - z_M))`,
/// the lowest value's share on `mu[0]`, loops on ironed intervals, `nu = 0`
/// and `gamma_p = max_i max(0, f(p) Phi~(p_i) z_M)`.
pub fn build_dual_certificate_multi(inst: &Instance) -> Result<DualCertificate> {
    crate::mechanisms::check_assumption_A1(inst)?.into_result()?;
    let (alpha, beta) = inst.require_exponential("dual certificates")?;
    let vv = virtual_values_multi(inst)?;
    let ironed = iron(&vv, inst)?;
    let k_count = inst.k();
    let (z, v) = (inst.z_max(), inst.values());
    // e^{alpha v} / (u(v) - u(v - z_M)) = 1 / (beta (1 - e^{-alpha z_M}))
    let scale = z / (beta * -(-alpha * z).exp_m1());

    let mut lambda = vec![vec![0.0; k_count]; k_count];
    let mut mu = vec![0.0; k_count];
    mu[0] = scale;
    for k in 1..k_count {
        lambda[k][k - 1] = inst.tail_mass(k) * scale;
    }
    let loops = add_loops(&mut lambda, &vv, &ironed, inst, |lower, upper, t| {
        let d = t / (beta * (alpha * v[lower]).exp() * (alpha * (v[upper] - v[lower])).exp_m1());
        (d, d)
    });

    let profiles = inst.profiles();
    let mut profile = vec![0; inst.n()];
    let gamma: Vec<f64> = (0..profiles.len())
        .map(|p| {
            profiles.decode(p, &mut profile);
            let top = profile
                .iter()
                .map(|&k| ironed.phi_ironed[k])
                .fold(0.0f64, f64::max);
            inst.profile_prob(&profile) * top * z
        })
        .collect();
    let objective = gamma.iter().sum();
    Ok(DualCertificate {
        kind: VirtualKind::Multi,
        lambda: vec![lambda; inst.n()],
        mu: vec![mu; inst.n()],
        nu: vec![vec![0.0; profiles.len()]; inst.n()],
        gamma,
        objective,
        loops,
    })
}

/// Single-buyer certificate for `n = 1`, multi-buyer otherwise.
pub fn build_dual_certificate(inst: &Instance) -> Result<DualCertificate> {
    if inst.n() == 1 {
        build_dual_certificate_single(inst)
    } else {
        build_dual_certificate_multi(inst)
    }
}

fn check_dims(cert: &DualCertificate, inst: &Instance) -> Result<()> {
    let (n, k, p) = (inst.n(), inst.k(), inst.num_profiles());
    let single = cert.kind == VirtualKind::Single;
    let buyers = if single { 1 } else { n };
    let nu_len = if single { k } else { p };
    let ok = (!single || n == 1)
        && cert.lambda.len() == buyers
        && cert.lambda.iter().all(|l| l.len() == k && l.iter().all(|r| r.len() == k))
        && cert.mu.len() == buyers
        && cert.mu.iter().all(|m| m.len() == k)
        && cert.nu.len() == buyers
        && cert.nu.iter().all(|x| x.len() == nu_len)
        && cert.gamma.len() == if single { 0 } else { p };
    if ok {
        Ok(())
    } else {
        Err(Error::Shape(format!(
            "{:?} certificate does not fit an instance with n = {n}, K = {k}",
            cert.kind
        )))
    }
}

/// Evaluates every dual constraint at every grid payment, sign constraints
/// on `lambda`, `mu` and `gamma`, and the stated objective.
pub fn check_dual_feasibility(cert: &DualCertificate, inst: &Instance, tol: f64) -> Result<VerificationReport> {
    check_dims(cert, inst)?;
    let mut report = VerificationReport::new(tol);
    let mut ok = true;

    for (i, lam) in cert.lambda.iter().enumerate() {
        for (k, row) in lam.iter().enumerate() {
            for (k2, &l) in row.iter().enumerate() {
                ok &= report.record(-l, || format!("lambda[{i}][{k}][{k2}] = {l} < 0"));
            }
            let m = cert.mu[i][k];
            ok &= report.record(-m, || format!("mu[{i}][{k}] = {m} < 0"));
        }
    }
    for (p, &g) in cert.gamma.iter().enumerate() {
        ok &= report.record(-g, || format!("gamma[{p}] = {g} < 0"));
    }

    let buyers = cert.lambda.len();
    let payments = inst.payments();
    // gam[i][k][j], pi[i][k][j]
    let table = |func: fn(&DualCertificate, &Instance, usize, usize, f64) -> f64| -> Vec<Vec<Vec<f64>>> {
        (0..buyers)
            .map(|i| {
                (0..inst.k())
                    .map(|k| payments.iter().map(|&z| func(cert, inst, i, k, z)).collect())
                    .collect()
            })
            .collect()
    };
    let gam = table(gamma_fn);
    let pi = table(pi_fn);

    match cert.kind {
        VirtualKind::Single => {
            for k in 0..inst.k() {
                let nu = cert.nu[0][k];
                for j in 0..inst.m() {
                    ok &= report.record(gam[0][k][j] - nu, || format!("Gamma_{k}(z_{j}) > nu_{k}"));
                    ok &= report.record(pi[0][k][j] - nu, || format!("Pi_{k}(z_{j}) > nu_{k}"));
                }
            }
        }
        VirtualKind::Multi => {
            for (p, profile) in inst.profiles().iter() {
                for i in 0..buyers {
                    let w = inst.others_prob(&profile, i);
                    let k = profile[i];
                    let (nu, g) = (cert.nu[i][p], cert.gamma[p]);
                    for j in 0..inst.m() {
                        ok &= report.record(w * gam[i][k][j] - nu - g, || {
                            format!("buyer {i}, profile {p}: Gamma(z_{j}) exceeds nu + gamma")
                        });
                        ok &= report.record(w * pi[i][k][j] - nu, || {
                            format!("buyer {i}, profile {p}: Pi(z_{j}) exceeds nu")
                        });
                    }
                }
            }
        }
    }

    let stated: f64 = cert.nu.iter().flatten().sum::<f64>() + cert.gamma.iter().sum::<f64>();
    let mismatch = (stated - cert.objective).abs() / stated.abs().max(1.0);
    ok &= report.record(mismatch, || {
        format!("objective {} differs from the dual sum {stated}", cert.objective)
    });

    if inst.utility().alpha().is_some() {
        for i in 0..buyers {
            for k in 0..inst.k() {
                report.shapes.push(classify_dual_shape(cert, inst, i, k)?);
            }
        }
    }
    report.dual_ok = Some(ok);
    Ok(report)
}

/// Dual objective minus primal revenue; never negative for a feasible
/// certificate.
pub fn duality_gap(cert: &DualCertificate, mech_revenue: f64) -> f64 {
    cert.objective - mech_revenue
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::{loser_pay_auction, optimal_posted_price, posted_price_revenue};
    use crate::utility::Utility;
    use crate::verify::checks::DEFAULT_TOL;
    use std::f64::consts::LN_2;

    fn two_point(n: usize, alpha: f64, z: f64) -> Instance {
        Instance::new(vec![0.0, 1.0], vec![0.5, 0.5], vec![0.0, z], n, Utility::exponential(alpha, 1.0)).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
    }

    #[test]
    fn two_point_single_certificate() {
        let inst = two_point(1, LN_2, 2.0);
        let cert = build_dual_certificate_single(&inst).unwrap();
        assert!(close(cert.lambda[0][1][0], 2.0 / 3.0, 1e-15));
        assert!(close(cert.nu[0][0], 0.0, 0.0) && close(cert.nu[0][1], 2.0 / 3.0, 1e-15));
        assert!(close(cert.objective, 2.0 / 3.0, 1e-15));
        let report = check_dual_feasibility(&cert, &inst, DEFAULT_TOL).unwrap();
        assert_eq!(report.dual_ok, Some(true), "{report:?}");
        let pp = optimal_posted_price(&inst).unwrap();
        assert!(duality_gap(&cert, pp.revenue).abs() < 1e-12);
        assert!(cert.loops.is_empty());

        let shape = classify_dual_shape(&cert, &inst, 0, 1).unwrap();
        assert!(shape.b > 0.0);
        assert_eq!(shape.gamma, Shape::StronglyConvex);
    }

    #[test]
    fn regular_binding_identities() {
        let inst = Instance::new(
            vec![0.0, 0.5, 1.2, 2.0],
            vec![0.1, 0.2, 0.3, 0.4],
            vec![0.0, 1.0, 3.0],
            1,
            Utility::exponential(0.4, 2.5),
        )
        .unwrap();
        let vv = virtual_values_single(&inst).unwrap();
        assert!(vv.regular);
        let cert = build_dual_certificate_single(&inst).unwrap();
        let (z, e) = (inst.z_max(), (-0.4 * inst.z_max()).exp());
        for k in 0..inst.k() {
            let target = inst.pmf()[k] * vv.phi[k] * z;
            assert!(close(gamma_fn(&cert, &inst, 0, k, 0.0), target, 1e-12));
            assert!(close(gamma_fn(&cert, &inst, 0, k, z), target, 1e-12));
            assert!(pi_fn(&cert, &inst, 0, k, 0.0).abs() < 1e-12);
            assert!(close(pi_fn(&cert, &inst, 0, k, z), (1.0 - e) * target, 1e-12));
        }
    }

    #[test]
    fn zero_certificate_is_increasing() {
        let inst = two_point(1, LN_2, 2.0);
        let mut cert = build_dual_certificate_single(&inst).unwrap();
        cert.lambda = vec![vec![vec![0.0; 2]; 2]];
        cert.mu = vec![vec![0.0; 2]];
        let shape = classify_dual_shape(&cert, &inst, 0, 1).unwrap();
        assert_eq!((shape.a, shape.b), (0.0, 0.0));
        assert_eq!((shape.gamma, shape.pi), (Shape::Increasing, Shape::Increasing));
    }

    #[test]
    fn zeroed_nu_is_infeasible() {
        let inst = two_point(1, LN_2, 2.0);
        let mut cert = build_dual_certificate_single(&inst).unwrap();
        cert.nu[0] = vec![0.0, 0.0];
        cert.objective = 0.0;
        let report = check_dual_feasibility(&cert, &inst, DEFAULT_TOL).unwrap();
        assert_eq!(report.dual_ok, Some(false));
        assert!(report.violations.iter().any(|v| v.constraint.starts_with("Gamma_1(z_0)")));
    }

    #[test]
    fn suboptimal_price_leaves_gap() {
        let inst = two_point(1, 0.3, 2.0).with_extreme_payments();
        let cert = build_dual_certificate_single(&inst).unwrap();
        let rev = posted_price_revenue(&inst, 0.0).unwrap();
        assert!(duality_gap(&cert, rev) > 0.1);
    }

    #[test]
    fn linear_limit_loops_match_ironing() {
        let inst = Instance::new(vec![0.0, 1.0, 2.0], vec![0.3, 0.1, 0.6], vec![0.0, 3.0], 1, Utility::exponential(1e-6, 1.0)).unwrap();
        let vv = virtual_values_single(&inst).unwrap();
        let ironed = iron(&vv, &inst).unwrap();
        assert_eq!(ironed.intervals, vec![(0, 1)]);
        let cert = build_dual_certificate_single(&inst).unwrap();
        assert_eq!(cert.loops.len(), 1);
        for k in 0..3 {
            let target = inst.pmf()[k] * ironed.phi_ironed[k] * 3.0;
            assert!((gamma_fn(&cert, &inst, 0, k, 0.0) - target).abs() < 1e-6);
        }
        let report = check_dual_feasibility(&cert, &inst, DEFAULT_TOL).unwrap();
        assert_eq!(report.dual_ok, Some(true), "{report:?}");
    }

    #[test]
    fn two_buyer_multi_certificate() {
        let inst = two_point(2, 0.1, 100.0);
        let cert = build_dual_certificate_multi(&inst).unwrap();
        let lp = loser_pay_auction(&inst).unwrap();
        assert!(close(cert.objective, lp.revenue, 1e-12));
        let report = check_dual_feasibility(&cert, &inst, DEFAULT_TOL).unwrap();
        assert_eq!(report.dual_ok, Some(true), "{report:?}");
        assert!(duality_gap(&cert, lp.revenue).abs() < GAP_TOL);

        let vv = virtual_values_multi(&inst).unwrap();
        let e = (-10.0f64).exp();
        for (_, profile) in inst.profiles().iter() {
            for i in 0..2 {
                let k = profile[i];
                let w = inst.others_prob(&profile, i);
                let full = inst.profile_prob(&profile) * vv.phi[k] * 100.0;
                assert!(close(w * gamma_fn(&cert, &inst, i, k, 100.0), full * e, 1e-9));
                assert!((w * pi_fn(&cert, &inst, i, k, 100.0)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn multi_rejects_a1_failure() {
        let inst = two_point(2, LN_2, 2.0);
        assert!(matches!(
            build_dual_certificate_multi(&inst),
            Err(Error::AssumptionA1 { .. })
        ));
        assert!(build_dual_certificate_single(&inst).is_err());
    }
}
