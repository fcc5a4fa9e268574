use serde::{Deserialize, Serialize};

use crate::direct::DirectMechanism;
use crate::error::Result;
use crate::instance::Instance;

/// Default slack on every primal and dual constraint.
pub const DEFAULT_TOL: f64 = 1e-9;

/// At most this many individual violations are kept in a report.
const MAX_LISTED: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Increasing,
    StronglyConvex,
}

/// Curvature of the two dual constraint families at one (buyer, value).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualShape {
    pub buyer: usize,
    pub k: usize,
    pub a: f64,
    pub b: f64,
    pub gamma: Shape,
    pub pi: Shape,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub constraint: String,
    pub amount: f64,
}

/// Outcome of one or more checks. A flag is `None` when the corresponding
/// check was not run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub bic_ok: Option<bool>,
    pub ir_ok: Option<bool>,
    pub feasible_ok: Option<bool>,
    pub dual_ok: Option<bool>,
    /// Largest constraint violation seen, 0 if none.
    pub worst_violation: f64,
    pub tolerance: f64,
    pub revenue: Option<f64>,
    pub violation_count: usize,
    /// The first violations beyond tolerance.
    pub violations: Vec<Violation>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub shapes: Vec<DualShape>,
}

impl VerificationReport {
    pub fn new(tolerance: f64) -> Self {
        VerificationReport {
            bic_ok: None,
            ir_ok: None,
            feasible_ok: None,
            dual_ok: None,
            worst_violation: 0.0,
            tolerance,
            revenue: None,
            violation_count: 0,
            violations: Vec::new(),
            shapes: Vec::new(),
        }
    }

    /// Records `amount` by which a constraint is violated (negative means
    /// slack) and returns whether it is within tolerance.
    pub(crate) fn record(&mut self, amount: f64, describe: impl FnOnce() -> String) -> bool {
        let amount = if amount.is_nan() { f64::INFINITY } else { amount };
        if amount > self.worst_violation {
            self.worst_violation = amount;
        }
        let ok = amount <= self.tolerance;
        if !ok {
            self.violation_count += 1;
            if self.violations.len() < MAX_LISTED {
                self.violations.push(Violation {
                    constraint: describe(),
                    amount,
                });
            }
        }
        ok
    }

    /// True when every check that ran passed.
    pub fn all_ok(&self) -> bool {
        [self.bic_ok, self.ir_ok, self.feasible_ok, self.dual_ok]
            .iter()
            .all(|f| f.unwrap_or(true))
    }

    /// Combines two reports over the same mechanism.
    pub fn merge(mut self, other: VerificationReport) -> Self {
        let pick = |a: Option<bool>, b: Option<bool>| match (a, b) {
            (Some(x), Some(y)) => Some(x && y),
            (x, None) => x,
            (None, y) => y,
        };
        self.bic_ok = pick(self.bic_ok, other.bic_ok);
        self.ir_ok = pick(self.ir_ok, other.ir_ok);
        self.feasible_ok = pick(self.feasible_ok, other.feasible_ok);
        self.dual_ok = pick(self.dual_ok, other.dual_ok);
        self.worst_violation = self.worst_violation.max(other.worst_violation);
        self.tolerance = self.tolerance.max(other.tolerance);
        self.revenue = self.revenue.or(other.revenue);
        self.violation_count += other.violation_count;
        let room = MAX_LISTED.saturating_sub(self.violations.len());
        self.violations.extend(other.violations.into_iter().take(room));
        self.shapes.extend(other.shapes);
        self
    }
}

/// Truthful reporting beats every misreport for every buyer, up to `tol`.
pub fn check_bic(d: &DirectMechanism, inst: &Instance, tol: f64) -> Result<VerificationReport> {
    let interim = d.interim(inst)?;
    let mut report = VerificationReport::new(tol);
    let mut ok = true;
    for (i, b) in interim.iter().enumerate() {
        for (k, &v) in inst.values().iter().enumerate() {
            let truthful = b.utility(inst, k, v);
            for k2 in (0..inst.k()).filter(|&k2| k2 != k) {
                let gain = b.utility(inst, k2, v) - truthful;
                ok &= report.record(gain, || format!("bic buyer {i}: value {k} reporting {k2}"));
            }
        }
    }
    report.bic_ok = Some(ok);
    Ok(report)
}

/// Truthful expected utility is non-negative for every buyer and value.
pub fn check_ir(d: &DirectMechanism, inst: &Instance, tol: f64) -> Result<VerificationReport> {
    let interim = d.interim(inst)?;
    let mut report = VerificationReport::new(tol);
    let mut ok = true;
    for (i, b) in interim.iter().enumerate() {
        for (k, &v) in inst.values().iter().enumerate() {
            let util = b.utility(inst, k, v);
            ok &= report.record(-util, || format!("ir buyer {i}: value {k}"));
        }
    }
    report.ir_ok = Some(ok);
    Ok(report)
}

/// Entries are probabilities, each buyer's outcomes sum to one and at most
/// one item is sold, at every profile.
pub fn check_feasibility(d: &DirectMechanism, inst: &Instance, tol: f64) -> Result<VerificationReport> {
    d.check_shape(inst)?;
    let mut report = VerificationReport::new(tol);
    let mut ok = true;
    for p in 0..inst.num_profiles() {
        let mut sold = 0.0;
        for i in 0..inst.n() {
            let mut total = 0.0;
            for j in 0..inst.m() {
                for (name, y) in [("y0", d.y0[i][j][p]), ("y1", d.y1[i][j][p])] {
                    let out = (-y).max(y - 1.0);
                    ok &= report.record(out, || format!("{name}[{i}][{j}][{p}] = {y} outside [0, 1]"));
                    total += y;
                }
                sold += d.y1[i][j][p];
            }
            ok &= report.record((total - 1.0).abs(), || {
                format!("outcomes of buyer {i} at profile {p} sum to {total}")
            });
        }
        ok &= report.record(sold - 1.0, || format!("{sold} items allocated at profile {p}"));
    }
    report.feasible_ok = Some(ok);
    Ok(report)
}

/// `sum_i sum_k f(k) sum_j z_j (y0 + y1)`.
pub fn expected_revenue(d: &DirectMechanism, inst: &Instance) -> Result<f64> {
    d.check_shape(inst)?;
    let profiles = inst.profiles();
    let mut profile = vec![0; inst.n()];
    let mut total = 0.0;
    for p in 0..profiles.len() {
        profiles.decode(p, &mut profile);
        let prob = inst.profile_prob(&profile);
        let pay: f64 = (0..inst.n())
            .flat_map(|i| {
                inst.payments()
                    .iter()
                    .enumerate()
                    .map(move |(j, z)| z * (d.y0[i][j][p] + d.y1[i][j][p]))
            })
            .sum();
        total += prob * pay;
    }
    Ok(total)
}

/// BIC, IR and feasibility together, with the table's revenue.
pub fn check_mechanism(d: &DirectMechanism, inst: &Instance, tol: f64) -> Result<VerificationReport> {
    let mut report = check_bic(d, inst, tol)?
        .merge(check_ir(d, inst, tol)?)
        .merge(check_feasibility(d, inst, tol)?);
    report.revenue = Some(expected_revenue(d, inst)?);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::{loser_pay_auction, optimal_posted_price, Mechanism};
    use crate::utility::Utility;
    use std::f64::consts::LN_2;

    fn two_point(n: usize, alpha: f64, z: f64) -> Instance {
        Instance::new(vec![0.0, 1.0], vec![0.5, 0.5], vec![0.0, z], n, Utility::exponential(alpha, 1.0)).unwrap()
    }

    #[test]
    fn posted_price_table_passes() {
        let inst = two_point(1, LN_2, 2.0);
        let d = Mechanism::from(optimal_posted_price(&inst).unwrap()).to_direct(&inst).unwrap();
        let report = check_mechanism(&d, &inst, DEFAULT_TOL).unwrap();
        assert!(report.all_ok(), "{report:?}");
        assert!((report.revenue.unwrap() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn inflated_price_breaks_ir() {
        let inst = two_point(1, LN_2, 2.0);
        let mut pp = optimal_posted_price(&inst).unwrap();
        pp.p_high += 0.05;
        let d = Mechanism::from(pp).to_direct(&inst).unwrap();
        let ir = check_ir(&d, &inst, DEFAULT_TOL).unwrap();
        assert_eq!(ir.ir_ok, Some(false));
        assert!(ir.worst_violation > DEFAULT_TOL);
        assert_eq!(ir.violation_count, 1);
    }

    #[test]
    fn null_mechanism_passes_everything() {
        let inst = two_point(2, 0.1, 100.0);
        let d = DirectMechanism::null(&inst);
        let report = check_mechanism(&d, &inst, DEFAULT_TOL).unwrap();
        assert!(report.all_ok());
        assert_eq!(report.worst_violation, 0.0);
        assert_eq!(report.revenue, Some(0.0));
    }

    #[test]
    fn loser_pay_table_passes() {
        let inst = two_point(2, 0.1, 100.0);
        let lp = loser_pay_auction(&inst).unwrap();
        let d = Mechanism::from(lp.clone()).to_direct(&inst).unwrap();
        let report = check_mechanism(&d, &inst, DEFAULT_TOL).unwrap();
        assert!(report.all_ok(), "{report:?}");
        assert!((report.revenue.unwrap() - lp.revenue).abs() < 1e-12);
    }

    #[test]
    fn charging_everyone_fails_ir() {
        let inst = two_point(1, 0.5, 2.0);
        let mut d = DirectMechanism::zeros(&inst);
        for k in 0..2 {
            d.y0[0][1][k] = 1.0;
        }
        let report = check_mechanism(&d, &inst, DEFAULT_TOL).unwrap();
        assert_eq!(report.ir_ok, Some(false));
        assert_eq!(report.feasible_ok, Some(true));
        assert_eq!(report.revenue, Some(2.0));
    }

    #[test]
    fn overallocation_fails_feasibility() {
        let inst = two_point(2, 0.1, 100.0);
        let mut d = DirectMechanism::null(&inst);
        for i in 0..2 {
            d.y0[i][0][3] = 0.25;
            d.y1[i][0][3] = 0.75;
        }
        let report = check_feasibility(&d, &inst, DEFAULT_TOL).unwrap();
        assert_eq!(report.feasible_ok, Some(false));
        assert!((report.worst_violation - 0.5).abs() < 1e-15);
    }

    #[test]
    fn shape_errors_propagate() {
        let inst = two_point(2, 0.1, 100.0);
        let d = DirectMechanism::null(&inst.with_buyers(1).unwrap());
        assert!(check_bic(&d, &inst, DEFAULT_TOL).is_err());
        assert!(expected_revenue(&d, &inst).is_err());
    }
}
