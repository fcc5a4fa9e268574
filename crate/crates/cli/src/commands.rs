//! The subcommands. Each returns an [`Outcome`] holding its exit code, a JSON
//! report and a short human-readable summary.

use std::path::Path;

use riskauction_core::mechanisms::A1Report;
use riskauction_core::verify::{expected_revenue, GAP_TOL};
use riskauction_core::{
    build_dual_certificate, check_assumption_A1, check_dual_feasibility, check_mechanism, ironed_virtual_values,
    loser_pay_auction, menu_mechanism_revenue, menu_utility, optimal_posted_price, optimal_revenue_oracle, Error,
    Instance, Mechanism, MenuOption, Utility, VerificationReport,
};
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::files::{read_instance, read_mechanism, write_json};
use crate::simulate::simulate;

/// Relative agreement required between the LP oracle and a closed form.
pub const ORACLE_TOL: f64 = 1e-7;
/// Monte Carlo estimates must land within this many standard errors.
pub const SIMULATION_SE: f64 = 4.0;

pub const EXIT_OK: u8 = 0;
pub const EXIT_INPUT: u8 = 1;
pub const EXIT_ASSUMPTION: u8 = 2;
pub const EXIT_FAILED: u8 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Core(Error::AssumptionA1 { .. }) => EXIT_ASSUMPTION,
            CliError::Core(Error::Solver(_) | Error::Invariant(_)) => EXIT_FAILED,
            CliError::Core(_) => EXIT_INPUT,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub code: u8,
    pub report: Value,
    pub summary: Vec<String>,
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("reports serialize")
}

fn write_report(out: Option<&Path>, outcome: &Outcome) -> Result<(), CliError> {
    match out {
        Some(path) => write_json(path, &outcome.report),
        None => Ok(()),
    }
}

#[derive(Debug, Serialize)]
struct SolveReport {
    command: &'static str,
    mechanism: Option<Mechanism>,
    revenue: Option<f64>,
    reserve_index: Option<usize>,
    regular: Option<bool>,
    ironed_intervals: Option<Vec<(usize, usize)>>,
    assumption_a1: Option<A1Report>,
}

/// Optimal mechanism in closed form: the randomized posted price for one
/// buyer, the loser-pay auction for several. `out` receives the mechanism.
pub fn solve(instance: &Path, out: Option<&Path>) -> Result<Outcome, CliError> {
    let inst = read_instance(instance)?;
    let ironing = match inst.utility() {
        Utility::Quadratic { .. } => None,
        _ => Some(ironed_virtual_values(&inst)?),
    };
    let mut report = SolveReport {
        command: "solve",
        mechanism: None,
        revenue: None,
        reserve_index: ironing.as_ref().and_then(|(_, iv)| iv.reserve_index),
        regular: ironing.as_ref().map(|(vv, _)| vv.regular),
        ironed_intervals: ironing.as_ref().map(|(_, iv)| iv.intervals.clone()),
        assumption_a1: None,
    };
    let mechanism: Mechanism = if inst.n() == 1 {
        optimal_posted_price(&inst)?.into()
    } else {
        if inst.utility().alpha().is_none() {
            return Err(Error::UnsupportedUtility {
                kind: inst.utility().kind_name(),
                operation: "the multi-buyer solver",
            }
            .into());
        }
        let a1 = check_assumption_A1(&inst)?;
        if let Some(e) = a1.first_failure() {
            let summary = vec![format!(
                "assumption A1 fails at v = {}: {} is not below {}",
                e.value, e.lhs, e.rhs
            )];
            report.assumption_a1 = Some(a1);
            return Ok(Outcome { code: EXIT_ASSUMPTION, report: to_value(&report), summary });
        }
        report.assumption_a1 = Some(a1);
        loser_pay_auction(&inst)?.into()
    };
    if let Some(path) = out {
        write_json(path, &mechanism)?;
    }
    let revenue = mechanism.claimed_revenue().expect("closed forms record revenue");
    let mut summary = vec![match &mechanism {
        Mechanism::PostedPrice(m) => format!(
            "posted price: v* = {} (index {}), p_high = {:.6}, revenue = {:.6}",
            m.v_star, m.v_star_index, m.p_high, revenue
        ),
        _ => format!("loser-pay auction for n = {}: revenue = {:.6}", inst.n(), revenue),
    }];
    if let Some((vv, iv)) = &ironing {
        summary.push(format!(
            "regular = {}, reserve index = {}, ironed intervals = {:?}",
            vv.regular,
            iv.reserve_index.map_or("none".to_string(), |r| r.to_string()),
            iv.intervals
        ));
    }
    report.revenue = Some(revenue);
    report.mechanism = Some(mechanism);
    Ok(Outcome { code: EXIT_OK, report: to_value(&report), summary })
}

#[derive(Debug, Serialize)]
struct VerifyReport {
    command: &'static str,
    revenue: f64,
    checks: VerificationReport,
    /// Where the upper bound on revenue came from.
    bound_source: Option<&'static str>,
    certificate_objective: Option<f64>,
    gap: Option<f64>,
    passed: bool,
    note: Option<String>,
}

/// Checks a mechanism against the instance and measures its distance to the
/// optimum. The bound is the dual certificate when one exists (exponential or
/// linear utility, and A1 for several buyers), else the LP optimum.
pub fn verify(instance: &Path, mechanism: &Path, tolerance: f64, out: Option<&Path>) -> Result<Outcome, CliError> {
    let inst = read_instance(instance)?;
    let mech = read_mechanism(mechanism)?;
    let direct = mech.to_direct(&inst)?;
    let mut checks = check_mechanism(&direct, &inst, tolerance)?;
    let revenue = match checks.revenue {
        Some(r) => r,
        None => expected_revenue(&direct, &inst)?,
    };
    let mut note = None;
    let bound = match build_dual_certificate(&inst) {
        Ok(cert) => {
            checks = checks.merge(check_dual_feasibility(&cert, &inst, tolerance)?);
            Some(("certificate", cert.objective))
        }
        Err(Error::UnsupportedUtility { .. } | Error::AssumptionA1 { .. }) => match optimal_revenue_oracle(&inst) {
            Ok(o) => Some(("lp_oracle", o.revenue)),
            Err(e @ Error::SizeGuard { .. }) => {
                note = Some(format!("no optimality bound: {e}"));
                None
            }
            Err(e) => return Err(e.into()),
        },
        Err(e) => return Err(e.into()),
    };
    let gap = bound.map(|(_, b)| b - revenue);
    let passed = checks.all_ok() && gap.is_some_and(|g| g.abs() <= GAP_TOL);
    let mut summary = vec![
        format!("revenue = {revenue:.10}"),
        format!(
            "BIC {}, IR {}, feasibility {}, worst violation {:.3e}",
            flag(checks.bic_ok),
            flag(checks.ir_ok),
            flag(checks.feasible_ok),
            checks.worst_violation
        ),
    ];
    match (bound, gap) {
        (Some((source, b)), Some(g)) => {
            if source == "certificate" {
                summary.push(format!("dual certificate {}", flag(checks.dual_ok)));
            }
            summary.push(format!("bound ({source}) = {b:.10}, gap = {g:.3e}"));
        }
        _ => summary.extend(note.clone()),
    }
    summary.push(if passed { "verified".into() } else { "NOT verified".into() });
    let report = VerifyReport {
        command: "verify",
        revenue,
        checks,
        bound_source: bound.map(|(s, _)| s),
        certificate_objective: bound.map(|(_, b)| b),
        gap,
        passed,
        note,
    };
    let outcome = Outcome { code: if passed { EXIT_OK } else { EXIT_FAILED }, report: to_value(&report), summary };
    write_report(out, &outcome)?;
    Ok(outcome)
}

fn flag(f: Option<bool>) -> &'static str {
    match f {
        Some(true) => "ok",
        Some(false) => "FAILED",
        None => "not run",
    }
}

/// Closed-form revenue for the instance and whether theory claims it is
/// optimal over all mechanisms.
fn closed_form(inst: &Instance) -> Result<Option<(&'static str, f64, bool)>, CliError> {
    if inst.n() == 1 {
        let m = optimal_posted_price(inst)?;
        let optimal = !matches!(inst.utility(), Utility::Quadratic { .. });
        return Ok(Some(("posted_price", m.revenue, optimal)));
    }
    if inst.utility().alpha().is_none() || !check_assumption_A1(inst)?.pass {
        return Ok(None);
    }
    Ok(Some(("loser_pay", loser_pay_auction(inst)?.revenue, true)))
}

/// Optimal revenue by linear programming, compared with the closed form.
pub fn oracle(instance: &Path, out: Option<&Path>) -> Result<Outcome, CliError> {
    let inst = read_instance(instance)?;
    let res = optimal_revenue_oracle(&inst)?;
    let cf = closed_form(&inst)?;
    let matches = cf.map(|(_, r, _)| (res.revenue - r).abs() <= ORACLE_TOL * r.abs().max(1.0));
    let claimed = cf.is_some_and(|(_, _, optimal)| optimal);
    let code = if claimed && matches == Some(false) { EXIT_FAILED } else { EXIT_OK };
    let mut summary = vec![format!("LP optimum = {:.10} ({} pivots)", res.revenue, res.iterations)];
    match cf {
        Some((name, r, optimal)) => summary.push(format!(
            "{name} revenue = {r:.10}, {} within {ORACLE_TOL:e}{}",
            if matches == Some(true) { "matches" } else { "does NOT match" },
            if optimal { "" } else { " (not claimed optimal for this utility)" }
        )),
        None => summary.push("no closed form applies to this instance".into()),
    }
    let report = json!({
        "command": "oracle",
        "revenue": res.revenue,
        "iterations": res.iterations,
        "closed_form": cf.map(|(name, r, optimal)| json!({"mechanism": name, "revenue": r, "claimed_optimal": optimal})),
        "matches": matches,
    });
    let outcome = Outcome { code, report, summary };
    write_report(out, &outcome)?;
    Ok(outcome)
}

/// Virtual values (single- or multi-buyer by `n`) and their ironing.
pub fn iron(instance: &Path, out: Option<&Path>) -> Result<Outcome, CliError> {
    let inst = read_instance(instance)?;
    let (vv, iv) = ironed_virtual_values(&inst)?;
    let summary = vec![
        format!("{:?} virtual values: {:?}", vv.kind, vv.phi),
        format!("ironed: {:?}", iv.phi_ironed),
        format!(
            "regular = {}, intervals = {:?}, reserve index = {}",
            vv.regular,
            iv.intervals,
            iv.reserve_index.map_or("none".to_string(), |r| r.to_string())
        ),
    ];
    let report = json!({
        "command": "iron",
        "kind": vv.kind,
        "phi": vv.phi,
        "regular": vv.regular,
        "phi_ironed": iv.phi_ironed,
        "intervals": iv.intervals,
        "reserve_index": iv.reserve_index,
    });
    let outcome = Outcome { code: EXIT_OK, report, summary };
    write_report(out, &outcome)?;
    Ok(outcome)
}

/// Ten equally likely values 0, 0.1, ..., 0.9, quadratic utility with
/// `L = 1`, payments {0, 1}.
pub fn counterexample_instance() -> Instance {
    let values: Vec<f64> = (0..10).map(|i| i as f64 / 10.0).collect();
    Instance::new(values, vec![0.1; 10], vec![0.0, 1.0], 1, Utility::quadratic(1.0, 1.0))
        .expect("fixed instance is valid")
}

pub fn counterexample_menu() -> Vec<MenuOption> {
    vec![
        MenuOption { x: 1.0 / 1.96, w1: 0.0, w0: 1.0 },
        MenuOption { x: 1.0, w1: 1536.0 / 2695.0, w0: 0.0 },
    ]
}

/// Quadratic-utility instance where a two-option menu beats every
/// randomized take-it-or-leave-it price.
pub fn counterexample(out: Option<&Path>) -> Result<Outcome, CliError> {
    let inst = counterexample_instance();
    let tioli = optimal_posted_price(&inst)?;
    let options = counterexample_menu();
    let menu = menu_mechanism_revenue(&options, &inst)?;
    let (u, z) = (inst.utility(), inst.z_max());
    // The two options leave v = 0.6 indifferent.
    let difference_at_0_6 = menu_utility(&options[1], u, z, 0.6) - menu_utility(&options[0], u, z, 0.6);
    let gap = menu.revenue - tioli.revenue;
    let choices: Vec<Value> = inst
        .values()
        .iter()
        .zip(&menu.choice)
        .map(|(v, c)| json!({"value": v, "option": c}))
        .collect();
    let mut summary = vec![
        format!(
            "take-it-or-leave-it: v* = {}, p_high = {:.4}, revenue = {:.4}",
            tioli.v_star, tioli.p_high, tioli.revenue
        ),
        format!("two-option menu revenue = {:.4}", menu.revenue),
    ];
    for (v, c) in inst.values().iter().zip(&menu.choice) {
        summary.push(format!(
            "  v = {v:.1}: {}",
            c.map_or("no purchase".to_string(), |i| format!("option {}", i + 1))
        ));
    }
    summary.push(format!("utility difference of the options at v = 0.6: {difference_at_0_6:.2e}"));
    summary.push(format!("menu - TIOLI = {gap:+.4}"));
    let report = json!({
        "command": "counterexample",
        "tioli": tioli,
        "menu": menu,
        "choices": choices,
        "difference_at_0_6": difference_at_0_6,
        "gap": gap,
        "menu_beats_tioli": gap > 0.0,
    });
    let outcome = Outcome { code: if gap > 0.0 { EXIT_OK } else { EXIT_FAILED }, report, summary };
    write_report(out, &outcome)?;
    Ok(outcome)
}

/// Monte Carlo revenue of a mechanism, compared with its exact expectation.
pub fn simulate_cmd(
    instance: &Path,
    mechanism: &Path,
    samples: u64,
    seed: u64,
    out: Option<&Path>,
) -> Result<Outcome, CliError> {
    if samples == 0 {
        return Err(CliError::Input("--samples must be at least 1".into()));
    }
    let inst = read_instance(instance)?;
    let mech = read_mechanism(mechanism)?;
    let analytic = expected_revenue(&mech.to_direct(&inst)?, &inst)?;
    let est = simulate(&inst, &mech, samples, seed)?;
    let diff = est.mean - analytic;
    let z_score = if est.std_error > 0.0 {
        diff / est.std_error
    } else if diff.abs() <= 1e-12 * analytic.abs().max(1.0) {
        0.0
    } else {
        f64::INFINITY
    };
    let within = z_score.abs() <= SIMULATION_SE;
    let summary = vec![
        format!("{} samples, seed {}: mean revenue = {:.6} ± {:.6}", est.samples, est.seed, est.mean, est.std_error),
        format!("analytic revenue = {analytic:.6}, z = {z_score:.2}"),
    ];
    let report = json!({
        "command": "simulate",
        "samples": est.samples,
        "seed": est.seed,
        "mean": est.mean,
        "std_error": est.std_error,
        "analytic": analytic,
        "z_score": z_score,
        "within_tolerance": within,
    });
    let outcome = Outcome { code: if within { EXIT_OK } else { EXIT_FAILED }, report, summary };
    write_report(out, &outcome)?;
    Ok(outcome)
}
