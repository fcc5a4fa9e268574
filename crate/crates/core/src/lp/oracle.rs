use serde::{Deserialize, Serialize};

use crate::direct::DirectMechanism;
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::lp::model::{build_primal_lp, LPModel, Side};
use crate::lp::simplex::{solve_bounded, BoundedLp, LpSolution, LpStatus};
use crate::verify::{check_mechanism, VerificationReport, DEFAULT_TOL};

/// Solves `model` with every variable in `[0, 1]`.
pub fn solve_lp(model: &LPModel) -> Result<LpSolution> {
    let lp = BoundedLp {
        objective: model.objective.clone(),
        upper: vec![1.0; model.num_vars()],
        rows: model
            .rows
            .iter()
            .map(|r| (r.coeffs.clone(), r.sense, r.rhs))
            .collect(),
    };
    solve_bounded(&lp)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub revenue: f64,
    pub lp_objective: f64,
    pub mechanism: DirectMechanism,
    pub report: VerificationReport,
    pub iterations: usize,
}

/// Optimal revenue over all BIC, IR and feasible mechanisms, by solving
/// the LP directly. The optimal table is checked before it is returned.
pub fn optimal_revenue_oracle(inst: &Instance) -> Result<OracleResult> {
    let model = build_primal_lp(inst)?;
    let sol = solve_lp(&model)?;
    if sol.status == LpStatus::Infeasible {
        return Err(Error::Solver(
            "LP reported infeasible although the null mechanism is feasible".into(),
        ));
    }
    let mut d = DirectMechanism::zeros(inst);
    for i in 0..inst.n() {
        for j in 0..inst.m() {
            for p in 0..inst.num_profiles() {
                d.y0[i][j][p] = sol.x[model.var_index(Side::Lose, i, j, p)].clamp(0.0, 1.0);
                d.y1[i][j][p] = sol.x[model.var_index(Side::Win, i, j, p)].clamp(0.0, 1.0);
            }
        }
    }
    let report = check_mechanism(&d, inst, DEFAULT_TOL)?;
    if !report.all_ok() {
        return Err(Error::Invariant(format!(
            "LP optimum fails its own constraints by {:e}: {:?}",
            report.worst_violation,
            report.violations.first()
        )));
    }
    Ok(OracleResult {
        revenue: report.revenue.unwrap_or(sol.objective),
        lp_objective: sol.objective,
        mechanism: d,
        report,
        iterations: sol.iterations,
    })
}
