use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::virtual_value::{allocation_classes, iron, virtual_values_multi};

/// Slack allowed on `q` before it is treated as infeasible.
const Q_TOL: f64 = 1e-12;

/// Symmetric loser-pay auction: the bidder with the highest ironed virtual
/// value wins (ties split uniformly) and pays nothing; every losing bidder
/// at or above the reserve pays `z_M` with probability `q(k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoserPayMechanism {
    pub n: usize,
    /// Interim allocation probability per value index.
    pub x: Vec<f64>,
    /// Probability of paying `z_M` given a loss, per value index.
    pub q: Vec<f64>,
    pub reserve_index: Option<usize>,
    /// Ironed multi-buyer virtual values used for the ranking.
    pub phi_ironed: Vec<f64>,
    pub revenue: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct A1Entry {
    pub value: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct A1Report {
    pub entries: Vec<A1Entry>,
    pub pass: bool,
}

impl A1Report {
    pub fn first_failure(&self) -> Option<&A1Entry> {
        self.entries.iter().find(|e| !e.pass)
    }

    pub fn into_result(self) -> Result<Self> {
        match self.first_failure() {
            Some(e) => Err(Error::AssumptionA1 {
                value: e.value,
                lhs: e.lhs,
                rhs: e.rhs,
            }),
            None => Ok(self),
        }
    }
}

/// Checks `((1 - f(v)/n) / (f(v)/n)) (e^{alpha v} - 1) < 1 - e^{-alpha z_M}`
/// at every value.
#[allow(non_snake_case)]
pub fn check_assumption_A1(inst: &Instance) -> Result<A1Report> {
    if inst.n() < 2 {
        return Err(Error::Usage(format!(
            "assumption A1 concerns n >= 2 buyers, got n = {}",
            inst.n()
        )));
    }
    let (alpha, _) = inst.require_exponential("assumption A1")?;
    let n = inst.n() as f64;
    let rhs = -(-alpha * inst.z_max()).exp_m1();
    let entries: Vec<A1Entry> = inst
        .values()
        .iter()
        .zip(inst.pmf())
        .map(|(&value, &f)| {
            let share = f / n;
            let lhs = (1.0 - share) / share * (alpha * value).exp_m1();
            A1Entry {
                value,
                lhs,
                rhs,
                pass: lhs < rhs,
            }
        })
        .collect();
    let pass = entries.iter().all(|e| e.pass);
    Ok(A1Report { entries, pass })
}

/// Interim win probability of a bidder whose class has opponent mass
/// `p_eq` and who beats opponent mass `p_lt`, against `others` opponents
/// with ties split uniformly:
/// `sum_j C(others, j) p_eq^j p_lt^(others-j) / (j + 1)`.
pub(crate) fn tie_split_win_probability(p_eq: f64, p_lt: f64, others: usize) -> f64 {
    let mut binom = 1.0;
    let mut total = 0.0;
    for j in 0..=others {
        if j > 0 {
            binom = binom * (others - j + 1) as f64 / j as f64;
        }
        total += binom * p_eq.powi(j as i32) * p_lt.powi((others - j) as i32) / (j + 1) as f64;
    }
    total
}

pub fn loser_pay_auction(inst: &Instance) -> Result<LoserPayMechanism> {
    check_assumption_A1(inst)?.into_result()?;
    let vv = virtual_values_multi(inst)?;
    let ironed = iron(&vv, inst)?;
    let classes = allocation_classes(&ironed.phi_ironed, ironed.reserve_index);
    let f = inst.pmf();
    let k_count = inst.k();

    let x: Vec<f64> = (0..k_count)
        .map(|k| match classes[k] {
            None => 0.0,
            Some(c) => {
                let (mut p_eq, mut p_lt) = (0.0, 0.0);
                for (l, cl) in classes.iter().enumerate() {
                    match cl {
                        Some(d) if *d == c => p_eq += f[l],
                        Some(d) if *d > c => {}
                        _ => p_lt += f[l],
                    }
                }
                tie_split_win_probability(p_eq, p_lt, inst.n() - 1)
            }
        })
        .collect();

    let u = inst.utility();
    let z = inst.z_max();
    let loss = -u.at(-z);
    let mut q = vec![0.0; k_count];
    if let Some(start) = ironed.reserve_index {
        let mut acc = 0.0;
        let mut prev_x = 0.0;
        for k in start..k_count {
            acc += (x[k] - prev_x) * u.at(inst.values()[k]) / loss;
            prev_x = x[k];
            let qk = acc / (1.0 - x[k]);
            if !(-Q_TOL..=1.0 + Q_TOL).contains(&qk) {
                return Err(Error::Invariant(format!(
                    "loser payment probability q = {qk} at index {k} is outside [0, 1]"
                )));
            }
            q[k] = qk.clamp(0.0, 1.0);
        }
    }

    let revenue = inst.n() as f64
        * (0..k_count)
            .map(|k| f[k] * (1.0 - x[k]) * q[k] * z)
            .sum::<f64>();

    Ok(LoserPayMechanism {
        n: inst.n(),
        x,
        q,
        reserve_index: ironed.reserve_index,
        phi_ironed: ironed.phi_ironed,
        revenue,
    })
}

/// Expected utility `x(k) u(v) + (1 - x(k)) q(k) u(-z_M)` of bidding `v_k`
/// with true value `v`.
pub fn utility_curve(mech: &LoserPayMechanism, inst: &Instance, k: usize, v: f64) -> f64 {
    let u = inst.utility();
    mech.x[k] * u.at(v) + (1.0 - mech.x[k]) * mech.q[k] * u.at(-inst.z_max())
}

/// `q` from the recursion that makes each type indifferent to bidding one
/// step lower: `q(k) = (x(k) u(v_k) - U_{k-1}(v_k)) / ((1 - x(k)) (-u(-z_M)))`.
pub fn q_recursive(mech: &LoserPayMechanism, inst: &Instance) -> Vec<f64> {
    let mut q = vec![0.0; inst.k()];
    let Some(start) = mech.reserve_index else {
        return q;
    };
    let u = inst.utility();
    let loss = -u.at(-inst.z_max());
    for k in start..inst.k() {
        let v = inst.values()[k];
        let below = if k > start {
            let xb = mech.x[k - 1];
            xb * u.at(v) - (1.0 - xb) * q[k - 1] * loss
        } else {
            0.0
        };
        q[k] = (mech.x[k] * u.at(v) - below) / ((1.0 - mech.x[k]) * loss);
    }
    q
}
