use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::utility::Utility;

/// Largest number of `y` variables the oracle will build.
pub const LP_SIZE_LIMIT: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// `y0`: no item.
    Lose = 0,
    /// `y1`: item.
    Win = 1,
}

/// What a constraint row stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "row")]
pub enum RowKind {
    /// Value `k` of `buyer` weakly prefers truth to reporting `report`.
    Bic { buyer: usize, k: usize, report: usize },
    /// Value `k` of `buyer` gets non-negative utility.
    Ir { buyer: usize, k: usize },
    /// `buyer`'s outcome probabilities at `profile` sum to one.
    Outcome { buyer: usize, profile: usize },
    /// At most one item is allocated at `profile`.
    Item { profile: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    Le,
    Eq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub kind: RowKind,
    pub sense: Sense,
    /// Sparse `(variable, coefficient)` pairs.
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

/// The revenue-maximization LP over outcome tables:
/// maximize `objective . y` subject to `rows`, with every `y` in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LPModel {
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub num_profiles: usize,
    pub objective: Vec<f64>,
    pub rows: Vec<Row>,
}

impl LPModel {
    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    /// Column of `y{side}[buyer][j][profile]`.
    pub fn var_index(&self, side: Side, buyer: usize, j: usize, profile: usize) -> usize {
        var_index(self.n, self.m, self.num_profiles, side, buyer, j, profile)
    }

    pub fn count(&self, pred: impl Fn(&RowKind) -> bool) -> usize {
        self.rows.iter().filter(|r| pred(&r.kind)).count()
    }
}

fn var_index(n: usize, m: usize, profiles: usize, side: Side, buyer: usize, j: usize, p: usize) -> usize {
    (((side as usize) * n + buyer) * m + j) * profiles + p
}

/// Utility coefficients for the incentive rows, as `(coefficient at x,
/// offset)` with coefficient `u(x) + offset`.
///
/// Adding a constant to every utility coefficient of a buyer's interim row
/// adds multiples of that buyer's outcome equalities, so the LP is the same.
/// For exponential utility with `alpha * z_M >= 1`, `u(x) + beta = beta *
/// e^{alpha x}` keeps the small gaps between large payments that `u(x)`
/// itself loses to cancellation near `-beta`.
fn incentive_coefficients(inst: &Instance) -> (impl Fn(f64) -> f64, f64) {
    let u = *inst.utility();
    let shift = match u {
        Utility::Exponential { alpha, beta } if alpha * inst.z_max() >= 1.0 => Some((alpha, beta)),
        _ => None,
    };
    let coef = move |x: f64| match shift {
        Some((alpha, beta)) => beta * (alpha * x).exp(),
        None => u.at(x),
    };
    (coef, shift.map_or(0.0, |(_, beta)| beta))
}

/// Builds the LP: BIC rows for every ordered pair of distinct values,
/// IR rows per value, outcome equalities per buyer and profile, and one
/// single-item row per profile. Interim rows weight each profile by the
/// probability of the other buyers' values.
pub fn build_primal_lp(inst: &Instance) -> Result<LPModel> {
    let (n, k_count, m) = (inst.n(), inst.k(), inst.m());
    let size = k_count
        .checked_pow(n as u32)
        .and_then(|p| p.checked_mul(2 * n * m))
        .unwrap_or(usize::MAX);
    if size > LP_SIZE_LIMIT {
        return Err(Error::SizeGuard {
            size,
            limit: LP_SIZE_LIMIT,
        });
    }
    let num_profiles = inst.num_profiles();
    let idx = |side, i, j, p| var_index(n, m, num_profiles, side, i, j, p);
    let profiles = inst.profiles();
    let all: Vec<Vec<usize>> = profiles.iter().map(|(_, prof)| prof).collect();
    let (z, v) = (inst.payments(), inst.values());
    let (coef, offset) = incentive_coefficients(inst);

    let mut objective = vec![0.0; size];
    for (p, prof) in all.iter().enumerate() {
        let prob = inst.profile_prob(prof);
        for i in 0..n {
            for j in 0..m {
                objective[idx(Side::Lose, i, j, p)] = prob * z[j];
                objective[idx(Side::Win, i, j, p)] = prob * z[j];
            }
        }
    }

    // sum over profiles with p_i = report of w(p) * (utility of that outcome
    // at value v, plus offset); returns the total weight so the offset can be
    // moved to the right-hand side
    let interim_terms = |i: usize, report: usize, value: f64, sign: f64, out: &mut Vec<(usize, f64)>| {
        let mut weight = 0.0;
        for (p, prof) in all.iter().enumerate().filter(|(_, prof)| prof[i] == report) {
            let w = inst.others_prob(prof, i);
            weight += w;
            for j in 0..m {
                out.push((idx(Side::Win, i, j, p), sign * w * coef(value - z[j])));
                out.push((idx(Side::Lose, i, j, p), sign * w * coef(-z[j])));
            }
        }
        sign * weight
    };

    let mut rows = Vec::new();
    for i in 0..n {
        for k in 0..k_count {
            for report in (0..k_count).filter(|&r| r != k) {
                // U(report; v_k) - U(k; v_k) <= 0
                let mut coeffs = Vec::new();
                let weight = interim_terms(i, report, v[k], 1.0, &mut coeffs)
                    + interim_terms(i, k, v[k], -1.0, &mut coeffs);
                rows.push(Row {
                    kind: RowKind::Bic { buyer: i, k, report },
                    sense: Sense::Le,
                    coeffs,
                    rhs: offset * weight,
                });
            }
        }
        for k in 0..k_count {
            let mut coeffs = Vec::new();
            let weight = interim_terms(i, k, v[k], -1.0, &mut coeffs);
            rows.push(Row {
                kind: RowKind::Ir { buyer: i, k },
                sense: Sense::Le,
                coeffs,
                rhs: offset * weight,
            });
        }
    }
    for p in 0..num_profiles {
        for i in 0..n {
            let coeffs = (0..m)
                .flat_map(|j| [(idx(Side::Lose, i, j, p), 1.0), (idx(Side::Win, i, j, p), 1.0)])
                .collect();
            rows.push(Row {
                kind: RowKind::Outcome { buyer: i, profile: p },
                sense: Sense::Eq,
                coeffs,
                rhs: 1.0,
            });
        }
    }
    for p in 0..num_profiles {
        let coeffs = (0..n)
            .flat_map(|i| (0..m).map(move |j| (idx(Side::Win, i, j, p), 1.0)))
            .collect();
        rows.push(Row {
            kind: RowKind::Item { profile: p },
            sense: Sense::Le,
            coeffs,
            rhs: 1.0,
        });
    }

    Ok(LPModel {
        n,
        k: k_count,
        m,
        num_profiles,
        objective,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::utility::Utility;

    fn inst(n: usize, k: usize, m: usize) -> Instance {
        let values: Vec<f64> = (0..k).map(|i| i as f64).collect();
        let payments: Vec<f64> = (0..m).map(|j| j as f64 * k as f64 / (m - 1).max(1) as f64).collect();
        Instance::new(values, vec![1.0 / k as f64; k], payments, n, Utility::exponential(0.1, 1.0)).unwrap()
    }

    #[test]
    fn row_counts() {
        let lp = build_primal_lp(&inst(1, 2, 2)).unwrap();
        assert_eq!(lp.num_vars(), 8);
        assert_eq!(lp.count(|r| matches!(r, RowKind::Bic { .. })), 2);
        assert_eq!(lp.count(|r| matches!(r, RowKind::Ir { .. })), 2);
        assert_eq!(lp.count(|r| matches!(r, RowKind::Outcome { .. })), 2);
        assert_eq!(lp.count(|r| matches!(r, RowKind::Item { .. })), 2);

        let lp = build_primal_lp(&inst(2, 2, 2)).unwrap();
        assert_eq!(lp.num_vars(), 32);
    }

    #[test]
    fn variable_indices_are_a_bijection() {
        let lp = build_primal_lp(&inst(2, 3, 3)).unwrap();
        let mut seen = vec![false; lp.num_vars()];
        for side in [Side::Lose, Side::Win] {
            for i in 0..2 {
                for j in 0..3 {
                    for p in 0..9 {
                        let c = lp.var_index(side, i, j, p);
                        assert!(!seen[c]);
                        seen[c] = true;
                    }
                }
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn size_guard() {
        // 2 * 3 * 2 * 10^5 > 100000
        let big = inst(5, 10, 2);
        match build_primal_lp(&big) {
            Err(Error::SizeGuard { size, limit }) => {
                assert_eq!(size, 2 * 5 * 2 * 100_000);
                assert_eq!(limit, LP_SIZE_LIMIT);
            }
            other => panic!("expected size guard, got {other:?}"),
        }
    }
}
