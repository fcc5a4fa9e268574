use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::utility::acceptance_ratio;

/// Randomized take-it-or-leave-it price: a buyer with value at least
/// `v_star` gets the item and pays `z_M` with probability `p_high`,
/// otherwise nothing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PostedPriceMechanism {
    pub v_star: f64,
    pub v_star_index: usize,
    pub p_high: f64,
    pub revenue: f64,
}

/// `z_M * Pr[t >= v] * r(v)` for a threshold `v` taken from the value grid.
pub fn posted_price_revenue(inst: &Instance, v: f64) -> Result<f64> {
    let k = inst
        .value_index(v)
        .ok_or_else(|| Error::Domain(format!("{v} is not on the value grid")))?;
    revenue_at(inst, k)
}

fn revenue_at(inst: &Instance, k: usize) -> Result<f64> {
    let z = inst.z_max();
    let r = acceptance_ratio(inst.utility(), inst.values()[k], z)?;
    Ok(z * inst.tail_mass(k) * r)
}

/// Best randomized take-it-or-leave-it price for a single buyer.
///
/// Ties go to the smallest threshold, so the threshold type (who is exactly
/// indifferent) and everyone above buys.
pub fn optimal_posted_price(inst: &Instance) -> Result<PostedPriceMechanism> {
    if inst.n() != 1 {
        return Err(Error::Usage(format!(
            "posted price is the single-buyer mechanism, got n = {}",
            inst.n()
        )));
    }
    let mut best = (0usize, revenue_at(inst, 0)?);
    for k in 1..inst.k() {
        let rev = revenue_at(inst, k)?;
        if rev > best.1 * (1.0 + 1e-12) + 1e-300 {
            best = (k, rev);
        }
    }
    let (k, revenue) = best;
    let v_star = inst.values()[k];
    Ok(PostedPriceMechanism {
        v_star,
        v_star_index: k,
        p_high: acceptance_ratio(inst.utility(), v_star, inst.z_max())?,
        revenue,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::utility::Utility;
    use std::f64::consts::LN_2;

    fn quadratic_instance() -> Instance {
        let values: Vec<f64> = (0..10).map(|i| i as f64 / 10.0).collect();
        Instance::new(values, vec![0.1; 10], vec![0.0, 1.0], 1, Utility::quadratic(1.0, 1.0)).unwrap()
    }

    #[test]
    fn quadratic_counterexample_price() {
        let inst = quadratic_instance();
        let pp = optimal_posted_price(&inst).unwrap();
        assert_eq!(pp.v_star_index, 4);
        assert!((pp.v_star - 0.4).abs() < 1e-15);
        assert!((pp.p_high - 0.96 / 1.8).abs() < 1e-12);
        assert!((pp.revenue - 0.32).abs() < 1e-12);
        let at_half = posted_price_revenue(&inst, 0.5).unwrap();
        assert!((at_half - 0.3125).abs() < 1e-12);
    }

    #[test]
    fn two_point_exponential() {
        let inst = Instance::new(vec![0.0, 1.0], vec![0.5, 0.5], vec![0.0, 2.0], 1, Utility::exponential(LN_2, 1.0)).unwrap();
        let pp = optimal_posted_price(&inst).unwrap();
        assert_eq!(pp.v_star, 1.0);
        assert!((pp.p_high - 2.0 / 3.0).abs() < 1e-15);
        assert!((pp.revenue - 2.0 / 3.0).abs() < 1e-15);
        assert!((posted_price_revenue(&inst, 1.0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(posted_price_revenue(&inst, 0.0).unwrap(), 0.0);
        assert!(matches!(posted_price_revenue(&inst, 0.5), Err(Error::Domain(_))));
    }

    #[test]
    fn zero_value_only() {
        let inst = Instance::new(vec![0.0], vec![1.0], vec![0.0, 1.0], 1, Utility::exponential(1.0, 1.0)).unwrap();
        let pp = optimal_posted_price(&inst).unwrap();
        assert_eq!((pp.v_star, pp.p_high, pp.revenue), (0.0, 0.0, 0.0));
    }

    #[test]
    fn requires_single_buyer() {
        let inst = quadratic_instance().with_buyers(2).unwrap();
        assert!(matches!(optimal_posted_price(&inst), Err(Error::Usage(_))));
    }
}
