//! Fixed instances for the benchmarks in `benches/`.

use riskauction_core::{Instance, Utility};

/// Single buyer, `k` values spaced by 0.5 with a mildly decreasing pmf,
/// payments evenly spaced up to twice the top value.
pub fn single_buyer(k: usize, m: usize) -> Instance {
    let values: Vec<f64> = (0..k).map(|i| 0.5 * i as f64).collect();
    let weights: Vec<f64> = (0..k).map(|i| 1.0 / (1.0 + 0.1 * i as f64)).collect();
    let total: f64 = weights.iter().sum();
    let pmf = weights.iter().map(|w| w / total).collect();
    let z_max = 2.0 * values[k - 1].max(0.5);
    let payments = (0..m).map(|j| z_max * j as f64 / (m - 1) as f64).collect();
    Instance::new(values, pmf, payments, 1, Utility::exponential(0.3, 1.0)).expect("valid instance")
}

/// `n` buyers on two equally likely values with a large top payment, where
/// the bounded-transfer condition holds for small `alpha`.
pub fn two_point_buyers(n: usize) -> Instance {
    Instance::new(vec![0.0, 1.0], vec![0.5, 0.5], vec![0.0, 100.0], n, Utility::exponential(0.05, 1.0))
        .expect("valid instance")
}
