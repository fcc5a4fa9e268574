use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::utility::Utility;

/// Tolerance on `sum(pmf) = 1`.
pub const PMF_SUM_TOL: f64 = 1e-12;

/// A complete problem input: value grid, value distribution, payment grid,
/// number of symmetric buyers and their utility.
///
/// Value and payment indices are zero-based throughout the crate, so the
/// lowest value `v_1 = 0` sits at index 0 and `z_M` at index `m() - 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInstance", into = "RawInstance")]
pub struct Instance {
    values: Vec<f64>,
    pmf: Vec<f64>,
    payments: Vec<f64>,
    n: usize,
    utility: Utility,
    tail: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawInstance {
    values: Vec<f64>,
    pmf: Vec<f64>,
    payments: Vec<f64>,
    n: usize,
    utility: Utility,
}

impl TryFrom<RawInstance> for Instance {
    type Error = Error;

    fn try_from(raw: RawInstance) -> Result<Self> {
        Instance::new(raw.values, raw.pmf, raw.payments, raw.n, raw.utility)
    }
}

impl From<Instance> for RawInstance {
    fn from(inst: Instance) -> Self {
        RawInstance {
            values: inst.values,
            pmf: inst.pmf,
            payments: inst.payments,
            n: inst.n,
            utility: inst.utility,
        }
    }
}

fn strictly_increasing_from_zero(field: &'static str, xs: &[f64]) -> Result<()> {
    let invalid = |message: String| Error::InvalidInstance { field, message };
    match xs.first() {
        None => return Err(invalid("must not be empty".into())),
        Some(&first) if first != 0.0 => {
            return Err(invalid(format!("first entry must be 0, got {first}")))
        }
        _ => {}
    }
    if let Some(bad) = xs.iter().find(|x| !x.is_finite()) {
        return Err(invalid(format!("entry {bad} is not finite")));
    }
    if let Some(w) = xs.windows(2).find(|w| w[1] <= w[0]) {
        return Err(invalid(format!(
            "must be strictly increasing, found {} followed by {}",
            w[0], w[1]
        )));
    }
    Ok(())
}

impl Instance {
    pub fn new(
        values: Vec<f64>,
        pmf: Vec<f64>,
        payments: Vec<f64>,
        n: usize,
        utility: Utility,
    ) -> Result<Self> {
        strictly_increasing_from_zero("values", &values)?;
        strictly_increasing_from_zero("payments", &payments)?;
        if pmf.len() != values.len() {
            return Err(Error::InvalidInstance {
                field: "pmf",
                message: format!("has {} entries but there are {} values", pmf.len(), values.len()),
            });
        }
        if let Some(p) = pmf.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
            return Err(Error::InvalidInstance {
                field: "pmf",
                message: format!("every probability must be positive, got {p}"),
            });
        }
        let total: f64 = pmf.iter().sum();
        if (total - 1.0).abs() > PMF_SUM_TOL {
            return Err(Error::InvalidInstance {
                field: "pmf",
                message: format!("must sum to 1, sums to {total:.17}"),
            });
        }
        if n == 0 {
            return Err(Error::InvalidInstance {
                field: "n",
                message: "need at least one buyer".into(),
            });
        }
        let v_top = *values.last().unwrap();
        let z_top = *payments.last().unwrap();
        if z_top <= v_top {
            return Err(Error::InvalidInstance {
                field: "payments",
                message: format!("largest payment {z_top} must exceed the largest value {v_top}"),
            });
        }
        utility.validate().map_err(|e| Error::InvalidInstance {
            field: "utility",
            message: e.to_string(),
        })?;
        if let Utility::Quadratic { shift, .. } = utility {
            // u'(x) = 2 beta (x + L) vanishes only at x = -L, so L = z_M still
            // leaves u strictly increasing on [-z_M, v_K].
            if shift < z_top {
                return Err(Error::InvalidInstance {
                    field: "utility",
                    message: format!("quadratic utility needs L >= z_M = {z_top}, got L = {shift}"),
                });
            }
        }

        let mut tail = vec![0.0; values.len() + 1];
        for k in (0..values.len()).rev() {
            tail[k] = tail[k + 1] + pmf[k];
        }
        Ok(Instance {
            values,
            pmf,
            payments,
            n,
            utility,
            tail,
        })
    }

    /// Same grids and distribution with a different buyer count.
    pub fn with_buyers(&self, n: usize) -> Result<Self> {
        Instance::new(
            self.values.clone(),
            self.pmf.clone(),
            self.payments.clone(),
            n,
            self.utility,
        )
    }

    /// Same instance restricted to the payments `{0, z_M}`.
    pub fn with_extreme_payments(&self) -> Self {
        let mut inst = self.clone();
        inst.payments = vec![0.0, self.z_max()];
        inst
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn payments(&self) -> &[f64] {
        &self.payments
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn utility(&self) -> &Utility {
        &self.utility
    }

    /// Number of values `K`.
    pub fn k(&self) -> usize {
        self.values.len()
    }

    /// Number of payments `M`.
    pub fn m(&self) -> usize {
        self.payments.len()
    }

    pub fn z_max(&self) -> f64 {
        *self.payments.last().unwrap()
    }

    /// `Pr[t >= v_k]`; `tail_mass(K) = 0`.
    pub fn tail_mass(&self, k: usize) -> f64 {
        self.tail[k]
    }

    pub fn value_index(&self, v: f64) -> Option<usize> {
        self.values.iter().position(|&x| x == v)
    }

    /// Number of value profiles, `K^n`.
    pub fn num_profiles(&self) -> usize {
        self.k().pow(self.n as u32)
    }

    pub fn profiles(&self) -> Profiles {
        Profiles::new(self.k(), self.n)
    }

    /// `f(k) = prod_i f(v_{k_i})`.
    pub fn profile_prob(&self, profile: &[usize]) -> f64 {
        profile.iter().map(|&k| self.pmf[k]).product()
    }

    /// `f(k_{-i})`, the probability of the other buyers' values.
    pub fn others_prob(&self, profile: &[usize], buyer: usize) -> f64 {
        profile
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != buyer)
            .map(|(_, &k)| self.pmf[k])
            .product()
    }

    pub(crate) fn require_exponential(&self, operation: &'static str) -> Result<(f64, f64)> {
        match self.utility {
            Utility::Exponential { alpha, beta } => Ok((alpha, beta)),
            other => Err(Error::UnsupportedUtility {
                kind: other.kind_name(),
                operation,
            }),
        }
    }
}

/// Value profiles `k = (k_1, ..., k_n)` in mixed radix, buyer 0 most
/// significant. Profile `p` decodes to `k_i = (p / K^(n-1-i)) % K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Profiles {
    k: usize,
    n: usize,
}

impl Profiles {
    pub fn new(k: usize, n: usize) -> Self {
        Profiles { k, n }
    }

    pub fn len(&self) -> usize {
        self.k.pow(self.n as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn decode(&self, mut index: usize, out: &mut [usize]) {
        for slot in out.iter_mut().rev() {
            *slot = index % self.k;
            index /= self.k;
        }
    }

    pub fn encode(&self, profile: &[usize]) -> usize {
        profile.iter().fold(0, |acc, &k| acc * self.k + k)
    }

    /// Iterates `(index, profile)` pairs in index order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, Vec<usize>)> + '_ {
        (0..self.len()).map(move |p| {
            let mut profile = vec![0; self.n];
            self.decode(p, &mut profile);
            (p, profile)
        })
    }
}

/// A single-buyer menu entry: allocation probability `x`, probability `w1`
/// of paying `z_M` when allocated and `w0` of paying `z_M` when not.
/// Payments are otherwise 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MenuOption {
    pub x: f64,
    pub w1: f64,
    pub w0: f64,
}

impl MenuOption {
    pub const NULL: MenuOption = MenuOption {
        x: 0.0,
        w1: 0.0,
        w0: 0.0,
    };

    pub fn new(x: f64, w1: f64, w0: f64) -> Result<Self> {
        let opt = MenuOption { x, w1, w0 };
        opt.validate()?;
        Ok(opt)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("x", self.x), ("w1", self.w1), ("w0", self.w0)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Domain(format!(
                    "menu option field {name} = {p} is not a probability"
                )));
            }
        }
        Ok(())
    }

    /// Expected payment `z_M * (x w1 + (1 - x) w0)`.
    pub fn expected_payment(&self, z_max: f64) -> f64 {
        z_max * (self.x * self.w1 + (1.0 - self.x) * self.w0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn expo() -> Utility {
        Utility::exponential(0.5, 1.0)
    }

    #[test]
    fn rejects_invalid_grids() {
        let bad = [
            Instance::new(vec![0.1, 1.0], vec![0.5, 0.5], vec![0.0, 2.0], 1, expo()),
            Instance::new(vec![0.0, 1.0], vec![0.5, 0.5], vec![0.0, 1.0], 1, expo()),
            Instance::new(vec![0.0, 1.0], vec![0.6, 0.5], vec![0.0, 2.0], 1, expo()),
            Instance::new(vec![0.0, 1.0], vec![1.0, 0.0], vec![0.0, 2.0], 1, expo()),
            Instance::new(vec![0.0, 1.0, 1.0], vec![0.2, 0.3, 0.5], vec![0.0, 2.0], 1, expo()),
            Instance::new(vec![0.0, 1.0], vec![0.5, 0.5], vec![0.0, 2.0], 0, expo()),
            Instance::new(vec![0.0, 1.0], vec![0.5], vec![0.0, 2.0], 1, expo()),
            Instance::new(
                vec![0.0, 1.0],
                vec![0.5, 0.5],
                vec![0.0, 2.0],
                1,
                Utility::quadratic(1.0, 1.5),
            ),
        ];
        for r in bad {
            assert!(matches!(r, Err(Error::InvalidInstance { .. })), "{r:?}");
        }
    }

    #[test]
    fn quadratic_shift_may_equal_top_payment() {
        let values: Vec<f64> = (0..10).map(|i| i as f64 / 10.0).collect();
        let inst = Instance::new(values, vec![0.1; 10], vec![0.0, 1.0], 1, Utility::quadratic(1.0, 1.0));
        assert!(inst.is_ok());
    }

    #[test]
    fn tail_and_profiles() {
        let inst = Instance::new(
            vec![0.0, 1.0, 2.0],
            vec![0.3, 0.1, 0.6],
            vec![0.0, 3.0],
            2,
            expo(),
        )
        .unwrap();
        assert!((inst.tail_mass(0) - 1.0).abs() < 1e-15);
        assert!((inst.tail_mass(1) - 0.7).abs() < 1e-15);
        assert_eq!(inst.tail_mass(3), 0.0);
        assert_eq!(inst.num_profiles(), 9);

        let profiles = inst.profiles();
        let mut buf = [0usize; 2];
        profiles.decode(5, &mut buf);
        assert_eq!(buf, [1, 2]);
        assert_eq!(profiles.encode(&buf), 5);
        let total: f64 = profiles.iter().map(|(_, p)| inst.profile_prob(&p)).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!((inst.others_prob(&[1, 2], 0) - 0.6).abs() < 1e-15);
    }

    #[test]
    fn menu_option_bounds() {
        assert!(MenuOption::new(0.5, 1.2, 0.0).is_err());
        let opt = MenuOption::new(0.5, 0.2, 0.4).unwrap();
        assert!((opt.expected_payment(2.0) - 2.0 * (0.1 + 0.2)).abs() < 1e-15);
        assert_eq!(MenuOption::NULL.expected_payment(5.0), 0.0);
    }
}
