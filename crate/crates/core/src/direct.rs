//! Ex-post outcome tables (`y0`, `y1`) and their interim aggregation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Instance;

/// Probability tables of a direct mechanism.
///
/// `y1[i][j][p]` is the probability that buyer `i` receives the item and
/// pays `z_j` at value profile `p`; `y0` is the same without the item.
/// Profiles are indexed as in [`crate::instance::Profiles`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectMechanism {
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub y0: Vec<Vec<Vec<f64>>>,
    pub y1: Vec<Vec<Vec<f64>>>,
}

impl DirectMechanism {
    /// All-zero tables of the right shape for `inst`.
    pub fn zeros(inst: &Instance) -> Self {
        let table = vec![vec![vec![0.0; inst.num_profiles()]; inst.m()]; inst.n()];
        DirectMechanism {
            n: inst.n(),
            k: inst.k(),
            m: inst.m(),
            y0: table.clone(),
            y1: table,
        }
    }

    /// The mechanism that never sells and never charges.
    pub fn null(inst: &Instance) -> Self {
        let mut d = Self::zeros(inst);
        for buyer in d.y0.iter_mut() {
            buyer[0].iter_mut().for_each(|y| *y = 1.0);
        }
        d
    }

    pub fn num_profiles(&self) -> usize {
        self.k.pow(self.n as u32)
    }

    /// Checks that the declared dimensions match `inst` and the tables.
    pub fn check_shape(&self, inst: &Instance) -> Result<()> {
        if (self.n, self.k, self.m) != (inst.n(), inst.k(), inst.m()) {
            return Err(Error::Shape(format!(
                "mechanism is (n, K, M) = ({}, {}, {}) but the instance is ({}, {}, {})",
                self.n,
                self.k,
                self.m,
                inst.n(),
                inst.k(),
                inst.m()
            )));
        }
        let profiles = self.num_profiles();
        for (name, table) in [("y0", &self.y0), ("y1", &self.y1)] {
            let ok = table.len() == self.n
                && table
                    .iter()
                    .all(|b| b.len() == self.m && b.iter().all(|row| row.len() == profiles));
            if !ok {
                return Err(Error::Shape(format!(
                    "table {name} is not {} x {} x {profiles}",
                    self.n, self.m
                )));
            }
        }
        Ok(())
    }

    /// Interim tables for every buyer.
    pub fn interim(&self, inst: &Instance) -> Result<Vec<InterimMechanism>> {
        self.check_shape(inst)?;
        let profiles = inst.profiles();
        let (k_count, m) = (inst.k(), inst.m());
        let mut out = Vec::with_capacity(self.n);
        let mut profile = vec![0; self.n];
        for i in 0..self.n {
            let mut y1 = vec![vec![0.0; m]; k_count];
            let mut y0 = vec![vec![0.0; m]; k_count];
            for p in 0..profiles.len() {
                profiles.decode(p, &mut profile);
                let w = inst.others_prob(&profile, i);
                let k = profile[i];
                for j in 0..m {
                    y1[k][j] += w * self.y1[i][j][p];
                    y0[k][j] += w * self.y0[i][j][p];
                }
            }
            out.push(InterimMechanism::from_tables(y1, y0, inst.payments()));
        }
        Ok(out)
    }
}

/// One buyer's interim view: outcome probabilities conditioned on her own
/// value and averaged over the other buyers' values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterimMechanism {
    /// `y1[k][j]`: win and pay `z_j` at value `v_k`.
    pub y1: Vec<Vec<f64>>,
    /// `y0[k][j]`: lose and pay `z_j` at value `v_k`.
    pub y0: Vec<Vec<f64>>,
    /// Interim allocation probability.
    pub x: Vec<f64>,
    /// Expected payment given a win (0 when `x = 0`).
    pub p: Vec<f64>,
    /// Expected payment given a loss (0 when `x = 1`).
    pub q: Vec<f64>,
}

impl InterimMechanism {
    pub fn from_tables(y1: Vec<Vec<f64>>, y0: Vec<Vec<f64>>, payments: &[f64]) -> Self {
        let k_count = y1.len();
        let mut x = vec![0.0; k_count];
        let mut p = vec![0.0; k_count];
        let mut q = vec![0.0; k_count];
        for k in 0..k_count {
            x[k] = y1[k].iter().sum();
            let win_pay: f64 = y1[k].iter().zip(payments).map(|(y, z)| y * z).sum();
            let lose_pay: f64 = y0[k].iter().zip(payments).map(|(y, z)| y * z).sum();
            p[k] = if x[k] > 0.0 { win_pay / x[k] } else { 0.0 };
            q[k] = if x[k] < 1.0 { lose_pay / (1.0 - x[k]) } else { 0.0 };
        }
        InterimMechanism { y1, y0, x, p, q }
    }

    /// Expected utility of reporting `v_report` (index) with true value `v`.
    pub fn utility(&self, inst: &Instance, report: usize, v: f64) -> f64 {
        let u = inst.utility();
        inst.payments()
            .iter()
            .enumerate()
            .map(|(j, &z)| self.y1[report][j] * u.at(v - z) + self.y0[report][j] * u.at(-z))
            .sum()
    }

    /// Expected payment at value index `k`.
    pub fn expected_payment(&self, inst: &Instance, k: usize) -> f64 {
        inst.payments()
            .iter()
            .enumerate()
            .map(|(j, &z)| z * (self.y1[k][j] + self.y0[k][j]))
            .sum()
    }
}
