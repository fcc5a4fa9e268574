//! Buyer utility functions.
//!
//! Every utility satisfies `u(0) = 0` and is strictly increasing on the
//! range of outcomes a buyer can face, `[-z_M, v_K]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Utility {
    /// `beta * (exp(alpha * x) - 1)`; risk loving for `alpha > 0`.
    Exponential { alpha: f64, beta: f64 },
    /// `slope * x`; risk neutral.
    Linear { slope: f64 },
    /// `beta * ((x + L)^2 - L^2)`; convex and increasing for `x >= -L`.
    Quadratic {
        beta: f64,
        #[serde(rename = "L")]
        shift: f64,
    },
}

impl Utility {
    pub fn exponential(alpha: f64, beta: f64) -> Self {
        Utility::Exponential { alpha, beta }
    }

    pub fn linear(slope: f64) -> Self {
        Utility::Linear { slope }
    }

    pub fn quadratic(beta: f64, shift: f64) -> Self {
        Utility::Quadratic { beta, shift }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Utility::Exponential { .. } => "exponential",
            Utility::Linear { .. } => "linear",
            Utility::Quadratic { .. } => "quadratic",
        }
    }

    /// Risk parameter of an exponential utility.
    pub fn alpha(&self) -> Option<f64> {
        match *self {
            Utility::Exponential { alpha, .. } => Some(alpha),
            _ => None,
        }
    }

    /// Checks parameter signs; domain compatibility with a payment grid is
    /// checked by [`crate::Instance`].
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, x: f64| {
            if x.is_finite() && x > 0.0 {
                Ok(())
            } else {
                Err(Error::Domain(format!(
                    "{} utility needs {name} > 0, got {x}",
                    self.kind_name()
                )))
            }
        };
        match *self {
            Utility::Exponential { alpha, beta } => {
                positive("alpha", alpha)?;
                positive("beta", beta)
            }
            Utility::Linear { slope } => positive("slope", slope),
            Utility::Quadratic { beta, shift } => {
                positive("beta", beta)?;
                positive("L", shift)
            }
        }
    }

    /// Evaluates `u(x)` without domain checks.
    ///
    /// The exponential form goes through `exp_m1` so that small `alpha * x`
    /// keeps full relative precision, and the quadratic form is factored as
    /// `beta * x * (x + 2L)`; both give `u(0) = 0` exactly.
    #[inline]
    pub fn at(&self, x: f64) -> f64 {
        match *self {
            Utility::Exponential { alpha, beta } => beta * (alpha * x).exp_m1(),
            Utility::Linear { slope } => slope * x,
            Utility::Quadratic { beta, shift } => beta * x * (x + 2.0 * shift),
        }
    }

    /// `u(v) - u(v - z)`, the utility spread between paying nothing and
    /// paying `z` at value `v`.
    #[inline]
    pub fn spread(&self, v: f64, z: f64) -> f64 {
        match *self {
            // beta * e^{alpha v} * (1 - e^{-alpha z})
            Utility::Exponential { alpha, beta } => {
                beta * (alpha * v).exp() * -(-alpha * z).exp_m1()
            }
            _ => self.at(v) - self.at(v - z),
        }
    }
}

/// Evaluates `u(x)`, rejecting non-finite inputs and points where a
/// quadratic utility stops being increasing.
pub fn eval_utility(u: &Utility, x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("utility argument {x} is not finite")));
    }
    if let Utility::Quadratic { shift, .. } = *u {
        if x < -shift {
            return Err(Error::Domain(format!(
                "quadratic utility is not increasing below -L = {}, got x = {x}",
                -shift
            )));
        }
    }
    Ok(u.at(x))
}

/// Largest probability of charging `z_max` that a buyer with value `v`
/// still accepts: `u(v) / (u(v) - u(v - z_max))`.
///
/// For exponential utility this is evaluated as
/// `(1 - e^{-alpha v}) / (1 - e^{-alpha z_max})`, which is independent of
/// `beta` and avoids cancellation.
pub fn acceptance_ratio(u: &Utility, v: f64, z_max: f64) -> Result<f64> {
    if !(v.is_finite() && z_max.is_finite()) {
        return Err(Error::Domain(format!(
            "acceptance ratio needs finite arguments, got v = {v}, z_M = {z_max}"
        )));
    }
    if v < 0.0 || z_max <= v {
        return Err(Error::Domain(format!(
            "acceptance ratio needs 0 <= v < z_M, got v = {v}, z_M = {z_max}"
        )));
    }
    if v == 0.0 {
        return Ok(0.0);
    }
    let ratio = match *u {
        Utility::Exponential { alpha, .. } => (-alpha * v).exp_m1() / (-alpha * z_max).exp_m1(),
        _ => {
            let spread = u.spread(v, z_max);
            if spread <= 0.0 {
                return Err(Error::Invariant(format!(
                    "u({v}) <= u({v} - {z_max}) for a utility that should be increasing"
                )));
            }
            u.at(v) / spread
        }
    };
    Ok(ratio)
}
