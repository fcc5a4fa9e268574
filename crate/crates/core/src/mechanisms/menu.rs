use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{Instance, MenuOption};
use crate::utility::Utility;

/// Utility differences below this count as indifference.
pub const MENU_TIE_TOL: f64 = 1e-9;

/// A single-buyer menu and the option each value picks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MenuMechanism {
    pub options: Vec<MenuOption>,
    /// Index into `options` per value, `None` for the null option.
    pub choice: Vec<Option<usize>>,
    pub revenue: f64,
}

impl MenuMechanism {
    pub fn chosen(&self, k: usize) -> MenuOption {
        self.choice[k].map_or(MenuOption::NULL, |i| self.options[i])
    }
}

/// Expected utility of `option` at value `v`:
/// `x [w1 u(v - z_M) + (1 - w1) u(v)] + (1 - x) w0 u(-z_M)`.
pub fn menu_utility(option: &MenuOption, u: &Utility, z_max: f64, v: f64) -> f64 {
    let win = option.w1 * u.at(v - z_max) + (1.0 - option.w1) * u.at(v);
    option.x * win + (1.0 - option.x) * option.w0 * u.at(-z_max)
}

/// Lets each value pick its favourite option (the null option is always
/// available). Near-ties go to the option with the larger expected payment.
pub fn menu_mechanism_revenue(options: &[MenuOption], inst: &Instance) -> Result<MenuMechanism> {
    if inst.n() != 1 {
        return Err(Error::Usage(format!(
            "menus are single-buyer mechanisms, got n = {}",
            inst.n()
        )));
    }
    for opt in options {
        opt.validate()?;
    }
    let (u, z) = (inst.utility(), inst.z_max());
    let mut choice = Vec::with_capacity(inst.k());
    let mut revenue = 0.0;
    for (&v, &f) in inst.values().iter().zip(inst.pmf()) {
        let mut best: (Option<usize>, f64, f64) = (None, 0.0, 0.0);
        for (i, opt) in options.iter().enumerate() {
            let util = menu_utility(opt, u, z, v);
            let pay = opt.expected_payment(z);
            let better = util > best.1 + MENU_TIE_TOL
                || (util >= best.1 - MENU_TIE_TOL && pay > best.2);
            if better {
                best = (Some(i), util, pay);
            }
        }
        choice.push(best.0);
        revenue += f * best.2;
    }
    Ok(MenuMechanism {
        options: options.to_vec(),
        choice,
        revenue,
    })
}
