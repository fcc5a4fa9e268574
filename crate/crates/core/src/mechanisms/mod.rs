//! The closed-form mechanisms and their conversion to outcome tables.

mod loser_pay;
mod menu;
mod posted_price;

pub use loser_pay::{
    check_assumption_A1, loser_pay_auction, q_recursive, utility_curve, A1Entry, A1Report,
    LoserPayMechanism,
};
pub use menu::{menu_mechanism_revenue, menu_utility, MenuMechanism, MENU_TIE_TOL};
pub use posted_price::{optimal_posted_price, posted_price_revenue, PostedPriceMechanism};

use serde::{Deserialize, Serialize};

use crate::direct::DirectMechanism;
use crate::error::{Error, Result};
use crate::instance::{Instance, MenuOption};
use crate::virtual_value::allocation_classes;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Mechanism {
    PostedPrice(PostedPriceMechanism),
    LoserPay(LoserPayMechanism),
    Menu(MenuMechanism),
    Direct(DirectMechanism),
}

impl Mechanism {
    /// Revenue recorded by the constructor; tables carry none.
    pub fn claimed_revenue(&self) -> Option<f64> {
        match self {
            Mechanism::PostedPrice(m) => Some(m.revenue),
            Mechanism::LoserPay(m) => Some(m.revenue),
            Mechanism::Menu(m) => Some(m.revenue),
            Mechanism::Direct(_) => None,
        }
    }

    pub fn to_direct(&self, inst: &Instance) -> Result<DirectMechanism> {
        match self {
            Mechanism::PostedPrice(m) => posted_price_to_direct(m, inst),
            Mechanism::LoserPay(m) => loser_pay_to_direct(m, inst),
            Mechanism::Menu(m) => menu_to_direct(m, inst),
            Mechanism::Direct(d) => {
                d.check_shape(inst).map_err(|e| Error::Usage(e.to_string()))?;
                Ok(d.clone())
            }
        }
    }
}

impl From<PostedPriceMechanism> for Mechanism {
    fn from(m: PostedPriceMechanism) -> Self {
        Mechanism::PostedPrice(m)
    }
}

impl From<LoserPayMechanism> for Mechanism {
    fn from(m: LoserPayMechanism) -> Self {
        Mechanism::LoserPay(m)
    }
}

impl From<MenuMechanism> for Mechanism {
    fn from(m: MenuMechanism) -> Self {
        Mechanism::Menu(m)
    }
}

impl From<DirectMechanism> for Mechanism {
    fn from(d: DirectMechanism) -> Self {
        Mechanism::Direct(d)
    }
}

/// Converts any mechanism to its outcome tables over value profiles.
pub fn to_direct(mech: &Mechanism, inst: &Instance) -> Result<DirectMechanism> {
    mech.to_direct(inst)
}

fn require_single(inst: &Instance, what: &str) -> Result<()> {
    if inst.n() != 1 {
        return Err(Error::Usage(format!(
            "{what} is a single-buyer mechanism but the instance has n = {}",
            inst.n()
        )));
    }
    Ok(())
}

fn posted_price_to_direct(m: &PostedPriceMechanism, inst: &Instance) -> Result<DirectMechanism> {
    require_single(inst, "a posted price")?;
    if inst.values().get(m.v_star_index) != Some(&m.v_star) {
        return Err(Error::Usage(format!(
            "threshold {} at index {} is not on the value grid",
            m.v_star, m.v_star_index
        )));
    }
    let option = MenuOption::new(1.0, m.p_high, 0.0).map_err(|e| Error::Usage(e.to_string()))?;
    let options: Vec<Option<MenuOption>> = (0..inst.k())
        .map(|k| (k >= m.v_star_index).then_some(option))
        .collect();
    Ok(options_to_direct(&options, inst))
}

fn menu_to_direct(m: &MenuMechanism, inst: &Instance) -> Result<DirectMechanism> {
    require_single(inst, "a menu")?;
    if m.choice.len() != inst.k() {
        return Err(Error::Usage(format!(
            "menu has choices for {} values, instance has {}",
            m.choice.len(),
            inst.k()
        )));
    }
    let mut options = Vec::with_capacity(inst.k());
    for c in &m.choice {
        let opt = match c {
            None => None,
            Some(i) => {
                let opt = *m.options.get(*i).ok_or_else(|| {
                    Error::Usage(format!("menu choice {i} is not one of the options"))
                })?;
                opt.validate().map_err(|e| Error::Usage(e.to_string()))?;
                Some(opt)
            }
        };
        options.push(opt);
    }
    Ok(options_to_direct(&options, inst))
}

/// Single-buyer table where value `k` receives `options[k]`.
fn options_to_direct(options: &[Option<MenuOption>], inst: &Instance) -> DirectMechanism {
    let mut d = DirectMechanism::zeros(inst);
    let top = inst.m() - 1;
    for (k, opt) in options.iter().enumerate() {
        let o = opt.unwrap_or(MenuOption::NULL);
        d.y1[0][top][k] += o.x * o.w1;
        d.y1[0][0][k] += o.x * (1.0 - o.w1);
        d.y0[0][top][k] += (1.0 - o.x) * o.w0;
        d.y0[0][0][k] += (1.0 - o.x) * (1.0 - o.w0);
    }
    d
}

fn loser_pay_to_direct(m: &LoserPayMechanism, inst: &Instance) -> Result<DirectMechanism> {
    let k_count = inst.k();
    if m.n != inst.n() || m.x.len() != k_count || m.q.len() != k_count || m.phi_ironed.len() != k_count {
        return Err(Error::Usage(format!(
            "loser-pay auction for n = {} over {} values does not match the instance (n = {}, K = {})",
            m.n,
            m.x.len(),
            inst.n(),
            k_count
        )));
    }
    if let Some(bad) = m.q.iter().find(|q| !(0.0..=1.0).contains(*q)) {
        return Err(Error::Usage(format!("loser payment probability {bad} is not in [0, 1]")));
    }
    let classes = allocation_classes(&m.phi_ironed, m.reserve_index);
    let mut d = DirectMechanism::zeros(inst);
    let top = inst.m() - 1;
    let profiles = inst.profiles();
    let mut profile = vec![0; inst.n()];
    for p in 0..profiles.len() {
        profiles.decode(p, &mut profile);
        let best = profile.iter().filter_map(|&k| classes[k]).max();
        let winners = profile
            .iter()
            .filter(|&&k| best.is_some() && classes[k] == best)
            .count();
        for (i, &k) in profile.iter().enumerate() {
            let share = if best.is_some() && classes[k] == best {
                1.0 / winners as f64
            } else {
                0.0
            };
            d.y1[i][0][p] = share;
            d.y0[i][top][p] = (1.0 - share) * m.q[k];
            d.y0[i][0][p] = (1.0 - share) * (1.0 - m.q[k]);
        }
    }
    Ok(d)
}
