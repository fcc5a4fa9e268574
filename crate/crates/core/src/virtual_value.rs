//! Virtual values for risk-loving buyers and their ironing.
//!
//! The single-buyer virtual value at index `k` is the marginal revenue of
//! lowering a randomized take-it-or-leave-it threshold from `v_{k+1}` to
//! `v_k`, divided by `f(v_k) z_M`:
//!
//! ```text
//! phi(k) = [ S(k) r(v_k) - S(k+1) r(v_{k+1}) ] / f(v_k)
//! ```
//!
//! with `S(k) = Pr[t >= v_k]` and `r` the acceptance ratio. The multi-buyer
//! version multiplies each `r(v)` by `e^{alpha v}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::utility::{acceptance_ratio, Utility};

/// Differences below this are ties when testing strict monotonicity.
pub const REGULARITY_TOL: f64 = 1e-12;

/// Ironed values above this are positive for reserve purposes.
pub const RESERVE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VirtualKind {
    Single,
    Multi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VirtualValues {
    pub kind: VirtualKind,
    pub phi: Vec<f64>,
    pub regular: bool,
}

impl VirtualValues {
    pub fn new(kind: VirtualKind, phi: Vec<f64>) -> Self {
        let regular = strictly_increasing(&phi);
        VirtualValues { kind, phi, regular }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IronedVirtualValues {
    pub phi_ironed: Vec<f64>,
    /// Inclusive, zero-based index ranges that were averaged.
    pub intervals: Vec<(usize, usize)>,
    /// Smallest index with a positive ironed virtual value.
    pub reserve_index: Option<usize>,
}

fn strictly_increasing(phi: &[f64]) -> bool {
    phi.windows(2).all(|w| w[1] - w[0] > REGULARITY_TOL)
}

/// Definition of the single-buyer virtual values, for exponential or
/// linear utility. Depends only on the marginal distribution, so `n` is
/// ignored.
pub fn virtual_values_single(inst: &Instance) -> Result<VirtualValues> {
    let u = inst.utility();
    if let Utility::Quadratic { .. } = u {
        return Err(Error::UnsupportedUtility {
            kind: u.kind_name(),
            operation: "single-buyer virtual values",
        });
    }
    let z_max = inst.z_max();
    let ratios = inst
        .values()
        .iter()
        .map(|&v| acceptance_ratio(u, v, z_max))
        .collect::<Result<Vec<_>>>()?;
    Ok(VirtualValues::new(
        VirtualKind::Single,
        telescoped(inst, &ratios),
    ))
}

/// Multi-buyer virtual values; each acceptance ratio carries the extra
/// `e^{alpha v}` factor from competition.
pub fn virtual_values_multi(inst: &Instance) -> Result<VirtualValues> {
    if inst.n() < 2 {
        return Err(Error::Usage(format!(
            "multi-buyer virtual values need n >= 2, got n = {}",
            inst.n()
        )));
    }
    let (alpha, _) = inst.require_exponential("multi-buyer virtual values")?;
    let denom = -(-alpha * inst.z_max()).exp_m1();
    // e^{alpha v} r(v) = (e^{alpha v} - 1) / (1 - e^{-alpha z_M})
    let scaled: Vec<f64> = inst
        .values()
        .iter()
        .map(|&v| (alpha * v).exp_m1() / denom)
        .collect();
    Ok(VirtualValues::new(VirtualKind::Multi, telescoped(inst, &scaled)))
}

/// Single-buyer values for `n = 1`, multi-buyer values otherwise.
pub fn virtual_values(inst: &Instance) -> Result<VirtualValues> {
    if inst.n() == 1 {
        virtual_values_single(inst)
    } else {
        virtual_values_multi(inst)
    }
}

fn telescoped(inst: &Instance, g: &[f64]) -> Vec<f64> {
    let k_count = inst.k();
    (0..k_count)
        .map(|k| {
            let here = inst.tail_mass(k) * g[k];
            let next = if k + 1 < k_count {
                inst.tail_mass(k + 1) * g[k + 1]
            } else {
                0.0
            };
            (here - next) / inst.pmf()[k]
        })
        .collect()
}

pub fn is_regular(vv: &VirtualValues) -> bool {
    strictly_increasing(&vv.phi)
}

struct Block {
    start: usize,
    end: usize,
    mass: f64,
    weighted: f64,
}

impl Block {
    fn mean(&self) -> f64 {
        self.weighted / self.mass
    }
}

/// Irons `vv` by taking the lower convex envelope of the curve
/// `k -> (sum_{l<=k} f(v_l), sum_{l<=k} f(v_l) phi(l))`.
///
/// Slopes of the envelope are found by pooling adjacent violators: each
/// index starts as its own block and neighbouring blocks merge while the
/// left block's f-weighted mean exceeds the right one's. Blocks with equal
/// means stay separate, so flat stretches of `phi` are not reported as
/// ironed intervals.
pub fn iron(vv: &VirtualValues, inst: &Instance) -> Result<IronedVirtualValues> {
    let f = inst.pmf();
    if vv.phi.len() != f.len() {
        return Err(Error::Shape(format!(
            "{} virtual values for {} values",
            vv.phi.len(),
            f.len()
        )));
    }
    let scale = vv.phi.iter().fold(1.0f64, |m, p| m.max(p.abs()));
    let tol = REGULARITY_TOL * scale;

    let mut blocks: Vec<Block> = Vec::with_capacity(f.len());
    for (k, (&phi, &mass)) in vv.phi.iter().zip(f).enumerate() {
        blocks.push(Block {
            start: k,
            end: k,
            mass,
            weighted: mass * phi,
        });
        while blocks.len() >= 2 {
            let last = blocks.len() - 1;
            if blocks[last - 1].mean() <= blocks[last].mean() + tol {
                break;
            }
            let right = blocks.pop().unwrap();
            let left = blocks.last_mut().unwrap();
            left.end = right.end;
            left.mass += right.mass;
            left.weighted += right.weighted;
        }
    }

    let mut phi_ironed = vv.phi.clone();
    let mut intervals = Vec::new();
    for b in blocks.iter().filter(|b| b.end > b.start) {
        let mean = b.mean();
        phi_ironed[b.start..=b.end].iter_mut().for_each(|p| *p = mean);
        intervals.push((b.start, b.end));
    }
    let reserve_index = phi_ironed.iter().position(|&p| p > RESERVE_TOL);
    Ok(IronedVirtualValues {
        phi_ironed,
        intervals,
        reserve_index,
    })
}

/// Ranking classes used by the loser-pay allocation.
///
/// Indices at or above `reserve` are grouped into classes of consecutive
/// ironed values that differ by at most [`REGULARITY_TOL`]; a higher class
/// beats a lower one and equal classes tie. Indices below the reserve never
/// win and get `None`.
pub fn allocation_classes(phi_ironed: &[f64], reserve: Option<usize>) -> Vec<Option<usize>> {
    let mut out = vec![None; phi_ironed.len()];
    let Some(start) = reserve else {
        return out;
    };
    let mut class = 0;
    for k in start..phi_ironed.len() {
        if k > start && phi_ironed[k] - phi_ironed[k - 1] > REGULARITY_TOL {
            class += 1;
        }
        out[k] = Some(class);
    }
    out
}

/// Virtual values appropriate for `inst.n()`, ironed.
pub fn ironed_virtual_values(inst: &Instance) -> Result<(VirtualValues, IronedVirtualValues)> {
    let vv = virtual_values(inst)?;
    let ironed = iron(&vv, inst)?;
    Ok((vv, ironed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::LN_2;

    fn two_point(alpha: f64, n: usize) -> Instance {
        Instance::new(
            vec![0.0, 1.0],
            vec![0.5, 0.5],
            vec![0.0, 2.0],
            n,
            Utility::exponential(alpha, 1.0),
        )
        .unwrap()
    }

    fn myerson_instance(u: Utility) -> Instance {
        Instance::new(vec![0.0, 1.0, 2.0], vec![0.3, 0.1, 0.6], vec![0.0, 3.0], 1, u).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn single_two_point() {
        let vv = virtual_values_single(&two_point(LN_2, 1)).unwrap();
        assert!(close(&vv.phi, &[-2.0 / 3.0, 2.0 / 3.0], 1e-15));
        assert!(vv.regular);
        assert!(is_regular(&vv));
    }

    #[test]
    fn linear_reduces_to_discrete_myerson() {
        let inst = myerson_instance(Utility::linear(1.0));
        let vv = virtual_values_single(&inst).unwrap();
        let z = inst.z_max();
        let scaled: Vec<f64> = vv.phi.iter().map(|p| p * z).collect();
        assert!(close(&scaled, &[-7.0 / 3.0, -5.0, 2.0], 1e-12));
        assert!(!vv.regular);
    }

    #[test]
    fn single_value_instance() {
        let inst = Instance::new(vec![0.0], vec![1.0], vec![0.0, 1.0], 1, Utility::exponential(1.0, 1.0)).unwrap();
        let vv = virtual_values_single(&inst).unwrap();
        assert_eq!(vv.phi, vec![0.0]);
        assert!(is_regular(&vv));
        let multi = virtual_values_multi(&inst.with_buyers(3).unwrap()).unwrap();
        assert_eq!(multi.phi, vec![0.0]);
    }

    #[test]
    fn multi_two_point_doubles() {
        let vv = virtual_values_multi(&two_point(LN_2, 2)).unwrap();
        assert!(close(&vv.phi, &[-4.0 / 3.0, 4.0 / 3.0], 1e-14));
    }

    #[test]
    fn multi_small_alpha_limit() {
        let inst = two_point(1e-8, 2);
        let multi = virtual_values_multi(&inst).unwrap();
        let single = virtual_values_single(&inst).unwrap();
        assert!(close(&multi.phi, &single.phi, 1e-6));
        // Myerson values (-1, 1) in units of z_M
        let scaled: Vec<f64> = multi.phi.iter().map(|p| p * 2.0).collect();
        assert!(close(&scaled, &[-1.0, 1.0], 1e-6));
    }

    #[test]
    fn multi_rejects_bad_inputs() {
        assert!(matches!(
            virtual_values_multi(&two_point(0.5, 1)),
            Err(Error::Usage(_))
        ));
        let lin = myerson_instance(Utility::linear(1.0)).with_buyers(2).unwrap();
        assert!(matches!(
            virtual_values_multi(&lin),
            Err(Error::UnsupportedUtility { .. })
        ));
        let quad = Instance::new(vec![0.0, 0.5], vec![0.5, 0.5], vec![0.0, 1.0], 1, Utility::quadratic(1.0, 1.0)).unwrap();
        assert!(virtual_values_single(&quad).is_err());
    }

    #[test]
    fn regular_is_fixed_point() {
        let inst = two_point(LN_2, 1);
        let vv = virtual_values_single(&inst).unwrap();
        let ironed = iron(&vv, &inst).unwrap();
        assert_eq!(ironed.phi_ironed, vv.phi);
        assert!(ironed.intervals.is_empty());
        assert_eq!(ironed.reserve_index, Some(1));
    }

    #[test]
    fn irons_myerson_example() {
        let inst = myerson_instance(Utility::linear(1.0));
        let vv = virtual_values_single(&inst).unwrap();
        let ironed = iron(&vv, &inst).unwrap();
        let scaled: Vec<f64> = ironed.phi_ironed.iter().map(|p| p * 3.0).collect();
        assert!(close(&scaled, &[-3.0, -3.0, 2.0], 1e-12));
        assert_eq!(ironed.intervals, vec![(0, 1)]);
        assert_eq!(ironed.reserve_index, Some(2));
    }

    #[test]
    fn all_negative_has_no_reserve() {
        let inst = myerson_instance(Utility::linear(1.0));
        let vv = VirtualValues::new(VirtualKind::Single, vec![-1.0, -3.0, -0.5]);
        let ironed = iron(&vv, &inst).unwrap();
        assert_eq!(ironed.reserve_index, None);
    }

    #[test]
    fn allocation_classes_group_ties() {
        let phi = [-1.0, 0.5, 0.5, 0.5 + 1e-13, 2.0];
        assert_eq!(
            allocation_classes(&phi, Some(1)),
            vec![None, Some(0), Some(0), Some(0), Some(1)]
        );
        assert_eq!(allocation_classes(&phi, None), vec![None; 5]);
    }

    #[test]
    fn regularity_examples() {
        let reg = VirtualValues::new(VirtualKind::Single, vec![-2.0 / 3.0, 2.0 / 3.0]);
        assert!(is_regular(&reg));
        let irr = VirtualValues::new(VirtualKind::Single, vec![-7.0 / 3.0, -5.0, 2.0]);
        assert!(!is_regular(&irr));
        assert!(is_regular(&VirtualValues::new(VirtualKind::Single, vec![0.3])));
        // ties count as irregular
        assert!(!is_regular(&VirtualValues::new(VirtualKind::Single, vec![1.0, 1.0])));
    }

    /// Lower convex envelope by brute force: at every breakpoint, the
    /// minimum over all chords spanning it.
    fn brute_envelope_slopes(phi: &[f64], f: &[f64]) -> Vec<f64> {
        let k = phi.len();
        let mut xs = vec![0.0; k + 1];
        let mut ys = vec![0.0; k + 1];
        for i in 0..k {
            xs[i + 1] = xs[i] + f[i];
            ys[i + 1] = ys[i] + f[i] * phi[i];
        }
        let env: Vec<f64> = (0..=k)
            .map(|t| {
                let mut best = ys[t];
                for a in 0..=t {
                    for b in t..=k {
                        if a < b {
                            let w = (xs[t] - xs[a]) / (xs[b] - xs[a]);
                            best = best.min(ys[a] + w * (ys[b] - ys[a]));
                        }
                    }
                }
                best
            })
            .collect();
        (0..k).map(|i| (env[i + 1] - env[i]) / f[i]).collect()
    }

    fn random_instance(values: usize, seed_f: &[f64], alpha: f64, zm_mult: f64, n: usize) -> Instance {
        let total: f64 = seed_f[..values].iter().sum();
        let mut pmf: Vec<f64> = seed_f[..values].iter().map(|w| w / total).collect();
        let drift: f64 = 1.0 - pmf.iter().sum::<f64>();
        pmf[0] += drift;
        let vals: Vec<f64> = (0..values).map(|i| i as f64 * 0.7).collect();
        let z = vals[values - 1] * zm_mult + 0.5;
        Instance::new(vals, pmf, vec![0.0, z], n, Utility::exponential(alpha, 1.3)).unwrap()
    }

    proptest! {
        #[test]
        fn ironing_matches_brute_envelope(
            phi in prop::collection::vec(-5.0f64..5.0, 1..8),
            w in prop::collection::vec(0.05f64..1.0, 8),
        ) {
            let k = phi.len();
            let inst = random_instance(k, &w, 0.5, 2.0, 1);
            let vv = VirtualValues::new(VirtualKind::Single, phi.clone());
            let ironed = iron(&vv, &inst).unwrap();
            let brute = brute_envelope_slopes(&phi, inst.pmf());
            prop_assert!(close(&ironed.phi_ironed, &brute, 1e-9));

            // monotone, mass preserving, idempotent
            prop_assert!(ironed.phi_ironed.windows(2).all(|p| p[1] >= p[0] - 1e-12));
            let before: f64 = phi.iter().zip(inst.pmf()).map(|(p, f)| p * f).sum();
            let after: f64 = ironed.phi_ironed.iter().zip(inst.pmf()).map(|(p, f)| p * f).sum();
            prop_assert!((before - after).abs() < 1e-9);
            let again = iron(&VirtualValues::new(VirtualKind::Single, ironed.phi_ironed.clone()), &inst).unwrap();
            prop_assert_eq!(&again.phi_ironed, &ironed.phi_ironed);

            // untouched outside intervals, averaged inside
            for k in 0..phi.len() {
                let inside = ironed.intervals.iter().find(|(a, b)| *a <= k && k <= *b);
                match inside {
                    None => prop_assert_eq!(ironed.phi_ironed[k], phi[k]),
                    Some(&(a, b)) => {
                        let f = inst.pmf();
                        let avg = (a..=b).map(|l| f[l] * phi[l]).sum::<f64>() / (a..=b).map(|l| f[l]).sum::<f64>();
                        prop_assert!((ironed.phi_ironed[k] - avg).abs() < 1e-12);
                    }
                }
            }
        }

        #[test]
        fn single_buyer_telescoping(
            k in 1usize..7,
            w in prop::collection::vec(0.05f64..1.0, 7),
            alpha in 0.05f64..1.5,
            zm in 1.05f64..6.0,
        ) {
            let inst = random_instance(k, &w, alpha, zm, 1);
            let vv = virtual_values_single(&inst).unwrap();
            let z = inst.z_max();
            for k0 in 0..k {
                let lhs: f64 = (k0..k).map(|l| inst.pmf()[l] * vv.phi[l] * z).sum();
                let r = acceptance_ratio(inst.utility(), inst.values()[k0], z).unwrap();
                let rhs = inst.tail_mass(k0) * z * r;
                prop_assert!((lhs - rhs).abs() < 1e-9);
            }
        }

        #[test]
        fn myerson_reduction_exact(
            k in 2usize..7,
            w in prop::collection::vec(0.05f64..1.0, 7),
            slope in 0.1f64..4.0,
        ) {
            let base = random_instance(k, &w, 1.0, 2.0, 1);
            let inst = Instance::new(base.values().to_vec(), base.pmf().to_vec(), base.payments().to_vec(), 1, Utility::linear(slope)).unwrap();
            let vv = virtual_values_single(&inst).unwrap();
            let (v, f, z) = (inst.values(), inst.pmf(), inst.z_max());
            for i in 0..k - 1 {
                let myerson = v[i] * f[i] - (v[i + 1] - v[i]) * inst.tail_mass(i + 1);
                prop_assert!((f[i] * vv.phi[i] * z - myerson).abs() < 1e-12);
            }
        }

        #[test]
        fn multi_minus_single(
            k in 1usize..7,
            w in prop::collection::vec(0.05f64..1.0, 7),
            alpha in 0.05f64..1.5,
            zm in 1.05f64..6.0,
            n in 2usize..4,
        ) {
            let inst = random_instance(k, &w, alpha, zm, n);
            let single = virtual_values_single(&inst).unwrap();
            let multi = virtual_values_multi(&inst).unwrap();
            let (v, f, z) = (inst.values(), inst.pmf(), inst.z_max());
            let r = |i: usize| acceptance_ratio(inst.utility(), v[i], z).unwrap();
            for i in 0..k {
                let lhs = (multi.phi[i] - single.phi[i]) * f[i];
                let mut rhs = inst.tail_mass(i) * (alpha * v[i]).exp_m1() * r(i);
                if i + 1 < k {
                    rhs -= inst.tail_mass(i + 1) * (alpha * v[i + 1]).exp_m1() * r(i + 1);
                }
                prop_assert!((lhs - rhs).abs() < 1e-9);
            }
        }
    }
}
