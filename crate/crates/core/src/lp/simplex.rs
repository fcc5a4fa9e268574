//! Dense two-phase primal simplex for bounded variables.
//!
//! Solves `max c.x` subject to sparse `<=` / `=` rows and `0 <= x <= upper`.
//! The entering column is the smallest index that prices out (Bland). The
//! leaving row comes from a two-pass Harris ratio test that takes the largest
//! pivot among nearly tied rows; after a long run of degenerate pivots ties
//! go to the smallest basic column instead, so the method cannot cycle.
//!
//! The revenue LP is badly conditioned when `alpha * z_M` is large: payments
//! differ in utility by factors like `e^{-alpha z}`, and bases built from
//! such columns have condition numbers far beyond `f64`. Rows are scaled to
//! unit maximum coefficient, the tableau is kept in double-double arithmetic,
//! and the final basis is validated in that arithmetic. If validation fails
//! the solve is repeated with binary floats of a few hundred and then a
//! thousand bits. The tableau is rebuilt from the original matrix by
//! Gauss-Jordan elimination every few hundred pivots and before optimality
//! is accepted.

use dashu_float::round::mode::HalfEven;
use dashu_float::FBig;
use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use crate::error::{Error, Result};
use crate::lp::model::Sense;

/// Ratios closer than this (relative) count as tied.
const TIE_TOL: f64 = 1e-20;
/// Bound violation a basic variable may take on to allow a larger pivot.
const FEAS_TOL: f64 = 1e-12;
/// Largest bound violation or scaled row residual a validated solution has.
const VALID_TOL: f64 = 1e-11;
/// Consecutive degenerate pivots after which ties are broken by Bland's rule.
const BLAND_AFTER: usize = 50;
const REINVERT_EVERY: usize = 200;
const MAX_ITERATIONS: usize = 200_000;

/// Working arithmetic of one attempt: the double-double tableau pivots on
/// nothing below 1e-11, the wide ones resolve much smaller entries.
#[derive(Debug, Clone, Copy)]
enum Precision {
    Double,
    Bits(usize),
}

impl Precision {
    fn pivot_tol(self) -> f64 {
        match self {
            Precision::Double => 1e-11,
            Precision::Bits(_) => 1e-30,
        }
    }
}

const ATTEMPTS: [Precision; 3] = [Precision::Double, Precision::Bits(320), Precision::Bits(1280)];

/// Arithmetic used by the tableau.
trait Scalar: Clone {
    fn from_f64(x: f64, p: Precision) -> Self;
    /// Nearest `f64`; used for signs, comparisons with tolerances and output.
    fn approx(&self) -> f64;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
}

impl Scalar for TwoFloat {
    fn from_f64(x: f64, _: Precision) -> Self {
        TwoFloat::from(x)
    }
    fn approx(&self) -> f64 {
        self.hi()
    }
    fn add(&self, o: &Self) -> Self {
        *self + *o
    }
    fn sub(&self, o: &Self) -> Self {
        *self - *o
    }
    fn mul(&self, o: &Self) -> Self {
        *self * *o
    }
    fn div(&self, o: &Self) -> Self {
        *self / *o
    }
    fn neg(&self) -> Self {
        -*self
    }
}

type Big = FBig<HalfEven, 2>;

impl Scalar for Big {
    fn from_f64(x: f64, p: Precision) -> Self {
        let bits = match p {
            Precision::Bits(b) => b,
            Precision::Double => 106,
        };
        Big::try_from(x).expect("finite coefficient").with_precision(bits).value()
    }
    fn approx(&self) -> f64 {
        self.to_f64().value()
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn neg(&self) -> Self {
        -self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective: f64,
    /// Values of the structural variables; empty when infeasible.
    pub x: Vec<f64>,
    pub iterations: usize,
}

/// Sparse coefficients, sense and right-hand side of one constraint.
pub type BoundedRow = (Vec<(usize, f64)>, Sense, f64);

/// A bounded-variable LP in row form.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundedLp {
    pub objective: Vec<f64>,
    pub upper: Vec<f64>,
    pub rows: Vec<BoundedRow>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum ColKind {
    Structural,
    Slack,
    Artificial,
}

/// Rows scaled to unit maximum coefficient, with slack and artificial
/// columns appended, shared by every attempt.
struct Standard {
    m: usize,
    ncol: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    upper: Vec<f64>,
    kind: Vec<ColKind>,
    basis: Vec<usize>,
}

impl Standard {
    fn new(lp: &BoundedLp) -> Result<Self> {
        let nv = lp.objective.len();
        let m = lp.rows.len();
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nv];
        let mut kind = vec![ColKind::Structural; nv];
        let mut upper = lp.upper.clone();
        let mut b = vec![0.0; m];
        let mut basis = vec![usize::MAX; m];

        for (r, (coeffs, sense, rhs)) in lp.rows.iter().enumerate() {
            let norm = coeffs.iter().fold(0.0f64, |s, (_, a)| s.max(a.abs()));
            let norm = if norm > 0.0 { norm } else { 1.0 };
            let sign: f64 = if *rhs < 0.0 { -1.0 } else { 1.0 };
            b[r] = sign * rhs / norm;
            for &(c, a) in coeffs {
                if c >= nv {
                    return Err(Error::Solver(format!("row {r} references column {c} of {nv}")));
                }
                if !a.is_finite() {
                    return Err(Error::Solver(format!("row {r} has coefficient {a}")));
                }
                cols[c].push((r, sign * a / norm));
            }
            if *sense == Sense::Le {
                cols.push(vec![(r, sign)]);
                kind.push(ColKind::Slack);
                upper.push(f64::INFINITY);
                if sign > 0.0 {
                    basis[r] = cols.len() - 1;
                }
            }
        }
        for r in 0..m {
            if basis[r] == usize::MAX {
                cols.push(vec![(r, 1.0)]);
                kind.push(ColKind::Artificial);
                upper.push(f64::INFINITY);
                basis[r] = cols.len() - 1;
            }
        }

        let ncol = cols.len();
        let mut a = vec![0.0; m * ncol];
        for (c, entries) in cols.iter().enumerate() {
            for &(r, v) in entries {
                a[r * ncol + c] += v;
            }
        }
        Ok(Standard {
            m,
            ncol,
            a,
            b,
            upper,
            kind,
            basis,
        })
    }
}

struct Tableau<'s, T> {
    s: &'s Standard,
    p: Precision,
    m: usize,
    ncol: usize,
    upper: Vec<f64>,
    /// `B^{-1} A`, row major.
    t: Vec<T>,
    xb: Vec<T>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    at_upper: Vec<bool>,
    cost: Vec<f64>,
    reduced: Vec<T>,
    iterations: usize,
    /// Consecutive pivots that did not move the solution.
    degenerate_run: usize,
}

enum Step {
    Optimal,
    Moved,
}

impl<'s, T: Scalar> Tableau<'s, T> {
    fn new(s: &'s Standard, p: Precision) -> Self {
        let mut is_basic = vec![false; s.ncol];
        for &c in &s.basis {
            is_basic[c] = true;
        }
        Tableau {
            s,
            p,
            m: s.m,
            ncol: s.ncol,
            upper: s.upper.clone(),
            t: s.a.iter().map(|&v| T::from_f64(v, p)).collect(),
            xb: s.b.iter().map(|&v| T::from_f64(v, p)).collect(),
            basis: s.basis.clone(),
            is_basic,
            at_upper: vec![false; s.ncol],
            cost: vec![0.0; s.ncol],
            reduced: vec![T::from_f64(0.0, p); s.ncol],
            iterations: 0,
            degenerate_run: 0,
        }
    }

    fn num(&self, x: f64) -> T {
        T::from_f64(x, self.p)
    }

    fn set_cost(&mut self, cost: Vec<f64>) {
        self.cost = cost;
        self.refresh_reduced();
    }

    fn refresh_reduced(&mut self) {
        let nc = self.ncol;
        let mut d: Vec<T> = self.cost.iter().map(|&c| self.num(c)).collect();
        for r in 0..self.m {
            let cb = self.cost[self.basis[r]];
            if cb != 0.0 {
                let cb = self.num(cb);
                for (dc, t) in d.iter_mut().zip(&self.t[r * nc..(r + 1) * nc]) {
                    *dc = dc.sub(&t.mul(&cb));
                }
            }
        }
        for c in 0..nc {
            if self.is_basic[c] {
                d[c] = self.num(0.0);
            }
        }
        self.reduced = d;
    }

    /// Right-hand side with nonbasic columns at their upper bounds moved over.
    fn shifted_rhs(&self, r: usize) -> T {
        let nc = self.ncol;
        let mut rhs = self.num(self.s.b[r]);
        for c in (0..nc).filter(|&c| !self.is_basic[c] && self.at_upper[c]) {
            let a = self.s.a[r * nc + c];
            if a != 0.0 {
                rhs = rhs.sub(&self.num(a).mul(&self.num(self.upper[c])));
            }
        }
        rhs
    }

    /// Rebuilds `B^{-1} A` and the basic values from the original matrix by
    /// Gauss-Jordan elimination on the basic columns.
    fn reinvert(&mut self) -> Result<()> {
        let (m, nc) = (self.m, self.ncol);
        let w = nc + 1;
        let mut g: Vec<T> = Vec::with_capacity(m * w);
        for r in 0..m {
            g.extend(self.s.a[r * nc..(r + 1) * nc].iter().map(|&v| self.num(v)));
            g.push(self.shifted_rhs(r));
        }
        let mut used = vec![false; m];
        let mut new_basis = vec![usize::MAX; m];
        for &col in &self.basis {
            let (pr, mag) = (0..m)
                .filter(|&r| !used[r])
                .map(|r| (r, g[r * w + col].approx().abs()))
                .fold((usize::MAX, 0.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if mag == 0.0 {
                return Err(Error::Solver(format!(
                    "basis became singular at column {col} after {} iterations",
                    self.iterations
                )));
            }
            used[pr] = true;
            new_basis[pr] = col;
            let inv = self.num(1.0).div(&g[pr * w + col]);
            for x in &mut g[pr * w..(pr + 1) * w] {
                *x = x.mul(&inv);
            }
            let pivot_row: Vec<T> = g[pr * w..(pr + 1) * w].to_vec();
            for r in (0..m).filter(|&r| r != pr) {
                let factor = g[r * w + col].clone();
                if factor.approx() != 0.0 {
                    for (x, p) in g[r * w..(r + 1) * w].iter_mut().zip(&pivot_row) {
                        *x = x.sub(&factor.mul(p));
                    }
                }
            }
        }
        self.basis = new_basis;
        for r in 0..m {
            self.t[r * nc..(r + 1) * nc].clone_from_slice(&g[r * w..r * w + nc]);
            self.xb[r] = g[r * w + nc].clone();
        }
        self.refresh_reduced();
        Ok(())
    }

    fn entering(&self, tol: f64) -> Option<usize> {
        (0..self.ncol).find(|&c| {
            if self.is_basic[c] || (self.s.kind[c] == ColKind::Artificial && self.upper[c] == 0.0) {
                return false;
            }
            let d = self.reduced[c].approx();
            (d > tol && !self.at_upper[c] && self.upper[c] > 0.0) || (d < -tol && self.at_upper[c])
        })
    }

    /// Largest move of the entering column `q` in direction `sigma` allowed
    /// by basic row `r` when its bounds are relaxed by `relax`, with the
    /// signed pivot.
    fn ratio(&self, r: usize, q: usize, sigma: f64, relax: f64) -> Option<(T, T)> {
        let mut a = self.t[r * self.ncol + q].clone();
        if sigma < 0.0 {
            a = a.neg();
        }
        let col = self.basis[r];
        let tol = self.p.pivot_tol();
        let room = if a.approx() > tol {
            self.xb[r].clone()
        } else if a.approx() < -tol && self.upper[col].is_finite() {
            a = a.neg();
            self.num(self.upper[col]).sub(&self.xb[r])
        } else {
            return None;
        };
        let room = if room.approx() < 0.0 { self.num(0.0) } else { room };
        let limit = room.add(&self.num(relax)).div(&a);
        Some((limit, a))
    }

    fn step(&mut self, tol: f64) -> Result<Step> {
        let Some(q) = self.entering(tol) else {
            return Ok(Step::Optimal);
        };
        let nc = self.ncol;
        let sigma = if self.at_upper[q] { -1.0 } else { 1.0 };

        // Harris: the first pass finds the longest step that keeps every
        // basic variable within FEAS_TOL of its bounds, the second takes
        // the largest pivot among rows blocking before it. Under Bland's
        // rule the bounds are exact and ties go to the smallest column.
        let bland = self.degenerate_run >= BLAND_AFTER;
        let relax = if bland { 0.0 } else { FEAS_TOL };
        let mut theta: Option<T> = None;
        for r in 0..self.m {
            if let Some((l, _)) = self.ratio(r, q, sigma, relax) {
                if theta.as_ref().is_none_or(|t| l.sub(t).approx() < 0.0) {
                    theta = Some(l);
                }
            }
        }
        let mut best: Option<(T, usize, usize, f64)> = None;
        if let Some(theta) = theta {
            let cutoff = theta.add(&self.num(TIE_TOL * theta.approx().abs().max(1.0)));
            for r in 0..self.m {
                let Some((limit, a)) = self.ratio(r, q, sigma, 0.0) else { continue };
                if limit.sub(&cutoff).approx() > 0.0 {
                    continue;
                }
                let (col, mag) = (self.basis[r], a.approx().abs());
                let better = match best {
                    None => true,
                    Some((_, bc, _, bm)) if bland => col < bc || (col == bc && mag > bm),
                    Some((_, bc, _, bm)) => mag > bm || (mag == bm && col < bc),
                };
                if better {
                    best = Some((limit, col, r, mag));
                }
            }
        }

        let flip = self.upper[q];
        match &best {
            None if flip.is_infinite() => {
                return Err(Error::Solver(format!("LP is unbounded along column {q}")));
            }
            Some((limit, ..)) if limit.approx() < flip => {}
            _ => {
                // bound flip: the entering variable reaches its other bound first
                let shift = self.num(sigma * flip);
                for r in 0..self.m {
                    self.xb[r] = self.xb[r].sub(&self.t[r * nc + q].mul(&shift));
                }
                self.at_upper[q] = !self.at_upper[q];
                self.iterations += 1;
                self.degenerate_run = 0;
                return Ok(Step::Moved);
            }
        }

        let (step, _, r, _) = best.unwrap();
        let pivot = self.t[r * nc + q].clone();
        let signed_step = if sigma > 0.0 { step.clone() } else { step.neg() };
        for i in 0..self.m {
            self.xb[i] = self.xb[i].sub(&self.t[i * nc + q].mul(&signed_step));
        }
        let leaving = self.basis[r];
        self.at_upper[leaving] = sigma * pivot.approx() < 0.0;
        self.xb[r] = if sigma > 0.0 { step.clone() } else { self.num(self.upper[q]).sub(&step) };

        let inv = self.num(1.0).div(&pivot);
        for x in &mut self.t[r * nc..(r + 1) * nc] {
            *x = x.mul(&inv);
        }
        let (before, rest) = self.t.split_at_mut(r * nc);
        let (pivot_row, after) = rest.split_at_mut(nc);
        for row in before.chunks_exact_mut(nc).chain(after.chunks_exact_mut(nc)) {
            let factor = row[q].clone();
            if factor.approx() != 0.0 {
                for (x, p) in row.iter_mut().zip(pivot_row.iter()) {
                    *x = x.sub(&factor.mul(p));
                }
            }
        }
        let dq = self.reduced[q].clone();
        for (d, p) in self.reduced.iter_mut().zip(pivot_row.iter()) {
            *d = d.sub(&dq.mul(p));
        }
        self.basis[r] = q;
        self.is_basic[q] = true;
        self.is_basic[leaving] = false;
        self.at_upper[q] = false;
        self.reduced[q] = self.num(0.0);
        self.reduced[leaving] = dq.mul(&inv).neg();
        self.iterations += 1;
        self.degenerate_run = if step.approx() > 0.0 { 0 } else { self.degenerate_run + 1 };
        Ok(Step::Moved)
    }

    /// Pivots until no column prices out; optimality is only accepted on a
    /// freshly rebuilt tableau.
    fn optimize(&mut self, tol: f64) -> Result<()> {
        let mut since = 0;
        loop {
            if self.iterations > MAX_ITERATIONS {
                return Err(Error::Solver(format!(
                    "no optimum after {MAX_ITERATIONS} iterations"
                )));
            }
            match self.step(tol)? {
                Step::Moved => {
                    since += 1;
                    if since >= REINVERT_EVERY {
                        self.reinvert()?;
                        since = 0;
                    }
                }
                Step::Optimal if since == 0 => return Ok(()),
                Step::Optimal => {
                    self.reinvert()?;
                    since = 0;
                }
            }
        }
    }

    /// Replaces basic artificials at level zero by other columns where
    /// possible and pins every artificial to zero.
    fn retire_artificials(&mut self) -> Result<()> {
        let nc = self.ncol;
        let tol = self.p.pivot_tol();
        loop {
            let swap = (0..self.m)
                .filter(|&r| self.s.kind[self.basis[r]] == ColKind::Artificial)
                .find_map(|r| {
                    (0..nc)
                        .filter(|&c| !self.is_basic[c] && self.s.kind[c] != ColKind::Artificial)
                        .map(|c| (c, self.t[r * nc + c].approx().abs()))
                        .filter(|&(_, a)| a > tol)
                        .max_by(|a, b| a.1.total_cmp(&b.1))
                        .map(|(c, _)| (r, c))
                });
            let Some((r, c)) = swap else { break };
            let leaving = self.basis[r];
            self.basis[r] = c;
            self.is_basic[c] = true;
            self.is_basic[leaving] = false;
            self.at_upper[leaving] = false;
            self.at_upper[c] = false;
            self.reinvert()?;
        }
        for c in 0..nc {
            if self.s.kind[c] == ColKind::Artificial {
                self.upper[c] = 0.0;
                self.at_upper[c] = false;
            }
        }
        self.reinvert()
    }

    fn values(&self) -> Vec<T> {
        let mut x: Vec<T> = (0..self.ncol)
            .map(|c| self.num(if self.at_upper[c] { self.upper[c] } else { 0.0 }))
            .collect();
        for (r, &c) in self.basis.iter().enumerate() {
            x[c] = self.xb[r].clone();
        }
        x
    }

    /// Largest bound violation and scaled row residual of `x`, computed in
    /// the working arithmetic.
    fn violation(&self, x: &[T]) -> f64 {
        let nc = self.ncol;
        let bounds = x
            .iter()
            .zip(&self.upper)
            .map(|(v, &u)| {
                let below = -v.approx();
                let above = if u.is_finite() { v.sub(&self.num(u)).approx() } else { f64::NEG_INFINITY };
                below.max(above)
            })
            .fold(0.0, f64::max);
        let residual = (0..self.m)
            .map(|r| {
                let mut lhs = self.num(-self.s.b[r]);
                for (c, v) in x.iter().enumerate() {
                    let a = self.s.a[r * nc + c];
                    if a != 0.0 {
                        lhs = lhs.add(&self.num(a).mul(v));
                    }
                }
                lhs.approx().abs()
            })
            .fold(0.0, f64::max);
        bounds.max(residual)
    }
}

/// One solve in the given arithmetic. `Ok(None)` means the result did not
/// validate and a wider arithmetic should be tried.
fn attempt<T: Scalar>(s: &Standard, lp: &BoundedLp, p: Precision) -> Result<Option<LpSolution>> {
    let nv = lp.objective.len();
    let mut tab = Tableau::<T>::new(s, p);

    let phase_one: Vec<f64> = s
        .kind
        .iter()
        .map(|k| if *k == ColKind::Artificial { -1.0 } else { 0.0 })
        .collect();
    if phase_one.iter().any(|&c| c != 0.0) {
        tab.set_cost(phase_one);
        tab.optimize(1e-11)?;
        let infeasibility: f64 = tab
            .basis
            .iter()
            .zip(&tab.xb)
            .filter(|(c, _)| s.kind[**c] == ColKind::Artificial)
            .map(|(_, x)| x.approx().max(0.0))
            .sum();
        let scale = s.b.iter().fold(1.0f64, |acc, b| acc.max(b.abs()));
        if infeasibility > 1e-9 * scale {
            return Ok(Some(LpSolution {
                status: LpStatus::Infeasible,
                objective: f64::NAN,
                x: Vec::new(),
                iterations: tab.iterations,
            }));
        }
        tab.retire_artificials()?;
    }

    let mut cost = lp.objective.clone();
    cost.resize(s.ncol, 0.0);
    let scale = cost.iter().fold(0.0f64, |acc, c| acc.max(c.abs()));
    tab.set_cost(cost);
    tab.optimize(1e-11 * scale.max(1e-300))?;

    let x = tab.values();
    if tab.violation(&x) > VALID_TOL {
        return Ok(None);
    }
    let structural: Vec<f64> = x[..nv]
        .iter()
        .zip(&lp.upper)
        .map(|(v, &u)| v.approx().clamp(0.0, u))
        .collect();
    let objective = structural.iter().zip(&lp.objective).map(|(x, c)| x * c).sum();
    Ok(Some(LpSolution {
        status: LpStatus::Optimal,
        objective,
        x: structural,
        iterations: tab.iterations,
    }))
}

/// Solves `lp`, returning the optimal structural values or an infeasibility
/// verdict. Unboundedness and numerical breakdown in every arithmetic are
/// errors.
pub fn solve_bounded(lp: &BoundedLp) -> Result<LpSolution> {
    if lp.upper.len() != lp.objective.len() {
        return Err(Error::Solver("bounds and objective differ in length".into()));
    }
    if lp.upper.iter().any(|&u| u.is_nan() || u < 0.0) {
        return Err(Error::Solver("upper bounds must be non-negative".into()));
    }
    let s = Standard::new(lp)?;
    let mut last = Error::Solver("no attempt was made".into());
    let mut iterations = 0;
    for (n, &p) in ATTEMPTS.iter().enumerate() {
        let outcome = match p {
            Precision::Double => attempt::<TwoFloat>(&s, lp, p),
            Precision::Bits(_) => attempt::<Big>(&s, lp, p),
        };
        let final_attempt = n + 1 == ATTEMPTS.len();
        match outcome {
            // an infeasible verdict is rechecked in wider arithmetic
            Ok(Some(sol)) if sol.status == LpStatus::Optimal || final_attempt => {
                return Ok(LpSolution {
                    iterations: iterations + sol.iterations,
                    ..sol
                });
            }
            Ok(Some(sol)) => {
                iterations += sol.iterations;
                last = Error::Solver("LP reported infeasible".into());
            }
            Ok(None) => {
                last = Error::Solver(format!(
                    "solution did not validate to {VALID_TOL:e} in {p:?} arithmetic"
                ));
            }
            Err(e) => last = e,
        }
    }
    Err(last)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn le(coeffs: &[(usize, f64)], rhs: f64) -> (Vec<(usize, f64)>, Sense, f64) {
        (coeffs.to_vec(), Sense::Le, rhs)
    }

    #[test]
    fn textbook_problem() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 (upper bounds loose)
        let lp = BoundedLp {
            objective: vec![3.0, 5.0],
            upper: vec![f64::INFINITY; 2],
            rows: vec![le(&[(0, 1.0)], 4.0), le(&[(1, 2.0)], 12.0), le(&[(0, 3.0), (1, 2.0)], 18.0)],
        };
        let sol = solve_bounded(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective - 36.0).abs() < 1e-12);
        assert!((sol.x[0] - 2.0).abs() < 1e-12 && (sol.x[1] - 6.0).abs() < 1e-12);
    }

    #[test]
    fn bounds_and_equalities() {
        // max x + y + z, x + y + z = 2, each in [0, 1], x - y <= 0
        let lp = BoundedLp {
            objective: vec![1.0, 1.0, 1.0],
            upper: vec![1.0; 3],
            rows: vec![
                (vec![(0, 1.0), (1, 1.0), (2, 1.0)], Sense::Eq, 2.0),
                le(&[(0, 1.0), (1, -1.0)], 0.0),
            ],
        };
        let sol = solve_bounded(&lp).unwrap();
        assert!((sol.objective - 2.0).abs() < 1e-12);
        let sum: f64 = sol.x.iter().sum();
        assert!((sum - 2.0).abs() < 1e-12);
    }

    #[test]
    fn detects_infeasibility() {
        let lp = BoundedLp {
            objective: vec![1.0],
            upper: vec![1.0],
            rows: vec![(vec![(0, 1.0)], Sense::Eq, 2.0)],
        };
        assert_eq!(solve_bounded(&lp).unwrap().status, LpStatus::Infeasible);
        let negative = BoundedLp {
            objective: vec![1.0],
            upper: vec![1.0],
            rows: vec![le(&[(0, 1.0)], -1.0)],
        };
        assert_eq!(solve_bounded(&negative).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_is_an_error() {
        let lp = BoundedLp {
            objective: vec![1.0],
            upper: vec![f64::INFINITY],
            rows: vec![le(&[(0, -1.0)], 0.0)],
        };
        assert!(matches!(solve_bounded(&lp), Err(Error::Solver(_))));
    }

    #[test]
    fn degenerate_cycling_example() {
        // Beale's example, which cycles under the textbook largest-coefficient rule
        let lp = BoundedLp {
            objective: vec![0.75, -150.0, 0.02, -6.0],
            upper: vec![f64::INFINITY; 4],
            rows: vec![
                le(&[(0, 0.25), (1, -60.0), (2, -0.04), (3, 9.0)], 0.0),
                le(&[(0, 0.5), (1, -90.0), (2, -0.02), (3, 3.0)], 0.0),
                le(&[(2, 1.0)], 1.0),
            ],
        };
        let sol = solve_bounded(&lp).unwrap();
        assert!((sol.objective - 0.05).abs() < 1e-12);
    }

    #[test]
    fn wide_arithmetic_agrees() {
        let lp = BoundedLp {
            objective: vec![0.75, -150.0, 0.02, -6.0],
            upper: vec![f64::INFINITY; 4],
            rows: vec![
                le(&[(0, 0.25), (1, -60.0), (2, -0.04), (3, 9.0)], 0.0),
                le(&[(0, 0.5), (1, -90.0), (2, -0.02), (3, 3.0)], 0.0),
                le(&[(2, 1.0)], 1.0),
            ],
        };
        let s = Standard::new(&lp).unwrap();
        for p in [Precision::Bits(320), Precision::Bits(1280)] {
            let sol = attempt::<Big>(&s, &lp, p).unwrap().unwrap();
            assert!((sol.objective - 0.05).abs() < 1e-15);
        }
        let infeasible = BoundedLp {
            objective: vec![1.0],
            upper: vec![1.0],
            rows: vec![(vec![(0, 1.0)], Sense::Eq, 2.0)],
        };
        let s = Standard::new(&infeasible).unwrap();
        let sol = attempt::<Big>(&s, &infeasible, Precision::Bits(320)).unwrap().unwrap();
        assert_eq!(sol.status, LpStatus::Infeasible);
    }

    /// Best vertex of a two-variable box-constrained LP by intersecting
    /// every pair of boundary lines.
    fn brute_force_2d(c: [f64; 2], rows: &[([f64; 2], f64)]) -> Option<f64> {
        let mut lines: Vec<([f64; 2], f64)> = rows.to_vec();
        lines.extend([([1.0, 0.0], 0.0), ([1.0, 0.0], 1.0), ([0.0, 1.0], 0.0), ([0.0, 1.0], 1.0)]);
        let feasible = |x: [f64; 2]| {
            (-1e-9..=1.0 + 1e-9).contains(&x[0])
                && (-1e-9..=1.0 + 1e-9).contains(&x[1])
                && rows.iter().all(|(a, b)| a[0] * x[0] + a[1] * x[1] <= b + 1e-9)
        };
        let mut best: Option<f64> = None;
        for i in 0..lines.len() {
            for j in i + 1..lines.len() {
                let ([a, b], e) = lines[i];
                let ([c2, d], f) = lines[j];
                let det = a * d - b * c2;
                if det.abs() < 1e-12 {
                    continue;
                }
                let x = [(e * d - b * f) / det, (a * f - e * c2) / det];
                if feasible(x) {
                    let val = c[0] * x[0] + c[1] * x[1];
                    best = Some(best.map_or(val, |b: f64| b.max(val)));
                }
            }
        }
        best
    }

    proptest! {
        #[test]
        fn matches_vertex_enumeration(
            c in prop::array::uniform2(-3.0f64..3.0),
            rows in prop::collection::vec((prop::array::uniform2(-2.0f64..2.0), -0.5f64..2.0), 0..4),
        ) {
            let lp = BoundedLp {
                objective: c.to_vec(),
                upper: vec![1.0, 1.0],
                rows: rows.iter().map(|(a, b)| (vec![(0, a[0]), (1, a[1])], Sense::Le, *b)).collect(),
            };
            let sol = solve_bounded(&lp).unwrap();
            match brute_force_2d(c, &rows) {
                Some(best) => {
                    prop_assert_eq!(sol.status, LpStatus::Optimal);
                    prop_assert!((sol.objective - best).abs() < 1e-7, "{} vs {}", sol.objective, best);
                }
                None => prop_assert_eq!(sol.status, LpStatus::Infeasible),
            }
        }
    }
}
