//! Exact linear programming over the rationals.
//!
//! A dense fraction-free (integer-preserving) tableau simplex with bounded
//! variables, Dantzig pricing and a Bland fallback on degenerate stalls.
//! Programs can be re-optimised in place after adding a cut (dual simplex)
//! or swapping the objective (primal simplex). Every optimal solution carries shadow prices for the constraints and reduced
//! costs for the variables, so callers can audit primal feasibility, dual
//! feasibility and strong duality without trusting the pivoting code.
//!
//! Dual values follow the shadow-price convention: `duals[i]` is the rate of
//! change of the optimal objective as the right-hand side of constraint `i`
//! increases, in the sense of the program (so for a maximisation a binding
//! `<=` row has a non-negative dual).

use std::collections::HashSet;
use std::fmt::Write as _;

use num::{BigInt, Integer, One, Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::{to_f64, Q};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    /// Sparse `(variable, coefficient)` pairs.
    pub coeffs: Vec<(usize, Q)>,
    pub relation: Relation,
    pub rhs: Q,
}

impl Constraint {
    pub fn activity(&self, x: &[Q]) -> Q {
        self.coeffs.iter().fold(Q::zero(), |acc, (j, c)| acc + c * &x[*j])
    }
}

/// `optimise objective . x` subject to the constraints and per-variable
/// bounds. Variables default to `[0, +inf)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearProgram {
    sense: Sense,
    objective: Vec<Q>,
    constraints: Vec<Constraint>,
    lower: Vec<Option<Q>>,
    upper: Vec<Option<Q>>,
}

impl LinearProgram {
    pub fn new(sense: Sense, objective: Vec<Q>) -> Self {
        let n = objective.len();
        Self {
            sense,
            objective,
            constraints: Vec::new(),
            lower: vec![Some(Q::zero()); n],
            upper: vec![None; n],
        }
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }
    pub fn objective(&self) -> &[Q] {
        &self.objective
    }
    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }
    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }
    pub fn lower(&self, j: usize) -> Option<&Q> {
        self.lower[j].as_ref()
    }
    pub fn upper(&self, j: usize) -> Option<&Q> {
        self.upper[j].as_ref()
    }

    pub fn add_constraint(&mut self, coeffs: Vec<(usize, Q)>, relation: Relation, rhs: Q) -> usize {
        let coeffs = coeffs.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        self.constraints.push(Constraint { coeffs, relation, rhs });
        self.constraints.len() - 1
    }

    pub fn add_dense_constraint(&mut self, coeffs: &[Q], relation: Relation, rhs: Q) -> usize {
        let sparse = coeffs.iter().cloned().enumerate().collect();
        self.add_constraint(sparse, relation, rhs)
    }

    pub fn set_bounds(&mut self, j: usize, lower: Option<Q>, upper: Option<Q>) {
        self.lower[j] = lower;
        self.upper[j] = upper;
    }

    pub fn set_objective(&mut self, sense: Sense, objective: Vec<Q>) {
        self.sense = sense;
        self.objective = objective;
    }

    pub fn objective_value(&self, x: &[Q]) -> Q {
        self.objective.iter().zip(x).fold(Q::zero(), |acc, (c, v)| acc + c * v)
    }

    fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(Error::MalformedProgram("bound vectors do not match".into()));
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if let Some((j, _)) = c.coeffs.iter().find(|(j, _)| *j >= n) {
                return Err(Error::MalformedProgram(format!(
                    "constraint {i} references variable {j} of {n}"
                )));
            }
        }
        for j in 0..n {
            if let (Some(l), Some(u)) = (&self.lower[j], &self.upper[j]) {
                if l > u {
                    return Err(Error::MalformedProgram(format!("variable {j} has lower > upper")));
                }
            }
        }
        Ok(())
    }

    /// Plain-text dump in the CPLEX LP layout (coefficients as decimals).
    pub fn to_lp_format(&self) -> String {
        let mut out = String::new();
        let term_list = |terms: &mut dyn Iterator<Item = (usize, &Q)>| -> String {
            let mut s = String::new();
            for (j, c) in terms {
                let v = to_f64(c);
                let sign = if v < 0.0 { "-" } else { "+" };
                let _ = write!(s, " {sign} {} x{j}", v.abs());
            }
            if s.is_empty() {
                s.push_str(" 0 x0");
            }
            s
        };
        out.push_str(match self.sense {
            Sense::Minimize => "Minimize\n",
            Sense::Maximize => "Maximize\n",
        });
        let mut obj = self.objective.iter().enumerate().filter(|(_, c)| !c.is_zero());
        let _ = writeln!(out, " obj:{}", term_list(&mut obj));
        out.push_str("Subject To\n");
        for (i, c) in self.constraints.iter().enumerate() {
            let rel = match c.relation {
                Relation::Le => "<=",
                Relation::Eq => "=",
                Relation::Ge => ">=",
            };
            let mut terms = c.coeffs.iter().map(|(j, q)| (*j, q));
            let _ = writeln!(out, " c{i}:{} {rel} {}", term_list(&mut terms), to_f64(&c.rhs));
        }
        out.push_str("Bounds\n");
        for j in 0..self.num_vars() {
            match (&self.lower[j], &self.upper[j]) {
                (Some(l), Some(u)) => {
                    let _ = writeln!(out, " {} <= x{j} <= {}", to_f64(l), to_f64(u));
                }
                (Some(l), None) if l.is_zero() => {}
                (Some(l), None) => {
                    let _ = writeln!(out, " x{j} >= {}", to_f64(l));
                }
                (None, Some(u)) => {
                    let _ = writeln!(out, " -inf <= x{j} <= {}", to_f64(u));
                }
                (None, None) => {
                    let _ = writeln!(out, " x{j} free");
                }
            }
        }
        out.push_str("End\n");
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub primal: Vec<Q>,
    /// Shadow price per constraint.
    pub duals: Vec<Q>,
    /// `objective - A^T duals`, per variable.
    pub reduced_costs: Vec<Q>,
    pub objective: Q,
    pub pivots: usize,
}

impl LpSolution {
    fn without_solution(status: LpStatus, pivots: usize) -> Self {
        Self {
            status,
            primal: Vec::new(),
            duals: Vec::new(),
            reduced_costs: Vec::new(),
            objective: Q::zero(),
            pivots,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

#[derive(Debug, Clone)]
enum VarMap {
    /// `x = shift + z`
    Shift(Q, usize),
    /// `x = mirror - z`
    Mirror(Q, usize),
    /// `x = z+ - z-`
    Free(usize, usize),
}

/// Column whose original coefficients are a unit vector on a row of the
/// scaled system; its tableau column is the matching column of the basis
/// inverse. `factor` maps the negated reduced cost of that column onto the
/// shadow price of the user constraint, before the sense sign and the
/// objective scale are undone.
#[derive(Debug, Clone)]
struct RowRef {
    col: usize,
    factor: BigInt,
}

/// Consecutive degenerate pivots tolerated before falling back to Bland's rule.
const DEGENERATE_STREAK: usize = 32;

fn one() -> Q {
    Q::from_integer(1.into())
}

/// Positive integer clearing every denominator in `values`.
fn common_denominator<'a>(values: impl IntoIterator<Item = &'a Q>) -> BigInt {
    values.into_iter().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
}

fn scaled(v: &Q, scale: &BigInt) -> BigInt {
    v.numer() * (scale / v.denom())
}

/// A bounded-variable simplex that can be re-optimised after constraints
/// are added or the objective changes, starting from the previous basis.
///
/// The tableau is fraction-free: every entry is an integer numerator over
/// the shared positive denominator `det`, the basis determinant of the
/// integer-scaled system, so pivots use exact integer division. Basic
/// values are kept separately as rationals because nonbasic columns may sit
/// at their upper bounds.
#[derive(Debug, Clone)]
pub struct Simplex {
    program: LinearProgram,
    maps: Vec<VarMap>,
    rows: Vec<Vec<BigInt>>,
    cost_row: Vec<BigInt>,
    det: BigInt,
    basis: Vec<usize>,
    /// Current value of each row's basic column.
    values: Vec<Q>,
    /// Per column: upper bound (lower bounds are all zero).
    upper: Vec<Option<Q>>,
    /// Per column: nonbasic at its upper bound.
    at_upper: Vec<bool>,
    /// Columns that may never enter the basis.
    frozen: Vec<bool>,
    /// Positive factor clearing the denominators of the internal costs.
    cost_scale: BigInt,
    refs: Vec<Option<RowRef>>,
    status: LpStatus,
    pivots: usize,
}

impl Simplex {
    /// Builds the tableau and solves the program with two phases.
    pub fn new(lp: &LinearProgram) -> Result<Self> {
        lp.validate()?;
        let n = lp.num_vars();
        let mut maps = Vec::with_capacity(n);
        let mut upper: Vec<Option<Q>> = Vec::new();
        for j in 0..n {
            match (&lp.lower[j], &lp.upper[j]) {
                (Some(l), u) => {
                    maps.push(VarMap::Shift(l.clone(), upper.len()));
                    upper.push(u.as_ref().map(|u| u - l));
                }
                (None, Some(u)) => {
                    maps.push(VarMap::Mirror(u.clone(), upper.len()));
                    upper.push(None);
                }
                (None, None) => {
                    maps.push(VarMap::Free(upper.len(), upper.len() + 1));
                    upper.extend([None, None]);
                }
            }
        }
        let structural = upper.len();
        let internal: Vec<(Vec<(usize, Q)>, Relation, Q)> = lp
            .constraints
            .iter()
            .map(|c| {
                let (coeffs, rhs) = internal_row(&maps, c);
                (coeffs, c.relation, rhs)
            })
            .collect();

        let m = internal.len();
        let slacks = internal.iter().filter(|r| r.1 != Relation::Eq).count();
        // Rows whose slack can start in the basis need no artificial.
        let needs_art: Vec<bool> = internal
            .iter()
            .map(|(_, rel, b)| match rel {
                Relation::Le => b.is_negative(),
                Relation::Ge => b.is_positive(),
                Relation::Eq => true,
            })
            .collect();
        let arts = needs_art.iter().filter(|&&a| a).count();
        let width = structural + slacks + arts;
        upper.resize(width, None);

        let mut rows = Vec::with_capacity(m);
        let mut values = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        // Fixed columns can never move.
        let mut frozen: Vec<bool> = upper.iter().map(|u| u.as_ref().is_some_and(Zero::is_zero)).collect();
        let mut refs = Vec::with_capacity(m);
        let mut slack = structural;
        let mut art = structural + slacks;
        for (r, (coeffs, rel, b)) in internal.into_iter().enumerate() {
            // Stored as `sigma * scale * (a z - b) + kappa * slack = 0`, the
            // slack being rescaled so that its coefficient is a unit.
            let flip = match rel {
                Relation::Le | Relation::Eq => b.is_negative(),
                Relation::Ge => !b.is_positive(),
            };
            let scale = common_denominator(coeffs.iter().map(|(_, a)| a).chain([&b]));
            let signed = if flip { -scale.clone() } else { scale.clone() };
            let mut row = vec![BigInt::zero(); width];
            for (z, a) in &coeffs {
                row[*z] += scaled(a, &signed);
            }
            let sigma = if flip { -BigInt::one() } else { BigInt::one() };
            let reference = match rel {
                Relation::Eq => None,
                _ => {
                    let unit = if rel == Relation::Le { BigInt::one() } else { -BigInt::one() };
                    let kappa = &sigma * unit;
                    row[slack] = kappa.clone();
                    let r = RowRef { col: slack, factor: &sigma * &kappa * &scale };
                    slack += 1;
                    Some(r)
                }
            };
            let reference = if needs_art[r] {
                row[art] = BigInt::one();
                frozen[art] = true;
                basis.push(art);
                let eq_ref = RowRef { col: art, factor: &sigma * &scale };
                art += 1;
                reference.or(Some(eq_ref))
            } else {
                basis.push(reference.as_ref().expect("slack row").col);
                reference
            };
            refs.push(reference);
            rows.push(row);
            values.push(Q::from_integer(scaled(&b, &signed)));
        }

        let mut s = Simplex {
            program: lp.clone(),
            maps,
            rows,
            cost_row: Vec::new(),
            det: BigInt::one(),
            basis,
            values,
            upper,
            at_upper: vec![false; width],
            frozen,
            cost_scale: BigInt::one(),
            refs,
            status: LpStatus::Optimal,
            pivots: 0,
        };

        if arts > 0 {
            let art_start = structural + slacks;
            let phase_one: Vec<BigInt> =
                (0..width).map(|j| if j >= art_start { BigInt::one() } else { BigInt::zero() }).collect();
            s.price(&phase_one);
            s.primal();
            let infeasible = s
                .basis
                .iter()
                .zip(&s.values)
                .any(|(&b, v)| b >= art_start && v.is_positive());
            if infeasible {
                s.status = LpStatus::Infeasible;
                return Ok(s);
            }
            s.retire_artificials(art_start);
        }
        let costs = s.internal_costs();
        s.price(&costs);
        s.status = if s.primal() { LpStatus::Optimal } else { LpStatus::Unbounded };
        Ok(s)
    }

    /// Pivots basic artificials out, drops redundant rows, and removes every
    /// artificial column that is not the dual reference of an equality.
    fn retire_artificials(&mut self, art_start: usize) {
        let mut r = 0;
        while r < self.rows.len() {
            if self.basis[r] < art_start {
                r += 1;
                continue;
            }
            // The artificial sits at zero, so any nonzero entry gives a
            // degenerate pivot that keeps every value.
            if let Some(c) = (0..art_start).find(|&j| !self.rows[r][j].is_zero()) {
                let entering = self.nonbasic_value(c);
                self.pivot(r, c);
                self.values[r] = entering;
                r += 1;
            } else {
                // The artificial's column is a unit column of the basis, so
                // dropping it with its row leaves the determinant unchanged.
                self.rows.remove(r);
                self.values.remove(r);
                self.basis.remove(r);
            }
        }
        let width = self.frozen.len();
        let keep: Vec<bool> = (0..width)
            .map(|j| j < art_start || self.refs.iter().flatten().any(|rr| rr.col == j))
            .collect();
        let mut new_index = vec![usize::MAX; width];
        let mut next = 0;
        for j in 0..width {
            if keep[j] {
                new_index[j] = next;
                next += 1;
            }
        }
        for row in &mut self.rows {
            *row = row.drain(..).zip(&keep).filter(|(_, k)| **k).map(|(v, _)| v).collect();
        }
        retain_columns(&mut self.cost_row, &keep);
        retain_columns(&mut self.upper, &keep);
        retain_columns(&mut self.at_upper, &keep);
        let old_frozen = std::mem::take(&mut self.frozen);
        self.frozen = (0..width).filter(|&j| keep[j]).map(|j| j >= art_start || old_frozen[j]).collect();
        for b in &mut self.basis {
            *b = new_index[*b];
        }
        for rr in self.refs.iter_mut().flatten() {
            rr.col = new_index[rr.col];
        }
    }

    /// Internal costs in minimisation form, cleared of denominators; sets
    /// `cost_scale`.
    fn internal_costs(&mut self) -> Vec<BigInt> {
        let negate = self.program.sense == Sense::Maximize;
        let mut costs = vec![Q::zero(); self.frozen.len()];
        for (j, map) in self.maps.iter().enumerate() {
            let c = if negate { -&self.program.objective[j] } else { self.program.objective[j].clone() };
            match map {
                VarMap::Shift(_, z) => costs[*z] = c,
                VarMap::Mirror(_, z) => costs[*z] = -c,
                VarMap::Free(p, q) => {
                    costs[*p] = c.clone();
                    costs[*q] = -c;
                }
            }
        }
        self.cost_scale = common_denominator(&costs);
        costs.iter().map(|c| scaled(c, &self.cost_scale)).collect()
    }

    fn nonbasic_value(&self, j: usize) -> Q {
        if self.at_upper[j] {
            self.upper[j].clone().expect("only bounded columns sit at an upper bound")
        } else {
            Q::zero()
        }
    }

    /// Tableau entry as a rational.
    fn entry(&self, i: usize, j: usize) -> Q {
        Q::new(self.rows[i][j].clone(), self.det.clone())
    }

    /// Moves nonbasic column `j` by `delta`, updating the basic values.
    fn shift_values(&mut self, j: usize, delta: &Q) {
        for i in 0..self.rows.len() {
            if !self.rows[i][j].is_zero() {
                let change = delta * self.entry(i, j);
                self.values[i] -= change;
            }
        }
    }

    /// Fraction-free pivot on the tableau and reduced-cost row. Values are
    /// the caller's responsibility.
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c].clone();
        let pivot_row = self.rows[r].clone();
        let det = std::mem::replace(&mut self.det, p.clone());
        let update = |row: &mut [BigInt]| {
            let a = row[c].clone();
            for (v, q) in row.iter_mut().zip(&pivot_row) {
                if v.is_zero() && (q.is_zero() || a.is_zero()) {
                    continue;
                }
                let mut next = &p * &*v;
                if !a.is_zero() && !q.is_zero() {
                    next -= &a * q;
                }
                *v = next / &det;
            }
        };
        for i in 0..self.rows.len() {
            if i != r {
                update(&mut self.rows[i]);
            }
        }
        update(&mut self.cost_row);
        if self.det.is_negative() {
            self.det = -&self.det;
            for row in self.rows.iter_mut().chain([&mut self.cost_row]) {
                for v in row.iter_mut().filter(|v| !v.is_zero()) {
                    *v = -&*v;
                }
            }
        }
        self.basis[r] = c;
        self.at_upper[c] = false;
        self.pivots += 1;
    }

    /// Recomputes the reduced-cost row for integer `costs`.
    fn price(&mut self, costs: &[BigInt]) {
        let mut row: Vec<BigInt> = costs.iter().map(|c| c * &self.det).collect();
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = &costs[b];
            if cb.is_zero() {
                continue;
            }
            for (j, v) in self.rows[i].iter().enumerate() {
                if !v.is_zero() {
                    row[j] -= cb * v;
                }
            }
        }
        self.cost_row = row;
    }

    fn is_basic(&self) -> Vec<bool> {
        let mut basic = vec![false; self.frozen.len()];
        for &b in &self.basis {
            basic[b] = true;
        }
        basic
    }

    /// Primal simplex from a feasible basis: Dantzig pricing, switching to
    /// Bland's rule after a run of degenerate steps. False when unbounded.
    fn primal(&mut self) -> bool {
        let mut streak = 0;
        loop {
            let bland = streak >= DEGENERATE_STREAK;
            let basic = self.is_basic();
            // Improving: at lower with negative, or at upper with positive
            // reduced cost.
            let candidates = (0..self.cost_row.len()).filter(|&j| {
                !basic[j]
                    && !self.frozen[j]
                    && if self.at_upper[j] { self.cost_row[j].is_positive() } else { self.cost_row[j].is_negative() }
            });
            let enter = if bland {
                candidates.min()
            } else {
                candidates.max_by(|&x, &y| {
                    self.cost_row[x].abs().cmp(&self.cost_row[y].abs()).then(y.cmp(&x))
                })
            };
            let Some(j) = enter else {
                return true;
            };
            let increasing = !self.at_upper[j];
            // Step limits: rows reaching a bound, or the column's own bound.
            let mut best: Option<(Q, Option<usize>, bool)> =
                self.upper[j].clone().map(|u| (u, None, false));
            for i in 0..self.rows.len() {
                let a = &self.rows[i][j];
                if a.is_zero() {
                    continue;
                }
                let alpha = self.entry(i, j);
                // Basic value moves by -alpha per unit step in the column's direction.
                let rate = if increasing { alpha } else { -alpha };
                let (limit, to_upper) = if rate.is_positive() {
                    (&self.values[i] / &rate, false)
                } else {
                    match &self.upper[self.basis[i]] {
                        Some(u) => ((u - &self.values[i]) / -&rate, true),
                        None => continue,
                    }
                };
                let better = match &best {
                    None => true,
                    Some((l, row, _)) => {
                        limit < *l
                            || (limit == *l
                                && row.is_some_and(|k| self.basis[i] < self.basis[k]))
                    }
                };
                if better {
                    best = Some((limit, Some(i), to_upper));
                }
            }
            let Some((step, row, to_upper)) = best else {
                return false;
            };
            streak = if step.is_zero() { streak + 1 } else { 0 };
            let delta = if increasing { step.clone() } else { -step.clone() };
            let entering = self.nonbasic_value(j) + &delta;
            self.shift_values(j, &delta);
            match row {
                None => self.at_upper[j] = increasing,
                Some(r) => {
                    let leaving = self.basis[r];
                    self.pivot(r, j);
                    self.values[r] = entering;
                    self.at_upper[leaving] = to_upper;
                }
            }
        }
    }

    /// Dual simplex from a dual-feasible basis. False when infeasible.
    fn dual(&mut self) -> bool {
        let mut streak = 0;
        loop {
            let bland = streak >= DEGENERATE_STREAK;
            // Rows whose basic value violates a bound, with the violation.
            let violations = (0..self.rows.len()).filter_map(|i| {
                let v = &self.values[i];
                if v.is_negative() {
                    Some((i, -v.clone(), false))
                } else {
                    match &self.upper[self.basis[i]] {
                        Some(u) if v > u => Some((i, v - u, true)),
                        _ => None,
                    }
                }
            });
            let leave = if bland {
                violations.min_by_key(|(i, _, _)| self.basis[*i])
            } else {
                violations.max_by(|x, y| x.1.cmp(&y.1).then(y.0.cmp(&x.0)))
            };
            let Some((r, _, above)) = leave else {
                return true;
            };
            let basic = self.is_basic();
            // The basic value must fall when above its bound and rise when
            // below; column j moves it by -entry per unit of its own motion.
            let mut enter: Option<usize> = None;
            for j in 0..self.frozen.len() {
                if basic[j] || self.frozen[j] {
                    continue;
                }
                let a = &self.rows[r][j];
                if a.is_zero() {
                    continue;
                }
                let up = !self.at_upper[j];
                let eligible = if above { a.is_positive() == up } else { a.is_negative() == up };
                if !eligible {
                    continue;
                }
                let better = match enter {
                    None => true,
                    Some(k) => {
                        let lhs = self.cost_row[j].abs() * self.rows[r][k].abs();
                        let rhs = self.cost_row[k].abs() * a.abs();
                        lhs < rhs
                    }
                };
                if better {
                    enter = Some(j);
                }
            }
            let Some(c) = enter else {
                return false;
            };
            streak = if self.cost_row[c].is_zero() { streak + 1 } else { 0 };
            let target = if above {
                self.upper[self.basis[r]].clone().expect("violated upper bound exists")
            } else {
                Q::zero()
            };
            let delta = (&self.values[r] - &target) / self.entry(r, c);
            let entering = self.nonbasic_value(c) + &delta;
            self.shift_values(c, &delta);
            let leaving = self.basis[r];
            self.pivot(r, c);
            self.values[r] = entering;
            self.at_upper[leaving] = above;
        }
    }

    pub fn status(&self) -> LpStatus {
        self.status
    }

    pub fn program(&self) -> &LinearProgram {
        &self.program
    }

    fn require_optimal(&self) -> Result<()> {
        if self.status == LpStatus::Optimal {
            Ok(())
        } else {
            Err(Error::MalformedProgram(format!("cannot warm start from a {:?} program", self.status)))
        }
    }

    /// Current value of every internal column.
    fn point(&self) -> Vec<Q> {
        let mut z: Vec<Q> = (0..self.frozen.len()).map(|j| self.nonbasic_value(j)).collect();
        for (i, &b) in self.basis.iter().enumerate() {
            z[b] = self.values[i].clone();
        }
        z
    }

    /// Adds an inequality and re-optimises with the dual simplex. Returns the
    /// constraint's index in [`Simplex::program`].
    pub fn add_constraint(&mut self, coeffs: Vec<(usize, Q)>, relation: Relation, rhs: Q) -> Result<usize> {
        self.require_optimal()?;
        if relation == Relation::Eq {
            return Err(Error::MalformedProgram("only inequalities can be added warm".into()));
        }
        let index = self.program.add_constraint(coeffs, relation, rhs);
        if let Err(e) = self.program.validate() {
            self.program.constraints.pop();
            return Err(e);
        }
        let (coeffs, b) = internal_row(&self.maps, &self.program.constraints[index]);
        // Stored as `sigma * scale * (a z - b) + slack = 0` with the new slack basic.
        let scale = common_denominator(coeffs.iter().map(|(_, a)| a).chain([&b]));
        let sigma = if relation == Relation::Le { BigInt::one() } else { -BigInt::one() };
        let signed = &sigma * &scale;
        let z = self.point();
        let mut original = vec![BigInt::zero(); self.frozen.len() + 1];
        let mut value = Q::from_integer(scaled(&b, &signed));
        for (j, a) in &coeffs {
            let c = scaled(a, &signed);
            value -= Q::from_integer(c.clone()) * &z[*j];
            original[*j] += c;
        }
        for row in &mut self.rows {
            row.push(BigInt::zero());
        }
        self.frozen.push(false);
        self.cost_row.push(BigInt::zero());
        self.upper.push(None);
        self.at_upper.push(false);
        let width = self.frozen.len();
        let mut row: Vec<BigInt> = original.iter().map(|v| v * &self.det).collect();
        row[width - 1] = self.det.clone();
        for i in 0..self.rows.len() {
            let factor = &original[self.basis[i]];
            if factor.is_zero() {
                continue;
            }
            for (v, t) in row.iter_mut().zip(&self.rows[i]) {
                if !t.is_zero() {
                    *v -= factor * t;
                }
            }
        }
        self.rows.push(row);
        self.values.push(value);
        self.basis.push(width - 1);
        self.refs.push(Some(RowRef { col: width - 1, factor: signed }));
        if !self.dual() {
            self.status = LpStatus::Infeasible;
        }
        Ok(index)
    }

    /// Replaces the objective and re-optimises with the primal simplex.
    pub fn set_objective(&mut self, sense: Sense, objective: Vec<Q>) -> Result<()> {
        self.require_optimal()?;
        if objective.len() != self.program.num_vars() {
            return Err(Error::MalformedProgram("objective length changed".into()));
        }
        self.program.set_objective(sense, objective);
        let costs = self.internal_costs();
        self.price(&costs);
        if !self.primal() {
            self.status = LpStatus::Unbounded;
        }
        Ok(())
    }

    /// Whether the current optimum is the only optimal solution. Nonbasic
    /// columns with zero reduced cost span the optimal face; it is a single
    /// point exactly when no non-negative motion of them away from their
    /// bounds keeps the basic columns sitting at a bound feasible, which is
    /// itself a small LP.
    pub fn has_unique_optimum(&self) -> Result<bool> {
        if self.status != LpStatus::Optimal {
            return Ok(false);
        }
        Ok(self.optimal_direction()?.is_none())
    }

    /// A motion away from the current optimum that keeps it optimal, as a
    /// direction in the program's variables, or `None` when the optimum is
    /// unique. The direction can vanish in the program's variables when only
    /// the two halves of a free variable move.
    pub fn optimal_direction(&self) -> Result<Option<Vec<Q>>> {
        self.require_optimal()?;
        let basic = self.is_basic();
        let free: Vec<usize> = (0..self.frozen.len())
            .filter(|&j| !basic[j] && !self.frozen[j] && self.cost_row[j].is_zero())
            .collect();
        if free.is_empty() {
            return Ok(None);
        }
        // Motion `e_k >= 0` of column free[k] away from its bound changes
        // basic value i by `-entry * direction * e_k`.
        let direction = |j: usize| if self.at_upper[j] { -BigInt::one() } else { BigInt::one() };
        let mut cone = LinearProgram::new(Sense::Maximize, vec![one(); free.len()]);
        let mut seen = HashSet::new();
        for (i, value) in self.values.iter().enumerate() {
            let at_zero = value.is_zero();
            let at_upper = self.upper[self.basis[i]].as_ref().is_some_and(|u| u == value);
            if !at_zero && !at_upper {
                continue;
            }
            let raw: Vec<BigInt> = free.iter().map(|&j| &self.rows[i][j] * direction(j)).collect();
            // The rows are homogeneous, so any positive rescaling is the same cone.
            let g = raw.iter().fold(BigInt::zero(), |acc, v| acc.gcd(v));
            if g.is_zero() {
                continue;
            }
            let reduced: Vec<BigInt> = raw.iter().map(|v| v / &g).collect();
            let coeffs: Vec<(usize, Q)> = reduced
                .iter()
                .enumerate()
                .filter(|(_, v)| !v.is_zero())
                .map(|(k, v)| (k, Q::from_integer(v.clone())))
                .collect();
            if at_zero && seen.insert((reduced.clone(), false)) {
                cone.add_constraint(coeffs.clone(), Relation::Le, Q::zero());
            }
            if at_upper && seen.insert((reduced, true)) {
                cone.add_constraint(coeffs, Relation::Ge, Q::zero());
            }
        }
        cone.add_constraint((0..free.len()).map(|k| (k, one())).collect(), Relation::Le, one());
        let sol = Simplex::new(&cone)?.solution();
        if !sol.is_optimal() {
            return Err(Error::Internal(format!("direction program is {:?}", sol.status)));
        }
        if sol.objective.is_zero() {
            return Ok(None);
        }
        let mut dz = vec![Q::zero(); self.frozen.len()];
        let moving: Vec<(usize, Q)> = free
            .iter()
            .zip(&sol.primal)
            .filter(|(_, e)| !e.is_zero())
            .map(|(&j, e)| (j, e * Q::from_integer(direction(j))))
            .collect();
        for (j, e) in &moving {
            dz[*j] = e.clone();
        }
        for (i, &b) in self.basis.iter().enumerate() {
            let shift: Q = moving.iter().map(|(j, e)| e * Q::from_integer(self.rows[i][*j].clone())).sum();
            dz[b] = -shift / Q::from_integer(self.det.clone());
        }
        let d = self
            .maps
            .iter()
            .map(|map| match map {
                VarMap::Shift(_, c) => dz[*c].clone(),
                VarMap::Mirror(_, c) => -&dz[*c],
                VarMap::Free(p, q) => &dz[*p] - &dz[*q],
            })
            .collect();
        Ok(Some(d))
    }

    /// Primal and dual solution at the current basis.
    pub fn solution(&self) -> LpSolution {
        if self.status != LpStatus::Optimal {
            return LpSolution::without_solution(self.status, self.pivots);
        }
        let lp = &self.program;
        let z = self.point();
        let primal: Vec<Q> = self
            .maps
            .iter()
            .map(|map| match map {
                VarMap::Shift(l, c) => l + &z[*c],
                VarMap::Mirror(u, c) => u - &z[*c],
                VarMap::Free(p, q) => &z[*p] - &z[*q],
            })
            .collect();
        let mut denominator = &self.det * &self.cost_scale;
        if lp.sense == Sense::Maximize {
            denominator = -denominator;
        }
        let duals: Vec<Q> = self
            .refs
            .iter()
            .map(|r| match r {
                Some(RowRef { col, factor }) => Q::new(-(factor * &self.cost_row[*col]), denominator.clone()),
                None => Q::zero(),
            })
            .collect();
        let mut reduced_costs = lp.objective.clone();
        for (c, y) in lp.constraints.iter().zip(&duals) {
            if y.is_zero() {
                continue;
            }
            for (j, a) in &c.coeffs {
                reduced_costs[*j] -= y * a;
            }
        }
        LpSolution {
            status: LpStatus::Optimal,
            objective: lp.objective_value(&primal),
            primal,
            duals,
            reduced_costs,
            pivots: self.pivots,
        }
    }
}

fn retain_columns<T>(v: &mut Vec<T>, keep: &[bool]) {
    let mut j = 0;
    v.retain(|_| {
        j += 1;
        keep[j - 1]
    });
}

/// A constraint over the internal non-negative columns.
fn internal_row(maps: &[VarMap], c: &Constraint) -> (Vec<(usize, Q)>, Q) {
    let mut coeffs = Vec::with_capacity(c.coeffs.len() + 1);
    let mut rhs = c.rhs.clone();
    for (j, a) in &c.coeffs {
        match &maps[*j] {
            VarMap::Shift(l, z) => {
                rhs -= a * l;
                coeffs.push((*z, a.clone()));
            }
            VarMap::Mirror(u, z) => {
                rhs -= a * u;
                coeffs.push((*z, -a));
            }
            VarMap::Free(p, m) => {
                coeffs.push((*p, a.clone()));
                coeffs.push((*m, -a));
            }
        }
    }
    (coeffs, rhs)
}

/// Solves the program exactly.
pub fn solve(lp: &LinearProgram) -> Result<LpSolution> {
    Ok(Simplex::new(lp)?.solution())
}

/// Exact post-solve certificate check: primal feasibility, dual sign
/// feasibility, complementary slackness and equality of the primal and dual
/// objectives.
pub fn audit(lp: &LinearProgram, sol: &LpSolution) -> Result<()> {
    let fail = |msg: String| Err(Error::Internal(format!("LP audit: {msg}")));
    if !sol.is_optimal() {
        return fail("solution is not optimal".into());
    }
    let x = &sol.primal;
    if x.len() != lp.num_vars() || sol.duals.len() != lp.constraints.len() {
        return fail("dimension mismatch".into());
    }
    for j in 0..lp.num_vars() {
        if lp.lower[j].as_ref().is_some_and(|l| x[j] < *l)
            || lp.upper[j].as_ref().is_some_and(|u| x[j] > *u)
        {
            return fail(format!("variable {j} violates its bounds"));
        }
    }
    // Direction in which the objective improves.
    let up = lp.sense == Sense::Maximize;
    let mut dual_objective = Q::zero();
    for (i, (c, y)) in lp.constraints.iter().zip(&sol.duals).enumerate() {
        let act = c.activity(x);
        let ok = match c.relation {
            Relation::Le => act <= c.rhs,
            Relation::Ge => act >= c.rhs,
            Relation::Eq => act == c.rhs,
        };
        if !ok {
            return fail(format!("constraint {i} violated"));
        }
        let sign_ok = match c.relation {
            Relation::Le => y.is_zero() || (y.is_positive() == up),
            Relation::Ge => y.is_zero() || (y.is_negative() == up),
            Relation::Eq => true,
        };
        if !sign_ok {
            return fail(format!("dual {i} has the wrong sign"));
        }
        if !y.is_zero() && act != c.rhs {
            return fail(format!("complementary slackness fails on constraint {i}"));
        }
        dual_objective += y * &c.rhs;
    }
    let mut reduced = lp.objective.clone();
    for (c, y) in lp.constraints.iter().zip(&sol.duals) {
        for (j, a) in &c.coeffs {
            reduced[j.to_owned()] -= y * a;
        }
    }
    if reduced != sol.reduced_costs {
        return fail("reported reduced costs are inconsistent".into());
    }
    for (j, d) in reduced.iter().enumerate() {
        if d.is_zero() {
            continue;
        }
        // Pushing towards the improving direction must hit a finite bound.
        let at_upper = d.is_positive() == up;
        let bound = if at_upper { lp.upper[j].as_ref() } else { lp.lower[j].as_ref() };
        match bound {
            Some(v) if *v == x[j] => dual_objective += d * v,
            Some(_) => return fail(format!("reduced cost of variable {j} not complementary")),
            None => return fail(format!("reduced cost of variable {j} is dual infeasible")),
        }
    }
    if dual_objective != sol.objective || lp.objective_value(x) != sol.objective {
        return fail("strong duality gap".into());
    }
    Ok(())
}

/// Optimises variable `var` in direction `sense` over the optimal face of
/// `lp`, i.e. with the original objective pinned to `optimum`.
pub fn optimal_face_extreme(
    lp: &LinearProgram,
    optimum: &Q,
    var: usize,
    sense: Sense,
) -> Result<LpSolution> {
    let mut face = lp.clone();
    let pin = lp.objective.iter().cloned().enumerate().collect();
    face.add_constraint(pin, Relation::Eq, optimum.clone());
    let mut unit = vec![Q::zero(); lp.num_vars()];
    unit[var] = Q::from_integer(1.into());
    face.set_objective(sense, unit);
    solve(&face)
}

/// Minimum and maximum of variable `var` over the set of optimal solutions.
pub fn range_at_optimum(lp: &LinearProgram, sol: &LpSolution, var: usize) -> Result<(Q, Q)> {
    if !sol.is_optimal() {
        return Err(Error::Internal("range probe needs an optimal solution".into()));
    }
    if var >= lp.num_vars() {
        return Err(Error::MalformedProgram(format!("no variable {var}")));
    }
    let lo = optimal_face_extreme(lp, &sol.objective, var, Sense::Minimize)?;
    let hi = optimal_face_extreme(lp, &sol.objective, var, Sense::Maximize)?;
    match (lo.status, hi.status) {
        (LpStatus::Optimal, LpStatus::Optimal) => Ok((lo.objective, hi.objective)),
        _ => Err(Error::Internal(format!("variable {var} is unbounded on the optimal face"))),
    }
}
