//! Exact rational simplex.
//!
//! Dense two-phase tableau simplex over arbitrary-precision rationals with
//! Bland's rule, so pivoting terminates without cycling and results are
//! deterministic given the variable order. Optimal assignments satisfy
//! every constraint exactly; there is no tolerance anywhere.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::rational::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Debug)]
pub struct Constraint {
    pub coeffs: Vec<Rational>,
    pub relation: Relation,
    pub rhs: Rational,
}

impl Constraint {
    pub fn new(coeffs: Vec<Rational>, relation: Relation, rhs: Rational) -> Self {
        Constraint { coeffs, relation, rhs }
    }
}

/// minimize objective . v subject to the constraints; variables with
/// `nonneg[j]` set are restricted to v_j >= 0, the rest are free.
#[derive(Clone, Debug)]
pub struct LinearProgram {
    pub objective: Vec<Rational>,
    pub constraints: Vec<Constraint>,
    pub num_vars: usize,
    pub nonneg: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LpOutcome {
    Optimal {
        value: Rational,
        assignment: Vec<Rational>,
    },
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn optimal(&self) -> Option<(&Rational, &[Rational])> {
        match self {
            LpOutcome::Optimal { value, assignment } => Some((value, assignment)),
            _ => None,
        }
    }
}

/// Solves the program exactly. Infeasible and unbounded are verdicts, not
/// errors; `Err` means the program itself is malformed.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpOutcome, Error> {
    validate(lp)?;
    let mut tableau = Tableau::build(lp);
    if !tableau.phase_one() {
        return Ok(LpOutcome::Infeasible);
    }
    if !tableau.phase_two(lp) {
        return Ok(LpOutcome::Unbounded);
    }
    let assignment = tableau.extract_assignment(lp);
    let value = lp
        .objective
        .iter()
        .zip(&assignment)
        .map(|(c, x)| c * x)
        .sum();
    Ok(LpOutcome::Optimal { value, assignment })
}

fn validate(lp: &LinearProgram) -> Result<(), Error> {
    if lp.num_vars == 0 {
        return Err(Error::MalformedLp("no variables".into()));
    }
    if lp.objective.len() != lp.num_vars {
        return Err(Error::MalformedLp(format!(
            "objective has {} coefficients for {} variables",
            lp.objective.len(),
            lp.num_vars
        )));
    }
    if lp.nonneg.len() != lp.num_vars {
        return Err(Error::MalformedLp(format!(
            "nonneg mask has {} flags for {} variables",
            lp.nonneg.len(),
            lp.num_vars
        )));
    }
    for (i, c) in lp.constraints.iter().enumerate() {
        if c.coeffs.len() != lp.num_vars {
            return Err(Error::MalformedLp(format!(
                "constraint {} has {} coefficients for {} variables",
                i,
                c.coeffs.len(),
                lp.num_vars
            )));
        }
    }
    Ok(())
}

/// Column layout: structural columns first (free variables split into a
/// plus/minus pair), then one slack or surplus column per inequality,
/// then artificial columns.
struct Tableau {
    rows: Vec<Vec<Rational>>,
    rhs: Vec<Rational>,
    cost: Vec<Rational>,
    /// Maintained as -(current objective value).
    cost_rhs: Rational,
    basis: Vec<usize>,
    /// For each original variable, its plus column and optional minus column.
    var_cols: Vec<(usize, Option<usize>)>,
    structural_end: usize,
    artificial_start: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Tableau {
        let mut var_cols = Vec::with_capacity(lp.num_vars);
        let mut next = 0;
        for &nn in &lp.nonneg {
            if nn {
                var_cols.push((next, None));
                next += 1;
            } else {
                var_cols.push((next, Some(next + 1)));
                next += 2;
            }
        }
        let structural_end = next;

        // Orient every row so rhs >= 0, preferring Le for rhs = 0 rows so
        // the slack can start basic without an artificial.
        let mut oriented: Vec<(Vec<Rational>, Relation, Rational)> = Vec::new();
        for c in &lp.constraints {
            let mut coeffs: Vec<Rational> = Vec::with_capacity(structural_end);
            for (j, (plus, minus)) in var_cols.iter().enumerate() {
                debug_assert_eq!(*plus, coeffs.len());
                coeffs.push(c.coeffs[j].clone());
                if minus.is_some() {
                    coeffs.push(-&c.coeffs[j]);
                }
            }
            let mut relation = c.relation;
            let mut rhs = c.rhs.clone();
            let flip = rhs.is_negative() || (rhs.is_zero() && relation == Relation::Ge);
            if flip {
                for v in &mut coeffs {
                    *v = -&*v;
                }
                rhs = -rhs;
                relation = match relation {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
            }
            oriented.push((coeffs, relation, rhs));
        }

        let num_slacks = oriented
            .iter()
            .filter(|(_, rel, _)| *rel != Relation::Eq)
            .count();
        let num_artificials = oriented
            .iter()
            .filter(|(_, rel, _)| *rel != Relation::Le)
            .count();
        let total_cols = structural_end + num_slacks + num_artificials;
        let artificial_start = structural_end + num_slacks;

        let mut rows = Vec::with_capacity(oriented.len());
        let mut rhs_col = Vec::with_capacity(oriented.len());
        let mut basis = Vec::with_capacity(oriented.len());
        let mut slack_cursor = structural_end;
        let mut art_cursor = artificial_start;
        for (coeffs, relation, rhs) in oriented {
            let mut row = coeffs;
            row.resize(total_cols, Rational::zero());
            match relation {
                Relation::Le => {
                    row[slack_cursor] = Rational::one();
                    basis.push(slack_cursor);
                    slack_cursor += 1;
                }
                Relation::Ge => {
                    row[slack_cursor] = -Rational::one();
                    slack_cursor += 1;
                    row[art_cursor] = Rational::one();
                    basis.push(art_cursor);
                    art_cursor += 1;
                }
                Relation::Eq => {
                    row[art_cursor] = Rational::one();
                    basis.push(art_cursor);
                    art_cursor += 1;
                }
            }
            rows.push(row);
            rhs_col.push(rhs);
        }

        Tableau {
            rows,
            rhs: rhs_col,
            cost: vec![Rational::zero(); total_cols],
            cost_rhs: Rational::zero(),
            basis,
            var_cols,
            structural_end,
            artificial_start,
        }
    }

    fn num_cols(&self) -> usize {
        self.cost.len()
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let pivot = self.rows[row][col].clone();
        debug_assert!(pivot.is_positive());
        if pivot != Rational::one() {
            for v in &mut self.rows[row] {
                if !v.is_zero() {
                    *v = &*v / &pivot;
                }
            }
            self.rhs[row] = &self.rhs[row] / &pivot;
        }
        let pivot_row = self.rows[row].clone();
        let pivot_rhs = self.rhs[row].clone();
        for i in 0..self.rows.len() {
            if i == row || self.rows[i][col].is_zero() {
                continue;
            }
            let factor = self.rows[i][col].clone();
            eliminate(&mut self.rows[i], &mut self.rhs[i], &factor, &pivot_row, &pivot_rhs);
        }
        if !self.cost[col].is_zero() {
            let factor = self.cost[col].clone();
            eliminate(&mut self.cost, &mut self.cost_rhs, &factor, &pivot_row, &pivot_rhs);
        }
        self.basis[row] = col;
    }

    /// One Bland-rule iteration over the allowed columns. Returns false
    /// when no entering column exists (current basis optimal).
    fn step(&mut self, col_allowed: impl Fn(usize) -> bool) -> Result<bool, ()> {
        let entering = (0..self.num_cols())
            .find(|&j| col_allowed(j) && self.cost[j].is_negative());
        let entering = match entering {
            Some(j) => j,
            None => return Ok(false),
        };
        let mut best: Option<(Rational, usize, usize)> = None; // (ratio, basis var, row)
        for i in 0..self.rows.len() {
            let a = &self.rows[i][entering];
            if !a.is_positive() {
                continue;
            }
            let ratio = &self.rhs[i] / a;
            let replace = match &best {
                None => true,
                Some((r, b, _)) => ratio < *r || (ratio == *r && self.basis[i] < *b),
            };
            if replace {
                best = Some((ratio, self.basis[i], i));
            }
        }
        match best {
            Some((_, _, row)) => {
                self.pivot(row, entering);
                Ok(true)
            }
            None => Err(()), // unbounded in the entering direction
        }
    }

    /// Minimizes the sum of artificial variables. Returns false when the
    /// constraints are infeasible.
    fn phase_one(&mut self) -> bool {
        if self.artificial_start == self.num_cols() {
            return true; // pure-slack start, already feasible
        }
        for v in &mut self.cost {
            *v = Rational::zero();
        }
        for j in self.artificial_start..self.num_cols() {
            self.cost[j] = Rational::one();
        }
        self.cost_rhs = Rational::zero();
        for i in 0..self.rows.len() {
            if self.basis[i] >= self.artificial_start {
                let row = self.rows[i].clone();
                let rhs = self.rhs[i].clone();
                eliminate(&mut self.cost, &mut self.cost_rhs, &Rational::one(), &row, &rhs);
            }
        }

        // Artificial columns never re-enter once they leave the basis.
        let art_start = self.artificial_start;
        loop {
            match self.step(|j| j < art_start) {
                Ok(true) => continue,
                Ok(false) => break,
                Err(()) => unreachable!("phase-1 objective is bounded below by zero"),
            }
        }
        if !(-&self.cost_rhs).is_zero() {
            return false;
        }

        // Degenerate artificials may linger in the basis at value zero;
        // pivot them out or drop their (redundant) rows.
        let mut i = 0;
        while i < self.rows.len() {
            if self.basis[i] >= art_start {
                debug_assert!(self.rhs[i].is_zero());
                match (0..art_start).find(|&j| !self.rows[i][j].is_zero()) {
                    Some(j) => {
                        // A zero-rhs pivot keeps feasibility regardless of sign.
                        if self.rows[i][j].is_negative() {
                            for v in &mut self.rows[i] {
                                if !v.is_zero() {
                                    *v = -&*v;
                                }
                            }
                            self.rhs[i] = -&self.rhs[i];
                        }
                        self.pivot(i, j);
                        i += 1;
                    }
                    None => {
                        self.rows.remove(i);
                        self.rhs.remove(i);
                        self.basis.remove(i);
                    }
                }
            } else {
                i += 1;
            }
        }
        // Artificial columns are dead from here on.
        for row in &mut self.rows {
            row.truncate(art_start);
        }
        self.cost.truncate(art_start);
        true
    }

    /// Minimizes the real objective from the feasible basis. Returns false
    /// when the program is unbounded.
    fn phase_two(&mut self, lp: &LinearProgram) -> bool {
        for v in &mut self.cost {
            *v = Rational::zero();
        }
        for (j, (plus, minus)) in self.var_cols.iter().enumerate() {
            self.cost[*plus] = lp.objective[j].clone();
            if let Some(m) = minus {
                self.cost[*m] = -&lp.objective[j];
            }
        }
        self.cost_rhs = Rational::zero();
        for i in 0..self.rows.len() {
            let cb = self.cost[self.basis[i]].clone();
            if !cb.is_zero() {
                let row = self.rows[i].clone();
                let rhs = self.rhs[i].clone();
                eliminate(&mut self.cost, &mut self.cost_rhs, &cb, &row, &rhs);
            }
        }
        loop {
            match self.step(|_| true) {
                Ok(true) => continue,
                Ok(false) => return true,
                Err(()) => return false,
            }
        }
    }

    fn extract_assignment(&self, lp: &LinearProgram) -> Vec<Rational> {
        let mut col_value = vec![Rational::zero(); self.structural_end];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < self.structural_end {
                col_value[b] = self.rhs[i].clone();
            }
        }
        lp.objective
            .iter()
            .enumerate()
            .map(|(j, _)| {
                let (plus, minus) = &self.var_cols[j];
                match minus {
                    Some(m) => &col_value[*plus] - &col_value[*m],
                    None => col_value[*plus].clone(),
                }
            })
            .collect()
    }
}

fn eliminate(
    row: &mut [Rational],
    rhs: &mut Rational,
    factor: &Rational,
    pivot_row: &[Rational],
    pivot_rhs: &Rational,
) {
    for (v, p) in row.iter_mut().zip(pivot_row) {
        if !p.is_zero() {
            *v = &*v - &(factor * p);
        }
    }
    *rhs = &*rhs - &(factor * pivot_rhs);
}
