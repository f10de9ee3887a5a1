//! Linear-programming kernel.
//!
//! Problems are stated as
//!
//! ```text
//! minimize    c · z
//! subject to  A_eq z  = b_eq
//!             A_ub z <= b_ub
//!             lo <= z <= hi      (either side may be infinite)
//! ```
//!
//! and solved by a dense two-phase simplex. Results are deterministic:
//! identical problems give bitwise-identical solutions.

mod simplex;

use crate::linalg::{dot, Mat};
use std::cell::Cell;
use thiserror::Error;

/// Tolerance used when reporting whether a solution satisfies its constraints.
pub const REPORT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("malformed LP: {0}")]
    Malformed(String),
    #[error("simplex hit its iteration cap after {iterations} iterations")]
    NumericalFailure { iterations: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub a_eq: Mat,
    pub b_eq: Vec<f64>,
    pub a_ub: Mat,
    pub b_ub: Vec<f64>,
    pub bounds: Vec<(f64, f64)>,
}

impl LpProblem {
    /// A problem over `n` free variables with zero objective and no rows.
    pub fn new(n: usize) -> Self {
        LpProblem {
            objective: vec![0.0; n],
            a_eq: Mat::with_cols(n),
            b_eq: Vec::new(),
            a_ub: Mat::with_cols(n),
            b_ub: Vec::new(),
            bounds: vec![(f64::NEG_INFINITY, f64::INFINITY); n],
        }
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn n_rows(&self) -> usize {
        self.a_eq.rows() + self.a_ub.rows()
    }

    pub fn add_eq(&mut self, row: &[f64], rhs: f64) {
        self.a_eq.push_row(row);
        self.b_eq.push(rhs);
    }

    pub fn add_le(&mut self, row: &[f64], rhs: f64) {
        self.a_ub.push_row(row);
        self.b_ub.push(rhs);
    }

    pub fn add_ge(&mut self, row: &[f64], rhs: f64) {
        let neg: Vec<f64> = row.iter().map(|v| -v).collect();
        self.add_le(&neg, -rhs);
    }

    pub fn set_bounds(&mut self, j: usize, lo: f64, hi: f64) {
        self.bounds[j] = (lo, hi);
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.n_vars();
        let check = |what: &str, ok: bool| {
            if ok {
                Ok(())
            } else {
                Err(LpError::Malformed(what.to_string()))
            }
        };
        check("equality column count", self.a_eq.cols() == n)?;
        check("inequality column count", self.a_ub.cols() == n)?;
        check("equality rhs length", self.a_eq.rows() == self.b_eq.len())?;
        check("inequality rhs length", self.a_ub.rows() == self.b_ub.len())?;
        check("bounds length", self.bounds.len() == n)?;
        check(
            "non-finite coefficient",
            self.a_eq.is_finite()
                && self.a_ub.is_finite()
                && self.objective.iter().all(|v| v.is_finite())
                && self.b_eq.iter().chain(&self.b_ub).all(|v| v.is_finite()),
        )?;
        check("NaN bound", self.bounds.iter().all(|(l, h)| !l.is_nan() && !h.is_nan()))?;
        Ok(())
    }

    /// Largest constraint violation of `z` (rows and bounds).
    pub fn max_violation(&self, z: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (a, b) in self.a_eq.row_iter().zip(&self.b_eq) {
            worst = worst.max((dot(a, z) - b).abs());
        }
        for (a, b) in self.a_ub.row_iter().zip(&self.b_ub) {
            worst = worst.max(dot(a, z) - b);
        }
        for (&v, &(lo, hi)) in z.iter().zip(&self.bounds) {
            worst = worst.max(lo - v).max(v - hi);
        }
        worst
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Present iff `status == Optimal`.
    pub z: Option<Vec<f64>>,
    /// Present iff `status == Optimal`.
    pub objective_value: Option<f64>,
    pub iterations: usize,
    /// Final tableau as tab-separated text, when requested.
    pub tableau: Option<String>,
}

impl LpSolution {
    fn infeasible() -> Self {
        LpSolution { status: LpStatus::Infeasible, z: None, objective_value: None, iterations: 0, tableau: None }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

thread_local! {
    static SOLVES: Cell<u64> = const { Cell::new(0) };
}

/// Number of LPs solved on the current thread so far.
pub fn solve_count() -> u64 {
    SOLVES.with(|c| c.get())
}

pub fn solve(p: &LpProblem) -> Result<LpSolution, LpError> {
    solve_with(p, false)
}

/// Like [`solve`], optionally keeping a text dump of the final tableau.
pub fn solve_with(p: &LpProblem, dump_tableau: bool) -> Result<LpSolution, LpError> {
    p.validate()?;
    SOLVES.with(|c| c.set(c.get() + 1));
    simplex::solve(p, dump_tableau)
}

/// Whether the constraints of `p` admit a point; the objective is ignored.
pub fn feasible(p: &LpProblem) -> Result<bool, LpError> {
    let mut q = p.clone();
    q.objective.iter_mut().for_each(|c| *c = 0.0);
    Ok(solve(&q)?.status != LpStatus::Infeasible)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_attained_optimum() {
        let mut p = LpProblem::new(1);
        p.objective[0] = -1.0;
        p.set_bounds(0, 0.0, 1.0);
        let s = solve(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert_eq!(s.z.unwrap(), vec![1.0]);
    }

    #[test]
    fn contradictory_bounds_and_rows() {
        let mut p = LpProblem::new(1);
        p.objective[0] = 1.0;
        p.set_bounds(0, 1.0, 0.0);
        assert_eq!(solve(&p).unwrap().status, LpStatus::Infeasible);

        let mut p = LpProblem::new(1);
        p.objective[0] = 1.0;
        p.add_ge(&[1.0], 1.0);
        p.add_le(&[1.0], 0.0);
        assert_eq!(solve(&p).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn two_dimensional_cut_square() {
        let mut p = LpProblem::new(2);
        p.objective = vec![-1.0, -1.0];
        p.add_le(&[1.0, 1.0], 1.5);
        p.set_bounds(0, 0.0, 1.0);
        p.set_bounds(1, 0.0, 1.0);
        let s = solve(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective_value.unwrap() + 1.5).abs() < 1e-12);
    }

    #[test]
    fn unbounded_is_reported() {
        let mut p = LpProblem::new(2);
        p.objective = vec![-1.0, 0.0];
        p.add_le(&[-1.0, 1.0], 1.0);
        p.set_bounds(0, 0.0, f64::INFINITY);
        assert_eq!(solve(&p).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn feasibility_examples() {
        let mut p = LpProblem::new(1);
        p.set_bounds(0, 0.0, 1.0);
        p.add_eq(&[1.0], 0.5);
        assert!(feasible(&p).unwrap());

        let mut p = LpProblem::new(1);
        p.add_eq(&[1.0], 0.0);
        p.add_eq(&[1.0], 1.0);
        assert!(!feasible(&p).unwrap());

        let mut p = LpProblem::new(2);
        p.set_bounds(0, 0.0, 1.0);
        p.set_bounds(1, 0.0, 1.0);
        p.add_eq(&[1.0, 0.0], 1.0);
        p.add_eq(&[1.0, 0.0], 0.0);
        assert!(!feasible(&p).unwrap());
    }

    #[test]
    fn redundant_equalities_are_tolerated() {
        let mut p = LpProblem::new(2);
        p.objective = vec![1.0, 2.0];
        p.add_eq(&[1.0, 1.0], 1.0);
        p.add_eq(&[2.0, 2.0], 2.0);
        p.set_bounds(0, 0.0, f64::INFINITY);
        p.set_bounds(1, 0.0, f64::INFINITY);
        let s = solve(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        let z = s.z.unwrap();
        assert!((z[0] - 1.0).abs() < 1e-12 && z[1].abs() < 1e-12);
    }

    #[test]
    fn mixed_bound_shapes() {
        // free, upper-only and lower-only variables in one problem
        let mut p = LpProblem::new(3);
        p.objective = vec![1.0, -1.0, 1.0];
        p.add_ge(&[1.0, 0.0, 0.0], -2.0);
        p.set_bounds(1, f64::NEG_INFINITY, 3.0);
        p.set_bounds(2, -1.0, f64::INFINITY);
        p.add_le(&[0.0, 1.0, 1.0], 10.0);
        let s = solve(&p).unwrap();
        let z = s.z.unwrap();
        assert!((z[0] + 2.0).abs() < 1e-12);
        assert!((z[1] - 3.0).abs() < 1e-12);
        assert!((z[2] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn rows_without_variables() {
        let mut p = LpProblem::new(0);
        p.add_le(&[], -1.0);
        assert_eq!(solve(&p).unwrap().status, LpStatus::Infeasible);
        let mut p = LpProblem::new(0);
        p.add_le(&[], 1.0);
        assert_eq!(solve(&p).unwrap().status, LpStatus::Optimal);
    }

    #[test]
    fn tableau_dump_is_tab_separated() {
        let mut p = LpProblem::new(2);
        p.objective = vec![-1.0, -1.0];
        p.add_le(&[1.0, 1.0], 1.5);
        p.set_bounds(0, 0.0, 1.0);
        p.set_bounds(1, 0.0, 1.0);
        let s = solve_with(&p, true).unwrap();
        let dump = s.tableau.unwrap();
        assert!(dump.starts_with("basis\t"));
        assert!(dump.lines().last().unwrap().starts_with("cost\t"));
    }
}
