//! Dense bounded-variable two-phase simplex on a full tableau.
//!
//! Every original variable is mapped to one or two standard-form columns
//! `y >= 0` (with an optional finite upper bound). Nonbasic columns always
//! sit at zero; a column resting at its upper bound is *flipped*
//! (`y = u - y'`) so that the tableau never has to track two nonbasic
//! states.

use super::{LpError, LpProblem, LpSolution, LpStatus};
use std::fmt::Write as _;

/// Reduced-cost threshold for entering columns.
const PRICE_TOL: f64 = 1e-9;
/// Smallest pivot element accepted by the ratio test.
const PIVOT_TOL: f64 = 1e-9;
/// Phase-1 residual (relative to the right-hand side scale) that still counts as feasible.
const PHASE1_TOL: f64 = 1e-8;
/// Degenerate pivots tolerated before switching to Bland's rule.
const DEGENERATE_LIMIT: usize = 500;

#[derive(Debug, Clone, Copy)]
enum VarMap {
    Fixed(f64),
    Shift { col: usize, lo: f64 },
    Neg { col: usize, hi: f64 },
    Split { pos: usize, neg: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ColKind {
    Structural,
    Slack,
    Artificial,
}

struct Tableau {
    m: usize,
    ncols: usize,
    /// `(m + 1) x (ncols + 1)`; row `m` holds reduced costs, last column the rhs.
    t: Vec<f64>,
    basis: Vec<usize>,
    in_basis: Vec<bool>,
    upper: Vec<f64>,
    flipped: Vec<bool>,
    kind: Vec<ColKind>,
    enterable: Vec<bool>,
    iterations: usize,
    cap: usize,
    degenerate: usize,
    bland: bool,
}

enum Phase {
    Optimal,
    Unbounded,
}

impl Tableau {
    #[inline]
    fn w(&self) -> usize {
        self.ncols + 1
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.w() + j]
    }

    #[inline]
    fn rhs(&self, i: usize) -> f64 {
        self.t[i * self.w() + self.ncols]
    }

    fn is_basic(&self, j: usize) -> bool {
        self.in_basis[j]
    }

    fn set_costs(&mut self, cost: &[f64]) {
        let w = self.w();
        let m = self.m;
        let mut d: Vec<f64> = (0..self.ncols).map(|j| if self.flipped[j] { -cost[j] } else { cost[j] }).collect();
        d.push(0.0);
        for i in 0..m {
            let b = self.basis[i];
            let cb = if self.flipped[b] { -cost[b] } else { cost[b] };
            if cb != 0.0 {
                let row = &self.t[i * w..(i + 1) * w];
                for (dj, a) in d.iter_mut().zip(row) {
                    *dj -= cb * a;
                }
            }
        }
        self.t[m * w..(m + 1) * w].copy_from_slice(&d);
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let w = self.w();
        let p = self.t[r * w + q];
        {
            let row = &mut self.t[r * w..(r + 1) * w];
            for v in row.iter_mut() {
                *v /= p;
            }
            row[q] = 1.0;
        }
        let (head, tail) = self.t.split_at_mut(r * w);
        let (prow, rest) = tail.split_at_mut(w);
        let prow: &[f64] = prow;
        for other in head.chunks_exact_mut(w).chain(rest.chunks_exact_mut(w)) {
            let f = other[q];
            if f != 0.0 {
                for (o, pv) in other.iter_mut().zip(prow) {
                    *o -= f * pv;
                }
                other[q] = 0.0;
            }
        }
        self.in_basis[self.basis[r]] = false;
        self.in_basis[q] = true;
        self.basis[r] = q;
    }

    /// Substitutes `y_q = u_q - y_q'` for a nonbasic column.
    fn flip_nonbasic(&mut self, q: usize) {
        let w = self.w();
        let u = self.upper[q];
        for i in 0..=self.m {
            let a = self.t[i * w + q];
            if a != 0.0 {
                self.t[i * w + self.ncols] -= a * u;
                self.t[i * w + q] = -a;
            }
        }
        self.flipped[q] = !self.flipped[q];
    }

    /// Substitutes `y_b = u_b - y_b'` for the basic column of row `r`.
    fn flip_basic(&mut self, r: usize) {
        let w = self.w();
        let b = self.basis[r];
        let u = self.upper[b];
        let row = &mut self.t[r * w..(r + 1) * w];
        for v in row.iter_mut() {
            *v = -*v;
        }
        row[b] = 1.0;
        row[w - 1] += u;
        self.flipped[b] = !self.flipped[b];
    }

    fn choose_entering(&self) -> Option<usize> {
        let w = self.w();
        let d = &self.t[self.m * w..self.m * w + self.ncols];
        let mut best: Option<(usize, f64)> = None;
        for (j, &dj) in d.iter().enumerate() {
            if dj >= -PRICE_TOL || !self.enterable[j] || self.upper[j] == 0.0 || self.is_basic(j) {
                continue;
            }
            if self.bland {
                return Some(j);
            }
            if best.is_none_or(|(_, bd)| dj < bd) {
                best = Some((j, dj));
            }
        }
        best.map(|(j, _)| j)
    }

    fn run(&mut self) -> Result<Phase, LpError> {
        loop {
            self.iterations += 1;
            if self.iterations > self.cap {
                return Err(LpError::NumericalFailure { iterations: self.iterations });
            }
            let Some(q) = self.choose_entering() else {
                return Ok(Phase::Optimal);
            };
            // ratio test: (row, step, leaves_at_upper)
            let mut best: Option<(usize, f64, bool)> = None;
            for i in 0..self.m {
                let a = self.at(i, q);
                let b = self.basis[i];
                let cand = if a > PIVOT_TOL {
                    Some(((self.rhs(i)).max(0.0) / a, false))
                } else if a < -PIVOT_TOL && self.upper[b].is_finite() {
                    Some(((self.upper[b] - self.rhs(i)).max(0.0) / -a, true))
                } else {
                    None
                };
                let Some((step, at_upper)) = cand else { continue };
                let replace = match best {
                    None => true,
                    Some((bi, bs, _)) => {
                        if step < bs - 1e-12 * (1.0 + bs) {
                            true
                        } else if step <= bs + 1e-12 * (1.0 + bs) {
                            if self.bland {
                                b < self.basis[bi]
                            } else {
                                a.abs() > self.at(bi, q).abs()
                            }
                        } else {
                            false
                        }
                    }
                };
                if replace {
                    best = Some((i, step, at_upper));
                }
            }
            let own = self.upper[q];
            let step = match best {
                Some((_, s, _)) if s < own => s,
                _ if own.is_finite() => {
                    self.flip_nonbasic(q);
                    continue;
                }
                _ => return Ok(Phase::Unbounded),
            };
            let (r, _, at_upper) = best.expect("ratio row exists");
            if at_upper {
                self.flip_basic(r);
            }
            self.pivot(r, q);
            if step <= 1e-12 {
                self.degenerate += 1;
                if self.degenerate > DEGENERATE_LIMIT {
                    self.bland = true;
                }
            }
        }
    }

    /// Standard-form column values (unflipped).
    fn values(&self) -> Vec<f64> {
        let mut y = vec![0.0; self.ncols];
        for (i, &b) in self.basis.iter().enumerate() {
            y[b] = self.rhs(i);
        }
        for (j, v) in y.iter_mut().enumerate() {
            if self.flipped[j] {
                *v = self.upper[j] - *v;
            }
        }
        y
    }

    fn dump(&self) -> String {
        let mut s = String::from("basis");
        for j in 0..self.ncols {
            let tag = match self.kind[j] {
                ColKind::Structural => "y",
                ColKind::Slack => "s",
                ColKind::Artificial => "a",
            };
            let _ = write!(s, "\t{tag}{j}{}", if self.flipped[j] { "'" } else { "" });
        }
        s.push_str("\trhs\n");
        for i in 0..=self.m {
            if i < self.m {
                let _ = write!(s, "{}", self.basis[i]);
            } else {
                s.push_str("cost");
            }
            for j in 0..=self.ncols {
                let _ = write!(s, "\t{}", self.at(i, j));
            }
            s.push('\n');
        }
        s
    }
}

pub(super) fn solve(p: &LpProblem, dump_tableau: bool) -> Result<LpSolution, LpError> {
    let n = p.n_vars();
    // map original variables to standard-form columns
    let mut maps = Vec::with_capacity(n);
    let mut upper = Vec::new();
    let mut kind = Vec::new();
    for &(lo, hi) in &p.bounds {
        if lo > hi {
            return Ok(LpSolution::infeasible());
        }
        let map = if lo == hi {
            VarMap::Fixed(lo)
        } else if lo.is_finite() {
            upper.push(hi - lo);
            VarMap::Shift { col: upper.len() - 1, lo }
        } else if hi.is_finite() {
            upper.push(f64::INFINITY);
            VarMap::Neg { col: upper.len() - 1, hi }
        } else {
            upper.push(f64::INFINITY);
            upper.push(f64::INFINITY);
            VarMap::Split { pos: upper.len() - 2, neg: upper.len() - 1 }
        };
        maps.push(map);
    }
    let n_struct = upper.len();
    kind.resize(n_struct, ColKind::Structural);

    let n_eq = p.a_eq.rows();
    let n_ub = p.a_ub.rows();
    let m = n_eq + n_ub;

    // rows over structural columns plus rhs
    let mut rows: Vec<(Vec<f64>, f64, bool)> = Vec::with_capacity(m);
    let mut map_row = |a: &[f64], b: f64, is_ub: bool| {
        let mut r = vec![0.0; n_struct];
        let mut rhs = b;
        for (j, &aj) in a.iter().enumerate() {
            if aj == 0.0 {
                continue;
            }
            match maps[j] {
                VarMap::Fixed(v) => rhs -= aj * v,
                VarMap::Shift { col, lo } => {
                    r[col] += aj;
                    rhs -= aj * lo;
                }
                VarMap::Neg { col, hi } => {
                    r[col] -= aj;
                    rhs -= aj * hi;
                }
                VarMap::Split { pos, neg } => {
                    r[pos] += aj;
                    r[neg] -= aj;
                }
            }
        }
        rows.push((r, rhs, is_ub));
    };
    for (a, &b) in p.a_eq.row_iter().zip(&p.b_eq) {
        map_row(a, b, false);
    }
    for (a, &b) in p.a_ub.row_iter().zip(&p.b_ub) {
        map_row(a, b, true);
    }

    // slack columns for inequality rows, artificial columns where no slack can start basic
    let n_slack = n_ub;
    let mut n_art = 0;
    let mut needs_art = vec![false; m];
    for (i, (_, rhs, is_ub)) in rows.iter().enumerate() {
        if !*is_ub || *rhs < 0.0 {
            needs_art[i] = true;
            n_art += 1;
        }
    }
    let ncols = n_struct + n_slack + n_art;
    upper.resize(n_struct + n_slack, f64::INFINITY);
    upper.resize(ncols, f64::INFINITY);
    kind.resize(n_struct + n_slack, ColKind::Slack);
    kind.resize(ncols, ColKind::Artificial);

    let w = ncols + 1;
    let mut t = vec![0.0; (m + 1) * w];
    let mut basis = vec![0; m];
    let mut slack_ix = n_struct;
    let mut art_ix = n_struct + n_slack;
    let mut bmax: f64 = 0.0;
    for (i, (r, rhs, is_ub)) in rows.into_iter().enumerate() {
        let row = &mut t[i * w..(i + 1) * w];
        row[..n_struct].copy_from_slice(&r);
        row[ncols] = rhs;
        bmax = bmax.max(rhs.abs());
        let slack = if is_ub {
            row[slack_ix] = 1.0;
            slack_ix += 1;
            Some(slack_ix - 1)
        } else {
            None
        };
        if rhs < 0.0 {
            for v in row.iter_mut() {
                *v = -*v;
            }
        }
        if needs_art[i] {
            row[art_ix] = 1.0;
            basis[i] = art_ix;
            art_ix += 1;
        } else {
            basis[i] = slack.expect("inequality row has a slack");
        }
    }

    let cap = 100 * (m + ncols).max(1);
    let mut in_basis = vec![false; ncols];
    for &b in &basis {
        in_basis[b] = true;
    }
    let mut tab = Tableau {
        m,
        ncols,
        t,
        basis,
        in_basis,
        upper,
        flipped: vec![false; ncols],
        kind,
        enterable: vec![true; ncols],
        iterations: 0,
        cap,
        degenerate: 0,
        bland: false,
    };

    // phase 1
    if n_art > 0 {
        let cost1: Vec<f64> = tab.kind.iter().map(|k| if *k == ColKind::Artificial { 1.0 } else { 0.0 }).collect();
        tab.set_costs(&cost1);
        // phase 1 is bounded below by zero
        let _ = tab.run()?;
        let infeas: f64 = tab
            .basis
            .iter()
            .enumerate()
            .filter(|(_, &b)| tab.kind[b] == ColKind::Artificial)
            .map(|(i, _)| tab.rhs(i).max(0.0))
            .sum();
        if infeas > PHASE1_TOL * (1.0 + bmax) {
            let mut sol = LpSolution::infeasible();
            sol.iterations = tab.iterations;
            if dump_tableau {
                sol.tableau = Some(tab.dump());
            }
            return Ok(sol);
        }
        // drive remaining artificials out of the basis
        for r in 0..m {
            if tab.kind[tab.basis[r]] != ColKind::Artificial {
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for j in 0..ncols {
                if tab.kind[j] == ColKind::Artificial || tab.is_basic(j) || tab.upper[j] == 0.0 {
                    continue;
                }
                let a = tab.at(r, j).abs();
                if a > 1e-7 && best.is_none_or(|(_, ba)| a > ba) {
                    best = Some((j, a));
                }
            }
            if let Some((j, _)) = best {
                tab.pivot(r, j);
            }
        }
        for j in 0..ncols {
            if tab.kind[j] == ColKind::Artificial {
                tab.enterable[j] = false;
                tab.upper[j] = 0.0;
            }
        }
    }

    // phase 2
    let mut cost2 = vec![0.0; ncols];
    for (j, map) in maps.iter().enumerate() {
        let c = p.objective[j];
        match *map {
            VarMap::Fixed(_) => {}
            VarMap::Shift { col, .. } => cost2[col] += c,
            VarMap::Neg { col, .. } => cost2[col] -= c,
            VarMap::Split { pos, neg } => {
                cost2[pos] += c;
                cost2[neg] -= c;
            }
        }
    }
    tab.degenerate = 0;
    tab.set_costs(&cost2);
    let phase = tab.run()?;
    let tableau = dump_tableau.then(|| tab.dump());
    if let Phase::Unbounded = phase {
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            z: None,
            objective_value: None,
            iterations: tab.iterations,
            tableau,
        });
    }

    let y = tab.values();
    let z: Vec<f64> = maps
        .iter()
        .map(|map| match *map {
            VarMap::Fixed(v) => v,
            VarMap::Shift { col, lo } => lo + y[col],
            VarMap::Neg { col, hi } => hi - y[col],
            VarMap::Split { pos, neg } => y[pos] - y[neg],
        })
        .collect();
    let objective_value = crate::linalg::dot(&p.objective, &z);
    Ok(LpSolution {
        status: LpStatus::Optimal,
        z: Some(z),
        objective_value: Some(objective_value),
        iterations: tab.iterations,
        tableau,
    })
}
