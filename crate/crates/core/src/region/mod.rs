//! The linearized feasible region over stacked variables `(w, x)` and the
//! membership test that defines its projection onto `w`.

mod build;
mod case;
mod matpower;

pub use build::{build_linear_region, BuildOptions};
pub use case::{parse_case_json, Branch, Bus, BusType, Generator, NetworkCase};
pub use matpower::parse_matpower_subset;

use crate::linalg::{dot, Mat};
use crate::lp::{self, LpError, LpProblem, LpStatus};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::OnceLock;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegionError {
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },
    #[error("validation error: {0}")]
    Validation(String),
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// Buses hosting renewable generation and their capacities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegSpec {
    pub nodes: Vec<usize>,
    pub w_max: Vec<f64>,
}

impl RegSpec {
    pub fn new(nodes: Vec<usize>, w_max: Vec<f64>) -> Self {
        RegSpec { nodes, w_max }
    }

    /// Same capacity at every node.
    pub fn uniform(nodes: Vec<usize>, w_max: f64) -> Self {
        let n = nodes.len();
        RegSpec { nodes, w_max: vec![w_max; n] }
    }

    pub fn dim(&self) -> usize {
        self.nodes.len()
    }

    pub fn validate(&self) -> Result<(), RegionError> {
        if self.nodes.is_empty() {
            return Err(RegionError::Validation("no REG nodes given".into()));
        }
        if self.nodes.len() != self.w_max.len() {
            return Err(RegionError::Validation(format!(
                "{} REG nodes but {} capacities",
                self.nodes.len(),
                self.w_max.len()
            )));
        }
        let mut seen = std::collections::BTreeSet::new();
        for &n in &self.nodes {
            if !seen.insert(n) {
                return Err(RegionError::Validation(format!("REG node {n} listed twice")));
            }
        }
        if let Some(c) = self.w_max.iter().find(|c| !(c.is_finite() && **c > 0.0)) {
            return Err(RegionError::Validation(format!("REG capacity must be positive, got {c}")));
        }
        Ok(())
    }
}

/// Dense constraint rows `a · z (=|<=) b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "BlockRepr", into = "BlockRepr")]
pub struct ConstraintBlock {
    pub a: Mat,
    pub b: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct BlockRepr {
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    cols: usize,
}

impl From<BlockRepr> for ConstraintBlock {
    fn from(r: BlockRepr) -> Self {
        let mut a = Mat::with_cols(r.cols);
        for row in &r.rows {
            a.push_row(row);
        }
        ConstraintBlock { a, b: r.rhs }
    }
}

impl From<ConstraintBlock> for BlockRepr {
    fn from(c: ConstraintBlock) -> Self {
        BlockRepr { rows: c.a.row_iter().map(<[f64]>::to_vec).collect(), rhs: c.b, cols: c.a.cols() }
    }
}

impl ConstraintBlock {
    pub fn empty(cols: usize) -> Self {
        ConstraintBlock { a: Mat::with_cols(cols), b: Vec::new() }
    }

    pub fn push(&mut self, row: &[f64], rhs: f64) {
        self.a.push_row(row);
        self.b.push(rhs);
    }

    pub fn len(&self) -> usize {
        self.b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.b.is_empty()
    }
}

/// `{(w, x) | A_eq z = b_eq, A_in z <= b_in}` with the `w` columns first.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinearRegion {
    pub n_w: usize,
    pub n_x: usize,
    pub eq_block: ConstraintBlock,
    pub ineq_block: ConstraintBlock,
    pub variable_index: BTreeMap<String, usize>,
    /// Capacity box used to bound the projection.
    pub reg: RegSpec,
    #[serde(skip)]
    form: OnceLock<LpForm>,
}

impl PartialEq for LinearRegion {
    fn eq(&self, other: &Self) -> bool {
        self.n_w == other.n_w
            && self.n_x == other.n_x
            && self.eq_block == other.eq_block
            && self.ineq_block == other.ineq_block
            && self.variable_index == other.variable_index
            && self.reg == other.reg
    }
}

/// A region row split into its `w` part and sparse `x` part.
#[derive(Debug, Clone)]
struct FormRow {
    w: Vec<f64>,
    x: Vec<(usize, f64)>,
    b: f64,
}

/// Region rows prepared for LP assembly; single-variable `x` rows become bounds.
#[derive(Debug, Clone)]
struct LpForm {
    x_lo: Vec<f64>,
    x_hi: Vec<f64>,
    eq: Vec<FormRow>,
    ineq: Vec<FormRow>,
}

impl LinearRegion {
    pub fn new(
        n_w: usize,
        n_x: usize,
        eq_block: ConstraintBlock,
        ineq_block: ConstraintBlock,
        variable_index: BTreeMap<String, usize>,
        reg: RegSpec,
    ) -> Result<Self, RegionError> {
        let r = LinearRegion { n_w, n_x, eq_block, ineq_block, variable_index, reg, form: OnceLock::new() };
        r.validate()?;
        Ok(r)
    }

    /// Region with generated variable names `w1..`, `x1..`.
    pub fn from_blocks(
        n_w: usize,
        n_x: usize,
        eq_block: ConstraintBlock,
        ineq_block: ConstraintBlock,
        w_max: Vec<f64>,
    ) -> Result<Self, RegionError> {
        let mut index = BTreeMap::new();
        for i in 0..n_w {
            index.insert(format!("w{}", i + 1), i);
        }
        for k in 0..n_x {
            index.insert(format!("x{}", k + 1), n_w + k);
        }
        let reg = RegSpec::new((1..=n_w).collect(), w_max);
        LinearRegion::new(n_w, n_x, eq_block, ineq_block, index, reg)
    }

    pub fn from_json(text: &str) -> Result<Self, RegionError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let r: LinearRegion = serde_path_to_error::deserialize(de)
            .map_err(|e| RegionError::Parse { location: e.path().to_string(), message: e.into_inner().to_string() })?;
        r.validate()?;
        Ok(r)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("region serializes")
    }

    pub fn validate(&self) -> Result<(), RegionError> {
        let cols = self.n_w + self.n_x;
        let bad = |m: String| Err(RegionError::Validation(m));
        if self.eq_block.a.cols() != cols || self.ineq_block.a.cols() != cols {
            return bad(format!("constraint blocks must have {cols} columns"));
        }
        if self.eq_block.a.rows() != self.eq_block.b.len() || self.ineq_block.a.rows() != self.ineq_block.b.len() {
            return bad("constraint row and rhs counts differ".into());
        }
        if !(self.eq_block.a.is_finite() && self.ineq_block.a.is_finite()) {
            return bad("non-finite constraint coefficient".into());
        }
        if self.reg.dim() != self.n_w {
            return bad(format!("region has {} w-columns but {} REG nodes", self.n_w, self.reg.dim()));
        }
        self.reg.validate()
    }

    pub fn w_max(&self) -> &[f64] {
        &self.reg.w_max
    }

    fn form(&self) -> &LpForm {
        self.form.get_or_init(|| {
            let split = |a: &[f64], b: f64| FormRow {
                w: a[..self.n_w].to_vec(),
                x: a[self.n_w..].iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(k, v)| (k, *v)).collect(),
                b,
            };
            let mut x_lo = vec![f64::NEG_INFINITY; self.n_x];
            let mut x_hi = vec![f64::INFINITY; self.n_x];
            let mut eq = Vec::new();
            let mut ineq = Vec::new();
            for (a, &b) in self.eq_block.a.row_iter().zip(&self.eq_block.b) {
                let row = split(a, b);
                if row.x.len() == 1 && row.w.iter().all(|v| *v == 0.0) {
                    let (k, c) = row.x[0];
                    let v = row.b / c;
                    x_lo[k] = x_lo[k].max(v);
                    x_hi[k] = x_hi[k].min(v);
                } else {
                    eq.push(row);
                }
            }
            for (a, &b) in self.ineq_block.a.row_iter().zip(&self.ineq_block.b) {
                let row = split(a, b);
                if row.x.len() == 1 && row.w.iter().all(|v| *v == 0.0) {
                    let (k, c) = row.x[0];
                    let v = row.b / c;
                    if c > 0.0 {
                        x_hi[k] = x_hi[k].min(v);
                    } else {
                        x_lo[k] = x_lo[k].max(v);
                    }
                } else {
                    ineq.push(row);
                }
            }
            LpForm { x_lo, x_hi, eq, ineq }
        })
    }

    /// Whether some `x` completes `w` to a point of the region.
    pub fn membership(&self, w: &[f64]) -> Result<bool, RegionError> {
        if w.len() != self.n_w {
            return Err(RegionError::Validation(format!("expected {} coordinates, got {}", self.n_w, w.len())));
        }
        let p = RegionLp::new(self, 0).copy(w.to_vec(), Mat::zeros(self.n_w, 0)).finish();
        Ok(lp::feasible(&p)?)
    }

    /// Maximizes `c · w` over the region; `None` when unbounded.
    pub fn support(&self, c: &[f64]) -> Result<Option<f64>, RegionError> {
        let mut lp = RegionLp::new(self, self.n_w).copy(vec![0.0; self.n_w], Mat::identity(self.n_w));
        lp.objective_t = c.iter().map(|v| -v).collect();
        let p = lp.finish();
        let s = lp::solve(&p)?;
        match s.status {
            LpStatus::Optimal => Ok(s.objective_value.map(|v| -v)),
            LpStatus::Unbounded => Ok(None),
            LpStatus::Infeasible => Err(RegionError::Validation("region is empty".into())),
        }
    }
}

/// Builder for LPs over `(t, x_1, .., x_k)` where copy `j` of the region is
/// evaluated at `w = w0_j + M_j t` with its own `x_j`.
pub(crate) struct RegionLp<'a> {
    region: &'a LinearRegion,
    n_t: usize,
    pub t_bounds: Vec<(f64, f64)>,
    pub objective_t: Vec<f64>,
    copies: Vec<(Vec<f64>, Mat)>,
    extra_eq: Vec<(Vec<f64>, f64)>,
}

impl<'a> RegionLp<'a> {
    pub fn new(region: &'a LinearRegion, n_t: usize) -> Self {
        RegionLp {
            region,
            n_t,
            t_bounds: vec![(f64::NEG_INFINITY, f64::INFINITY); n_t],
            objective_t: vec![0.0; n_t],
            copies: Vec::new(),
            extra_eq: Vec::new(),
        }
    }

    pub fn copy(mut self, w0: Vec<f64>, map: Mat) -> Self {
        debug_assert_eq!(map.rows(), self.region.n_w);
        debug_assert_eq!(map.cols(), self.n_t);
        self.copies.push((w0, map));
        self
    }

    /// Extra equality row over `t` only.
    pub fn t_equality(mut self, row: Vec<f64>, rhs: f64) -> Self {
        self.extra_eq.push((row, rhs));
        self
    }

    pub fn finish(self) -> LpProblem {
        let form = self.region.form();
        let n_x = self.region.n_x;
        let n_vars = self.n_t + n_x * self.copies.len();
        let mut p = LpProblem::new(n_vars);
        p.objective[..self.n_t].copy_from_slice(&self.objective_t);
        for (j, b) in self.t_bounds.iter().enumerate() {
            p.set_bounds(j, b.0, b.1);
        }
        let mut row = vec![0.0; n_vars];
        for (c, (w0, map)) in self.copies.iter().enumerate() {
            let base = self.n_t + c * n_x;
            for k in 0..n_x {
                p.set_bounds(base + k, form.x_lo[k], form.x_hi[k]);
            }
            for (rows, is_eq) in [(&form.eq, true), (&form.ineq, false)] {
                for r in rows {
                    row.iter_mut().for_each(|v| *v = 0.0);
                    let rhs = r.b - dot(&r.w, w0);
                    let mut any = false;
                    for t in 0..self.n_t {
                        let v: f64 = r.w.iter().enumerate().map(|(i, a)| a * map[(i, t)]).sum();
                        if v != 0.0 {
                            row[t] = v;
                            any = true;
                        }
                    }
                    for &(k, v) in &r.x {
                        row[base + k] = v;
                        any = true;
                    }
                    if !any {
                        // constant row: keep it only when violated so the LP reports infeasibility
                        let ok = if is_eq { rhs.abs() <= 1e-9 } else { rhs >= -1e-9 };
                        if ok {
                            continue;
                        }
                    }
                    if is_eq {
                        p.add_eq(&row, rhs);
                    } else {
                        p.add_le(&row, rhs);
                    }
                }
            }
        }
        for (r, rhs) in &self.extra_eq {
            row.iter_mut().for_each(|v| *v = 0.0);
            row[..self.n_t].copy_from_slice(r);
            p.add_eq(&row, *rhs);
        }
        p
    }
}
