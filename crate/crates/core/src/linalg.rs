//! Dense linear algebra and hyperplane algebra.
//!
//! Everything here works on small dense problems (the projected space is at
//! most a couple of dozen dimensions), so plain Gaussian elimination with
//! partial pivoting is used throughout.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute pivot threshold for [`solve_square`].
pub const PIVOT_TOL: f64 = 1e-11;
/// Relative rank threshold for [`nullspace_1d`].
pub const RANK_TOL: f64 = 1e-9;
/// Minimum normal length accepted by [`orient_and_normalize`].
pub const MIN_NORMAL: f64 = 1e-10;
/// Two facets are duplicates when their cosine is at least `1 - DEDUP_COS`...
pub const DEDUP_COS: f64 = 1e-10;
/// ...and their offsets differ by at most this much.
pub const DEDUP_OFFSET: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is singular (pivot {pivot:.3e} in column {column})")]
    Singular { column: usize, pivot: f64 },
    #[error("nullspace is not one-dimensional (numerical rank {rank}, expected {expected})")]
    Rank { rank: usize, expected: usize },
    #[error("reference point lies on the hyperplane (margin {margin:.3e})")]
    Degenerate { margin: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    /// Empty matrix with a fixed column count, grown with [`Mat::push_row`].
    pub fn with_cols(cols: usize) -> Self {
        Mat { rows: 0, cols, data: Vec::new() }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut m = Mat::with_cols(cols);
        for r in rows {
            m.push_row(r.as_ref());
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn push_row(&mut self, row: &[f64]) {
        assert_eq!(row.len(), self.cols, "row length does not match column count");
        self.data.extend_from_slice(row);
        self.rows += 1;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        self.row_iter().map(|r| dot(r, x)).collect()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// `a + t * (b - a)`
pub fn lerp(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
}

/// Solves `A x = b` for square `A` by Gaussian elimination with partial pivoting.
pub fn solve_square(a: &Mat, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    let n = a.rows();
    if a.cols() != n || b.len() != n {
        return Err(LinalgError::Dimension(format!(
            "expected square system, got {}x{} with rhs {}",
            a.rows(),
            a.cols(),
            b.len()
        )));
    }
    // augmented copy
    let w = n + 1;
    let mut m = vec![0.0; n * w];
    for i in 0..n {
        m[i * w..i * w + n].copy_from_slice(a.row(i));
        m[i * w + n] = b[i];
    }
    for col in 0..n {
        let (piv_row, piv) = (col..n)
            .map(|r| (r, m[r * w + col]))
            .max_by(|x, y| x.1.abs().total_cmp(&y.1.abs()))
            .expect("non-empty pivot range");
        if piv.abs() < PIVOT_TOL {
            return Err(LinalgError::Singular { column: col, pivot: piv.abs() });
        }
        if piv_row != col {
            for k in 0..w {
                m.swap(col * w + k, piv_row * w + k);
            }
        }
        for r in col + 1..n {
            let f = m[r * w + col] / piv;
            if f != 0.0 {
                for k in col..w {
                    m[r * w + k] -= f * m[col * w + k];
                }
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = m[i * w + n];
        for k in i + 1..n {
            s -= m[i * w + k] * x[k];
        }
        x[i] = s / m[i * w + i];
    }
    Ok(x)
}

/// Unit vector spanning the nullspace of an `n x (n+1)` matrix.
///
/// Fails with [`LinalgError::Rank`] when the numerical rank is below `n`,
/// i.e. the nullspace has more than one dimension.
pub fn nullspace_1d(m: &Mat) -> Result<Vec<f64>, LinalgError> {
    let rows = m.rows();
    let cols = m.cols();
    if cols != rows + 1 {
        return Err(LinalgError::Dimension(format!("nullspace_1d expects n x (n+1), got {rows}x{cols}")));
    }
    let scale = m.max_abs();
    if scale == 0.0 {
        return Err(LinalgError::Rank { rank: 0, expected: rows });
    }
    let tol = RANK_TOL * scale;
    let mut a: Vec<f64> = (0..rows).flat_map(|i| m.row(i).to_vec()).collect();
    let mut pivot_cols = Vec::with_capacity(rows);
    let mut free_cols = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            free_cols.push(c);
            continue;
        }
        let (pr, pv) = (r..rows)
            .map(|i| (i, a[i * cols + c]))
            .max_by(|x, y| x.1.abs().total_cmp(&y.1.abs()))
            .expect("non-empty pivot range");
        if pv.abs() <= tol {
            free_cols.push(c);
            continue;
        }
        if pr != r {
            for k in 0..cols {
                a.swap(r * cols + k, pr * cols + k);
            }
        }
        for k in 0..cols {
            a[r * cols + k] /= pv;
        }
        for i in 0..rows {
            if i != r {
                let f = a[i * cols + c];
                if f != 0.0 {
                    for k in 0..cols {
                        a[i * cols + k] -= f * a[r * cols + k];
                    }
                }
            }
        }
        pivot_cols.push(c);
        r += 1;
    }
    if free_cols.len() != 1 {
        return Err(LinalgError::Rank { rank: pivot_cols.len(), expected: rows });
    }
    let free = free_cols[0];
    let mut v = vec![0.0; cols];
    v[free] = 1.0;
    for (i, &pc) in pivot_cols.iter().enumerate() {
        v[pc] = -a[i * cols + free];
    }
    let len = norm(&v);
    v.iter_mut().for_each(|x| *x /= len);
    Ok(v)
}

/// Half-space `normal · w + offset <= 0` with a unit normal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperplane {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Hyperplane {
    pub fn dim(&self) -> usize {
        self.normal.len()
    }

    /// Signed value `normal · w + offset`; positive means violated.
    pub fn eval(&self, w: &[f64]) -> f64 {
        dot(&self.normal, w) + self.offset
    }

    /// Whether `self` and `other` describe the same facet.
    pub fn same_as(&self, other: &Hyperplane) -> bool {
        facet_cosine(self, other) >= 1.0 - DEDUP_COS && (self.offset - other.offset).abs() <= DEDUP_OFFSET
    }
}

/// Normalizes `(c, d)` and orients it so that `interior` is on the `<= 0` side.
pub fn orient_and_normalize(c: &[f64], d: f64, interior: &[f64]) -> Result<Hyperplane, LinalgError> {
    if c.len() != interior.len() {
        return Err(LinalgError::Dimension(format!(
            "normal has {} entries, interior point {}",
            c.len(),
            interior.len()
        )));
    }
    let len = norm(c);
    if len <= MIN_NORMAL {
        return Err(LinalgError::Degenerate { margin: 0.0 });
    }
    let mut normal: Vec<f64> = c.iter().map(|x| x / len).collect();
    let mut offset = d / len;
    let margin = dot(&normal, interior) + offset;
    if margin.abs() <= MIN_NORMAL {
        return Err(LinalgError::Degenerate { margin });
    }
    if margin > 0.0 {
        normal.iter_mut().for_each(|x| *x = -*x);
        offset = -offset;
    }
    // renormalize so the unit-length invariant holds to rounding
    let len = norm(&normal);
    normal.iter_mut().for_each(|x| *x /= len);
    offset /= len;
    Ok(Hyperplane { normal, offset })
}

/// Cosine of the angle between two facet normals, clamped to `[-1, 1]`.
pub fn facet_cosine(h1: &Hyperplane, h2: &Hyperplane) -> f64 {
    dot(&h1.normal, &h2.normal).clamp(-1.0, 1.0)
}
