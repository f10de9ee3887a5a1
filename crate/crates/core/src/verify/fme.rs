//! Fourier–Motzkin elimination of the `x` columns, used as an oracle for
//! small regions.

use super::VerifyError;
use crate::linalg::{norm, Hyperplane, DEDUP_COS, DEDUP_OFFSET};
use crate::lp::{self, LpProblem, LpStatus};
use crate::projector::{Polytope, Provenance};
use crate::region::LinearRegion;

pub const FME_MAX_X: usize = 10;
pub const FME_MAX_ROWS: usize = 60;

const ZERO: f64 = 1e-12;
const REDUNDANT_TOL: f64 = 1e-9;

/// `a · z <= b` over all region columns.
#[derive(Debug, Clone)]
struct Row {
    a: Vec<f64>,
    b: f64,
}

impl Row {
    fn normalized(mut self) -> Option<Row> {
        let len = norm(&self.a);
        if len <= ZERO {
            return None;
        }
        self.a.iter_mut().for_each(|v| *v /= len);
        self.b /= len;
        Some(self)
    }

    fn same_as(&self, other: &Row) -> bool {
        let cos: f64 = self.a.iter().zip(&other.a).map(|(x, y)| x * y).sum();
        cos >= 1.0 - DEDUP_COS && (self.b - other.b).abs() <= DEDUP_OFFSET
    }
}

/// Projects the region onto `w` and intersects with its capacity box.
pub fn fme_project(region: &LinearRegion) -> Result<Polytope, VerifyError> {
    let n_w = region.n_w;
    let n_x = region.n_x;
    let n_rows = region.ineq_block.len();
    if n_x > FME_MAX_X || n_rows > FME_MAX_ROWS {
        return Err(VerifyError::SizeGuardExceeded { n_x, rows: n_rows, max_x: FME_MAX_X, max_rows: FME_MAX_ROWS });
    }
    let cols = n_w + n_x;
    let mut ineq: Vec<Row> =
        region.ineq_block.a.row_iter().zip(&region.ineq_block.b).map(|(a, &b)| Row { a: a.to_vec(), b }).collect();
    for (i, &hi) in region.w_max().iter().enumerate() {
        let mut up = vec![0.0; cols];
        up[i] = 1.0;
        ineq.push(Row { a: up.clone(), b: hi });
        up[i] = -1.0;
        ineq.push(Row { a: up, b: 0.0 });
    }
    let mut eqs: Vec<Row> =
        region.eq_block.a.row_iter().zip(&region.eq_block.b).map(|(a, &b)| Row { a: a.to_vec(), b }).collect();
    let mut live: Vec<bool> = vec![true; cols];

    // equalities: pivot out one x column each, by substitution
    while let Some(e) = eqs.pop() {
        let pivot = (n_w..cols)
            .filter(|&k| live[k])
            .max_by(|&i, &j| e.a[i].abs().total_cmp(&e.a[j].abs()))
            .filter(|&k| e.a[k].abs() > ZERO);
        let Some(k) = pivot else {
            // an equality on w alone becomes two inequalities
            let neg = Row { a: e.a.iter().map(|v| -v).collect(), b: -e.b };
            ineq.push(e);
            ineq.push(neg);
            continue;
        };
        let substitute = |r: &mut Row| {
            let f = r.a[k] / e.a[k];
            if f != 0.0 {
                r.a.iter_mut().zip(&e.a).for_each(|(x, y)| *x -= f * y);
                r.b -= f * e.b;
                r.a[k] = 0.0;
            }
        };
        eqs.iter_mut().for_each(substitute);
        ineq.iter_mut().for_each(substitute);
        live[k] = false;
    }
    let mut rows = prune(ineq, &live)?;

    for k in n_w..cols {
        if !live[k] {
            continue;
        }
        let (mut pos, mut neg, mut rest) = (Vec::new(), Vec::new(), Vec::new());
        for r in rows {
            if r.a[k] > ZERO {
                pos.push(r);
            } else if r.a[k] < -ZERO {
                neg.push(r);
            } else {
                rest.push(r);
            }
        }
        for p in &pos {
            for q in &neg {
                let (sp, sq) = (-q.a[k], p.a[k]);
                let mut a: Vec<f64> = p.a.iter().zip(&q.a).map(|(x, y)| sp * x + sq * y).collect();
                a[k] = 0.0;
                rest.push(Row { a, b: sp * p.b + sq * q.b });
            }
        }
        live[k] = false;
        rows = prune(rest, &live)?;
    }

    let interior_guess = vec![0.0; n_w];
    let mut poly = Polytope::from_box(region.w_max(), interior_guess);
    let boxes: Vec<Hyperplane> = poly.planes().cloned().collect();
    for r in rows {
        let h = Hyperplane { normal: r.a[..n_w].to_vec(), offset: -r.b };
        if boxes.iter().any(|b| b.same_as(&h)) {
            continue;
        }
        poly.push(h, Provenance::Discovered);
    }
    let planes: Vec<Hyperplane> = poly.planes().cloned().collect();
    match Polytope::chebyshev_center(&planes, n_w)? {
        Some((c, r)) if r > 0.0 => poly.interior = c,
        Some(_) => {}
        None => return Err(VerifyError::EmptyRegion),
    }
    Ok(poly)
}

/// Normalizes, drops trivial and duplicate rows, then removes rows implied by
/// the others (one LP each, over the columns still in play).
fn prune(rows: Vec<Row>, live: &[bool]) -> Result<Vec<Row>, VerifyError> {
    let mut kept: Vec<Row> = Vec::new();
    for r in rows {
        match r.clone().normalized() {
            Some(r) => {
                if !kept.iter().any(|k| k.same_as(&r)) {
                    kept.push(r);
                }
            }
            None if r.b < -REDUNDANT_TOL => return Err(VerifyError::EmptyRegion),
            None => {}
        }
    }
    let active: Vec<usize> = (0..live.len()).filter(|&j| live[j]).collect();
    let mut i = 0;
    while i < kept.len() {
        let mut p = LpProblem::new(active.len());
        for (j, r) in kept.iter().enumerate() {
            if j == i {
                continue;
            }
            let row: Vec<f64> = active.iter().map(|&c| r.a[c]).collect();
            p.add_le(&row, r.b);
        }
        // keep the tested row relaxed so the LP stays bounded
        let row: Vec<f64> = active.iter().map(|&c| kept[i].a[c]).collect();
        p.add_le(&row, kept[i].b + 1.0);
        p.objective = row.iter().map(|v| -v).collect();
        let s = lp::solve(&p)?;
        let redundant = match s.status {
            LpStatus::Optimal => -s.objective_value.expect("optimal") <= kept[i].b + REDUNDANT_TOL,
            LpStatus::Infeasible => return Err(VerifyError::EmptyRegion),
            LpStatus::Unbounded => false,
        };
        if redundant {
            kept.remove(i);
        } else {
            i += 1;
        }
    }
    Ok(kept)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::region::fixtures::{toy_region, w_only};
    use crate::region::ConstraintBlock;

    #[test]
    fn toy_region_gives_box_and_diagonal() {
        let p = fme_project(&toy_region()).unwrap();
        assert_eq!(p.facets.len(), 5);
        let h = p.discovered().next().unwrap();
        let s = 0.5f64.sqrt();
        assert!((h.normal[0] - s).abs() < 1e-12 && (h.offset + 1.5 * s).abs() < 1e-12);
        assert!(p.margin(&p.interior) < 0.0);
    }

    #[test]
    fn uncoupled_x_leaves_box() {
        let mut ineq = ConstraintBlock::empty(3);
        ineq.push(&[0.0, 0.0, 1.0], 3.0);
        ineq.push(&[-1.0, 0.0, 0.0], 0.0);
        let r = LinearRegion::from_blocks(2, 1, ConstraintBlock::empty(3), ineq, vec![1.0, 1.0]).unwrap();
        let p = fme_project(&r).unwrap();
        assert_eq!(p.facets.len(), 4);
    }

    #[test]
    fn w_only_rows_pass_through_normalized() {
        let r = w_only(2, &[(vec![2.0, 2.0], 3.0)], 1.0);
        let p = fme_project(&r).unwrap();
        let h = p.discovered().next().unwrap();
        let s = 0.5f64.sqrt();
        assert!((h.normal[1] - s).abs() < 1e-12 && (h.offset + 1.5 * s).abs() < 1e-12);
    }

    #[test]
    fn size_guard() {
        let ineq = ConstraintBlock::empty(13);
        let r = LinearRegion::from_blocks(2, 11, ConstraintBlock::empty(13), ineq, vec![1.0, 1.0]).unwrap();
        assert!(matches!(fme_project(&r), Err(VerifyError::SizeGuardExceeded { .. })));
    }
}
