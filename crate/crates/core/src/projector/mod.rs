//! Point-hyperplane projection: boundary points are found by ray shooting,
//! expanded into an orthogonal set of boundary points on the same facet, and
//! the facet is fitted through them. New exterior points are generated from
//! intersections of the latest facet with its neighbors.

mod phi;
mod polytope;

pub use phi::{phi_run, reference_interior, PhgConfig};
pub use polytope::{Facet, PhiStats, Polytope, Provenance, RunStatus};

use crate::linalg::{distance, dot, lerp, norm, nullspace_1d, orient_and_normalize, solve_square, sub};
use crate::linalg::{Hyperplane, LinalgError, Mat};
use crate::lp::{self, LpError, LpStatus};
use crate::region::{LinearRegion, RegionError, RegionLp};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// `λ*` at or above `1 - INTERIOR_TOL` counts as reaching the target.
pub const INTERIOR_TOL: f64 = 1e-9;
/// Slack allowed when testing points against facets.
pub const FACET_TOL: f64 = 1e-7;
/// Points closer than this are merged.
pub const POINT_TOL: f64 = 1e-7;
/// Jitter magnitude for the first-iteration exterior point adjustment, relative to `w_max`.
pub const JITTER: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProjectorError {
    #[error("ray origin is not a member of the region")]
    InteriorPointInvalid,
    #[error("boundary point model is infeasible: {0}")]
    ModelInfeasible(String),
    #[error("bad boundary point {point:?}: no displacement along axis {axis}")]
    BadBoundaryPoint { point: Vec<f64>, axis: usize },
    #[error("exterior point adjustment gave up after {attempts} attempts near {point:?}")]
    DepaExhausted { point: Vec<f64>, attempts: usize },
    #[error("the projection has no interior inside the capacity box")]
    EmptyInterior,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Region(#[from] RegionError),
    #[error(transparent)]
    Lp(#[from] LpError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    Interior,
    Exterior,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BpsOutcome {
    pub lambda_star: f64,
    pub boundary_point: Option<Vec<f64>>,
    pub classification: Classification,
}

impl BpsOutcome {
    /// Distance from the boundary point to the target, zero when interior.
    pub fn overshoot(&self, w_in: &[f64], w_gp: &[f64]) -> f64 {
        match self.classification {
            Classification::Interior => 0.0,
            Classification::Exterior => (1.0 - self.lambda_star) * distance(w_in, w_gp),
        }
    }
}

fn check_dim(region: &LinearRegion, w: &[f64]) -> Result<(), ProjectorError> {
    if w.len() != region.n_w {
        return Err(ProjectorError::Dimension(format!("expected {} coordinates, got {}", region.n_w, w.len())));
    }
    Ok(())
}

/// Shoots the ray `w_in → w_gp` and returns how far it stays inside the projection.
pub fn bps(region: &LinearRegion, w_in: &[f64], w_gp: &[f64]) -> Result<BpsOutcome, ProjectorError> {
    check_dim(region, w_in)?;
    check_dim(region, w_gp)?;
    if !region.membership(w_in)? {
        return Err(ProjectorError::InteriorPointInvalid);
    }
    bps_from_member(region, w_in, w_gp)
}

/// [`bps`] for a `w_in` already known to be a member.
pub(crate) fn bps_from_member(region: &LinearRegion, w_in: &[f64], w_gp: &[f64]) -> Result<BpsOutcome, ProjectorError> {
    let d = sub(w_gp, w_in);
    let mut map = Mat::zeros(region.n_w, 1);
    for (i, v) in d.iter().enumerate() {
        map.row_mut(i)[0] = *v;
    }
    let mut model = RegionLp::new(region, 1).copy(w_in.to_vec(), map);
    model.t_bounds[0] = (0.0, 1.0);
    model.objective_t[0] = -1.0;
    let s = lp::solve(&model.finish())?;
    if s.status != LpStatus::Optimal {
        return Err(ProjectorError::InteriorPointInvalid);
    }
    let lambda = s.z.expect("optimal")[0].clamp(0.0, 1.0);
    if lambda >= 1.0 - INTERIOR_TOL {
        return Ok(BpsOutcome { lambda_star: lambda, boundary_point: None, classification: Classification::Interior });
    }
    Ok(BpsOutcome {
        lambda_star: lambda,
        boundary_point: Some(lerp(w_in, w_gp, lambda)),
        classification: Classification::Exterior,
    })
}

/// Minimizes coordinate `axis` of a new boundary point on the facet through `w_b`.
pub fn nbpg(region: &LinearRegion, w_b: &[f64], prior: &[Vec<f64>], axis: usize) -> Result<Vec<f64>, ProjectorError> {
    nbpg_with(region, w_b, prior, axis, false)
}

/// [`nbpg`] with a choice of optimization sense.
pub fn nbpg_with(
    region: &LinearRegion,
    w_b: &[f64],
    prior: &[Vec<f64>],
    axis: usize,
    maximize: bool,
) -> Result<Vec<f64>, ProjectorError> {
    check_dim(region, w_b)?;
    let n = region.n_w;
    let mirror: Vec<f64> = w_b.iter().map(|v| 2.0 * v).collect();
    let mut neg = Mat::zeros(n, n);
    for i in 0..n {
        neg.row_mut(i)[i] = -1.0;
    }
    let mut model = RegionLp::new(region, n).copy(vec![0.0; n], Mat::identity(n)).copy(mirror, neg);
    for q in prior {
        let u = sub(q, w_b);
        let len = norm(&u);
        if len == 0.0 {
            continue;
        }
        let u: Vec<f64> = u.iter().map(|v| v / len).collect();
        let rhs = dot(&u, w_b);
        model = model.t_equality(u, rhs);
    }
    model.objective_t[axis] = if maximize { -1.0 } else { 1.0 };
    let s = lp::solve(&model.finish())?;
    match s.status {
        LpStatus::Optimal => Ok(s.z.expect("optimal")[..n].to_vec()),
        LpStatus::Infeasible => Err(ProjectorError::ModelInfeasible(format!("at {w_b:?}"))),
        LpStatus::Unbounded => Err(ProjectorError::ModelInfeasible(format!("unbounded at {w_b:?}"))),
    }
}

/// Generates `n - 1` boundary points whose offsets from `w_b` are mutually orthogonal.
///
/// Each point first tries to minimize its own coordinate, then to maximize
/// it, then the other coordinates in turn; a point moving less than `eps`
/// from `w_b` is rejected.
pub fn obg(region: &LinearRegion, w_b: &[f64], eps: f64) -> Result<Vec<Vec<f64>>, ProjectorError> {
    check_dim(region, w_b)?;
    let n = region.n_w;
    let mut points: Vec<Vec<f64>> = Vec::with_capacity(n.saturating_sub(1));
    for i in 0..n.saturating_sub(1) {
        let order = std::iter::once(i).chain((0..n).filter(|&k| k != i));
        let mut found = None;
        'axes: for axis in order {
            for maximize in [false, true] {
                match nbpg_with(region, w_b, &points, axis, maximize) {
                    Ok(p) if distance(&p, w_b) > eps => {
                        found = Some(p);
                        break 'axes;
                    }
                    Ok(_) | Err(ProjectorError::ModelInfeasible(_)) => {}
                    Err(e) => return Err(e),
                }
            }
        }
        match found {
            Some(p) => points.push(p),
            None => return Err(ProjectorError::BadBoundaryPoint { point: w_b.to_vec(), axis: i }),
        }
    }
    Ok(points)
}

/// Hyperplane through `w_b` and `new_points`, oriented so `interior` is inside.
pub fn fit_hyperplane(w_b: &[f64], new_points: &[Vec<f64>], interior: &[f64]) -> Result<Hyperplane, LinalgError> {
    let n = w_b.len();
    let mut m = Mat::with_cols(n + 1);
    for p in std::iter::once(w_b).chain(new_points.iter().map(Vec::as_slice)) {
        if p.len() != n {
            return Err(LinalgError::Dimension(format!("point of length {} in dimension {n}", p.len())));
        }
        let mut row = p.to_vec();
        row.push(1.0);
        m.push_row(&row);
    }
    let v = nullspace_1d(&m)?;
    orient_and_normalize(&v[..n], v[n], interior)
}

/// Picks a replacement for an exterior point whose boundary point was bad.
///
/// With a previous boundary point, walks from it toward `w_ex_bad` as far as
/// the projection allows and returns the midpoint between that point and
/// `w_ex_bad`. Without one, perturbs `w_ex_bad` by seeded jitter inside the box.
pub fn depa<R: Rng>(
    region: &LinearRegion,
    w_ex_bad: &[f64],
    w_b_pre: Option<&[f64]>,
    rng: &mut R,
) -> Result<Vec<f64>, ProjectorError> {
    check_dim(region, w_ex_bad)?;
    if let Some(pre) = w_b_pre {
        match bps(region, pre, w_ex_bad) {
            Ok(o) => {
                let q = lerp(pre, w_ex_bad, o.lambda_star);
                return Ok(lerp(&q, w_ex_bad, 0.5));
            }
            Err(ProjectorError::InteriorPointInvalid) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(jitter(w_ex_bad, region.w_max(), rng))
}

fn jitter<R: Rng>(w: &[f64], w_max: &[f64], rng: &mut R) -> Vec<f64> {
    w.iter().zip(w_max).map(|(&v, &m)| (v + rng.gen_range(-1.0..=1.0) * JITTER * m).clamp(0.0, m)).collect()
}

/// Indices of facets of `polytope` that meet `h` inside the polytope.
pub fn adjacent_facets(polytope: &Polytope, h: &Hyperplane) -> Result<Vec<usize>, LpError> {
    let base = polytope.lp();
    let mut out = Vec::new();
    for (k, f) in polytope.planes().enumerate() {
        let mut p = base.clone();
        p.add_eq(&f.normal, -f.offset);
        p.add_eq(&h.normal, -h.offset);
        if lp::feasible(&p)? {
            out.push(k);
        }
    }
    Ok(out)
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub(crate) fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Intersection points of `h` with every `(n-1)`-subset of `adjacent`, kept
/// only when inside `polytope` (which already contains `h`). Also returns the
/// number of singular systems skipped.
pub(crate) fn intersection_points(polytope: &Polytope, h: &Hyperplane, adjacent: &[usize]) -> (Vec<Vec<f64>>, usize) {
    let n = h.dim();
    let mut out: Vec<Vec<f64>> = Vec::new();
    let mut singular = 0;
    let planes: Vec<&Hyperplane> = polytope.planes().collect();
    for subset in subsets(adjacent.len(), n - 1) {
        let mut a = Mat::with_cols(n);
        let mut b = Vec::with_capacity(n);
        a.push_row(&h.normal);
        b.push(-h.offset);
        for &s in &subset {
            let f = planes[adjacent[s]];
            a.push_row(&f.normal);
            b.push(-f.offset);
        }
        let Ok(p) = solve_square(&a, &b) else {
            singular += 1;
            continue;
        };
        if !polytope.contains(&p, FACET_TOL) {
            continue;
        }
        if out.iter().any(|q| distance(q, &p) <= POINT_TOL) {
            continue;
        }
        out.push(p);
    }
    (out, singular)
}

/// Intersection points of `h` with adjacent facets that lie in `polytope`
/// but outside the projection, as seen by rays from the polytope's interior point.
pub fn candidate_exterior_points(
    region: &LinearRegion,
    polytope: &Polytope,
    h: &Hyperplane,
    adjacent: &[usize],
) -> Result<Vec<Vec<f64>>, ProjectorError> {
    let center = &polytope.interior;
    let (points, _) = intersection_points(polytope, h, adjacent);
    let mut out = Vec::new();
    for p in points {
        if bps(region, center, &p)?.overshoot(center, &p) > FACET_TOL {
            out.push(p);
        }
    }
    Ok(out)
}

/// Whether `h` may join `polytope`. A facet within `phi_deg` of an existing
/// one is rejected; at `phi_deg = 0` only duplicates are.
pub fn angle_accept(h: &Hyperplane, polytope: &Polytope, phi_deg: f64) -> bool {
    let cos_phi = phi_deg.to_radians().cos();
    polytope.planes().all(|f| {
        if f.same_as(h) {
            return false;
        }
        phi_deg <= 0.0 || crate::linalg::facet_cosine(f, h) < cos_phi
    })
}
