use super::{
    adjacent_facets, angle_accept, bps_from_member, depa, fit_hyperplane, intersection_points, obg, BpsOutcome,
    PhiStats, Polytope, ProjectorError, Provenance, RunStatus, FACET_TOL, POINT_TOL,
};
use crate::linalg::{distance, dot, norm, sub, Mat};
use crate::lp::{self, LpStatus};
use crate::region::{LinearRegion, RegionLp};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{HashSet, VecDeque};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhgConfig {
    /// Maximum tolerated angle between facets, in degrees.
    pub phi_deg: f64,
    /// Minimum displacement for a new boundary point.
    pub eps: f64,
    pub max_iterations: usize,
    pub depa_retry_cap: usize,
    pub seed: u64,
}

impl Default for PhgConfig {
    fn default() -> Self {
        PhgConfig { phi_deg: 0.0, eps: 1e-6, max_iterations: 10_000, depa_retry_cap: 50, seed: 42 }
    }
}

impl PhgConfig {
    pub fn validate(&self) -> Result<(), ProjectorError> {
        if !(self.phi_deg >= 0.0 && self.phi_deg < 90.0) {
            return Err(ProjectorError::Dimension(format!("phi must be in [0, 90) degrees, got {}", self.phi_deg)));
        }
        if self.eps.is_nan() || self.eps <= 0.0 {
            return Err(ProjectorError::Dimension(format!("eps must be positive, got {}", self.eps)));
        }
        Ok(())
    }
}

/// A point strictly inside the projection and the capacity box: the mean of
/// extreme points in enough directions to span the space.
pub fn reference_interior(region: &LinearRegion) -> Result<Vec<f64>, ProjectorError> {
    let n = region.n_w;
    let w_max = region.w_max();
    let extreme = |c: &[f64]| -> Result<Option<Vec<f64>>, ProjectorError> {
        let mut model = RegionLp::new(region, n).copy(vec![0.0; n], Mat::identity(n));
        for (b, &hi) in model.t_bounds.iter_mut().zip(w_max) {
            *b = (0.0, hi);
        }
        model.objective_t = c.iter().map(|v| -v).collect();
        let s = lp::solve(&model.finish())?;
        Ok((s.status == LpStatus::Optimal).then(|| s.z.expect("optimal")[..n].to_vec()))
    };
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    for sign in [1.0, -1.0] {
        dirs.push(vec![sign; n]);
        for i in 0..n {
            let mut d = vec![0.0; n];
            d[i] = sign;
            dirs.push(d);
        }
    }
    let mut points: Vec<Vec<f64>> = Vec::new();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    // Gram-Schmidt on offsets from the first point tracks the affine rank
    let residual = |v: &[f64], basis: &[Vec<f64>]| {
        let mut v = v.to_vec();
        for b in basis {
            let c = dot(&v, b);
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
        }
        v
    };
    let add = |p: Vec<f64>, points: &mut Vec<Vec<f64>>, basis: &mut Vec<Vec<f64>>| -> bool {
        let mut grew = false;
        if let Some(first) = points.first() {
            let v = residual(&sub(&p, first), basis);
            let len = norm(&v);
            if len > 1e-7 {
                basis.push(v.iter().map(|x| x / len).collect());
                grew = true;
            }
        }
        if !points.iter().any(|q| distance(q, &p) <= POINT_TOL) {
            points.push(p);
        }
        grew
    };
    for d in &dirs {
        let p = extreme(d)?.ok_or(ProjectorError::EmptyInterior)?;
        add(p, &mut points, &mut basis);
    }
    // directions normal to the hull found so far reach any missing vertex
    while basis.len() < n {
        let d = (0..n)
            .map(|i| {
                let mut e = vec![0.0; n];
                e[i] = 1.0;
                residual(&e, &basis)
            })
            .max_by(|a, b| norm(a).total_cmp(&norm(b)))
            .expect("n > 0");
        let mut grew = false;
        for sign in [1.0, -1.0] {
            let c: Vec<f64> = d.iter().map(|v| sign * v).collect();
            let p = extreme(&c)?.ok_or(ProjectorError::EmptyInterior)?;
            grew |= add(p, &mut points, &mut basis);
            if grew {
                break;
            }
        }
        if !grew {
            return Err(ProjectorError::EmptyInterior);
        }
    }
    let m = points.len() as f64;
    Ok((0..n).map(|i| points.iter().map(|p| p[i]).sum::<f64>() / m).collect())
}

struct Entry {
    point: Vec<f64>,
    outcome: Option<BpsOutcome>,
    requeues: usize,
}

fn key(p: &[f64]) -> Vec<i64> {
    p.iter().map(|v| (v / POINT_TOL).round() as i64).collect()
}

/// Box vertices except the origin, the far corner first.
fn box_vertices(w_max: &[f64]) -> Vec<Vec<f64>> {
    let n = w_max.len();
    (1..1usize << n)
        .rev()
        .map(|mask| (0..n).map(|i| if mask >> i & 1 == 1 { w_max[i] } else { 0.0 }).collect())
        .collect()
}

/// Computes the projection of `region` onto its `w` columns, intersected with
/// the capacity box. Reaching `max_iterations` is not an error: the partial
/// polytope is returned with `RunStatus::IterationCap`.
pub fn phi_run(region: &LinearRegion, config: &PhgConfig) -> Result<(Polytope, PhiStats), ProjectorError> {
    config.validate()?;
    let w_max = region.w_max().to_vec();
    let solves_at_start = lp::solve_count();
    let interior = reference_interior(region)?;
    // rays start from the interior point: the origin may lie on a facet
    let center = interior.clone();
    if !region.membership(&center)? {
        return Err(ProjectorError::InteriorPointInvalid);
    }
    let mut poly = Polytope::from_box(&w_max, interior);
    let mut stats = PhiStats::default();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut seen: HashSet<Vec<i64>> = HashSet::new();
    let mut queue: VecDeque<Entry> = VecDeque::new();
    for v in box_vertices(&w_max) {
        seen.insert(key(&v));
        queue.push_back(Entry { point: v, outcome: None, requeues: 0 });
    }
    let mut last_good: Option<Vec<f64>> = None;

    while let Some(entry) = queue.pop_front() {
        if stats.iterations >= config.max_iterations {
            log::warn!("iteration cap {} reached with {} candidates left", config.max_iterations, queue.len() + 1);
            stats.status = RunStatus::IterationCap;
            break;
        }
        stats.iterations += 1;
        let p = entry.point;
        if !poly.contains(&p, FACET_TOL) {
            stats.candidates_pruned += 1;
            continue;
        }
        let outcome = match entry.outcome {
            Some(o) => o,
            None => bps_from_member(region, &center, &p)?,
        };
        if outcome.overshoot(&center, &p) <= FACET_TOL {
            continue;
        }

        let mut target = p.clone();
        let mut current = outcome.clone();
        let mut attempts = 0;
        let (h, b) = loop {
            let b = current.boundary_point.clone().expect("exterior outcome");
            let fitted = match obg(region, &b, config.eps) {
                Ok(pts) => fit_hyperplane(&b, &pts, &poly.interior).ok(),
                Err(ProjectorError::BadBoundaryPoint { .. }) | Err(ProjectorError::ModelInfeasible(_)) => None,
                Err(e) => return Err(e),
            };
            if let Some(h) = fitted {
                break (h, b);
            }
            stats.bad_boundary_points += 1;
            // move the exterior point until its ray meets a single facet
            loop {
                attempts += 1;
                if attempts > config.depa_retry_cap {
                    return Err(ProjectorError::DepaExhausted { point: p, attempts: attempts - 1 });
                }
                stats.depa_invocations += 1;
                let next = depa(region, &target, last_good.as_deref(), &mut rng)?;
                let o = bps_from_member(region, &center, &next)?;
                if o.overshoot(&center, &next) > FACET_TOL {
                    log::debug!("exterior point {target:?} replaced by {next:?}");
                    target = next;
                    current = o;
                    break;
                }
                // the adjusted point fell inside; jitter the previous one instead
                last_good = None;
            }
        };

        if !angle_accept(&h, &poly, config.phi_deg) {
            stats.discarded_by_angle += 1;
            continue;
        }
        let adjacent = adjacent_facets(&poly, &h)?;
        poly.push(h.clone(), Provenance::Discovered);
        log::debug!("facet {} from boundary point {b:?}", poly.facets.len());
        last_good = Some(b);

        let before = queue.len();
        queue.retain(|e| h.eval(&e.point) <= FACET_TOL);
        stats.candidates_pruned += before - queue.len();
        if h.eval(&p) <= FACET_TOL && entry.requeues < config.depa_retry_cap {
            // the facet came from an adjusted point and left the original standing
            queue.push_back(Entry { point: p, outcome: Some(outcome), requeues: entry.requeues + 1 });
        }

        let (points, singular) = intersection_points(&poly, &h, &adjacent);
        stats.singular_systems += singular;
        for c in points {
            if !seen.insert(key(&c)) {
                continue;
            }
            let o = bps_from_member(region, &center, &c)?;
            if o.overshoot(&center, &c) > FACET_TOL {
                queue.push_back(Entry { point: c, outcome: Some(o), requeues: 0 });
            }
        }
    }

    stats.lp_solves = lp::solve_count() - solves_at_start;
    stats.n_all = poly.facets.len();
    stats.n_new = poly.count(Provenance::Discovered);
    poly.stats = Some(stats.clone());
    Ok((poly, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::region::fixtures::{toy_region, unit_box, w_only};

    #[test]
    fn toy_region_gives_diagonal_facet() {
        let (p, stats) = phi_run(&toy_region(), &PhgConfig::default()).unwrap();
        assert_eq!(p.facets.len(), 5);
        assert_eq!(stats.n_new, 1);
        let h = p.discovered().next().unwrap();
        let s = 0.5f64.sqrt();
        assert!((h.normal[0] - s).abs() < 1e-9 && (h.normal[1] - s).abs() < 1e-9);
        assert!((h.offset + 1.5 * s).abs() < 1e-9);
        assert_eq!(stats.status, RunStatus::Complete);
    }

    #[test]
    fn box_only_region_adds_nothing() {
        let (p, stats) = phi_run(&unit_box(2), &PhgConfig::default()).unwrap();
        assert_eq!(p.facets.len(), 4);
        assert_eq!(stats.n_new, 0);
    }

    #[test]
    fn interior_point_is_strict() {
        let r = toy_region();
        let c = reference_interior(&r).unwrap();
        let (p, _) = phi_run(&r, &PhgConfig::default()).unwrap();
        assert!(p.margin(&c) < -1e-10);
    }

    #[test]
    fn vertex_on_corner_ray_needs_adjustment() {
        let r = w_only(2, &[(vec![1.0, 0.0], 0.5), (vec![0.0, 1.0], 0.5)], 1.0);
        let (p, stats) = phi_run(&r, &PhgConfig::default()).unwrap();
        assert!(stats.depa_invocations >= 1);
        assert_eq!(stats.n_new, 2);
        assert!(p.contains(&[0.5, 0.5], 1e-9));
        assert!(!p.contains(&[0.51, 0.2], 1e-9));
    }

    #[test]
    fn iteration_cap_returns_partial_result() {
        let cfg = PhgConfig { max_iterations: 1, ..PhgConfig::default() };
        let (_, stats) = phi_run(&toy_region(), &cfg).unwrap();
        assert_eq!(stats.status, RunStatus::IterationCap);
    }

    #[test]
    fn box_vertex_order() {
        let v = box_vertices(&[1.0, 2.0]);
        assert_eq!(v, vec![vec![1.0, 2.0], vec![0.0, 2.0], vec![1.0, 0.0]]);
    }
}
