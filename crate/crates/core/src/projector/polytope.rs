use crate::linalg::{Hyperplane, Mat};
use crate::lp::{self, LpProblem, LpStatus};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    InitialBox,
    Discovered,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Facet {
    #[serde(flatten)]
    pub plane: Hyperplane,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Complete,
    IterationCap,
}

/// Counters collected by one projection run. Wall time is deliberately
/// absent so that artifacts are reproducible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiStats {
    pub status: RunStatus,
    pub iterations: usize,
    pub lp_solves: u64,
    pub depa_invocations: usize,
    pub discarded_by_angle: usize,
    pub candidates_pruned: usize,
    pub bad_boundary_points: usize,
    pub singular_systems: usize,
    pub n_all: usize,
    pub n_new: usize,
}

impl Default for PhiStats {
    fn default() -> Self {
        PhiStats {
            status: RunStatus::Complete,
            iterations: 0,
            lp_solves: 0,
            depa_invocations: 0,
            discarded_by_angle: 0,
            candidates_pruned: 0,
            bad_boundary_points: 0,
            singular_systems: 0,
            n_all: 0,
            n_new: 0,
        }
    }
}

/// H-representation `{w | normal·w + offset <= 0 for every facet}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polytope {
    pub dimension: usize,
    pub facets: Vec<Facet>,
    /// Per-axis `[0, w_max]`.
    #[serde(rename = "box")]
    pub bounds: Vec<[f64; 2]>,
    /// Strictly interior reference point used to orient facets.
    pub interior: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stats: Option<PhiStats>,
}

impl Polytope {
    /// The box `[0, w_max]` as `2n` facets, lower faces first per axis.
    pub fn from_box(w_max: &[f64], interior: Vec<f64>) -> Self {
        let n = w_max.len();
        let mut facets = Vec::with_capacity(2 * n);
        for (i, &hi) in w_max.iter().enumerate() {
            let mut lo = vec![0.0; n];
            lo[i] = -1.0;
            facets.push(Facet { plane: Hyperplane { normal: lo, offset: 0.0 }, provenance: Provenance::InitialBox });
            let mut up = vec![0.0; n];
            up[i] = 1.0;
            facets.push(Facet { plane: Hyperplane { normal: up, offset: -hi }, provenance: Provenance::InitialBox });
        }
        Polytope { dimension: n, facets, bounds: w_max.iter().map(|&m| [0.0, m]).collect(), interior, stats: None }
    }

    pub fn w_max(&self) -> Vec<f64> {
        self.bounds.iter().map(|b| b[1]).collect()
    }

    pub fn planes(&self) -> impl Iterator<Item = &Hyperplane> {
        self.facets.iter().map(|f| &f.plane)
    }

    pub fn push(&mut self, plane: Hyperplane, provenance: Provenance) {
        self.facets.push(Facet { plane, provenance });
    }

    /// Largest facet value at `w`; `<= 0` means inside.
    pub fn margin(&self, w: &[f64]) -> f64 {
        self.planes().map(|h| h.eval(w)).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn contains(&self, w: &[f64], tol: f64) -> bool {
        self.margin(w) <= tol
    }

    pub fn count(&self, provenance: Provenance) -> usize {
        self.facets.iter().filter(|f| f.provenance == provenance).count()
    }

    pub fn discovered(&self) -> impl Iterator<Item = &Hyperplane> {
        self.facets.iter().filter(|f| f.provenance == Provenance::Discovered).map(|f| &f.plane)
    }

    /// LP over `w` with every facet as a row.
    pub fn lp(&self) -> LpProblem {
        let mut p = LpProblem::new(self.dimension);
        for h in self.planes() {
            p.add_le(&h.normal, -h.offset);
        }
        p
    }

    /// Maximizes `c·w`; `None` when unbounded or empty.
    pub fn support(&self, c: &[f64]) -> Result<Option<f64>, lp::LpError> {
        let mut p = self.lp();
        p.objective = c.iter().map(|v| -v).collect();
        let s = lp::solve(&p)?;
        Ok(match s.status {
            LpStatus::Optimal => s.objective_value.map(|v| -v),
            _ => None,
        })
    }

    /// Center and radius of the largest inscribed ball (facet normals are unit).
    pub fn chebyshev_center(facets: &[Hyperplane], n: usize) -> Result<Option<(Vec<f64>, f64)>, lp::LpError> {
        let mut p = LpProblem::new(n + 1);
        p.objective[n] = -1.0;
        let mut row = vec![0.0; n + 1];
        for h in facets {
            row[..n].copy_from_slice(&h.normal);
            row[n] = 1.0;
            p.add_le(&row, -h.offset);
        }
        p.set_bounds(n, 0.0, f64::INFINITY);
        let s = lp::solve(&p)?;
        Ok(match (s.status, s.z) {
            (LpStatus::Optimal, Some(z)) => Some((z[..n].to_vec(), z[n])),
            _ => None,
        })
    }

    /// Normal matrix and offsets, for callers wanting dense access.
    pub fn matrix(&self) -> (Mat, Vec<f64>) {
        let mut a = Mat::with_cols(self.dimension);
        let mut b = Vec::with_capacity(self.facets.len());
        for h in self.planes() {
            a.push_row(&h.normal);
            b.push(h.offset);
        }
        (a, b)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("polytope serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let p: Polytope = serde_path_to_error::deserialize(de).map_err(|e| format!("{}: {}", e.path(), e.inner()))?;
        if p.facets.iter().any(|f| f.plane.dim() != p.dimension) || p.bounds.len() != p.dimension {
            return Err(format!("polytope facets must all have dimension {}", p.dimension));
        }
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_facets_and_margin() {
        let p = Polytope::from_box(&[1.0, 2.0], vec![0.5, 1.0]);
        assert_eq!(p.facets.len(), 4);
        assert!((p.margin(&[0.5, 1.0]) + 0.5).abs() < 1e-15);
        assert!(!p.contains(&[1.5, 0.0], 1e-9));
        assert_eq!(p.support(&[1.0, 1.0]).unwrap(), Some(3.0));
    }

    #[test]
    fn json_round_trip() {
        let mut p = Polytope::from_box(&[1.0, 1.0], vec![0.5, 0.5]);
        let s = 0.5f64.sqrt();
        p.push(Hyperplane { normal: vec![s, s], offset: -1.5 * s }, Provenance::Discovered);
        p.stats = Some(PhiStats::default());
        let text = p.to_json();
        assert!(text.contains("\"box\""));
        assert!(text.contains("\"Discovered\""));
        assert_eq!(Polytope::from_json(&text).unwrap(), p);
    }

    #[test]
    fn chebyshev_of_unit_square() {
        let p = Polytope::from_box(&[1.0, 1.0], vec![0.5, 0.5]);
        let planes: Vec<Hyperplane> = p.planes().cloned().collect();
        let (c, r) = Polytope::chebyshev_center(&planes, 2).unwrap().unwrap();
        assert!((r - 0.5).abs() < 1e-12);
        assert!((c[0] - 0.5).abs() < 1e-12 && (c[1] - 0.5).abs() < 1e-12);
    }
}
