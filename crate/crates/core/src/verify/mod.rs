//! Independent checks of a computed polytope: Monte Carlo agreement with the
//! region, a Fourier–Motzkin oracle, mutual inclusion, facet audits and
//! vertex export for plotting.

mod fme;

pub use fme::{fme_project, FME_MAX_ROWS, FME_MAX_X};

use crate::linalg::{distance, solve_square, Mat};
use crate::lp::LpError;
use crate::projector::{Polytope, Provenance};
use crate::region::{LinearRegion, RegionError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use thiserror::Error;

/// Polytope test tolerance for samples.
pub const SAMPLE_TOL: f64 = 1e-9;
/// Samples this close to a facet are tallied as boundary samples.
pub const BOUNDARY_BAND: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error("region too large for elimination: {n_x} eliminated variables, {rows} inequalities (limits {max_x}, {max_rows})")]
    SizeGuardExceeded { n_x: usize, rows: usize, max_x: usize, max_rows: usize },
    #[error("polytope is unbounded along a facet direction")]
    UnboundedRegion,
    #[error("the region is empty")]
    EmptyRegion,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error(transparent)]
    Region(#[from] RegionError),
    #[error(transparent)]
    Lp(#[from] LpError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    /// Inside both.
    Green,
    /// Inside the region only.
    Blue,
    /// Inside the polytope only.
    Yellow,
    /// Inside neither.
    Red,
}

impl Color {
    pub fn of(in_polytope: bool, in_region: bool) -> Self {
        match (in_polytope, in_region) {
            (true, true) => Color::Green,
            (false, true) => Color::Blue,
            (true, false) => Color::Yellow,
            (false, false) => Color::Red,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Color::Green => "green",
            Color::Blue => "blue",
            Color::Yellow => "yellow",
            Color::Red => "red",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleClass {
    pub w: Vec<f64>,
    pub in_polytope: bool,
    pub in_region: bool,
    pub color: Color,
    /// Within [`BOUNDARY_BAND`] of the polytope boundary.
    pub boundary: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColorCounts {
    pub green: usize,
    pub blue: usize,
    pub yellow: usize,
    pub red: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub n_samples: usize,
    /// Samples strictly inside the polytope.
    pub n_sr: usize,
    /// Of those, samples the region also contains.
    pub n_sa: usize,
    /// `(1 - n_sa / n_sr) · 100`, absent when `n_sr = 0`.
    pub e_r: Option<f64>,
    /// Disagreement percentage over all non-boundary samples.
    pub e_r_all: Option<f64>,
    pub n_boundary: usize,
    pub color_counts: ColorCounts,
}

/// `n` seeded uniform samples from the polytope's box.
pub fn box_samples(polytope: &Polytope, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| polytope.bounds.iter().map(|&[lo, hi]| lo + (hi - lo) * rng.gen::<f64>()).collect()).collect()
}

/// Classifies seeded box samples against the polytope and the region.
pub fn classify_samples(
    region: &LinearRegion,
    polytope: &Polytope,
    n: usize,
    seed: u64,
) -> Result<(Vec<SampleClass>, ErrorReport), VerifyError> {
    if region.n_w != polytope.dimension {
        return Err(VerifyError::Dimension(format!(
            "region has {} w-columns, polytope dimension {}",
            region.n_w, polytope.dimension
        )));
    }
    let samples = box_samples(polytope, n, seed);
    let classes: Vec<SampleClass> = samples
        .into_par_iter()
        .map(|w| {
            let margin = polytope.margin(&w);
            let in_region = region.membership(&w)?;
            let in_polytope = margin <= SAMPLE_TOL;
            Ok(SampleClass {
                color: Color::of(in_polytope, in_region),
                boundary: margin.abs() <= BOUNDARY_BAND,
                w,
                in_polytope,
                in_region,
            })
        })
        .collect::<Result<_, RegionError>>()?;
    let report = error_report(&classes);
    Ok((classes, report))
}

pub fn error_report(classes: &[SampleClass]) -> ErrorReport {
    let mut counts = ColorCounts::default();
    let (mut n_sr, mut n_sa, mut n_boundary, mut agree, mut decided) = (0, 0, 0, 0, 0);
    for c in classes {
        match c.color {
            Color::Green => counts.green += 1,
            Color::Blue => counts.blue += 1,
            Color::Yellow => counts.yellow += 1,
            Color::Red => counts.red += 1,
        }
        if c.boundary {
            n_boundary += 1;
            continue;
        }
        decided += 1;
        if c.in_polytope == c.in_region {
            agree += 1;
        }
        if c.in_polytope {
            n_sr += 1;
            if c.in_region {
                n_sa += 1;
            }
        }
    }
    let pct = |num: usize, den: usize| (den > 0).then(|| (1.0 - num as f64 / den as f64) * 100.0);
    ErrorReport {
        n_samples: classes.len(),
        n_sr,
        n_sa,
        e_r: pct(n_sa, n_sr),
        e_r_all: pct(agree, decided),
        n_boundary,
        color_counts: counts,
    }
}

/// CSV with header `w_1..w_n,in_polytope,in_region,color`.
pub fn samples_csv(classes: &[SampleClass], dim: usize) -> String {
    let mut out = String::new();
    for i in 1..=dim {
        let _ = write!(out, "w_{i},");
    }
    out.push_str("in_polytope,in_region,color\n");
    for c in classes {
        for v in &c.w {
            let _ = write!(out, "{v},");
        }
        let _ = writeln!(out, "{},{},{}", c.in_polytope, c.in_region, c.color.name());
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Equivalence {
    pub equal: bool,
    pub max_violation: f64,
}

/// Mutual inclusion test: every facet of each polytope must hold on the other.
pub fn regions_equivalent(p: &Polytope, q: &Polytope, tol: f64) -> Result<Equivalence, VerifyError> {
    if p.dimension != q.dimension {
        return Err(VerifyError::Dimension(format!("dimensions {} and {}", p.dimension, q.dimension)));
    }
    let mut worst: f64 = 0.0;
    for (a, b) in [(p, q), (q, p)] {
        for f in a.planes() {
            let v = b.support(&f.normal)?.ok_or(VerifyError::UnboundedRegion)?;
            worst = worst.max(v + f.offset);
        }
    }
    Ok(Equivalence { equal: worst <= tol, max_violation: worst })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FacetAudit {
    /// Index into the polytope's facet list.
    pub facet: usize,
    /// How far the region reaches beyond the facet (0 when the facet is valid).
    pub validity_gap: f64,
    /// Distance between the facet and the region's support in its direction.
    pub support_gap: f64,
}

/// Checks every discovered facet against the region's support function.
pub fn facet_support_audit(region: &LinearRegion, polytope: &Polytope) -> Result<Vec<FacetAudit>, VerifyError> {
    if region.n_w != polytope.dimension {
        return Err(VerifyError::Dimension(format!(
            "region has {} w-columns, polytope dimension {}",
            region.n_w, polytope.dimension
        )));
    }
    let mut out = Vec::new();
    for (k, f) in polytope.facets.iter().enumerate() {
        if f.provenance != Provenance::Discovered {
            continue;
        }
        let gap = match region.support(&f.plane.normal)? {
            Some(v) => v + f.plane.offset,
            None => f64::INFINITY,
        };
        out.push(FacetAudit { facet: k, validity_gap: gap.max(0.0), support_gap: gap.abs() });
    }
    Ok(out)
}

/// Vertices of a 2-D or 3-D polytope; 2-D vertices are in counterclockwise order.
pub fn enumerate_vertices_2d3d(polytope: &Polytope) -> Result<Vec<Vec<f64>>, VerifyError> {
    let n = polytope.dimension;
    if !(2..=3).contains(&n) {
        return Err(VerifyError::Dimension(format!("vertex export needs dimension 2 or 3, got {n}")));
    }
    let planes: Vec<_> = polytope.planes().collect();
    let mut verts: Vec<Vec<f64>> = Vec::new();
    for subset in crate::projector::subsets(planes.len(), n) {
        let mut a = Mat::with_cols(n);
        let mut b = Vec::with_capacity(n);
        for &k in &subset {
            a.push_row(&planes[k].normal);
            b.push(-planes[k].offset);
        }
        let Ok(v) = solve_square(&a, &b) else { continue };
        if polytope.contains(&v, 1e-7) && !verts.iter().any(|u| distance(u, &v) <= 1e-7) {
            verts.push(v);
        }
    }
    if n == 2 && !verts.is_empty() {
        let cx = verts.iter().map(|v| v[0]).sum::<f64>() / verts.len() as f64;
        let cy = verts.iter().map(|v| v[1]).sum::<f64>() / verts.len() as f64;
        let angle = |v: &Vec<f64>| (v[1] - cy).atan2(v[0] - cx);
        verts.sort_by(|u, v| angle(u).total_cmp(&angle(v)));
        // start from the vertex nearest the origin for a stable listing
        let first = (0..verts.len())
            .min_by(|&i, &j| {
                let d = |v: &Vec<f64>| v[0] * v[0] + v[1] * v[1];
                d(&verts[i]).total_cmp(&d(&verts[j]))
            })
            .expect("non-empty");
        verts.rotate_left(first);
    } else {
        verts.sort_by(|u, v| {
            u.iter().zip(v).map(|(a, b)| a.total_cmp(b)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
        });
    }
    Ok(verts)
}

/// Vertex list as CSV with header `w_1..w_n`.
pub fn vertices_csv(verts: &[Vec<f64>], dim: usize) -> String {
    let header: Vec<String> = (1..=dim).map(|i| format!("w_{i}")).collect();
    let mut out = header.join(",");
    out.push('\n');
    for v in verts {
        let row: Vec<String> = v.iter().map(|x| x.to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
