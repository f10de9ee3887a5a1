//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on failure.

mod common;

use gosr::linalg::{dot, norm, sub};
use gosr::projector::{
    bps, obg, phi_run, reference_interior, Classification, PhgConfig, PhiStats, Polytope, ProjectorError,
};
use gosr::region::{build_linear_region, parse_matpower_subset, BuildOptions, LinearRegion, RegSpec};
use gosr::verify::{classify_samples, facet_support_audit, fme_project, regions_equivalent, samples_csv, ErrorReport};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::process::ExitCode;
use std::time::Instant;

const CASE30: &str = include_str!("../data/case30.m");
const N_SAMPLES: usize = 10_000;
const SAMPLE_SEED: u64 = 7;

type Outcome = Result<String, String>;

fn instances() -> Vec<(String, LinearRegion)> {
    let mut out = vec![("toy".to_string(), common::toy_region())];
    out.extend((0..100).map(|s| (format!("random seed {s}"), common::random_instance(s))));
    out
}

fn project(region: &LinearRegion, cfg: &PhgConfig) -> Result<(Polytope, PhiStats), String> {
    phi_run(region, cfg).map_err(|e| e.to_string())
}

fn exactness(projected: &[(String, LinearRegion, Polytope)]) -> Outcome {
    let mut worst_er: f64 = 0.0;
    for (name, region, p) in projected {
        let oracle = fme_project(region).map_err(|e| format!("{name}: fme: {e}"))?;
        let eq = regions_equivalent(p, &oracle, 1e-6).map_err(|e| format!("{name}: {e}"))?;
        if !eq.equal {
            return Err(format!("{name}: differs from elimination by {:e}", eq.max_violation));
        }
        let (_, report) = classify_samples(region, p, N_SAMPLES, SAMPLE_SEED).map_err(|e| format!("{name}: {e}"))?;
        let er = report.e_r.unwrap_or(0.0);
        if er != 0.0 {
            return Err(format!("{name}: E_r = {er}%"));
        }
        worst_er = worst_er.max(er);
    }
    Ok(format!("{} instances equivalent at 1e-6, max E_r {worst_er}%", projected.len()))
}

fn audit(projected: &[(String, LinearRegion, Polytope)]) -> Outcome {
    let (mut facets, mut vmax, mut smax) = (0, 0.0f64, 0.0f64);
    for (name, region, p) in projected {
        for a in facet_support_audit(region, p).map_err(|e| format!("{name}: {e}"))? {
            facets += 1;
            vmax = vmax.max(a.validity_gap);
            smax = smax.max(a.support_gap);
            if a.validity_gap > 1e-7 || a.support_gap > 1e-6 {
                return Err(format!("{name}: facet {} gaps {:e}/{:e}", a.facet, a.validity_gap, a.support_gap));
            }
        }
    }
    Ok(format!("{facets} discovered facets, max validity {vmax:e}, max support {smax:e}"))
}

/// Returns (boundary/mirror outcome, orthogonality outcome).
fn boundary_invariants() -> (Outcome, Outcome) {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut calls, mut exterior, mut generated, mut bad, mut flat) = (0, 0, 0, 0, 0);
    let mut worst_dot: f64 = 0.0;
    let mut prop_err: Option<String> = None;
    let mut seed = 0u64;
    while calls < 500 && prop_err.is_none() {
        let region = common::random_instance(1000 + seed);
        seed += 1;
        let interior = match reference_interior(&region) {
            Ok(c) => c,
            // rays need an interior; a projection without one is skipped
            Err(ProjectorError::EmptyInterior) => {
                flat += 1;
                continue;
            }
            Err(e) => return (Err(format!("instance {seed}: {e}")), Err("not run".into())),
        };
        for _ in 0..5 {
            calls += 1;
            let target: Vec<f64> = region.w_max().iter().map(|&m| rng.gen_range(0.0..=m)).collect();
            let o = match bps(&region, &interior, &target) {
                Ok(o) => o,
                Err(e) => {
                    prop_err = Some(format!("bps: {e}"));
                    break;
                }
            };
            if o.classification != Classification::Exterior {
                continue;
            }
            exterior += 1;
            let b = o.boundary_point.clone().expect("exterior");
            let step = (o.lambda_star + 1e-4).min(1.0);
            let beyond: Vec<f64> = interior.iter().zip(&target).map(|(a, t)| a + step * (t - a)).collect();
            if !region.membership(&b).unwrap() || region.membership(&beyond).unwrap() {
                prop_err = Some(format!("step-beyond fails at {target:?}"));
                break;
            }
            let pts = match obg(&region, &b, 1e-6) {
                Ok(p) => p,
                Err(ProjectorError::BadBoundaryPoint { .. }) => {
                    bad += 1;
                    continue;
                }
                Err(e) => {
                    prop_err = Some(format!("obg: {e}"));
                    break;
                }
            };
            for (i, p) in pts.iter().enumerate() {
                generated += 1;
                let mirror: Vec<f64> = b.iter().zip(p).map(|(c, q)| 2.0 * c - q).collect();
                if !region.membership(p).unwrap() || !region.membership(&mirror).unwrap() {
                    prop_err = Some(format!("mirror pair fails at {b:?}"));
                }
                let u = sub(p, &b);
                for q in &pts[..i] {
                    let v = sub(q, &b);
                    worst_dot = worst_dot.max((dot(&u, &v) / (norm(&u) * norm(&v))).abs());
                }
            }
        }
    }
    let props = match prop_err {
        Some(e) => Err(e),
        None => Ok(format!("{calls} calls, {exterior} exterior, {generated} generated points, {bad} bad boundary points, {flat} flat instances skipped")),
    };
    let ortho = if worst_dot <= 1e-8 {
        Ok(format!("max |cos| {worst_dot:e} over {generated} points"))
    } else {
        Err(format!("max |cos| {worst_dot:e}"))
    };
    (props, ortho)
}

fn depa_recovery() -> Outcome {
    let region = common::corner_region(2);
    let (p, stats) = project(&region, &PhgConfig::default())?;
    let square = Polytope::from_box(&[0.5, 0.5], vec![0.25, 0.25]);
    let eq = regions_equivalent(&p, &square, 1e-9).map_err(|e| e.to_string())?;
    if stats.depa_invocations == 0 {
        return Err("no point adjustment happened".into());
    }
    if !eq.equal {
        return Err(format!("not the square, off by {:e}", eq.max_violation));
    }
    Ok(format!("square recovered, {} adjustments", stats.depa_invocations))
}

fn angle_tradeoff() -> Outcome {
    let region = common::disc_region(0.8, 2.0);
    let run = |deg: f64| -> Result<(usize, f64), String> {
        let (p, s) = project(&region, &PhgConfig { phi_deg: deg, ..PhgConfig::default() })?;
        let (_, r) = classify_samples(&region, &p, N_SAMPLES, SAMPLE_SEED).map_err(|e| e.to_string())?;
        Ok((s.n_new, r.e_r.unwrap_or(0.0)))
    };
    let (n0, e0) = run(0.0)?;
    let (n3, e3) = run(3.0)?;
    let line = format!("phi 0: {n0} facets, E_r {e0:.3}%; phi 3: {n3} facets, E_r {e3:.3}%");
    if n0 < 10 {
        return Err(format!("instance too small: {line}"));
    }
    if n3 <= n0 && e3 >= e0 {
        Ok(line)
    } else {
        Err(line)
    }
}

struct DeskRun {
    polytope: String,
    report: String,
    csv: String,
    stats: PhiStats,
    report_value: ErrorReport,
}

fn desk_run() -> Result<DeskRun, String> {
    let (case, _) = parse_matpower_subset(CASE30).map_err(|e| e.to_string())?;
    let region = build_linear_region(&case, &RegSpec::uniform(vec![5, 7], 2.0), BuildOptions::default())
        .map_err(|e| e.to_string())?;
    let (mut p, stats) = project(&region, &PhgConfig::default())?;
    let (classes, report) = classify_samples(&region, &p, N_SAMPLES, SAMPLE_SEED).map_err(|e| e.to_string())?;
    p.stats = Some(stats.clone());
    Ok(DeskRun {
        polytope: p.to_json(),
        report: serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?,
        csv: samples_csv(&classes, p.dimension),
        stats,
        report_value: report,
    })
}

fn ieee30(run: &DeskRun) -> Outcome {
    let (n_all, n_new) = (run.stats.n_all, run.stats.n_new);
    let within = |v: usize, r: f64| (v as f64 - r).abs() <= 0.5 * r;
    let range = if within(n_all, 6.0) && within(n_new, 4.0) { "within" } else { "outside" };
    let line = format!("({n_all},{n_new}) facets, {range} 50% of (6,4); E_r {:?}%", run.report_value.e_r);
    match run.report_value.e_r {
        Some(0.0) => Ok(line),
        _ => Err(line),
    }
}

fn determinism(first: &DeskRun) -> Outcome {
    let second = desk_run()?;
    let same = [
        ("polytope", &first.polytope, &second.polytope),
        ("report", &first.report, &second.report),
        ("samples", &first.csv, &second.csv),
    ];
    for (what, a, b) in same {
        if a != b {
            return Err(format!("{what} differs between runs"));
        }
    }
    Ok(format!("{} + {} + {} bytes identical", first.polytope.len(), first.report.len(), first.csv.len()))
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |id: usize, name: &str, t: Instant, o: Outcome| {
        let secs = t.elapsed().as_secs_f64();
        match o {
            Ok(msg) => println!("PASS [{id}] {name}: {msg} ({secs:.1}s)"),
            Err(msg) => {
                failed += 1;
                println!("FAIL [{id}] {name}: {msg} ({secs:.1}s)");
            }
        }
    };

    let t = Instant::now();
    let mut projected = Vec::new();
    let mut setup_err = None;
    for (name, region) in instances() {
        match project(&region, &PhgConfig::default()) {
            Ok((p, _)) => projected.push((name, region, p)),
            Err(e) => {
                setup_err = Some(format!("{name}: {e}"));
                break;
            }
        }
    }
    match &setup_err {
        Some(e) => {
            report(1, "exactness at phi = 0", t, Err(e.clone()));
            report(2, "facet support audit", t, Err(e.clone()));
        }
        None => {
            report(1, "exactness at phi = 0", t, exactness(&projected));
            let t = Instant::now();
            report(2, "facet support audit", t, audit(&projected));
        }
    }

    let t = Instant::now();
    let (props, ortho) = boundary_invariants();
    report(3, "boundary and mirror invariants", t, props);
    report(4, "orthogonal generating sets", t, ortho);

    let t = Instant::now();
    report(5, "corner adjustment recovery", t, depa_recovery());

    let t = Instant::now();
    report(6, "angle filter trade-off", t, angle_tradeoff());

    let t = Instant::now();
    match desk_run() {
        Ok(run) => {
            report(7, "IEEE 30-bus desk run", t, ieee30(&run));
            let t = Instant::now();
            report(8, "determinism", t, determinism(&run));
        }
        Err(e) => {
            report(7, "IEEE 30-bus desk run", t, Err(e.clone()));
            report(8, "determinism", t, Err(e));
        }
    }

    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
