#![allow(dead_code)]

use gosr::region::{ConstraintBlock, LinearRegion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `{x = w1 + w2, x <= 1.5, 0 <= w <= 1}`.
pub fn toy_region() -> LinearRegion {
    let mut eq = ConstraintBlock::empty(3);
    eq.push(&[1.0, 1.0, -1.0], 0.0);
    let mut ineq = ConstraintBlock::empty(3);
    ineq.push(&[0.0, 0.0, 1.0], 1.5);
    ineq.push(&[-1.0, 0.0, 0.0], 0.0);
    ineq.push(&[0.0, -1.0, 0.0], 0.0);
    LinearRegion::from_blocks(2, 1, eq, ineq, vec![1.0, 1.0]).unwrap()
}

/// Random coupled region: `w, x >= 0` plus rows through `x` that keep the
/// origin feasible, 12 inequalities in all, sometimes one equality.
pub fn random_instance(seed: u64) -> LinearRegion {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_w = rng.gen_range(2..=4);
    let n_x = rng.gen_range(2..=4);
    let cols = n_w + n_x;
    let n_couple = 12 - n_w - n_x;
    let mut ineq = ConstraintBlock::empty(cols);
    // w >= 0 and x >= 0
    for i in 0..cols {
        let mut r = vec![0.0; cols];
        r[i] = -1.0;
        ineq.push(&r, 0.0);
    }
    for _ in 0..n_couple {
        let mut r = vec![0.0; cols];
        for v in r.iter_mut().take(n_w) {
            *v = rng.gen_range(-0.5..1.5);
        }
        for v in r.iter_mut().skip(n_w) {
            *v = rng.gen_range(-1.0..1.0);
        }
        ineq.push(&r, rng.gen_range(0.2..1.0));
    }
    let mut eq = ConstraintBlock::empty(cols);
    if rng.gen_bool(0.5) {
        let r: Vec<f64> = (0..cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
        eq.push(&r, 0.0);
    }
    LinearRegion::from_blocks(n_w, n_x, eq, ineq, vec![1.0; n_w]).unwrap()
}

/// Square `[0, 0.5]^n` reached through `x = w`, so the ray to the far box
/// corner hits a vertex.
pub fn corner_region(n: usize) -> LinearRegion {
    let cols = 2 * n;
    let mut eq = ConstraintBlock::empty(cols);
    let mut ineq = ConstraintBlock::empty(cols);
    for i in 0..n {
        let mut r = vec![0.0; cols];
        r[i] = 1.0;
        r[n + i] = -1.0;
        eq.push(&r, 0.0);
        let mut r = vec![0.0; cols];
        r[n + i] = 1.0;
        ineq.push(&r, 0.5);
        let mut r = vec![0.0; cols];
        r[i] = -1.0;
        ineq.push(&r, 0.0);
    }
    LinearRegion::from_blocks(n, n, eq, ineq, vec![1.0; n]).unwrap()
}

/// Quarter disc of radius `r` approximated by tangent rows every `step_deg`
/// degrees, with `w1` routed through `x`.
pub fn disc_region(r: f64, step_deg: f64) -> LinearRegion {
    let mut eq = ConstraintBlock::empty(3);
    eq.push(&[1.0, 0.0, -1.0], 0.0);
    let mut ineq = ConstraintBlock::empty(3);
    ineq.push(&[-1.0, 0.0, 0.0], 0.0);
    ineq.push(&[0.0, -1.0, 0.0], 0.0);
    let steps = (90.0 / step_deg).round() as usize;
    for k in 0..=steps {
        let t = (k as f64 * step_deg).to_radians();
        ineq.push(&[0.0, t.sin(), t.cos()], r);
    }
    LinearRegion::from_blocks(2, 1, eq, ineq, vec![1.0, 1.0]).unwrap()
}
