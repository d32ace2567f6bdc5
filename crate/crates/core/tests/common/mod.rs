//! Shared helpers for integration tests.
#![allow(dead_code)]

use warpgeom::jet::{constant, cos, eval_jet, exp, finite_difference_oracle, log, sin, sqrt, var, Jet, Point, ScalarExpr};
use warpgeom::sampling::{SampleBox, Sampler};

fn pick(rng: &mut Sampler, n: usize) -> usize {
    ((rng.uniform(0.0, n as f64)) as usize).min(n - 1)
}

/// Random expression in `dim` variables that stays finite on `[-1, 1]^dim`:
/// logs, roots and quotients are guarded by positive offsets.
pub fn random_expr(rng: &mut Sampler, dim: usize, depth: usize) -> ScalarExpr {
    if depth == 0 || rng.uniform(0.0, 1.0) < 0.2 {
        return if rng.uniform(0.0, 1.0) < 0.7 {
            var(pick(rng, dim))
        } else {
            constant((rng.uniform(-2.0, 2.0) * 8.0).round() / 8.0)
        };
    }
    let (a, b) = (random_expr(rng, dim, depth - 1), random_expr(rng, dim, depth - 1));
    match pick(rng, 12) {
        0 => a + b,
        1 => a - b,
        2 => a * b,
        3 => -a,
        4 => sin(a),
        5 => cos(a),
        6 => exp(sin(a) * 0.8),
        7 => log(1.0 + a.powi(2)),
        8 => sqrt(1.0 + a.powi(2)),
        9 => a / (1.5 + sin(b)),
        10 => a.powi(2 + pick(rng, 2) as i32),
        _ => (1.0 + a.powi(2)).powf(0.5 + rng.uniform(0.0, 1.0)),
    }
}

/// A random expression together with an interior point where its jet is
/// moderate in size; draws again until one is found.
pub fn random_case(rng: &mut Sampler, dim: usize) -> (ScalarExpr, Point) {
    let b = SampleBox::cube(dim, 0.9);
    loop {
        let depth = 1 + pick(rng, 4);
        let e = random_expr(rng, dim, depth);
        let p = rng.point(&b);
        if let Ok(j) = eval_jet(&e, &p, 3) {
            if j.coeffs().iter().all(|c| c.is_finite() && c.abs() < 1e3) {
                return (e, p);
            }
        }
    }
}

/// `max_k |a_k − b_k| / max(1, max_k |a_k|)` over coefficients of degree ≥ `lo` and ≤ `hi`.
pub fn relative_error(a: &Jet, b: &Jet, lo: usize, hi: usize) -> f64 {
    let t = a.table();
    let scale = a.coeffs().iter().fold(1.0_f64, |m, c| m.max(c.abs()));
    (0..t.len())
        .filter(|&k| {
            let d: usize = t.exponents(k).iter().map(|&e| e as usize).sum();
            d >= lo && d <= hi
        })
        .map(|k| (a.coeffs()[k] - b.coeffs()[k]).abs() / scale)
        .fold(0.0, f64::max)
}

/// Worst relative jet/central-difference disagreement over `count` random
/// cases: `(order ≤ 2, order 3)`.
pub fn jet_vs_fd(seed: u64, count: usize) -> (f64, f64) {
    let mut rng = Sampler::new(seed);
    let (mut low, mut third) = (0.0_f64, 0.0_f64);
    for i in 0..count {
        let dim = 1 + i % 3;
        let (e, p) = random_case(&mut rng, dim);
        let jet = eval_jet(&e, &p, 3).unwrap();
        let fd2 = finite_difference_oracle(&e, &p, 2, 1e-4).unwrap();
        let fd3 = finite_difference_oracle(&e, &p, 3, 1e-3).unwrap();
        low = low.max(relative_error(&jet.truncate(2), &fd2, 0, 2));
        third = third.max(relative_error(&jet, &fd3, 3, 3));
    }
    (low, third)
}
