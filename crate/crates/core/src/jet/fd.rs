//! Central-difference oracle for validating jets.

use super::expr::{Point, ScalarExpr};
use super::taylor::{table, Jet, MAX_ORDER};
use crate::error::{GeomError, Result};

// (offset in steps, weight) for derivative orders 0..=3; weights exclude h^-k.
const STENCILS: [&[(i32, f64)]; 4] = [
    &[(0, 1.0)],
    &[(-1, -0.5), (1, 0.5)],
    &[(-1, 1.0), (0, -2.0), (1, 1.0)],
    &[(-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)],
];

/// Approximate every Taylor coefficient of `expr` at `p` up to `order` with
/// tensor-product central differences of spacing `step`.
///
/// Only plain evaluation is used, so the result is independent of the jet
/// arithmetic it is meant to check.
pub fn finite_difference_oracle(expr: &ScalarExpr, p: &Point, order: usize, step: f64) -> Result<Jet> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(GeomError::Validation(format!("finite-difference step must be positive, got {step}")));
    }
    if order > MAX_ORDER {
        return Err(GeomError::Validation(format!("order {order} > {MAX_ORDER}")));
    }
    let d = p.dim();
    let t = table(d, order);
    let mut coeffs = Vec::with_capacity(t.len());
    let mut x = p.coords.clone();
    for k in 0..t.len() {
        let m = t.exponents(k).to_vec();
        let active: Vec<usize> = (0..d).filter(|&i| m[i] > 0).collect();
        let degree: i32 = m.iter().map(|&e| e as i32).sum();
        let mut acc = 0.0;
        // iterate the tensor-product stencil
        let sizes: Vec<usize> = active.iter().map(|&i| STENCILS[m[i] as usize].len()).collect();
        let mut counter = vec![0usize; active.len()];
        loop {
            let mut w = 1.0;
            x.copy_from_slice(&p.coords);
            for (slot, &var) in active.iter().enumerate() {
                let (off, wt) = STENCILS[m[var] as usize][counter[slot]];
                x[var] += off as f64 * step;
                w *= wt;
            }
            acc += w * expr.eval(&x)?;
            // advance odometer
            let mut slot = 0;
            loop {
                if slot == counter.len() {
                    break;
                }
                counter[slot] += 1;
                if counter[slot] < sizes[slot] {
                    break;
                }
                counter[slot] = 0;
                slot += 1;
            }
            if slot == counter.len() {
                break;
            }
        }
        let fact: f64 = m.iter().map(|&e| (1..=e as u32).product::<u32>() as f64).product();
        coeffs.push(acc / step.powi(degree) / fact);
    }
    Ok(Jet::from_coeffs(t, coeffs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::expr::{constant, exp, var};
    use crate::jet::taylor::eval_jet;

    #[test]
    fn matches_exp_jet() {
        let e = exp(2.0 * var(0));
        let p = Point::new(vec![0.0]);
        let fd = finite_difference_oracle(&e, &p, 2, 1e-4).unwrap();
        let j = eval_jet(&e, &p, 2).unwrap();
        for (a, b) in fd.coeffs().iter().zip(j.coeffs()) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn constant_has_zero_partials() {
        let fd = finite_difference_oracle(&constant(3.7), &Point::new(vec![0.2, -0.4]), 3, 1e-3).unwrap();
        assert_eq!(fd.value(), 3.7);
        assert!(fd.coeffs()[1..].iter().all(|&c| c == 0.0));
    }

    #[test]
    fn cubic_third_partial() {
        let fd = finite_difference_oracle(&var(0).powi(3), &Point::new(vec![1.0]), 3, 1e-3).unwrap();
        assert!((fd.partial(&[0, 0, 0]) - 6.0).abs() < 1e-3);
    }

    #[test]
    fn rejects_bad_step() {
        assert!(finite_difference_oracle(&var(0), &Point::new(vec![1.0]), 1, 0.0).is_err());
    }

    #[test]
    fn stencil_leaving_domain_is_an_error() {
        let e = crate::jet::expr::log(var(0));
        assert!(finite_difference_oracle(&e, &Point::new(vec![1e-5]), 1, 1e-4).is_err());
    }
}
