mod common;

use proptest::prelude::*;
use warpgeom::jet::{eval_jet, table, Jet, Point};
use warpgeom::sampling::Sampler;

use common::{jet_vs_fd, random_case};

#[test]
fn random_asts_match_central_differences() {
    let (low, third) = jet_vs_fd(0xA57, 1000);
    assert!(low < 1e-5, "order <= 2 relative error {low:e}");
    assert!(third < 1e-3, "order 3 relative error {third:e}");
}

/// Truncated Taylor product computed straight from the monomial table.
fn taylor_product(a: &Jet, b: &Jet) -> Vec<f64> {
    let t = a.table();
    let mut out = vec![0.0; t.len()];
    for i in 0..t.len() {
        for j in 0..t.len() {
            let sum: Vec<u8> = t.exponents(i).iter().zip(t.exponents(j)).map(|(x, y)| x + y).collect();
            if let Some(k) = t.index_of(&sum) {
                out[k] += a.coeffs()[i] * b.coeffs()[j];
            }
        }
    }
    out
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * (1.0 + x.abs().max(y.abs())))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn linearity(seed in any::<u64>(), a in -3.0..3.0f64, b in -3.0..3.0f64, order in 1usize..=3) {
        let mut rng = Sampler::new(seed);
        let (f, p) = random_case(&mut rng, 2);
        let (g, _) = random_case(&mut rng, 2);
        let lhs = eval_jet(&(a * f.clone() + b * g.clone()), &p, order).unwrap();
        let (jf, jg) = (eval_jet(&f, &p, order).unwrap(), eval_jet(&g, &p, order).unwrap());
        let rhs: Vec<f64> = jf.coeffs().iter().zip(jg.coeffs()).map(|(x, y)| a * x + b * y).collect();
        prop_assert!(close(lhs.coeffs(), &rhs, 1e-12));
    }

    #[test]
    fn leibniz(seed in any::<u64>(), order in 1usize..=3) {
        let mut rng = Sampler::new(seed);
        let (f, p) = random_case(&mut rng, 3);
        let (g, _) = random_case(&mut rng, 3);
        let prod = eval_jet(&(f.clone() * g.clone()), &p, order).unwrap();
        let expected = taylor_product(&eval_jet(&f, &p, order).unwrap(), &eval_jet(&g, &p, order).unwrap());
        prop_assert!(close(prod.coeffs(), &expected, 1e-12));
    }

    #[test]
    fn value_is_plain_evaluation(seed in any::<u64>()) {
        let mut rng = Sampler::new(seed);
        let (f, p) = random_case(&mut rng, 3);
        let j = eval_jet(&f, &p, 3).unwrap();
        let v = f.eval(&p.coords).unwrap();
        prop_assert!((j.value() - v).abs() <= 1e-14 * (1.0 + v.abs()));
    }

    #[test]
    fn mixed_partials_commute(seed in any::<u64>()) {
        let mut rng = Sampler::new(seed);
        let (f, p) = random_case(&mut rng, 3);
        let j = eval_jet(&f, &p, 3).unwrap();
        for (a, b) in [(0, 1), (0, 2), (1, 2)] {
            prop_assert_eq!(j.partial(&[a, b]), j.partial(&[b, a]));
            prop_assert_eq!(j.partial(&[a, a, b]), j.partial(&[b, a, a]));
        }
    }
}

#[test]
fn table_sizes() {
    // C(d + K, K) monomials
    assert_eq!(table(3, 3).len(), 20);
    assert_eq!(table(5, 2).len(), 21);
    let j = eval_jet(&warpgeom::jet::parse_expr("x0*x1", 2).unwrap(), &Point::new(vec![2.0, 3.0]), 1).unwrap();
    assert_eq!((j.value(), j.partial(&[0]), j.partial(&[1])), (6.0, 3.0, 2.0));
}
