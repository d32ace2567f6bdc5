use nalgebra::{DMatrix, DVector};
use warpgeom::almost_contact::builtin_ambient;
use warpgeom::jet::{sin, var, Point, ScalarExpr};
use warpgeom::manifold::{inner, scalar_curvature, sectional_curvature, MetricField};
use warpgeom::sampling::{SampleBox, Sampler};
use warpgeom::warped::{build_warped_metric, builtin_warped, verify_warped_laplacian, BUILTIN_WARPED};

fn round_sphere() -> MetricField {
    MetricField::diagonal(vec![ScalarExpr::one(), sin(var(0)).powi(2)])
}

#[test]
fn unit_sphere_has_curvature_one() {
    let g = round_sphere();
    let b = SampleBox::new(vec![0.3, -3.0], vec![2.8, 3.0]).unwrap();
    for p in Sampler::new(1).points(&b, 100) {
        let s = g.sample(&p).unwrap();
        let k = sectional_curvature(s.curvature().unwrap(), &DVector::from_vec(vec![1.0, 0.0]), &DVector::from_vec(vec![0.0, 1.0])).unwrap();
        assert!((k - 1.0).abs() < 1e-8, "{k}");
    }
}

#[test]
fn exp_line_has_curvature_minus_one() {
    let spec = builtin_warped("exp-line").unwrap();
    let w = build_warped_metric(&spec).unwrap();
    for p in Sampler::new(2).points(&spec.sample_box, 100) {
        let s = w.metric.sample(&p).unwrap();
        let k = sectional_curvature(s.curvature().unwrap(), &DVector::from_vec(vec![1.0, 0.0]), &DVector::from_vec(vec![0.3, 1.0])).unwrap();
        assert!((k + 1.0).abs() < 1e-8, "{k}");
    }
    let rep = verify_warped_laplacian(&spec, &mut Sampler::new(3), 50, 1e-7).unwrap();
    assert!(rep.pass, "{:?}", rep.records);
    let lap = rep.metadata["first_sample_laplacian_over_f"].as_f64().unwrap();
    assert!((lap + 1.0).abs() < 1e-9, "{lap}");
}

#[test]
fn laplacian_identity_on_every_builtin_warped_metric() {
    for name in BUILTIN_WARPED {
        let spec = builtin_warped(name).unwrap();
        let rep = verify_warped_laplacian(&spec, &mut Sampler::new(4), 40, 1e-7).unwrap();
        assert!(rep.pass, "{name}: {:?}", rep.records);
    }
}

/// Random orthogonal matrix from Gram–Schmidt on a random square matrix.
fn random_rotation(rng: &mut Sampler, n: usize) -> DMatrix<f64> {
    let m = DMatrix::from_fn(n, n, |_, _| rng.uniform(-1.0, 1.0));
    m.qr().q()
}

#[test]
fn scalar_curvature_is_frame_independent() {
    let mut rng = Sampler::new(5);
    let mut metrics: Vec<(MetricField, SampleBox)> = Vec::new();
    for name in ["sasakian", "kenmotsu"] {
        let a = builtin_ambient(name, 2).unwrap();
        metrics.push((a.metric.clone(), a.sample_box.clone()));
    }
    let generic = builtin_warped("generic").unwrap();
    metrics.push((build_warped_metric(&generic).unwrap().metric, generic.sample_box.clone()));
    for (g, b) in &metrics {
        for p in rng.points(b, 10) {
            let s = g.sample(&p).unwrap();
            let curv = s.curvature().unwrap();
            let frame = s.coordinate_frame();
            let tau = scalar_curvature(curv, &frame).unwrap();
            let q = random_rotation(&mut rng, frame.len());
            let rotated: Vec<DVector<f64>> = (0..frame.len())
                .map(|j| (0..frame.len()).fold(DVector::zeros(frame.len()), |acc, i| acc + &frame[i] * q[(i, j)]))
                .collect();
            for (i, u) in rotated.iter().enumerate() {
                for (j, v) in rotated.iter().enumerate() {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((inner(&s.g, u, v) - expect).abs() < 1e-10);
                }
            }
            let tau_rot = scalar_curvature(curv, &rotated).unwrap();
            assert!((tau - tau_rot).abs() < 1e-9 * (1.0 + tau.abs()), "{tau} vs {tau_rot}");
        }
    }
}

#[test]
fn curvature_symmetries() {
    let a = builtin_ambient("sasakian", 1).unwrap();
    let s = a.metric.sample(&Point::new(vec![0.2, -0.4, 0.7])).unwrap();
    let c = s.curvature().unwrap();
    let mut rng = Sampler::new(6);
    let (x, y, z, w) = (rng.vector(3), rng.vector(3), rng.vector(3), rng.vector(3));
    let r = c.eval(&x, &y, &z, &w);
    assert!((r + c.eval(&y, &x, &z, &w)).abs() < 1e-12);
    assert!((r + c.eval(&x, &y, &w, &z)).abs() < 1e-12);
    assert!((r - c.eval(&z, &w, &x, &y)).abs() < 1e-12);
    let bianchi = r + c.eval(&y, &z, &x, &w) + c.eval(&z, &x, &y, &w);
    assert!(bianchi.abs() < 1e-12);
}
