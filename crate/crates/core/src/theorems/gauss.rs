use rayon::prelude::*;

use super::column;
use crate::error::Result;
use crate::immersion::{coordinate_candidates, frame_from_candidates, second_fundamental_form, weingarten_duality_residual, Immersion};
use crate::jet::Point;
use crate::manifold::MetricField;
use crate::report::CheckReport;

/// Gauss equation in frame components, its sectional and scalar
/// contractions, and the `h`/`A_N` duality, with intrinsic curvature from the
/// induced metric and ambient curvature from the ambient metric.
pub fn check_gauss_suite(ambient: &MetricField, imm: &Immersion, points: &[Point], tolerance: f64) -> Result<CheckReport> {
    check_gauss_suite_ordered(ambient, imm, points, tolerance, None)
}

/// [`check_gauss_suite`] with the tangent frame built from the coordinate
/// vectors in `frame_order` first.
pub fn check_gauss_suite_ordered(
    ambient: &MetricField,
    imm: &Immersion,
    points: &[Point],
    tolerance: f64,
    frame_order: Option<&[usize]>,
) -> Result<CheckReport> {
    let rows = points
        .par_iter()
        .map(|p| {
            let s = imm.sample(ambient, p)?;
            let frame = frame_from_candidates(&s, &coordinate_candidates(imm.dim, frame_order))?;
            let h = second_fundamental_form(&s, &frame, None);
            let n = imm.dim;
            let intr = s.induced.curvature()?.in_frame(&frame.tangent_sub);
            let amb = s.ambient.curvature()?.in_frame(&frame.tangent);
            let at = |t: &[f64], a: usize, b: usize, c: usize, d: usize| t[((a * n + b) * n + c) * n + d];
            let hh = |a: usize, b: usize, c: usize, d: usize| -> f64 { (0..h.r).map(|r| h.get(a, b, r) * h.get(c, d, r)).sum() };

            let mut gauss: f64 = 0.0;
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        for d in 0..n {
                            let r = at(&intr, a, b, c, d) - at(&amb, a, b, c, d) - hh(a, d, b, c) + hh(a, c, b, d);
                            gauss = gauss.max(r.abs());
                        }
                    }
                }
            }
            let mut sectional: f64 = 0.0;
            let (mut tau, mut tau_bar) = (0.0, 0.0);
            for i in 0..n {
                for j in (i + 1)..n {
                    let k = at(&intr, i, j, j, i);
                    let kb = at(&amb, i, j, j, i);
                    tau += k;
                    tau_bar += kb;
                    sectional = sectional.max((k - kb - (hh(i, i, j, j) - hh(i, j, i, j))).abs());
                }
            }
            let trace_sq: f64 = (0..h.r).map(|r| (0..n).map(|i| h.get(i, i, r)).sum::<f64>().powi(2)).sum();
            let scalar = 2.0 * tau - 2.0 * tau_bar - trace_sq + h.norm_sq();
            let duality = weingarten_duality_residual(&s, &frame)?;
            Ok([gauss, sectional, scalar, duality])
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = CheckReport::new("gauss_suite");
    report.meta("immersion", imm.name.clone());
    report.push(column(&rows, 0).identity("(2.5) R = R_bar + g(h(X,W),h(Y,Z)) - g(h(X,Z),h(Y,W))", tolerance));
    report.push(column(&rows, 1).identity("(2.8) K = K_bar + sum_r (h_ii h_jj - h_ij^2)", tolerance));
    report.push(column(&rows, 2).identity("(2.9) 2 tau = 2 tau_bar + n^2 |H|^2 - |h|^2", tolerance));
    report.push(column(&rows, 3).identity("(2.3) g(A_N X, Y) = g(h(X,Y), N)", tolerance));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::Sampler;
    use crate::scenarios::{plane, quadratic_graph, s1, sphere};

    #[test]
    fn sphere_graph_plane() {
        let e3 = MetricField::euclidean(3);
        for imm in [sphere(), quadratic_graph(0.7, -0.4, 1.3), plane()] {
            let pts = Sampler::new(41).points(&imm.sample_box, 20);
            let rep = check_gauss_suite(&e3, &imm, &pts, 1e-8).unwrap();
            assert!(rep.pass, "{}: {:?}", imm.name, rep.failures());
        }
    }

    #[test]
    fn plane_is_exactly_flat() {
        let pts = Sampler::new(42).points(&plane().sample_box, 5);
        let rep = check_gauss_suite(&MetricField::euclidean(3), &plane(), &pts, 0.0).unwrap();
        assert!(rep.pass, "{:?}", rep.records);
    }

    #[test]
    fn s1_gauss() {
        let scn = s1();
        let pts = scn.points(&mut Sampler::new(43), 10);
        let rep = check_gauss_suite(&scn.ambient.metric, &scn.immersion, &pts, 1e-8).unwrap();
        assert!(rep.pass, "{:?}", rep.failures());
    }
}
