use rayon::prelude::*;

use super::frame::adapted_frame_at;
use super::inequality41::factor_geometry;
use super::{ambient_type, column, require_nt_xi, stamp, PointData, Tolerances};
use crate::error::Result;
use crate::immersion::{second_fundamental_form, SecondFundamentalFormSample};
use crate::manifold::{norm, partial_scalar_curvature, sectional_curvature, MetricSample};
use crate::jet::Point;
use crate::report::{CheckReport, InequalityRow};
use crate::sampling::Sampler;
use crate::warped::WarpedScenario;

/// Both sides of the mean-curvature formula and the `N_T` partial mean curvature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lemma51Value {
    /// `(1/n²) Σ_r (h_11^r + … + h_nn^r)²`.
    pub full: f64,
    /// `(1/n²) Σ_r (h_{n₁+1,n₁+1}^r + … + h_nn^r)²`.
    pub slant_only: f64,
    pub residual: f64,
    /// Norm of `(1/n₁) Σ_{i ≤ n₁} h(e_i, e_i)`.
    pub nt_partial_mean: f64,
}

/// Evaluate the formula on frame coefficients whose first `n1` tangent
/// indices span `N_T`.
pub fn lemma51_residual(h: &SecondFundamentalFormSample, n1: usize) -> Lemma51Value {
    let n = h.n;
    let inv = 1.0 / (n * n) as f64;
    let (mut full, mut slant, mut partial) = (0.0, 0.0, 0.0);
    for r in 0..h.r {
        let head: f64 = (0..n1).map(|i| h.get(i, i, r)).sum();
        let tail: f64 = (n1..n).map(|i| h.get(i, i, r)).sum();
        full += (head + tail).powi(2);
        slant += tail.powi(2);
        if n1 > 0 {
            partial += (head / n1 as f64).powi(2);
        }
    }
    let (full, slant_only) = (full * inv, slant * inv);
    Lemma51Value { full, slant_only, residual: (full - slant_only).abs(), nt_partial_mean: partial.sqrt() }
}

/// `‖H‖² = (1/n²) Σ_r (Σ_{i > n₁} h_ii^r)²` in the adapted frame.
pub fn check_lemma51(scn: &WarpedScenario, sampler: &mut Sampler, count: usize, tol: &Tolerances) -> Result<CheckReport> {
    let points = scn.points(sampler, count);
    require_nt_xi(scn, &points, tol.identity)?;
    let (alpha, beta) = ambient_type(scn, sampler)?;
    let rows = points
        .par_iter()
        .map(|p| {
            let pd = PointData::new(scn, p, false)?;
            let af = adapted_frame_at(scn, &pd, p)?;
            let h = second_fundamental_form(&pd.s, &af.frame, Some(af.n1()));
            let v = lemma51_residual(&h, af.n1());
            let mean_sq = norm(&pd.s.ambient.g, &h.mean).powi(2);
            Ok([v.residual, v.nt_partial_mean, (mean_sq - v.full).abs(), v.full])
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = CheckReport::new("lemma_5_1");
    stamp(&mut report, scn, alpha, beta);
    report.push(column(&rows, 0).identity("|H|^2 = (1/n^2) sum_r (N_theta trace)^2", tol.identity));
    report.push(column(&rows, 1).identity("N_T partial mean curvature vanishes", tol.identity));
    report.push(column(&rows, 2).identity("|H|^2 from the mean vector = (1/n^2) sum_r (trace)^2", tol.identity));
    report.meta("max_mean_curvature_sq", column(&rows, 3).max());
    Ok(report)
}

fn pair_sum(h: &SecondFundamentalFormSample, range: std::ops::Range<usize>) -> f64 {
    let mut s = 0.0;
    for r in 0..h.r {
        for i in range.clone() {
            for k in (i + 1)..range.end {
                s += h.get(i, i, r) * h.get(k, k, r) - h.get(i, k, r).powi(2);
            }
        }
    }
    s
}

/// `½‖h‖² ≥ τ̄(TM) − τ̄(TN_T) − τ̄(TN_θ) − n₂Δf/f`.
///
/// The `τ̄` terms are partial scalar curvatures of the ambient curvature over
/// the adapted frame and its two subframes, evaluated pointwise. `Δf` is the
/// Laplacian of `f` on `N_T`.
pub fn check_inequality_51(scn: &WarpedScenario, sampler: &mut Sampler, count: usize, tol: &Tolerances) -> Result<CheckReport> {
    let points = scn.points(sampler, count);
    require_nt_xi(scn, &points, tol.identity)?;
    let (alpha, beta) = ambient_type(scn, sampler)?;
    let rows = points
        .par_iter()
        .map(|p| {
            let pd = PointData::new(scn, p, false)?;
            let af = adapted_frame_at(scn, &pd, p)?;
            let s = &pd.s;
            let h = second_fundamental_form(s, &af.frame, Some(af.n1()));
            let (n, n1, n2) = (af.n(), af.n1(), af.n2());
            let amb = s.ambient.curvature()?;
            let t = &af.frame.tangent;
            let tau_m = partial_scalar_curvature(amb, t)?;
            let tau_t = partial_scalar_curvature(amb, &t[..n1])?;
            let tau_theta = partial_scalar_curvature(amb, &t[n1..])?;

            let nt = &scn.nt;
            let base = MetricSample::from_jet(&s.induced_jet.block(nt), Point::new(nt.iter().map(|&i| p.coords[i]).collect()))?;
            let f_base = pd.f.restrict(nt);
            let lap = base.laplacian(&f_base, &base.coordinate_frame())?;
            let lap_over_f = lap / pd.f.value();

            let lhs = 0.5 * h.norm_sq();
            let rhs = tau_m - tau_t - tau_theta - n2 as f64 * lap_over_f;
            let trace_sq: f64 = (0..h.r).map(|r| (0..n).map(|i| h.get(i, i, r)).sum::<f64>().powi(2)).sum();
            let rhs_alt = lhs - 0.5 * trace_sq + pair_sum(&h, 0..n1) + pair_sum(&h, n1..n);

            let intr = s.induced.curvature()?;
            let ts = &af.frame.tangent_sub;
            let mut mixed = 0.0;
            let mut lap_identity: f64 = 0.0;
            for j in n1..n {
                let mut col = 0.0;
                for e in &ts[..n1] {
                    col += sectional_curvature(intr, e, &ts[j])?;
                }
                lap_identity = lap_identity.max((col - lap_over_f).abs());
                mixed += col;
            }
            let tau_intr = partial_scalar_curvature(intr, ts)?;
            let gauss29 = 2.0 * tau_intr - 2.0 * tau_m - trace_sq + h.norm_sq();

            let mut spread: (f64, f64) = (f64::INFINITY, f64::NEG_INFINITY);
            for a in 0..t.len() {
                for b in (a + 1)..t.len() {
                    let k = sectional_curvature(amb, &t[a], &t[b])?;
                    spread = (spread.0.min(k), spread.1.max(k));
                }
            }
            let [geodesic, umbilic, _] = factor_geometry(&pd, &af);
            let mixed_residual = (mixed - n2 as f64 * lap_over_f).abs();
            Ok([lhs, rhs, (rhs - rhs_alt).abs(), lap_identity, mixed_residual, gauss29, geodesic, umbilic, spread.1 - spread.0, lap_over_f])
        })
        .collect::<Result<Vec<_>>>()?;
    let ineq: Vec<InequalityRow> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| InequalityRow { sample: i, lhs: r[0], rhs: r[1], margin: r[0] - r[1] })
        .collect();
    let equality = !scn.approximate && ineq.iter().all(|r| r.margin.abs() <= tol.inequality);

    let mut report = CheckReport::new("inequality_5_1");
    stamp(&mut report, scn, alpha, beta);
    report.meta("equality", equality);
    report.meta(
        "tau_bar_convention",
        "ambient partial scalar curvatures over the adapted frame and its N_T and N_theta subframes, evaluated pointwise",
    );
    report.meta("laplacian_convention", "Delta f = -trace Hess f on N_T");
    let spread = column(&rows, 8).max();
    report.meta("ambient_sectional_spread", spread);
    if spread > 1e-9 {
        report.meta("note", "ambient does not have constant sectional curvature on the sampled frames");
    }
    report.meta("first_sample_laplacian_over_f", rows.first().map_or(0.0, |r| r[9]));
    let cross = tol.inequality;
    report.push(column(&rows, 2).identity("rhs agrees with the Gauss (2.9) rearrangement", cross));
    report.push(column(&rows, 3).identity("(5.2) Delta f / f = sum_i K(e_i ^ e_j) for each N_theta e_j", cross));
    report.push(column(&rows, 4).identity("sum of mixed sectional curvatures = n_2 Delta f / f", cross));
    report.push(column(&rows, 5).identity("(2.9) 2 tau = 2 tau_bar(TM) + n^2 |H|^2 - |h|^2", cross));
    for (i, label) in [(6, "N_T totally geodesic in the ambient"), (7, "N_theta totally umbilical in the ambient")] {
        let r = column(&rows, i);
        report.push(if equality {
            r.identity(label, tol.inequality)
        } else {
            r.diagnostic(label, tol.inequality).with_note("equality does not hold; informational")
        });
    }
    report.set_inequality(ineq, tol.inequality);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::GeomError;
    use nalgebra::DVector;
    use crate::scenarios::{s1, s1_perturbed, s1_wide, sphere};
    use crate::warped::{FactorLayout, WarpedScenario};

    fn synthetic(n: usize, r: usize, diag: &[(usize, usize, f64)]) -> SecondFundamentalFormSample {
        let mut coeffs = vec![0.0; n * n * r];
        for &(i, k, v) in diag {
            coeffs[(i * n + i) * r + k] = v;
        }
        SecondFundamentalFormSample {
            point: Point::new(vec![0.0; n]),
            n,
            r,
            coeffs,
            mean: DVector::zeros(r),
            partial_mean: (DVector::zeros(r), DVector::zeros(r)),
        }
    }

    #[test]
    fn injected_d_trace_is_detected() {
        let h = synthetic(5, 2, &[(0, 0, 0.3)]);
        let v = lemma51_residual(&h, 3);
        assert!((v.residual - 0.09 / 25.0).abs() < 1e-15);
        assert!((v.nt_partial_mean - 0.1).abs() < 1e-15);
        let h = synthetic(5, 2, &[(0, 1, 0.3), (1, 1, -0.3), (3, 1, 0.5)]);
        assert!(lemma51_residual(&h, 3).residual < 1e-15);
    }

    #[test]
    fn s1_lemma51() {
        let rep = check_lemma51(&s1(), &mut Sampler::new(31), 20, &Tolerances::default()).unwrap();
        assert!(rep.pass, "{:?}", rep.failures());
    }

    #[test]
    fn sphere_is_refused() {
        let amb = crate::almost_contact::builtin_ambient("cosymplectic", 1).unwrap();
        let scn = WarpedScenario {
            name: "sphere".into(),
            ambient: amb,
            immersion: sphere(),
            nt: vec![0],
            ntheta: vec![1],
            layout: FactorLayout::InvariantFirst,
            warping: crate::jet::ScalarExpr::one(),
            theta: 1.0,
            alpha_beta: Some((0.0, 0.0)),
            approximate: false,
        };
        let err = check_lemma51(&scn, &mut Sampler::new(1), 5, &Tolerances::default()).unwrap_err();
        assert!(matches!(err, GeomError::NotWarped(_)));
    }

    #[test]
    fn s1_inequality51() {
        for scn in [s1(), s1_perturbed(), s1_wide()] {
            let rep = check_inequality_51(&scn, &mut Sampler::new(32), 20, &Tolerances::default()).unwrap();
            assert!(rep.pass, "{}: {:?}", scn.name, rep.failures());
            assert!(rep.min_margin().unwrap() >= -1e-7);
        }
    }
}
