use std::f64::consts::FRAC_PI_2;

use nalgebra::DVector;
use rayon::prelude::*;

use super::frame::{adapted_frame_at, AdaptedFrame, MIN_SLANT_ANGLE};
use super::{ambient_type, column, require_nt_xi, stamp, PointData, Tolerances};
use crate::error::{GeomError, Result};
use crate::immersion::{second_fundamental_form, SecondFundamentalFormSample};
use crate::manifold::norm;
use crate::report::{CheckReport, InequalityRow, Residuals};
use crate::sampling::Sampler;
use crate::warped::WarpedScenario;

/// `(2/9)cot²θ + 2csc²θ`; exactly 2 at `θ = π/2`.
pub fn slant_coefficient(theta: f64) -> f64 {
    if (theta - FRAC_PI_2).abs() < 1e-12 {
        return 2.0;
    }
    let (c, s) = (theta.cos(), theta.sin());
    2.0 / 9.0 * (c / s).powi(2) + 2.0 / (s * s)
}

/// Residuals of the factor geometry inside the ambient at one point:
/// `[N_T totally geodesic, N_θ umbilical, h^θ(Z,W) + g(Z,W) grad ln f]`.
pub(super) fn factor_geometry(pd: &PointData, af: &AdaptedFrame) -> [f64; 3] {
    let s = &pd.s;
    let t = &af.frame.tangent_sub;
    let proj = |v: &DVector<f64>, range: std::ops::Range<usize>| -> DVector<f64> {
        range.fold(DVector::zeros(v.len()), |acc, i| acc + &t[i] * s.inner_sub(&t[i], v))
    };
    let nabla = |a: usize, b: usize| s.induced.connection.contract(&t[a], &t[b]);
    let gbig = &s.ambient.g;

    let mut geodesic: f64 = 0.0;
    for a in af.nt_range() {
        for b in af.nt_range() {
            let out = s.push(&proj(&nabla(a, b), af.ntheta_range())) + s.h(&t[a], &t[b]);
            geodesic = geodesic.max(norm(gbig, &out));
        }
    }

    let grad_lnf = &s.induced.ginv * DVector::from_vec(pd.f.gradient()) / pd.f.value();
    let mut umbilic_in_m: f64 = 0.0;
    let rng = af.ntheta_range();
    let mut v = vec![vec![DVector::zeros(s.ambient_dim()); rng.len()]; rng.len()];
    for (i, a) in rng.clone().enumerate() {
        for (j, b) in rng.clone().enumerate() {
            let h_theta = proj(&nabla(a, b), af.nt_range());
            let delta = if a == b { 1.0 } else { 0.0 };
            umbilic_in_m = umbilic_in_m.max(norm(&s.induced.g, &(&h_theta + &grad_lnf * delta)));
            v[i][j] = s.push(&h_theta) + s.h(&t[a], &t[b]);
        }
    }
    let k = rng.len();
    let mean = if k == 0 {
        DVector::zeros(s.ambient_dim())
    } else {
        (0..k).fold(DVector::zeros(s.ambient_dim()), |acc, i| acc + &v[i][i]) / k as f64
    };
    let mut umbilic: f64 = 0.0;
    for i in 0..k {
        for j in 0..k {
            let expected = if i == j { mean.clone() } else { DVector::zeros(mean.len()) };
            umbilic = umbilic.max(norm(gbig, &(&v[i][j] - expected)));
        }
    }
    [geodesic, umbilic, umbilic_in_m]
}

fn block_max(h: &SecondFundamentalFormSample, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>, normals: std::ops::Range<usize>) -> f64 {
    let mut m: f64 = 0.0;
    for i in rows {
        for j in cols.clone() {
            for r in normals.clone() {
                m = m.max(h.get(i, j, r).abs());
            }
        }
    }
    m
}

/// `‖h‖² ≥ 2q[{(2/9)cot²θ + 2csc²θ}(‖grad ln f‖² − β²) + α²]` in the adapted
/// frame, with the equality conditions `h(D, D) = 0`, `h(D_θ, D_θ) = 0`,
/// `h(D, D_θ) ⊂ F D_θ` and the umbilicity of `N_θ`.
///
/// The equality conditions count toward the verdict only when equality holds
/// at every sample of an exact scenario.
pub fn check_inequality_41(scn: &WarpedScenario, sampler: &mut Sampler, count: usize, tol: &Tolerances) -> Result<CheckReport> {
    if !(scn.theta >= MIN_SLANT_ANGLE) {
        return Err(GeomError::FrameDegenerate(format!("slant angle {} below {MIN_SLANT_ANGLE} rad", scn.theta)));
    }
    let points = scn.points(sampler, count);
    require_nt_xi(scn, &points, tol.identity)?;
    let (alpha, beta) = ambient_type(scn, sampler)?;
    let coef = slant_coefficient(scn.theta);

    let rows = points
        .par_iter()
        .map(|p| {
            let pd = PointData::new(scn, p, false)?;
            let af = adapted_frame_at(scn, &pd, p)?;
            let h = second_fundamental_form(&pd.s, &af.frame, Some(af.n1()));
            let lhs = h.norm_sq();
            let rhs = 2.0 * af.q as f64 * (coef * (pd.grad_lnf_sq() - beta * beta) + alpha * alpha);
            let dd = block_max(&h, af.nt_range(), af.nt_range(), 0..h.r);
            let tt = block_max(&h, af.ntheta_range(), af.ntheta_range(), 0..h.r);
            let dt_nu = block_max(&h, af.nt_range(), af.ntheta_range(), af.nu_range());
            let [_, umbilic, umbilic_m] = factor_geometry(&pd, &af);
            Ok(([lhs, rhs, dd, tt, dt_nu, umbilic, umbilic_m, af.partner_norm_residual, af.normal_norm_residual, af.orthonormality], af.cr_limit))
        })
        .collect::<Result<Vec<_>>>()?;
    let cr_limit = rows.first().is_some_and(|r| r.1);
    let rows: Vec<[f64; 10]> = rows.into_iter().map(|r| r.0).collect();
    let ineq: Vec<InequalityRow> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| InequalityRow { sample: i, lhs: r[0], rhs: r[1], margin: r[0] - r[1] })
        .collect();
    let equality = !scn.approximate && ineq.iter().all(|r| r.margin.abs() <= tol.inequality);

    let mut report = CheckReport::new("inequality_4_1");
    stamp(&mut report, scn, alpha, beta);
    report.meta("coefficient", coef);
    report.meta("cr_limit", cr_limit);
    report.meta("equality", equality);
    let id = tol.identity;
    let frame_record = |r: Residuals, label: &str| if scn.approximate { r.diagnostic(label, 1e-9) } else { r.identity(label, 1e-9) };
    report.push(frame_record(column(&rows, 9), "adapted frame orthonormal"));
    report.push(frame_record(column(&rows, 7), "|sec(theta) P e*| = 1"));
    report.push(frame_record(column(&rows, 8), "|csc(theta) F e*| = 1"));
    let labels = [
        (2, "(4.7) h(D, D) = 0"),
        (3, "(4.7) h(D_theta, D_theta) = 0"),
        (4, "(4.7) h(D, D_theta) in F D_theta"),
        (5, "N_theta totally umbilical in the ambient"),
    ];
    for (i, label) in labels {
        let r = column(&rows, i);
        let rec = if equality {
            r.identity(label, tol.inequality)
        } else {
            r.diagnostic(label, tol.inequality).with_note("equality does not hold; informational")
        };
        report.push(rec);
    }
    let umb = column(&rows, 6);
    report.push(if scn.approximate {
        umb.diagnostic("(4.8) h^theta(Z,W) = -g(Z,W) grad ln f", id)
    } else {
        umb.identity("(4.8) h^theta(Z,W) = -g(Z,W) grad ln f", id)
    });
    report.set_inequality(ineq, tol.inequality);
    Ok(report)
}
