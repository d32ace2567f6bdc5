use nalgebra::DVector;
use rayon::prelude::*;

use super::{ambient_type, column, stamp, Tolerances};
use crate::error::{GeomError, Result};
use crate::immersion::ImmersionSample;
use crate::jet::{eval_jet, Jet, Point};
use crate::manifold::norm;
use crate::report::{CheckReport, RecordKind, ResidualRecord};
use crate::sampling::Sampler;
use crate::warped::{certify_warped, FactorLayout, WarpedScenario};

/// Structure constants below this magnitude make an obstruction vacuous.
pub const VACUOUS_BELOW: f64 = 1e-7;
/// Smallest contradiction ratio that counts as an observed obstruction.
const CONTRADICTION_FLOOR: f64 = 0.1;

/// Terms of `(∇̄_Xφ)ξ + (∇̄_ξφ)X = −αX − βφX` paired with `φX` and with `X`,
/// for `X` tangent to one factor with `η(X) = 0` and `ξ` tangent to `M`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObstructionTerms {
    /// `g(φ∇̄_X ξ, φX)`.
    pub phi_nabla_x_xi: f64,
    /// `g(∇̄_ξ φX, φX)`.
    pub nabla_xi_phi_x: f64,
    /// `g(φ∇̄_ξ X, φX)`.
    pub phi_nabla_xi_x: f64,
    /// `g(φ∇̄_X ξ, X)`.
    pub phi_nabla_x_xi_x: f64,
    /// `g(∇̄_ξ φX, X)`.
    pub nabla_xi_phi_x_x: f64,
    /// `g(φ∇̄_ξ X, X)`.
    pub phi_nabla_xi_x_x: f64,
    pub norm_sq: f64,
    pub phi_norm_sq: f64,
}

fn xi_sub_jets(scn: &WarpedScenario, s: &ImmersionSample, xi: &[Jet]) -> Result<Vec<Jet>> {
    match scn.immersion.splits.as_ref().and_then(|sp| sp.xi.as_ref()) {
        Some(v) => v.iter().map(|e| eval_jet(e, &s.point, 1)).collect(),
        None => s.tangent_field(xi),
    }
}

/// Evaluate the obstruction terms for the constant-coefficient field `x0`
/// (submanifold components), made `η`-orthogonal along `M`.
pub fn obstruction_terms(scn: &WarpedScenario, p: &Point, x0: &DVector<f64>) -> Result<ObstructionTerms> {
    let s = scn.sample(p)?;
    let st = scn.ambient.sample(&s.image, false)?;
    let amb = &scn.ambient;
    let xi = s.compose(&amb.xi, 1)?;
    let eta = s.compose(&amb.eta, 1)?;
    let phi: Vec<Vec<Jet>> = amb.phi.iter().map(|row| s.compose(row, 1)).collect::<Result<_>>()?;
    let xi_sub = xi_sub_jets(scn, &s, &xi)?;

    let jx0 = s.push_field(&s.constant_field(x0));
    let c: Jet = eta.iter().zip(&jx0).map(|(e, v)| e * v).sum();
    let x: Vec<Jet> = s.constant_field(x0).iter().zip(&xi_sub).map(|(a, b)| a - &(&c * b)).collect();
    let jx = s.push_field(&x);
    let phi_x: Vec<Jet> = phi.iter().map(|row| row.iter().zip(&jx).map(|(a, b)| a * b).sum()).collect();

    let xv = DVector::from_iterator(x.len(), x.iter().map(Jet::value));
    let xiv = DVector::from_iterator(xi_sub.len(), xi_sub.iter().map(Jet::value));
    let jxv = s.push(&xv);
    let phi_xv = &st.phi * &jxv;
    let nabla_x_xi = s.ambient_derivative(&xv, &xi);
    let nabla_xi_phi_x = s.ambient_derivative(&xiv, &phi_x);
    let nabla_xi_x = s.ambient_derivative(&xiv, &jx);
    let g = |a: &DVector<f64>, b: &DVector<f64>| st.inner(a, b);
    let phi_a = &st.phi * &nabla_x_xi;
    let phi_c = &st.phi * &nabla_xi_x;
    Ok(ObstructionTerms {
        phi_nabla_x_xi: g(&phi_a, &phi_xv),
        nabla_xi_phi_x: g(&nabla_xi_phi_x, &phi_xv),
        phi_nabla_xi_x: g(&phi_c, &phi_xv),
        phi_nabla_x_xi_x: g(&phi_a, &jxv),
        nabla_xi_phi_x_x: g(&nabla_xi_phi_x, &jxv),
        phi_nabla_xi_x_x: g(&phi_c, &jxv),
        norm_sq: g(&jxv, &jxv),
        phi_norm_sq: g(&phi_xv, &phi_xv),
    })
}

/// Max over points of the `ξ` component outside `factor` plus its normal part.
fn xi_placement(scn: &WarpedScenario, points: &[Point], factor: &[usize]) -> Result<f64> {
    let worst = points
        .par_iter()
        .map(|p| {
            let s = scn.sample(p)?;
            let st = scn.ambient.sample(&s.image, false)?;
            let (xi, off) = crate::immersion::xi_sub(&s, &st, &scn.immersion)?;
            let mut outside = xi.clone();
            for &i in factor {
                outside[i] = 0.0;
            }
            Ok(off + norm(&s.induced.g, &outside))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(worst.into_iter().fold(0.0, f64::max))
}

fn draws(scn: &WarpedScenario, sampler: &mut Sampler, count: usize, factor: &[usize]) -> Vec<(Point, DVector<f64>)> {
    (0..count)
        .map(|_| {
            let p = sampler.point(&scn.immersion.sample_box);
            let coeffs = sampler.vector(factor.len());
            let mut x = DVector::zeros(scn.dim());
            for (k, &i) in factor.iter().enumerate() {
                x[i] = coeffs[k];
            }
            (p, x)
        })
        .collect()
}

fn obstruction_record(label: &str, ratios: &[f64], constant: f64, constant_name: &str) -> ResidualRecord {
    let samples = ratios.len();
    if constant.abs() < VACUOUS_BELOW {
        return ResidualRecord {
            label: label.to_string(),
            max_residual: 0.0,
            mean_residual: 0.0,
            samples,
            tolerance: CONTRADICTION_FLOOR,
            pass: true,
            kind: RecordKind::Obstruction,
            note: Some(format!("{constant_name} = {constant:e}: no constraint")),
        };
    }
    let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = if samples == 0 { 0.0 } else { ratios.iter().sum::<f64>() / samples as f64 };
    ResidualRecord {
        label: label.to_string(),
        max_residual: min,
        mean_residual: mean,
        samples,
        tolerance: CONTRADICTION_FLOOR,
        pass: samples > 0 && min >= CONTRADICTION_FLOOR,
        kind: RecordKind::Obstruction,
        note: Some("max_residual holds the smallest contradiction ratio; it must reach the tolerance".into()),
    }
}

fn usable(t: &ObstructionTerms) -> bool {
    t.norm_sq > 1e-12
}

/// `N₁ ×_f N₂` with `ξ` tangent to `N₂`: pairing with `φX` forces
/// `g(∇̄_ξφX, φX) = −β‖X‖²` against `g(∇̄_ξφX, φX) = g(∇̄_ξX, X) = 0`.
///
/// The identity record evaluates the pairing on the candidate; the
/// obstruction record reports `|g(φ∇̄_Xξ, φX) + g(φ∇̄_ξX, φX) − g(∇̄_ξφX, φX)| / ‖X‖²`,
/// the `β‖X‖²` the candidate realises, which must vanish for a warped
/// product.
pub fn check_theorem31(scn: &WarpedScenario, sampler: &mut Sampler, count: usize, tol: &Tolerances) -> Result<CheckReport> {
    let (first, second) = (scn.first().to_vec(), scn.second().to_vec());
    let probe = scn.points(sampler, count.clamp(1, 16));
    let misplaced = xi_placement(scn, &probe, &second)?;
    if misplaced > tol.identity.max(1e-9) {
        return Err(GeomError::MissingXi(format!("xi is not tangent to the second factor (residual {misplaced:e})")));
    }
    let (alpha, beta) = ambient_type(scn, sampler)?;
    let cert = certify_warped(scn, &probe, tol.identity)?;
    let d = draws(scn, sampler, count, &first);
    let terms = d
        .par_iter()
        .map(|(p, x)| obstruction_terms(scn, p, x))
        .collect::<Result<Vec<_>>>()?;
    let kept: Vec<&ObstructionTerms> = terms.iter().filter(|t| usable(t)).collect();
    let rows: Vec<[f64; 3]> = kept
        .iter()
        .map(|t| {
            let lhs = -t.phi_nabla_x_xi + t.nabla_xi_phi_x - t.phi_nabla_xi_x;
            [
                lhs + beta * t.phi_norm_sq,
                (t.nabla_xi_phi_x + beta * t.norm_sq) / t.norm_sq,
                t.nabla_xi_phi_x / t.norm_sq,
            ]
        })
        .collect();
    let ratios: Vec<f64> = kept
        .iter()
        .map(|t| (t.phi_nabla_x_xi + t.phi_nabla_xi_x - t.nabla_xi_phi_x).abs() / t.norm_sq)
        .collect();

    let mut report = CheckReport::new("theorem_3_1");
    stamp(&mut report, scn, alpha, beta);
    report.push(column(&rows, 0).identity("pairing with phiX: -g(phi nabla_X xi, phiX) + g(nabla_xi phiX, phiX) - g(phi nabla_xi X, phiX) = -beta |phiX|^2", tol.identity));
    report.push(column(&rows, 1).diagnostic("(3.2) g(nabla_xi phiX, phiX) = -beta |X|^2, per |X|^2", tol.identity));
    report.push(column(&rows, 2).diagnostic("(3.3) g(nabla_xi phiX, phiX) = 0, per |X|^2", tol.identity));
    report.push(obstruction_record("implied beta |X|^2 per |X|^2 (contradiction magnitude)", &ratios, beta, "beta"));
    report.meta("candidate_certified_warped", cert.pass);
    report.meta("discarded_zero_x", (terms.len() - kept.len()) as u64);
    report.meta(
        "verdict",
        if beta.abs() < VACUOUS_BELOW {
            "no constraint (beta = 0)"
        } else {
            "warping must be trivial: M is a Riemannian product"
        },
    );
    Ok(report)
}

/// `N_θ ×_f N_T` with `ξ` tangent to `N_θ`: pairing with `X ∈ N_T` gives
/// `−g(φ∇̄_Xξ, X) + g(∇̄_ξφX, X) − g(φ∇̄_ξX, X) = −α‖X‖²`, whose left side
/// vanishes on a warped product.
pub fn check_theorem32(scn: &WarpedScenario, sampler: &mut Sampler, count: usize, tol: &Tolerances) -> Result<CheckReport> {
    if scn.layout != FactorLayout::SlantFirst {
        return Err(GeomError::Validation("theorem 3.2 applies to N_theta x_f N_T layouts".into()));
    }
    let probe = scn.points(sampler, count.clamp(1, 16));
    let misplaced = xi_placement(scn, &probe, &scn.ntheta)?;
    if misplaced > tol.identity.max(1e-9) {
        return Err(GeomError::MissingXi(format!("xi is not tangent to N_theta (residual {misplaced:e})")));
    }
    let (alpha, beta) = ambient_type(scn, sampler)?;
    let cert = certify_warped(scn, &probe, tol.identity)?;
    let d = draws(scn, sampler, count, &scn.nt);
    let terms = d
        .par_iter()
        .map(|(p, x)| obstruction_terms(scn, p, x))
        .collect::<Result<Vec<_>>>()?;
    let kept: Vec<&ObstructionTerms> = terms.iter().filter(|t| usable(t)).collect();
    let lhs = |t: &ObstructionTerms| -t.phi_nabla_x_xi_x + t.nabla_xi_phi_x_x - t.phi_nabla_xi_x_x;
    let rows: Vec<[f64; 1]> = kept.iter().map(|t| [lhs(t) + alpha * t.norm_sq]).collect();
    let ratios: Vec<f64> = kept.iter().map(|t| lhs(t).abs() / t.norm_sq).collect();

    let mut report = CheckReport::new("theorem_3_2");
    stamp(&mut report, scn, alpha, beta);
    report.push(column(&rows, 0).identity("(3.5) -g(phi nabla_X xi, X) + g(nabla_xi phiX, X) - g(phi nabla_xi X, X) = -alpha |X|^2", tol.identity));
    report.push(obstruction_record("(3.5) left side per |X|^2 (contradiction magnitude)", &ratios, alpha, "alpha"));
    report.meta("candidate_certified_warped", cert.pass);
    report.meta("discarded_zero_x", (terms.len() - kept.len()) as u64);
    report.meta(
        "verdict",
        if alpha.abs() < VACUOUS_BELOW {
            "no constraint (alpha = 0)"
        } else {
            "no warped product N_theta x_f N_T with xi tangent to N_theta"
        },
    );
    Ok(report)
}
