//! Verification suite for warped-product semi-slant submanifolds: structural
//! identities, non-existence obstructions, the adapted frame and the two
//! inequalities.

mod frame;
mod gauss;
mod inequality41;
mod lemma32;
mod obstructions;
mod section5;

pub use crate::report::{CheckReport, InequalityRow, RecordKind, ResidualRecord, Residuals};
pub use frame::{build_adapted_frame, AdaptedFrame, CR_LIMIT_MARGIN, MIN_SLANT_ANGLE};
pub use gauss::{check_gauss_suite, check_gauss_suite_ordered};
pub use inequality41::{check_inequality_41, slant_coefficient};
pub use lemma32::check_lemma32;
pub use obstructions::{check_theorem31, check_theorem32, obstruction_terms, ObstructionTerms, VACUOUS_BELOW};
pub use section5::{check_inequality_51, check_lemma51, lemma51_residual, Lemma51Value};

use nalgebra::DVector;

use crate::almost_contact::{estimate_alpha_beta, StructureSample};
use crate::error::{GeomError, Result};
use crate::immersion::{xi_sub, ImmersionSample};
use crate::jet::{eval_jet, Jet, Point};
use crate::sampling::Sampler;
use crate::warped::{certify_warped, require_warped, xi_in_nt, WarpedScenario};

/// Pass thresholds for identity records and inequality margins.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub identity: f64,
    pub inequality: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { identity: 1e-8, inequality: 1e-7 }
    }
}

/// Samples used to estimate `(α, β)` when a scenario does not declare them.
const TYPE_SAMPLES: usize = 200;

/// Declared `(α, β)`, or a least-squares estimate from the ambient.
pub fn ambient_type(scn: &WarpedScenario, sampler: &mut Sampler) -> Result<(f64, f64)> {
    match scn.alpha_beta {
        Some(ab) => Ok(ab),
        None => {
            let est = estimate_alpha_beta(&scn.ambient, sampler, TYPE_SAMPLES)?;
            Ok((est.alpha, est.beta))
        }
    }
}

/// Certify the scenario as warped with `ξ` tangent to `N_T`.
fn require_nt_xi(scn: &WarpedScenario, points: &[Point], tolerance: f64) -> Result<CheckReport> {
    let cert = certify_warped(scn, points, tolerance)?;
    require_warped(&cert)?;
    if !xi_in_nt(&cert) {
        let r = cert.record("xi tangent to N_T").map_or(f64::NAN, |r| r.max_residual);
        return Err(GeomError::MissingXi(format!("xi is not tangent to N_T (residual {r:e})")));
    }
    Ok(cert)
}

fn stamp(report: &mut CheckReport, scn: &WarpedScenario, alpha: f64, beta: f64) {
    report.meta("scenario", scn.name.clone());
    report.meta("theta", scn.theta);
    report.meta("alpha", alpha);
    report.meta("beta", beta);
    if scn.approximate {
        report.meta("approximate_scenario", true);
    }
}

/// Everything a check needs at one point of a scenario.
struct PointData {
    s: ImmersionSample,
    st: StructureSample,
    /// Warping function, second-order jet in submanifold coordinates.
    f: Jet,
    xi: DVector<f64>,
}

impl PointData {
    fn new(scn: &WarpedScenario, p: &Point, with_curvature: bool) -> Result<Self> {
        let s = scn.sample(p)?;
        let st = scn.ambient.sample(&s.image, with_curvature)?;
        let f = eval_jet(&scn.warping, p, 2)?;
        if !(f.value() > 0.0) {
            return Err(GeomError::NonPositiveWarping(f.value()));
        }
        let xi = xi_sub(&s, &st, &scn.immersion)?.0;
        Ok(PointData { s, st, f, xi })
    }

    /// `V ln f` for a submanifold vector `V`.
    fn dlnf(&self, v: &DVector<f64>) -> f64 {
        v.dot(&DVector::from_vec(self.f.gradient())) / self.f.value()
    }

    /// `‖grad ln f‖²` in the induced metric.
    fn grad_lnf_sq(&self) -> f64 {
        let d = DVector::from_vec(self.f.gradient()) / self.f.value();
        (d.transpose() * &self.s.induced.ginv * &d)[(0, 0)]
    }

    /// `φ` of a submanifold vector, as an ambient vector.
    fn phi(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.st.phi * self.s.push(v)
    }

    /// `P V`: tangential part of `φV` in submanifold components.
    fn p(&self, v: &DVector<f64>) -> DVector<f64> {
        self.s.tangent_coords(&self.phi(v))
    }

    /// `F V`: normal part of `φV`.
    fn f_op(&self, v: &DVector<f64>) -> DVector<f64> {
        self.s.normal_part(&self.phi(v))
    }

    fn eta(&self, v: &DVector<f64>) -> f64 {
        self.st.eta_of(&self.s.push(v))
    }
}

fn combination(basis: &[DVector<f64>], coeffs: &DVector<f64>) -> DVector<f64> {
    let n = basis.first().map_or(0, |b| b.len());
    basis.iter().zip(coeffs.iter()).fold(DVector::zeros(n), |acc, (b, &c)| acc + b * c)
}

/// One column of per-point rows as residual statistics.
fn column<const N: usize>(rows: &[[f64; N]], i: usize) -> Residuals {
    let mut r = Residuals::new();
    r.extend(rows.iter().map(|row| row[i]));
    r
}
