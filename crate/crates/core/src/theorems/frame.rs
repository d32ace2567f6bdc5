use std::f64::consts::FRAC_PI_2;

use nalgebra::DVector;

use super::PointData;
use crate::error::{GeomError, Result};
use crate::immersion::{eval_vector, fix_sign, normal_split, FrameSample};
use crate::jet::Point;
use crate::manifold::{gram_residual, inner, norm};
use crate::warped::WarpedScenario;

/// Below this angle `csc θ` normalisation is rejected.
pub const MIN_SLANT_ANGLE: f64 = 0.05;
/// Within this distance of `π/2` the anti-invariant (CR) frame is used.
pub const CR_LIMIT_MARGIN: f64 = 0.05;
const PAIR_COLLAPSE: f64 = 1e-6;

/// The ordered frame `{e_i, φe_i, ξ, e*_j, sec θ Pe*_j}` of `TM` with normal
/// frame `{csc θ Fe*, ν-frame}`.
#[derive(Debug, Clone)]
pub struct AdaptedFrame {
    pub frame: FrameSample,
    pub s: usize,
    pub q: usize,
    pub nu_dim: usize,
    pub theta: f64,
    pub cr_limit: bool,
    /// Max `|‖sec θ Pe*‖ − 1|` before renormalisation.
    pub partner_norm_residual: f64,
    /// Max `|‖csc θ Fe*‖ − 1|` before renormalisation.
    pub normal_norm_residual: f64,
    /// Gram residual of tangent and normal vectors together.
    pub orthonormality: f64,
}

impl AdaptedFrame {
    /// `dim N_T = 2s + 1`.
    pub fn n1(&self) -> usize {
        2 * self.s + 1
    }

    pub fn n2(&self) -> usize {
        2 * self.q
    }

    pub fn n(&self) -> usize {
        self.n1() + self.n2()
    }

    pub fn xi_index(&self) -> usize {
        2 * self.s
    }

    pub fn nt_range(&self) -> std::ops::Range<usize> {
        0..self.n1()
    }

    pub fn ntheta_range(&self) -> std::ops::Range<usize> {
        self.n1()..self.n()
    }

    /// Normal indices spanning `F D_θ`.
    pub fn fd_range(&self) -> std::ops::Range<usize> {
        0..self.n2()
    }

    pub fn nu_range(&self) -> std::ops::Range<usize> {
        self.n2()..self.n2() + self.nu_dim
    }
}

/// Orthogonalise `v` against `span` and normalise; `None` if it collapses.
fn fresh(g: &nalgebra::DMatrix<f64>, span: &[DVector<f64>], v: &DVector<f64>) -> Option<DVector<f64>> {
    let mut w = v.clone();
    for _ in 0..2 {
        for e in span {
            w -= e * inner(g, e, &w);
        }
    }
    let n = norm(g, &w);
    (n > PAIR_COLLAPSE).then(|| w / n)
}

/// Pick vectors from `candidates` and pair each with `partner(v)`, keeping
/// everything orthogonal to the vectors already chosen. Returns the chosen
/// vectors and their partners.
fn pair_up(
    g: &nalgebra::DMatrix<f64>,
    candidates: &[DVector<f64>],
    target: usize,
    mut partner: impl FnMut(&DVector<f64>) -> DVector<f64>,
) -> (Vec<DVector<f64>>, Vec<DVector<f64>>) {
    let (mut firsts, mut partners) = (Vec::new(), Vec::new());
    let mut span: Vec<DVector<f64>> = Vec::new();
    for c in candidates {
        if firsts.len() == target {
            break;
        }
        if let Some(e) = fresh(g, &span, c) {
            let pe = partner(&e);
            span.push(e.clone());
            if let Some(pe_unit) = fresh(g, &span, &pe) {
                span.push(pe_unit);
            }
            firsts.push(e);
            partners.push(pe);
        }
    }
    (firsts, partners)
}

/// Adapted frame at an already sampled point.
pub(super) fn adapted_frame_at(scn: &WarpedScenario, pd: &PointData, p: &Point) -> Result<AdaptedFrame> {
    let theta = scn.theta;
    if !(theta >= MIN_SLANT_ANGLE) {
        return Err(GeomError::FrameDegenerate(format!("slant angle {theta} below {MIN_SLANT_ANGLE} rad")));
    }
    let cr_limit = theta > FRAC_PI_2 - CR_LIMIT_MARGIN;
    let sp = scn.immersion.splits.as_ref().ok_or(GeomError::MissingSplit("distribution splits"))?;
    if sp.invariant.len() % 2 != 0 || sp.slant.len() % 2 != 0 || sp.slant.is_empty() {
        return Err(GeomError::SplitMismatch("adapted frame needs dim D = 2s and dim D_theta = 2q > 0".into()));
    }
    let (s_dim, q) = (sp.invariant.len() / 2, sp.slant.len() / 2);
    let s = &pd.s;
    let gsub = &s.induced.g;
    let gbig = &s.ambient.g;

    let dbasis: Vec<DVector<f64>> = sp.invariant.iter().map(|v| eval_vector(v, p)).collect::<Result<_>>()?;
    let (es, phi_es) = pair_up(gsub, &dbasis, s_dim, |e| pd.p(e));
    if es.len() != s_dim {
        return Err(GeomError::SplitMismatch("D does not split into phi-pairs".into()));
    }

    let tbasis: Vec<DVector<f64>> = sp.slant.iter().map(|v| eval_vector(v, p)).collect::<Result<_>>()?;
    let (sec, csc) = (1.0 / theta.cos(), 1.0 / theta.sin());
    let mut partner_res: f64 = 0.0;
    let slant_frame: Vec<DVector<f64>> = if cr_limit {
        crate::manifold::gram_schmidt(gsub, &tbasis, PAIR_COLLAPSE).0
    } else {
        let project = |v: &DVector<f64>| -> DVector<f64> {
            let (span, _) = crate::manifold::gram_schmidt(gsub, &tbasis, PAIR_COLLAPSE);
            span.iter().fold(DVector::zeros(v.len()), |acc, e| acc + e * inner(gsub, e, v))
        };
        let (stars, partners) = pair_up(gsub, &tbasis, q, |e| project(&pd.p(e)) * sec);
        for pe in &partners {
            partner_res = partner_res.max((norm(gsub, pe) - 1.0).abs());
        }
        let partners: Vec<DVector<f64>> = partners.iter().map(|v| v / norm(gsub, v)).collect();
        stars.into_iter().chain(partners).collect()
    };
    if slant_frame.len() != 2 * q {
        return Err(GeomError::FrameDegenerate("D_theta frame collapsed".into()));
    }

    let mut tangent_sub: Vec<DVector<f64>> = es.clone();
    tangent_sub.extend(phi_es.iter().cloned());
    tangent_sub.push(pd.xi.clone());
    tangent_sub.extend(slant_frame.iter().cloned());
    let mut provenance: Vec<String> = (0..s_dim).map(|i| format!("e[{i}]")).collect();
    provenance.extend((0..s_dim).map(|i| format!("phi e[{i}]")));
    provenance.push("xi".into());
    if cr_limit {
        provenance.extend((0..2 * q).map(|j| format!("e*[{j}]")));
    } else {
        provenance.extend((0..q).map(|j| format!("e*[{j}]")));
        provenance.extend((0..q).map(|j| format!("sec(theta) P e*[{j}]")));
    }

    let normal_scale = if cr_limit { 1.0 } else { csc };
    let mut normal_res: f64 = 0.0;
    let mut fd: Vec<DVector<f64>> = Vec::new();
    for e in &slant_frame {
        let v = pd.f_op(e) * normal_scale;
        let n = norm(gbig, &v);
        if !cr_limit {
            normal_res = normal_res.max((n - 1.0).abs());
        }
        match fresh(gbig, &fd, &v) {
            Some(u) => fd.push(u),
            None => return Err(GeomError::FrameDegenerate("F D_theta frame collapsed".into())),
        }
    }
    let (_, nu_raw) = normal_split(s, &pd.st, &tbasis);
    let nu_pairs = nu_raw.len() / 2;
    let (zs, phi_zs) = pair_up(gbig, &nu_raw, nu_pairs, |z| &pd.st.phi * z);
    let mut nu: Vec<DVector<f64>> = zs;
    for mut v in phi_zs {
        let n = norm(gbig, &v);
        v /= n;
        nu.push(v);
    }
    if nu.len() != nu_raw.len() {
        return Err(GeomError::NormalComplementFailure(format!(
            "nu has dimension {} but only {} phi-adapted vectors were found",
            nu_raw.len(),
            nu.len()
        )));
    }
    for v in &mut nu {
        fix_sign(v);
    }
    let nu_dim = nu.len();
    let mut normal = fd;
    normal.extend(nu);
    if normal.len() != s.codim() {
        return Err(GeomError::NormalComplementFailure(format!(
            "normal frame has {} vectors for codimension {}",
            normal.len(),
            s.codim()
        )));
    }
    let tangent: Vec<DVector<f64>> = tangent_sub.iter().map(|v| s.push(v)).collect();
    let all: Vec<DVector<f64>> = tangent.iter().chain(&normal).cloned().collect();
    let orthonormality = gram_residual(gbig, &all);
    Ok(AdaptedFrame {
        frame: FrameSample { point: p.clone(), tangent_sub, tangent, normal, provenance, collapsed: Vec::new() },
        s: s_dim,
        q,
        nu_dim,
        theta,
        cr_limit,
        partner_norm_residual: partner_res,
        normal_norm_residual: normal_res,
        orthonormality,
    })
}

/// The adapted frame of a scenario at `p`.
pub fn build_adapted_frame(scn: &WarpedScenario, p: &Point) -> Result<AdaptedFrame> {
    let pd = PointData::new(scn, p, false)?;
    adapted_frame_at(scn, &pd, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::{s1, s1_theta, s1_wide};
    use std::f64::consts::FRAC_PI_3;

    fn pt() -> Point {
        Point::new(vec![0.3, -0.5, 1.1, 0.7, -1.3])
    }

    #[test]
    fn s1_frame_layout() {
        let af = build_adapted_frame(&s1(), &pt()).unwrap();
        assert_eq!((af.s, af.q, af.nu_dim), (1, 1, 0));
        assert_eq!(af.frame.tangent.len(), 5);
        assert_eq!(af.frame.normal.len(), 2);
        assert!(af.orthonormality < 1e-9, "{}", af.orthonormality);
        assert!(af.partner_norm_residual < 1e-12);
        assert!(af.normal_norm_residual < 1e-12);
        assert_eq!(af.frame.provenance[af.xi_index()], "xi");
        assert!((af.theta - FRAC_PI_3).abs() < 1e-15);
    }

    #[test]
    fn wide_frame_has_phi_adapted_nu() {
        let scn = s1_wide();
        let pd = PointData::new(&scn, &pt(), false).unwrap();
        let af = adapted_frame_at(&scn, &pd, &pt()).unwrap();
        assert_eq!(af.nu_dim, 2);
        assert!(af.orthonormality < 1e-9);
        let nu = &af.frame.normal[af.nu_range()];
        let phi_z = &pd.st.phi * &nu[0];
        assert!((inner(&pd.s.ambient.g, &phi_z, &nu[1]).abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn small_angle_rejected() {
        let scn = s1_theta(0.01).unwrap();
        assert!(matches!(build_adapted_frame(&scn, &pt()), Err(GeomError::FrameDegenerate(_))));
    }

    #[test]
    fn near_cr_limit_uses_plain_frame() {
        let scn = s1_theta(FRAC_PI_2 - 0.01).unwrap();
        let af = build_adapted_frame(&scn, &pt()).unwrap();
        assert!(af.cr_limit);
        assert!(af.orthonormality < 1e-9);
    }
}
