//! Almost contact metric structures `(φ, ξ, η, g)`, the nearly
//! trans-Sasakian defect, and the built-in ambient models.
//!
//! Chart layout of the built-ins: coordinate 0 is the `ξ`-direction (`z` or
//! `t`); the pair `(x_i, y_i)` sits at indices `2i − 1, 2i` for `i = 1..=m`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{GeomError, Result};
use crate::jet::{constant, eval_jet, exp, var, Jet, Point, ScalarExpr};
use crate::manifold::{inner, norm, MetricField, MetricSample};
use crate::report::{CheckReport, Residuals};
use crate::sampling::{SampleBox, Sampler};

/// Default residual tolerance for the structure axioms.
pub const AXIOM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct AlmostContactStructure {
    pub name: String,
    pub metric: MetricField,
    /// `phi[i][j]` is component `i` of `φ(∂_j)`.
    pub phi: Vec<Vec<ScalarExpr>>,
    pub xi: Vec<ScalarExpr>,
    pub eta: Vec<ScalarExpr>,
    pub sample_box: SampleBox,
}

impl AlmostContactStructure {
    pub fn new(
        name: impl Into<String>,
        metric: MetricField,
        phi: Vec<Vec<ScalarExpr>>,
        xi: Vec<ScalarExpr>,
        eta: Vec<ScalarExpr>,
        sample_box: SampleBox,
    ) -> Result<Self> {
        let n = metric.dim();
        if n % 2 == 0 {
            return Err(GeomError::DimensionMismatch(format!("almost contact chart must be odd-dimensional, got {n}")));
        }
        if phi.len() != n || phi.iter().any(|r| r.len() != n) || xi.len() != n || eta.len() != n {
            return Err(GeomError::DimensionMismatch("phi, xi and eta must match the metric dimension".into()));
        }
        if sample_box.dim() != n {
            return Err(GeomError::DimensionMismatch("sampling box does not match the chart".into()));
        }
        Ok(AlmostContactStructure { name: name.into(), metric, phi, xi, eta, sample_box })
    }

    pub fn dim(&self) -> usize {
        self.metric.dim()
    }

    /// `m` with `dim = 2m + 1`.
    pub fn m(&self) -> usize {
        (self.dim() - 1) / 2
    }

    /// Values and first derivatives of every tensor at `p`. Curvature is
    /// included when `with_curvature` is set.
    pub fn sample(&self, p: &Point, with_curvature: bool) -> Result<StructureSample> {
        let n = self.dim();
        p.expect_dim(n)?;
        let order = if with_curvature { 2 } else { 1 };
        let metric = MetricSample::from_jet(&self.metric.jet_at(p, order)?, p.clone())?;
        let mut phi = DMatrix::zeros(n, n);
        let mut dphi = vec![DMatrix::zeros(n, n); n];
        for i in 0..n {
            for j in 0..n {
                if self.phi[i][j].is_zero() {
                    continue;
                }
                let jet = eval_jet(&self.phi[i][j], p, 1)?;
                phi[(i, j)] = jet.value();
                for (k, d) in dphi.iter_mut().enumerate() {
                    d[(i, j)] = jet.partial(&[k]);
                }
            }
        }
        let (xi, dxi) = vector_with_derivatives(&self.xi, p)?;
        let eta = DVector::from_iterator(n, self.eta.iter().map(|e| e.eval(&p.coords)).collect::<Result<Vec<_>>>()?);
        Ok(StructureSample::assemble(metric, phi, dphi, xi, dxi, eta))
    }
}

fn vector_with_derivatives(field: &[ScalarExpr], p: &Point) -> Result<(DVector<f64>, Vec<DVector<f64>>)> {
    let n = field.len();
    let mut value = DVector::zeros(n);
    let mut d = vec![DVector::zeros(n); p.dim()];
    for (i, e) in field.iter().enumerate() {
        if e.is_zero() {
            continue;
        }
        let jet: Jet = eval_jet(e, p, 1)?;
        value[i] = jet.value();
        for (k, dk) in d.iter_mut().enumerate() {
            dk[i] = jet.partial(&[k]);
        }
    }
    Ok((value, d))
}

/// Pointwise values of the structure, its derivatives and the Levi-Civita
/// connection of `g`.
#[derive(Debug, Clone)]
pub struct StructureSample {
    pub metric: MetricSample,
    pub phi: DMatrix<f64>,
    /// `dphi[k] = ∂_k φ`.
    pub dphi: Vec<DMatrix<f64>>,
    pub xi: DVector<f64>,
    pub dxi: Vec<DVector<f64>>,
    pub eta: DVector<f64>,
    /// `gamma[k][(i, j)] = Γ^i_kj`.
    pub gamma: Vec<DMatrix<f64>>,
}

impl StructureSample {
    fn assemble(
        metric: MetricSample,
        phi: DMatrix<f64>,
        dphi: Vec<DMatrix<f64>>,
        xi: DVector<f64>,
        dxi: Vec<DVector<f64>>,
        eta: DVector<f64>,
    ) -> Self {
        let n = phi.nrows();
        let gamma = (0..n)
            .map(|k| DMatrix::from_fn(n, n, |i, j| metric.connection.get(i, k, j)))
            .collect();
        StructureSample { metric, phi, dphi, xi, dxi, eta, gamma }
    }

    pub fn dim(&self) -> usize {
        self.phi.nrows()
    }

    pub fn g(&self) -> &DMatrix<f64> {
        &self.metric.g
    }

    pub fn inner(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        inner(&self.metric.g, u, v)
    }

    pub fn eta_of(&self, v: &DVector<f64>) -> f64 {
        self.eta.dot(v)
    }

    /// `∇̄_X Y` for `Y` with components `y` and directional derivative
    /// `dy = X(Y^i)` along `x`.
    pub fn covariant(&self, x: &DVector<f64>, y: &DVector<f64>, dy: &DVector<f64>) -> DVector<f64> {
        dy + self.metric.connection.contract(x, y)
    }

    /// `(∇̄_X φ)Y = ∇̄_X(φY) − φ(∇̄_X Y)` with `X, Y` constant-coefficient.
    pub fn covariant_phi(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        let n = self.dim();
        let mut out = DVector::zeros(n);
        let phi_y = &self.phi * y;
        for k in 0..n {
            if x[k] == 0.0 {
                continue;
            }
            let term = &self.dphi[k] * y + &self.gamma[k] * &phi_y - &self.phi * (&self.gamma[k] * y);
            out += term * x[k];
        }
        out
    }

    /// `∇̄_X ξ`.
    pub fn covariant_xi(&self, x: &DVector<f64>) -> DVector<f64> {
        let n = self.dim();
        let mut dxi = DVector::zeros(n);
        for k in 0..n {
            dxi += &self.dxi[k] * x[k];
        }
        self.covariant(x, &self.xi, &dxi)
    }

    /// `(∇̄_Xφ)Y + (∇̄_Yφ)X`.
    pub fn nts_lhs(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        self.covariant_phi(x, y) + self.covariant_phi(y, x)
    }

    /// The `α` and `β` coefficient fields of the nearly trans-Sasakian
    /// right-hand side: `2g(X,Y)ξ − η(Y)X − η(X)Y` and `−η(Y)φX − η(X)φY`.
    pub fn nts_basis(&self, x: &DVector<f64>, y: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let (ex, ey) = (self.eta_of(x), self.eta_of(y));
        let a = &self.xi * (2.0 * self.inner(x, y)) - x * ey - y * ex;
        let b = -(&self.phi * x * ey + &self.phi * y * ex);
        (a, b)
    }

    pub fn nts_defect(&self, alpha: f64, beta: f64, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        let (a, b) = self.nts_basis(x, y);
        self.nts_lhs(x, y) - a * alpha - b * beta
    }

    pub fn norm(&self, v: &DVector<f64>) -> f64 {
        norm(&self.metric.g, v)
    }
}

/// Fitted constant type `(α, β)` of a nearly trans-Sasakian structure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaBetaEstimate {
    pub alpha: f64,
    pub beta: f64,
    /// Max `‖defect‖` after the fit.
    pub residual: f64,
    pub samples: usize,
}

struct Probe {
    p: Point,
    x: DVector<f64>,
    y: DVector<f64>,
}

fn draw_probes(s: &AlmostContactStructure, sampler: &mut Sampler, count: usize) -> Vec<Probe> {
    (0..count)
        .map(|_| {
            let p = sampler.point(&s.sample_box);
            let x = sampler.vector(s.dim());
            let y = sampler.vector(s.dim());
            Probe { p, x, y }
        })
        .collect()
}

pub fn covariant_phi(s: &AlmostContactStructure, x: &DVector<f64>, y: &DVector<f64>, p: &Point) -> Result<DVector<f64>> {
    Ok(s.sample(p, false)?.covariant_phi(x, y))
}

pub fn nts_defect(
    s: &AlmostContactStructure,
    alpha: f64,
    beta: f64,
    x: &DVector<f64>,
    y: &DVector<f64>,
    p: &Point,
) -> Result<DVector<f64>> {
    Ok(s.sample(p, false)?.nts_defect(alpha, beta, x, y))
}

/// Axioms of an almost contact metric structure at `count` random points.
pub fn validate_structure(
    s: &AlmostContactStructure,
    sampler: &mut Sampler,
    count: usize,
    tolerance: f64,
) -> Result<CheckReport> {
    let probes = draw_probes(s, sampler, count);
    let n = s.dim();
    let rows = probes
        .par_iter()
        .map(|pr| {
            let st = s.sample(&pr.p, false)?;
            let id = DMatrix::<f64>::identity(n, n);
            let phi2 = &st.phi * &st.phi + id - &st.xi * st.eta.transpose();
            let phi_xi = (&st.phi * &st.xi).amax();
            let eta_phi = (st.eta.transpose() * &st.phi).amax();
            let eta_xi = st.eta_of(&st.xi) - 1.0;
            let dual = (&st.eta - st.g() * &st.xi).amax();
            let (x, y) = (&pr.x, &pr.y);
            let compat = st.inner(&(&st.phi * x), &(&st.phi * y)) - st.inner(x, y) + st.eta_of(x) * st.eta_of(y);
            Ok([phi2.amax(), phi_xi, eta_phi, eta_xi, dual, compat])
        })
        .collect::<Result<Vec<_>>>()?;
    let labels = [
        "phi^2 = -I + eta (x) xi",
        "phi xi = 0",
        "eta o phi = 0",
        "eta(xi) = 1",
        "eta(X) = g(X, xi)",
        "g(phi X, phi Y) = g(X, Y) - eta(X) eta(Y)",
    ];
    let mut report = CheckReport::new("validate_structure");
    report.meta("ambient", s.name.clone());
    report.meta("dim", n);
    for (i, label) in labels.iter().enumerate() {
        let mut r = Residuals::new();
        r.extend(rows.iter().map(|row| row[i]));
        report.push(r.identity(*label, tolerance));
    }
    Ok(report)
}

/// Least-squares fit of constant `(α, β)` to the symmetrised `∇̄φ`.
pub fn estimate_alpha_beta(s: &AlmostContactStructure, sampler: &mut Sampler, count: usize) -> Result<AlphaBetaEstimate> {
    let probes = draw_probes(s, sampler, count);
    let terms = probes
        .par_iter()
        .map(|pr| {
            let st = s.sample(&pr.p, false)?;
            let lhs = st.nts_lhs(&pr.x, &pr.y);
            let (a, b) = st.nts_basis(&pr.x, &pr.y);
            Ok((st, lhs, a, b))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut normal = [[0.0; 2]; 2];
    let mut rhs = [0.0; 2];
    for (st, lhs, a, b) in &terms {
        normal[0][0] += st.inner(a, a);
        normal[0][1] += st.inner(a, b);
        normal[1][1] += st.inner(b, b);
        rhs[0] += st.inner(a, lhs);
        rhs[1] += st.inner(b, lhs);
    }
    let det = normal[0][0] * normal[1][1] - normal[0][1] * normal[0][1];
    let scale = normal[0][0] * normal[1][1];
    if !(scale > 0.0) || det <= 1e-12 * scale {
        return Err(GeomError::IllConditionedFit(format!("normal-equation determinant {det:e}")));
    }
    let alpha = (rhs[0] * normal[1][1] - rhs[1] * normal[0][1]) / det;
    let beta = (normal[0][0] * rhs[1] - normal[0][1] * rhs[0]) / det;
    let residual = terms
        .iter()
        .map(|(st, lhs, a, b)| st.norm(&(lhs - a * alpha - b * beta)))
        .fold(0.0, f64::max);
    Ok(AlphaBetaEstimate { alpha, beta, residual, samples: count })
}

fn complex_rotation(m: usize) -> Vec<Vec<ScalarExpr>> {
    let n = 2 * m + 1;
    let mut phi = vec![vec![ScalarExpr::zero(); n]; n];
    for i in 1..=m {
        let (x, y) = (2 * i - 1, 2 * i);
        phi[y][x] = ScalarExpr::one();
        phi[x][y] = constant(-1.0);
    }
    phi
}

fn unit(n: usize, i: usize) -> Vec<ScalarExpr> {
    (0..n).map(|k| if k == i { ScalarExpr::one() } else { ScalarExpr::zero() }).collect()
}

/// `cosymplectic`, `kenmotsu` or `sasakian` on a `(2m+1)`-dimensional chart.
pub fn builtin_ambient(name: &str, m: usize) -> Result<AlmostContactStructure> {
    if m == 0 {
        return Err(GeomError::Validation("built-in ambients need m >= 1".into()));
    }
    let n = 2 * m + 1;
    match name {
        "cosymplectic" => AlmostContactStructure::new(
            name,
            MetricField::euclidean(n),
            complex_rotation(m),
            unit(n, 0),
            unit(n, 0),
            SampleBox::cube(n, 2.0),
        ),
        "kenmotsu" => {
            let mut diag = vec![exp(2.0 * var(0)); n];
            diag[0] = ScalarExpr::one();
            let mut b = SampleBox::cube(n, 2.0);
            b.lo[0] = -1.0;
            b.hi[0] = 1.0;
            AlmostContactStructure::new(name, MetricField::diagonal(diag), complex_rotation(m), unit(n, 0), unit(n, 0), b)
        }
        "sasakian" => {
            let mut eta = vec![ScalarExpr::zero(); n];
            eta[0] = constant(0.5);
            for i in 1..=m {
                eta[2 * i - 1] = -0.5 * var(2 * i);
            }
            let metric = MetricField::from_fn(n, |i, j| {
                let flat = if i == j && i > 0 { constant(0.25) } else { ScalarExpr::zero() };
                let cross = eta[i].clone() * eta[j].clone();
                match (eta[i].is_zero() || eta[j].is_zero(), flat.is_zero()) {
                    (true, true) => ScalarExpr::zero(),
                    (true, false) => flat,
                    (false, true) => cross,
                    (false, false) => cross + flat,
                }
            });
            let mut phi = vec![vec![ScalarExpr::zero(); n]; n];
            for i in 1..=m {
                let (x, y) = (2 * i - 1, 2 * i);
                phi[y][x] = constant(-1.0);
                phi[x][y] = ScalarExpr::one();
                phi[0][y] = var(y);
            }
            let mut xi = vec![ScalarExpr::zero(); n];
            xi[0] = constant(2.0);
            AlmostContactStructure::new(name, metric, phi, xi, eta, SampleBox::cube(n, 2.0))
        }
        other => Err(GeomError::UnknownModel(other.to_string())),
    }
}

/// `(α, β)` of a built-in model.
pub fn builtin_type(name: &str) -> Option<(f64, f64)> {
    match name {
        "cosymplectic" => Some((0.0, 0.0)),
        "kenmotsu" => Some((0.0, 1.0)),
        "sasakian" => Some((1.0, 0.0)),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(n: usize, i: usize) -> DVector<f64> {
        DVector::from_fn(n, |k, _| if k == i { 1.0 } else { 0.0 })
    }

    #[test]
    fn builtins_satisfy_axioms() {
        for name in ["cosymplectic", "kenmotsu", "sasakian"] {
            for m in 1..=3 {
                let s = builtin_ambient(name, m).unwrap();
                assert_eq!(s.dim(), 2 * m + 1);
                let rep = validate_structure(&s, &mut Sampler::new(3), 30, AXIOM_TOL).unwrap();
                assert!(rep.pass, "{name} m={m}: {:?}", rep.failures());
            }
        }
    }

    #[test]
    fn cosymplectic_exact() {
        let s = builtin_ambient("cosymplectic", 2).unwrap();
        let rep = validate_structure(&s, &mut Sampler::new(1), 10, 0.0).unwrap();
        assert!(rep.records[..5].iter().all(|r| r.max_residual == 0.0));
        assert!(rep.records[5].max_residual < 1e-15);
        let d = covariant_phi(&s, &e(5, 1), &e(5, 2), &Point::new(vec![0.3; 5])).unwrap();
        assert_eq!(d.amax(), 0.0);
    }

    #[test]
    fn flipped_sign_fails() {
        let mut s = builtin_ambient("cosymplectic", 1).unwrap();
        s.phi[1][2] = ScalarExpr::one();
        let rep = validate_structure(&s, &mut Sampler::new(2), 10, AXIOM_TOL).unwrap();
        assert!(!rep.record("phi^2 = -I + eta (x) xi").unwrap().pass);
    }

    #[test]
    fn sasakian_normalization() {
        let s = builtin_ambient("sasakian", 2).unwrap();
        let st = s.sample(&Point::new(vec![0.1, -0.4, 1.3, 0.2, -1.7]), false).unwrap();
        assert_eq!(st.eta_of(&st.xi), 1.0);
    }

    #[test]
    fn kenmotsu_defect() {
        let s = builtin_ambient("kenmotsu", 2).unwrap();
        let p = Point::new(vec![0.0; 5]);
        let x = e(5, 1);
        let lhs = s.sample(&p, false).unwrap().nts_lhs(&x, &x);
        assert!(lhs.amax() < 1e-15);
        let mut smp = Sampler::new(11);
        let mut worst_wrong: f64 = 0.0;
        for _ in 0..100 {
            let p = smp.point(&s.sample_box);
            let (x, y) = (smp.vector(5), smp.vector(5));
            let st = s.sample(&p, false).unwrap();
            assert!(st.norm(&st.nts_defect(0.0, 1.0, &x, &y)) < 1e-9);
            assert!((st.nts_defect(0.0, 1.0, &x, &y) - st.nts_defect(0.0, 1.0, &y, &x)).amax() < 1e-12);
            worst_wrong = worst_wrong.max(st.norm(&st.nts_defect(1.0, 0.0, &x, &y)));
        }
        assert!(worst_wrong >= 0.1);
    }

    #[test]
    fn xi_xi_defect_vanishes() {
        for name in ["kenmotsu", "sasakian"] {
            let s = builtin_ambient(name, 1).unwrap();
            let st = s.sample(&Point::new(vec![0.2, 0.5, -0.3]), false).unwrap();
            let (a, b) = st.nts_basis(&st.xi, &st.xi);
            assert!(a.amax() < 1e-14 && b.amax() < 1e-14);
        }
    }

    #[test]
    fn recovers_types() {
        for name in ["cosymplectic", "kenmotsu", "sasakian"] {
            let s = builtin_ambient(name, 2).unwrap();
            let est = estimate_alpha_beta(&s, &mut Sampler::new(5), 200).unwrap();
            let (a, b) = builtin_type(name).unwrap();
            assert!((est.alpha - a).abs() < 1e-6 && (est.beta - b).abs() < 1e-6, "{name}: {est:?}");
            assert!(est.residual < 1e-7);
        }
    }

    #[test]
    fn unknown_and_degenerate() {
        assert!(matches!(builtin_ambient("nearly-kaehler", 1), Err(GeomError::UnknownModel(_))));
        assert!(builtin_ambient("kenmotsu", 0).is_err());
        let s = builtin_ambient("kenmotsu", 1).unwrap();
        assert!(matches!(estimate_alpha_beta(&s, &mut Sampler::new(0), 0), Err(GeomError::IllConditionedFit(_))));
    }
}
