//! Warped product metrics `N₁ ×_f N₂` and warped-product immersions.

use nalgebra::DVector;
use rayon::prelude::*;

use crate::almost_contact::AlmostContactStructure;
use crate::error::{GeomError, Result};
use crate::immersion::{xi_sub, Immersion, ImmersionSample};
use crate::jet::{eval_jet, exp, var, Jet, Point, ScalarExpr};
use crate::manifold::{gram_schmidt, inner, norm, MetricField, MetricJet, MetricSample};
use crate::report::{CheckReport, Residuals};
use crate::sampling::{SampleBox, Sampler};

/// `N₁ ×_f N₂`: base metric in coordinates `0..n₁`, fiber metric in its own
/// coordinates `0..n₂`, warping in base coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpedProductSpec {
    pub name: String,
    pub base: MetricField,
    pub fiber: MetricField,
    pub warping: ScalarExpr,
    pub sample_box: SampleBox,
}

impl WarpedProductSpec {
    pub fn new(
        name: impl Into<String>,
        base: MetricField,
        fiber: MetricField,
        warping: ScalarExpr,
        sample_box: SampleBox,
    ) -> Result<Self> {
        let n1 = base.dim();
        if warping.arity() > n1 {
            return Err(GeomError::Validation("warping function must depend on base coordinates only".into()));
        }
        if sample_box.dim() != n1 + fiber.dim() {
            return Err(GeomError::DimensionMismatch("sampling box does not match the product".into()));
        }
        Ok(WarpedProductSpec { name: name.into(), base, fiber, warping, sample_box })
    }

    pub fn n1(&self) -> usize {
        self.base.dim()
    }

    pub fn n2(&self) -> usize {
        self.fiber.dim()
    }

    pub fn dim(&self) -> usize {
        self.n1() + self.n2()
    }

    fn split_point(&self, p: &Point) -> (Point, Point) {
        (Point::new(p.coords[..self.n1()].to_vec()), Point::new(p.coords[self.n1()..].to_vec()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WarpedMetric {
    pub metric: MetricField,
    /// `f` is constant: a Riemannian product.
    pub trivial: bool,
}

/// `g₁ ⊕ f² g₂`. The warping is checked positive on a fixed sample of the box.
pub fn build_warped_metric(spec: &WarpedProductSpec) -> Result<WarpedMetric> {
    let n1 = spec.n1();
    let mut sampler = Sampler::new(0);
    for p in sampler.points(&spec.sample_box, 64) {
        let f = spec.warping.eval(&p.coords[..n1])?;
        if !(f > 0.0) {
            return Err(GeomError::NonPositiveWarping(f));
        }
    }
    let f2 = spec.warping.clone().powi(2);
    let metric = MetricField::from_fn(spec.dim(), |i, j| {
        if i < n1 && j < n1 {
            spec.base.get(i, j).clone()
        } else if i >= n1 && j >= n1 {
            let e = spec.fiber.get(i - n1, j - n1);
            if e.is_zero() {
                ScalarExpr::zero()
            } else {
                f2.clone() * e.shift_vars(n1)
            }
        } else {
            ScalarExpr::zero()
        }
    });
    let trivial = spec.warping.arity() == 0 || spec.warping.as_const().is_some();
    Ok(WarpedMetric { metric, trivial })
}

fn block_vector(n: usize, idx: &[usize], v: &DVector<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(n);
    for (k, &i) in idx.iter().enumerate() {
        out[i] = v[k];
    }
    out
}

fn restrict_to(idx: &[usize], v: &DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(idx.len(), idx.iter().map(|&i| v[i]))
}

/// Lemma-3.1 residuals at one point. `full` is the warped metric, `fiber`
/// the second-factor metric in its own coordinates, `f` a first-order jet of
/// the warping in the full coordinates.
fn lemma31_residuals(
    full: &MetricSample,
    fiber: &MetricSample,
    first: &[usize],
    second: &[usize],
    f: &Jet,
    vecs: &[DVector<f64>; 4],
) -> [f64; 5] {
    let n = full.dim();
    let [x, y, z, w] = vecs;
    let x = block_vector(n, first, x);
    let y = block_vector(n, first, y);
    let z = block_vector(n, second, z);
    let w = block_vector(n, second, w);
    let g = &full.g;
    let c = &full.connection;
    let fval = f.value();
    let grad_f = full.gradient(f);
    let x_ln_f = x.dot(&DVector::from_vec(f.gradient())) / fval;

    let nxy = c.contract(&x, &y);
    let r1 = norm(g, &block_vector(n, second, &restrict_to(second, &nxy)));
    let nxz = c.contract(&x, &z);
    let nzx = c.contract(&z, &x);
    let r2 = norm(g, &(&nxz - &z * x_ln_f));
    let r2b = norm(g, &(&nzx - &z * x_ln_f));
    let fiber_cov = block_vector(n, second, &fiber.connection.contract(&restrict_to(second, &z), &restrict_to(second, &w)));
    let nzw = c.contract(&z, &w);
    let r3 = norm(g, &(nzw - fiber_cov + &grad_f * (inner(g, &z, &w) / fval)));
    // grad ln f has no second-factor component and matches the first factor's gradient
    let grad_second = norm(g, &block_vector(n, second, &restrict_to(second, &grad_f)));
    [r1, r2, r2b, r3, grad_second]
}

fn lemma31_report(rows: &[[f64; 5]], tolerance: f64, trivial_hint: Option<bool>, xlnf_max: f64) -> CheckReport {
    let labels = [
        "(i) nabla_X Y tangent to N1",
        "(ii) nabla_X Z = (X ln f) Z",
        "(ii) nabla_Z X = (X ln f) Z",
        "(iii) nabla_Z W = nabla^N2_Z W - g(Z,W)/f grad f",
        "grad f tangent to N1",
    ];
    let mut report = CheckReport::new("lemma_3_1");
    for (i, l) in labels.iter().enumerate() {
        let mut r = Residuals::new();
        r.extend(rows.iter().map(|row| row[i]));
        report.push(r.identity(*l, tolerance));
    }
    let detected = xlnf_max < 1e-10;
    report.meta("max_abs_X_ln_f", xlnf_max);
    report.meta("trivial_warping_detected", detected);
    if let Some(declared) = trivial_hint {
        let mut r = Residuals::new();
        r.push(if declared == detected { 0.0 } else { 1.0 });
        report.push(r.identity("trivial warping detected iff f constant", 0.0));
    }
    report
}

/// Bishop–O'Neill connection identities on a built warped metric.
pub fn verify_lemma31(spec: &WarpedProductSpec, sampler: &mut Sampler, count: usize, tolerance: f64) -> Result<CheckReport> {
    let built = build_warped_metric(spec)?;
    let (n1, n2) = (spec.n1(), spec.n2());
    let first: Vec<usize> = (0..n1).collect();
    let second: Vec<usize> = (n1..n1 + n2).collect();
    let draws: Vec<(Point, [DVector<f64>; 4])> = (0..count)
        .map(|_| {
            let p = sampler.point(&spec.sample_box);
            let v = [sampler.vector(n1), sampler.vector(n1), sampler.vector(n2), sampler.vector(n2)];
            (p, v)
        })
        .collect();
    let rows = draws
        .par_iter()
        .map(|(p, v)| {
            let full = built.metric.sample(p)?;
            let (_, fiber_pt) = spec.split_point(p);
            let fiber = spec.fiber.sample(&fiber_pt)?;
            let f = eval_jet(&spec.warping, p, 1)?;
            let x = block_vector(spec.dim(), &first, &v[0]);
            let xlnf = (x.dot(&DVector::from_vec(f.gradient())) / f.value()).abs();
            Ok((lemma31_residuals(&full, &fiber, &first, &second, &f, v), xlnf))
        })
        .collect::<Result<Vec<_>>>()?;
    let xlnf_max = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let table: Vec<[f64; 5]> = rows.into_iter().map(|r| r.0).collect();
    let mut report = lemma31_report(&table, tolerance, Some(built.trivial), xlnf_max);
    report.meta("warped_metric", spec.name.clone());
    Ok(report)
}

/// `Σ_{i≤n₁} K(e_i ∧ e_j) = Δf/f` for each fiber frame vector `e_j`, with the
/// Laplacian taken on `N₁` with its own metric.
pub fn verify_warped_laplacian(
    spec: &WarpedProductSpec,
    sampler: &mut Sampler,
    count: usize,
    tolerance: f64,
) -> Result<CheckReport> {
    let built = build_warped_metric(spec)?;
    let points = sampler.points(&spec.sample_box, count);
    let n1 = spec.n1();
    let rows = points
        .par_iter()
        .map(|p| {
            let full = built.metric.sample(p)?;
            let curv = full.curvature()?;
            let frame = full.coordinate_frame();
            let (base_pt, _) = spec.split_point(p);
            let base = spec.base.sample(&base_pt)?;
            let f = eval_jet(&spec.warping, &base_pt, 2)?;
            let lap = base.laplacian(&f, &base.coordinate_frame())? / f.value();
            let mut worst: f64 = 0.0;
            for j in n1..spec.dim() {
                let sum: f64 = (0..n1).map(|i| curv.eval(&frame[i], &frame[j], &frame[j], &frame[i])).sum();
                worst = worst.max((sum - lap).abs());
            }
            Ok((worst, lap))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut r = Residuals::new();
    r.extend(rows.iter().map(|x| x.0));
    let mut report = CheckReport::new("warped_laplacian_identity");
    report.push(
        r.identity("sum_i K(e_i ^ e_j) = Laplacian(f)/f", tolerance)
            .with_note("Laplacian on the first factor with its own metric"),
    );
    report.meta("warped_metric", spec.name.clone());
    if let Some((_, lap)) = rows.first() {
        report.meta("first_sample_laplacian_over_f", *lap);
    }
    Ok(report)
}

/// Built-in warped metrics: `exp-line` (`R ×_{e^t} R`), `slant-factor`
/// (`R ×_{e^t} R²`), `product` (`R² × S²`, `f = 1`) and `generic`.
pub fn builtin_warped(name: &str) -> Result<WarpedProductSpec> {
    let sphere = || MetricField::diagonal(vec![ScalarExpr::one(), crate::jet::sin(var(0)).powi(2)]);
    match name {
        "exp-line" => WarpedProductSpec::new(
            name,
            MetricField::euclidean(1),
            MetricField::euclidean(1),
            exp(var(0)),
            SampleBox::new(vec![-1.0, -2.0], vec![1.0, 2.0])?,
        ),
        "slant-factor" => WarpedProductSpec::new(
            name,
            MetricField::euclidean(1),
            MetricField::euclidean(2),
            exp(var(0)),
            SampleBox::new(vec![-1.0, -2.0, -2.0], vec![1.0, 2.0, 2.0])?,
        ),
        "product" => WarpedProductSpec::new(
            name,
            MetricField::euclidean(2),
            sphere(),
            ScalarExpr::one(),
            SampleBox::new(vec![-2.0, -2.0, 0.3, -3.0], vec![2.0, 2.0, 2.8, 3.0])?,
        ),
        "generic" => WarpedProductSpec::new(
            name,
            MetricField::diagonal(vec![ScalarExpr::one(), 1.0 + var(0).powi(2)]),
            sphere(),
            1.0 + var(0).powi(2) + 0.5 * crate::jet::sin(var(1)),
            SampleBox::new(vec![-1.0, -2.0, 0.3, -3.0], vec![1.0, 2.0, 2.8, 3.0])?,
        ),
        other => Err(GeomError::UnknownModel(other.to_string())),
    }
}

pub const BUILTIN_WARPED: [&str; 4] = ["exp-line", "slant-factor", "product", "generic"];

/// Which factor of `M = first ×_f second` is the invariant one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorLayout {
    /// `N_T ×_f N_θ`.
    InvariantFirst,
    /// `N_θ ×_f N_T`.
    SlantFirst,
}

/// A warped-product submanifold candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpedScenario {
    pub name: String,
    pub ambient: AlmostContactStructure,
    pub immersion: Immersion,
    /// Submanifold coordinates of `N_T`.
    pub nt: Vec<usize>,
    /// Submanifold coordinates of `N_θ`.
    pub ntheta: Vec<usize>,
    pub layout: FactorLayout,
    /// Warping in submanifold coordinates.
    pub warping: ScalarExpr,
    pub theta: f64,
    /// Declared `(α, β)`; estimated when absent.
    pub alpha_beta: Option<(f64, f64)>,
    /// Warped only approximately: margins are checked, equality diagnostics are not.
    pub approximate: bool,
}

impl WarpedScenario {
    pub fn first(&self) -> &[usize] {
        match self.layout {
            FactorLayout::InvariantFirst => &self.nt,
            FactorLayout::SlantFirst => &self.ntheta,
        }
    }

    pub fn second(&self) -> &[usize] {
        match self.layout {
            FactorLayout::InvariantFirst => &self.ntheta,
            FactorLayout::SlantFirst => &self.nt,
        }
    }

    pub fn dim(&self) -> usize {
        self.immersion.dim
    }

    pub fn sample(&self, p: &Point) -> Result<ImmersionSample> {
        self.immersion.sample(&self.ambient.metric, p)
    }

    pub fn points(&self, sampler: &mut Sampler, count: usize) -> Vec<Point> {
        sampler.points(&self.immersion.sample_box, count)
    }

    /// Second-factor metric `g_second / f²` as a sample in its own coordinates.
    pub fn fiber_sample(&self, s: &ImmersionSample, f: &Jet) -> Result<MetricSample> {
        let second = self.second();
        let inv_f2 = 1.0 / (f.value() * f.value());
        let block: MetricJet = s.induced_jet.block(second).map(|j| j.scale(inv_f2));
        MetricSample::from_jet(&block, Point::new(second.iter().map(|&i| s.point.coords[i]).collect()))
    }

    fn partition_ok(&self) -> bool {
        let mut all: Vec<usize> = self.nt.iter().chain(&self.ntheta).copied().collect();
        all.sort_unstable();
        all == (0..self.dim()).collect::<Vec<_>>()
    }
}

/// Block-diagonality, `f²`-scaling and `ξ`-tangency residuals. The `ξ` record
/// refers to `N_T`.
pub fn certify_warped(scn: &WarpedScenario, points: &[Point], tolerance: f64) -> Result<CheckReport> {
    let mut report = CheckReport::new("certify_warped");
    report.meta("scenario", scn.name.clone());
    report.meta("approximate", scn.approximate);
    let mut part = Residuals::new();
    part.push(if scn.partition_ok() { 0.0 } else { 1.0 });
    report.push(part.identity("factor indices partition the coordinates", 0.0));
    if !scn.partition_ok() {
        return Ok(report);
    }
    let (first, second) = (scn.first().to_vec(), scn.second().to_vec());
    let mut dep = Residuals::new();
    dep.push(if second.iter().any(|&i| scn.warping.uses_var(i)) { 1.0 } else { 0.0 });
    report.push(dep.identity("f depends on the first factor only", 0.0));

    let rows = points
        .par_iter()
        .map(|p| {
            let s = scn.sample(p)?;
            let st = scn.ambient.sample(&s.image, false)?;
            let f = eval_jet(&scn.warping, p, 1)?;
            let fv = f.value();
            if !(fv > 0.0) {
                return Err(GeomError::NonPositiveWarping(fv));
            }
            let g = &s.induced_jet;
            let mut off: f64 = 0.0;
            for &a in &first {
                for &b in &second {
                    off = off.max(g.get(a, b).value().abs());
                }
            }
            let mut first_dep: f64 = 0.0;
            for &a in &first {
                for &b in &first {
                    for &c in &second {
                        first_dep = first_dep.max(g.get(a, b).partial(&[c]).abs());
                    }
                }
            }
            let mut scaling: f64 = 0.0;
            for &a in &second {
                for &b in &second {
                    let gab = g.get(a, b);
                    for &c in &first {
                        let v = gab.partial(&[c]) - 2.0 * f.partial(&[c]) / fv * gab.value();
                        scaling = scaling.max((v / fv.powi(2)).abs());
                    }
                }
            }
            let (xi, xi_off) = xi_sub(&s, &st, &scn.immersion)?;
            let xi_theta = norm(&s.induced.g, &block_vector(scn.dim(), &scn.ntheta, &restrict_to(&scn.ntheta, &xi)));
            Ok([off, first_dep, scaling, xi_off + xi_theta])
        })
        .collect::<Result<Vec<_>>>()?;
    let labels = [
        "off-block metric energy",
        "first-factor block independent of second-factor coordinates",
        "second-factor block = f^2 x (first-independent metric)",
        "xi tangent to N_T",
    ];
    for (i, l) in labels.iter().enumerate() {
        let mut r = Residuals::new();
        r.extend(rows.iter().map(|row| row[i]));
        report.push(r.identity(*l, tolerance));
    }
    Ok(report)
}

/// `Err(NotWarped)` naming the first failed block condition (the `ξ` record
/// is a routing condition, not a warping one).
pub fn require_warped(report: &CheckReport) -> Result<()> {
    match report.failures().into_iter().find(|r| r.label != "xi tangent to N_T") {
        Some(r) => Err(GeomError::NotWarped(format!("{} (residual {:e})", r.label, r.max_residual))),
        None => Ok(()),
    }
}

pub fn xi_in_nt(report: &CheckReport) -> bool {
    report.record("xi tangent to N_T").is_some_and(|r| r.pass)
}

/// Lemma 3.1 on a scenario, with factor metrics read from the induced metric.
pub fn verify_lemma31_on(scn: &WarpedScenario, sampler: &mut Sampler, count: usize, tolerance: f64) -> Result<CheckReport> {
    let (first, second) = (scn.first().to_vec(), scn.second().to_vec());
    let draws: Vec<(Point, [DVector<f64>; 4])> = (0..count)
        .map(|_| {
            let p = sampler.point(&scn.immersion.sample_box);
            let (a, b) = (first.len(), second.len());
            (p, [sampler.vector(a), sampler.vector(a), sampler.vector(b), sampler.vector(b)])
        })
        .collect();
    let rows = draws
        .par_iter()
        .map(|(p, v)| {
            let s = scn.sample(p)?;
            let f = eval_jet(&scn.warping, p, 1)?;
            let fiber = scn.fiber_sample(&s, &f)?;
            let x = block_vector(scn.dim(), &first, &v[0]);
            let xlnf = (x.dot(&DVector::from_vec(f.gradient())) / f.value()).abs();
            Ok((lemma31_residuals(&s.induced, &fiber, &first, &second, &f, v), xlnf))
        })
        .collect::<Result<Vec<_>>>()?;
    let xlnf_max = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let table: Vec<[f64; 5]> = rows.into_iter().map(|r| r.0).collect();
    let mut report = lemma31_report(&table, tolerance, None, xlnf_max);
    report.meta("scenario", scn.name.clone());
    Ok(report)
}

/// First factor totally geodesic in `M`; second factor totally umbilical
/// with `h^θ(Z, W) = −g(Z, W) grad ln f`.
pub fn verify_corollary31(scn: &WarpedScenario, sampler: &mut Sampler, count: usize, tolerance: f64) -> Result<CheckReport> {
    let (first, second) = (scn.first().to_vec(), scn.second().to_vec());
    let n = scn.dim();
    let draws: Vec<(Point, [DVector<f64>; 4])> = (0..count)
        .map(|_| {
            let p = sampler.point(&scn.immersion.sample_box);
            let (a, b) = (first.len(), second.len());
            (p, [sampler.vector(a), sampler.vector(a), sampler.vector(b), sampler.vector(b)])
        })
        .collect();
    let rows = draws
        .par_iter()
        .map(|(p, v)| {
            let s = scn.sample(p)?;
            let f = eval_jet(&scn.warping, p, 1)?;
            let g = &s.induced.g;
            let x = block_vector(n, &first, &v[0]);
            let y = block_vector(n, &first, &v[1]);
            let z = block_vector(n, &second, &v[2]);
            let w = block_vector(n, &second, &v[3]);
            let nxy = s.induced.connection.contract(&x, &y);
            let r1 = norm(g, &block_vector(n, &second, &restrict_to(&second, &nxy)));
            let grad_ln_f = s.induced.gradient(&f) / f.value();
            let nzw = s.induced.connection.contract(&z, &w);
            let h_theta = block_vector(n, &first, &restrict_to(&first, &nzw));
            let r2 = norm(g, &(h_theta + grad_ln_f * inner(g, &z, &w)));
            Ok([r1, r2])
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = CheckReport::new("corollary_3_1");
    report.meta("scenario", scn.name.clone());
    let labels = ["(i) first factor totally geodesic in M", "(ii) h^theta(Z,W) = -g(Z,W) grad ln f"];
    for (i, l) in labels.iter().enumerate() {
        let mut r = Residuals::new();
        r.extend(rows.iter().map(|row| row[i]));
        report.push(r.identity(*l, tolerance));
    }
    Ok(report)
}

/// `G`-orthonormal frame of the coordinate block `idx` in submanifold components.
pub fn block_frame(s: &ImmersionSample, idx: &[usize]) -> Vec<DVector<f64>> {
    let n = s.dim();
    let basis: Vec<DVector<f64>> =
        idx.iter().map(|&k| DVector::from_fn(n, |i, _| if i == k { 1.0 } else { 0.0 })).collect();
    gram_schmidt(&s.induced.g, &basis, 0.0).0
}

#[cfg(test)]
mod tests {
    use super::*;
    #[test]
    fn exp_line_metric() {
        let spec = builtin_warped("exp-line").unwrap();
        let w = build_warped_metric(&spec).unwrap();
        assert!(!w.trivial);
        let g = w.metric.matrix_at(&[0.5, 1.0]).unwrap();
        assert!((g[(1, 1)] - 1f64.exp()).abs() < 1e-14);
        assert_eq!(g[(0, 0)], 1.0);
        assert_eq!(g[(0, 1)], 0.0);
    }

    #[test]
    fn product_is_trivial() {
        let spec = builtin_warped("product").unwrap();
        assert!(build_warped_metric(&spec).unwrap().trivial);
        let rep = verify_lemma31(&spec, &mut Sampler::new(1), 20, 1e-8).unwrap();
        assert!(rep.pass, "{:?}", rep.failures());
        assert_eq!(rep.metadata["trivial_warping_detected"], serde_json::Value::Bool(true));
    }

    #[test]
    fn lemma31_builtins() {
        for name in BUILTIN_WARPED {
            let spec = builtin_warped(name).unwrap();
            let rep = verify_lemma31(&spec, &mut Sampler::new(2), 30, 1e-8).unwrap();
            assert!(rep.pass, "{name}: {:?}", rep.failures());
        }
    }

    #[test]
    fn exp_line_connection_examples() {
        let spec = builtin_warped("exp-line").unwrap();
        let w = build_warped_metric(&spec).unwrap();
        let t: f64 = 0.3;
        let s = w.metric.sample(&Point::new(vec![t, 0.0])).unwrap();
        let dt = DVector::from_vec(vec![1.0, 0.0]);
        let dx = DVector::from_vec(vec![0.0, 1.0]);
        assert!((s.connection.contract(&dt, &dx) - &dx).amax() < 1e-14);
        let expect = DVector::from_vec(vec![-(2.0 * t).exp(), 0.0]);
        assert!((s.connection.contract(&dx, &dx) - expect).amax() < 1e-14);
    }

    #[test]
    fn laplacian_identity() {
        for name in BUILTIN_WARPED {
            let spec = builtin_warped(name).unwrap();
            let rep = verify_warped_laplacian(&spec, &mut Sampler::new(4), 10, 1e-7).unwrap();
            assert!(rep.pass, "{name}: {:?}", rep.records);
        }
        let spec = builtin_warped("exp-line").unwrap();
        let rep = verify_warped_laplacian(&spec, &mut Sampler::new(4), 1, 1e-7).unwrap();
        assert!((rep.metadata["first_sample_laplacian_over_f"].as_f64().unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn non_positive_warping() {
        let spec = WarpedProductSpec::new(
            "bad",
            MetricField::euclidean(1),
            MetricField::euclidean(1),
            var(0),
            SampleBox::cube(2, 1.0),
        )
        .unwrap();
        assert!(matches!(build_warped_metric(&spec), Err(GeomError::NonPositiveWarping(_))));
        assert!(WarpedProductSpec::new(
            "bad",
            MetricField::euclidean(1),
            MetricField::euclidean(1),
            var(1),
            SampleBox::cube(2, 1.0)
        )
        .is_err());
    }
}
