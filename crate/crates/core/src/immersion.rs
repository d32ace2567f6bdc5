//! Submanifold geometry of an immersion `F: M → M̄` on single charts.
//!
//! Tangent vectors of `M` are carried in submanifold coordinates (`sub`) and
//! pushed forward with the Jacobian when an ambient vector is needed.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;

use crate::almost_contact::{AlmostContactStructure, StructureSample};
use crate::error::{GeomError, Result};
use crate::jet::{eval_jet, eval_jet_with, Jet, Point, ScalarExpr};
use crate::manifold::{gram_residual, gram_schmidt, inner, norm, MetricField, MetricJet, MetricSample};
use crate::report::{CheckReport, Residuals};
use crate::sampling::SampleBox;

/// Smallest admissible singular value of the Jacobian.
pub const RANK_TOL: f64 = 1e-8;
/// Post-projection norm below which a declared frame vector collapses.
pub const COLLAPSE_TOL: f64 = 1e-8;
/// Tangential component above which a vector is not normal.
pub const NORMAL_TOL: f64 = 1e-8;

/// Declared distribution bases, as vector fields in submanifold coordinates.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Splits {
    pub invariant: Vec<Vec<ScalarExpr>>,
    pub slant: Vec<Vec<ScalarExpr>>,
    /// `ξ` in submanifold coordinates; solved from the ambient `ξ` if absent.
    pub xi: Option<Vec<ScalarExpr>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Immersion {
    pub name: String,
    pub dim: usize,
    pub map: Vec<ScalarExpr>,
    pub splits: Option<Splits>,
    pub sample_box: SampleBox,
}

impl Immersion {
    pub fn new(name: impl Into<String>, dim: usize, map: Vec<ScalarExpr>, sample_box: SampleBox) -> Result<Self> {
        if map.iter().any(|e| e.arity() > dim) {
            return Err(GeomError::DimensionMismatch(format!(
                "immersion components reference coordinates beyond x{}",
                dim.max(1) - 1
            )));
        }
        if sample_box.dim() != dim {
            return Err(GeomError::DimensionMismatch("sampling box does not match the submanifold".into()));
        }
        if map.len() < dim {
            return Err(GeomError::DimensionMismatch("ambient dimension below submanifold dimension".into()));
        }
        Ok(Immersion { name: name.into(), dim, map, splits: None, sample_box })
    }

    pub fn with_splits(mut self, splits: Splits) -> Result<Self> {
        let vectors = splits.invariant.iter().chain(&splits.slant).chain(splits.xi.iter());
        for v in vectors {
            if v.len() != self.dim || v.iter().any(|e| e.arity() > self.dim) {
                return Err(GeomError::DimensionMismatch("split basis vector does not match the submanifold".into()));
            }
        }
        self.splits = Some(splits);
        Ok(self)
    }

    pub fn ambient_dim(&self) -> usize {
        self.map.len()
    }

    pub fn image(&self, p: &Point) -> Result<Point> {
        Ok(Point::new(self.map.iter().map(|e| e.eval(&p.coords)).collect::<Result<Vec<_>>>()?))
    }

    pub fn sample(&self, ambient: &MetricField, p: &Point) -> Result<ImmersionSample> {
        ImmersionSample::new(self, ambient, p)
    }
}

pub(crate) fn eval_vector(v: &[ScalarExpr], p: &Point) -> Result<DVector<f64>> {
    Ok(DVector::from_vec(v.iter().map(|e| e.eval(&p.coords)).collect::<Result<Vec<_>>>()?))
}

/// Everything pointwise about `F` at one submanifold point.
#[derive(Debug, Clone)]
pub struct ImmersionSample {
    pub point: Point,
    pub image: Point,
    /// Order-3 jets of the map components.
    pub map_jets: Vec<Jet>,
    /// `jac[(i, a)] = ∂_a F^i`.
    pub jac: DMatrix<f64>,
    /// `second[i][(a, b)] = ∂_a ∂_b F^i`.
    pub second: Vec<DMatrix<f64>>,
    pub ambient: MetricSample,
    /// Order-2 jets of `G ∘ F`.
    pub ambient_jet: MetricJet,
    pub induced_jet: MetricJet,
    pub induced: MetricSample,
    /// `G`-orthonormal basis of the normal space.
    pub normal: Vec<DVector<f64>>,
    /// `h(∂_a, ∂_b)` as ambient vectors, indexed `a * n + b`.
    h_coord: Vec<DVector<f64>>,
}

impl ImmersionSample {
    pub fn new(imm: &Immersion, ambient: &MetricField, p: &Point) -> Result<Self> {
        let n = imm.dim;
        let big = imm.ambient_dim();
        if ambient.dim() != big {
            return Err(GeomError::DimensionMismatch(format!(
                "immersion has {big} components but the ambient chart has dimension {}",
                ambient.dim()
            )));
        }
        p.expect_dim(n)?;
        let map_jets = imm.map.iter().map(|e| eval_jet(e, p, 3)).collect::<Result<Vec<_>>>()?;
        let image = Point::new(map_jets.iter().map(Jet::value).collect());
        let jac = DMatrix::from_fn(big, n, |i, a| map_jets[i].partial(&[a]));
        let sv = jac.clone().svd(false, false).singular_values;
        let smin = if n == 0 { f64::INFINITY } else { sv.min() };
        if !(smin > RANK_TOL) {
            return Err(GeomError::RankDeficient(smin));
        }
        let second = map_jets
            .iter()
            .map(|j| DMatrix::from_fn(n, n, |a, b| j.partial(&[a, b])))
            .collect();

        let ambient_sample = MetricSample::from_jet(&ambient.jet_at(&image, 2)?, image.clone())?;
        let (ambient_jet, induced_jet) = induced_metric_jet(ambient, &map_jets)?;
        let induced = MetricSample::from_jet(&induced_jet, p.clone())?;
        let normal = normal_frame(&ambient_sample.g, &jac)?;

        let mut s = ImmersionSample {
            point: p.clone(),
            image,
            map_jets,
            jac,
            second,
            ambient: ambient_sample,
            ambient_jet,
            induced_jet,
            induced,
            normal,
            h_coord: Vec::new(),
        };
        let mut h = Vec::with_capacity(n * n);
        for a in 0..n {
            for b in 0..n {
                let accel = DVector::from_fn(big, |i, _| s.second[i][(a, b)]);
                let v = accel + s.ambient.connection.contract(&s.jac.column(a).into(), &s.jac.column(b).into());
                h.push(s.normal_part(&v));
            }
        }
        s.h_coord = h;
        Ok(s)
    }

    pub fn dim(&self) -> usize {
        self.jac.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.jac.nrows()
    }

    pub fn codim(&self) -> usize {
        self.ambient_dim() - self.dim()
    }

    pub fn g_ambient(&self) -> &DMatrix<f64> {
        &self.ambient.g
    }

    pub fn push(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.jac * v
    }

    /// Submanifold components of the tangential part of an ambient vector.
    pub fn tangent_coords(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.induced.ginv * (self.jac.transpose() * (&self.ambient.g * v))
    }

    pub fn tangent_part(&self, v: &DVector<f64>) -> DVector<f64> {
        self.push(&self.tangent_coords(v))
    }

    pub fn normal_part(&self, v: &DVector<f64>) -> DVector<f64> {
        v - self.tangent_part(v)
    }

    /// `h(X, Y)` for submanifold-coordinate vectors.
    pub fn h(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        let n = self.dim();
        let mut out = DVector::zeros(self.ambient_dim());
        for a in 0..n {
            if x[a] == 0.0 {
                continue;
            }
            for b in 0..n {
                let c = x[a] * y[b];
                if c != 0.0 {
                    out += &self.h_coord[a * n + b] * c;
                }
            }
        }
        out
    }

    pub fn inner_ambient(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        inner(&self.ambient.g, u, v)
    }

    pub fn inner_sub(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        inner(&self.induced.g, u, v)
    }

    /// Shape operator `A_N` in submanifold coordinates, from the Weingarten
    /// formula applied to the extension `Ñ = N − J g⁻¹ Jᵀ G N`.
    pub fn shape_operator(&self, normal: &DVector<f64>) -> Result<DMatrix<f64>> {
        let n = self.dim();
        let big = self.ambient_dim();
        let gn = &self.ambient.g * normal;
        let tangential = (self.jac.transpose() * &gn).amax() / norm(&self.ambient.g, normal).max(1.0);
        if tangential > NORMAL_TOL {
            return Err(GeomError::NotNormal(tangential));
        }
        let ginv = &self.induced.ginv;
        let a0 = ginv * (self.jac.transpose() * &gn);
        let mut out = DMatrix::zeros(n, n);
        for c in 0..n {
            let dj = DMatrix::from_fn(big, n, |i, a| self.second[i][(a, c)]);
            let mut dg_big = DMatrix::zeros(big, big);
            for k in 0..big {
                if self.jac[(k, c)] != 0.0 {
                    dg_big += &self.ambient.dg[k] * self.jac[(k, c)];
                }
            }
            let dginv = -(ginv * &self.induced.dg[c] * ginv);
            let da = &dginv * (self.jac.transpose() * &gn)
                + ginv * (dj.transpose() * &gn)
                + ginv * (self.jac.transpose() * (&dg_big * normal));
            let d_ext = -(&dj * &a0) - &self.jac * da;
            let ext = normal - &self.jac * &a0;
            let cov = d_ext + self.ambient.connection.contract(&self.jac.column(c).into(), &ext);
            out.set_column(c, &(-self.tangent_coords(&cov)));
        }
        Ok(out)
    }

    /// `∇̄_X W` for a field `W` along `F` given by jets in submanifold
    /// coordinates, with `X` in submanifold coordinates.
    pub fn ambient_derivative(&self, x: &DVector<f64>, field: &[Jet]) -> DVector<f64> {
        let n = self.dim();
        let w = DVector::from_iterator(field.len(), field.iter().map(Jet::value));
        let dw = DVector::from_iterator(
            field.len(),
            field.iter().map(|j| (0..n).map(|a| x[a] * j.partial(&[a])).sum::<f64>()),
        );
        dw + self.ambient.connection.contract(&self.push(x), &w)
    }

    /// Jets, in submanifold coordinates, of ambient expressions composed with `F`.
    pub fn compose(&self, exprs: &[ScalarExpr], order: usize) -> Result<Vec<Jet>> {
        let inputs: Vec<Jet> = self.map_jets.iter().map(|j| j.truncate(order)).collect();
        exprs.iter().map(|e| eval_jet_with(e, &inputs)).collect()
    }

    /// Submanifold components, as first-order jets, of the tangential part of
    /// an ambient field along `F`: solves `(JᵀGJ) a = JᵀG W`.
    pub fn tangent_field(&self, w: &[Jet]) -> Result<Vec<Jet>> {
        let n = self.dim();
        let big = self.ambient_dim();
        let jac: Vec<Vec<Jet>> = self
            .map_jets
            .iter()
            .map(|f| (0..n).map(|a| f.derivative(a).truncate(1)).collect())
            .collect();
        let w: Vec<Jet> = w.iter().map(|j| j.truncate(1)).collect();
        let gw: Vec<Jet> = (0..big)
            .map(|i| (0..big).map(|k| &self.ambient_jet.get(i, k).truncate(1) * &w[k]).sum())
            .collect();
        let rhs: Vec<Jet> = (0..n).map(|a| (0..big).map(|i| &jac[i][a] * &gw[i]).sum()).collect();
        let lhs: Vec<Vec<Jet>> =
            (0..n).map(|a| (0..n).map(|b| self.induced_jet.get(a, b).truncate(1)).collect()).collect();
        solve_jets(lhs, rhs)
    }

    /// A constant-coefficient submanifold field as first-order jets.
    pub fn constant_field(&self, v: &DVector<f64>) -> Vec<Jet> {
        let t = crate::jet::table(self.dim(), 1);
        v.iter().map(|&c| Jet::constant(t.clone(), c)).collect()
    }

    /// Jets of the pushforward `J·V` of a submanifold field `V`.
    pub fn push_field(&self, v: &[Jet]) -> Vec<Jet> {
        let n = self.dim();
        let order = v.first().map_or(1, Jet::order);
        self.map_jets
            .iter()
            .map(|f| {
                (0..n)
                    .map(|a| &f.derivative(a).truncate(order) * &v[a])
                    .sum::<Jet>()
            })
            .collect()
    }
}

fn induced_metric_jet(ambient: &MetricField, map_jets: &[Jet]) -> Result<(MetricJet, MetricJet)> {
    let n = map_jets.first().map_or(0, Jet::dim);
    let order2: Vec<Jet> = map_jets.iter().map(|j| j.truncate(2)).collect();
    let big_g = ambient.jet_along(&order2)?;
    let jac: Vec<Vec<Jet>> = map_jets.iter().map(|f| (0..n).map(|a| f.derivative(a)).collect()).collect();
    let big = map_jets.len();
    let nonzero = |j: &Jet| !(j.is_constant() && j.value() == 0.0);
    let induced = MetricJet::from_fn(n, |a, b| {
        let mut acc: Option<Jet> = None;
        for i in 0..big {
            if !nonzero(&jac[i][a]) {
                continue;
            }
            for k in 0..big {
                if !nonzero(&jac[k][b]) || !nonzero(big_g.get(i, k)) {
                    continue;
                }
                let term = &(&jac[i][a] * &jac[k][b]) * big_g.get(i, k);
                acc = Some(match acc {
                    Some(s) => &s + &term,
                    None => term,
                });
            }
        }
        acc.unwrap_or_else(|| Jet::constant(crate::jet::table(n, 2), 0.0))
    });
    Ok((big_g, induced))
}

/// Solve `A x = b` over jets by elimination with partial pivoting on values.
pub fn solve_jets(mut a: Vec<Vec<Jet>>, mut b: Vec<Jet>) -> Result<Vec<Jet>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].value().abs().total_cmp(&a[j][col].value().abs()))
            .expect("non-empty pivot range");
        if a[pivot][col].value().abs() < 1e-14 {
            return Err(GeomError::SingularMetric("jet linear system is singular".into()));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        let inv = a[col][col].recip()?;
        for row in (col + 1)..n {
            let factor = &a[row][col] * &inv;
            for k in col..n {
                let t = &factor * &a[col][k];
                a[row][k] = &a[row][k] - &t;
            }
            let t = &factor * &b[col];
            b[row] = &b[row] - &t;
        }
    }
    let mut x: Vec<Jet> = b.clone();
    for row in (0..n).rev() {
        let mut acc = b[row].clone();
        for k in (row + 1)..n {
            acc = &acc - &(&a[row][k] * &x[k]);
        }
        x[row] = &acc * &a[row][row].recip()?;
    }
    Ok(x)
}

/// Canonical `G`-orthonormal normal frame: the normal space comes from the
/// eigen-decomposition of `W Wᵀ` with `W = Lᵀ J` (`G = L Lᵀ`); the basis is
/// Gram–Schmidt of the projected coordinate vectors, signs fixed so the
/// first nonzero component is positive.
fn normal_frame(g: &DMatrix<f64>, jac: &DMatrix<f64>) -> Result<Vec<DVector<f64>>> {
    let big = jac.nrows();
    let n = jac.ncols();
    let r = big - n;
    if r == 0 {
        return Ok(Vec::new());
    }
    let chol = Cholesky::new(g.clone())
        .ok_or_else(|| GeomError::NormalComplementFailure("ambient metric has no Cholesky factor".into()))?;
    let l = chol.l();
    let w = l.transpose() * jac;
    let eig = SymmetricEigen::new(&w * w.transpose());
    let mut order: Vec<usize> = (0..big).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let top = eig.eigenvalues.amax().max(1e-300);
    if eig.eigenvalues[order[r]] < 1e-14 * top || eig.eigenvalues[order[r - 1]] > 1e-10 * top {
        return Err(GeomError::NormalComplementFailure(format!(
            "no spectral gap between normal and tangent eigenvalues ({:e}, {:e})",
            eig.eigenvalues[order[r - 1]],
            eig.eigenvalues[order[r]]
        )));
    }
    let lt = l.transpose();
    let lt_lu = lt.clone().lu();
    let basis: Vec<DVector<f64>> = order[..r]
        .iter()
        .map(|&k| lt_lu.solve(&eig.eigenvectors.column(k).into_owned()).expect("triangular factor is invertible"))
        .collect();
    // orthogonal projector onto the normal space: Σ v vᵀ G
    let project = |x: &DVector<f64>| -> DVector<f64> {
        let mut out = DVector::zeros(big);
        for v in &basis {
            out += v * inner(g, v, x);
        }
        out
    };
    let candidates: Vec<DVector<f64>> = (0..big)
        .map(|k| project(&DVector::from_fn(big, |i, _| if i == k { 1.0 } else { 0.0 })))
        .collect();
    let (mut frame, _) = gram_schmidt(g, &candidates, 1e-6);
    if frame.len() != r {
        return Err(GeomError::NormalComplementFailure(format!("expected {r} normal vectors, found {}", frame.len())));
    }
    for v in &mut frame {
        fix_sign(v);
    }
    Ok(frame)
}

pub(crate) fn fix_sign(v: &mut DVector<f64>) {
    if let Some(first) = v.iter().copied().find(|c| c.abs() > 1e-12) {
        if first < 0.0 {
            *v *= -1.0;
        }
    }
}

/// Tangent frame in submanifold and ambient components, plus a normal frame.
#[derive(Debug, Clone)]
pub struct FrameSample {
    pub point: Point,
    pub tangent_sub: Vec<DVector<f64>>,
    pub tangent: Vec<DVector<f64>>,
    pub normal: Vec<DVector<f64>>,
    /// Label of the declared vector each tangent frame vector came from.
    pub provenance: Vec<String>,
    /// Declared vectors dropped as dependent.
    pub collapsed: Vec<String>,
}

impl FrameSample {
    /// Gram residual of tangent and normal vectors together.
    pub fn gram_residual(&self, ambient_g: &DMatrix<f64>) -> f64 {
        let all: Vec<DVector<f64>> = self.tangent.iter().chain(&self.normal).cloned().collect();
        gram_residual(ambient_g, &all)
    }
}

/// Gram–Schmidt over labelled candidate tangent vectors (submanifold
/// components), in order, completed by the sample's normal frame.
pub fn frame_from_candidates(s: &ImmersionSample, candidates: &[(String, DVector<f64>)]) -> Result<FrameSample> {
    let vectors: Vec<DVector<f64>> = candidates.iter().map(|(_, v)| v.clone()).collect();
    let (tangent_sub, dropped) = gram_schmidt(&s.induced.g, &vectors, COLLAPSE_TOL);
    if tangent_sub.len() != s.dim() {
        return Err(GeomError::RankDeficient(0.0));
    }
    let provenance = candidates
        .iter()
        .enumerate()
        .filter(|(i, _)| !dropped.contains(i))
        .map(|(_, (l, _))| l.clone())
        .collect();
    let collapsed = dropped.iter().map(|&i| candidates[i].0.clone()).collect();
    let tangent = tangent_sub.iter().map(|v| s.push(v)).collect();
    Ok(FrameSample { point: s.point.clone(), tangent_sub, tangent, normal: s.normal.clone(), provenance, collapsed })
}

/// Coordinate vectors `∂_k` in the order `order` (all coordinates by default),
/// followed by any remaining coordinates.
pub fn coordinate_candidates(n: usize, order: Option<&[usize]>) -> Vec<(String, DVector<f64>)> {
    let mut idx: Vec<usize> = order.map(<[usize]>::to_vec).unwrap_or_default();
    for k in 0..n {
        if !idx.contains(&k) {
            idx.push(k);
        }
    }
    idx.into_iter()
        .filter(|&k| k < n)
        .map(|k| (format!("coord[{k}]"), DVector::from_fn(n, |i, _| if i == k { 1.0 } else { 0.0 })))
        .collect()
}

/// Submanifold components of `ξ` together with its normal component norm.
pub fn xi_sub(s: &ImmersionSample, st: &StructureSample, imm: &Immersion) -> Result<(DVector<f64>, f64)> {
    let declared = imm.splits.as_ref().and_then(|sp| sp.xi.as_ref());
    let coords = match declared {
        Some(v) => eval_vector(v, &s.point)?,
        None => s.tangent_coords(&st.xi),
    };
    let off = norm(&st.metric.g, &(&st.xi - s.push(&coords)));
    Ok((coords, off))
}

/// Frames in the declared order: `D` basis, `φ(D)` partners, `ξ`, `D_θ`
/// basis, `P(D_θ)` partners; coordinate order when no splits are declared.
pub fn orthonormal_frames(
    imm: &Immersion,
    ambient: &AlmostContactStructure,
    p: &Point,
    order_hint: Option<&[usize]>,
) -> Result<FrameSample> {
    let s = imm.sample(&ambient.metric, p)?;
    let candidates = match &imm.splits {
        Some(sp) => {
            let st = ambient.sample(&s.image, false)?;
            declared_candidates(&s, &st, imm, sp)?
        }
        None => coordinate_candidates(imm.dim, order_hint),
    };
    frame_from_candidates(&s, &candidates)
}

fn declared_candidates(
    s: &ImmersionSample,
    st: &StructureSample,
    imm: &Immersion,
    sp: &Splits,
) -> Result<Vec<(String, DVector<f64>)>> {
    let mut out = Vec::new();
    let d: Vec<DVector<f64>> = sp.invariant.iter().map(|v| eval_vector(v, &s.point)).collect::<Result<_>>()?;
    for (i, v) in d.iter().enumerate() {
        out.push((format!("D[{i}]"), v.clone()));
    }
    for (i, v) in d.iter().enumerate() {
        out.push((format!("phi D[{i}]"), s.tangent_coords(&(&st.phi * s.push(v)))));
    }
    out.push(("xi".to_string(), xi_sub(s, st, imm)?.0));
    let slant: Vec<DVector<f64>> = sp.slant.iter().map(|v| eval_vector(v, &s.point)).collect::<Result<_>>()?;
    for (i, v) in slant.iter().enumerate() {
        out.push((format!("D_theta[{i}]"), v.clone()));
    }
    for (i, v) in slant.iter().enumerate() {
        out.push((format!("P D_theta[{i}]"), s.tangent_coords(&(&st.phi * s.push(v)))));
    }
    Ok(out)
}

pub fn induced_metric(imm: &Immersion, ambient_g: &MetricField, p: &Point) -> Result<DMatrix<f64>> {
    Ok(imm.sample(ambient_g, p)?.induced.g)
}

/// Coefficients `h_ij^r = g(h(e_i, e_j), e_r)` and mean curvatures.
#[derive(Debug, Clone)]
pub struct SecondFundamentalFormSample {
    pub point: Point,
    pub n: usize,
    pub r: usize,
    /// Stored `[i][j][r]`.
    pub coeffs: Vec<f64>,
    /// Mean curvature vector (ambient components).
    pub mean: DVector<f64>,
    /// Partial mean curvatures over frame indices `..split` and `split..`.
    pub partial_mean: (DVector<f64>, DVector<f64>),
}

impl SecondFundamentalFormSample {
    #[inline]
    pub fn get(&self, i: usize, j: usize, r: usize) -> f64 {
        self.coeffs[(i * self.n + j) * self.r + r]
    }

    /// `‖h‖² = Σ (h_ij^r)²`.
    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    pub fn symmetry_residual(&self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                for r in 0..self.r {
                    m = m.max((self.get(i, j, r) - self.get(j, i, r)).abs());
                }
            }
        }
        m
    }
}

/// `h` in an orthonormal frame. `split` divides frame indices for the partial
/// mean curvatures (default: all in the first part).
pub fn second_fundamental_form(s: &ImmersionSample, frame: &FrameSample, split: Option<usize>) -> SecondFundamentalFormSample {
    let n = frame.tangent_sub.len();
    let r = frame.normal.len();
    let mut coeffs = vec![0.0; n * n * r];
    let mut hv = vec![DVector::zeros(s.ambient_dim()); n * n];
    for i in 0..n {
        for j in i..n {
            let v = s.h(&frame.tangent_sub[i], &frame.tangent_sub[j]);
            for (k, e) in frame.normal.iter().enumerate() {
                let c = s.inner_ambient(&v, e);
                coeffs[(i * n + j) * r + k] = c;
                coeffs[(j * n + i) * r + k] = c;
            }
            hv[j * n + i] = v.clone();
            hv[i * n + j] = v;
        }
    }
    let split = split.unwrap_or(n).min(n);
    let trace = |range: std::ops::Range<usize>| -> DVector<f64> {
        let len = range.len();
        let mut t = DVector::zeros(s.ambient_dim());
        for i in range {
            t += &hv[i * n + i];
        }
        if len > 0 {
            t / len as f64
        } else {
            t
        }
    };
    SecondFundamentalFormSample {
        point: s.point.clone(),
        n,
        r,
        coeffs,
        mean: trace(0..n),
        partial_mean: (trace(0..split), trace(split..n)),
    }
}

/// `A_N` in submanifold coordinates.
pub fn shape_operator(imm: &Immersion, ambient_g: &MetricField, p: &Point, normal: &DVector<f64>) -> Result<DMatrix<f64>> {
    imm.sample(ambient_g, p)?.shape_operator(normal)
}

/// Max over frame pairs and normals of `|g(A_N X, Y) − g(h(X, Y), N)|`.
pub fn weingarten_duality_residual(s: &ImmersionSample, frame: &FrameSample) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for nv in &frame.normal {
        let a = s.shape_operator(nv)?;
        for x in &frame.tangent_sub {
            let ax = &a * x;
            for y in &frame.tangent_sub {
                let lhs = s.inner_sub(&ax, y);
                let rhs = s.inner_ambient(&s.h(x, y), nv);
                worst = worst.max((lhs - rhs).abs());
            }
        }
    }
    Ok(worst)
}

/// Tangential (`P`) and normal (`F`) parts of `φ` on a frame.
#[derive(Debug, Clone)]
pub struct PFSplit {
    pub point: Point,
    /// `p[(a, b)] = g(φ e_b, e_a)`.
    pub p: DMatrix<f64>,
    /// `f[(r, b)] = g(φ e_b, n_r)`.
    pub f: DMatrix<f64>,
    pub reconstruction_residual: f64,
}

pub fn pf_decompose(st: &StructureSample, frame: &FrameSample) -> PFSplit {
    let n = frame.tangent.len();
    let r = frame.normal.len();
    let g = &st.metric.g;
    let mut p = DMatrix::zeros(n, n);
    let mut f = DMatrix::zeros(r, n);
    let mut worst: f64 = 0.0;
    for b in 0..n {
        let phi_e = &st.phi * &frame.tangent[b];
        let mut rebuilt = DVector::zeros(phi_e.len());
        for a in 0..n {
            p[(a, b)] = inner(g, &phi_e, &frame.tangent[a]);
            rebuilt += &frame.tangent[a] * p[(a, b)];
        }
        for k in 0..r {
            f[(k, b)] = inner(g, &phi_e, &frame.normal[k]);
            rebuilt += &frame.normal[k] * f[(k, b)];
        }
        worst = worst.max(norm(g, &(phi_e - rebuilt)));
    }
    PFSplit { point: frame.point.clone(), p, f, reconstruction_residual: worst }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlantClass {
    Invariant,
    AntiInvariant,
    ProperSlant,
    NotSlant,
}

impl SlantClass {
    pub fn name(self) -> &'static str {
        match self {
            SlantClass::Invariant => "invariant",
            SlantClass::AntiInvariant => "anti-invariant",
            SlantClass::ProperSlant => "proper slant",
            SlantClass::NotSlant => "not slant",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlantReport {
    pub lambda: f64,
    pub theta: f64,
    /// Max `‖P²Z + λ(Z − η(Z)ξ)‖` over unit `Z`.
    pub residual: f64,
    pub classification: SlantClass,
    pub samples: usize,
}

/// Residual above which a distribution is not slant.
pub const SLANT_RESIDUAL_TOL: f64 = 1e-7;
const SLANT_EDGE: f64 = 1e-9;

/// Per-point quantities for the slant fit: for each unit `Z` of the
/// distribution, `P²Z` and `Z − η(Z)ξ` in submanifold coordinates; `P` is `φ`
/// followed by projection onto the distribution.
fn slant_terms(
    s: &ImmersionSample,
    st: &StructureSample,
    basis: &[DVector<f64>],
) -> Result<Vec<(DVector<f64>, DVector<f64>)>> {
    let (frame, _) = gram_schmidt(&s.induced.g, basis, COLLAPSE_TOL);
    if frame.is_empty() {
        return Err(GeomError::EmptyDistribution);
    }
    let project = |v: &DVector<f64>| -> DVector<f64> {
        let t = s.tangent_coords(v);
        let mut out = DVector::zeros(t.len());
        for e in &frame {
            out += e * s.inner_sub(e, &t);
        }
        out
    };
    let xi_t = s.tangent_coords(&st.xi);
    Ok(frame
        .iter()
        .map(|z| {
            let pz = project(&(&st.phi * s.push(z)));
            let ppz = project(&(&st.phi * s.push(&pz)));
            let w = z - &xi_t * st.eta_of(&s.push(z));
            (ppz, w)
        })
        .collect())
}

/// Least-squares fit of `λ` in `P²Z + λ(Z − η(Z)ξ) = 0` over the points.
pub fn slant_report(
    ambient: &AlmostContactStructure,
    imm: &Immersion,
    basis: &[Vec<ScalarExpr>],
    points: &[Point],
) -> Result<SlantReport> {
    if basis.is_empty() {
        return Err(GeomError::EmptyDistribution);
    }
    let per_point = points
        .par_iter()
        .map(|p| {
            let s = imm.sample(&ambient.metric, p)?;
            let st = ambient.sample(&s.image, false)?;
            let b: Vec<DVector<f64>> = basis.iter().map(|v| eval_vector(v, p)).collect::<Result<_>>()?;
            slant_terms(&s, &st, &b).map(|t| (s, t))
        })
        .collect::<Result<Vec<_>>>()?;
    let (mut num, mut den) = (0.0, 0.0);
    for (s, terms) in &per_point {
        for (ppz, w) in terms {
            num += s.inner_sub(ppz, w);
            den += s.inner_sub(w, w);
        }
    }
    if den <= 0.0 {
        return Err(GeomError::EmptyDistribution);
    }
    let lambda = -num / den;
    let residual = per_point
        .iter()
        .flat_map(|(s, terms)| terms.iter().map(move |(ppz, w)| norm(&s.induced.g, &(ppz + w * lambda))))
        .fold(0.0, f64::max);
    let classification = if residual >= SLANT_RESIDUAL_TOL {
        SlantClass::NotSlant
    } else if lambda > 1.0 - SLANT_EDGE {
        SlantClass::Invariant
    } else if lambda < SLANT_EDGE {
        SlantClass::AntiInvariant
    } else {
        SlantClass::ProperSlant
    };
    let theta = lambda.clamp(0.0, 1.0).sqrt().acos();
    Ok(SlantReport { lambda, theta, residual, classification, samples: points.len() })
}

/// Orthonormal basis of `span(vs)`, projecting `v` onto it.
fn project_onto(g: &DMatrix<f64>, frame: &[DVector<f64>], v: &DVector<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(v.len());
    for e in frame {
        out += e * inner(g, e, v);
    }
    out
}

/// Normal split `T⊥M = F D_θ ⊕ ν` at one point: orthonormal bases of both.
pub fn normal_split(
    s: &ImmersionSample,
    st: &StructureSample,
    slant_basis: &[DVector<f64>],
) -> (Vec<DVector<f64>>, Vec<DVector<f64>>) {
    let g = &s.ambient.g;
    let f_images: Vec<DVector<f64>> = slant_basis.iter().map(|z| s.normal_part(&(&st.phi * s.push(z)))).collect();
    let (fd, _) = gram_schmidt(g, &f_images, COLLAPSE_TOL);
    let rest: Vec<DVector<f64>> = s.normal.iter().map(|e| e - project_onto(g, &fd, e)).collect();
    let (mut nu, _) = gram_schmidt(g, &rest, 1e-6);
    for v in &mut nu {
        fix_sign(v);
    }
    (fd, nu)
}

/// Semi-slant conditions at points: dimension count, orthogonality, `ξ`
/// tangency, `φD ⊆ D`, slant `D_θ` with `θ ≠ π/2`, and `ν` `φ`-invariant.
pub fn semi_slant_check(
    ambient: &AlmostContactStructure,
    imm: &Immersion,
    points: &[Point],
    tolerance: f64,
) -> Result<CheckReport> {
    let sp = imm.splits.as_ref().ok_or(GeomError::MissingSplit("distribution splits"))?;
    let mut report = CheckReport::new("semi_slant_check");
    let mut dims = Residuals::new();
    let expected = sp.invariant.len() + sp.slant.len() + 1;
    dims.push(expected as f64 - imm.dim as f64);
    dims.push((sp.invariant.len() % 2) as f64);
    report.push(dims.identity("dimension count: dim D + dim D_theta + 1 = n, dim D even", 0.0));

    let rows = points
        .par_iter()
        .map(|p| {
            let s = imm.sample(&ambient.metric, p)?;
            let st = ambient.sample(&s.image, false)?;
            let d: Vec<DVector<f64>> = sp.invariant.iter().map(|v| eval_vector(v, p)).collect::<Result<_>>()?;
            let slant: Vec<DVector<f64>> = sp.slant.iter().map(|v| eval_vector(v, p)).collect::<Result<_>>()?;
            let (xi, xi_off) = xi_sub(&s, &st, imm)?;
            let gsub = &s.induced.g;
            let cosine = |u: &DVector<f64>, v: &DVector<f64>| {
                inner(gsub, u, v).abs() / (norm(gsub, u) * norm(gsub, v)).max(1e-300)
            };
            let mut orth: f64 = 0.0;
            for u in &d {
                for v in slant.iter().chain(std::iter::once(&xi)) {
                    orth = orth.max(cosine(u, v));
                }
            }
            for v in &slant {
                orth = orth.max(cosine(v, &xi));
            }
            // rank of D ⊕ D_θ ⊕ ⟨ξ⟩
            let all: Vec<DVector<f64>> = d.iter().chain(&slant).cloned().chain(std::iter::once(xi.clone())).collect();
            let (span, _) = gram_schmidt(gsub, &all, COLLAPSE_TOL);
            let rank_gap = (imm.dim - span.len()) as f64;
            let (d_frame, _) = gram_schmidt(gsub, &d, COLLAPSE_TOL);
            let mut inv: f64 = 0.0;
            for u in &d_frame {
                let phi_u = &st.phi * s.push(u);
                let inside = s.push(&project_onto(gsub, &d_frame, &s.tangent_coords(&phi_u)));
                inv = inv.max(norm(&s.ambient.g, &(phi_u - inside)));
            }
            let (_, nu) = normal_split(&s, &st, &slant);
            let mut nu_inv: f64 = 0.0;
            for z in &nu {
                let phi_z = &st.phi * z;
                nu_inv = nu_inv.max(norm(&s.ambient.g, &(&phi_z - project_onto(&s.ambient.g, &nu, &phi_z))));
            }
            Ok([orth, rank_gap, xi_off, inv, nu_inv, nu.len() as f64])
        })
        .collect::<Result<Vec<_>>>()?;
    let col = |i: usize| {
        let mut r = Residuals::new();
        r.extend(rows.iter().map(|row| row[i]));
        r
    };
    report.push(col(0).identity("orthogonality of D, D_theta and xi", tolerance));
    report.push(col(1).identity("TM = D + D_theta + <xi> (rank)", 0.0));
    report.push(col(2).identity("xi tangent to M", tolerance));
    report.push(col(3).identity("phi D in D (invariance)", tolerance));

    let slant = slant_report(ambient, imm, &sp.slant, points)?;
    let mut rs = Residuals::new();
    rs.push(slant.residual);
    report.push(rs.identity("D_theta slant (constancy of lambda)", SLANT_RESIDUAL_TOL));
    let mut perp = Residuals::new();
    perp.push(if slant.lambda < SLANT_EDGE { 1.0 } else { 0.0 });
    report.push(perp.identity("theta != pi/2", 0.0));
    let nu_dim = rows.first().map_or(0.0, |r| r[5]);
    let mut nu_rec = col(4).identity("nu phi-invariant", tolerance);
    if nu_dim == 0.0 {
        nu_rec = nu_rec.with_note("nu is empty");
    }
    report.push(nu_rec);
    report.meta("lambda", slant.lambda);
    report.meta("theta", slant.theta);
    report.meta("slant_class", slant.classification.name());
    report.meta("nu_dim", nu_dim);
    Ok(report)
}

/// `Err(SplitMismatch)` naming the first failed semi-slant condition.
pub fn require_semi_slant(report: &CheckReport) -> Result<()> {
    match report.failures().first() {
        Some(r) => Err(GeomError::SplitMismatch(format!("{} (residual {:e})", r.label, r.max_residual))),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::almost_contact::builtin_ambient;
    use crate::jet::{constant, cos, sin, var};
    use std::f64::consts::{FRAC_PI_3, FRAC_PI_4};

    fn sphere() -> Immersion {
        let (th, ph) = (var(0), var(1));
        let map = vec![sin(th.clone()) * cos(ph.clone()), sin(th.clone()) * sin(ph), cos(th)];
        Immersion::new("sphere", 2, map, SampleBox::new(vec![0.3, -3.0], vec![2.8, 3.0]).unwrap()).unwrap()
    }

    fn plane() -> Immersion {
        Immersion::new("plane", 2, vec![var(0), var(1), ScalarExpr::zero()], SampleBox::cube(2, 2.0)).unwrap()
    }

    #[test]
    fn flat_identity_and_plane() {
        let g = MetricField::euclidean(3);
        let id = Immersion::new("id", 3, vec![var(0), var(1), var(2)], SampleBox::cube(3, 1.0)).unwrap();
        let m = induced_metric(&id, &g, &Point::new(vec![0.1, 0.2, 0.3])).unwrap();
        assert_eq!(m, DMatrix::identity(3, 3));
        let s = plane().sample(&g, &Point::new(vec![0.5, -0.5])).unwrap();
        let frame = frame_from_candidates(&s, &coordinate_candidates(2, None)).unwrap();
        assert_eq!(frame.normal, vec![DVector::from_vec(vec![0.0, 0.0, 1.0])]);
        let h = second_fundamental_form(&s, &frame, None);
        assert_eq!(h.norm_sq(), 0.0);
        assert_eq!(s.shape_operator(&frame.normal[0]).unwrap().amax(), 0.0);
    }

    #[test]
    fn sphere_geometry() {
        let g = MetricField::euclidean(3);
        let th: f64 = 0.9;
        let p = Point::new(vec![th, 0.4]);
        let s = sphere().sample(&g, &p).unwrap();
        assert!((s.induced.g[(1, 1)] - th.sin().powi(2)).abs() < 1e-14);
        assert!((s.induced.g[(0, 0)] - 1.0).abs() < 1e-14);
        let frame = frame_from_candidates(&s, &coordinate_candidates(2, None)).unwrap();
        let outward = DVector::from_vec(s.image.coords.clone());
        let sign = s.inner_ambient(&frame.normal[0], &outward).signum();
        let h = second_fundamental_form(&s, &frame, None);
        for i in 0..2 {
            for j in 0..2 {
                let expect = if i == j { -1.0 } else { 0.0 };
                assert!((sign * h.get(i, j, 0) - expect).abs() < 1e-12);
            }
        }
        assert!((norm(&s.ambient.g, &h.mean) - 1.0).abs() < 1e-12);
        let a = s.shape_operator(&outward).unwrap();
        assert!((a - DMatrix::<f64>::identity(2, 2) * -1.0).amax() < 1e-12);
        assert!(weingarten_duality_residual(&s, &frame).unwrap() < 1e-12);
        assert!(matches!(s.shape_operator(&frame.tangent[0]), Err(GeomError::NotNormal(_))));
    }

    #[test]
    fn graph_duality() {
        let (x, y) = (var(0), var(1));
        let q = 0.3 * x.clone() * x.clone() - 0.7 * x.clone() * y.clone() + 0.2 * y.clone() * y.clone();
        let imm = Immersion::new("graph", 2, vec![x, y, q], SampleBox::cube(2, 1.0)).unwrap();
        let g = MetricField::euclidean(3);
        let s = imm.sample(&g, &Point::new(vec![0.4, -0.8])).unwrap();
        let frame = frame_from_candidates(&s, &coordinate_candidates(2, None)).unwrap();
        assert!(frame.gram_residual(&s.ambient.g) < 1e-12);
        assert!(weingarten_duality_residual(&s, &frame).unwrap() < 1e-10);
        assert!(second_fundamental_form(&s, &frame, None).symmetry_residual() == 0.0);
    }

    #[test]
    fn rank_deficiency() {
        let imm = Immersion::new("fold", 2, vec![var(0) * var(0), var(1), ScalarExpr::zero()], SampleBox::cube(2, 1.0)).unwrap();
        let g = MetricField::euclidean(3);
        assert!(matches!(imm.sample(&g, &Point::new(vec![0.0, 0.3])), Err(GeomError::RankDeficient(_))));
    }

    fn slant_plane(theta: f64) -> Immersion {
        // (s1, s2) into the (x2, y2, y3) directions of a 7-dimensional chart
        let mut map = vec![ScalarExpr::zero(); 7];
        map[3] = var(0);
        map[4] = theta.cos() * var(1);
        map[6] = theta.sin() * var(1);
        Immersion::new("slant", 2, map, SampleBox::cube(2, 2.0)).unwrap()
    }

    fn unit_basis(n: usize) -> Vec<Vec<ScalarExpr>> {
        (0..n)
            .map(|i| (0..n).map(|k| if k == i { ScalarExpr::one() } else { ScalarExpr::zero() }).collect())
            .collect()
    }

    #[test]
    fn slant_angles() {
        let amb = builtin_ambient("cosymplectic", 3).unwrap();
        let pts: Vec<Point> = (0..5).map(|k| Point::new(vec![0.1 * k as f64, -0.2])).collect();
        for theta in [std::f64::consts::FRAC_PI_6, FRAC_PI_4, FRAC_PI_3] {
            let rep = slant_report(&amb, &slant_plane(theta), &unit_basis(2), &pts).unwrap();
            assert_eq!(rep.classification, SlantClass::ProperSlant);
            assert!((rep.theta - theta).abs() < 1e-9);
            assert!(rep.residual < 1e-9);
            let scaled = vec![vec![constant(3.0), ScalarExpr::zero()], vec![ScalarExpr::zero(), constant(0.2)]];
            let rep2 = slant_report(&amb, &slant_plane(theta), &scaled, &pts).unwrap();
            assert!((rep2.lambda - rep.lambda).abs() < 1e-9);
        }
        let rep = slant_report(&amb, &slant_plane(FRAC_PI_3), &unit_basis(2), &pts).unwrap();
        assert!((rep.lambda - 0.25).abs() < 1e-12);
    }

    #[test]
    fn invariant_and_anti_invariant() {
        let amb = builtin_ambient("cosymplectic", 2).unwrap();
        let pts = vec![Point::new(vec![0.3, 0.1])];
        let mut map = vec![ScalarExpr::zero(); 5];
        map[1] = var(0);
        map[2] = var(1);
        let inv = Immersion::new("inv", 2, map, SampleBox::cube(2, 1.0)).unwrap();
        let rep = slant_report(&amb, &inv, &unit_basis(2), &pts).unwrap();
        assert_eq!(rep.classification, SlantClass::Invariant);
        assert_eq!(rep.lambda, 1.0);
        let mut map = vec![ScalarExpr::zero(); 5];
        map[1] = var(0);
        map[3] = var(1);
        let anti = Immersion::new("anti", 2, map, SampleBox::cube(2, 1.0)).unwrap();
        let rep = slant_report(&amb, &anti, &unit_basis(2), &pts).unwrap();
        assert_eq!(rep.classification, SlantClass::AntiInvariant);
        assert_eq!(rep.lambda, 0.0);
        assert!(matches!(slant_report(&amb, &anti, &[], &pts), Err(GeomError::EmptyDistribution)));
    }

    #[test]
    fn varying_angle_is_not_slant() {
        // identity of the (x1, y1, x2, y2) block; the distribution turns with x0
        let amb = builtin_ambient("cosymplectic", 2).unwrap();
        let mut map = vec![ScalarExpr::zero(); 5];
        for k in 0..4 {
            map[k + 1] = var(k);
        }
        let imm = Immersion::new("block", 4, map, SampleBox::cube(4, 1.0)).unwrap();
        let z = ScalarExpr::zero;
        let basis = vec![
            vec![ScalarExpr::one(), z(), z(), z()],
            vec![z(), cos(0.5 * var(0) + 0.3), sin(0.5 * var(0) + 0.3), z()],
        ];
        let pts: Vec<Point> = (0..6).map(|k| Point::new(vec![-1.0 + 0.4 * k as f64, 0.0, 0.0, 0.0])).collect();
        let rep = slant_report(&amb, &imm, &basis, &pts).unwrap();
        assert_eq!(rep.classification, SlantClass::NotSlant);
        assert!(rep.residual > 1e-3);
    }

    #[test]
    fn pf_reconstruction_and_slant_norms() {
        let amb = builtin_ambient("cosymplectic", 3).unwrap();
        let theta = FRAC_PI_3;
        let imm = slant_plane(theta);
        let p = Point::new(vec![0.2, 0.7]);
        let s = imm.sample(&amb.metric, &p).unwrap();
        let st = amb.sample(&s.image, false).unwrap();
        let frame = frame_from_candidates(&s, &coordinate_candidates(2, None)).unwrap();
        let pf = pf_decompose(&st, &frame);
        assert!(pf.reconstruction_residual < 1e-12);
        let pe = pf.p.column(0).norm();
        let fe = pf.f.column(0).norm();
        assert!((pe - theta.cos()).abs() < 1e-12);
        assert!((fe - theta.sin()).abs() < 1e-12);
    }
}
