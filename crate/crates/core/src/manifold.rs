//! Riemannian geometry of a single chart.
//!
//! Curvature convention: `R(X,Y)Z = ∇_X∇_Y Z − ∇_Y∇_X Z − ∇_[X,Y] Z` and
//! `R(X,Y,Z,W) = g(R(X,Y)Z, W)`, so that `K(u,v) = R(u,v,v,u) / |u∧v|²` is
//! `+1` on the round unit sphere and the Gauss equation reads
//! `R = R̄ + g(h(X,W),h(Y,Z)) − g(h(X,Z),h(Y,W))`.
//!
//! The Laplacian follows `Δψ = Σ_i ((∇_{e_i}e_i)ψ − e_i e_i ψ)`, i.e. minus the
//! trace of the Hessian: `Δ(x²) = −2` on the line.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{GeomError, Result};
use crate::jet::{eval_jet, eval_jet_with, Jet, Point, ScalarExpr};

/// Smallest admissible metric eigenvalue.
pub const EIGEN_FLOOR: f64 = 1e-10;
/// Largest admissible metric condition number.
pub const MAX_CONDITION: f64 = 1e12;
/// Gram residual accepted for "orthonormal" frames.
pub const FRAME_TOL: f64 = 1e-10;

#[inline]
fn upper_index(n: usize, i: usize, j: usize) -> usize {
    let (a, b) = if i <= j { (i, j) } else { (j, i) };
    a * n - a * (a + 1) / 2 + b
}

/// Symmetric metric tensor with expression-valued components; only `i ≤ j`
/// is stored.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricField {
    dim: usize,
    upper: Vec<ScalarExpr>,
}

impl MetricField {
    /// Build from a component function; only `f(i, j)` with `i ≤ j` is called.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> ScalarExpr) -> Self {
        let mut upper = Vec::with_capacity(dim * (dim + 1) / 2);
        for i in 0..dim {
            for j in i..dim {
                upper.push(f(i, j));
            }
        }
        MetricField { dim, upper }
    }

    pub fn diagonal(entries: Vec<ScalarExpr>) -> Self {
        let dim = entries.len();
        MetricField::from_fn(dim, |i, j| if i == j { entries[i].clone() } else { ScalarExpr::zero() })
    }

    pub fn euclidean(dim: usize) -> Self {
        MetricField::diagonal(vec![ScalarExpr::one(); dim])
    }

    /// Build from a full matrix, which must be structurally symmetric.
    pub fn from_matrix(rows: Vec<Vec<ScalarExpr>>) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(GeomError::DimensionMismatch("metric matrix is not square".into()));
        }
        for i in 0..dim {
            for j in 0..i {
                if rows[i][j] != rows[j][i] {
                    return Err(GeomError::Validation(format!(
                        "metric components ({i},{j}) and ({j},{i}) differ"
                    )));
                }
            }
        }
        Ok(MetricField::from_fn(dim, |i, j| rows[i][j].clone()))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> &ScalarExpr {
        &self.upper[upper_index(self.dim, i, j)]
    }

    /// Value of the metric matrix at `x`.
    pub fn matrix_at(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let n = self.dim;
        let mut g = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = self.get(i, j).eval(x)?;
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        Ok(g)
    }

    /// Taylor jets of every component at `p`.
    pub fn jet_at(&self, p: &Point, order: usize) -> Result<MetricJet> {
        p.expect_dim(self.dim)?;
        let upper = self
            .upper
            .iter()
            .map(|e| eval_jet(e, p, order))
            .collect::<Result<Vec<_>>>()?;
        Ok(MetricJet { dim: self.dim, upper })
    }

    /// Jets of `g(F(u))` given the jets of the map components `F`.
    pub fn jet_along(&self, map: &[Jet]) -> Result<MetricJet> {
        if map.len() != self.dim {
            return Err(GeomError::DimensionMismatch(format!(
                "metric of dimension {} composed with a map of {} components",
                self.dim,
                map.len()
            )));
        }
        let upper = self
            .upper
            .iter()
            .map(|e| eval_jet_with(e, map))
            .collect::<Result<Vec<_>>>()?;
        Ok(MetricJet { dim: self.dim, upper })
    }

    /// Full local geometry (connection and curvature) at `p`.
    pub fn sample(&self, p: &Point) -> Result<MetricSample> {
        MetricSample::from_jet(&self.jet_at(p, 2)?, p.clone())
    }
}

/// Metric components as Taylor jets at one point.
#[derive(Debug, Clone)]
pub struct MetricJet {
    dim: usize,
    upper: Vec<Jet>,
}

impl MetricJet {
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Jet) -> Self {
        let mut upper = Vec::with_capacity(dim * (dim + 1) / 2);
        for i in 0..dim {
            for j in i..dim {
                upper.push(f(i, j));
            }
        }
        MetricJet { dim, upper }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> &Jet {
        &self.upper[upper_index(self.dim, i, j)]
    }

    /// Block on `indices`, with jets restricted to the same coordinates.
    pub fn block(&self, indices: &[usize]) -> MetricJet {
        MetricJet::from_fn(indices.len(), |a, b| self.get(indices[a], indices[b]).restrict(indices))
    }

    pub fn map(&self, f: impl Fn(&Jet) -> Jet) -> MetricJet {
        MetricJet { dim: self.dim, upper: self.upper.iter().map(f).collect() }
    }
}

/// Check conditioning of a symmetric metric matrix and return its inverse.
pub fn invert_metric(g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = g.nrows();
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let eig = SymmetricEigen::new(g.clone());
    let min = eig.eigenvalues.min();
    let max = eig.eigenvalues.max();
    if !(min > EIGEN_FLOOR) {
        return Err(GeomError::SingularMetric(format!("smallest eigenvalue {min:e}")));
    }
    if max / min > MAX_CONDITION {
        return Err(GeomError::SingularMetric(format!("condition number {:e}", max / min)));
    }
    g.clone()
        .lu()
        .try_inverse()
        .ok_or_else(|| GeomError::SingularMetric("LU factorisation failed".into()))
}

/// Christoffel symbols `Γ^k_ij` at one point, stored `[k][i][j]`.
#[derive(Debug, Clone)]
pub struct ConnectionSample {
    pub point: Point,
    pub dim: usize,
    pub gamma: Vec<f64>,
}

impl ConnectionSample {
    #[inline]
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.gamma[(k * self.dim + i) * self.dim + j]
    }

    /// `Γ(X, Y)^k = Γ^k_ij X^i Y^j`.
    pub fn contract(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        let n = self.dim;
        DVector::from_fn(n, |k, _| {
            let mut s = 0.0;
            for i in 0..n {
                if x[i] == 0.0 {
                    continue;
                }
                for j in 0..n {
                    s += self.get(k, i, j) * x[i] * y[j];
                }
            }
            s
        })
    }

    pub fn symmetry_residual(&self) -> f64 {
        let n = self.dim;
        let mut r: f64 = 0.0;
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    r = r.max((self.get(k, i, j) - self.get(k, j, i)).abs());
                }
            }
        }
        r
    }
}

/// Riemann tensor `R_ijkl = R(∂_i,∂_j,∂_k,∂_l)` at one point.
#[derive(Debug, Clone)]
pub struct CurvatureSample {
    pub point: Point,
    pub dim: usize,
    pub metric: DMatrix<f64>,
    pub riemann: Vec<f64>,
    /// Sectional curvature of every coordinate plane `(i, j)`, `i < j`.
    pub sectional: Vec<((usize, usize), f64)>,
    /// Scalar curvature `Σ_{i<j} K(e_i∧e_j)`.
    pub scalar: f64,
}

impl CurvatureSample {
    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        let n = self.dim;
        self.riemann[((i * n + j) * n + k) * n + l]
    }

    /// `R(x, y, z, w)` for coordinate vectors.
    pub fn eval(&self, x: &DVector<f64>, y: &DVector<f64>, z: &DVector<f64>, w: &DVector<f64>) -> f64 {
        let n = self.dim;
        let mut s = 0.0;
        for i in 0..n {
            if x[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                let xy = x[i] * y[j];
                if xy == 0.0 {
                    continue;
                }
                for k in 0..n {
                    let xyz = xy * z[k];
                    if xyz == 0.0 {
                        continue;
                    }
                    for l in 0..n {
                        s += xyz * w[l] * self.get(i, j, k, l);
                    }
                }
            }
        }
        s
    }

    /// Components `R(f_a, f_b, f_c, f_d)` in the given frame, stored `[a][b][c][d]`.
    pub fn in_frame(&self, frame: &[DVector<f64>]) -> Vec<f64> {
        let n = self.dim;
        let m = frame.len();
        // contract one slot at a time
        let mut t = self.riemann.clone();
        let mut dims = [n, n, n, n];
        for slot in 0..4 {
            let mut nd = dims;
            nd[slot] = m;
            let mut out = vec![0.0; nd.iter().product()];
            for a in 0..nd[0] {
                for b in 0..nd[1] {
                    for c in 0..nd[2] {
                        for d in 0..nd[3] {
                            let idx = [a, b, c, d];
                            let mut s = 0.0;
                            for q in 0..n {
                                let coef = frame[idx[slot]][q];
                                if coef == 0.0 {
                                    continue;
                                }
                                let mut src = idx;
                                src[slot] = q;
                                s += coef
                                    * t[((src[0] * dims[1] + src[1]) * dims[2] + src[2]) * dims[3] + src[3]];
                            }
                            out[((a * nd[1] + b) * nd[2] + c) * nd[3] + d] = s;
                        }
                    }
                }
            }
            t = out;
            dims = nd;
        }
        t
    }

    /// Max violation of the algebraic curvature symmetries: antisymmetry in
    /// each pair, pair symmetry and the first Bianchi identity.
    pub fn symmetry_residuals(&self) -> CurvatureSymmetry {
        let n = self.dim;
        let mut out = CurvatureSymmetry::default();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let r = self.get(i, j, k, l);
                        out.antisymmetry = out
                            .antisymmetry
                            .max((r + self.get(j, i, k, l)).abs())
                            .max((r + self.get(i, j, l, k)).abs());
                        out.pair_symmetry = out.pair_symmetry.max((r - self.get(k, l, i, j)).abs());
                        out.bianchi = out
                            .bianchi
                            .max((r + self.get(j, k, i, l) + self.get(k, i, j, l)).abs());
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CurvatureSymmetry {
    pub antisymmetry: f64,
    pub pair_symmetry: f64,
    pub bianchi: f64,
}

impl CurvatureSymmetry {
    pub fn max(&self) -> f64 {
        self.antisymmetry.max(self.pair_symmetry).max(self.bianchi)
    }
}

/// Metric, inverse, derivatives, connection and curvature at one point.
#[derive(Debug, Clone)]
pub struct MetricSample {
    pub point: Point,
    pub g: DMatrix<f64>,
    pub ginv: DMatrix<f64>,
    /// `dg[k] = ∂_k g`.
    pub dg: Vec<DMatrix<f64>>,
    pub connection: ConnectionSample,
    /// `None` when the metric jet has order < 2.
    pub curvature: Option<CurvatureSample>,
}

impl MetricSample {
    pub fn from_jet(jet: &MetricJet, point: Point) -> Result<Self> {
        let n = jet.dim();
        let order = if n == 0 { 2 } else { jet.get(0, 0).order() };
        let g = DMatrix::from_fn(n, n, |i, j| jet.get(i, j).value());
        let ginv = invert_metric(&g)?;
        let dg: Vec<DMatrix<f64>> =
            (0..n).map(|k| DMatrix::from_fn(n, n, |i, j| jet.get(i, j).partial(&[k]))).collect();

        // first kind: Γ_lij = ½(∂_i g_jl + ∂_j g_il − ∂_l g_ij)
        let idx3 = |a: usize, b: usize, c: usize| (a * n + b) * n + c;
        let mut first = vec![0.0; n * n * n];
        for l in 0..n {
            for i in 0..n {
                for j in 0..n {
                    first[idx3(l, i, j)] = 0.5 * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]);
                }
            }
        }
        let mut gamma = vec![0.0; n * n * n];
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    gamma[idx3(k, i, j)] = (0..n).map(|l| ginv[(k, l)] * first[idx3(l, i, j)]).sum();
                }
            }
        }
        let connection = ConnectionSample { point: point.clone(), dim: n, gamma };

        let curvature = if order >= 2 {
            Some(curvature_from(jet, &g, &ginv, &dg, &first, &connection, point.clone()))
        } else {
            None
        };
        Ok(MetricSample { point, g, ginv, dg, connection, curvature })
    }

    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    pub fn inner(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        inner(&self.g, u, v)
    }

    pub fn curvature(&self) -> Result<&CurvatureSample> {
        self.curvature
            .as_ref()
            .ok_or_else(|| GeomError::Validation("curvature requires a second-order metric jet".into()))
    }

    /// `∂_k g_ij − Γ^l_ki g_lj − Γ^l_kj g_il`, maximised over indices.
    pub fn compatibility_residual(&self) -> f64 {
        let n = self.dim();
        let c = &self.connection;
        let mut r: f64 = 0.0;
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut v = self.dg[k][(i, j)];
                    for l in 0..n {
                        v -= c.get(l, k, i) * self.g[(l, j)] + c.get(l, k, j) * self.g[(i, l)];
                    }
                    r = r.max(v.abs());
                }
            }
        }
        r
    }

    /// Coordinate components of `grad ψ` from the first-order jet of ψ.
    pub fn gradient(&self, psi: &Jet) -> DVector<f64> {
        let d = DVector::from_vec(psi.gradient());
        &self.ginv * d
    }

    /// `Hess ψ(∂_a, ∂_b) = ∂_a∂_b ψ − Γ^k_ab ∂_k ψ`.
    pub fn hessian(&self, psi: &Jet) -> DMatrix<f64> {
        let n = self.dim();
        let grad = psi.gradient();
        DMatrix::from_fn(n, n, |a, b| {
            psi.partial(&[a, b]) - (0..n).map(|k| self.connection.get(k, a, b) * grad[k]).sum::<f64>()
        })
    }

    /// `Δψ = −Σ_i Hess ψ(e_i, e_i)` over an orthonormal frame.
    pub fn laplacian(&self, psi: &Jet, frame: &[DVector<f64>]) -> Result<f64> {
        check_orthonormal(&self.g, frame, true)?;
        let hess = self.hessian(psi);
        Ok(-frame.iter().map(|e| (e.transpose() * &hess * e)[(0, 0)]).sum::<f64>())
    }

    /// Gram–Schmidt of the coordinate basis.
    pub fn coordinate_frame(&self) -> Vec<DVector<f64>> {
        let basis: Vec<DVector<f64>> = (0..self.dim())
            .map(|i| DVector::from_fn(self.dim(), |k, _| if k == i { 1.0 } else { 0.0 }))
            .collect();
        gram_schmidt(&self.g, &basis, 0.0).0
    }
}

fn curvature_from(
    jet: &MetricJet,
    g: &DMatrix<f64>,
    ginv: &DMatrix<f64>,
    dg: &[DMatrix<f64>],
    first: &[f64],
    conn: &ConnectionSample,
    point: Point,
) -> CurvatureSample {
    let n = g.nrows();
    let idx3 = |a: usize, b: usize, c: usize| (a * n + b) * n + c;
    let idx4 = |a: usize, b: usize, c: usize, d: usize| ((a * n + b) * n + c) * n + d;
    // ∂_m g^{kl} = −g^{ka} ∂_m g_ab g^{bl}
    let dginv: Vec<DMatrix<f64>> = dg.iter().map(|d| -(ginv * d * ginv)).collect();
    // ∂_m Γ^k_ij, stored [m][k][i][j]
    let mut dgamma = vec![0.0; n * n * n * n];
    for m in 0..n {
        for l in 0..n {
            for i in 0..n {
                for j in i..n {
                    let d_first = 0.5
                        * (jet.get(j, l).partial(&[m, i]) + jet.get(i, l).partial(&[m, j])
                            - jet.get(i, j).partial(&[m, l]));
                    let f = first[idx3(l, i, j)];
                    for k in 0..n {
                        let v = dginv[m][(k, l)] * f + ginv[(k, l)] * d_first;
                        dgamma[idx4(m, k, i, j)] += v;
                        if i != j {
                            dgamma[idx4(m, k, j, i)] += v;
                        }
                    }
                }
            }
        }
    }
    // R^a_{bij} = ∂_i Γ^a_jb − ∂_j Γ^a_ib + Γ^a_ip Γ^p_jb − Γ^a_jp Γ^p_ib
    let mut up = vec![0.0; n * n * n * n];
    for a in 0..n {
        for b in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut v = dgamma[idx4(i, a, j, b)] - dgamma[idx4(j, a, i, b)];
                    for p in 0..n {
                        v += conn.get(a, i, p) * conn.get(p, j, b) - conn.get(a, j, p) * conn.get(p, i, b);
                    }
                    up[idx4(a, b, i, j)] = v;
                }
            }
        }
    }
    // R_ijkl = g_la R^a_{kij}
    let mut riemann = vec![0.0; n * n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    riemann[idx4(i, j, k, l)] = (0..n).map(|a| g[(l, a)] * up[idx4(a, k, i, j)]).sum();
                }
            }
        }
    }
    let mut sample = CurvatureSample { point, dim: n, metric: g.clone(), riemann, sectional: Vec::new(), scalar: 0.0 };
    for i in 0..n {
        for j in (i + 1)..n {
            let den = g[(i, i)] * g[(j, j)] - g[(i, j)] * g[(i, j)];
            sample.sectional.push(((i, j), sample.get(i, j, j, i) / den));
        }
    }
    let basis: Vec<DVector<f64>> =
        (0..n).map(|i| DVector::from_fn(n, |k, _| if k == i { 1.0 } else { 0.0 })).collect();
    let frame = gram_schmidt(g, &basis, 0.0).0;
    sample.scalar = pair_sum(&sample, &frame);
    sample
}

fn pair_sum(curv: &CurvatureSample, frame: &[DVector<f64>]) -> f64 {
    let mut tau = 0.0;
    for i in 0..frame.len() {
        for j in (i + 1)..frame.len() {
            tau += curv.eval(&frame[i], &frame[j], &frame[j], &frame[i]);
        }
    }
    tau
}

pub fn inner(g: &DMatrix<f64>, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
    (u.transpose() * g * v)[(0, 0)]
}

pub fn norm(g: &DMatrix<f64>, u: &DVector<f64>) -> f64 {
    inner(g, u, u).max(0.0).sqrt()
}

/// `max |g(e_i, e_j) − δ_ij|`.
pub fn gram_residual(g: &DMatrix<f64>, frame: &[DVector<f64>]) -> f64 {
    let mut r: f64 = 0.0;
    for i in 0..frame.len() {
        for j in i..frame.len() {
            let target = if i == j { 1.0 } else { 0.0 };
            r = r.max((inner(g, &frame[i], &frame[j]) - target).abs());
        }
    }
    r
}

/// Fails unless `frame` is orthonormal (and, if `complete`, a basis).
pub fn check_orthonormal(g: &DMatrix<f64>, frame: &[DVector<f64>], complete: bool) -> Result<()> {
    if complete && frame.len() != g.nrows() {
        return Err(GeomError::NonOrthonormalFrame(f64::INFINITY));
    }
    if frame.len() > g.nrows() || frame.iter().any(|e| e.len() != g.nrows()) {
        return Err(GeomError::DimensionMismatch("frame vectors do not match the chart".into()));
    }
    let r = gram_residual(g, frame);
    if r > FRAME_TOL {
        Err(GeomError::NonOrthonormalFrame(r))
    } else {
        Ok(())
    }
}

/// Modified Gram–Schmidt in the `g`-inner product. Vectors whose residual
/// norm falls to `collapse_tol` or below are dropped; their input indices are
/// returned alongside the frame.
pub fn gram_schmidt(
    g: &DMatrix<f64>,
    vectors: &[DVector<f64>],
    collapse_tol: f64,
) -> (Vec<DVector<f64>>, Vec<usize>) {
    let mut frame: Vec<DVector<f64>> = Vec::new();
    let mut collapsed = Vec::new();
    for (idx, v) in vectors.iter().enumerate() {
        let mut w = v.clone();
        for _ in 0..2 {
            for e in &frame {
                let c = inner(g, e, &w);
                w -= e * c;
            }
        }
        let nrm = norm(g, &w);
        if nrm <= collapse_tol || nrm == 0.0 {
            collapsed.push(idx);
        } else {
            frame.push(w / nrm);
        }
    }
    (frame, collapsed)
}

pub fn christoffel(g: &MetricField, p: &Point) -> Result<ConnectionSample> {
    MetricSample::from_jet(&g.jet_at(p, 1)?, p.clone()).map(|s| s.connection)
}

pub fn riemann(g: &MetricField, p: &Point) -> Result<CurvatureSample> {
    let s = g.sample(p)?;
    Ok(s.curvature.expect("order-2 sample carries curvature"))
}

/// `K(u, v) = R(u,v,v,u) / (|u|²|v|² − g(u,v)²)`.
pub fn sectional_curvature(curv: &CurvatureSample, u: &DVector<f64>, v: &DVector<f64>) -> Result<f64> {
    let g = &curv.metric;
    let den = inner(g, u, u) * inner(g, v, v) - inner(g, u, v).powi(2);
    if den < 1e-12 {
        return Err(GeomError::DegeneratePlane(den));
    }
    Ok(curv.eval(u, v, v, u) / den)
}

/// `τ = Σ_{i<j} K(e_i∧e_j)` over an orthonormal basis.
pub fn scalar_curvature(curv: &CurvatureSample, frame: &[DVector<f64>]) -> Result<f64> {
    check_orthonormal(&curv.metric, frame, true)?;
    Ok(pair_sum(curv, frame))
}

/// `τ(Π_k)` for the plane section spanned by an orthonormal subframe.
pub fn partial_scalar_curvature(curv: &CurvatureSample, subframe: &[DVector<f64>]) -> Result<f64> {
    check_orthonormal(&curv.metric, subframe, false)?;
    Ok(pair_sum(curv, subframe))
}

pub fn gradient(g: &MetricField, psi: &ScalarExpr, p: &Point) -> Result<DVector<f64>> {
    let s = MetricSample::from_jet(&g.jet_at(p, 1)?, p.clone())?;
    Ok(s.gradient(&eval_jet(psi, p, 1)?))
}

pub fn laplacian(g: &MetricField, psi: &ScalarExpr, p: &Point, frame: &[DVector<f64>]) -> Result<f64> {
    let s = MetricSample::from_jet(&g.jet_at(p, 1)?, p.clone())?;
    s.laplacian(&eval_jet(psi, p, 2)?, frame)
}
