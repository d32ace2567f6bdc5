//! Truncated multivariate Taylor arithmetic.
//!
//! A [`Jet`] stores the Taylor coefficients `∂^m f(p) / m!` for every
//! multi-index `m` of total degree at most the jet order, in a dense table
//! shared between all jets of the same `(dim, order)`.

use std::collections::HashMap;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use super::expr::{normalize, powi_exact, Point, ScalarExpr, UnaryFn, MAX_DIM};
use crate::error::{GeomError, Result};

/// Highest supported jet order.
pub const MAX_ORDER: usize = 3;
pub const DEFAULT_ORDER: usize = 3;

/// Monomial layout for one `(dim, order)` pair, graded by total degree.
///
/// Monomials of degree `≤ k` form a prefix of the table, so truncation is a
/// slice and lower-order tables index-match higher-order ones.
#[derive(Debug)]
pub struct MonomialTable {
    dim: usize,
    order: usize,
    exponents: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
    /// `products[a]` lists `(b, c)` with `x^a x^b = x^c` inside the truncation.
    products: Vec<Vec<(u32, u32)>>,
}

impl MonomialTable {
    fn build(dim: usize, order: usize) -> Self {
        let mut exponents: Vec<Vec<u8>> = Vec::new();
        for degree in 0..=order {
            let mut current = vec![0u8; dim];
            gen_degree(&mut exponents, &mut current, 0, degree);
        }
        let index: HashMap<Vec<u8>, usize> =
            exponents.iter().enumerate().map(|(i, e)| (e.clone(), i)).collect();
        let mut products = vec![Vec::new(); exponents.len()];
        for (a, ea) in exponents.iter().enumerate() {
            let da: usize = ea.iter().map(|&x| x as usize).sum();
            for (b, eb) in exponents.iter().enumerate() {
                let db: usize = eb.iter().map(|&x| x as usize).sum();
                if da + db > order {
                    continue;
                }
                let sum: Vec<u8> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
                products[a].push((b as u32, index[&sum] as u32));
            }
        }
        MonomialTable { dim, order, exponents, index, products }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    /// Number of monomials of degree `≤ k`.
    fn prefix_len(&self, k: usize) -> usize {
        self.exponents
            .iter()
            .take_while(|e| e.iter().map(|&x| x as usize).sum::<usize>() <= k)
            .count()
    }

    pub fn exponents(&self, i: usize) -> &[u8] {
        &self.exponents[i]
    }

    pub fn index_of(&self, exps: &[u8]) -> Option<usize> {
        self.index.get(exps).copied()
    }
}

// Emits all exponent vectors of the given degree, lexicographically descending
// in the leading variable.
fn gen_degree(out: &mut Vec<Vec<u8>>, current: &mut [u8], var: usize, remaining: usize) {
    if var + 1 == current.len() || current.is_empty() {
        if let Some(last) = current.len().checked_sub(1) {
            current[last] = remaining as u8;
            out.push(current.to_vec());
            current[last] = 0;
        } else if remaining == 0 {
            out.push(Vec::new());
        }
        return;
    }
    for k in (0..=remaining).rev() {
        current[var] = k as u8;
        gen_degree(out, current, var + 1, remaining - k);
    }
    current[var] = 0;
}

/// Shared table for `(dim, order)`.
pub fn table(dim: usize, order: usize) -> Arc<MonomialTable> {
    static TABLES: OnceLock<Mutex<HashMap<(usize, usize), Arc<MonomialTable>>>> = OnceLock::new();
    let cache = TABLES.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    guard
        .entry((dim, order))
        .or_insert_with(|| Arc::new(MonomialTable::build(dim, order)))
        .clone()
}

#[derive(Debug, Clone)]
pub struct Jet {
    table: Arc<MonomialTable>,
    coeffs: Vec<f64>,
}

impl PartialEq for Jet {
    fn eq(&self, other: &Self) -> bool {
        self.dim() == other.dim() && self.order() == other.order() && self.coeffs == other.coeffs
    }
}

fn factorial(m: &[u8]) -> f64 {
    m.iter()
        .map(|&k| (1..=k as u32).product::<u32>() as f64)
        .product()
}

impl Jet {
    pub fn constant(table: Arc<MonomialTable>, c: f64) -> Self {
        let mut coeffs = vec![0.0; table.len()];
        coeffs[0] = c;
        Jet { table, coeffs }
    }

    /// The jet of coordinate `i` at value `x`.
    pub fn variable(table: Arc<MonomialTable>, i: usize, x: f64) -> Self {
        let mut j = Jet::constant(table, x);
        if j.table.order >= 1 {
            let mut e = vec![0u8; j.table.dim];
            e[i] = 1;
            let k = j.table.index_of(&e).expect("degree-one monomial present");
            j.coeffs[k] = 1.0;
        }
        j
    }

    /// Jets of all coordinates at `p`.
    pub fn variables(p: &[f64], order: usize) -> Vec<Jet> {
        let t = table(p.len(), order);
        p.iter().enumerate().map(|(i, &x)| Jet::variable(t.clone(), i, x)).collect()
    }

    /// Build from a raw coefficient vector laid out as in `table`.
    pub fn from_coeffs(table: Arc<MonomialTable>, coeffs: Vec<f64>) -> Self {
        assert_eq!(table.len(), coeffs.len(), "coefficient count does not match table");
        Jet { table, coeffs }
    }

    pub fn dim(&self) -> usize {
        self.table.dim
    }

    pub fn order(&self) -> usize {
        self.table.order
    }

    pub fn table(&self) -> &Arc<MonomialTable> {
        &self.table
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// Taylor coefficient of the monomial with the given exponents.
    pub fn coeff(&self, exps: &[u8]) -> f64 {
        self.table.index_of(exps).map_or(0.0, |i| self.coeffs[i])
    }

    /// Partial derivative `∂_{vars[0]} ∂_{vars[1]} ... f` (order-insensitive).
    pub fn partial(&self, vars: &[usize]) -> f64 {
        let mut e = vec![0u8; self.dim()];
        for &v in vars {
            e[v] += 1;
        }
        self.coeff(&e) * factorial(&e)
    }

    pub fn gradient(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.partial(&[i])).collect()
    }

    pub fn hessian(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        (0..d).map(|i| (0..d).map(|j| self.partial(&[i, j])).collect()).collect()
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs[1..].iter().all(|&c| c == 0.0)
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet { table: self.table.clone(), coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    pub fn add_scalar(&self, s: f64) -> Jet {
        let mut out = self.clone();
        out.coeffs[0] += s;
        out
    }

    /// Drop every coefficient above `order`.
    pub fn truncate(&self, order: usize) -> Jet {
        if order >= self.order() {
            return self.clone();
        }
        let t = table(self.dim(), order);
        let n = self.table.prefix_len(order);
        debug_assert_eq!(n, t.len());
        Jet { table: t, coeffs: self.coeffs[..n].to_vec() }
    }

    /// `∂f/∂x_v` as a jet of one lower order.
    pub fn derivative(&self, v: usize) -> Jet {
        assert!(self.order() >= 1, "cannot differentiate an order-0 jet");
        let t = table(self.dim(), self.order() - 1);
        let mut coeffs = vec![0.0; t.len()];
        let mut e = vec![0u8; self.dim()];
        for (k, c) in coeffs.iter_mut().enumerate() {
            e.copy_from_slice(t.exponents(k));
            let factor = (e[v] + 1) as f64;
            e[v] += 1;
            *c = factor * self.coeff(&e);
        }
        Jet { table: t, coeffs }
    }

    /// Restrict to the coordinates listed in `vars`, holding the others fixed.
    pub fn restrict(&self, vars: &[usize]) -> Jet {
        let t = table(vars.len(), self.order());
        let mut full = vec![0u8; self.dim()];
        let coeffs = (0..t.len())
            .map(|k| {
                full.iter_mut().for_each(|x| *x = 0);
                for (local, &global) in vars.iter().enumerate() {
                    full[global] = t.exponents(k)[local];
                }
                self.coeff(&full)
            })
            .collect();
        Jet { table: t, coeffs }
    }

    fn check_compatible(&self, other: &Jet) {
        assert!(
            Arc::ptr_eq(&self.table, &other.table)
                || (self.dim() == other.dim() && self.order() == other.order()),
            "jets over different tables"
        );
    }

    /// `Σ_k c_k (self - self(p))^k` for Taylor coefficients `c_k` of a
    /// univariate function at `self(p)`.
    pub fn compose(&self, taylor: &[f64]) -> Jet {
        let mut delta = self.clone();
        delta.coeffs[0] = 0.0;
        let k = self.order().min(taylor.len() - 1);
        let mut acc = Jet::constant(self.table.clone(), taylor[k]);
        for c in taylor[..k].iter().rev() {
            acc = (&acc * &delta).add_scalar(*c);
        }
        acc
    }

    pub fn apply(&self, f: UnaryFn) -> Result<Jet> {
        let t = f.taylor_coeffs(self.value(), self.order())?;
        Ok(self.compose(&t))
    }

    pub fn recip(&self) -> Result<Jet> {
        let b = self.value();
        if b == 0.0 {
            return Err(GeomError::Domain("division by zero".into()));
        }
        let inv = 1.0 / b;
        let d = [inv, -inv * inv, 2.0 * inv.powi(3), -6.0 * inv.powi(4)];
        Ok(self.compose(&normalize(&d, self.order())))
    }

    pub fn powi(&self, n: i32) -> Result<Jet> {
        let mut acc = Jet::constant(self.table.clone(), 1.0);
        for _ in 0..n.unsigned_abs() {
            acc = &acc * self;
        }
        if n < 0 {
            acc.recip()
        } else {
            Ok(acc)
        }
    }

    pub fn powf(&self, p: f64) -> Result<Jet> {
        let a = self.value();
        if a <= 0.0 {
            return Err(GeomError::Domain(format!("non-integer power of non-positive base {a}")));
        }
        let d = [
            a.powf(p),
            p * a.powf(p - 1.0),
            p * (p - 1.0) * a.powf(p - 2.0),
            p * (p - 1.0) * (p - 2.0) * a.powf(p - 3.0),
        ];
        Ok(self.compose(&normalize(&d, self.order())))
    }

    fn ensure_finite(self) -> Result<Jet> {
        if self.coeffs.iter().all(|c| c.is_finite()) {
            Ok(self)
        } else {
            Err(GeomError::Domain("non-finite jet coefficient".into()))
        }
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        self.check_compatible(rhs);
        let coeffs = self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect();
        Jet { table: self.table.clone(), coeffs }
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        self.check_compatible(rhs);
        let coeffs = self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect();
        Jet { table: self.table.clone(), coeffs }
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        self.check_compatible(rhs);
        if rhs.is_constant() {
            return self.scale(rhs.value());
        }
        if self.is_constant() {
            return rhs.scale(self.value());
        }
        let mut out = vec![0.0; self.coeffs.len()];
        for (a, &ca) in self.coeffs.iter().enumerate() {
            if ca == 0.0 {
                continue;
            }
            for &(b, c) in &self.table.products[a] {
                out[c as usize] += ca * rhs.coeffs[b as usize];
            }
        }
        Jet { table: self.table.clone(), coeffs: out }
    }
}

macro_rules! owned_ops {
    ($tr:ident, $m:ident) => {
        impl $tr for Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet {
                (&self).$m(&rhs)
            }
        }
    };
}
owned_ops!(Add, add);
owned_ops!(Sub, sub);
owned_ops!(Mul, mul);

impl std::iter::Sum for Jet {
    fn sum<I: Iterator<Item = Jet>>(mut iter: I) -> Jet {
        let first = iter.next().expect("sum of an empty jet sequence");
        iter.fold(first, |acc, j| &acc + &j)
    }
}

/// Evaluate `expr` with coordinate `x_i` replaced by the jet `inputs[i]`.
///
/// This is how compositions `g(F(u))` are differentiated: pass the jets of
/// the map components `F^i(u)` as inputs.
pub fn eval_jet_with(expr: &ScalarExpr, inputs: &[Jet]) -> Result<Jet> {
    let proto = inputs
        .first()
        .ok_or_else(|| GeomError::DimensionMismatch("no input jets".into()))?;
    eval_rec(expr, inputs, proto.table())
}

fn eval_rec(expr: &ScalarExpr, inputs: &[Jet], t: &Arc<MonomialTable>) -> Result<Jet> {
    let j = match expr {
        ScalarExpr::Const(c) => Jet::constant(t.clone(), *c),
        ScalarExpr::Var(i) => inputs
            .get(*i)
            .ok_or_else(|| {
                GeomError::DimensionMismatch(format!("x{i} used with {} inputs", inputs.len()))
            })?
            .clone(),
        ScalarExpr::Neg(a) => -&eval_rec(a, inputs, t)?,
        ScalarExpr::Unary(f, a) => eval_rec(a, inputs, t)?.apply(*f)?,
        ScalarExpr::Add(a, b) => &eval_rec(a, inputs, t)? + &eval_rec(b, inputs, t)?,
        ScalarExpr::Sub(a, b) => &eval_rec(a, inputs, t)? - &eval_rec(b, inputs, t)?,
        ScalarExpr::Mul(a, b) => &eval_rec(a, inputs, t)? * &eval_rec(b, inputs, t)?,
        ScalarExpr::Div(a, b) => {
            let den = eval_rec(b, inputs, t)?;
            let num = eval_rec(a, inputs, t)?;
            if den.is_constant() {
                if den.value() == 0.0 {
                    return Err(GeomError::Domain("division by zero".into()));
                }
                num.scale(1.0 / den.value())
            } else {
                &num * &den.recip()?
            }
        }
        ScalarExpr::PowI(a, n) => {
            let base = eval_rec(a, inputs, t)?;
            if base.is_constant() {
                if *n < 0 && base.value() == 0.0 {
                    return Err(GeomError::Domain("division by zero in negative power".into()));
                }
                Jet::constant(t.clone(), powi_exact(base.value(), *n))
            } else {
                base.powi(*n)?
            }
        }
        ScalarExpr::PowF(a, p) => eval_rec(a, inputs, t)?.powf(*p)?,
        ScalarExpr::Pow(a, b) => {
            let base = eval_rec(a, inputs, t)?;
            let e = eval_rec(b, inputs, t)?;
            if base.value() <= 0.0 {
                return Err(GeomError::Domain(format!(
                    "power of non-positive base {}",
                    base.value()
                )));
            }
            (&e * &base.apply(UnaryFn::Log)?).apply(UnaryFn::Exp)?
        }
    };
    j.ensure_finite()
}

/// Jet of `expr` at `p` to the given order (1, 2 or 3).
pub fn eval_jet(expr: &ScalarExpr, p: &Point, order: usize) -> Result<Jet> {
    if !(1..=MAX_ORDER).contains(&order) {
        return Err(GeomError::Validation(format!("jet order {order} not in 1..={MAX_ORDER}")));
    }
    if p.dim() > MAX_DIM {
        return Err(GeomError::DimensionMismatch(format!("dimension {} > {MAX_DIM}", p.dim())));
    }
    if p.dim() == 0 {
        return Ok(Jet::constant(table(0, order), expr.eval(&[])?));
    }
    eval_jet_with(expr, &Jet::variables(&p.coords, order))
}
