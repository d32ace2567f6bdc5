//! Closed-form scalar expressions over chart coordinates.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::error::{GeomError, Result};

/// Largest chart dimension accepted anywhere in the engine.
pub const MAX_DIM: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryFn {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
}

impl UnaryFn {
    pub fn name(self) -> &'static str {
        match self {
            UnaryFn::Sin => "sin",
            UnaryFn::Cos => "cos",
            UnaryFn::Exp => "exp",
            UnaryFn::Log => "log",
            UnaryFn::Sqrt => "sqrt",
        }
    }

    pub(crate) fn apply(self, a: f64) -> Result<f64> {
        match self {
            UnaryFn::Sin => Ok(a.sin()),
            UnaryFn::Cos => Ok(a.cos()),
            UnaryFn::Exp => Ok(a.exp()),
            UnaryFn::Log => {
                if a <= 0.0 {
                    Err(GeomError::Domain(format!("log of non-positive value {a}")))
                } else {
                    Ok(a.ln())
                }
            }
            UnaryFn::Sqrt => {
                if a < 0.0 {
                    Err(GeomError::Domain(format!("sqrt of negative value {a}")))
                } else {
                    Ok(a.sqrt())
                }
            }
        }
    }

    /// Taylor coefficients `f^(k)(a) / k!` for `k = 0..=order`.
    pub(crate) fn taylor_coeffs(self, a: f64, order: usize) -> Result<Vec<f64>> {
        let d: [f64; 4] = match self {
            UnaryFn::Sin => [a.sin(), a.cos(), -a.sin(), -a.cos()],
            UnaryFn::Cos => [a.cos(), -a.sin(), -a.cos(), a.sin()],
            UnaryFn::Exp => {
                let e = a.exp();
                [e, e, e, e]
            }
            UnaryFn::Log => {
                if a <= 0.0 {
                    return Err(GeomError::Domain(format!("log of non-positive value {a}")));
                }
                [a.ln(), 1.0 / a, -1.0 / (a * a), 2.0 / (a * a * a)]
            }
            UnaryFn::Sqrt => {
                if a < 0.0 || (a == 0.0 && order > 0) {
                    return Err(GeomError::Domain(format!("sqrt of non-positive value {a}")));
                }
                let s = a.sqrt();
                [s, 0.5 / s, -0.25 / (a * s), 0.375 / (a * a * s)]
            }
        };
        Ok(normalize(&d, order))
    }
}

pub(crate) fn normalize(derivs: &[f64; 4], order: usize) -> Vec<f64> {
    const INV_FACT: [f64; 4] = [1.0, 1.0, 0.5, 1.0 / 6.0];
    (0..=order).map(|k| derivs[k] * INV_FACT[k]).collect()
}

/// Expression tree over coordinates `x0..x{d-1}`.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalarExpr {
    Const(f64),
    Var(usize),
    Neg(Box<ScalarExpr>),
    Unary(UnaryFn, Box<ScalarExpr>),
    Add(Box<ScalarExpr>, Box<ScalarExpr>),
    Sub(Box<ScalarExpr>, Box<ScalarExpr>),
    Mul(Box<ScalarExpr>, Box<ScalarExpr>),
    Div(Box<ScalarExpr>, Box<ScalarExpr>),
    /// Integer exponent, evaluated by repeated multiplication.
    PowI(Box<ScalarExpr>, i32),
    /// Real constant exponent; the base must be positive.
    PowF(Box<ScalarExpr>, f64),
    /// Expression exponent, `exp(e * log(b))`.
    Pow(Box<ScalarExpr>, Box<ScalarExpr>),
}

pub fn constant(c: f64) -> ScalarExpr {
    ScalarExpr::Const(c)
}

pub fn var(i: usize) -> ScalarExpr {
    ScalarExpr::Var(i)
}

pub fn sin(e: ScalarExpr) -> ScalarExpr {
    ScalarExpr::Unary(UnaryFn::Sin, Box::new(e))
}

pub fn cos(e: ScalarExpr) -> ScalarExpr {
    ScalarExpr::Unary(UnaryFn::Cos, Box::new(e))
}

pub fn exp(e: ScalarExpr) -> ScalarExpr {
    ScalarExpr::Unary(UnaryFn::Exp, Box::new(e))
}

pub fn log(e: ScalarExpr) -> ScalarExpr {
    ScalarExpr::Unary(UnaryFn::Log, Box::new(e))
}

pub fn sqrt(e: ScalarExpr) -> ScalarExpr {
    ScalarExpr::Unary(UnaryFn::Sqrt, Box::new(e))
}

impl ScalarExpr {
    pub fn zero() -> Self {
        ScalarExpr::Const(0.0)
    }

    pub fn one() -> Self {
        ScalarExpr::Const(1.0)
    }

    pub fn powi(self, n: i32) -> Self {
        ScalarExpr::PowI(Box::new(self), n)
    }

    pub fn powf(self, p: f64) -> Self {
        ScalarExpr::PowF(Box::new(self), p)
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            ScalarExpr::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ScalarExpr::Const(c) if *c == 0.0)
    }

    /// Evaluate at a coordinate vector.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        let v = match self {
            ScalarExpr::Const(c) => *c,
            ScalarExpr::Var(i) => *x.get(*i).ok_or_else(|| {
                GeomError::DimensionMismatch(format!("x{i} used on a {}-dimensional point", x.len()))
            })?,
            ScalarExpr::Neg(a) => -a.eval(x)?,
            ScalarExpr::Unary(f, a) => f.apply(a.eval(x)?)?,
            ScalarExpr::Add(a, b) => a.eval(x)? + b.eval(x)?,
            ScalarExpr::Sub(a, b) => a.eval(x)? - b.eval(x)?,
            ScalarExpr::Mul(a, b) => a.eval(x)? * b.eval(x)?,
            ScalarExpr::Div(a, b) => {
                let den = b.eval(x)?;
                if den == 0.0 {
                    return Err(GeomError::Domain("division by zero".into()));
                }
                a.eval(x)? / den
            }
            ScalarExpr::PowI(a, n) => {
                let base = a.eval(x)?;
                if *n < 0 && base == 0.0 {
                    return Err(GeomError::Domain("division by zero in negative power".into()));
                }
                powi_exact(base, *n)
            }
            ScalarExpr::PowF(a, p) => {
                let base = a.eval(x)?;
                if base <= 0.0 {
                    return Err(GeomError::Domain(format!(
                        "non-integer power of non-positive base {base}"
                    )));
                }
                base.powf(*p)
            }
            ScalarExpr::Pow(a, b) => {
                let base = a.eval(x)?;
                if base <= 0.0 {
                    return Err(GeomError::Domain(format!("power of non-positive base {base}")));
                }
                (b.eval(x)? * base.ln()).exp()
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(GeomError::Domain("non-finite value".into()))
        }
    }

    /// One past the largest coordinate index referenced, or 0 for constants.
    pub fn arity(&self) -> usize {
        match self {
            ScalarExpr::Const(_) => 0,
            ScalarExpr::Var(i) => i + 1,
            ScalarExpr::Neg(a)
            | ScalarExpr::Unary(_, a)
            | ScalarExpr::PowI(a, _)
            | ScalarExpr::PowF(a, _) => a.arity(),
            ScalarExpr::Add(a, b)
            | ScalarExpr::Sub(a, b)
            | ScalarExpr::Mul(a, b)
            | ScalarExpr::Div(a, b)
            | ScalarExpr::Pow(a, b) => a.arity().max(b.arity()),
        }
    }

    /// True when coordinate `i` appears in the tree.
    pub fn uses_var(&self, i: usize) -> bool {
        match self {
            ScalarExpr::Const(_) => false,
            ScalarExpr::Var(j) => *j == i,
            ScalarExpr::Neg(a)
            | ScalarExpr::Unary(_, a)
            | ScalarExpr::PowI(a, _)
            | ScalarExpr::PowF(a, _) => a.uses_var(i),
            ScalarExpr::Add(a, b)
            | ScalarExpr::Sub(a, b)
            | ScalarExpr::Mul(a, b)
            | ScalarExpr::Div(a, b)
            | ScalarExpr::Pow(a, b) => a.uses_var(i) || b.uses_var(i),
        }
    }

    /// Replace every coordinate `x_i` by `sub(i)`.
    pub fn substitute(&self, sub: &dyn Fn(usize) -> ScalarExpr) -> ScalarExpr {
        let bx = |e: &ScalarExpr| Box::new(e.substitute(sub));
        match self {
            ScalarExpr::Const(c) => ScalarExpr::Const(*c),
            ScalarExpr::Var(i) => sub(*i),
            ScalarExpr::Neg(a) => ScalarExpr::Neg(bx(a)),
            ScalarExpr::Unary(f, a) => ScalarExpr::Unary(*f, bx(a)),
            ScalarExpr::Add(a, b) => ScalarExpr::Add(bx(a), bx(b)),
            ScalarExpr::Sub(a, b) => ScalarExpr::Sub(bx(a), bx(b)),
            ScalarExpr::Mul(a, b) => ScalarExpr::Mul(bx(a), bx(b)),
            ScalarExpr::Div(a, b) => ScalarExpr::Div(bx(a), bx(b)),
            ScalarExpr::PowI(a, n) => ScalarExpr::PowI(bx(a), *n),
            ScalarExpr::PowF(a, p) => ScalarExpr::PowF(bx(a), *p),
            ScalarExpr::Pow(a, b) => ScalarExpr::Pow(bx(a), bx(b)),
        }
    }

    /// Renumber coordinates `x_i -> x_{i + offset}`.
    pub fn shift_vars(&self, offset: usize) -> ScalarExpr {
        self.substitute(&|i| ScalarExpr::Var(i + offset))
    }
}

pub(crate) fn powi_exact(base: f64, n: i32) -> f64 {
    let mut acc = 1.0;
    for _ in 0..n.unsigned_abs() {
        acc *= base;
    }
    if n < 0 {
        1.0 / acc
    } else {
        acc
    }
}

impl fmt::Display for ScalarExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarExpr::Const(c) => {
                if *c < 0.0 {
                    write!(f, "({c:?})")
                } else {
                    write!(f, "{c:?}")
                }
            }
            ScalarExpr::Var(i) => write!(f, "x{i}"),
            ScalarExpr::Neg(a) => write!(f, "(-{a})"),
            ScalarExpr::Unary(u, a) => write!(f, "{}({a})", u.name()),
            ScalarExpr::Add(a, b) => write!(f, "({a} + {b})"),
            ScalarExpr::Sub(a, b) => write!(f, "({a} - {b})"),
            ScalarExpr::Mul(a, b) => write!(f, "({a} * {b})"),
            ScalarExpr::Div(a, b) => write!(f, "({a} / {b})"),
            ScalarExpr::PowI(a, n) => write!(f, "({a}^({n}))"),
            ScalarExpr::PowF(a, p) => write!(f, "({a}^({p:?}))"),
            ScalarExpr::Pow(a, b) => write!(f, "({a}^{b})"),
        }
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident, $variant:ident) => {
        impl $tr for ScalarExpr {
            type Output = ScalarExpr;
            fn $method(self, rhs: ScalarExpr) -> ScalarExpr {
                ScalarExpr::$variant(Box::new(self), Box::new(rhs))
            }
        }
        impl $tr<f64> for ScalarExpr {
            type Output = ScalarExpr;
            fn $method(self, rhs: f64) -> ScalarExpr {
                ScalarExpr::$variant(Box::new(self), Box::new(ScalarExpr::Const(rhs)))
            }
        }
        impl $tr<ScalarExpr> for f64 {
            type Output = ScalarExpr;
            fn $method(self, rhs: ScalarExpr) -> ScalarExpr {
                ScalarExpr::$variant(Box::new(ScalarExpr::Const(self)), Box::new(rhs))
            }
        }
    };
}

binop!(Add, add, Add);
binop!(Sub, sub, Sub);
binop!(Mul, mul, Mul);
binop!(Div, div, Div);

impl Neg for ScalarExpr {
    type Output = ScalarExpr;
    fn neg(self) -> ScalarExpr {
        ScalarExpr::Neg(Box::new(self))
    }
}

/// Chart identifier carried by [`Point`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ChartId(pub u32);

/// A point on a single chart.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub chart: ChartId,
    pub coords: Vec<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Point { chart: ChartId::default(), coords }
    }

    pub fn on_chart(chart: ChartId, coords: Vec<f64>) -> Self {
        Point { chart, coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn expect_dim(&self, dim: usize) -> Result<()> {
        if self.coords.len() == dim {
            Ok(())
        } else {
            Err(GeomError::DimensionMismatch(format!(
                "point has {} coordinates, chart has dimension {dim}",
                self.coords.len()
            )))
        }
    }
}

impl From<Vec<f64>> for Point {
    fn from(coords: Vec<f64>) -> Self {
        Point::new(coords)
    }
}

/// Plain evaluation of `expr` at `p`.
pub fn eval(expr: &ScalarExpr, p: &Point) -> Result<f64> {
    expr.eval(&p.coords)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_of_coordinates() {
        let e = var(0) * var(1);
        assert_eq!(eval(&e, &Point::new(vec![2.0, 3.0])).unwrap(), 6.0);
    }

    #[test]
    fn exp_of_zero() {
        assert_eq!(exp(constant(0.0)).eval(&[]).unwrap(), 1.0);
    }

    #[test]
    fn log_at_zero_is_domain_error() {
        let e = log(var(0));
        assert!(matches!(e.eval(&[0.0]), Err(GeomError::Domain(_))));
        assert!(matches!(sqrt(var(0)).eval(&[-1.0]), Err(GeomError::Domain(_))));
        assert!(matches!((var(0) / var(1)).eval(&[1.0, 0.0]), Err(GeomError::Domain(_))));
    }

    #[test]
    fn powers() {
        assert_eq!(var(0).powi(3).eval(&[2.0]).unwrap(), 8.0);
        assert_eq!(var(0).powi(-2).eval(&[2.0]).unwrap(), 0.25);
        assert!(var(0).powf(0.5).eval(&[-4.0]).is_err());
        assert!((var(0).powf(0.5).eval(&[4.0]).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn structural_equality_implies_same_value() {
        let a = sin(var(0)) * exp(var(1)) + 3.0;
        let b = a.clone();
        assert_eq!(a, b);
        let x = [0.3, -0.7];
        assert_eq!(a.eval(&x).unwrap(), b.eval(&x).unwrap());
    }

    #[test]
    fn shift_and_arity() {
        let e = var(0) + var(2);
        assert_eq!(e.arity(), 3);
        let s = e.shift_vars(2);
        assert_eq!(s.arity(), 5);
        assert!(s.uses_var(4) && !s.uses_var(0));
    }
}
