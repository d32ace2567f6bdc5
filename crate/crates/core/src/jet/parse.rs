//! Infix expression grammar used by scenario files.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?
//! primary := number | x<i> | name | func '(' expr ')' | '(' expr ')'
//! ```
//!
//! `func` is one of `sin cos exp log ln sqrt`. `pi` is always defined; other
//! names resolve through the caller-supplied parameter table.

use std::collections::BTreeMap;

use super::expr::{ScalarExpr, UnaryFn, MAX_DIM};
use crate::error::{GeomError, Result};

/// Parse `text` as an expression over `dim` coordinates.
pub fn parse_expr(text: &str, dim: usize) -> Result<ScalarExpr> {
    parse_expr_with(text, dim, &BTreeMap::new())
}

/// Parse with named real parameters (e.g. `theta`) substituted as constants.
pub fn parse_expr_with(text: &str, dim: usize, params: &BTreeMap<String, f64>) -> Result<ScalarExpr> {
    if dim > MAX_DIM {
        return Err(GeomError::Parse(format!(
            "chart dimension {dim} exceeds the supported maximum {MAX_DIM}"
        )));
    }
    let mut p = Parser { src: text.as_bytes(), pos: 0, dim, params };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    dim: usize,
    params: &'a BTreeMap<String, f64>,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> GeomError {
        let text = String::from_utf8_lossy(self.src);
        GeomError::Parse(format!("{msg} at column {} in `{text}`", self.pos + 1))
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<ScalarExpr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = lhs + self.term()?;
            } else if self.eat(b'-') {
                lhs = lhs - self.term()?;
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<ScalarExpr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(b'*') {
                lhs = lhs * self.unary()?;
            } else if self.eat(b'/') {
                lhs = lhs / self.unary()?;
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<ScalarExpr> {
        if self.eat(b'-') {
            let inner = self.unary()?;
            return Ok(match inner {
                ScalarExpr::Const(c) => ScalarExpr::Const(-c),
                other => -other,
            });
        }
        if self.eat(b'+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<ScalarExpr> {
        let base = self.primary()?;
        if !self.eat(b'^') {
            return Ok(base);
        }
        let exponent = self.unary()?;
        Ok(match exponent {
            ScalarExpr::Const(p) if p.fract() == 0.0 && p.abs() <= i32::MAX as f64 => {
                ScalarExpr::PowI(Box::new(base), p as i32)
            }
            ScalarExpr::Const(p) => ScalarExpr::PowF(Box::new(base), p),
            e => ScalarExpr::Pow(Box::new(base), Box::new(e)),
        })
    }

    fn primary(&mut self) -> Result<ScalarExpr> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.error("expected `)`"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident(),
            Some(_) => Err(self.error("unexpected character")),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<ScalarExpr> {
        let start = self.pos;
        let s = self.src;
        let mut i = self.pos;
        while i < s.len() && (s[i].is_ascii_digit() || s[i] == b'.') {
            i += 1;
        }
        if i < s.len() && (s[i] == b'e' || s[i] == b'E') {
            let mut j = i + 1;
            if j < s.len() && (s[j] == b'+' || s[j] == b'-') {
                j += 1;
            }
            if j < s.len() && s[j].is_ascii_digit() {
                while j < s.len() && s[j].is_ascii_digit() {
                    j += 1;
                }
                i = j;
            }
        }
        self.pos = i;
        let text = std::str::from_utf8(&s[start..i]).unwrap_or_default();
        text.parse::<f64>()
            .map(ScalarExpr::Const)
            .map_err(|_| GeomError::Parse(format!("invalid number `{text}`")))
    }

    fn ident(&mut self) -> Result<ScalarExpr> {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or_default().to_string();
        let func = match name.as_str() {
            "sin" => Some(UnaryFn::Sin),
            "cos" => Some(UnaryFn::Cos),
            "exp" => Some(UnaryFn::Exp),
            "log" | "ln" => Some(UnaryFn::Log),
            "sqrt" => Some(UnaryFn::Sqrt),
            _ => None,
        };
        if let Some(f) = func {
            if !self.eat(b'(') {
                return Err(self.error(&format!("expected `(` after `{name}`")));
            }
            let arg = self.expr()?;
            if !self.eat(b')') {
                return Err(self.error("expected `)`"));
            }
            return Ok(ScalarExpr::Unary(f, Box::new(arg)));
        }
        if let Some(idx) = name.strip_prefix('x').and_then(|d| d.parse::<usize>().ok()) {
            if idx >= self.dim {
                self.pos = start;
                return Err(self.error(&format!(
                    "coordinate `{name}` outside a {}-dimensional chart",
                    self.dim
                )));
            }
            return Ok(ScalarExpr::Var(idx));
        }
        if name == "pi" {
            return Ok(ScalarExpr::Const(std::f64::consts::PI));
        }
        if let Some(v) = self.params.get(&name) {
            return Ok(ScalarExpr::Const(*v));
        }
        self.pos = start;
        Err(self.error(&format!("unknown identifier `{name}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_and_whitespace() {
        let e = parse_expr(" x0 +x1 * 2 ^ 2 ", 2).unwrap();
        assert_eq!(e.eval(&[1.0, 3.0]).unwrap(), 13.0);
        let e = parse_expr("-x0^2", 1).unwrap();
        assert_eq!(e.eval(&[3.0]).unwrap(), -9.0);
        let e = parse_expr("2^-1", 0).unwrap();
        assert_eq!(e.eval(&[]).unwrap(), 0.5);
    }

    #[test]
    fn functions_and_params() {
        let mut params = BTreeMap::new();
        params.insert("theta".to_string(), 0.5);
        let e = parse_expr_with("x1*cos(theta) + exp(x0) - ln(1)", 2, &params).unwrap();
        let v = e.eval(&[0.0, 2.0]).unwrap();
        assert!((v - (2.0 * 0.5f64.cos() + 1.0)).abs() < 1e-15);
        assert!((parse_expr("sqrt(pi)^2", 0).unwrap().eval(&[]).unwrap() - std::f64::consts::PI).abs() < 1e-14);
    }

    #[test]
    fn exponent_kinds() {
        assert!(matches!(parse_expr("x0^3", 1).unwrap(), ScalarExpr::PowI(_, 3)));
        assert!(matches!(parse_expr("x0^1.5", 1).unwrap(), ScalarExpr::PowF(..)));
        assert!(matches!(parse_expr("x0^x0", 1).unwrap(), ScalarExpr::Pow(..)));
        assert_eq!(parse_expr("1e-3*x0", 1).unwrap().eval(&[2.0]).unwrap(), 2e-3);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(parse_expr("x2", 2).is_err());
        assert!(parse_expr("foo", 2).is_err());
        assert!(parse_expr("sin x0", 1).is_err());
        assert!(parse_expr("(x0", 1).is_err());
        assert!(parse_expr("x0 x0", 1).is_err());
        assert!(parse_expr("x0", 17).is_err());
    }
}
