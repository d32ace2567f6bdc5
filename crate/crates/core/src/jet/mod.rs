//! Expressions and exact forward-mode differentiation.

pub mod expr;
pub mod fd;
pub mod parse;
pub mod taylor;

pub use expr::{constant, cos, eval, exp, log, sin, sqrt, var, ChartId, Point, ScalarExpr, UnaryFn, MAX_DIM};
pub use fd::finite_difference_oracle;
pub use parse::{parse_expr, parse_expr_with};
pub use taylor::{eval_jet, eval_jet_with, table, Jet, MonomialTable, DEFAULT_ORDER, MAX_ORDER};
