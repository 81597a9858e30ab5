//! Parsing, circuit expansion and printing of source programs.

mod ast;
mod expand;
mod expr;
mod parser;

pub use ast::*;
pub use expand::{expand_circuits, ExpandError};
pub use expr::{format_real, BinOp, Expr, ExprError, ParamExpr, EXPR_EQ_TOL};
pub use parser::{parse_program, ParseError};

use std::collections::BTreeMap;

/// Reduce a raw parameter expression to affine normal form.
pub fn simplify_param(e: &Expr) -> Result<ParamExpr, ExprError> {
    e.to_affine(&BTreeMap::new())
}
