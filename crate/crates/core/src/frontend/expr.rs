//! Parameter expressions.
//!
//! Gate parameters are kept in affine normal form: a real constant plus a
//! sorted map from classical variable to coefficient. [`Expr`] is the raw
//! parse tree, which may also denote complex numbers inside `DEFGATE` bodies.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

/// Tolerance used when comparing two affine expressions.
pub const EXPR_EQ_TOL: f64 = 1e-12;

/// Coefficients smaller than this are dropped during normalization.
const DROP_TOL: f64 = 1e-14;

/// An affine combination `constant + Σ coef·var`.
#[derive(Clone, Debug, Default)]
pub struct ParamExpr {
    constant: f64,
    terms: BTreeMap<String, f64>,
}

impl ParamExpr {
    pub fn constant(value: f64) -> Self {
        ParamExpr {
            constant: value,
            terms: BTreeMap::new(),
        }
    }

    pub fn var(name: impl Into<String>) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(name.into(), 1.0);
        ParamExpr {
            constant: 0.0,
            terms,
        }
    }

    pub fn from_parts(constant: f64, terms: impl IntoIterator<Item = (String, f64)>) -> Self {
        let mut e = ParamExpr::constant(constant);
        for (name, coef) in terms {
            *e.terms.entry(name).or_insert(0.0) += coef;
        }
        e.normalize()
    }

    pub fn constant_part(&self) -> f64 {
        self.constant
    }

    pub fn terms(&self) -> &BTreeMap<String, f64> {
        &self.terms
    }

    pub fn is_concrete(&self) -> bool {
        self.terms.is_empty()
    }

    /// The numeric value, if the expression has no free variables.
    pub fn value(&self) -> Option<f64> {
        self.is_concrete().then_some(self.constant)
    }

    pub fn variables(&self) -> impl Iterator<Item = &str> {
        self.terms.keys().map(String::as_str)
    }

    /// Substitute every variable found in `env`; unknown variables remain.
    pub fn substitute(&self, env: &BTreeMap<String, f64>) -> ParamExpr {
        let mut out = ParamExpr::constant(self.constant);
        for (name, coef) in &self.terms {
            match env.get(name) {
                Some(v) => out.constant += coef * v,
                None => {
                    out.terms.insert(name.clone(), *coef);
                }
            }
        }
        out.normalize()
    }

    fn normalize(mut self) -> Self {
        self.terms.retain(|_, c| c.abs() > DROP_TOL);
        if self.constant == 0.0 {
            self.constant = 0.0; // fold -0.0
        }
        self
    }

    /// Approximate equality of constant and every coefficient.
    pub fn approx_eq(&self, other: &ParamExpr, tol: f64) -> bool {
        if (self.constant - other.constant).abs() > tol {
            return false;
        }
        let keys: std::collections::BTreeSet<&String> =
            self.terms.keys().chain(other.terms.keys()).collect();
        keys.into_iter().all(|k| {
            let a = self.terms.get(k).copied().unwrap_or(0.0);
            let b = other.terms.get(k).copied().unwrap_or(0.0);
            (a - b).abs() <= tol
        })
    }
}

impl PartialEq for ParamExpr {
    fn eq(&self, other: &Self) -> bool {
        self.approx_eq(other, EXPR_EQ_TOL)
    }
}

impl From<f64> for ParamExpr {
    fn from(v: f64) -> Self {
        ParamExpr::constant(v)
    }
}

impl Add for ParamExpr {
    type Output = ParamExpr;
    fn add(mut self, rhs: ParamExpr) -> ParamExpr {
        self.constant += rhs.constant;
        for (k, v) in rhs.terms {
            *self.terms.entry(k).or_insert(0.0) += v;
        }
        self.normalize()
    }
}

impl Add<f64> for ParamExpr {
    type Output = ParamExpr;
    fn add(mut self, rhs: f64) -> ParamExpr {
        self.constant += rhs;
        self.normalize()
    }
}

impl Sub for ParamExpr {
    type Output = ParamExpr;
    fn sub(self, rhs: ParamExpr) -> ParamExpr {
        self + (-rhs)
    }
}

impl Neg for ParamExpr {
    type Output = ParamExpr;
    fn neg(self) -> ParamExpr {
        self * -1.0
    }
}

impl Mul<f64> for ParamExpr {
    type Output = ParamExpr;
    fn mul(mut self, rhs: f64) -> ParamExpr {
        self.constant *= rhs;
        for v in self.terms.values_mut() {
            *v *= rhs;
        }
        self.normalize()
    }
}

impl fmt::Display for ParamExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        if self.constant != 0.0 || self.terms.is_empty() {
            f.write_str(&format_real(self.constant))?;
            first = false;
        }
        for (name, coef) in &self.terms {
            let (negative, body) = format_term(name, *coef);
            match (first, negative) {
                (true, true) => write!(f, "-{body}")?,
                (true, false) => f.write_str(&body)?,
                (false, true) => write!(f, " - {body}")?,
                (false, false) => write!(f, " + {body}")?,
            }
            first = false;
        }
        Ok(())
    }
}

/// Find a small rational `p/q` within `tol` of `x`.
fn small_rational(x: f64, tol: f64) -> Option<(i64, i64)> {
    for q in [1i64, 2, 3, 4, 6, 8, 12, 16, 32, 64] {
        let p = (x * q as f64).round();
        if p.abs() <= 64.0 * q as f64 && (p / q as f64 - x).abs() <= tol {
            return Some((p as i64, q));
        }
    }
    None
}

/// Render a real number as a multiple of pi when it is one, otherwise as the
/// shortest decimal that reads back to the same float.
pub fn format_real(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if let Some((p, q)) = small_rational(x / std::f64::consts::PI, 1e-12) {
        if p != 0 {
            let sign = if p < 0 { "-" } else { "" };
            let num = if p.abs() == 1 {
                "pi".to_string()
            } else {
                format!("{}*pi", p.abs())
            };
            return if q == 1 {
                format!("{sign}{num}")
            } else {
                format!("{sign}{num}/{q}")
            };
        }
    }
    format!("{x}")
}

fn format_term(name: &str, coef: f64) -> (bool, String) {
    let negative = coef < 0.0;
    let c = coef.abs();
    if let Some((p, q)) = small_rational(c, 1e-12) {
        let decimal = format!("{c}");
        return match (p, q) {
            (1, 1) => (negative, name.to_string()),
            (_, 1) => (negative, format!("{p}*{name}")),
            (1, _) => (negative, format!("{name}/{q}")),
            _ if decimal.len() <= 5 => (negative, format!("{decimal}*{name}")),
            _ => (negative, format!("{p}*{name}/{q}")),
        };
    }
    (negative, format!("{}*{name}", format_real(c)))
}

/// Binary operators in raw expressions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

/// Raw expression tree as written in the source.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Number(f64),
    Pi,
    Imaginary,
    /// A classical memory reference such as `theta` or `theta[1]`.
    Variable(String),
    /// A formal parameter `%name` inside a definition body.
    Formal(String),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(String, Box<Expr>),
}

/// Why an expression could not be reduced.
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ExprError {
    #[error("expression is not affine in its variables")]
    NotAffine,
    #[error("expression has a nonzero imaginary part")]
    Complex,
    #[error("unbound formal parameter %{0}")]
    UnboundFormal(String),
    #[error("unknown function {0}")]
    UnknownFunction(String),
    #[error("free variable {0} where a number is required")]
    FreeVariable(String),
}

impl Expr {
    /// Reduce to affine normal form. Products and quotients are allowed only
    /// when one side is constant; functions only apply to constants.
    pub fn to_affine(&self, formals: &BTreeMap<String, ParamExpr>) -> Result<ParamExpr, ExprError> {
        Ok(match self {
            Expr::Number(v) => ParamExpr::constant(*v),
            Expr::Pi => ParamExpr::constant(std::f64::consts::PI),
            Expr::Imaginary => return Err(ExprError::Complex),
            Expr::Variable(name) => ParamExpr::var(name.clone()),
            Expr::Formal(name) => formals
                .get(name)
                .cloned()
                .ok_or_else(|| ExprError::UnboundFormal(name.clone()))?,
            Expr::Neg(e) => -e.to_affine(formals)?,
            Expr::Binary(op, l, r) => {
                let a = l.to_affine(formals)?;
                let b = r.to_affine(formals)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => match (a.value(), b.value()) {
                        (Some(x), _) => b * x,
                        (_, Some(y)) => a * y,
                        _ => return Err(ExprError::NotAffine),
                    },
                    BinOp::Div => match b.value() {
                        Some(y) => a * (1.0 / y),
                        None => return Err(ExprError::NotAffine),
                    },
                    BinOp::Pow => match (a.value(), b.value()) {
                        (Some(x), Some(y)) => ParamExpr::constant(x.powf(y)),
                        _ => return Err(ExprError::NotAffine),
                    },
                }
            }
            Expr::Call(func, arg) => {
                let v = arg
                    .to_affine(formals)?
                    .value()
                    .ok_or(ExprError::NotAffine)?;
                let z = apply_function(func, Complex64::new(v, 0.0))?;
                if z.im.abs() > 1e-12 {
                    return Err(ExprError::Complex);
                }
                ParamExpr::constant(z.re)
            }
        })
    }

    /// Evaluate to a complex number with formals bound to reals.
    pub fn eval_complex(&self, formals: &BTreeMap<String, f64>) -> Result<Complex64, ExprError> {
        Ok(match self {
            Expr::Number(v) => Complex64::new(*v, 0.0),
            Expr::Pi => Complex64::new(std::f64::consts::PI, 0.0),
            Expr::Imaginary => Complex64::new(0.0, 1.0),
            Expr::Variable(name) => return Err(ExprError::FreeVariable(name.clone())),
            Expr::Formal(name) => Complex64::new(
                *formals
                    .get(name)
                    .ok_or_else(|| ExprError::UnboundFormal(name.clone()))?,
                0.0,
            ),
            Expr::Neg(e) => -e.eval_complex(formals)?,
            Expr::Binary(op, l, r) => {
                let a = l.eval_complex(formals)?;
                let b = r.eval_complex(formals)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Pow => a.powc(b),
                }
            }
            Expr::Call(func, arg) => apply_function(func, arg.eval_complex(formals)?)?,
        })
    }

    /// Collect every `%formal` name mentioned.
    pub fn formals(&self, out: &mut Vec<String>) {
        match self {
            Expr::Formal(n) => out.push(n.clone()),
            Expr::Neg(e) | Expr::Call(_, e) => e.formals(out),
            Expr::Binary(_, l, r) => {
                l.formals(out);
                r.formals(out);
            }
            _ => {}
        }
    }
}

fn apply_function(name: &str, z: Complex64) -> Result<Complex64, ExprError> {
    Ok(match name.to_ascii_lowercase().as_str() {
        "sin" => z.sin(),
        "cos" => z.cos(),
        "sqrt" => z.sqrt(),
        "exp" => z.exp(),
        "cis" => (Complex64::i() * z).exp(),
        _ => return Err(ExprError::UnknownFunction(name.to_string())),
    })
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Number(v) => f.write_str(&format_real(*v)),
            Expr::Pi => f.write_str("pi"),
            Expr::Imaginary => f.write_str("i"),
            Expr::Variable(n) => f.write_str(n),
            Expr::Formal(n) => write!(f, "%{n}"),
            Expr::Neg(e) => write!(f, "-({e})"),
            Expr::Binary(op, l, r) => {
                let sym = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                };
                write!(f, "({l}{sym}{r})")
            }
            Expr::Call(n, e) => write!(f, "{n}({e})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn affine_arithmetic_collects_terms() {
        let a = ParamExpr::var("a");
        let e = a.clone() + a * 0.5 + 0.2;
        assert_eq!(e.to_string(), "0.2 + 1.5*a");
    }

    #[test]
    fn cancelling_terms_are_dropped() {
        let a = ParamExpr::var("a");
        let e = a.clone() - a;
        assert!(e.is_concrete());
        assert_eq!(e.to_string(), "0");
    }

    #[test]
    fn pi_multiples_print_symbolically() {
        assert_eq!(format_real(PI), "pi");
        assert_eq!(format_real(-PI / 2.0), "-pi/2");
        assert_eq!(format_real(3.0 * PI / 4.0), "3*pi/4");
        assert_eq!(format_real(2.0 * PI), "2*pi");
        assert_eq!(format_real(0.2), "0.2");
        assert_eq!(format_real(-0.0), "0");
    }

    #[test]
    fn coefficients_print_as_small_rationals() {
        let t = ParamExpr::var("t");
        assert_eq!((t.clone() * (1.0 / 6.0)).to_string(), "t/6");
        assert_eq!((t.clone() * (-1.0 / 6.0)).to_string(), "-t/6");
        assert_eq!((t.clone() * (1.0 / 6.0) + PI / 2.0).to_string(), "pi/2 + t/6");
        assert_eq!((t.clone() * (2.0 / 3.0)).to_string(), "2*t/3");
        assert_eq!((ParamExpr::constant(1.0) - t).to_string(), "1 - t");
    }

    #[test]
    fn raw_expressions_reduce() {
        let e = Expr::Binary(
            BinOp::Div,
            Box::new(Expr::Variable("t".into())),
            Box::new(Expr::Number(3.0)),
        );
        let p = e.to_affine(&BTreeMap::new()).unwrap();
        assert!(p.approx_eq(&(ParamExpr::var("t") * (1.0 / 3.0)), 1e-15));
        let sq = Expr::Binary(
            BinOp::Mul,
            Box::new(Expr::Variable("t".into())),
            Box::new(Expr::Variable("t".into())),
        );
        assert_eq!(sq.to_affine(&BTreeMap::new()), Err(ExprError::NotAffine));
    }

    #[test]
    fn complex_evaluation_handles_cis() {
        let e = Expr::Call("cis".into(), Box::new(Expr::Formal("x".into())));
        let mut env = BTreeMap::new();
        env.insert("x".to_string(), PI / 2.0);
        let z = e.eval_complex(&env).unwrap();
        assert!((z - Complex64::new(0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn equality_uses_tolerance() {
        let a = ParamExpr::constant(1.0);
        let b = ParamExpr::constant(1.0 + 1e-13);
        assert_eq!(a, b);
        assert_ne!(a, ParamExpr::constant(1.0 + 1e-9));
    }
}
