use super::expr::{BinOp, Expr, Func};
use super::jet::{Jet, MAX_ORDER};
use super::parse::{parse_with_params, ParseError};
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainFault {
    DivisionByZero,
    LogOfNonPositive,
    SqrtOfNonPositive,
    PowerOfNonPositive,
    TanPole,
    NonFinite,
}

impl fmt::Display for DomainFault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DomainFault::DivisionByZero => "division by zero",
            DomainFault::LogOfNonPositive => "log of a non-positive value",
            DomainFault::SqrtOfNonPositive => "sqrt of a non-positive value",
            DomainFault::PowerOfNonPositive => "non-integer power of a non-positive value",
            DomainFault::TanPole => "tan at a pole",
            DomainFault::NonFinite => "non-finite result",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("{fault} in `{subexpr}`")]
    Domain { fault: DomainFault, subexpr: String },
    #[error("expected a point with {expected} coordinates, got {found}")]
    Arity { expected: usize, found: usize },
    #[error("derivative order {0} exceeds the supported maximum of 4")]
    Order(usize),
}

/// A closed-form scalar function on a chart, evaluable as a jet.
#[derive(Clone, Debug)]
pub struct ScalarField {
    expr: Arc<Expr>,
    coords: Arc<[String]>,
}

impl PartialEq for ScalarField {
    fn eq(&self, other: &Self) -> bool {
        self.expr == other.expr && self.coords == other.coords
    }
}

impl ScalarField {
    pub fn new(expr: Expr, coords: Arc<[String]>) -> Self {
        debug_assert!(expr.max_var().is_none_or(|m| m < coords.len()));
        Self { expr: Arc::new(expr), coords }
    }

    pub fn parse(source: &str, coords: Arc<[String]>) -> Result<Self, ParseError> {
        Self::parse_with_params(source, coords, &[])
    }

    pub fn parse_with_params(source: &str, coords: Arc<[String]>, params: &[(String, f64)]) -> Result<Self, ParseError> {
        let expr = parse_with_params(source, &coords, params)?;
        Ok(Self::new(expr, coords))
    }

    pub fn constant(v: f64, coords: Arc<[String]>) -> Self {
        Self::new(Expr::Num(v), coords)
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn coords(&self) -> &Arc<[String]> {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn source(&self) -> String {
        self.expr.display(&self.coords).to_string()
    }

    /// Value and all partial derivatives up to `order` at `point`.
    pub fn eval_jet(&self, point: &[f64], order: usize) -> Result<Jet, EvalError> {
        if point.len() != self.dim() {
            return Err(EvalError::Arity { expected: self.dim(), found: point.len() });
        }
        if order > MAX_ORDER {
            return Err(EvalError::Order(order));
        }
        let vars = Jet::coordinates(point, order);
        self.eval_at(&vars)
    }

    pub fn eval(&self, point: &[f64]) -> Result<f64, EvalError> {
        self.eval_jet(point, 0).map(|j| j.value())
    }

    /// Evaluates with arbitrary jets substituted for the coordinates.
    pub fn eval_at(&self, vars: &[Jet]) -> Result<Jet, EvalError> {
        if vars.len() != self.dim() {
            return Err(EvalError::Arity { expected: self.dim(), found: vars.len() });
        }
        let proto = &vars[0];
        let j = eval_expr(&self.expr, vars, proto, &self.coords)?;
        if !j.is_finite() {
            return Err(EvalError::Domain {
                fault: DomainFault::NonFinite,
                subexpr: self.source(),
            });
        }
        Ok(j)
    }
}

fn fault(fault: DomainFault, e: &Expr, coords: &[String]) -> EvalError {
    EvalError::Domain { fault, subexpr: e.display(coords).to_string() }
}

fn eval_expr(e: &Expr, vars: &[Jet], proto: &Jet, coords: &[String]) -> Result<Jet, EvalError> {
    let constant = |v: f64| Jet::constant(proto.nvars(), proto.order(), v);
    Ok(match e {
        Expr::Num(v) => constant(*v),
        Expr::Param { value, .. } => constant(*value),
        Expr::Const(c) => constant(c.value()),
        Expr::Var(i) => vars[*i].clone(),
        Expr::Neg(a) => -eval_expr(a, vars, proto, coords)?,
        Expr::Bin(op, a, b) => {
            let x = eval_expr(a, vars, proto, coords)?;
            match op {
                BinOp::Pow => return eval_pow(e, x, b, vars, proto, coords),
                _ => {
                    let y = eval_expr(b, vars, proto, coords)?;
                    match op {
                        BinOp::Add => &x + &y,
                        BinOp::Sub => &x - &y,
                        BinOp::Mul => &x * &y,
                        BinOp::Div => x.div_jet(&y).ok_or_else(|| fault(DomainFault::DivisionByZero, e, coords))?,
                        BinOp::Pow => unreachable!(),
                    }
                }
            }
        }
        Expr::Call(f, a) => {
            let x = eval_expr(a, vars, proto, coords)?;
            match f {
                Func::Sin => x.sin(),
                Func::Cos => x.cos(),
                Func::Tan => x.tan().ok_or_else(|| fault(DomainFault::TanPole, e, coords))?,
                Func::Atan => x.atan(),
                Func::Exp => x.exp(),
                Func::Log => x.ln().ok_or_else(|| fault(DomainFault::LogOfNonPositive, e, coords))?,
                Func::Sqrt => x.sqrt().ok_or_else(|| fault(DomainFault::SqrtOfNonPositive, e, coords))?,
                Func::Sinh => x.sinh(),
                Func::Cosh => x.cosh(),
                Func::Abs => x.abs(),
            }
        }
    })
}

fn eval_pow(e: &Expr, base: Jet, exponent: &Expr, vars: &[Jet], proto: &Jet, coords: &[String]) -> Result<Jet, EvalError> {
    let p = eval_expr(exponent, vars, proto, coords)?;
    if p.is_constant() {
        let c = p.value();
        if c.fract() == 0.0 && c.abs() <= 64.0 {
            return base.powi(c as i32).ok_or_else(|| fault(DomainFault::DivisionByZero, e, coords));
        }
        return base.powf(c).ok_or_else(|| fault(DomainFault::PowerOfNonPositive, e, coords));
    }
    let log = base.ln().ok_or_else(|| fault(DomainFault::PowerOfNonPositive, e, coords))?;
    Ok(log.mul_jet(&p).exp())
}
