//! Expression trees, printing, substitution and symbolic differentiation.

use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Atan,
    Exp,
    Log,
    Sqrt,
    Sinh,
    Cosh,
    Abs,
}

impl Func {
    pub const ALL: [Func; 10] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Atan,
        Func::Exp,
        Func::Log,
        Func::Sqrt,
        Func::Sinh,
        Func::Cosh,
        Func::Abs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Atan => "atan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Abs => "abs",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Constant {
    Pi,
    E,
}

impl Constant {
    pub fn value(self) -> f64 {
        match self {
            Constant::Pi => std::f64::consts::PI,
            Constant::E => std::f64::consts::E,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Constant::Pi => "pi",
            Constant::E => "e",
        }
    }
}

/// Abstract syntax tree of a scalar expression over chart coordinates.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    /// Chart coordinate by position.
    Var(usize),
    /// Named parameter, bound to a value at parse time.
    Param { name: String, value: f64 },
    Const(Constant),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

// Smart constructors with the handful of foldings that keep generated trees small.
impl Expr {
    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    pub fn var(i: usize) -> Expr {
        Expr::Var(i)
    }

    fn as_num(&self) -> Option<f64> {
        match self {
            Expr::Num(v) => Some(*v),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_num() == Some(0.0)
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        match (a.as_num(), b.as_num()) {
            (Some(x), Some(y)) => Expr::Num(x + y),
            (Some(x), _) if x == 0.0 => b,
            (_, Some(y)) if y == 0.0 => a,
            _ => Expr::Bin(BinOp::Add, Box::new(a), Box::new(b)),
        }
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        match (a.as_num(), b.as_num()) {
            (Some(x), Some(y)) => Expr::Num(x - y),
            (Some(x), _) if x == 0.0 => Expr::neg(b),
            (_, Some(y)) if y == 0.0 => a,
            _ => Expr::Bin(BinOp::Sub, Box::new(a), Box::new(b)),
        }
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        match (a.as_num(), b.as_num()) {
            (Some(x), Some(y)) => Expr::Num(x * y),
            (Some(x), _) | (_, Some(x)) if x == 0.0 => Expr::Num(0.0),
            (Some(x), _) if x == 1.0 => b,
            (_, Some(y)) if y == 1.0 => a,
            _ => Expr::Bin(BinOp::Mul, Box::new(a), Box::new(b)),
        }
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        match (a.as_num(), b.as_num()) {
            (Some(x), _) if x == 0.0 => Expr::Num(0.0),
            (_, Some(y)) if y == 1.0 => a,
            _ => Expr::Bin(BinOp::Div, Box::new(a), Box::new(b)),
        }
    }

    pub fn pow(a: Expr, b: Expr) -> Expr {
        match b.as_num() {
            Some(y) if y == 0.0 => Expr::Num(1.0),
            Some(y) if y == 1.0 => a,
            _ => Expr::Bin(BinOp::Pow, Box::new(a), Box::new(b)),
        }
    }

    pub fn neg(a: Expr) -> Expr {
        match a {
            Expr::Num(v) => Expr::Num(-v),
            Expr::Neg(inner) => *inner,
            other => Expr::Neg(Box::new(other)),
        }
    }

    pub fn call(f: Func, a: Expr) -> Expr {
        Expr::Call(f, Box::new(a))
    }

    pub fn sum(items: impl IntoIterator<Item = Expr>) -> Expr {
        items.into_iter().fold(Expr::Num(0.0), Expr::add)
    }

    pub fn product(items: impl IntoIterator<Item = Expr>) -> Expr {
        items.into_iter().fold(Expr::Num(1.0), Expr::mul)
    }

    /// Largest coordinate index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Var(i) => Some(*i),
            Expr::Num(_) | Expr::Param { .. } | Expr::Const(_) => None,
            Expr::Neg(a) | Expr::Call(_, a) => a.max_var(),
            Expr::Bin(_, a, b) => match (a.max_var(), b.max_var()) {
                (Some(x), Some(y)) => Some(x.max(y)),
                (x, y) => x.or(y),
            },
        }
    }

    pub fn uses_var(&self, v: usize) -> bool {
        match self {
            Expr::Var(i) => *i == v,
            Expr::Num(_) | Expr::Param { .. } | Expr::Const(_) => false,
            Expr::Neg(a) | Expr::Call(_, a) => a.uses_var(v),
            Expr::Bin(_, a, b) => a.uses_var(v) || b.uses_var(v),
        }
    }

    /// Replace every coordinate `Var(i)` by `subs[i]`.
    pub fn substitute(&self, subs: &[Expr]) -> Expr {
        match self {
            Expr::Var(i) => subs[*i].clone(),
            Expr::Num(_) | Expr::Param { .. } | Expr::Const(_) => self.clone(),
            Expr::Neg(a) => Expr::neg(a.substitute(subs)),
            Expr::Call(f, a) => Expr::call(*f, a.substitute(subs)),
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.substitute(subs), b.substitute(subs));
                match op {
                    BinOp::Add => Expr::add(a, b),
                    BinOp::Sub => Expr::sub(a, b),
                    BinOp::Mul => Expr::mul(a, b),
                    BinOp::Div => Expr::div(a, b),
                    BinOp::Pow => Expr::pow(a, b),
                }
            }
        }
    }

    /// Symbolic partial derivative with respect to coordinate `var`.
    pub fn diff(&self, var: usize) -> Expr {
        use Expr as E;
        match self {
            E::Var(i) => E::Num(if *i == var { 1.0 } else { 0.0 }),
            E::Num(_) | E::Param { .. } | E::Const(_) => E::Num(0.0),
            E::Neg(a) => E::neg(a.diff(var)),
            E::Bin(op, a, b) => {
                let (da, db) = (a.diff(var), b.diff(var));
                let (a, b) = ((**a).clone(), (**b).clone());
                match op {
                    BinOp::Add => E::add(da, db),
                    BinOp::Sub => E::sub(da, db),
                    BinOp::Mul => E::add(E::mul(da, b), E::mul(a, db)),
                    BinOp::Div => E::div(
                        E::sub(E::mul(da, b.clone()), E::mul(a, db)),
                        E::pow(b, E::Num(2.0)),
                    ),
                    BinOp::Pow => {
                        if db.is_zero() {
                            // d(a^c) = c a^(c-1) da
                            E::mul(E::mul(b.clone(), E::pow(a, E::sub(b, E::Num(1.0)))), da)
                        } else {
                            // d(a^b) = a^b (db log a + b da / a)
                            let this = E::pow(a.clone(), b.clone());
                            E::mul(
                                this,
                                E::add(
                                    E::mul(db, E::call(Func::Log, a.clone())),
                                    E::div(E::mul(b, da), a),
                                ),
                            )
                        }
                    }
                }
            }
            E::Call(f, a) => {
                let da = a.diff(var);
                if da.is_zero() {
                    return E::Num(0.0);
                }
                let a = (**a).clone();
                let outer = match f {
                    Func::Sin => E::call(Func::Cos, a),
                    Func::Cos => E::neg(E::call(Func::Sin, a)),
                    Func::Tan => E::add(E::Num(1.0), E::pow(E::call(Func::Tan, a), E::Num(2.0))),
                    Func::Atan => E::div(E::Num(1.0), E::add(E::Num(1.0), E::pow(a, E::Num(2.0)))),
                    Func::Exp => E::call(Func::Exp, a),
                    Func::Log => E::div(E::Num(1.0), a),
                    Func::Sqrt => E::div(E::Num(0.5), E::call(Func::Sqrt, a)),
                    Func::Sinh => E::call(Func::Cosh, a),
                    Func::Cosh => E::call(Func::Sinh, a),
                    Func::Abs => E::div(E::call(Func::Abs, a.clone()), a),
                };
                E::mul(outer, da)
            }
        }
    }

    /// Renders the expression with the minimum parentheses needed to reparse
    /// to the same tree under the grammar's precedence rules.
    pub fn display<'a>(&'a self, coords: &'a [String]) -> ExprDisplay<'a> {
        ExprDisplay { expr: self, coords }
    }
}

pub struct ExprDisplay<'a> {
    expr: &'a Expr,
    coords: &'a [String],
}

// precedence levels: 1 = expr (+ -), 2 = term (* /), 3 = factor (unary -), 4 = power, 5 = atom
fn level(e: &Expr) -> u8 {
    match e {
        Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
        Expr::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
        Expr::Neg(_) => 3,
        Expr::Bin(BinOp::Pow, ..) => 4,
        Expr::Num(v) if *v < 0.0 || v.is_sign_negative() => 3,
        _ => 5,
    }
}

fn write_expr(f: &mut fmt::Formatter<'_>, e: &Expr, coords: &[String], min_level: u8) -> fmt::Result {
    if level(e) < min_level {
        f.write_str("(")?;
        write_expr(f, e, coords, 0)?;
        return f.write_str(")");
    }
    match e {
        Expr::Num(v) => {
            if v.is_sign_negative() {
                f.write_str("-")?;
                write_number(f, -v)
            } else {
                write_number(f, *v)
            }
        }
        Expr::Var(i) => f.write_str(&coords[*i]),
        Expr::Param { name, .. } => f.write_str(name),
        Expr::Const(c) => f.write_str(c.name()),
        Expr::Neg(a) => {
            f.write_str("-")?;
            write_expr(f, a, coords, 3)
        }
        Expr::Call(func, a) => {
            write!(f, "{}(", func.name())?;
            write_expr(f, a, coords, 0)?;
            f.write_str(")")
        }
        Expr::Bin(op, a, b) => {
            let (sym, left, right) = match op {
                BinOp::Add => (" + ", 1, 2),
                BinOp::Sub => (" - ", 1, 2),
                BinOp::Mul => ("*", 2, 3),
                BinOp::Div => ("/", 2, 3),
                BinOp::Pow => ("^", 5, 3),
            };
            write_expr(f, a, coords, left)?;
            f.write_str(sym)?;
            write_expr(f, b, coords, right)
        }
    }
}

fn write_number(f: &mut fmt::Formatter<'_>, v: f64) -> fmt::Result {
    // `{:?}` prints the shortest representation that round-trips
    let s = format!("{v:?}");
    f.write_str(&s)
}

impl fmt::Display for ExprDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, self.expr, self.coords, 0)
    }
}
