//! Recursive-descent parser for the field expression language.
//!
//! ```text
//! expr   := term (("+"|"-") term)*
//! term   := factor (("*"|"/") factor)*
//! factor := "-" factor | power
//! power  := atom ("^" factor)?
//! atom   := NUMBER | IDENT | IDENT "(" expr ")" | "(" expr ")"
//! ```

use super::expr::{BinOp, Constant, Expr, Func};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { offset: usize, name: String },
    #[error("arity mismatch at byte {offset}: {message}")]
    Arity { offset: usize, message: String },
    #[error("invalid coordinate list: {0}")]
    Coordinates(String),
}

impl ParseError {
    pub fn offset(&self) -> Option<usize> {
        match self {
            ParseError::Syntax { offset, .. }
            | ParseError::UnknownIdentifier { offset, .. }
            | ParseError::Arity { offset, .. } => Some(*offset),
            ParseError::Coordinates(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn next(&mut self) -> Result<(usize, Tok), ParseError> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && (bytes[self.pos] as char).is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        if start >= bytes.len() {
            return Ok((start, Tok::End));
        }
        let c = self.src[start..].chars().next().unwrap();
        if c.is_ascii_digit() || (c == '.' && bytes.get(start + 1).is_some_and(|b| b.is_ascii_digit())) {
            let mut end = start;
            while end < bytes.len() && bytes[end].is_ascii_digit() {
                end += 1;
            }
            if end < bytes.len() && bytes[end] == b'.' {
                end += 1;
                while end < bytes.len() && bytes[end].is_ascii_digit() {
                    end += 1;
                }
            }
            // exponent only if digits follow
            if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
                let mut k = end + 1;
                if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                    k += 1;
                }
                if k < bytes.len() && bytes[k].is_ascii_digit() {
                    while k < bytes.len() && bytes[k].is_ascii_digit() {
                        k += 1;
                    }
                    end = k;
                }
            }
            let text = &self.src[start..end];
            let v: f64 = text.parse().map_err(|_| ParseError::Syntax {
                offset: start,
                message: format!("malformed number `{text}`"),
            })?;
            self.pos = end;
            return Ok((start, Tok::Num(v)));
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let mut end = start;
            while end < bytes.len() && (bytes[end].is_ascii_alphanumeric() || bytes[end] == b'_') {
                end += 1;
            }
            self.pos = end;
            return Ok((start, Tok::Ident(self.src[start..end].to_string())));
        }
        self.pos += c.len_utf8();
        let tok = match c {
            '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ',' => Tok::Comma,
            _ => {
                return Err(ParseError::Syntax { offset: start, message: format!("unexpected character `{c}`") })
            }
        };
        Ok((start, tok))
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    peeked: (usize, Tok),
    coords: &'a [String],
    params: &'a [(String, f64)],
}

impl<'a> Parser<'a> {
    fn bump(&mut self) -> Result<(usize, Tok), ParseError> {
        let next = self.lexer.next()?;
        Ok(std::mem::replace(&mut self.peeked, next))
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        while let Tok::Op(op @ ('+' | '-')) = self.peeked.1 {
            self.bump()?;
            let rhs = self.term()?;
            let op = if op == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        while let Tok::Op(op @ ('*' | '/')) = self.peeked.1 {
            self.bump()?;
            let rhs = self.factor()?;
            let op = if op == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if self.peeked.1 == Tok::Op('-') {
            self.bump()?;
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.peeked.1 == Tok::Op('^') {
            self.bump()?;
            let exponent = self.factor()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn expect_rparen(&mut self, open: usize) -> Result<(), ParseError> {
        match self.bump()? {
            (_, Tok::RParen) => Ok(()),
            (off, Tok::Comma) => Err(ParseError::Arity {
                offset: off,
                message: "functions take exactly one argument".into(),
            }),
            (off, _) => Err(ParseError::Syntax {
                offset: off,
                message: format!("expected `)` to close `(` at byte {open}"),
            }),
        }
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let (offset, tok) = self.bump()?;
        match tok {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect_rparen(offset)?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                let is_call = self.peeked.1 == Tok::LParen;
                if let Some(f) = Func::from_name(&name) {
                    if !is_call {
                        return Err(ParseError::Arity {
                            offset,
                            message: format!("function `{name}` needs one parenthesized argument"),
                        });
                    }
                    let (open, _) = self.bump()?;
                    if self.peeked.1 == Tok::RParen {
                        return Err(ParseError::Arity {
                            offset: self.peeked.0,
                            message: format!("function `{name}` needs one argument, got none"),
                        });
                    }
                    let arg = self.expr()?;
                    self.expect_rparen(open)?;
                    return Ok(Expr::Call(f, Box::new(arg)));
                }
                let leaf = if let Some(i) = self.coords.iter().position(|c| *c == name) {
                    Expr::Var(i)
                } else if let Some((_, v)) = self.params.iter().find(|(p, _)| *p == name) {
                    Expr::Param { name: name.clone(), value: *v }
                } else if name == "pi" {
                    Expr::Const(Constant::Pi)
                } else if name == "e" {
                    Expr::Const(Constant::E)
                } else {
                    return Err(ParseError::UnknownIdentifier { offset, name });
                };
                if is_call {
                    return Err(ParseError::Arity {
                        offset,
                        message: format!("`{name}` is not a function"),
                    });
                }
                Ok(leaf)
            }
            Tok::End => Err(ParseError::Syntax { offset, message: "unexpected end of input".into() }),
            other => Err(ParseError::Syntax { offset, message: format!("unexpected token {other:?}") }),
        }
    }
}

/// Parses `source` against the declared chart coordinates.
pub fn parse_expression(source: &str, coords: &[String]) -> Result<Expr, ParseError> {
    parse_with_params(source, coords, &[])
}

/// Parses `source` with coordinates and named constant parameters in scope.
pub fn parse_with_params(source: &str, coords: &[String], params: &[(String, f64)]) -> Result<Expr, ParseError> {
    if coords.is_empty() {
        return Err(ParseError::Coordinates("no coordinates declared".into()));
    }
    for (i, c) in coords.iter().enumerate() {
        if coords[..i].contains(c) {
            return Err(ParseError::Coordinates(format!("duplicate coordinate `{c}`")));
        }
        if Func::from_name(c).is_some() {
            return Err(ParseError::Coordinates(format!("coordinate `{c}` shadows a function name")));
        }
    }
    let mut lexer = Lexer { src: source, pos: 0 };
    let first = lexer.next()?;
    let mut p = Parser { lexer, peeked: first, coords, params };
    let e = p.expr()?;
    match p.peeked {
        (_, Tok::End) => Ok(e),
        (offset, ref t) => Err(ParseError::Syntax { offset, message: format!("trailing input starting with {t:?}") }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xy() -> Vec<String> {
        vec!["x".into(), "y".into()]
    }

    #[test]
    fn unknown_identifier_points_at_name() {
        let err = parse_expression("x + b", &xy()).unwrap_err();
        assert_eq!(err, ParseError::UnknownIdentifier { offset: 4, name: "b".into() });
    }

    #[test]
    fn reads_sum_of_product() {
        let e = parse_expression("2+0.3*sin(x)", &xy()).unwrap();
        let expected = Expr::Bin(
            BinOp::Add,
            Box::new(Expr::Num(2.0)),
            Box::new(Expr::Bin(
                BinOp::Mul,
                Box::new(Expr::Num(0.3)),
                Box::new(Expr::Call(Func::Sin, Box::new(Expr::Var(0)))),
            )),
        );
        assert_eq!(e, expected);
    }

    #[test]
    fn unary_minus_binds_looser_than_power() {
        let e = parse_expression("-x^2", &xy()).unwrap();
        let expected = Expr::Neg(Box::new(Expr::Bin(BinOp::Pow, Box::new(Expr::Var(0)), Box::new(Expr::Num(2.0)))));
        assert_eq!(e, expected);
    }

    #[test]
    fn power_is_right_associative() {
        let e = parse_expression("x^y^2", &xy()).unwrap();
        match e {
            Expr::Bin(BinOp::Pow, a, b) => {
                assert_eq!(*a, Expr::Var(0));
                assert!(matches!(*b, Expr::Bin(BinOp::Pow, ..)));
            }
            _ => panic!("not a power"),
        }
    }

    #[test]
    fn unary_minus_binds_tighter_than_product() {
        // -x*y == (-x)*y
        let e = parse_expression("-x*y", &xy()).unwrap();
        assert!(matches!(e, Expr::Bin(BinOp::Mul, ref a, _) if matches!(**a, Expr::Neg(_))));
    }

    #[test]
    fn arity_errors() {
        assert!(matches!(parse_expression("sin(x, y)", &xy()), Err(ParseError::Arity { .. })));
        assert!(matches!(parse_expression("sin x", &xy()), Err(ParseError::Arity { .. })));
        assert!(matches!(parse_expression("x(y)", &xy()), Err(ParseError::Arity { .. })));
        assert!(matches!(parse_expression("exp()", &xy()), Err(ParseError::Arity { .. })));
    }

    #[test]
    fn syntax_errors_carry_offsets() {
        let err = parse_expression("x + * y", &xy()).unwrap_err();
        assert_eq!(err.offset(), Some(4));
        let err = parse_expression("(x + y", &xy()).unwrap_err();
        assert!(matches!(err, ParseError::Syntax { offset: 6, .. }));
        assert!(parse_expression("x $ y", &xy()).is_err());
    }

    #[test]
    fn numbers_with_exponents() {
        assert_eq!(parse_expression("1.5e-3", &xy()).unwrap(), Expr::Num(1.5e-3));
        // `2e` without digits is a number followed by the constant e
        assert!(parse_expression("2e", &xy()).is_err());
        assert_eq!(parse_expression(".5", &xy()).unwrap(), Expr::Num(0.5));
    }

    #[test]
    fn parameters_and_constants() {
        let params = vec![("a".to_string(), 0.5)];
        let e = parse_with_params("a*pi + e", &xy(), &params).unwrap();
        assert!(matches!(e, Expr::Bin(BinOp::Add, ..)));
    }

    #[test]
    fn rejects_duplicate_coordinates() {
        let coords = vec!["x".to_string(), "x".to_string()];
        assert!(matches!(parse_expression("x", &coords), Err(ParseError::Coordinates(_))));
    }
}
