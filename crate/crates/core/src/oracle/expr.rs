//! A small expression grammar for custom oracles loaded from config
//! files: +, -, *, /, ^ (and pow), exp, sin, cos, abs, sqrt, numeric
//! literals, and variables x1..xn (x, y, z, w alias the first four).

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ExprError {
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("unknown identifier: {0}")]
    UnknownIdent(String),
    #[error("variable {0} exceeds oracle dimension {1}")]
    VarOutOfRange(String, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Exp(Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Abs(Box<Expr>),
    Sqrt(Box<Expr>),
}

impl Expr {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Var(i) => x[*i],
            Expr::Neg(a) => -a.eval(x),
            Expr::Add(a, b) => a.eval(x) + b.eval(x),
            Expr::Sub(a, b) => a.eval(x) - b.eval(x),
            Expr::Mul(a, b) => a.eval(x) * b.eval(x),
            Expr::Div(a, b) => a.eval(x) / b.eval(x),
            Expr::Pow(a, b) => a.eval(x).powf(b.eval(x)),
            Expr::Exp(a) => a.eval(x).exp(),
            Expr::Sin(a) => a.eval(x).sin(),
            Expr::Cos(a) => a.eval(x).cos(),
            Expr::Abs(a) => a.eval(x).abs(),
            Expr::Sqrt(a) => a.eval(x).sqrt(),
        }
    }
}

pub fn parse_expr(src: &str, dim: usize) -> Result<Expr, ExprError> {
    let mut p = Parser {
        src: src.as_bytes(),
        pos: 0,
        dim,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(ExprError::Parse {
            pos: p.pos,
            msg: "trailing input".into(),
        });
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    dim: usize,
}

impl<'a> Parser<'a> {
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

    fn expect(&mut self, c: u8) -> Result<(), ExprError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(ExprError::Parse {
                pos: self.pos,
                msg: format!("expected '{}'", c as char),
            })
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                let rhs = self.term()?;
                lhs = Expr::Add(Box::new(lhs), Box::new(rhs));
            } else if self.eat(b'-') {
                let rhs = self.term()?;
                lhs = Expr::Sub(Box::new(lhs), Box::new(rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(b'*') {
                let rhs = self.unary()?;
                lhs = Expr::Mul(Box::new(lhs), Box::new(rhs));
            } else if self.eat(b'/') {
                let rhs = self.unary()?;
                lhs = Expr::Div(Box::new(lhs), Box::new(rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.eat(b'-') {
            Ok(Expr::Neg(Box::new(self.unary()?)))
        } else if self.eat(b'+') {
            self.unary()
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if self.eat(b'^') {
            // right-associative; exponent may carry its own sign
            let exp = self.unary()?;
            Ok(Expr::Pow(Box::new(base), Box::new(exp)))
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident(),
            _ => Err(ExprError::Parse {
                pos: self.pos,
                msg: "expected expression".into(),
            }),
        }
    }

    fn number(&mut self) -> Result<Expr, ExprError> {
        let start = self.pos;
        while self.pos < self.src.len() {
            let c = self.src[self.pos];
            if c.is_ascii_digit() || c == b'.' {
                self.pos += 1;
            } else if c == b'e' || c == b'E' {
                // scientific notation, optionally signed
                let mut j = self.pos + 1;
                if j < self.src.len() && (self.src[j] == b'+' || self.src[j] == b'-') {
                    j += 1;
                }
                if j < self.src.len() && self.src[j].is_ascii_digit() {
                    self.pos = j + 1;
                    while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                        self.pos += 1;
                    }
                }
                break;
            } else {
                break;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        text.parse::<f64>().map(Expr::Const).map_err(|_| ExprError::Parse {
            pos: start,
            msg: format!("bad number: {text}"),
        })
    }

    fn ident(&mut self) -> Result<Expr, ExprError> {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap().to_string();
        if self.eat(b'(') {
            let mut args = vec![self.expr()?];
            while self.eat(b',') {
                args.push(self.expr()?);
            }
            self.expect(b')')?;
            return self.call(&name, args, start);
        }
        match name.as_str() {
            "pi" => return Ok(Expr::Const(std::f64::consts::PI)),
            "e" => return Ok(Expr::Const(std::f64::consts::E)),
            _ => {}
        }
        let var = match name.as_str() {
            "x" => Some(0),
            "y" => Some(1),
            "z" => Some(2),
            "w" => Some(3),
            _ => name
                .strip_prefix('x')
                .and_then(|s| s.parse::<usize>().ok())
                .and_then(|i| i.checked_sub(1)),
        };
        match var {
            Some(i) if i < self.dim => Ok(Expr::Var(i)),
            Some(_) => Err(ExprError::VarOutOfRange(name, self.dim)),
            None => Err(ExprError::UnknownIdent(name)),
        }
    }

    fn call(&mut self, name: &str, mut args: Vec<Expr>, pos: usize) -> Result<Expr, ExprError> {
        let arity_err = |want: usize| ExprError::Parse {
            pos,
            msg: format!("{name} takes {want} argument(s)"),
        };
        let one = |args: &mut Vec<Expr>| -> Result<Box<Expr>, ExprError> {
            if args.len() == 1 {
                Ok(Box::new(args.pop().unwrap()))
            } else {
                Err(arity_err(1))
            }
        };
        match name {
            "exp" => Ok(Expr::Exp(one(&mut args)?)),
            "sin" => Ok(Expr::Sin(one(&mut args)?)),
            "cos" => Ok(Expr::Cos(one(&mut args)?)),
            "abs" => Ok(Expr::Abs(one(&mut args)?)),
            "sqrt" => Ok(Expr::Sqrt(one(&mut args)?)),
            "pow" => {
                if args.len() == 2 {
                    let b = args.pop().unwrap();
                    let a = args.pop().unwrap();
                    Ok(Expr::Pow(Box::new(a), Box::new(b)))
                } else {
                    Err(arity_err(2))
                }
            }
            _ => Err(ExprError::UnknownIdent(name.to_string())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_eval_basic() {
        let e = parse_expr("2*x + y^2 - 1", 2).unwrap();
        assert!((e.eval(&[0.5, 3.0]) - (1.0 + 9.0 - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn parse_trefethen_like() {
        let src = "exp(sin(50*x)) + sin(60*exp(y)) + sin(70*sin(x)) \
                   + sin(sin(80*y)) - sin(10*(x+y)) + (x^2 + y^2)/4";
        let e = parse_expr(src, 2).unwrap();
        let want = crate::oracle::trefethen(0.1, -0.2);
        assert!((e.eval(&[0.1, -0.2]) - want).abs() < 1e-12);
    }

    #[test]
    fn functions_and_constants() {
        let e = parse_expr("abs(-pi) + sqrt(4) + pow(2, 3)", 1).unwrap();
        assert!((e.eval(&[0.0]) - (std::f64::consts::PI + 2.0 + 8.0)).abs() < 1e-15);
    }

    #[test]
    fn numbered_variables() {
        let e = parse_expr("x1 + 2*x2 + 3*x3", 3).unwrap();
        assert!((e.eval(&[1.0, 10.0, 100.0]) - 321.0).abs() < 1e-15);
    }

    #[test]
    fn unary_minus_and_precedence() {
        let e = parse_expr("-x^2", 1).unwrap();
        assert_eq!(e.eval(&[3.0]), -9.0);
        let e = parse_expr("2^-1", 1).unwrap();
        assert_eq!(e.eval(&[0.0]), 0.5);
        let e = parse_expr("1 - 2 - 3", 1).unwrap();
        assert_eq!(e.eval(&[0.0]), -4.0);
    }

    #[test]
    fn errors() {
        assert!(parse_expr("x +", 1).is_err());
        assert!(parse_expr("foo(1)", 1).is_err());
        assert!(matches!(
            parse_expr("x3", 2),
            Err(ExprError::VarOutOfRange(..))
        ));
        assert!(parse_expr("1 2", 1).is_err());
    }

    #[test]
    fn scientific_literals() {
        let e = parse_expr("1.5e-3 + 2E2", 1).unwrap();
        assert!((e.eval(&[0.0]) - 200.0015).abs() < 1e-12);
    }
}
