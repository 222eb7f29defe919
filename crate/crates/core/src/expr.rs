//! Component expressions.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | primary
//! primary := number | 'i' | 'w' | 'sqrt' '(' integer ')' | '(' expr ')'
//! number  := digits ('.' digits)? (('e' | 'E') ('+' | '-')? digits)?
//! ```
//!
//! `w` is the primitive cube root of unity `exp(2 pi i / 3)`. Whitespace may
//! separate any two tokens.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use core::fmt;

use thiserror::Error;

use crate::ray::{ComplexScalar, C64};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExprError {
    #[error("parse error at byte {offset}: {message}")]
    Parse {
        offset: usize,
        message: &'static str,
    },
    #[error("division by zero")]
    DivisionByZero,
    #[error("expression evaluates to a non-finite value")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Int(u64),
    Decimal(f64),
    ImagUnit,
    Omega,
    Sqrt(u64),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn eval(&self) -> Result<C64, ExprError> {
        let v = match self {
            Expr::Int(k) => C64::new(*k as f64, 0.0),
            Expr::Decimal(x) => C64::new(*x, 0.0),
            Expr::ImagUnit => C64::new(0.0, 1.0),
            Expr::Omega => C64::new(-0.5, libm::sqrt(3.0) / 2.0),
            Expr::Sqrt(k) => C64::new(libm::sqrt(*k as f64), 0.0),
            Expr::Neg(e) => -e.eval()?,
            Expr::Binary(op, a, b) => {
                let (a, b) = (a.eval()?, b.eval()?);
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b.re == 0.0 && b.im == 0.0 {
                            return Err(ExprError::DivisionByZero);
                        }
                        a / b
                    }
                }
            }
        };
        if v.re.is_finite() && v.im.is_finite() {
            Ok(v)
        } else {
            Err(ExprError::NonFinite)
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary(BinOp::Add | BinOp::Sub, ..) => 1,
            Expr::Binary(BinOp::Mul | BinOp::Div, ..) => 2,
            Expr::Neg(_) => 3,
            _ => 4,
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let wrap = |f: &mut fmt::Formatter<'_>, e: &Expr, paren: bool| {
            if paren {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        };
        match self {
            Expr::Int(k) => write!(f, "{k}"),
            Expr::Decimal(x) => write!(f, "{x:?}"),
            Expr::ImagUnit => f.write_str("i"),
            Expr::Omega => f.write_str("w"),
            Expr::Sqrt(k) => write!(f, "sqrt({k})"),
            Expr::Neg(e) => {
                f.write_str("-")?;
                wrap(f, e, e.precedence() < 3)
            }
            Expr::Binary(op, a, b) => {
                let p = self.precedence();
                let sym = match op {
                    BinOp::Add => " + ",
                    BinOp::Sub => " - ",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                };
                wrap(f, a, a.precedence() < p)?;
                f.write_str(sym)?;
                wrap(f, b, b.precedence() <= p)
            }
        }
    }
}

pub fn parse_expr(text: &str) -> Result<Expr, ExprError> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
    };
    p.skip_ws();
    if p.at_end() {
        return Err(p.error("empty expression"));
    }
    let e = p.expr()?;
    p.skip_ws();
    if !p.at_end() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(e)
}

/// Parse and evaluate, keeping the source text as the scalar's origin.
pub fn parse_component(text: &str) -> Result<ComplexScalar, ExprError> {
    let value = parse_expr(text)?.eval()?;
    ComplexScalar::with_origin(value, text.trim()).map_err(|_| ExprError::NonFinite)
}

/// 17 significant digits in scientific notation; re-parses to the identical double.
pub fn format_decimal(x: f64) -> String {
    if x == 0.0 {
        String::from("0")
    } else {
        format!("{x:.16e}")
    }
}

/// `re + im*i` rendered with [`format_decimal`].
pub fn format_component(z: C64) -> String {
    match (z.re == 0.0, z.im == 0.0) {
        (_, true) => format_decimal(z.re),
        (true, false) => format!("{}*i", format_decimal(z.im)),
        (false, false) => {
            let sign = if z.im < 0.0 { '-' } else { '+' };
            format!(
                "{} {sign} {}*i",
                format_decimal(z.re),
                format_decimal(z.im.abs())
            )
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, message: &'static str) -> ExprError {
        ExprError::Parse {
            offset: self.pos,
            message,
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(b' ' | b'\t')) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat(b'+') {
                BinOp::Add
            } else if self.eat(b'-') {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat(b'*') {
                BinOp::Mul
            } else if self.eat(b'/') {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.eat(b'-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, ExprError> {
        self.skip_ws();
        match self.peek() {
            None => Err(self.error("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    self.skip_ws();
                    return Err(self.error("expected ')'"));
                }
                Ok(e)
            }
            Some(b'0'..=b'9') => self.number(),
            Some(b'i') => self.ident(b"i", Expr::ImagUnit),
            Some(b'w') => self.ident(b"w", Expr::Omega),
            Some(b's') => self.sqrt(),
            Some(_) => Err(self.error("unexpected character")),
        }
    }

    fn ident(&mut self, word: &[u8], e: Expr) -> Result<Expr, ExprError> {
        self.pos += word.len();
        if matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == b'_') {
            return Err(self.error("unknown identifier"));
        }
        Ok(e)
    }

    fn sqrt(&mut self) -> Result<Expr, ExprError> {
        if !self.src[self.pos..].starts_with(b"sqrt") {
            return Err(self.error("unknown identifier"));
        }
        self.pos += 4;
        if !self.eat(b'(') {
            self.skip_ws();
            return Err(self.error("expected '(' after sqrt"));
        }
        self.skip_ws();
        let start = self.pos;
        let k = self.digits()?;
        let k: u64 = k.parse().map_err(|_| ExprError::Parse {
            offset: start,
            message: "integer literal out of range",
        })?;
        if k == 0 {
            return Err(ExprError::Parse {
                offset: start,
                message: "sqrt argument must be a positive integer",
            });
        }
        if !self.eat(b')') {
            self.skip_ws();
            return Err(self.error("expected ')'"));
        }
        Ok(Expr::Sqrt(k))
    }

    fn digits(&mut self) -> Result<&str, ExprError> {
        let start = self.pos;
        while matches!(self.peek(), Some(b'0'..=b'9')) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected digits"));
        }
        Ok(core::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits"))
    }

    fn number(&mut self) -> Result<Expr, ExprError> {
        let start = self.pos;
        self.digits()?;
        let mut decimal = false;
        if self.peek() == Some(b'.') {
            self.pos += 1;
            self.digits()?;
            decimal = true;
        }
        if matches!(self.peek(), Some(b'e' | b'E')) {
            self.pos += 1;
            if matches!(self.peek(), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            self.digits()?;
            decimal = true;
        }
        let text = core::str::from_utf8(&self.src[start..self.pos]).expect("ascii number");
        let out_of_range = ExprError::Parse {
            offset: start,
            message: "numeric literal out of range",
        };
        if decimal {
            let x: f64 = text.parse().map_err(|_| out_of_range.clone())?;
            if !x.is_finite() {
                return Err(out_of_range);
            }
            Ok(Expr::Decimal(x))
        } else {
            text.parse().map(Expr::Int).map_err(|_| out_of_range)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn eval(s: &str) -> C64 {
        parse_expr(s).unwrap().eval().unwrap()
    }

    // literals are the published decimal values, each within one ulp of the exact result
    #[test]
    #[allow(clippy::approx_constant)]
    fn omega_and_friends() {
        let w = eval("w");
        assert_eq!(w.re, -0.5);
        assert!((w.im - 0.8660254037844387).abs() <= 1.2e-16);
        let r = eval("1/sqrt(2)");
        assert!((r.re - 0.7071067811865476).abs() < 1e-15 && r.im == 0.0);
        let w2 = eval("w*w");
        assert!((w2.re + 0.5).abs() < 1e-15 && (w2.im + 0.8660254037844387).abs() < 1e-15);
        let sum = eval("1 + w + w*w");
        assert!(sum.norm() < 1e-15);
        assert_eq!(eval("i*i"), C64::new(-1.0, 0.0));
    }

    #[test]
    fn precedence_and_unary() {
        assert_eq!(eval("1 + 2*3"), C64::new(7.0, 0.0));
        assert_eq!(eval("(1 + 2)*3"), C64::new(9.0, 0.0));
        assert_eq!(eval("8/4/2"), C64::new(1.0, 0.0));
        assert_eq!(eval("1 - 2 - 3"), C64::new(-4.0, 0.0));
        assert_eq!(eval("--2"), C64::new(2.0, 0.0));
        assert_eq!(eval("-2*-3"), C64::new(6.0, 0.0));
    }

    #[test]
    fn decimals_and_exponents() {
        assert_eq!(eval("0.25"), C64::new(0.25, 0.0));
        assert_eq!(eval("2.5e-1"), C64::new(0.25, 0.0));
        assert_eq!(eval("1E2"), C64::new(100.0, 0.0));
        let x = 0.123_456_789_012_345_68_f64;
        assert_eq!(eval(&format_decimal(x)).re, x);
    }

    #[test]
    fn parse_errors_carry_offsets() {
        assert_eq!(
            parse_expr("1 + ").unwrap_err(),
            ExprError::Parse {
                offset: 4,
                message: "unexpected end of input"
            }
        );
        assert!(matches!(
            parse_expr("1 $ 2"),
            Err(ExprError::Parse { offset: 2, .. })
        ));
        assert!(matches!(
            parse_expr("sqrt(0)"),
            Err(ExprError::Parse { offset: 5, .. })
        ));
        assert!(matches!(
            parse_expr("sqrt(x)"),
            Err(ExprError::Parse { .. })
        ));
        assert!(matches!(
            parse_expr("wi"),
            Err(ExprError::Parse { offset: 1, .. })
        ));
        assert!(matches!(
            parse_expr(""),
            Err(ExprError::Parse { offset: 0, .. })
        ));
        assert!(matches!(
            parse_expr("(1"),
            Err(ExprError::Parse { offset: 2, .. })
        ));
        assert!(matches!(parse_expr("1."), Err(ExprError::Parse { .. })));
    }

    #[test]
    fn division_by_zero() {
        assert_eq!(
            parse_expr("1/0").unwrap().eval(),
            Err(ExprError::DivisionByZero)
        );
        assert_eq!(
            parse_expr("1/(w*w + w + 1 - (w*w + w + 1))")
                .unwrap()
                .eval(),
            Err(ExprError::DivisionByZero)
        );
    }

    #[test]
    fn component_keeps_origin() {
        let c = parse_component(" -sqrt(2)*w ").unwrap();
        assert_eq!(c.origin(), Some("-sqrt(2)*w"));
    }

    #[test]
    fn printing_round_trips() {
        for s in [
            "1 - (2 - 3)",
            "-(1 + i)",
            "2/(3*w)",
            "--w",
            "sqrt(3)/2 + 0.5*i",
            "(1/2)/3",
        ] {
            let e = parse_expr(s).unwrap();
            let again = parse_expr(&e.to_string()).unwrap();
            assert_eq!(e, again, "{s} printed as {e}");
        }
    }

    #[test]
    fn component_formatting() {
        let z = C64::new(0.5, -0.25);
        assert_eq!(eval(&format_component(z)), z);
        assert_eq!(format_component(C64::new(0.0, 0.0)), "0");
        assert_eq!(
            eval(&format_component(C64::new(0.0, 2.0))),
            C64::new(0.0, 2.0)
        );
    }
}
