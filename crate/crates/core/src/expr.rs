//! The small expression language used to describe boundary functions.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := ('-' | '+') unary | power
//! power   := atom ('^' ['-'] integer)?
//! atom    := number | 'z' | 'i' | 'conj' '(' expr ')' | 'abs2' '(' expr ')' | '(' expr ')'
//! ```
//!
//! `i` is the imaginary unit, `conj` complex conjugation and `abs2` the squared
//! modulus. The Unicode minus sign is accepted as `-`.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;
use thiserror::Error;

/// Denominators smaller than this in modulus are treated as poles.
pub const POLE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("parse error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("pole at z = {z}")]
    Pole { z: Complex64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Z,
    Const(Complex64),
    Conj(Box<Expr>),
    Abs2(Box<Expr>),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
}

impl Expr {
    pub fn z() -> Self {
        Expr::Z
    }

    pub fn constant(c: impl Into<Complex64>) -> Self {
        Expr::Const(c.into())
    }

    pub fn conj(self) -> Self {
        Expr::Conj(Box::new(self))
    }

    pub fn abs2(self) -> Self {
        Expr::Abs2(Box::new(self))
    }

    pub fn powi(self, k: i32) -> Self {
        Expr::Pow(Box::new(self), k)
    }

    pub fn parse(src: &str) -> Result<Self, ExprError> {
        Parser::new(src).parse()
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64, ExprError> {
        Ok(match self {
            Expr::Z => z,
            Expr::Const(c) => *c,
            Expr::Conj(e) => e.eval(z)?.conj(),
            Expr::Abs2(e) => Complex64::from(e.eval(z)?.norm_sqr()),
            Expr::Neg(e) => -e.eval(z)?,
            Expr::Add(a, b) => a.eval(z)? + b.eval(z)?,
            Expr::Sub(a, b) => a.eval(z)? - b.eval(z)?,
            Expr::Mul(a, b) => a.eval(z)? * b.eval(z)?,
            Expr::Div(a, b) => {
                let den = b.eval(z)?;
                if den.norm() < POLE_TOLERANCE {
                    return Err(ExprError::Pole { z });
                }
                a.eval(z)? / den
            }
            Expr::Pow(e, k) => {
                let base = e.eval(z)?;
                if *k < 0 && base.norm() < POLE_TOLERANCE {
                    return Err(ExprError::Pole { z });
                }
                base.powi(*k)
            }
        })
    }

    /// True when the expression involves neither `conj` nor `abs2`, so it is
    /// holomorphic away from its poles.
    pub fn is_holomorphic(&self) -> bool {
        match self {
            Expr::Z | Expr::Const(_) => true,
            Expr::Conj(_) | Expr::Abs2(_) => false,
            Expr::Neg(e) | Expr::Pow(e, _) => e.is_holomorphic(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.is_holomorphic() && b.is_holomorphic()
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Z => write!(f, "z"),
            Expr::Const(c) if c.im == 0.0 => write!(f, "{:?}", c.re),
            Expr::Const(c) => write!(f, "({:?}+{:?}*i)", c.re, c.im),
            Expr::Conj(e) => write!(f, "conj({e})"),
            Expr::Abs2(e) => write!(f, "abs2({e})"),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Add(a, b) => write!(f, "({a}+{b})"),
            Expr::Sub(a, b) => write!(f, "({a}-{b})"),
            Expr::Mul(a, b) => write!(f, "({a}*{b})"),
            Expr::Div(a, b) => write!(f, "({a}/{b})"),
            Expr::Pow(e, k) => write!(f, "({e})^{k}"),
        }
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $variant:ident) => {
        impl $trait for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::$variant(Box::new(self), Box::new(rhs))
            }
        }
    };
}

binop!(Add, add, Add);
binop!(Sub, sub, Sub);
binop!(Mul, mul, Mul);
binop!(Div, div, Div);

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::Neg(Box::new(self))
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Op(char),
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    end: usize,
    lex_error: Option<ExprError>,
}

impl Parser {
    fn new(src: &str) -> Self {
        let mut tokens = Vec::new();
        let mut lex_error = None;
        let chars: Vec<(usize, char)> = src.char_indices().collect();
        let mut i = 0;
        while i < chars.len() {
            let (offset, ch) = chars[i];
            if ch.is_whitespace() {
                i += 1;
            } else if ch.is_ascii_digit() || ch == '.' {
                let start = i;
                while i < chars.len() && (chars[i].1.is_ascii_digit() || chars[i].1 == '.') {
                    i += 1;
                }
                // exponent part, e.g. 1e-3
                if i < chars.len() && (chars[i].1 == 'e' || chars[i].1 == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j].1 == '+' || chars[j].1 == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].1.is_ascii_digit() {
                        while j < chars.len() && chars[j].1.is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let text: String = chars[start..i].iter().map(|c| c.1).collect();
                match text.parse::<f64>() {
                    Ok(v) => tokens.push((offset, Token::Num(v))),
                    Err(_) => {
                        lex_error.get_or_insert(ExprError::Parse {
                            offset,
                            message: format!("bad number `{text}`"),
                        });
                    }
                }
            } else if ch.is_ascii_alphabetic() {
                let start = i;
                while i < chars.len() && chars[i].1.is_ascii_alphanumeric() {
                    i += 1;
                }
                let text: String = chars[start..i].iter().map(|c| c.1).collect();
                tokens.push((offset, Token::Ident(text)));
            } else {
                let op = if ch == '\u{2212}' { '-' } else { ch };
                if "+-*/^()".contains(op) {
                    tokens.push((offset, Token::Op(op)));
                } else {
                    lex_error.get_or_insert(ExprError::Parse {
                        offset,
                        message: format!("unexpected character `{ch}`"),
                    });
                }
                i += 1;
            }
        }
        Self { tokens, pos: 0, end: src.len(), lex_error }
    }

    fn parse(mut self) -> Result<Expr, ExprError> {
        if let Some(e) = self.lex_error.take() {
            return Err(e);
        }
        let e = self.expr()?;
        if self.pos < self.tokens.len() {
            return Err(self.error("trailing input"));
        }
        Ok(e)
    }

    fn error(&self, message: &str) -> ExprError {
        let offset = self.tokens.get(self.pos).map_or(self.end, |t| t.0);
        ExprError::Parse { offset, message: message.to_string() }
    }

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|t| &t.1)
    }

    fn eat_op(&mut self, op: char) -> bool {
        if self.peek() == Some(&Token::Op(op)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat_op('+') {
                lhs = lhs + self.term()?;
            } else if self.eat_op('-') {
                lhs = lhs - self.term()?;
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat_op('*') {
                lhs = lhs * self.unary()?;
            } else if self.eat_op('/') {
                lhs = lhs / self.unary()?;
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.eat_op('-') {
            Ok(-self.unary()?)
        } else if self.eat_op('+') {
            self.unary()
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if !self.eat_op('^') {
            return Ok(base);
        }
        let paren = self.eat_op('(');
        let negative = self.eat_op('-');
        let k = match self.peek() {
            Some(Token::Num(v)) if v.fract() == 0.0 && v.abs() <= 1024.0 => *v as i32,
            _ => return Err(self.error("exponent must be an integer")),
        };
        self.pos += 1;
        if paren && !self.eat_op(')') {
            return Err(self.error("expected `)`"));
        }
        Ok(base.powi(if negative { -k } else { k }))
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        let token = self.peek().cloned().ok_or_else(|| self.error("unexpected end of input"))?;
        self.pos += 1;
        match token {
            Token::Num(v) => Ok(Expr::constant(v)),
            Token::Op('(') => {
                let e = self.expr()?;
                if !self.eat_op(')') {
                    return Err(self.error("expected `)`"));
                }
                Ok(e)
            }
            Token::Ident(name) => match name.as_str() {
                "z" => Ok(Expr::Z),
                "i" => Ok(Expr::constant(Complex64::i())),
                "conj" | "abs2" => {
                    if !self.eat_op('(') {
                        return Err(self.error("expected `(`"));
                    }
                    let e = self.expr()?;
                    if !self.eat_op(')') {
                        return Err(self.error("expected `)`"));
                    }
                    Ok(if name == "conj" { e.conj() } else { e.abs2() })
                }
                _ => {
                    self.pos -= 1;
                    Err(self.error(&format!("unknown identifier `{name}`")))
                }
            },
            Token::Op(_) => {
                self.pos -= 1;
                Err(self.error("unexpected operator"))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn eval(src: &str, z: Complex64) -> Complex64 {
        Expr::parse(src).unwrap().eval(z).unwrap()
    }

    #[test]
    fn precedence_and_associativity() {
        let z = c(0.3, -0.7);
        assert!((eval("z^2 - z - 0.25", z) - (z * z - z - 0.25)).norm() < 1e-15);
        assert!((eval("1 - 2 - 3", z) - c(-4.0, 0.0)).norm() < 1e-15);
        assert!((eval("8 / 2 / 2", z) - c(2.0, 0.0)).norm() < 1e-15);
        assert!((eval("-z^2", z) + z * z).norm() < 1e-15);
        assert!((eval("2*i*z", z) - c(0.0, 2.0) * z).norm() < 1e-15);
        assert!((eval("z^-2", z) - 1.0 / (z * z)).norm() < 1e-13);
        assert!((eval("z^(-1)", z) - 1.0 / z).norm() < 1e-13);
        assert!((eval("1e-1*z", z) - 0.1 * z).norm() < 1e-15);
    }

    #[test]
    fn builtins() {
        let z = c(0.6, 0.8);
        assert!((eval("conj(z)", z) - z.conj()).norm() < 1e-15);
        assert!((eval("abs2(z) - 0.5", z) - c(0.5, 0.0)).norm() < 1e-15);
        assert!((eval("conj(z)^2", z) - z.conj() * z.conj()).norm() < 1e-15);
        assert!((eval("z\u{2212}1", z) - (z - 1.0)).norm() < 1e-15);
        assert!(Expr::parse("(z-2)^-1").unwrap().is_holomorphic());
        assert!(!Expr::parse("z*conj(z)").unwrap().is_holomorphic());
    }

    #[test]
    fn poles_are_reported() {
        let e = Expr::parse("1/(z-1)").unwrap();
        assert_eq!(e.eval(c(1.0, 0.0)), Err(ExprError::Pole { z: c(1.0, 0.0) }));
        assert!(Expr::parse("z^-1").unwrap().eval(c(0.0, 0.0)).is_err());
    }

    #[test]
    fn parse_errors() {
        for bad in ["", "z +", "foo(z)", "z^1.5", "(z", "z)", "conj z", "z # 2", "1..2"] {
            assert!(matches!(Expr::parse(bad), Err(ExprError::Parse { .. })), "{bad}");
        }
    }

    proptest! {
        #[test]
        fn display_reparses_to_same_values(re in -2.0f64..2.0, im in -2.0f64..2.0) {
            let src = "conj(z)^2 + 3*z/(z-2.5) - abs2(z)*i + z^-1";
            let e = Expr::parse(src).unwrap();
            let again = Expr::parse(&e.to_string()).unwrap();
            let z = c(re, im);
            if let (Ok(a), Ok(b)) = (e.eval(z), again.eval(z)) {
                prop_assert!((a - b).norm() <= 1e-12 * (1.0 + a.norm()));
            }
        }
    }
}
