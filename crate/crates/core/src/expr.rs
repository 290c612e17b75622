//! Closed-form coin entries as functions of the perturbation parameter `eps`.
//!
//! Grammar (whitespace-insensitive, left-associative binary operators):
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' '-'? integer)*
//! atom    := number | 'i' | 'pi' | 'eps' | func '(' sum ')' | '(' sum ')'
//! func    := 'sqrt' | 'exp' | 'cos' | 'sin'
//! ```
//!
//! `^` binds tighter than unary minus, so `-eps^2` is `-(eps^2)`.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sqrt,
    Exp,
    Cos,
    Sin,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sqrt => "sqrt",
            Func::Exp => "exp",
            Func::Cos => "cos",
            Func::Sin => "sin",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    /// Non-negative decimal literal.
    Num(f64),
    I,
    Pi,
    Eps,
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("syntax error at {position}: {message}")]
pub struct SyntaxError {
    pub position: usize,
    pub message: String,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("negative eps {0}")]
    NegativeEps(f64),
    #[error("non-finite result")]
    NonFinite,
}

impl Expr {
    pub fn parse(text: &str) -> Result<Expr, SyntaxError> {
        let tokens = lex(text)?;
        if tokens.is_empty() {
            return Err(SyntaxError {
                position: 0,
                message: "empty expression".into(),
            });
        }
        let mut p = Parser { tokens, pos: 0 };
        let e = p.sum()?;
        match p.peek() {
            None => Ok(e),
            Some((tok, at)) => Err(SyntaxError {
                position: at,
                message: format!("unexpected {tok:?}"),
            }),
        }
    }

    /// A literal for an arbitrary complex constant, in the form the parser
    /// would produce for `re + im*i`.
    pub fn constant(c: Complex64) -> Expr {
        let real = |x: f64| {
            if x.is_sign_negative() && x != 0.0 {
                Expr::Neg(Box::new(Expr::Num(-x)))
            } else {
                Expr::Num(x.abs())
            }
        };
        if c.im == 0.0 {
            return real(c.re);
        }
        let imag = Expr::Bin(BinOp::Mul, Box::new(Expr::Num(c.im.abs())), Box::new(Expr::I));
        let (op, re) = if c.im < 0.0 {
            (BinOp::Sub, real(c.re))
        } else {
            (BinOp::Add, real(c.re))
        };
        Expr::Bin(op, Box::new(re), Box::new(imag))
    }

    pub fn depends_on_eps(&self) -> bool {
        match self {
            Expr::Eps => true,
            Expr::Num(_) | Expr::I | Expr::Pi => false,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => a.depends_on_eps(),
            Expr::Bin(_, a, b) => a.depends_on_eps() || b.depends_on_eps(),
        }
    }

    /// Evaluates at `eps ≥ 0`. The one-sided limit `exp(x/eps) → 0` for real
    /// `x < 0` is applied when `eps = 0`; every other division by zero fails.
    pub fn eval(&self, eps: f64) -> Result<Complex64, EvalError> {
        if eps < 0.0 {
            return Err(EvalError::NegativeEps(eps));
        }
        match self.eval_ext(eps)? {
            Value::Finite(z) if z.re.is_finite() && z.im.is_finite() => Ok(z),
            Value::Finite(_) => Err(EvalError::NonFinite),
            Value::NegInf | Value::PosInf => Err(EvalError::DivisionByZero),
        }
    }

    fn eval_ext(&self, eps: f64) -> Result<Value, EvalError> {
        use Value::*;
        Ok(match self {
            Expr::Num(x) => Finite(Complex64::new(*x, 0.0)),
            Expr::I => Finite(Complex64::i()),
            Expr::Pi => Finite(Complex64::new(PI, 0.0)),
            Expr::Eps => Finite(Complex64::new(eps, 0.0)),
            Expr::Neg(e) => match e.eval_ext(eps)? {
                Finite(z) => Finite(-z),
                NegInf => PosInf,
                PosInf => NegInf,
            },
            Expr::Bin(op, lhs, rhs) => {
                let (a, b) = (lhs.eval_ext(eps)?, rhs.eval_ext(eps)?);
                match (op, a, b) {
                    (BinOp::Add, Finite(x), Finite(y)) => Finite(x + y),
                    (BinOp::Sub, Finite(x), Finite(y)) => Finite(x - y),
                    (BinOp::Mul, Finite(x), Finite(y)) => Finite(x * y),
                    (BinOp::Div, Finite(x), Finite(y)) => {
                        if y == Complex64::new(0.0, 0.0) {
                            // only `x / eps` with eps -> 0+ has a signed limit
                            let is_eps = matches!(**rhs, Expr::Eps);
                            if is_eps && x.im == 0.0 && x.re != 0.0 {
                                if x.re > 0.0 {
                                    PosInf
                                } else {
                                    NegInf
                                }
                            } else {
                                return Err(EvalError::DivisionByZero);
                            }
                        } else {
                            Finite(x / y)
                        }
                    }
                    (BinOp::Mul, Finite(x), inf) | (BinOp::Mul, inf, Finite(x)) => {
                        scale_inf(inf, x)?
                    }
                    (BinOp::Div, inf, Finite(x)) if x.im == 0.0 && x.re != 0.0 => {
                        scale_inf(inf, x)?
                    }
                    _ => return Err(EvalError::DivisionByZero),
                }
            }
            Expr::Pow(base, n) => match base.eval_ext(eps)? {
                Finite(z) => {
                    if *n < 0 && z == Complex64::new(0.0, 0.0) {
                        return Err(EvalError::DivisionByZero);
                    }
                    Finite(z.powi(*n))
                }
                _ => return Err(EvalError::DivisionByZero),
            },
            Expr::Call(f, arg) => match (f, arg.eval_ext(eps)?) {
                (Func::Exp, NegInf) => Finite(Complex64::new(0.0, 0.0)),
                (_, Finite(z)) => Finite(match f {
                    Func::Sqrt => z.sqrt(),
                    Func::Exp => z.exp(),
                    Func::Cos => z.cos(),
                    Func::Sin => z.sin(),
                }),
                _ => return Err(EvalError::DivisionByZero),
            },
        })
    }
}

#[derive(Clone, Copy, Debug)]
enum Value {
    Finite(Complex64),
    NegInf,
    PosInf,
}

fn scale_inf(inf: Value, x: Complex64) -> Result<Value, EvalError> {
    if x.im != 0.0 || x.re == 0.0 {
        return Err(EvalError::DivisionByZero);
    }
    Ok(match (inf, x.re > 0.0) {
        (Value::PosInf, true) | (Value::NegInf, false) => Value::PosInf,
        (Value::NegInf, true) | (Value::PosInf, false) => Value::NegInf,
        (Value::Finite(_), _) => unreachable!(),
    })
}

impl fmt::Display for Expr {
    /// Prints with explicit parentheses around every compound subterm, so the
    /// output re-parses to the same tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(x) => write!(f, "{x}"),
            Expr::I => f.write_str("i"),
            Expr::Pi => f.write_str("pi"),
            Expr::Eps => f.write_str("eps"),
            Expr::Neg(e) => write!(f, "-{}", Wrapped(e)),
            Expr::Bin(op, a, b) => write!(f, "{} {} {}", Wrapped(a), op.symbol(), Wrapped(b)),
            Expr::Pow(b, n) => write!(f, "{}^{n}", Wrapped(b)),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

struct Wrapped<'a>(&'a Expr);

impl fmt::Display for Wrapped<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Expr::Num(_) | Expr::I | Expr::Pi | Expr::Eps | Expr::Call(..) => write!(f, "{}", self.0),
            other => write!(f, "({other})"),
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
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, SyntaxError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() || c == '.' {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            // exponent only when followed by a digit, so `2eps` is not swallowed
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let s = &text[start..i];
            let v: f64 = s.parse().map_err(|_| SyntaxError {
                position: start,
                message: format!("bad number {s:?}"),
            })?;
            out.push((Tok::Num(v), start));
        } else if c.is_ascii_alphabetic() || c == '_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(text[start..i].to_string()), start));
        } else {
            let tok = match c {
                '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                _ => {
                    return Err(SyntaxError {
                        position: start,
                        message: format!("unexpected character {c:?}"),
                    })
                }
            };
            out.push((tok, start));
            i += c.len_utf8();
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<(Tok, usize)> {
        self.tokens.get(self.pos).cloned()
    }

    fn end_position(&self) -> usize {
        self.tokens.last().map(|(_, p)| p + 1).unwrap_or(0)
    }

    fn err<T>(&self, message: &str) -> Result<T, SyntaxError> {
        let position = self
            .tokens
            .get(self.pos)
            .map(|(_, p)| *p)
            .unwrap_or_else(|| self.end_position());
        Err(SyntaxError {
            position,
            message: message.to_string(),
        })
    }

    fn eat_op(&mut self, ops: &[char]) -> Option<char> {
        if let Some((Tok::Op(c), _)) = self.tokens.get(self.pos) {
            if ops.contains(c) {
                let c = *c;
                self.pos += 1;
                return Some(c);
            }
        }
        None
    }

    fn sum(&mut self) -> Result<Expr, SyntaxError> {
        let mut lhs = self.product()?;
        while let Some(c) = self.eat_op(&['+', '-']) {
            let rhs = self.product()?;
            let op = if c == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn product(&mut self) -> Result<Expr, SyntaxError> {
        let mut lhs = self.unary()?;
        while let Some(c) = self.eat_op(&['*', '/']) {
            let rhs = self.unary()?;
            let op = if c == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, SyntaxError> {
        if self.eat_op(&['-']).is_some() {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, SyntaxError> {
        let mut base = self.atom()?;
        while self.eat_op(&['^']).is_some() {
            let negative = self.eat_op(&['-']).is_some();
            match self.peek() {
                Some((Tok::Num(v), at)) => {
                    if v.fract() != 0.0 || v > i32::MAX as f64 {
                        return Err(SyntaxError {
                            position: at,
                            message: "exponent must be an integer literal".into(),
                        });
                    }
                    self.pos += 1;
                    let n = v as i32;
                    base = Expr::Pow(Box::new(base), if negative { -n } else { n });
                }
                _ => return self.err("exponent must be an integer literal"),
            }
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, SyntaxError> {
        let Some((tok, _)) = self.peek() else {
            return self.err("unexpected end of input");
        };
        match tok {
            Tok::Num(v) => {
                self.pos += 1;
                Ok(Expr::Num(v))
            }
            Tok::LParen => {
                self.pos += 1;
                let e = self.sum()?;
                self.expect_rparen()?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.pos += 1;
                let func = match name.as_str() {
                    "i" => return Ok(Expr::I),
                    "pi" => return Ok(Expr::Pi),
                    "eps" => return Ok(Expr::Eps),
                    "sqrt" => Func::Sqrt,
                    "exp" => Func::Exp,
                    "cos" => Func::Cos,
                    "sin" => Func::Sin,
                    _ => {
                        self.pos -= 1;
                        return self.err(&format!("unknown identifier {name:?}"));
                    }
                };
                if !matches!(self.peek(), Some((Tok::LParen, _))) {
                    return self.err("expected '(' after function name");
                }
                self.pos += 1;
                let arg = self.sum()?;
                self.expect_rparen()?;
                Ok(Expr::Call(func, Box::new(arg)))
            }
            Tok::Op(_) | Tok::RParen => self.err("expected a value"),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), SyntaxError> {
        if matches!(self.peek(), Some((Tok::RParen, _))) {
            self.pos += 1;
            Ok(())
        } else {
            self.err("expected ')'")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ev(s: &str, eps: f64) -> Complex64 {
        Expr::parse(s).unwrap().eval(eps).unwrap()
    }

    #[test]
    fn arithmetic_examples() {
        assert!((ev("sqrt(1 - 2*eps^2)", 0.5).re - 0.7071067811865476).abs() < 1e-15);
        let z = ev("i*eps", 0.3);
        assert_eq!(z, Complex64::new(0.0, 0.3));
        assert!((ev("exp(-1/eps)", 0.1).re - 4.5399929762484854e-5).abs() < 1e-18);
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(ev("-2^2", 0.0).re, -4.0);
        assert_eq!(ev("2*3+4", 0.0).re, 10.0);
        assert_eq!(ev("8/4/2", 0.0).re, 1.0);
        assert_eq!(ev("10-3-2", 0.0).re, 5.0);
        assert_eq!(ev("2^-1", 0.0).re, 0.5);
        assert_eq!(ev("(1+1)^3", 0.0).re, 8.0);
        assert_eq!(ev(" 1e-3 * 2 ", 0.0).re, 2e-3);
        assert!((ev("cos(pi)", 0.0).re + 1.0).abs() < 1e-15);
        assert!((ev("sin(pi/2)", 0.0).re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn one_sided_exponential_limit_at_zero() {
        assert_eq!(ev("exp(-1/eps)", 0.0), Complex64::new(0.0, 0.0));
        assert_eq!(ev("exp(-2*3/eps)", 0.0), Complex64::new(0.0, 0.0));
        assert_eq!(ev("sqrt(1 - exp(-2/eps))", 0.0).re, 1.0);
        assert_eq!(
            Expr::parse("exp(1/eps)").unwrap().eval(0.0),
            Err(EvalError::DivisionByZero)
        );
        assert_eq!(
            Expr::parse("1/eps").unwrap().eval(0.0),
            Err(EvalError::DivisionByZero)
        );
        assert_eq!(
            Expr::parse("1/(eps-eps)").unwrap().eval(0.5),
            Err(EvalError::DivisionByZero)
        );
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let e = Expr::parse("1 + * 2").unwrap_err();
        assert_eq!(e.position, 4);
        assert!(Expr::parse("").is_err());
        assert!(Expr::parse("eps^0.5").is_err());
        assert!(Expr::parse("foo(1)").is_err());
        assert!(Expr::parse("sqrt 2").is_err());
        assert!(Expr::parse("(1 + 2").is_err());
        assert_eq!(Expr::parse("1 $ 2").unwrap_err().position, 2);
    }

    #[test]
    fn constant_literal_round_trips() {
        for c in [
            Complex64::new(0.6, -0.8),
            Complex64::new(-0.25, 0.125),
            Complex64::new(3.0, 0.0),
            Complex64::new(-1e-12, 0.0),
        ] {
            let e = Expr::constant(c);
            assert_eq!(e.eval(0.0).unwrap(), c);
            assert_eq!(Expr::parse(&e.to_string()).unwrap(), e);
        }
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0.0f64..100.0).prop_map(Expr::Num),
            Just(Expr::I),
            Just(Expr::Pi),
            Just(Expr::Eps),
        ];
        leaf.prop_recursive(4, 32, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
                (inner.clone(), -3i32..4).prop_map(|(e, n)| Expr::Pow(Box::new(e), n)),
                (
                    prop_oneof![Just(BinOp::Add), Just(BinOp::Sub), Just(BinOp::Mul), Just(BinOp::Div)],
                    inner.clone(),
                    inner.clone()
                )
                    .prop_map(|(op, a, b)| Expr::Bin(op, Box::new(a), Box::new(b))),
                (
                    prop_oneof![Just(Func::Sqrt), Just(Func::Exp), Just(Func::Cos), Just(Func::Sin)],
                    inner
                )
                    .prop_map(|(f, a)| Expr::Call(f, Box::new(a))),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_then_parse_is_identity(e in arb_expr()) {
            let printed = e.to_string();
            let back = Expr::parse(&printed).unwrap();
            prop_assert_eq!(back, e);
        }
    }
}
