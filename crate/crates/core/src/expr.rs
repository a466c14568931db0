//! Small expression language for data fields in `x1`, `x2`.
//!
//! Arithmetic, `^` powers, unary minus, the constants `pi` and `e`, and the
//! functions `sin cos tan exp ln log sqrt abs sinh cosh tanh atan`.
//! Expressions can be differentiated symbolically, which is what the
//! manufactured-solution machinery relies on.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("unexpected character '{ch}' at column {col}")]
    UnexpectedChar { ch: char, col: usize },
    #[error("unexpected end of expression")]
    UnexpectedEnd,
    #[error("unexpected token '{tok}' at column {col}")]
    UnexpectedToken { tok: String, col: usize },
    #[error("unknown identifier '{name}' at column {col}")]
    UnknownIdent { name: String, col: usize },
    #[error("function '{name}' takes {expected} argument(s), got {got}")]
    Arity { name: String, expected: usize, got: usize },
    #[error("invalid number '{text}' at column {col}")]
    BadNumber { text: String, col: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Ln,
    Sqrt,
    Abs,
    Sinh,
    Cosh,
    Tanh,
    Atan,
    Sign,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "ln" | "log" => Func::Ln,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "tanh" => Func::Tanh,
            "atan" => Func::Atan,
            "sign" => Func::Sign,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
            Func::Atan => "atan",
            Func::Sign => "sign",
        }
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Tan => x.tan(),
            Func::Exp => x.exp(),
            Func::Ln => x.ln(),
            Func::Sqrt => x.sqrt(),
            Func::Abs => x.abs(),
            Func::Sinh => x.sinh(),
            Func::Cosh => x.cosh(),
            Func::Tanh => x.tanh(),
            Func::Atan => x.atan(),
            Func::Sign => {
                if x > 0.0 {
                    1.0
                } else if x < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Variable index: 0 for `x1`, 1 for `x2`.
pub type Var = usize;

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Add(Arc<Expr>, Arc<Expr>),
    Sub(Arc<Expr>, Arc<Expr>),
    Mul(Arc<Expr>, Arc<Expr>),
    Div(Arc<Expr>, Arc<Expr>),
    Pow(Arc<Expr>, Arc<Expr>),
    Neg(Arc<Expr>),
    Call(Func, Arc<Expr>),
}

use Expr::*;

fn num(v: f64) -> Arc<Expr> {
    Arc::new(Num(v))
}

fn add(a: Arc<Expr>, b: Arc<Expr>) -> Arc<Expr> {
    match (&*a, &*b) {
        (Num(x), Num(y)) => num(x + y),
        (Num(x), _) if *x == 0.0 => b,
        (_, Num(y)) if *y == 0.0 => a,
        _ => Arc::new(Add(a, b)),
    }
}

fn sub(a: Arc<Expr>, b: Arc<Expr>) -> Arc<Expr> {
    match (&*a, &*b) {
        (Num(x), Num(y)) => num(x - y),
        (_, Num(y)) if *y == 0.0 => a,
        (Num(x), _) if *x == 0.0 => neg(b),
        _ => Arc::new(Sub(a, b)),
    }
}

fn mul(a: Arc<Expr>, b: Arc<Expr>) -> Arc<Expr> {
    match (&*a, &*b) {
        (Num(x), Num(y)) => num(x * y),
        (Num(x), _) | (_, Num(x)) if *x == 0.0 => num(0.0),
        (Num(x), _) if *x == 1.0 => b,
        (_, Num(y)) if *y == 1.0 => a,
        _ => Arc::new(Mul(a, b)),
    }
}

fn div(a: Arc<Expr>, b: Arc<Expr>) -> Arc<Expr> {
    match (&*a, &*b) {
        (Num(x), _) if *x == 0.0 => num(0.0),
        (_, Num(y)) if *y == 1.0 => a,
        _ => Arc::new(Div(a, b)),
    }
}

fn neg(a: Arc<Expr>) -> Arc<Expr> {
    match &*a {
        Num(x) => num(-x),
        Neg(inner) => inner.clone(),
        _ => Arc::new(Neg(a)),
    }
}

fn pow(a: Arc<Expr>, b: Arc<Expr>) -> Arc<Expr> {
    match (&*a, &*b) {
        (_, Num(y)) if *y == 0.0 => num(1.0),
        (_, Num(y)) if *y == 1.0 => a,
        (Num(x), Num(y)) => num(x.powf(*y)),
        _ => Arc::new(Pow(a, b)),
    }
}

fn call(f: Func, a: Arc<Expr>) -> Arc<Expr> {
    match &*a {
        Num(x) => num(f.apply(*x)),
        _ => Arc::new(Call(f, a)),
    }
}

impl Expr {
    pub fn parse(text: &str) -> Result<Arc<Expr>, ExprError> {
        let tokens = lex(text)?;
        let mut p = Parser { tokens, pos: 0 };
        let e = p.expr()?;
        if let Some((tok, col)) = p.tokens.get(p.pos) {
            return Err(ExprError::UnexpectedToken { tok: tok.to_string(), col: *col });
        }
        Ok(e)
    }

    pub fn eval(&self, x: [f64; 2]) -> f64 {
        match self {
            Num(v) => *v,
            Var(i) => x[*i],
            Add(a, b) => a.eval(x) + b.eval(x),
            Sub(a, b) => a.eval(x) - b.eval(x),
            Mul(a, b) => a.eval(x) * b.eval(x),
            Div(a, b) => a.eval(x) / b.eval(x),
            Pow(a, b) => {
                let base = a.eval(x);
                match &**b {
                    Num(k) if k.fract() == 0.0 && k.abs() < 64.0 => base.powi(*k as i32),
                    _ => base.powf(b.eval(x)),
                }
            }
            Neg(a) => -a.eval(x),
            Call(f, a) => f.apply(a.eval(x)),
        }
    }

    /// Symbolic partial derivative with respect to `var`.
    pub fn diff(self: &Arc<Self>, var: Var) -> Arc<Expr> {
        match &**self {
            Num(_) => num(0.0),
            Var(i) => num(if *i == var { 1.0 } else { 0.0 }),
            Add(a, b) => add(a.diff(var), b.diff(var)),
            Sub(a, b) => sub(a.diff(var), b.diff(var)),
            Mul(a, b) => add(mul(a.diff(var), b.clone()), mul(a.clone(), b.diff(var))),
            Div(a, b) => div(
                sub(mul(a.diff(var), b.clone()), mul(a.clone(), b.diff(var))),
                mul(b.clone(), b.clone()),
            ),
            Pow(a, b) => {
                if let Num(k) = &**b {
                    // d(a^k) = k a^(k-1) a'
                    mul(mul(num(*k), pow(a.clone(), num(k - 1.0))), a.diff(var))
                } else {
                    // d(a^b) = a^b (b' ln a + b a'/a)
                    mul(
                        self.clone(),
                        add(
                            mul(b.diff(var), call(Func::Ln, a.clone())),
                            div(mul(b.clone(), a.diff(var)), a.clone()),
                        ),
                    )
                }
            }
            Neg(a) => neg(a.diff(var)),
            Call(f, a) => {
                let da = a.diff(var);
                if matches!(&*da, Num(v) if *v == 0.0) {
                    return num(0.0);
                }
                let outer = match f {
                    Func::Sin => call(Func::Cos, a.clone()),
                    Func::Cos => neg(call(Func::Sin, a.clone())),
                    Func::Tan => div(num(1.0), pow(call(Func::Cos, a.clone()), num(2.0))),
                    Func::Exp => self.clone(),
                    Func::Ln => div(num(1.0), a.clone()),
                    Func::Sqrt => div(num(0.5), self.clone()),
                    Func::Abs => call(Func::Sign, a.clone()),
                    Func::Sinh => call(Func::Cosh, a.clone()),
                    Func::Cosh => call(Func::Sinh, a.clone()),
                    Func::Tanh => sub(num(1.0), pow(self.clone(), num(2.0))),
                    Func::Atan => div(num(1.0), add(num(1.0), pow(a.clone(), num(2.0)))),
                    Func::Sign => num(0.0),
                };
                mul(outer, da)
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Num(v) if *v == 0.0)
    }
}

/// Linear combination helpers used when assembling manufactured data.
pub fn lin(terms: &[(f64, &Arc<Expr>)]) -> Arc<Expr> {
    terms
        .iter()
        .fold(num(0.0), |acc, (c, e)| add(acc, mul(num(*c), (*e).clone())))
}

pub fn product(a: &Arc<Expr>, b: &Arc<Expr>) -> Arc<Expr> {
    mul(a.clone(), b.clone())
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Num(v) => {
                if *v < 0.0 {
                    write!(f, "({v:?})")
                } else {
                    write!(f, "{v:?}")
                }
            }
            Var(0) => write!(f, "x1"),
            Var(_) => write!(f, "x2"),
            Add(a, b) => write!(f, "({a} + {b})"),
            Sub(a, b) => write!(f, "({a} - {b})"),
            Mul(a, b) => write!(f, "({a} * {b})"),
            Div(a, b) => write!(f, "({a} / {b})"),
            Pow(a, b) => write!(f, "({a} ^ {b})"),
            Neg(a) => write!(f, "(-{a})"),
            Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(v) => write!(f, "{v}"),
            Tok::Ident(s) => write!(f, "{s}"),
            Tok::Op(c) => write!(f, "{c}"),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ExprError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let s: String = chars[start..i].iter().collect();
            let v = s.parse::<f64>().map_err(|_| ExprError::BadNumber { text: s.clone(), col })?;
            out.push((Tok::Num(v), col));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), col));
        } else if "+-*/^(),".contains(c) {
            out.push((Tok::Op(c), col));
            i += 1;
        } else {
            return Err(ExprError::UnexpectedChar { ch: c, col });
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek_op(&self) -> Option<char> {
        match self.tokens.get(self.pos) {
            Some((Tok::Op(c), _)) => Some(*c),
            _ => None,
        }
    }

    fn expect_op(&mut self, op: char) -> Result<(), ExprError> {
        match self.tokens.get(self.pos) {
            Some((Tok::Op(c), _)) if *c == op => {
                self.pos += 1;
                Ok(())
            }
            Some((t, col)) => Err(ExprError::UnexpectedToken { tok: t.to_string(), col: *col }),
            None => Err(ExprError::UnexpectedEnd),
        }
    }

    fn expr(&mut self) -> Result<Arc<Expr>, ExprError> {
        let mut lhs = self.term()?;
        while let Some(op @ ('+' | '-')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if op == '+' { Arc::new(Add(lhs, rhs)) } else { Arc::new(Sub(lhs, rhs)) };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Arc<Expr>, ExprError> {
        let mut lhs = self.unary()?;
        while let Some(op @ ('*' | '/')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if op == '*' { Arc::new(Mul(lhs, rhs)) } else { Arc::new(Div(lhs, rhs)) };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Arc<Expr>, ExprError> {
        match self.peek_op() {
            Some('-') => {
                self.pos += 1;
                Ok(Arc::new(Neg(self.unary()?)))
            }
            Some('+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Arc<Expr>, ExprError> {
        let base = self.atom()?;
        if self.peek_op() == Some('^') {
            self.pos += 1;
            // right associative, binds tighter than unary minus on the left
            let exp = self.unary()?;
            return Ok(Arc::new(Pow(base, exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Arc<Expr>, ExprError> {
        let (tok, col) = self.tokens.get(self.pos).cloned().ok_or(ExprError::UnexpectedEnd)?;
        self.pos += 1;
        match tok {
            Tok::Num(v) => Ok(num(v)),
            Tok::Op('(') => {
                let e = self.expr()?;
                self.expect_op(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if self.peek_op() == Some('(') {
                    self.pos += 1;
                    let mut args = vec![self.expr()?];
                    while self.peek_op() == Some(',') {
                        self.pos += 1;
                        args.push(self.expr()?);
                    }
                    self.expect_op(')')?;
                    let f = Func::from_name(&name)
                        .ok_or(ExprError::UnknownIdent { name: name.clone(), col })?;
                    if args.len() != 1 {
                        return Err(ExprError::Arity { name, expected: 1, got: args.len() });
                    }
                    return Ok(Arc::new(Call(f, args.pop().expect("one argument"))));
                }
                match name.as_str() {
                    "x1" | "x" => Ok(Arc::new(Var(0))),
                    "x2" | "y" => Ok(Arc::new(Var(1))),
                    "pi" => Ok(num(std::f64::consts::PI)),
                    "e" => Ok(num(std::f64::consts::E)),
                    _ => Err(ExprError::UnknownIdent { name, col }),
                }
            }
            Tok::Op(c) => Err(ExprError::UnexpectedToken { tok: c.to_string(), col }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ev(s: &str, x: [f64; 2]) -> f64 {
        Expr::parse(s).unwrap().eval(x)
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(ev("1 + 2 * 3", [0.0, 0.0]), 7.0);
        assert_eq!(ev("2 ^ 3 ^ 2", [0.0, 0.0]), 512.0);
        assert_eq!(ev("-x1^2", [3.0, 0.0]), -9.0);
        assert_eq!(ev("(1 - x1) / x2", [3.0, 2.0]), -1.0);
        assert!((ev("sin(pi/2) + exp(0) + ln(e)", [0.0, 0.0]) - 3.0).abs() < 1e-15);
        assert_eq!(ev("2e-3 * 1000", [0.0, 0.0]), 2.0);
    }

    #[test]
    fn errors_carry_positions() {
        assert_eq!(
            Expr::parse("x1 + $").unwrap_err(),
            ExprError::UnexpectedChar { ch: '$', col: 6 }
        );
        assert!(matches!(Expr::parse("foo(x1)"), Err(ExprError::UnknownIdent { .. })));
        assert!(matches!(Expr::parse("x1 +"), Err(ExprError::UnexpectedEnd)));
        assert!(matches!(Expr::parse("(x1"), Err(ExprError::UnexpectedEnd)));
        assert!(matches!(Expr::parse("x1 x2"), Err(ExprError::UnexpectedToken { .. })));
        assert!(matches!(Expr::parse("sin(x1, x2)"), Err(ExprError::Arity { .. })));
    }

    #[test]
    fn display_roundtrips() {
        let e = Expr::parse("sin(x1) * x2^3 - exp(-x1/2) + abs(x2)").unwrap();
        let back = Expr::parse(&e.to_string()).unwrap();
        let p = [0.3, -0.7];
        assert_eq!(e.eval(p), back.eval(p));
    }

    proptest! {
        #[test]
        fn symbolic_derivative_matches_central_difference(
            x in -0.9f64..0.9, y in -0.9f64..0.9, idx in 0usize..6
        ) {
            let sources = [
                "x1^3 * x2 - 2 * x1 * x2^2",
                "sin(x1 * x2) + cos(x2)",
                "exp(x1 - x2^2) / (2 + x1)",
                "sqrt(2 + x1^2) * ln(3 + x2)",
                "(1 - x1^2 - x2^2)^2 * (1 + x1)",
                "tanh(x1) + atan(x2) + sinh(x1*x2) - cosh(x2)",
            ];
            let e = Expr::parse(sources[idx]).unwrap();
            let h = 1e-6;
            for var in 0..2 {
                let d = e.diff(var).eval([x, y]);
                let mut xp = [x, y];
                let mut xm = [x, y];
                xp[var] += h;
                xm[var] -= h;
                let fd = (e.eval(xp) - e.eval(xm)) / (2.0 * h);
                prop_assert!((d - fd).abs() < 1e-6 * (1.0 + d.abs()));
            }
        }
    }
}
