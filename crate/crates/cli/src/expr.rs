//! Arithmetic expressions over `x`, `y`, `r`, `theta`.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    X,
    Y,
    R,
    Theta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Abs,
    Sqrt,
    Pow,
}

impl Func {
    fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "abs" => Func::Abs,
            "sqrt" => Func::Sqrt,
            "pow" => Func::Pow,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Abs => "abs",
            Func::Sqrt => "sqrt",
            Func::Pow => "pow",
        }
    }

    pub fn arity(self) -> usize {
        if self == Func::Pow {
            2
        } else {
            1
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("column {column}: {message}")]
pub struct ParseError {
    /// 1-based character column.
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("log of non-positive value {0}")]
    LogDomain(f64),
    #[error("sqrt of negative value {0}")]
    SqrtDomain(f64),
    #[error("pow({0}, {1}) is not real")]
    PowDomain(f64, f64),
    #[error("non-finite result")]
    NonFinite,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
}

fn tokenize(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
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
            let text: String = chars[start..i].iter().collect();
            let v = text
                .parse::<f64>()
                .map_err(|_| ParseError { column: col, message: format!("bad number '{text}'") })?;
            out.push((Tok::Num(v), col));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), col));
        } else {
            let t = match c {
                '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                ',' => Tok::Comma,
                _ => return Err(ParseError { column: col, message: format!("unexpected character '{c}'") }),
            };
            out.push((t, col));
            i += 1;
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn column(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |t| t.1)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError { column: self.column(), message: message.into() })
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<(), ParseError> {
        if self.peek() == Some(&t) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected {what}"))
        }
    }

    fn sum(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.product()?;
        while let Some(Tok::Op(c @ ('+' | '-'))) = self.peek() {
            let op = if *c == '+' { BinOp::Add } else { BinOp::Sub };
            self.pos += 1;
            let rhs = self.product()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn product(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(Tok::Op(c @ ('*' | '/'))) = self.peek() {
            let op = if *c == '*' { BinOp::Mul } else { BinOp::Div };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek() == Some(&Tok::Op('-')) {
            self.pos += 1;
            // A bare literal not raised to a power folds into a negative number.
            if let Some(Tok::Num(v)) = self.peek() {
                let v = *v;
                if self.toks.get(self.pos + 1).map(|t| &t.0) != Some(&Tok::Op('^')) {
                    self.pos += 1;
                    return Ok(Expr::Num(-v));
                }
            }
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.peek() == Some(&Tok::Op('+')) {
            self.pos += 1;
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if self.peek() == Some(&Tok::Op('^')) {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let col = self.column();
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Expr::Num(v))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let e = self.sum()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                let var = match name.as_str() {
                    "x" => Some(Var::X),
                    "y" => Some(Var::Y),
                    "r" => Some(Var::R),
                    "theta" => Some(Var::Theta),
                    _ => None,
                };
                if let Some(v) = var {
                    return Ok(Expr::Var(v));
                }
                match name.as_str() {
                    "pi" => return Ok(Expr::Num(std::f64::consts::PI)),
                    "e" => return Ok(Expr::Num(std::f64::consts::E)),
                    _ => {}
                }
                let Some(f) = Func::from_name(&name) else {
                    return Err(ParseError { column: col, message: format!("unknown name '{name}'") });
                };
                self.expect(Tok::LParen, &format!("'(' after {name}"))?;
                let mut args = vec![self.sum()?];
                while self.peek() == Some(&Tok::Comma) {
                    self.pos += 1;
                    args.push(self.sum()?);
                }
                self.expect(Tok::RParen, "')'")?;
                if args.len() != f.arity() {
                    return Err(ParseError {
                        column: col,
                        message: format!("{name} takes {} argument(s), got {}", f.arity(), args.len()),
                    });
                }
                Ok(Expr::Call(f, args))
            }
            Some(t) => self.err(format!("unexpected {t:?}")),
            None => self.err("unexpected end of expression"),
        }
    }
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr, ParseError> {
        let toks = tokenize(src)?;
        let end = src.chars().count() + 1;
        let mut p = Parser { toks, pos: 0, end };
        let e = p.sum()?;
        if p.pos != p.toks.len() {
            return p.err("trailing input");
        }
        Ok(e)
    }

    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    pub fn eval(&self, x: f64, y: f64) -> Result<f64, EvalError> {
        let v = self.eval_inner(x, y)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite)
        }
    }

    fn eval_inner(&self, x: f64, y: f64) -> Result<f64, EvalError> {
        Ok(match self {
            Expr::Num(v) => *v,
            Expr::Var(Var::X) => x,
            Expr::Var(Var::Y) => y,
            Expr::Var(Var::R) => x.hypot(y),
            Expr::Var(Var::Theta) => y.atan2(x),
            Expr::Neg(e) => -e.eval_inner(x, y)?,
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval_inner(x, y)?, b.eval_inner(x, y)?);
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(EvalError::DivisionByZero);
                        }
                        a / b
                    }
                    BinOp::Pow => pow(a, b)?,
                }
            }
            Expr::Call(f, args) => {
                let a = args[0].eval_inner(x, y)?;
                match f {
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Exp => a.exp(),
                    Func::Log => {
                        if a <= 0.0 {
                            return Err(EvalError::LogDomain(a));
                        }
                        a.ln()
                    }
                    Func::Abs => a.abs(),
                    Func::Sqrt => {
                        if a < 0.0 {
                            return Err(EvalError::SqrtDomain(a));
                        }
                        a.sqrt()
                    }
                    Func::Pow => pow(a, args[1].eval_inner(x, y)?)?,
                }
            }
        })
    }

    /// Whether the expression mentions no variable.
    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Num(_) => true,
            Expr::Var(_) => false,
            Expr::Neg(e) => e.is_constant(),
            Expr::Bin(_, a, b) => a.is_constant() && b.is_constant(),
            Expr::Call(_, args) => args.iter().all(Expr::is_constant),
        }
    }

    /// Symbolic derivative in `x` (`wrt_y = false`) or `y`, with
    /// `∂r/∂x = x/r`, `∂θ/∂x = -y/r²` and the mirrored rules for `y`.
    pub fn derivative(&self, wrt_y: bool) -> Expr {
        use Expr::*;
        use self::Var as V;
        let b = Box::new;
        match self {
            Num(_) => Num(0.0),
            Var(V::X) => Num(if wrt_y { 0.0 } else { 1.0 }),
            Var(V::Y) => Num(if wrt_y { 1.0 } else { 0.0 }),
            Var(V::R) => {
                let top = if wrt_y { Var(V::Y) } else { Var(V::X) };
                Bin(BinOp::Div, b(top), b(Var(V::R)))
            }
            Var(V::Theta) => {
                let r2 = Bin(BinOp::Mul, b(Var(V::R)), b(Var(V::R)));
                if wrt_y {
                    Bin(BinOp::Div, b(Var(V::X)), b(r2))
                } else {
                    Neg(b(Bin(BinOp::Div, b(Var(V::Y)), b(r2))))
                }
            }
            Neg(e) => Neg(b(e.derivative(wrt_y))),
            Bin(op, f, g) => {
                let (df, dg) = (f.derivative(wrt_y), g.derivative(wrt_y));
                match op {
                    BinOp::Add => Bin(BinOp::Add, b(df), b(dg)),
                    BinOp::Sub => Bin(BinOp::Sub, b(df), b(dg)),
                    BinOp::Mul => Bin(
                        BinOp::Add,
                        b(Bin(BinOp::Mul, b(df), g.clone())),
                        b(Bin(BinOp::Mul, f.clone(), b(dg))),
                    ),
                    BinOp::Div => Bin(
                        BinOp::Div,
                        b(Bin(
                            BinOp::Sub,
                            b(Bin(BinOp::Mul, b(df), g.clone())),
                            b(Bin(BinOp::Mul, f.clone(), b(dg))),
                        )),
                        b(Bin(BinOp::Mul, g.clone(), g.clone())),
                    ),
                    BinOp::Pow => pow_derivative(f, g, df, dg),
                }
            }
            Call(func, args) => {
                let a = &args[0];
                let da = a.derivative(wrt_y);
                let outer = match func {
                    Func::Sin => Call(Func::Cos, vec![a.clone()]),
                    Func::Cos => Neg(b(Call(Func::Sin, vec![a.clone()]))),
                    Func::Exp => self.clone(),
                    Func::Log => Bin(BinOp::Div, b(Num(1.0)), b(a.clone())),
                    Func::Abs => Bin(BinOp::Div, b(a.clone()), b(self.clone())),
                    Func::Sqrt => Bin(BinOp::Div, b(Num(0.5)), b(self.clone())),
                    Func::Pow => return pow_derivative(a, &args[1], da, args[1].derivative(wrt_y)),
                };
                Bin(BinOp::Mul, b(outer), b(da)).simplified()
            }
        }
        .simplified()
    }

    /// Removes additions of zero and multiplications by zero or one.
    pub fn simplified(self) -> Expr {
        use Expr::*;
        match self {
            Bin(op, a, b) => {
                let (a, b) = (a.simplified(), b.simplified());
                let zero = |e: &Expr| matches!(e, Num(v) if *v == 0.0);
                let one = |e: &Expr| matches!(e, Num(v) if *v == 1.0);
                match op {
                    BinOp::Add if zero(&a) => b,
                    BinOp::Add | BinOp::Sub if zero(&b) => a,
                    BinOp::Sub if zero(&a) => Neg(Box::new(b)).simplified(),
                    BinOp::Mul if zero(&a) || zero(&b) => Num(0.0),
                    BinOp::Mul if one(&a) => b,
                    BinOp::Mul | BinOp::Div if one(&b) => a,
                    BinOp::Div if zero(&a) => Num(0.0),
                    _ => Bin(op, Box::new(a), Box::new(b)),
                }
            }
            Neg(e) => match e.simplified() {
                Num(v) if v == 0.0 => Num(0.0),
                Neg(inner) => *inner,
                other => Neg(Box::new(other)),
            },
            Call(f, args) => Call(f, args.into_iter().map(Expr::simplified).collect()),
            e => e,
        }
    }
}

fn pow(a: f64, b: f64) -> Result<f64, EvalError> {
    if a < 0.0 && b.fract() != 0.0 {
        return Err(EvalError::PowDomain(a, b));
    }
    if a == 0.0 && b < 0.0 {
        return Err(EvalError::DivisionByZero);
    }
    Ok(a.powf(b))
}

/// `d(f^g) = g f^(g-1) df + f^g log(f) dg`; the log term is dropped for a
/// constant exponent.
fn pow_derivative(f: &Expr, g: &Expr, df: Expr, dg: Expr) -> Expr {
    use Expr::*;
    let b = Box::new;
    let first = Bin(
        BinOp::Mul,
        b(Bin(
            BinOp::Mul,
            b(g.clone()),
            b(Bin(BinOp::Pow, b(f.clone()), b(Bin(BinOp::Sub, b(g.clone()), b(Num(1.0)))))),
        )),
        b(df),
    );
    if g.is_constant() {
        return first.simplified();
    }
    let second = Bin(
        BinOp::Mul,
        b(Bin(
            BinOp::Mul,
            b(Bin(BinOp::Pow, b(f.clone()), b(g.clone()))),
            b(Call(Func::Log, vec![f.clone()])),
        )),
        b(dg),
    );
    Bin(BinOp::Add, b(first), b(second)).simplified()
}

/// Fully parenthesized form; `Expr::parse` of the output rebuilds the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) if *v < 0.0 || (*v == 0.0 && v.is_sign_negative()) => write!(f, "(-{:?})", -v),
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Var(Var::X) => f.write_str("x"),
            Expr::Var(Var::Y) => f.write_str("y"),
            Expr::Var(Var::R) => f.write_str("r"),
            Expr::Var(Var::Theta) => f.write_str("theta"),
            Expr::Neg(e) => write!(f, "(-({e}))"),
            Expr::Bin(op, a, b) => {
                let s = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                };
                write!(f, "({a} {s} {b})")
            }
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_and_associativity() {
        let e = Expr::parse("1 + 2 * 3 ^ 2 ^ 0.5 - -4 / 2").unwrap();
        let v = e.eval(0.0, 0.0).unwrap();
        assert!((v - (1.0 + 2.0 * 3f64.powf(2f64.powf(0.5)) + 2.0)).abs() < 1e-14);
        assert_eq!(Expr::parse("-2^2").unwrap().eval(0.0, 0.0).unwrap(), -4.0);
        assert_eq!(Expr::parse("2 - 3 - 4").unwrap().eval(0.0, 0.0).unwrap(), -5.0);
    }

    #[test]
    fn variables_and_functions() {
        let e = Expr::parse("r * cos(theta) - x + pow(y, 2) + sqrt(abs(-4)) + log(exp(1))").unwrap();
        let v = e.eval(0.3, -0.7).unwrap();
        assert!((v - (0.49 + 2.0 + 1.0)).abs() < 1e-14);
    }

    #[test]
    fn guarded_evaluation() {
        let e = Expr::parse("1/(x-x)").unwrap();
        assert_eq!(e.eval(1.0, 2.0), Err(EvalError::DivisionByZero));
        assert!(matches!(Expr::parse("log(x)").unwrap().eval(-1.0, 0.0), Err(EvalError::LogDomain(_))));
        assert!(matches!(Expr::parse("sqrt(x)").unwrap().eval(-1.0, 0.0), Err(EvalError::SqrtDomain(_))));
        assert!(matches!(Expr::parse("x^0.5").unwrap().eval(-1.0, 0.0), Err(EvalError::PowDomain(..))));
        assert_eq!(Expr::parse("exp(1000)").unwrap().eval(0.0, 0.0), Err(EvalError::NonFinite));
    }

    #[test]
    fn parse_errors_carry_columns() {
        let e = Expr::parse("1 + * 2").unwrap_err();
        assert_eq!(e.column, 5);
        assert_eq!(Expr::parse("sin(x").unwrap_err().column, 6);
        assert_eq!(Expr::parse("foo(1)").unwrap_err().column, 1);
        assert!(Expr::parse("pow(1)").unwrap_err().message.contains("2 argument"));
        assert_eq!(Expr::parse("2 $ 3").unwrap_err().column, 3);
    }

    #[test]
    fn print_parse_round_trip() {
        for s in ["-1", "-(1)", "-x^2", "2^-3", "x - -0.25", "pow(r, 1.5) / (1e-7 + theta)", "-(-(x))", "--2"] {
            let e = Expr::parse(s).unwrap();
            assert_eq!(Expr::parse(&e.to_string()).unwrap(), e, "{s} -> {e}");
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for s in ["x*y + sin(x)", "r", "theta", "(r - 1/r)*cos(theta)", "pow(r, 1.5)", "x^y", "sqrt(1 + x*x)", "log(2 + y)", "abs(x - 0.1)", "exp(-x*y)"] {
            let e = Expr::parse(s).unwrap();
            let (dx, dy) = (e.derivative(false), e.derivative(true));
            let (x, y, h) = (0.6, 0.35, 1e-6);
            let fx = (e.eval(x + h, y).unwrap() - e.eval(x - h, y).unwrap()) / (2.0 * h);
            let fy = (e.eval(x, y + h).unwrap() - e.eval(x, y - h).unwrap()) / (2.0 * h);
            assert!((dx.eval(x, y).unwrap() - fx).abs() < 1e-7, "{s}: d/dx {dx}");
            assert!((dy.eval(x, y).unwrap() - fy).abs() < 1e-7, "{s}: d/dy {dy}");
        }
    }
}
