//! Expression language for scalar fields.
//!
//! ```text
//! expr   = term { ("+" | "-") term } ;
//! term   = unary { ("*" | "/") unary } ;
//! unary  = "-" unary | power ;
//! power  = atom [ "^" unary ] ;
//! atom   = number | constant | variable | func "(" expr ")" | "(" expr ")" ;
//! ```
//!
//! Variables are `x y t s r`, constants `pi e`. There is no implicit
//! multiplication and `^` is the only power operator.

use std::fmt;

use thiserror::Error;

use crate::fields::{ScalarField1, ScalarField2, ScalarField3, Sym2, Vec2};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExprError {
    #[error("syntax error at byte {position}: expected {expected}")]
    Syntax { position: usize, expected: String },
    #[error("variable `{0}` is not available in this context")]
    UnexpectedVariable(Var),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    X,
    Y,
    T,
    S,
    R,
}

impl Var {
    pub const ALL: [Var; 5] = [Var::X, Var::Y, Var::T, Var::S, Var::R];

    fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::Y => "y",
            Var::T => "t",
            Var::S => "s",
            Var::R => "r",
        }
    }

    fn from_name(n: &str) -> Option<Var> {
        Var::ALL.into_iter().find(|v| v.name() == n)
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Constant {
    Pi,
    E,
}

impl Constant {
    fn value(self) -> f64 {
        match self {
            Constant::Pi => std::f64::consts::PI,
            Constant::E => std::f64::consts::E,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Tanh,
    Atan,
    Atanh,
    Sqrt,
    Abs,
    Exp,
    Log,
    /// Derivative of `abs`; `sign(0) = 0`.
    Sign,
}

impl Func {
    pub const ALL: [Func; 11] = [Func::Sin, Func::Cos, Func::Tan, Func::Tanh, Func::Atan, Func::Atanh, Func::Sqrt, Func::Abs, Func::Exp, Func::Log, Func::Sign];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Tanh => "tanh",
            Func::Atan => "atan",
            Func::Atanh => "atanh",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sign => "sign",
        }
    }

    fn from_name(n: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == n)
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Tan => v.tan(),
            Func::Tanh => v.tanh(),
            Func::Atan => v.atan(),
            Func::Atanh => v.atanh(),
            Func::Sqrt => v.sqrt(),
            Func::Abs => v.abs(),
            Func::Exp => v.exp(),
            Func::Log => v.ln(),
            Func::Sign => {
                if v > 0.0 {
                    1.0
                } else if v < 0.0 {
                    -1.0
                } else if v == 0.0 {
                    0.0
                } else {
                    f64::NAN
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

/// Syntax tree. Literals are non-negative; negation is always explicit.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Const(Constant),
    Var(Var),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

/// Values of the five variables.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Env([f64; 5]);

impl Env {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(mut self, v: Var, value: f64) -> Self {
        self.0[v.index()] = value;
        self
    }

    pub fn xy(x: f64, y: f64) -> Self {
        Self::new().set(Var::X, x).set(Var::Y, y)
    }

    pub fn xyt(x: f64, y: f64, t: f64) -> Self {
        Self::xy(x, y).set(Var::T, t)
    }

    pub fn get(&self, v: Var) -> f64 {
        self.0[v.index()]
    }
}

pub fn parse(src: &str) -> Result<Expr, ExprError> {
    let mut p = Parser { src: src.as_bytes(), pos: 0 };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.err("operator or end of input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, expected: &str) -> ExprError {
        ExprError::Syntax { position: self.pos, expected: expected.to_string() }
    }

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

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(b'+') => BinOp::Add,
                Some(b'-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(b'*') => BinOp::Mul,
                Some(b'/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.eat(b'-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if self.eat(b'^') {
            let exp = self.unary()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.err("`)`"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.ident(),
            _ => Err(self.err("number, identifier or `(`")),
        }
    }

    fn number(&mut self) -> Result<Expr, ExprError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
            p.pos - s
        };
        let mut n = digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            n += digits(self);
        }
        if n == 0 {
            self.pos = start;
            return Err(self.err("digits"));
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                // Not an exponent; leave `e` for the next token.
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii slice");
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Expr::Num(v)),
            _ => {
                self.pos = start;
                Err(self.err("finite number literal"))
            }
        }
    }

    fn ident(&mut self) -> Result<Expr, ExprError> {
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii slice");
        if let Some(f) = Func::from_name(name) {
            if !self.eat(b'(') {
                return Err(self.err("`(` after function name"));
            }
            let arg = self.expr()?;
            if !self.eat(b')') {
                return Err(self.err("`)`"));
            }
            return Ok(Expr::Call(f, Box::new(arg)));
        }
        if let Some(v) = Var::from_name(name) {
            return Ok(Expr::Var(v));
        }
        match name {
            "pi" => Ok(Expr::Const(Constant::Pi)),
            "e" => Ok(Expr::Const(Constant::E)),
            _ => {
                self.pos = start;
                Err(self.err("variable (x, y, t, s, r), constant (pi, e) or function"))
            }
        }
    }
}

// Printing precedence levels.
const P_ADD: u8 = 1;
const P_MUL: u8 = 2;
const P_UNARY: u8 = 3;
const P_ATOM: u8 = 5;

impl Expr {
    fn prec(&self) -> u8 {
        match self {
            Expr::Bin(BinOp::Add | BinOp::Sub, ..) => P_ADD,
            Expr::Bin(BinOp::Mul | BinOp::Div, ..) => P_MUL,
            Expr::Neg(_) => P_UNARY,
            Expr::Bin(BinOp::Pow, ..) => 4,
            _ => P_ATOM,
        }
    }

    fn write_at(&self, min: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.prec() < min {
            f.write_str("(")?;
            self.write_at(0, f)?;
            return f.write_str(")");
        }
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Const(Constant::Pi) => f.write_str("pi"),
            Expr::Const(Constant::E) => f.write_str("e"),
            Expr::Var(v) => f.write_str(v.name()),
            Expr::Neg(e) => {
                f.write_str("-")?;
                e.write_at(P_UNARY, f)
            }
            Expr::Call(func, a) => {
                write!(f, "{}(", func.name())?;
                a.write_at(0, f)?;
                f.write_str(")")
            }
            Expr::Bin(op, l, r) => {
                let (sym, lmin, rmin) = match op {
                    BinOp::Add => (" + ", P_ADD, P_MUL),
                    BinOp::Sub => (" - ", P_ADD, P_MUL),
                    BinOp::Mul => ("*", P_MUL, P_UNARY),
                    BinOp::Div => ("/", P_MUL, P_UNARY),
                    BinOp::Pow => ("^", P_ATOM, P_UNARY),
                };
                l.write_at(lmin, f)?;
                f.write_str(sym)?;
                r.write_at(rmin, f)
            }
        }
    }

    pub fn eval(&self, env: &Env) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Const(c) => c.value(),
            Expr::Var(v) => env.get(*v),
            Expr::Neg(e) => -e.eval(env),
            Expr::Call(func, a) => func.apply(a.eval(env)),
            Expr::Bin(op, l, r) => {
                let (a, b) = (l.eval(env), r.eval(env));
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Pow => a.powf(b),
                }
            }
        }
    }

    pub fn depends_on(&self, var: Var) -> bool {
        match self {
            Expr::Num(_) | Expr::Const(_) => false,
            Expr::Var(v) => *v == var,
            Expr::Neg(e) | Expr::Call(_, e) => e.depends_on(var),
            Expr::Bin(_, l, r) => l.depends_on(var) || r.depends_on(var),
        }
    }

    /// Variables that occur in the expression, in canonical order.
    pub fn variables(&self) -> Vec<Var> {
        Var::ALL.into_iter().filter(|v| self.depends_on(*v)).collect()
    }

    /// Symbolic derivative with light constant folding.
    pub fn differentiate(&self, var: Var) -> Expr {
        use Expr::*;
        if !self.depends_on(var) {
            return Num(0.0);
        }
        match self {
            Num(_) | Const(_) => Num(0.0),
            Var(v) => Num(if *v == var { 1.0 } else { 0.0 }),
            Neg(e) => neg(e.differentiate(var)),
            Bin(BinOp::Add, l, r) => add(l.differentiate(var), r.differentiate(var)),
            Bin(BinOp::Sub, l, r) => sub(l.differentiate(var), r.differentiate(var)),
            Bin(BinOp::Mul, l, r) => add(mul(l.differentiate(var), (**r).clone()), mul((**l).clone(), r.differentiate(var))),
            Bin(BinOp::Div, l, r) => {
                let (dl, dr) = (l.differentiate(var), r.differentiate(var));
                if !r.depends_on(var) {
                    return div(dl, (**r).clone());
                }
                div(sub(mul(dl, (**r).clone()), mul((**l).clone(), dr)), pow((**r).clone(), Num(2.0)))
            }
            Bin(BinOp::Pow, a, b) => {
                if !b.depends_on(var) {
                    // b a^(b-1) a'
                    let lowered = sub((**b).clone(), Num(1.0));
                    return mul(mul((**b).clone(), pow((**a).clone(), lowered)), a.differentiate(var));
                }
                let ln_a = call(Func::Log, (**a).clone());
                if !a.depends_on(var) {
                    return mul(mul(self.clone(), ln_a), b.differentiate(var));
                }
                // a^b (b' ln a + b a' / a)
                let inner = add(mul(b.differentiate(var), ln_a), div(mul((**b).clone(), a.differentiate(var)), (**a).clone()));
                mul(self.clone(), inner)
            }
            Call(func, a) => {
                let u = (**a).clone();
                let du = a.differentiate(var);
                let outer = match func {
                    Func::Sin => call(Func::Cos, u),
                    Func::Cos => neg(call(Func::Sin, u)),
                    Func::Tan => add(Num(1.0), pow(call(Func::Tan, u), Num(2.0))),
                    Func::Tanh => sub(Num(1.0), pow(call(Func::Tanh, u), Num(2.0))),
                    Func::Atan => div(Num(1.0), add(Num(1.0), pow(u, Num(2.0)))),
                    Func::Atanh => div(Num(1.0), sub(Num(1.0), pow(u, Num(2.0)))),
                    Func::Sqrt => div(Num(1.0), mul(Num(2.0), call(Func::Sqrt, u))),
                    Func::Abs => call(Func::Sign, u),
                    Func::Exp => call(Func::Exp, u),
                    Func::Log => div(Num(1.0), u),
                    Func::Sign => Num(0.0),
                };
                mul(outer, du)
            }
        }
    }

    fn need_only(&self, allowed: &[Var]) -> Result<(), ExprError> {
        match self.variables().into_iter().find(|v| !allowed.contains(v)) {
            Some(v) => Err(ExprError::UnexpectedVariable(v)),
            None => Ok(()),
        }
    }

    /// Function of `var` with symbolic first and second derivatives.
    pub fn to_field1(&self, var: Var) -> Result<ScalarField1, ExprError> {
        self.need_only(&[var])?;
        let f = self.clone();
        let d1 = self.differentiate(var);
        let d2 = d1.differentiate(var);
        let env = move |v: f64| Env::new().set(var, v);
        Ok(ScalarField1::new(move |v| f.eval(&env(v))).with_d1(move |v| d1.eval(&env(v))).with_d2(move |v| d2.eval(&env(v))))
    }

    /// Field of `(x, y)` with symbolic gradient and Hessian.
    pub fn to_field2(&self) -> Result<ScalarField2, ExprError> {
        self.need_only(&[Var::X, Var::Y])?;
        let f = self.clone();
        let fx = self.differentiate(Var::X);
        let fy = self.differentiate(Var::Y);
        let fxx = fx.differentiate(Var::X);
        let fxy = fx.differentiate(Var::Y);
        let fyy = fy.differentiate(Var::Y);
        let env = |p: Vec2| Env::xy(p.x, p.y);
        Ok(ScalarField2::new(move |p| f.eval(&env(p)))
            .with_grad(move |p| {
                let e = env(p);
                Vec2::new(fx.eval(&e), fy.eval(&e))
            })
            .with_hess(move |p| {
                let e = env(p);
                Sym2 { xx: fxx.eval(&e), xy: fxy.eval(&e), yy: fyy.eval(&e) }
            }))
    }

    /// Field of `(x, y, t)` with symbolic gradient and Hessian.
    pub fn to_field3(&self) -> Result<ScalarField3, ExprError> {
        self.need_only(&[Var::X, Var::Y, Var::T])?;
        let vars = [Var::X, Var::Y, Var::T];
        let f = self.clone();
        let g: Vec<Expr> = vars.iter().map(|v| self.differentiate(*v)).collect();
        let h: Vec<Vec<Expr>> = g.iter().map(|gi| vars.iter().map(|v| gi.differentiate(*v)).collect()).collect();
        let g2 = g.clone();
        let env = |p: [f64; 3]| Env::xyt(p[0], p[1], p[2]);
        Ok(ScalarField3::new(move |p| f.eval(&env(p)))
            .with_grad(move |p| {
                let e = env(p);
                [g2[0].eval(&e), g2[1].eval(&e), g2[2].eval(&e)]
            })
            .with_hess(move |p| {
                let e = env(p);
                let mut out = [[0.0; 3]; 3];
                for i in 0..3 {
                    for j in 0..3 {
                        out[i][j] = h[i][j].eval(&e);
                    }
                }
                out
            }))
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_at(0, f)
    }
}

impl std::str::FromStr for Expr {
    type Err = ExprError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

fn as_num(e: &Expr) -> Option<f64> {
    match e {
        Expr::Num(v) => Some(*v),
        Expr::Neg(inner) => as_num(inner).map(|v| -v),
        _ => None,
    }
}

/// Literal for any finite value, keeping literals non-negative.
pub fn num(v: f64) -> Expr {
    if v < 0.0 {
        Expr::Neg(Box::new(Expr::Num(-v)))
    } else {
        Expr::Num(v)
    }
}

fn neg(e: Expr) -> Expr {
    match as_num(&e) {
        Some(v) => num(-v),
        None => match e {
            Expr::Neg(inner) => *inner,
            other => Expr::Neg(Box::new(other)),
        },
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    match (as_num(&a), as_num(&b)) {
        (Some(x), Some(y)) => num(x + y),
        (Some(0.0), _) => b,
        (_, Some(0.0)) => a,
        _ => Expr::Bin(BinOp::Add, Box::new(a), Box::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (as_num(&a), as_num(&b)) {
        (Some(x), Some(y)) => num(x - y),
        (Some(0.0), _) => neg(b),
        (_, Some(0.0)) => a,
        _ => Expr::Bin(BinOp::Sub, Box::new(a), Box::new(b)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (as_num(&a), as_num(&b)) {
        (Some(x), Some(y)) => num(x * y),
        (Some(0.0), _) | (_, Some(0.0)) => Expr::Num(0.0),
        (Some(1.0), _) => b,
        (_, Some(1.0)) => a,
        (Some(-1.0), _) => neg(b),
        (_, Some(-1.0)) => neg(a),
        _ => Expr::Bin(BinOp::Mul, Box::new(a), Box::new(b)),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (as_num(&a), as_num(&b)) {
        (Some(0.0), _) => Expr::Num(0.0),
        (_, Some(1.0)) => a,
        _ => Expr::Bin(BinOp::Div, Box::new(a), Box::new(b)),
    }
}

fn pow(a: Expr, b: Expr) -> Expr {
    match as_num(&b) {
        Some(1.0) => a,
        Some(0.0) => Expr::Num(1.0),
        _ => Expr::Bin(BinOp::Pow, Box::new(a), Box::new(b)),
    }
}

fn call(f: Func, a: Expr) -> Expr {
    Expr::Call(f, Box::new(a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ev(src: &str, env: Env) -> f64 {
        parse(src).unwrap().eval(&env)
    }

    #[test]
    fn parse_and_eval() {
        assert_eq!(ev("x*y/2", Env::xy(3.0, 4.0)), 6.0);
        assert_eq!(ev("2^3^2", Env::new()), 512.0);
        assert_eq!(ev("-x^2", Env::xy(3.0, 0.0)), -9.0);
        assert_eq!(ev("2^-1", Env::new()), 0.5);
        assert_eq!(ev("1 - 2 - 3", Env::new()), -4.0);
        assert_eq!(ev("8/4/2", Env::new()), 1.0);
        assert_eq!(ev("1.5e2 + .5", Env::new()), 150.5);
        assert!((ev("pi", Env::new()) - std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn counterexample_ast() {
        let e = parse("-x*tan(tanh(t))").unwrap();
        let expected = Expr::Bin(
            BinOp::Mul,
            Box::new(Expr::Neg(Box::new(Expr::Var(Var::X)))),
            Box::new(Expr::Call(Func::Tan, Box::new(Expr::Call(Func::Tanh, Box::new(Expr::Var(Var::T)))))),
        );
        assert_eq!(e, expected);
        let env = Env::xyt(2.0, 0.0, 0.3);
        assert_eq!(e.eval(&env), -2.0 * 0.3f64.tanh().tan());
    }

    #[test]
    fn syntax_errors_carry_positions() {
        assert_eq!(parse("2**x").unwrap_err(), ExprError::Syntax { position: 2, expected: "number, identifier or `(`".into() });
        assert!(matches!(parse("2x"), Err(ExprError::Syntax { position: 1, .. })));
        assert!(matches!(parse("foo(1)"), Err(ExprError::Syntax { position: 0, .. })));
        assert!(matches!(parse("sin x"), Err(ExprError::Syntax { position: 4, .. })));
        assert!(matches!(parse("(1+2"), Err(ExprError::Syntax { position: 4, .. })));
        assert!(matches!(parse(""), Err(ExprError::Syntax { position: 0, .. })));
        assert!(matches!(parse("1e999"), Err(ExprError::Syntax { position: 0, .. })));
    }

    #[test]
    fn derivative_examples() {
        let d = parse("x^2 + y").unwrap().differentiate(Var::X);
        for x in [-1.5, 0.0, 2.0] {
            assert_eq!(d.eval(&Env::xy(x, 7.0)), 2.0 * x);
        }
        let d = parse("tanh(t)").unwrap().differentiate(Var::T);
        assert_eq!(d.eval(&Env::new()), 1.0);
        let d = parse("atanh(s)").unwrap().differentiate(Var::S);
        assert!((d.eval(&Env::new().set(Var::S, 0.5)) - 4.0 / 3.0).abs() < 1e-12);
        let d = parse("abs(s)").unwrap().differentiate(Var::S);
        assert_eq!(d.eval(&Env::new()), 0.0);
        assert_eq!(d.eval(&Env::new().set(Var::S, -2.0)), -1.0);
    }

    #[test]
    fn fields_from_expressions() {
        let f = parse("x*y/2 + x^2").unwrap().to_field2().unwrap();
        let p = Vec2::new(1.0, 2.0);
        assert_eq!(f.grad_unchecked(p), Vec2::new(3.0, 0.5));
        let h = f.hess_unchecked(p);
        assert_eq!((h.xx, h.xy, h.yy), (2.0, 0.5, 0.0));
        assert!(matches!(parse("t").unwrap().to_field2(), Err(ExprError::UnexpectedVariable(Var::T))));
        let g = parse("s^3").unwrap().to_field1(Var::S).unwrap();
        assert_eq!((g.value(2.0), g.d1(2.0), g.d2(2.0)), (8.0, 12.0, 12.0));
        let phi = parse("t - x*y/2").unwrap().to_field3().unwrap();
        assert_eq!(phi.grad([1.0, 2.0, 3.0]), [-1.0, -0.5, 1.0]);
    }

    #[test]
    fn derivatives_match_differences_on_reference_expressions() {
        let exprs = [
            "x*y/2",
            "sqrt(x^2/2 + y^2/2 - 1)",
            "-atanh(atan(y/x))",
            "x*y/2 + sqrt(1 - x^2)",
            "x*y/2 + x^(1/3)",
            "0.25*sqrt(x^2+y^2)*sqrt(1-x^2-y^2) - 0.25*atan(sqrt(x^2+y^2)/sqrt(1-x^2-y^2))",
            "x^2 - x*y/2",
            "exp(-x)*cos(y) + log(1 + x^2)",
        ];
        let pts = [(0.61, 0.13), (0.9, -0.2), (0.52, 0.21)];
        for src in exprs {
            let e = parse(src).unwrap();
            for v in [Var::X, Var::Y] {
                let d = e.differentiate(v);
                for &(x, y) in &pts {
                    let (x, y) = if src.starts_with("sqrt(x^2/2") { (x + 1.5, y) } else { (x, y) };
                    let at = |dx: f64| {
                        let env = match v {
                            Var::X => Env::xy(x + dx, y),
                            _ => Env::xy(x, y + dx),
                        };
                        e.eval(&env)
                    };
                    let h = 1e-3;
                    let fd = (-at(2.0 * h) + 8.0 * at(h) - 8.0 * at(-h) + at(-2.0 * h)) / (12.0 * h);
                    let an = d.eval(&Env::xy(x, y));
                    assert!((an - fd).abs() <= 1e-7 * an.abs().max(1.0), "{src} d/{v} at ({x},{y}): {an} vs {fd}");
                }
            }
        }
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0.0..100.0f64).prop_map(Expr::Num),
            Just(Expr::Const(Constant::Pi)),
            Just(Expr::Const(Constant::E)),
            prop::sample::select(Var::ALL.to_vec()).prop_map(Expr::Var),
        ];
        leaf.prop_recursive(6, 64, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
                (prop::sample::select(vec![BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div, BinOp::Pow]), inner.clone(), inner.clone())
                    .prop_map(|(op, a, b)| Expr::Bin(op, Box::new(a), Box::new(b))),
                (prop::sample::select(Func::ALL.to_vec()), inner).prop_map(|(f, a)| Expr::Call(f, Box::new(a))),
            ]
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn print_parse_roundtrip(e in arb_expr()) {
            let printed = e.to_string();
            let back = parse(&printed).unwrap();
            prop_assert_eq!(back, e);
        }

        #[test]
        fn evaluation_never_panics(e in arb_expr(), vals in prop::array::uniform5(-10.0..10.0f64)) {
            let mut env = Env::new();
            for (v, x) in Var::ALL.into_iter().zip(vals) {
                env = env.set(v, x);
            }
            let _ = e.eval(&env);
            let d = e.differentiate(Var::X);
            let _ = d.eval(&env);
            prop_assert!(parse(&d.to_string()).is_ok());
        }
    }
}
