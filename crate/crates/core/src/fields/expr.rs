//! Expression language for coordinate fields.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! expr    := term (("+" | "-") term)*
//! term    := unary (("*" | "/") unary)*
//! unary   := "-" unary | "+" unary | power
//! power   := primary ("^" unary)?
//! primary := number | "im" | "pi" | coordinate | func "(" expr ")" | "(" expr ")"
//! func    := sin | cos | tan | exp | log | sqrt | sinh | cosh | tanh
//! ```
//!
//! `^` is right associative and binds tighter than unary minus, so `-t^2`
//! is `-(t^2)`. Values are complex; every function uses its principal
//! branch except `log`, which rejects zero and negative reals.

use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

use super::{Chart, Point};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("syntax error at position {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("unknown identifier `{name}` at position {pos}")]
    UnknownIdentifier { name: String, pos: usize },
}

impl ParseError {
    pub fn position(&self) -> usize {
        match self {
            ParseError::Syntax { pos, .. } | ParseError::UnknownIdentifier { pos, .. } => *pos,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("{func} is undefined at {arg}")]
    Domain { func: &'static str, arg: Complex64 },
    #[error("non-finite value")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Sinh,
    Cosh,
    Tanh,
}

impl Func {
    const ALL: [(&'static str, Func); 9] = [
        ("sin", Func::Sin),
        ("cos", Func::Cos),
        ("tan", Func::Tan),
        ("exp", Func::Exp),
        ("log", Func::Log),
        ("sqrt", Func::Sqrt),
        ("sinh", Func::Sinh),
        ("cosh", Func::Cosh),
        ("tanh", Func::Tanh),
    ];

    fn lookup(name: &str) -> Option<Func> {
        Self::ALL.iter().find(|(n, _)| *n == name).map(|(_, f)| *f)
    }

    pub fn name(self) -> &'static str {
        Self::ALL.iter().find(|(_, f)| *f == self).map(|(n, _)| *n).unwrap()
    }

    fn apply(self, z: Complex64) -> Result<Complex64, EvalError> {
        let z = on_cut_from_above(z);
        Ok(match self {
            Func::Sin => z.sin(),
            Func::Cos => z.cos(),
            Func::Tan => z.tan(),
            Func::Exp => z.exp(),
            Func::Log => {
                if z.im == 0.0 && z.re <= 0.0 {
                    return Err(EvalError::Domain { func: "log", arg: z });
                }
                z.ln()
            }
            Func::Sqrt => z.sqrt(),
            Func::Sinh => z.sinh(),
            Func::Cosh => z.cosh(),
            Func::Tanh => z.tanh(),
        })
    }
}

/// Names that cannot be used as coordinates.
pub fn is_reserved(name: &str) -> bool {
    name == "im" || name == "pi" || Func::lookup(name).is_some()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(Complex64),
    Coord(usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

impl Node {
    fn eval(&self, p: &Point) -> Result<Complex64, EvalError> {
        match self {
            Node::Const(z) => Ok(*z),
            Node::Coord(k) => Ok(Complex64::new(p.x[*k], 0.0)),
            Node::Neg(a) => Ok(-a.eval(p)?),
            Node::Add(a, b) => Ok(a.eval(p)? + b.eval(p)?),
            Node::Sub(a, b) => Ok(a.eval(p)? - b.eval(p)?),
            Node::Mul(a, b) => Ok(a.eval(p)? * b.eval(p)?),
            Node::Div(a, b) => {
                let den = b.eval(p)?;
                if den == Complex64::new(0.0, 0.0) {
                    return Err(EvalError::DivisionByZero);
                }
                Ok(a.eval(p)? / den)
            }
            Node::Pow(a, b) => power(a.eval(p)?, b.eval(p)?),
            Node::Call(f, a) => f.apply(a.eval(p)?),
        }
    }
}

// A negative zero imaginary part would select the lower side of the branch
// cut; real negative arguments take the principal value instead.
fn on_cut_from_above(z: Complex64) -> Complex64 {
    if z.im == 0.0 {
        Complex64::new(z.re, 0.0)
    } else {
        z
    }
}

fn power(base: Complex64, exp: Complex64) -> Result<Complex64, EvalError> {
    let base = on_cut_from_above(base);
    let zero = Complex64::new(0.0, 0.0);
    if exp.im == 0.0 && exp.re.fract() == 0.0 && exp.re.abs() <= 1024.0 {
        let n = exp.re as i32;
        if base == zero && n < 0 {
            return Err(EvalError::DivisionByZero);
        }
        return Ok(base.powi(n));
    }
    if base == zero {
        if exp.re > 0.0 {
            return Ok(zero);
        }
        return Err(EvalError::Domain { func: "pow", arg: base });
    }
    Ok(base.powc(exp))
}

/// A parsed, chart-resolved expression.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldExpr {
    root: Node,
    text: String,
}

impl FieldExpr {
    pub fn constant(z: Complex64) -> Self {
        Self {
            root: Node::Const(z),
            text: format!("{}", z),
        }
    }

    pub fn node(&self) -> &Node {
        &self.root
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn eval(&self, p: &Point) -> Result<Complex64, EvalError> {
        let v = self.root.eval(p)?;
        if v.re.is_finite() && v.im.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite)
        }
    }

    /// True if the expression is identically the constant zero.
    pub fn is_zero(&self) -> bool {
        matches!(self.root, Node::Const(z) if z == Complex64::new(0.0, 0.0))
    }
}

impl fmt::Display for FieldExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn next_token(&mut self) -> Result<(Tok, usize), ParseError> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        let Some(&b) = bytes.get(self.pos) else {
            return Ok((Tok::End, start));
        };
        if b.is_ascii_digit() || b == b'.' {
            let mut end = start;
            while end < bytes.len() && (bytes[end].is_ascii_digit() || bytes[end] == b'.') {
                end += 1;
            }
            if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
                let mut exp_end = end + 1;
                if exp_end < bytes.len() && (bytes[exp_end] == b'+' || bytes[exp_end] == b'-') {
                    exp_end += 1;
                }
                if exp_end < bytes.len() && bytes[exp_end].is_ascii_digit() {
                    while exp_end < bytes.len() && bytes[exp_end].is_ascii_digit() {
                        exp_end += 1;
                    }
                    end = exp_end;
                }
            }
            let text = &self.src[start..end];
            let value: f64 = text.parse().map_err(|_| ParseError::Syntax {
                pos: start,
                message: format!("malformed number `{}`", text),
            })?;
            self.pos = end;
            return Ok((Tok::Num(value), start));
        }
        if b.is_ascii_alphabetic() || b == b'_' {
            let mut end = start;
            while end < bytes.len() && (bytes[end].is_ascii_alphanumeric() || bytes[end] == b'_') {
                end += 1;
            }
            self.pos = end;
            return Ok((Tok::Ident(self.src[start..end].to_string()), start));
        }
        if matches!(b, b'+' | b'-' | b'*' | b'/' | b'^' | b'(' | b')') {
            self.pos += 1;
            return Ok((Tok::Sym(b as char), start));
        }
        let ch = self.src[start..].chars().next().unwrap();
        Err(ParseError::Syntax {
            pos: start,
            message: format!("unexpected character `{}`", ch),
        })
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    tok: Tok,
    pos: usize,
    chart: &'a Chart,
}

impl<'a> Parser<'a> {
    fn advance(&mut self) -> Result<(), ParseError> {
        let (tok, pos) = self.lexer.next_token()?;
        self.tok = tok;
        self.pos = pos;
        Ok(())
    }

    fn unexpected(&self, what: &str) -> ParseError {
        let found = match &self.tok {
            Tok::Num(v) => format!("number {}", v),
            Tok::Ident(s) => format!("`{}`", s),
            Tok::Sym(c) => format!("`{}`", c),
            Tok::End => "end of input".to_string(),
        };
        ParseError::Syntax {
            pos: self.pos,
            message: format!("expected {}, found {}", what, found),
        }
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.tok {
                Tok::Sym('+') => {
                    self.advance()?;
                    lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Sym('-') => {
                    self.advance()?;
                    lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            match self.tok {
                Tok::Sym('*') => {
                    self.advance()?;
                    lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Tok::Sym('/') => {
                    self.advance()?;
                    lhs = Node::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        match self.tok {
            Tok::Sym('-') => {
                self.advance()?;
                Ok(Node::Neg(Box::new(self.unary()?)))
            }
            Tok::Sym('+') => {
                self.advance()?;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.primary()?;
        if self.tok == Tok::Sym('^') {
            self.advance()?;
            let exp = self.unary()?;
            return Ok(Node::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Node, ParseError> {
        match self.tok.clone() {
            Tok::Num(v) => {
                self.advance()?;
                Ok(Node::Const(Complex64::new(v, 0.0)))
            }
            Tok::Sym('(') => {
                self.advance()?;
                let inner = self.expr()?;
                self.expect_close()?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                let at = self.pos;
                self.advance()?;
                if let Some(func) = Func::lookup(&name) {
                    if self.tok != Tok::Sym('(') {
                        return Err(self.unexpected(&format!("`(` after `{}`", name)));
                    }
                    self.advance()?;
                    let arg = self.expr()?;
                    self.expect_close()?;
                    return Ok(Node::Call(func, Box::new(arg)));
                }
                match name.as_str() {
                    "im" => Ok(Node::Const(Complex64::new(0.0, 1.0))),
                    "pi" => Ok(Node::Const(Complex64::new(std::f64::consts::PI, 0.0))),
                    _ => match self.chart.index_of(&name) {
                        Some(k) => Ok(Node::Coord(k)),
                        None => Err(ParseError::UnknownIdentifier { name, pos: at }),
                    },
                }
            }
            _ => Err(self.unexpected("an operand")),
        }
    }

    fn expect_close(&mut self) -> Result<(), ParseError> {
        if self.tok != Tok::Sym(')') {
            return Err(self.unexpected("`)`"));
        }
        self.advance()
    }
}

/// Parse `text` against the coordinate names of `chart`. Error positions
/// are byte offsets into `text`.
pub fn parse_expr(text: &str, chart: &Chart) -> Result<FieldExpr, ParseError> {
    let mut parser = Parser {
        lexer: Lexer { src: text, pos: 0 },
        tok: Tok::End,
        pos: 0,
        chart,
    };
    parser.advance()?;
    if parser.tok == Tok::End {
        return Err(ParseError::Syntax {
            pos: 0,
            message: "empty expression".into(),
        });
    }
    let root = parser.expr()?;
    if parser.tok != Tok::End {
        return Err(parser.unexpected("an operator or end of input"));
    }
    Ok(FieldExpr {
        root,
        text: text.trim().to_string(),
    })
}
