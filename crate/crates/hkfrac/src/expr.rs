//! A small arithmetic-expression language for right-hand sides `phi(t, x)`
//! and certificate envelopes read from text.
//!
//! Grammar, in decreasing binding strength:
//!
//! ```text
//! atom   := number | pi | t | x | x1..xn | fn '(' expr ')' | '(' expr ')'
//! power  := atom ('^' unary)?          right-associative
//! unary  := '-' unary | power          minus binds looser than '^'
//! mul    := unary (('*'|'/') unary)*
//! add    := mul (('+'|'-') mul)*
//! ```
//!
//! Functions: `sin`, `cos`, `exp`, `ln`, `sqrt`, `abs`. Unknown identifiers
//! are rejected at parse time. Evaluation is over the reals: division by
//! zero, logarithms of non-positive values, roots of negative values, powers
//! with negative base and non-integer exponent, and any non-finite result
//! raise explicit errors instead of propagating silently.

use std::fmt;

/// Nesting depth cap for both parsing and evaluation.
pub const MAX_DEPTH: usize = 256;

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
    Ln,
    Sqrt,
    Abs,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }
}

/// Abstract syntax tree of an expression.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Pi,
    Var(String),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

/// Parse failure with byte position and what was expected there.
#[derive(Debug, Clone, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at byte {pos}: expected {expected}")]
    Syntax { pos: usize, expected: String },
    #[error("unknown identifier `{name}` at byte {pos}")]
    UnknownIdentifier { name: String, pos: usize },
    #[error("expression nests deeper than {MAX_DEPTH} levels")]
    TooDeep,
}

/// Evaluation failure.
#[derive(Debug, Clone, thiserror::Error)]
pub enum EvalError {
    #[error("variable `{0}` is not bound")]
    UnboundVariable(String),
    #[error("domain violation: {what} in `{subexpr}`")]
    DomainViolation { what: String, subexpr: String },
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn next_token(&mut self) -> Result<(usize, Token), ParseError> {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        if self.pos >= self.src.len() {
            return Ok((start, Token::End));
        }
        let c = self.src[self.pos];
        let simple = match c {
            b'+' => Some(Token::Plus),
            b'-' => Some(Token::Minus),
            b'*' => Some(Token::Star),
            b'/' => Some(Token::Slash),
            b'^' => Some(Token::Caret),
            b'(' => Some(Token::LParen),
            b')' => Some(Token::RParen),
            _ => None,
        };
        if let Some(t) = simple {
            self.pos += 1;
            return Ok((start, t));
        }
        if c.is_ascii_digit() || c == b'.' {
            let mut end = self.pos;
            while end < self.src.len() && (self.src[end].is_ascii_digit() || self.src[end] == b'.')
            {
                end += 1;
            }
            if end < self.src.len() && (self.src[end] == b'e' || self.src[end] == b'E') {
                let mut e = end + 1;
                if e < self.src.len() && (self.src[e] == b'+' || self.src[e] == b'-') {
                    e += 1;
                }
                if e < self.src.len() && self.src[e].is_ascii_digit() {
                    while e < self.src.len() && self.src[e].is_ascii_digit() {
                        e += 1;
                    }
                    end = e;
                }
            }
            let text = std::str::from_utf8(&self.src[self.pos..end]).map_err(|_| {
                ParseError::Syntax {
                    pos: start,
                    expected: "a number".into(),
                }
            })?;
            let value: f64 = text.parse().map_err(|_| ParseError::Syntax {
                pos: start,
                expected: format!("a valid number, found `{text}`"),
            })?;
            self.pos = end;
            return Ok((start, Token::Num(value)));
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let mut end = self.pos;
            while end < self.src.len()
                && (self.src[end].is_ascii_alphanumeric() || self.src[end] == b'_')
            {
                end += 1;
            }
            let name = std::str::from_utf8(&self.src[self.pos..end])
                .expect("ascii bytes")
                .to_string();
            self.pos = end;
            return Ok((start, Token::Ident(name)));
        }
        Err(ParseError::Syntax {
            pos: start,
            expected: format!("a token, found byte 0x{c:02x}"),
        })
    }
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    at: usize,
    depth: usize,
}

impl Parser {
    fn peek(&self) -> &(usize, Token) {
        &self.tokens[self.at]
    }

    fn bump(&mut self) -> (usize, Token) {
        let t = self.tokens[self.at].clone();
        if self.at + 1 < self.tokens.len() {
            self.at += 1;
        }
        t
    }

    fn enter(&mut self) -> Result<(), ParseError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(ParseError::TooDeep);
        }
        Ok(())
    }

    fn leave(&mut self) {
        self.depth -= 1;
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        self.enter()?;
        let mut lhs = self.mul()?;
        loop {
            let op = match self.peek().1 {
                Token::Plus => BinOp::Add,
                Token::Minus => BinOp::Sub,
                _ => break,
            };
            self.bump();
            let rhs = self.mul()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        self.leave();
        Ok(lhs)
    }

    fn mul(&mut self) -> Result<Expr, ParseError> {
        self.enter()?;
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek().1 {
                Token::Star => BinOp::Mul,
                Token::Slash => BinOp::Div,
                _ => break,
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        self.leave();
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        self.enter()?;
        let out = if matches!(self.peek().1, Token::Minus) {
            self.bump();
            Expr::Neg(Box::new(self.unary()?))
        } else {
            self.power()?
        };
        self.leave();
        Ok(out)
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        self.enter()?;
        let base = self.atom()?;
        let out = if matches!(self.peek().1, Token::Caret) {
            self.bump();
            let exponent = self.unary()?;
            Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exponent))
        } else {
            base
        };
        self.leave();
        Ok(out)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        self.enter()?;
        let (pos, tok) = self.bump();
        let out = match tok {
            Token::Num(v) => Expr::Num(v),
            Token::LParen => {
                let inner = self.expr()?;
                let (pos, tok) = self.bump();
                if tok != Token::RParen {
                    return Err(ParseError::Syntax {
                        pos,
                        expected: "`)`".into(),
                    });
                }
                inner
            }
            Token::Ident(name) => match name.as_str() {
                "pi" => Expr::Pi,
                "sin" | "cos" | "exp" | "ln" | "sqrt" | "abs" => {
                    let f = match name.as_str() {
                        "sin" => Func::Sin,
                        "cos" => Func::Cos,
                        "exp" => Func::Exp,
                        "ln" => Func::Ln,
                        "sqrt" => Func::Sqrt,
                        _ => Func::Abs,
                    };
                    let (pos, tok) = self.bump();
                    if tok != Token::LParen {
                        return Err(ParseError::Syntax {
                            pos,
                            expected: format!("`(` after `{name}`"),
                        });
                    }
                    let arg = self.expr()?;
                    let (pos, tok) = self.bump();
                    if tok != Token::RParen {
                        return Err(ParseError::Syntax {
                            pos,
                            expected: "`)`".into(),
                        });
                    }
                    Expr::Call(f, Box::new(arg))
                }
                _ if is_variable_name(&name) => Expr::Var(name),
                _ => return Err(ParseError::UnknownIdentifier { name, pos }),
            },
            other => {
                return Err(ParseError::Syntax {
                    pos,
                    expected: format!("a number, variable, function, or `(`, found {other:?}"),
                })
            }
        };
        self.leave();
        Ok(out)
    }
}

/// `t`, `x`, or `x` followed by digits.
fn is_variable_name(name: &str) -> bool {
    if name == "t" || name == "x" {
        return true;
    }
    let mut chars = name.chars();
    chars.next() == Some('x') && !name[1..].is_empty() && name[1..].chars().all(|c| c.is_ascii_digit())
}

/// Parses an expression, rejecting unknown identifiers and trailing input.
pub fn parse(src: &str) -> Result<Expr, ParseError> {
    let mut lexer = Lexer {
        src: src.as_bytes(),
        pos: 0,
    };
    let mut tokens = Vec::new();
    loop {
        let t = lexer.next_token()?;
        let end = t.1 == Token::End;
        tokens.push(t);
        if end {
            break;
        }
        if tokens.len() > src.len() + 2 {
            break; // cannot happen; guards the loop against lexer bugs
        }
    }
    let mut parser = Parser {
        tokens,
        at: 0,
        depth: 0,
    };
    let e = parser.expr()?;
    let (pos, tok) = parser.peek().clone();
    if tok != Token::End {
        return Err(ParseError::Syntax {
            pos,
            expected: "end of input".into(),
        });
    }
    Ok(e)
}

impl Expr {
    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary(BinOp::Add | BinOp::Sub, ..) => 1,
            Expr::Binary(BinOp::Mul | BinOp::Div, ..) => 2,
            Expr::Neg(_) => 3,
            Expr::Binary(BinOp::Pow, ..) => 4,
            _ => 5,
        }
    }

    fn write(&self, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
        let prec = self.precedence();
        let parens = prec < min_prec;
        if parens {
            write!(f, "(")?;
        }
        match self {
            Expr::Num(v) => {
                if *v < 0.0 || !v.is_finite() {
                    write!(f, "({v})")?;
                } else {
                    write!(f, "{v}")?;
                }
            }
            Expr::Pi => write!(f, "pi")?,
            Expr::Var(name) => write!(f, "{name}")?,
            Expr::Neg(inner) => {
                write!(f, "-")?;
                inner.write(f, 3)?;
            }
            Expr::Binary(op, l, r) => {
                let (sym, lp, rp) = match op {
                    BinOp::Add => (" + ", 1, 2),
                    BinOp::Sub => (" - ", 1, 2),
                    BinOp::Mul => (" * ", 2, 3),
                    BinOp::Div => (" / ", 2, 3),
                    // right-associative: parenthesize an exponent only when
                    // it binds looser than the power itself
                    BinOp::Pow => ("^", 5, 3),
                };
                l.write(f, lp)?;
                write!(f, "{sym}")?;
                r.write(f, rp)?;
            }
            Expr::Call(func, arg) => {
                write!(f, "{}(", func.name())?;
                arg.write(f, 0)?;
                write!(f, ")")?;
            }
        }
        if parens {
            write!(f, ")")?;
        }
        Ok(())
    }

    /// Evaluates with the given variable bindings.
    pub fn eval(&self, vars: &[(&str, f64)]) -> Result<f64, EvalError> {
        let violation = |what: String, e: &Expr| EvalError::DomainViolation {
            what,
            subexpr: e.to_string(),
        };
        let check = |v: f64, e: &Expr| {
            if v.is_finite() {
                Ok(v)
            } else {
                Err(violation("non-finite result".into(), e))
            }
        };
        match self {
            Expr::Num(v) => Ok(*v),
            Expr::Pi => Ok(std::f64::consts::PI),
            Expr::Var(name) => vars
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, v)| *v)
                .ok_or_else(|| EvalError::UnboundVariable(name.clone())),
            Expr::Neg(inner) => Ok(-inner.eval(vars)?),
            Expr::Binary(op, l, r) => {
                let a = l.eval(vars)?;
                let b = r.eval(vars)?;
                let v = match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(violation("division by zero".into(), self));
                        }
                        a / b
                    }
                    BinOp::Pow => {
                        if a < 0.0 && b.fract() != 0.0 {
                            return Err(violation(
                                "negative base with non-integer exponent".into(),
                                self,
                            ));
                        }
                        if a == 0.0 && b < 0.0 {
                            return Err(violation("zero base with negative exponent".into(), self));
                        }
                        a.powf(b)
                    }
                };
                check(v, self)
            }
            Expr::Call(func, arg) => {
                let a = arg.eval(vars)?;
                let v = match func {
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Exp => a.exp(),
                    Func::Ln => {
                        if a <= 0.0 {
                            return Err(violation(
                                format!("logarithm of non-positive value {a}"),
                                self,
                            ));
                        }
                        a.ln()
                    }
                    Func::Sqrt => {
                        if a < 0.0 {
                            return Err(violation(format!("square root of negative {a}"), self));
                        }
                        a.sqrt()
                    }
                    Func::Abs => a.abs(),
                };
                check(v, self)
            }
        }
    }

    /// Free variables, in first-appearance order.
    pub fn variables(&self) -> Vec<String> {
        let mut out = Vec::new();
        fn walk(e: &Expr, out: &mut Vec<String>) {
            match e {
                Expr::Var(name) => {
                    if !out.iter().any(|n| n == name) {
                        out.push(name.clone());
                    }
                }
                Expr::Neg(i) => walk(i, out),
                Expr::Binary(_, l, r) => {
                    walk(l, out);
                    walk(r, out);
                }
                Expr::Call(_, a) => walk(a, out),
                _ => {}
            }
        }
        walk(self, &mut out);
        out
    }
}

impl fmt::Display for Expr {
    /// Canonical form: `parse(print(parse(src)))` prints identically.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(f, 0)
    }
}
