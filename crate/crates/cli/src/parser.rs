//! Expression language for units in `x` and series in `t`.
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' int)?          int := '-'? digits | '(' '-'? digits ')'
//! atom    := number | 'x' | 't' | 'i' | 'exp' '(' sum ')' | '(' sum ')'
//! number  := digits ('.' digits)?
//! ```
//!
//! Binary operators are left-associative; `-x^2` is `-(x^2)`.

use std::fmt;

use thiserror::Error;

/// Largest accepted input.
pub const MAX_INPUT: usize = 64 * 1024;

/// Deepest accepted nesting of parentheses and unary minus.
const MAX_DEPTH: usize = 64;

/// Largest accepted number of operator nodes; bounds the tree height for
/// the recursive passes over it.
const MAX_NODES: usize = 1000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    /// Unsigned decimal literal, kept verbatim.
    Num(String),
    X,
    T,
    I,
    Exp(Box<Expr>),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i64),
}

impl Expr {
    pub fn mentions(&self, var: &Expr) -> bool {
        if self == var {
            return true;
        }
        match self {
            Expr::Num(_) | Expr::X | Expr::T | Expr::I => false,
            Expr::Exp(a) | Expr::Neg(a) | Expr::Pow(a, _) => a.mentions(var),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => a.mentions(var) || b.mentions(var),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Pow(..) => 4,
            _ => 5,
        }
    }
}

/// Prints with the fewest parentheses that reparse to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let wrap = |f: &mut fmt::Formatter<'_>, e: &Expr, min: u8| {
            if e.precedence() < min {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        };
        match self {
            Expr::Num(s) => f.write_str(s),
            Expr::X => f.write_str("x"),
            Expr::T => f.write_str("t"),
            Expr::I => f.write_str("i"),
            Expr::Exp(a) => write!(f, "exp({a})"),
            Expr::Neg(a) => {
                f.write_str("-")?;
                wrap(f, a, 3)
            }
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                wrap(f, a, 1)?;
                f.write_str(if matches!(self, Expr::Add(..)) { "+" } else { "-" })?;
                wrap(f, b, 2)
            }
            Expr::Mul(a, b) | Expr::Div(a, b) => {
                wrap(f, a, 2)?;
                f.write_str(if matches!(self, Expr::Mul(..)) { "*" } else { "/" })?;
                wrap(f, b, 3)
            }
            Expr::Pow(a, n) => {
                wrap(f, a, 5)?;
                write!(f, "^{n}")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("parse error at byte {offset}: expected {}, found {found}", expected.join(" or "))]
pub struct ParseError {
    pub offset: usize,
    pub expected: Vec<&'static str>,
    pub found: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Num(String),
    Ident(String),
    Sym(char),
    End,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(s) => write!(f, "number `{s}`"),
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Sym(c) => write!(f, "`{c}`"),
            Tok::End => f.write_str("end of input"),
        }
    }
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn skip_ws(&mut self) {
        while let Some(c) = self.src[self.pos..].chars().next() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    /// Next token and its byte offset.
    fn next(&mut self) -> Result<(Tok, usize), ParseError> {
        self.skip_ws();
        let start = self.pos;
        let rest = &self.src[start..];
        let Some(c) = rest.chars().next() else {
            return Ok((Tok::End, start));
        };
        if c.is_ascii_digit() {
            let mut end = rest.find(|ch: char| !ch.is_ascii_digit()).unwrap_or(rest.len());
            if rest[end..].starts_with('.') {
                let frac = &rest[end + 1..];
                let k = frac.find(|ch: char| !ch.is_ascii_digit()).unwrap_or(frac.len());
                if k == 0 {
                    return Err(ParseError {
                        offset: start + end + 1,
                        expected: vec!["digit"],
                        found: describe(&frac.chars().next()),
                    });
                }
                end += 1 + k;
            }
            self.pos += end;
            return Ok((Tok::Num(rest[..end].to_string()), start));
        }
        if c.is_ascii_alphabetic() {
            let end = rest.find(|ch: char| !ch.is_ascii_alphanumeric()).unwrap_or(rest.len());
            self.pos += end;
            return Ok((Tok::Ident(rest[..end].to_string()), start));
        }
        if "+-*/^()".contains(c) {
            self.pos += 1;
            return Ok((Tok::Sym(c), start));
        }
        Err(ParseError {
            offset: start,
            expected: vec!["number", "`x`", "`t`", "`i`", "`exp`", "`(`", "operator"],
            found: describe(&Some(c)),
        })
    }
}

fn describe(c: &Option<char>) -> String {
    match c {
        Some(c) => format!("`{c}`"),
        None => "end of input".into(),
    }
}

struct Parser<'a> {
    lex: Lexer<'a>,
    tok: Tok,
    at: usize,
    depth: usize,
    nodes: usize,
}

const ATOM_START: [&str; 7] = ["number", "`x`", "`t`", "`i`", "`exp`", "`(`", "`-`"];

impl<'a> Parser<'a> {
    fn bump(&mut self) -> Result<(), ParseError> {
        let (tok, at) = self.lex.next()?;
        self.tok = tok;
        self.at = at;
        Ok(())
    }

    fn fail<T>(&self, expected: &[&'static str]) -> Result<T, ParseError> {
        Err(ParseError {
            offset: self.at,
            expected: expected.to_vec(),
            found: self.tok.to_string(),
        })
    }

    fn expect(&mut self, c: char, name: &'static str) -> Result<(), ParseError> {
        if self.tok == Tok::Sym(c) {
            self.bump()
        } else {
            self.fail(&[name])
        }
    }

    fn enter(&mut self) -> Result<(), ParseError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(ParseError {
                offset: self.at,
                expected: vec!["shallower nesting"],
                found: self.tok.to_string(),
            });
        }
        Ok(())
    }

    fn node(&mut self, e: Expr) -> Result<Expr, ParseError> {
        self.nodes += 1;
        if self.nodes > MAX_NODES {
            return Err(ParseError {
                offset: self.at,
                expected: vec!["at most 1000 operators"],
                found: self.tok.to_string(),
            });
        }
        Ok(e)
    }

    fn sum(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.product()?;
        loop {
            match self.tok {
                Tok::Sym('+') => {
                    self.bump()?;
                    let rhs = self.product()?;
                    lhs = self.node(Expr::Add(Box::new(lhs), Box::new(rhs)))?;
                }
                Tok::Sym('-') => {
                    self.bump()?;
                    let rhs = self.product()?;
                    lhs = self.node(Expr::Sub(Box::new(lhs), Box::new(rhs)))?;
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn product(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            match self.tok {
                Tok::Sym('*') => {
                    self.bump()?;
                    let rhs = self.unary()?;
                    lhs = self.node(Expr::Mul(Box::new(lhs), Box::new(rhs)))?;
                }
                Tok::Sym('/') => {
                    self.bump()?;
                    let rhs = self.unary()?;
                    lhs = self.node(Expr::Div(Box::new(lhs), Box::new(rhs)))?;
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.tok == Tok::Sym('-') {
            self.enter()?;
            self.bump()?;
            let inner = self.unary()?;
            self.depth -= 1;
            return self.node(Expr::Neg(Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.tok != Tok::Sym('^') {
            return Ok(base);
        }
        self.bump()?;
        let paren = self.tok == Tok::Sym('(');
        if paren {
            self.bump()?;
        }
        let negative = self.tok == Tok::Sym('-');
        if negative {
            self.bump()?;
        }
        let n = match &self.tok {
            Tok::Num(s) if !s.contains('.') => s.parse::<i64>().ok(),
            _ => None,
        };
        let Some(n) = n else {
            return self.fail(&["integer exponent"]);
        };
        self.bump()?;
        if paren {
            self.expect(')', "`)`")?;
        }
        self.node(Expr::Pow(Box::new(base), if negative { -n } else { n }))
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.tok.clone() {
            Tok::Num(s) => {
                self.bump()?;
                Ok(Expr::Num(s))
            }
            Tok::Ident(name) => {
                let e = match name.as_str() {
                    "x" => Expr::X,
                    "t" => Expr::T,
                    "i" => Expr::I,
                    "exp" => {
                        self.bump()?;
                        self.expect('(', "`(`")?;
                        self.enter()?;
                        let arg = self.sum()?;
                        self.depth -= 1;
                        if self.tok != Tok::Sym(')') {
                            return self.fail(&["`)`", "operator"]);
                        }
                        self.bump()?;
                        return self.node(Expr::Exp(Box::new(arg)));
                    }
                    _ => return self.fail(&ATOM_START),
                };
                self.bump()?;
                Ok(e)
            }
            Tok::Sym('(') => {
                self.bump()?;
                self.enter()?;
                let e = self.sum()?;
                self.depth -= 1;
                if self.tok != Tok::Sym(')') {
                    return self.fail(&["`)`", "operator"]);
                }
                self.bump()?;
                Ok(e)
            }
            _ => self.fail(&ATOM_START),
        }
    }
}

pub fn parse(text: &str) -> Result<Expr, ParseError> {
    if text.len() > MAX_INPUT {
        return Err(ParseError {
            offset: MAX_INPUT,
            expected: vec!["input of at most 65536 bytes"],
            found: format!("{} bytes", text.len()),
        });
    }
    let mut p = Parser {
        lex: Lexer { src: text, pos: 0 },
        tok: Tok::End,
        at: 0,
        depth: 0,
        nodes: 0,
    };
    p.bump()?;
    let e = p.sum()?;
    if p.tok != Tok::End {
        return p.fail(&["operator", "end of input"]);
    }
    Ok(e)
}
