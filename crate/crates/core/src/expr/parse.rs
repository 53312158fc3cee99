//! Recursive-descent parser for the expression grammar.
//!
//! Precedence, tightest first: integer power, unary minus, `* /`, `+ -`.
//! Function application is by name with parentheses. Whitespace is ignored.
//! There is no implicit multiplication: `2y` is a syntax error.

use super::{fold, Expr, Node};
use std::fmt;
use thiserror::Error;

/// Parse failure, with the byte offset into the source.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: found {found}, expected {}", expected.join(" | "))]
    Syntax { offset: usize, found: String, expected: Vec<&'static str> },
    #[error("unknown identifier `{name}` at byte {offset} (variable `{var}` already in use)")]
    UnknownIdentifier { offset: usize, name: String, var: String },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
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

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(v) => write!(f, "number `{v}`"),
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Plus => write!(f, "`+`"),
            Tok::Minus => write!(f, "`-`"),
            Tok::Star => write!(f, "`*`"),
            Tok::Slash => write!(f, "`/`"),
            Tok::Caret => write!(f, "`^`"),
            Tok::LParen => write!(f, "`(`"),
            Tok::RParen => write!(f, "`)`"),
            Tok::End => write!(f, "end of input"),
        }
    }
}

const FUNCTIONS: [&str; 4] = ["sin", "cos", "exp", "ln"];

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn next_token(&mut self) -> Result<(Tok, usize), ParseError> {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        if self.pos >= self.src.len() {
            return Ok((Tok::End, start));
        }
        let c = self.src[self.pos];
        let tok = match c {
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'0'..=b'9' => return self.lex_number(start),
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let mut end = self.pos;
                while end < self.src.len()
                    && (self.src[end].is_ascii_alphanumeric() || self.src[end] == b'_')
                {
                    end += 1;
                }
                let name = std::str::from_utf8(&self.src[start..end]).unwrap().to_owned();
                self.pos = end;
                return Ok((Tok::Ident(name), start));
            }
            _ => {
                return Err(ParseError::Syntax {
                    offset: start,
                    found: format!("`{}`", c as char),
                    expected: vec!["number", "identifier", "operator", "`(`"],
                })
            }
        };
        self.pos += 1;
        Ok((tok, start))
    }

    fn lex_number(&mut self, start: usize) -> Result<(Tok, usize), ParseError> {
        let mut end = self.pos;
        while end < self.src.len() && self.src[end].is_ascii_digit() {
            end += 1;
        }
        if end < self.src.len() && self.src[end] == b'.' {
            end += 1;
            while end < self.src.len() && self.src[end].is_ascii_digit() {
                end += 1;
            }
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
        let text = std::str::from_utf8(&self.src[start..end]).unwrap();
        let value: f64 = text.parse().map_err(|_| ParseError::Syntax {
            offset: start,
            found: format!("`{text}`"),
            expected: vec!["number"],
        })?;
        self.pos = end;
        Ok((Tok::Num(value), start))
    }
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    idx: usize,
    var: Option<String>,
}

impl Parser {
    fn peek(&self) -> &(Tok, usize) {
        &self.toks[self.idx]
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.idx].clone();
        if self.idx + 1 < self.toks.len() {
            self.idx += 1;
        }
        t
    }

    fn err(&self, expected: Vec<&'static str>) -> ParseError {
        let (tok, off) = self.peek();
        ParseError::Syntax { offset: *off, found: tok.to_string(), expected }
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek().0 {
                Tok::Plus => {
                    self.bump();
                    let rhs = self.term()?;
                    lhs = Node::Add(lhs.into(), rhs.into());
                }
                Tok::Minus => {
                    self.bump();
                    let rhs = self.term()?;
                    lhs = Node::Sub(lhs.into(), rhs.into());
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek().0 {
                Tok::Star => {
                    self.bump();
                    let rhs = self.unary()?;
                    lhs = Node::Mul(lhs.into(), rhs.into());
                }
                Tok::Slash => {
                    self.bump();
                    let rhs = self.unary()?;
                    lhs = Node::Div(lhs.into(), rhs.into());
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        if matches!(self.peek().0, Tok::Minus) {
            self.bump();
            let inner = self.unary()?;
            // A negated literal is a negative constant, so that printing and
            // reparsing round-trips structurally.
            if let Node::Const(c) = inner {
                return Ok(Node::Const(-c));
            }
            return Ok(Node::Neg(inner.into()));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.primary()?;
        if matches!(self.peek().0, Tok::Caret) {
            self.bump();
            let k = self.exponent()?;
            return Ok(Node::Pow(base.into(), k));
        }
        Ok(base)
    }

    fn exponent(&mut self) -> Result<i32, ParseError> {
        let (tok, off) = self.peek().clone();
        let reject = |off: usize, found: String| ParseError::Syntax {
            offset: off,
            found,
            expected: vec!["integer exponent"],
        };
        let node = match tok {
            Tok::Minus => {
                self.bump();
                match self.peek().clone() {
                    (Tok::Num(v), _) => {
                        self.bump();
                        Node::Const(-v)
                    }
                    (t, o) => return Err(reject(o, t.to_string())),
                }
            }
            Tok::Num(v) => {
                self.bump();
                Node::Const(v)
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                if !matches!(self.peek().0, Tok::RParen) {
                    return Err(self.err(vec!["`)`"]));
                }
                self.bump();
                fold(inner)
            }
            t => return Err(reject(off, t.to_string())),
        };
        match node {
            Node::Const(c) if c.fract() == 0.0 && c.abs() <= i32::MAX as f64 => Ok(c as i32),
            _ => Err(reject(off, "non-integer exponent".to_owned())),
        }
    }

    fn primary(&mut self) -> Result<Node, ParseError> {
        let (tok, off) = self.bump();
        match tok {
            Tok::Num(v) => Ok(Node::Const(v)),
            Tok::LParen => {
                let inner = self.expr()?;
                if !matches!(self.peek().0, Tok::RParen) {
                    return Err(self.err(vec!["`)`"]));
                }
                self.bump();
                Ok(inner)
            }
            Tok::Ident(name) => {
                if name == "pi" {
                    return Ok(Node::Const(std::f64::consts::PI));
                }
                if FUNCTIONS.contains(&name.as_str()) {
                    if !matches!(self.peek().0, Tok::LParen) {
                        return Err(self.err(vec!["`(`"]));
                    }
                    self.bump();
                    let arg = self.expr()?;
                    if !matches!(self.peek().0, Tok::RParen) {
                        return Err(self.err(vec!["`)`"]));
                    }
                    self.bump();
                    let arg = Box::new(arg);
                    return Ok(match name.as_str() {
                        "sin" => Node::Sin(arg),
                        "cos" => Node::Cos(arg),
                        "exp" => Node::Exp(arg),
                        _ => Node::Ln(arg),
                    });
                }
                // Anything else is the free variable; a second distinct name
                // is rejected.
                match &self.var {
                    None => {
                        self.var = Some(name);
                        Ok(Node::Var)
                    }
                    Some(v) if *v == name => Ok(Node::Var),
                    Some(v) => Err(ParseError::UnknownIdentifier {
                        offset: off,
                        name,
                        var: v.clone(),
                    }),
                }
            }
            t => Err(ParseError::Syntax {
                offset: off,
                found: t.to_string(),
                expected: vec!["number", "identifier", "`(`", "`-`"],
            }),
        }
    }
}

/// Parse `src` into an [`Expr`].
pub fn parse_expr(src: &str) -> Result<Expr, ParseError> {
    let mut lexer = Lexer { src: src.as_bytes(), pos: 0 };
    let mut toks = Vec::new();
    loop {
        let (tok, off) = lexer.next_token()?;
        let end = matches!(tok, Tok::End);
        toks.push((tok, off));
        if end {
            break;
        }
    }
    let mut p = Parser { toks, idx: 0, var: None };
    let root = p.expr()?;
    if !matches!(p.peek().0, Tok::End) {
        return Err(p.err(vec!["operator", "end of input"]));
    }
    Ok(Expr::new(root, p.var))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_expression_parses() {
        let e = parse_expr("sin(y)*(1+0.2*sin(y))").unwrap();
        assert_eq!(e.var_name(), Some("y"));
        assert!(matches!(e.root(), Node::Mul(..)));
    }

    #[test]
    fn bare_variable() {
        let e = parse_expr("y").unwrap();
        assert_eq!(*e.root(), Node::Var);
    }

    #[test]
    fn scaled_sine_is_a_product() {
        let e = parse_expr("4*sin(t)").unwrap();
        assert_eq!(e.var_name(), Some("t"));
        match e.root() {
            Node::Mul(a, b) => {
                assert_eq!(**a, Node::Const(4.0));
                assert!(matches!(**b, Node::Sin(_)));
            }
            other => panic!("expected product, got {other:?}"),
        }
    }

    #[test]
    fn no_implicit_multiplication() {
        let err = parse_expr("2y").unwrap_err();
        assert!(matches!(err, ParseError::Syntax { offset: 1, .. }), "{err:?}");
    }

    #[test]
    fn unknown_identifier_reports_offset() {
        let err = parse_expr("sin(y)+z").unwrap_err();
        match err {
            ParseError::UnknownIdentifier { offset, name, var } => {
                assert_eq!(offset, 7);
                assert_eq!(name, "z");
                assert_eq!(var, "y");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn pi_literal() {
        let e = parse_expr("sin(pi/2)").unwrap();
        assert!((e.eval(0.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn unary_minus_precedence() {
        // power binds tighter than unary minus: -4^2 = -(4^2)
        let e = parse_expr("-4^2").unwrap();
        assert_eq!(e.eval(0.0).unwrap(), -16.0);
        // unary minus binds tighter than `*`: -y*y = (-y)*y
        let e = parse_expr("-y*y").unwrap();
        assert_eq!(e.eval(3.0).unwrap(), -9.0);
    }

    #[test]
    fn negative_and_parenthesized_exponents() {
        let e = parse_expr("y^-2").unwrap();
        assert!((e.eval(2.0).unwrap() - 0.25).abs() < 1e-15);
        let e = parse_expr("y^(-2)").unwrap();
        assert!((e.eval(2.0).unwrap() - 0.25).abs() < 1e-15);
        assert!(parse_expr("y^2.5").is_err());
        assert!(parse_expr("y^2^3").is_err());
    }

    #[test]
    fn whitespace_insensitive() {
        let a = parse_expr("sin( y ) * ( 1 + 0.2*sin(y) )").unwrap();
        let b = parse_expr("sin(y)*(1+0.2*sin(y))").unwrap();
        assert_eq!(a.root(), b.root());
    }

    #[test]
    fn unbalanced_parens() {
        let err = parse_expr("sin(y").unwrap_err();
        assert!(matches!(err, ParseError::Syntax { .. }));
    }
}
