//! Lexer and recursive-descent parser for the expression grammar.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)*
//! primary := number | ident | ident '(' args ')' | '(' expr ')'
//! args    := expr (',' expr)*
//! number  := digits ['.' digits] [('e' | 'E') ['+' | '-'] digits]
//! ```
//!
//! `^` is an integer power between scalars and the wedge product between
//! forms; which one applies is decided when the tree is evaluated.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use super::{Coeff, Expr};
use crate::coords::Coordinates;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Span {
    pub line: usize,
    pub column: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Ident(String),
    Number(String),
    Str(String),
    Punct(char),
    Arrow,
    Eof,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

pub fn syntax_error(span: Span, message: impl Into<String>) -> Error {
    Error::Syntax {
        line: span.line,
        column: span.column,
        message: message.into(),
    }
}

/// Split text into tokens. `#` starts a comment running to end of line.
pub fn lex(text: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let span = Span { line, column: col };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '\'') {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            col += i - start;
            out.push(Token { tok: Tok::Ident(s), span });
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i < chars.len() && chars[i] == '.' {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
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
            col += i - start;
            out.push(Token { tok: Tok::Number(s), span });
            continue;
        }
        if c == '"' {
            let start = i + 1;
            i += 1;
            while i < chars.len() && chars[i] != '"' && chars[i] != '\n' {
                i += 1;
            }
            if i >= chars.len() || chars[i] != '"' {
                return Err(syntax_error(span, "unterminated string"));
            }
            let s: String = chars[start..i].iter().collect();
            i += 1;
            col += s.chars().count() + 2;
            out.push(Token { tok: Tok::Str(s), span });
            continue;
        }
        if c == '-' && chars.get(i + 1) == Some(&'>') {
            i += 2;
            col += 2;
            out.push(Token { tok: Tok::Arrow, span });
            continue;
        }
        if "+-*/^(),;{}=[]|:".contains(c) {
            i += 1;
            col += 1;
            out.push(Token { tok: Tok::Punct(c), span });
            continue;
        }
        return Err(syntax_error(span, format!("unexpected character `{}`", c)));
    }
    out.push(Token {
        tok: Tok::Eof,
        span: Span { line, column: col },
    });
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Clone, Debug, PartialEq)]
pub enum AstKind {
    Num(Coeff),
    Sym(String),
    Neg(Box<Ast>),
    Bin(BinOp, Box<Ast>, Box<Ast>),
    Call(String, Vec<Ast>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Ast {
    pub kind: AstKind,
    pub span: Span,
}

/// Exact value of a decimal literal.
pub fn decimal_value(text: &str) -> Option<BigRational> {
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(p) => (&text[..p], text[p + 1..].parse::<i64>().ok()?),
        None => (text, 0),
    };
    let (int_part, frac_part) = match mantissa.find('.') {
        Some(p) => (&mantissa[..p], &mantissa[p + 1..]),
        None => (mantissa, ""),
    };
    let digits = format!("{}{}", int_part, frac_part);
    let n: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().ok()? };
    let shift = exponent - frac_part.len() as i64;
    let ten = BigInt::from(10);
    let mut r = BigRational::from_integer(n);
    if shift >= 0 {
        r *= BigRational::from_integer(num_traits::pow(ten, shift as usize));
    } else {
        r /= BigRational::from_integer(num_traits::pow(ten, (-shift) as usize));
    }
    Some(r)
}

/// Token-stream parser shared by the standalone expression grammar and the
/// manifest reader.
pub struct Parser<'t> {
    tokens: &'t [Token],
    pos: usize,
}

impl<'t> Parser<'t> {
    pub fn new(tokens: &'t [Token]) -> Self {
        Parser { tokens, pos: 0 }
    }

    pub fn peek(&self) -> &Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    pub fn peek_at(&self, offset: usize) -> &Token {
        &self.tokens[(self.pos + offset).min(self.tokens.len() - 1)]
    }

    pub fn next(&mut self) -> Token {
        let t = self.peek().clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    pub fn at_eof(&self) -> bool {
        self.peek().tok == Tok::Eof
    }

    pub fn is_punct(&self, c: char) -> bool {
        self.peek().tok == Tok::Punct(c)
    }

    pub fn is_ident(&self, name: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == name)
    }

    pub fn eat_punct(&mut self, c: char) -> bool {
        if self.is_punct(c) {
            self.next();
            true
        } else {
            false
        }
    }

    pub fn expect_punct(&mut self, c: char) -> Result<Span> {
        let t = self.next();
        if t.tok == Tok::Punct(c) {
            Ok(t.span)
        } else {
            Err(syntax_error(t.span, format!("expected `{}`, found {}", c, describe(&t.tok))))
        }
    }

    pub fn expect_ident(&mut self) -> Result<(String, Span)> {
        let t = self.next();
        match t.tok {
            Tok::Ident(s) => Ok((s, t.span)),
            other => Err(syntax_error(t.span, format!("expected identifier, found {}", describe(&other)))),
        }
    }

    pub fn expect_keyword(&mut self, kw: &str) -> Result<Span> {
        let t = self.next();
        match &t.tok {
            Tok::Ident(s) if s == kw => Ok(t.span),
            other => Err(syntax_error(t.span, format!("expected `{}`, found {}", kw, describe(other)))),
        }
    }

    pub fn parse_expr(&mut self) -> Result<Ast> {
        let mut lhs = self.parse_term()?;
        loop {
            let op = if self.is_punct('+') {
                BinOp::Add
            } else if self.is_punct('-') {
                BinOp::Sub
            } else {
                break;
            };
            let span = self.next().span;
            let rhs = self.parse_term()?;
            lhs = Ast {
                kind: AstKind::Bin(op, Box::new(lhs), Box::new(rhs)),
                span,
            };
        }
        Ok(lhs)
    }

    fn parse_term(&mut self) -> Result<Ast> {
        let mut lhs = self.parse_unary()?;
        loop {
            let op = if self.is_punct('*') {
                BinOp::Mul
            } else if self.is_punct('/') {
                BinOp::Div
            } else {
                break;
            };
            let span = self.next().span;
            let rhs = self.parse_unary()?;
            lhs = Ast {
                kind: AstKind::Bin(op, Box::new(lhs), Box::new(rhs)),
                span,
            };
        }
        Ok(lhs)
    }

    fn parse_unary(&mut self) -> Result<Ast> {
        if self.is_punct('-') {
            let span = self.next().span;
            let inner = self.parse_unary()?;
            return Ok(Ast {
                kind: AstKind::Neg(Box::new(inner)),
                span,
            });
        }
        if self.is_punct('+') {
            self.next();
            return self.parse_unary();
        }
        self.parse_power()
    }

    fn parse_power(&mut self) -> Result<Ast> {
        let mut lhs = self.parse_primary()?;
        while self.is_punct('^') {
            let span = self.next().span;
            let rhs = if self.is_punct('-') {
                let s = self.next().span;
                let inner = self.parse_primary()?;
                Ast {
                    kind: AstKind::Neg(Box::new(inner)),
                    span: s,
                }
            } else {
                self.parse_primary()?
            };
            lhs = Ast {
                kind: AstKind::Bin(BinOp::Pow, Box::new(lhs), Box::new(rhs)),
                span,
            };
        }
        Ok(lhs)
    }

    fn parse_primary(&mut self) -> Result<Ast> {
        let t = self.next();
        match t.tok {
            Tok::Number(s) => {
                let v = decimal_value(&s).ok_or_else(|| syntax_error(t.span, "malformed number"))?;
                Ok(Ast {
                    kind: AstKind::Num(Coeff::real(v)),
                    span: t.span,
                })
            }
            Tok::Ident(name) => {
                if self.is_punct('(') {
                    self.next();
                    let mut args = Vec::new();
                    if !self.is_punct(')') {
                        args.push(self.parse_expr()?);
                        while self.eat_punct(',') {
                            args.push(self.parse_expr()?);
                        }
                    }
                    self.expect_punct(')')?;
                    Ok(Ast {
                        kind: AstKind::Call(name, args),
                        span: t.span,
                    })
                } else {
                    Ok(Ast {
                        kind: AstKind::Sym(name),
                        span: t.span,
                    })
                }
            }
            Tok::Punct('(') => {
                let inner = self.parse_expr()?;
                self.expect_punct(')')?;
                Ok(inner)
            }
            other => Err(syntax_error(t.span, format!("unexpected {}", describe(&other)))),
        }
    }
}

pub fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("`{}`", s),
        Tok::Number(s) => format!("number `{}`", s),
        Tok::Str(s) => format!("string \"{}\"", s),
        Tok::Punct(c) => format!("`{}`", c),
        Tok::Arrow => "`->`".to_string(),
        Tok::Eof => "end of input".to_string(),
    }
}

/// Parse a complete expression into an untyped tree.
pub fn parse_ast(text: &str) -> Result<Ast> {
    let tokens = lex(text)?;
    let mut p = Parser::new(&tokens);
    let ast = p.parse_expr()?;
    if !p.at_eof() {
        let t = p.peek();
        return Err(syntax_error(t.span, format!("unexpected {}", describe(&t.tok))));
    }
    Ok(ast)
}

/// Parse and normalize a scalar expression over `coords`.
pub fn parse(text: &str, coords: &Coordinates) -> Result<Expr> {
    let ast = parse_ast(text)?;
    crate::lang::Env::new(coords).eval(&ast)?.into_scalar()
}
