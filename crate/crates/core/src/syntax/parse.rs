//! Lexer and recursive-descent parser for `.mem` source files.

use std::fmt;

use num_traits::{One, Zero};
use thiserror::Error;

use super::{Comp, Ident, Val};
use crate::scalar::parse_rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{col}: syntax error: expected {}, found {found}", expected.join(" or "))]
pub struct SyntaxError {
    pub line: usize,
    pub col: usize,
    pub expected: Vec<String>,
    pub found: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(String),
    Arrow,
    EqEq,
    At,
    Dot,
    LParen,
    RParen,
    Comma,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Num(s) => write!(f, "number `{s}`"),
            Tok::Arrow => f.write_str("`<-`"),
            Tok::EqEq => f.write_str("`==`"),
            Tok::At => f.write_str("`@`"),
            Tok::Dot => f.write_str("`.`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

const KEYWORDS: &[&str] = &[
    "return", "let", "val", "in", "if", "then", "else", "match", "as", "flip", "fresh", "memfn",
    "true", "false",
];

struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>, SyntaxError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, col, found: String| SyntaxError {
        line,
        col,
        expected: vec!["a token".into()],
        found,
    };
    while i < chars.len() {
        let c = chars[i];
        let (start_line, start_col) = (line, col);
        let advance = |n: usize, i: &mut usize, col: &mut usize| {
            *i += n;
            *col += n;
        };
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
                continue;
            }
            c if c.is_whitespace() => {
                advance(1, &mut i, &mut col);
                continue;
            }
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                continue;
            }
            _ => {}
        }
        let tok = if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                advance(1, &mut i, &mut col);
            }
            Tok::Ident(chars[start..i].iter().collect())
        } else if c.is_ascii_digit() {
            let start = i;
            let digits = |i: &mut usize, col: &mut usize| {
                while *i < chars.len() && chars[*i].is_ascii_digit() {
                    *i += 1;
                    *col += 1;
                }
            };
            digits(&mut i, &mut col);
            if i + 1 < chars.len()
                && (chars[i] == '/' || chars[i] == '.')
                && chars[i + 1].is_ascii_digit()
            {
                advance(1, &mut i, &mut col);
                digits(&mut i, &mut col);
            }
            Tok::Num(chars[start..i].iter().collect())
        } else {
            let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
            let (tok, n) = match (c, two.as_str()) {
                (_, "<-") => (Tok::Arrow, 2),
                (_, "==") => (Tok::EqEq, 2),
                ('@', _) => (Tok::At, 1),
                ('.', _) => (Tok::Dot, 1),
                ('(', _) => (Tok::LParen, 1),
                (')', _) => (Tok::RParen, 1),
                (',', _) => (Tok::Comma, 1),
                _ => return Err(err(line, col, format!("unexpected character `{c}`"))),
            };
            advance(n, &mut i, &mut col);
            tok
        };
        out.push(Spanned {
            tok,
            line: start_line,
            col: start_col,
        });
    }
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn error(&self, expected: &[&str]) -> SyntaxError {
        let here = &self.toks[self.pos];
        SyntaxError {
            line: here.line,
            col: here.col,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: here.tok.to_string(),
        }
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if t != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn keyword(&mut self, kw: &str) -> Result<(), SyntaxError> {
        if self.is_keyword(kw) {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&[&format!("`{kw}`")]))
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), SyntaxError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&[&tok.to_string()]))
        }
    }

    fn ident(&mut self) -> Result<Ident, SyntaxError> {
        match self.peek() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                let s = s.clone();
                self.bump();
                Ok(Ident::new(s))
            }
            _ => Err(self.error(&["identifier"])),
        }
    }

    fn comp(&mut self) -> Result<Comp, SyntaxError> {
        match self.peek().clone() {
            Tok::Ident(kw) if kw == "return" => {
                self.bump();
                Ok(Comp::Return(self.val()?))
            }
            Tok::Ident(kw) if kw == "let" => {
                self.bump();
                self.keyword("val")?;
                let x = self.ident()?;
                self.expect(Tok::Arrow)?;
                let u = self.comp()?;
                self.keyword("in")?;
                let t = self.comp()?;
                Ok(Comp::Let(x, Box::new(u), Box::new(t)))
            }
            Tok::Ident(kw) if kw == "if" => {
                self.bump();
                let v = self.val()?;
                self.keyword("then")?;
                let u = self.comp()?;
                self.keyword("else")?;
                let t = self.comp()?;
                Ok(Comp::If(v, Box::new(u), Box::new(t)))
            }
            Tok::Ident(kw) if kw == "match" => {
                self.bump();
                let v = self.val()?;
                self.keyword("as")?;
                self.expect(Tok::LParen)?;
                let x = self.ident()?;
                self.expect(Tok::Comma)?;
                let y = self.ident()?;
                self.expect(Tok::RParen)?;
                self.keyword("in")?;
                let t = self.comp()?;
                Ok(Comp::Match(v, x, y, Box::new(t)))
            }
            Tok::Ident(kw) if kw == "flip" => {
                self.bump();
                self.expect(Tok::LParen)?;
                let theta = match self.peek().clone() {
                    Tok::Num(text) => {
                        let p = parse_rational(&text)
                            .ok_or_else(|| self.error(&["rational literal"]))?;
                        if p < num_rational::BigRational::zero()
                            || p > num_rational::BigRational::one()
                        {
                            return Err(self.error(&["probability in [0, 1]"]));
                        }
                        self.bump();
                        p
                    }
                    _ => return Err(self.error(&["rational literal"])),
                };
                self.expect(Tok::RParen)?;
                Ok(Comp::Flip(theta))
            }
            Tok::Ident(kw) if kw == "fresh" => {
                self.bump();
                self.expect(Tok::LParen)?;
                self.expect(Tok::RParen)?;
                Ok(Comp::Fresh)
            }
            Tok::Ident(kw) if kw == "memfn" => {
                self.bump();
                let x = self.ident()?;
                self.expect(Tok::Dot)?;
                let body = self.comp()?;
                Ok(Comp::MemFn(x, Box::new(body)))
            }
            Tok::LParen => {
                let start = self.pos;
                if let Ok(c) = self.operator_comp() {
                    return Ok(c);
                }
                self.pos = start;
                self.bump();
                let c = self.comp()?;
                self.expect(Tok::RParen)?;
                Ok(c)
            }
            Tok::Ident(_) => self.operator_comp(),
            _ => Err(self.error(&["computation"])),
        }
    }

    /// `v == w` or `v @ w`.
    fn operator_comp(&mut self) -> Result<Comp, SyntaxError> {
        let v = self.val()?;
        match self.peek() {
            Tok::EqEq => {
                self.bump();
                Ok(Comp::Eq(v, self.val()?))
            }
            Tok::At => {
                self.bump();
                Ok(Comp::App(v, self.val()?))
            }
            _ => Err(self.error(&["`==`", "`@`"])),
        }
    }

    fn val(&mut self) -> Result<Val, SyntaxError> {
        match self.peek().clone() {
            Tok::Ident(s) if s == "true" => {
                self.bump();
                Ok(Val::True)
            }
            Tok::Ident(s) if s == "false" => {
                self.bump();
                Ok(Val::False)
            }
            Tok::Ident(_) => Ok(Val::Var(self.ident()?)),
            Tok::LParen => {
                self.bump();
                let a = self.val()?;
                self.expect(Tok::Comma)?;
                let b = self.val()?;
                self.expect(Tok::RParen)?;
                Ok(Val::pair(a, b))
            }
            _ => Err(self.error(&["value"])),
        }
    }
}

/// Parses a whole program; trailing input is an error.
pub fn parse_program(text: &str) -> Result<Comp, SyntaxError> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
    };
    let c = p.comp()?;
    if *p.peek() != Tok::Eof {
        return Err(p.error(&["end of input"]));
    }
    Ok(c)
}
