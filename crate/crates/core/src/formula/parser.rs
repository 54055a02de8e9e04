use super::{Comparison, Formula};
use crate::rational::{parse_probability, NumberError};
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(String),
    Cmp(Comparison),
    Bang,
    Amp,
    Pipe,
    Arrow,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Eof,
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, column, message: String| ParseError {
        line,
        column,
        message,
    };
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        let single = |tok| Spanned {
            tok,
            line: l0,
            column: c0,
        };
        let mut width = 1;
        let tok = match c {
            '!' => Tok::Bang,
            '&' => Tok::Amp,
            '|' => Tok::Pipe,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '[' => Tok::LBracket,
            ']' => Tok::RBracket,
            '-' if chars.get(i + 1) == Some(&'>') => {
                width = 2;
                Tok::Arrow
            }
            '<' | '>' => {
                let eq = chars.get(i + 1) == Some(&'=');
                width = if eq { 2 } else { 1 };
                Tok::Cmp(match (c, eq) {
                    ('<', true) => Comparison::Le,
                    ('<', false) => Comparison::Lt,
                    ('>', true) => Comparison::Ge,
                    _ => Comparison::Gt,
                })
            }
            c if c.is_ascii_digit() || c == '.' => {
                let start = i;
                let mut j = i;
                while j < chars.len()
                    && (chars[j].is_ascii_digit() || matches!(chars[j], '.' | '/'))
                {
                    j += 1;
                }
                width = j - start;
                Tok::Number(chars[start..j].iter().collect())
            }
            c if c.is_alphabetic() || c == '_' => {
                let start = i;
                let mut j = i;
                while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                width = j - start;
                Tok::Ident(chars[start..j].iter().collect())
            }
            other => return Err(err(l0, c0, format!("unexpected character `{other}`"))),
        };
        out.push(single(tok));
        i += width;
        col += width;
    }
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        column: col,
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

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        let s = &self.toks[self.pos];
        ParseError {
            line: s.line,
            column: s.column,
            message: message.into(),
        }
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), ParseError> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(self.error(format!("expected {what}, found {}", describe(self.peek()))))
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn implication(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.disjunction()?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            let rhs = self.implication()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.conjunction()?;
        while *self.peek() == Tok::Pipe {
            self.bump();
            lhs = Formula::or(lhs, self.conjunction()?);
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.until()?;
        while *self.peek() == Tok::Amp {
            self.bump();
            lhs = Formula::and(lhs, self.until()?);
        }
        Ok(lhs)
    }

    fn until(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.unary()?;
        if self.is_kw("U") {
            self.bump();
            let rhs = self.until()?;
            return Ok(Formula::until(lhs, rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        if *self.peek() == Tok::Bang {
            self.bump();
            return Ok(Formula::not(self.unary()?));
        }
        if let Tok::Ident(s) = self.peek() {
            let wrap: Option<fn(Formula) -> Formula> = match s.as_str() {
                "X" => Some(Formula::next),
                "F" => Some(Formula::eventually),
                "G" => Some(Formula::always),
                _ => None,
            };
            if let Some(wrap) = wrap {
                self.bump();
                return Ok(wrap(self.unary()?));
            }
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Formula, ParseError> {
        match self.peek().clone() {
            Tok::LParen => {
                self.bump();
                let f = self.implication()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(f)
            }
            Tok::Ident(s) if s == "P" && matches!(self.peek_at(1), Tok::Cmp(_)) => {
                self.bump();
                let Tok::Cmp(cmp) = self.bump() else {
                    unreachable!()
                };
                let num = match self.peek().clone() {
                    Tok::Number(n) => n,
                    other => {
                        return Err(
                            self.error(format!("expected probability, found {}", describe(&other)))
                        )
                    }
                };
                let p = parse_probability(&num).map_err(|e| match e {
                    NumberError::OutOfRange(_) => {
                        self.error(format!("probability {num} out of range [0,1]"))
                    }
                    other => self.error(other.to_string()),
                })?;
                self.bump();
                self.expect(Tok::LBracket, "`[`")?;
                let body = self.implication()?;
                self.expect(Tok::RBracket, "`]`")?;
                Ok(Formula::prob(cmp, p, body))
            }
            Tok::Ident(s) => match s.as_str() {
                "true" => {
                    self.bump();
                    Ok(Formula::True)
                }
                "false" => {
                    self.bump();
                    Ok(Formula::False)
                }
                "U" | "X" | "F" | "G" => Err(self.error(format!("unexpected operator `{s}`"))),
                _ => {
                    self.bump();
                    Ok(Formula::Prop(s))
                }
            },
            other => Err(self.error(format!("expected formula, found {}", describe(&other)))),
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Number(n) => format!("number `{n}`"),
        Tok::Cmp(c) => format!("`{c}`"),
        Tok::Bang => "`!`".into(),
        Tok::Amp => "`&`".into(),
        Tok::Pipe => "`|`".into(),
        Tok::Arrow => "`->`".into(),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::LBracket => "`[`".into(),
        Tok::RBracket => "`]`".into(),
        Tok::Eof => "end of input".into(),
    }
}

/// Parses the surface grammar. Precedence, tightest first:
/// `! X F G`, then `U` (right-assoc), `&`, `|`, `->` (right-assoc).
pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
    };
    let f = p.implication()?;
    if *p.peek() != Tok::Eof {
        return Err(p.error(format!("unexpected {}", describe(p.peek()))));
    }
    Ok(f)
}
