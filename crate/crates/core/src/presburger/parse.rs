//! Concrete syntax:
//!
//! ```text
//! formula := conj ('|' conj)*
//! conj    := unary ('&' unary)*
//! unary   := '!' unary | '(' formula ')' | atom
//! atom    := ident rel num ['(' 'mod' num ')']
//!          | ident '%' num rel num
//!          | ident '%' num 'in' '{' [num (',' num)*] '}'
//! rel     := '<' | '<=' | '=' | '==' | '>=' | '>'
//! ```
//!
//! `&&` and `||` are accepted as aliases.

use std::collections::BTreeSet;

use thiserror::Error;

use super::{Formula, Rel};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("syntax error at position {pos}: {kind}")]
pub struct ParseError {
    pub pos: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    #[error("expected {expected}, found {found}")]
    Unexpected { expected: String, found: String },
    #[error("invalid number `{0}`")]
    BadNumber(String),
    #[error("unexpected character `{0}`")]
    BadChar(char),
    #[error("atoms must mention exactly one variable")]
    NonMonadic,
    #[error("modulus must be at least 1")]
    ZeroModulus,
    #[error("residue {residue} is not below modulus {modulus}")]
    ResidueOutOfRange { residue: u64, modulus: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Num(String),
    Rel(Rel),
    Percent,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Bang,
    Amp,
    Pipe,
    Arith(char),
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Num(s) => format!("number `{s}`"),
            Tok::Rel(r) => format!("`{}`", r.symbol()),
            Tok::Percent => "`%`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Bang => "`!`".into(),
            Tok::Amp => "`&`".into(),
            Tok::Pipe => "`|`".into(),
            Tok::Arith(c) => format!("`{c}`"),
            Tok::End => "end of input".into(),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let peek = |i: usize| chars.get(i).map(|&(_, c)| c);
    while i < chars.len() {
        let (pos, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let (tok, len) = match c {
            '(' => (Tok::LParen, 1),
            ')' => (Tok::RParen, 1),
            '{' => (Tok::LBrace, 1),
            '}' => (Tok::RBrace, 1),
            ',' => (Tok::Comma, 1),
            '%' => (Tok::Percent, 1),
            '!' => (Tok::Bang, 1),
            '&' => (Tok::Amp, if peek(i + 1) == Some('&') { 2 } else { 1 }),
            '|' => (Tok::Pipe, if peek(i + 1) == Some('|') { 2 } else { 1 }),
            '+' | '-' | '*' => (Tok::Arith(c), 1),
            '<' if peek(i + 1) == Some('=') => (Tok::Rel(Rel::Le), 2),
            '<' => (Tok::Rel(Rel::Lt), 1),
            '>' if peek(i + 1) == Some('=') => (Tok::Rel(Rel::Ge), 2),
            '>' => (Tok::Rel(Rel::Gt), 1),
            '=' if peek(i + 1) == Some('=') => (Tok::Rel(Rel::Eq), 2),
            '=' => (Tok::Rel(Rel::Eq), 1),
            c if c.is_ascii_digit() => {
                let mut j = i;
                while peek(j).is_some_and(|c| c.is_ascii_digit()) {
                    j += 1;
                }
                let s: String = chars[i..j].iter().map(|&(_, c)| c).collect();
                (Tok::Num(s), j - i)
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut j = i;
                while peek(j).is_some_and(|c| c.is_alphanumeric() || c == '_') {
                    j += 1;
                }
                let s: String = chars[i..j].iter().map(|&(_, c)| c).collect();
                (Tok::Ident(s), j - i)
            }
            other => {
                return Err(ParseError {
                    pos,
                    kind: ParseErrorKind::BadChar(other),
                })
            }
        };
        out.push((pos, tok));
        i += len;
    }
    out.push((text.len(), Tok::End));
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].1
    }

    fn pos(&self) -> usize {
        self.toks[self.at].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].1.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        ParseError {
            pos: self.pos(),
            kind: ParseErrorKind::Unexpected {
                expected: expected.to_owned(),
                found: self.peek().describe(),
            },
        }
    }

    fn expect(&mut self, tok: Tok, expected: &str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(expected))
        }
    }

    fn number(&mut self) -> Result<u64, ParseError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Num(s) => {
                self.bump();
                s.parse().map_err(|_| ParseError {
                    pos,
                    kind: ParseErrorKind::BadNumber(s),
                })
            }
            _ => Err(self.unexpected("a number")),
        }
    }

    fn modulus(&mut self) -> Result<u64, ParseError> {
        let pos = self.pos();
        let m = self.number()?;
        if m == 0 {
            return Err(ParseError {
                pos,
                kind: ParseErrorKind::ZeroModulus,
            });
        }
        Ok(m)
    }

    fn rel(&mut self) -> Result<Rel, ParseError> {
        match self.peek() {
            Tok::Rel(r) => {
                let r = *r;
                self.bump();
                Ok(r)
            }
            Tok::Arith(_) => Err(self.non_monadic()),
            _ => Err(self.unexpected("a comparison")),
        }
    }

    fn non_monadic(&self) -> ParseError {
        ParseError {
            pos: self.pos(),
            kind: ParseErrorKind::NonMonadic,
        }
    }

    fn formula(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.conj()?;
        while *self.peek() == Tok::Pipe {
            self.bump();
            let rhs = self.conj()?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn conj(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.unary()?;
        while *self.peek() == Tok::Amp {
            self.bump();
            let rhs = self.unary()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        match self.peek() {
            Tok::Bang => {
                self.bump();
                Ok(Formula::not(self.unary()?))
            }
            Tok::LParen => {
                self.bump();
                let f = self.formula()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(f)
            }
            Tok::Ident(_) => self.atom(),
            _ => Err(self.unexpected("an atom, `!` or `(`")),
        }
    }

    fn atom(&mut self) -> Result<Formula, ParseError> {
        let var = match self.bump() {
            Tok::Ident(v) => v,
            _ => unreachable!("atom starts with an identifier"),
        };
        if *self.peek() == Tok::Percent {
            self.bump();
            let modulus = self.modulus()?;
            if matches!(self.peek(), Tok::Ident(kw) if kw == "in") {
                self.bump();
                return self.residue_set(var, modulus);
            }
            let rel = self.rel()?;
            let bound = self.number()?;
            return Ok(Formula::ModCmp {
                var,
                modulus,
                rel,
                bound,
            });
        }
        let rel = self.rel()?;
        if matches!(self.peek(), Tok::Ident(_)) {
            return Err(self.non_monadic());
        }
        let bound = self.number()?;
        // optional suffix: `x >= 2 (mod 7)`
        if *self.peek() == Tok::LParen
            && matches!(self.toks.get(self.at + 1), Some((_, Tok::Ident(kw))) if kw == "mod")
        {
            self.bump();
            self.bump();
            let modulus = self.modulus()?;
            self.expect(Tok::RParen, "`)`")?;
            return Ok(Formula::ModCmp {
                var,
                modulus,
                rel,
                bound,
            });
        }
        Ok(Formula::Threshold { var, rel, bound })
    }

    fn residue_set(&mut self, var: String, modulus: u64) -> Result<Formula, ParseError> {
        self.expect(Tok::LBrace, "`{`")?;
        let mut accepted = BTreeSet::new();
        if *self.peek() != Tok::RBrace {
            loop {
                let pos = self.pos();
                let r = self.number()?;
                if r >= modulus {
                    return Err(ParseError {
                        pos,
                        kind: ParseErrorKind::ResidueOutOfRange {
                            residue: r,
                            modulus,
                        },
                    });
                }
                accepted.insert(r);
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RBrace, "`}` or `,`")?;
        Ok(Formula::Mod {
            var,
            modulus,
            accepted,
        })
    }
}

pub fn parse(text: &str) -> Result<Formula, ParseError> {
    let mut p = Parser {
        toks: lex(text)?,
        at: 0,
    };
    let f = p.formula()?;
    match p.peek() {
        Tok::End => Ok(f),
        Tok::Arith(_) => Err(p.non_monadic()),
        _ => Err(p.unexpected("`&`, `|` or end of input")),
    }
}
