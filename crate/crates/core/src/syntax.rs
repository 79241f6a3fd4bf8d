//! Shared tokenizer for the textual term, constraint and template syntax.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    NameRef(u32),
    LParen,
    RParen,
    LBrack,
    RBrack,
    Comma,
    Bar,
    Amp,
    Equals,
    Define,
}

impl std::fmt::Display for Tok {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::NameRef(n) => write!(f, "`#{n}`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::LBrack => f.write_str("`[`"),
            Tok::RBrack => f.write_str("`]`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Bar => f.write_str("`|`"),
            Tok::Amp => f.write_str("`&`"),
            Tok::Equals => f.write_str("`=`"),
            Tok::Define => f.write_str("`:=`"),
        }
    }
}

/// Error raised by the textual parsers.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at byte {offset}: {message}")]
pub struct SyntaxError {
    pub offset: usize,
    pub message: String,
}

impl SyntaxError {
    pub(crate) fn new(offset: usize, message: impl Into<String>) -> Self {
        SyntaxError {
            offset,
            message: message.into(),
        }
    }
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

pub(crate) fn tokenize(src: &str) -> Result<Vec<(usize, Tok)>, SyntaxError> {
    let mut out = Vec::new();
    let mut chars = src.char_indices().peekable();
    while let Some(&(pos, c)) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
            continue;
        }
        let simple = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '[' => Some(Tok::LBrack),
            ']' => Some(Tok::RBrack),
            ',' => Some(Tok::Comma),
            '|' => Some(Tok::Bar),
            '&' => Some(Tok::Amp),
            '=' => Some(Tok::Equals),
            _ => None,
        };
        if let Some(tok) = simple {
            chars.next();
            out.push((pos, tok));
            continue;
        }
        if c == ':' {
            chars.next();
            match chars.next() {
                Some((_, '=')) => out.push((pos, Tok::Define)),
                _ => return Err(SyntaxError::new(pos, "expected `:=`")),
            }
            continue;
        }
        if c == '#' {
            chars.next();
            let mut digits = String::new();
            while let Some(&(_, d)) = chars.peek() {
                if d.is_ascii_digit() {
                    digits.push(d);
                    chars.next();
                } else {
                    break;
                }
            }
            let n = digits
                .parse::<u32>()
                .map_err(|_| SyntaxError::new(pos, "expected digits after `#`"))?;
            out.push((pos, Tok::NameRef(n)));
            continue;
        }
        if is_ident_char(c) || c == '@' {
            let mut ident = String::new();
            ident.push(c);
            chars.next();
            while let Some(&(_, d)) = chars.peek() {
                if is_ident_char(d) {
                    ident.push(d);
                    chars.next();
                } else {
                    break;
                }
            }
            if ident == "@" {
                return Err(SyntaxError::new(pos, "`@` must be followed by a marker name"));
            }
            out.push((pos, Tok::Ident(ident)));
            continue;
        }
        return Err(SyntaxError::new(pos, format!("unexpected character {c:?}")));
    }
    Ok(out)
}

/// Cursor over a token vector.
pub(crate) struct Cursor {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Cursor {
    pub(crate) fn new(src: &str) -> Result<Self, SyntaxError> {
        Ok(Cursor {
            toks: tokenize(src)?,
            pos: 0,
            end: src.len(),
        })
    }

    pub(crate) fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    pub(crate) fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|(o, _)| *o).unwrap_or(self.end)
    }

    pub(crate) fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(_, t)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    pub(crate) fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub(crate) fn expect(&mut self, tok: &Tok) -> Result<(), SyntaxError> {
        if self.eat(tok) {
            Ok(())
        } else {
            Err(self.error(format!("expected {tok}")))
        }
    }

    pub(crate) fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    pub(crate) fn finish(&self) -> Result<(), SyntaxError> {
        match self.peek() {
            None => Ok(()),
            Some(t) => Err(self.error(format!("unexpected trailing {t}"))),
        }
    }

    pub(crate) fn error(&self, message: impl Into<String>) -> SyntaxError {
        let message = message.into();
        match self.peek() {
            Some(t) => SyntaxError::new(self.offset(), format!("{message}, found {t}")),
            None => SyntaxError::new(self.offset(), format!("{message}, found end of input")),
        }
    }
}
