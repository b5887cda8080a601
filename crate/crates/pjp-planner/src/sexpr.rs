//! S-expression reader for the domain/problem dialect.
//!
//! Besides the usual atoms and lists, the reader understands string literals
//! (`"b[?a]"`), coefficient vectors (`[1,3]`, `[,]`, `[]`) and `;` comments.
//! Every node carries its source position for error reporting.

use std::fmt;

use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Sexpr {
    Sym(String, Pos),
    Num(f64, Pos),
    Str(String, Pos),
    /// Bracketed coefficient vector; `None` entries are unknown (`[,]`).
    Vector(Vec<Option<f64>>, Pos),
    List(Vec<Sexpr>, Pos),
}

impl Sexpr {
    pub fn pos(&self) -> Pos {
        match self {
            Sexpr::Sym(_, p) | Sexpr::Num(_, p) | Sexpr::Str(_, p) | Sexpr::Vector(_, p) | Sexpr::List(_, p) => *p,
        }
    }

    pub fn as_sym(&self) -> Option<&str> {
        match self {
            Sexpr::Sym(s, _) => Some(s),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Sexpr]> {
        match self {
            Sexpr::List(items, _) => Some(items),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, Error, PartialEq)]
#[error("parse error at {pos}: {message}")]
pub struct ParseError {
    pub pos: Pos,
    pub message: String,
}

impl ParseError {
    pub fn new(pos: Pos, message: impl Into<String>) -> Self {
        ParseError { pos, message: message.into() }
    }
}

struct Reader<'a> {
    src: &'a [u8],
    i: usize,
    line: usize,
    col: usize,
}

impl<'a> Reader<'a> {
    fn new(src: &'a str) -> Self {
        Reader { src: src.as_bytes(), i: 0, line: 1, col: 1 }
    }

    fn pos(&self) -> Pos {
        Pos { line: self.line, col: self.col }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.i).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.peek()?;
        self.i += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_ascii_whitespace() {
                self.bump();
            } else if c == b';' {
                while let Some(c) = self.peek() {
                    if c == b'\n' {
                        break;
                    }
                    self.bump();
                }
            } else {
                break;
            }
        }
    }

    fn read(&mut self) -> Result<Sexpr, ParseError> {
        self.skip_trivia();
        let pos = self.pos();
        match self.peek() {
            None => Err(ParseError::new(pos, "unexpected end of input")),
            Some(b'(') => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_trivia();
                    match self.peek() {
                        None => return Err(ParseError::new(pos, "unclosed '('")),
                        Some(b')') => {
                            self.bump();
                            return Ok(Sexpr::List(items, pos));
                        }
                        Some(_) => items.push(self.read()?),
                    }
                }
            }
            Some(b')') => Err(ParseError::new(pos, "unexpected ')'")),
            Some(b'"') => {
                self.bump();
                let mut s = String::new();
                loop {
                    match self.bump() {
                        None => return Err(ParseError::new(pos, "unterminated string")),
                        Some(b'"') => return Ok(Sexpr::Str(s, pos)),
                        Some(c) => s.push(c as char),
                    }
                }
            }
            Some(b'[') => {
                self.bump();
                let mut body = String::new();
                loop {
                    match self.bump() {
                        None => return Err(ParseError::new(pos, "unclosed '['")),
                        Some(b']') => break,
                        Some(c) => body.push(c as char),
                    }
                }
                let trimmed = body.trim();
                if trimmed.is_empty() {
                    return Ok(Sexpr::Vector(Vec::new(), pos));
                }
                let mut entries = Vec::new();
                for part in trimmed.split(',') {
                    let part = part.trim();
                    if part.is_empty() {
                        entries.push(None);
                    } else {
                        let x = part.parse::<f64>().map_err(|_| {
                            ParseError::new(pos, format!("bad coefficient `{}`", part))
                        })?;
                        entries.push(Some(x));
                    }
                }
                Ok(Sexpr::Vector(entries, pos))
            }
            Some(_) => {
                let mut s = String::new();
                while let Some(c) = self.peek() {
                    if c.is_ascii_whitespace() || matches!(c, b'(' | b')' | b'[' | b']' | b'"' | b';') {
                        break;
                    }
                    s.push(c as char);
                    self.bump();
                }
                if let Ok(x) = s.parse::<f64>() {
                    Ok(Sexpr::Num(x, pos))
                } else {
                    Ok(Sexpr::Sym(s, pos))
                }
            }
        }
    }
}

/// Reads all top-level forms of `src`.
pub fn parse_all(src: &str) -> Result<Vec<Sexpr>, ParseError> {
    let mut reader = Reader::new(src);
    let mut out = Vec::new();
    loop {
        reader.skip_trivia();
        if reader.peek().is_none() {
            return Ok(out);
        }
        out.push(reader.read()?);
    }
}

/// Reads exactly one top-level form.
pub fn parse_one(src: &str) -> Result<Sexpr, ParseError> {
    let forms = parse_all(src)?;
    match forms.len() {
        1 => Ok(forms.into_iter().next().unwrap()),
        0 => Err(ParseError::new(Pos { line: 1, col: 1 }, "empty input")),
        _ => Err(ParseError::new(forms[1].pos(), "expected a single form")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_rules_block_shapes() {
        let src = "(:rules (static (agent_loc a) [] []) (1st_poly (secret sa) [1.0,2.0] [,]))";
        let e = parse_one(src).unwrap();
        let items = e.as_list().unwrap();
        assert_eq!(items[0].as_sym(), Some(":rules"));
        let poly = items[2].as_list().unwrap();
        assert_eq!(poly[0].as_sym(), Some("1st_poly"));
        assert_eq!(poly[2], Sexpr::Vector(vec![Some(1.0), Some(2.0)], poly[2].pos()));
        assert_eq!(poly[3], Sexpr::Vector(vec![None, None], poly[3].pos()));
    }

    #[test]
    fn reads_strings_and_comments() {
        let src = "; header\n(@jp (\"b[?a]\") (shared ?s)) ; trailing";
        let e = parse_one(src).unwrap();
        let items = e.as_list().unwrap();
        assert_eq!(items[0].as_sym(), Some("@jp"));
        let inner = items[1].as_list().unwrap();
        assert!(matches!(&inner[0], Sexpr::Str(s, _) if s == "b[?a]"));
    }

    #[test]
    fn error_carries_position() {
        let err = parse_one("(a (b c)").unwrap_err();
        assert_eq!(err.pos, Pos { line: 1, col: 1 });
        let err = parse_one("(a\n  (b [1,x]))").unwrap_err();
        assert_eq!(err.pos.line, 2);
    }

    #[test]
    fn numbers_and_symbols() {
        let forms = parse_all("share_others 3.5 -2 rm_1 epi.true").unwrap();
        assert!(matches!(&forms[0], Sexpr::Sym(s, _) if s == "share_others"));
        assert!(matches!(forms[1], Sexpr::Num(x, _) if x == 3.5));
        assert!(matches!(forms[2], Sexpr::Num(x, _) if x == -2.0));
        assert!(matches!(&forms[3], Sexpr::Sym(s, _) if s == "rm_1"));
        assert!(matches!(&forms[4], Sexpr::Sym(s, _) if s == "epi.true"));
    }
}
