//! S-expression values: the substrate for rewrite patterns.

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sexpr {
    Atom(String),
    List(Vec<Sexpr>),
}

impl Sexpr {
    pub fn atom(s: impl Into<String>) -> Self {
        Sexpr::Atom(s.into())
    }

    pub fn list(items: Vec<Sexpr>) -> Self {
        Sexpr::List(items)
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            Sexpr::Atom(s) => Some(s),
            Sexpr::List(_) => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Sexpr]> {
        match self {
            Sexpr::Atom(_) => None,
            Sexpr::List(items) => Some(items),
        }
    }

    /// Head atom of a list form, e.g. `"where"` for `(where ...)`.
    pub fn head(&self) -> Option<&str> {
        self.as_list()?.first()?.as_atom()
    }
}

impl fmt::Display for Sexpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sexpr::Atom(s) => write!(f, "{s}"),
            Sexpr::List(items) => {
                write!(f, "(")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ")?;
                    }
                    write!(f, "{item}")?;
                }
                write!(f, ")")
            }
        }
    }
}

#[derive(Debug, thiserror::Error)]
#[error("s-expression parse error at byte {pos}: {message}")]
pub struct SexprParseError {
    pub pos: usize,
    pub message: String,
}

/// Parse one s-expression; trailing input is an error.
pub fn parse_sexpr(text: &str) -> Result<Sexpr, SexprParseError> {
    let mut parser = SexprParser {
        bytes: text.as_bytes(),
        text,
        pos: 0,
    };
    parser.skip_ws();
    let value = parser.value()?;
    parser.skip_ws();
    if parser.pos != parser.bytes.len() {
        return Err(SexprParseError {
            pos: parser.pos,
            message: "trailing input".into(),
        });
    }
    Ok(value)
}

struct SexprParser<'a> {
    bytes: &'a [u8],
    text: &'a str,
    pos: usize,
}

impl SexprParser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn value(&mut self) -> Result<Sexpr, SexprParseError> {
        self.skip_ws();
        match self.bytes.get(self.pos) {
            Some(b'(') => {
                self.pos += 1;
                let mut items = Vec::new();
                loop {
                    self.skip_ws();
                    match self.bytes.get(self.pos) {
                        Some(b')') => {
                            self.pos += 1;
                            return Ok(Sexpr::List(items));
                        }
                        Some(_) => items.push(self.value()?),
                        None => {
                            return Err(SexprParseError {
                                pos: self.pos,
                                message: "unclosed list".into(),
                            })
                        }
                    }
                }
            }
            Some(b')') => Err(SexprParseError {
                pos: self.pos,
                message: "unexpected `)`".into(),
            }),
            Some(_) => {
                let start = self.pos;
                while self.pos < self.bytes.len()
                    && !self.bytes[self.pos].is_ascii_whitespace()
                    && self.bytes[self.pos] != b'('
                    && self.bytes[self.pos] != b')'
                {
                    self.pos += 1;
                }
                Ok(Sexpr::Atom(self.text[start..self.pos].to_string()))
            }
            None => Err(SexprParseError {
                pos: self.pos,
                message: "unexpected end of input".into(),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_print_roundtrip() {
        for text in [
            "(where (cmp = (col t.a) (int 5)))",
            "atom",
            "(a (b c) (d (e)))",
            "()",
        ] {
            let v = parse_sexpr(text).unwrap();
            assert_eq!(v.to_string(), text);
        }
    }

    #[test]
    fn parse_errors() {
        assert!(parse_sexpr("(a b").is_err());
        assert!(parse_sexpr("a b").is_err());
        assert!(parse_sexpr(")").is_err());
    }
}
