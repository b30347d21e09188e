//! Hand-rolled tokenizer for the SQL subset.

use super::ParseError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Token {
    Ident(String),
    Int(i64),
    Str(String),
    Comma,
    Dot,
    LParen,
    RParen,
    Star,
    Eq,
    Lt,
    Le,
    Gt,
    Ge,
}

#[derive(Debug, Clone)]
pub struct Spanned {
    pub token: Token,
    /// Byte offset into the source text, for error reporting.
    pub pos: usize,
}

pub fn tokenize(sql: &str) -> Result<Vec<Spanned>, ParseError> {
    let bytes = sql.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        match b {
            b' ' | b'\t' | b'\r' | b'\n' => i += 1,
            b',' => {
                tokens.push(Spanned { token: Token::Comma, pos: i });
                i += 1;
            }
            b'.' => {
                tokens.push(Spanned { token: Token::Dot, pos: i });
                i += 1;
            }
            b'(' => {
                tokens.push(Spanned { token: Token::LParen, pos: i });
                i += 1;
            }
            b')' => {
                tokens.push(Spanned { token: Token::RParen, pos: i });
                i += 1;
            }
            b'*' => {
                tokens.push(Spanned { token: Token::Star, pos: i });
                i += 1;
            }
            b'=' => {
                tokens.push(Spanned { token: Token::Eq, pos: i });
                i += 1;
            }
            b'<' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    tokens.push(Spanned { token: Token::Le, pos: i });
                    i += 2;
                } else if bytes.get(i + 1) == Some(&b'>') {
                    return Err(ParseError::Unsupported {
                        construct: "<> inequality predicate".into(),
                    });
                } else {
                    tokens.push(Spanned { token: Token::Lt, pos: i });
                    i += 1;
                }
            }
            b'>' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    tokens.push(Spanned { token: Token::Ge, pos: i });
                    i += 2;
                } else {
                    tokens.push(Spanned { token: Token::Gt, pos: i });
                    i += 1;
                }
            }
            b'!' => {
                return Err(ParseError::Unsupported {
                    construct: "!= inequality predicate".into(),
                });
            }
            b'\'' => {
                let start = i + 1;
                let mut j = start;
                while j < bytes.len() && bytes[j] != b'\'' {
                    j += 1;
                }
                if j >= bytes.len() {
                    return Err(ParseError::Syntax {
                        pos: i,
                        message: "unterminated string literal".into(),
                    });
                }
                tokens.push(Spanned {
                    token: Token::Str(sql[start..j].to_string()),
                    pos: i,
                });
                i = j + 1;
            }
            b'0'..=b'9' | b'-' => {
                let start = i;
                let mut j = if b == b'-' { i + 1 } else { i };
                if b == b'-' && !bytes.get(j).is_some_and(|c| c.is_ascii_digit()) {
                    return Err(ParseError::Syntax {
                        pos: i,
                        message: "expected digits after '-'".into(),
                    });
                }
                while j < bytes.len() && bytes[j].is_ascii_digit() {
                    j += 1;
                }
                let text = &sql[start..j];
                let value = text.parse::<i64>().map_err(|_| ParseError::Syntax {
                    pos: start,
                    message: format!("integer literal `{text}` out of range"),
                })?;
                tokens.push(Spanned { token: Token::Int(value), pos: start });
                i = j;
            }
            b'A'..=b'Z' | b'a'..=b'z' | b'_' => {
                let start = i;
                let mut j = i;
                while j < bytes.len()
                    && (bytes[j].is_ascii_alphanumeric() || bytes[j] == b'_')
                {
                    j += 1;
                }
                tokens.push(Spanned {
                    token: Token::Ident(sql[start..j].to_string()),
                    pos: start,
                });
                i = j;
            }
            other => {
                return Err(ParseError::Syntax {
                    pos: i,
                    message: format!("unexpected character `{}`", other as char),
                });
            }
        }
    }
    Ok(tokens)
}
