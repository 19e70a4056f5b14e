//! Tokenizer and cursor shared by the campaign, bow-tie model and landscape
//! file formats.
//!
//! All three formats use the same lexical conventions: whitespace is
//! insignificant, `#` starts a comment that runs to the end of the line,
//! identifiers are `[A-Za-z_][A-Za-z0-9_]*`, numbers are decimal with an
//! optional sign, fraction and exponent, and strings are double-quoted with
//! `\"` and `\\` escapes. Positions are 1-based.

use std::fmt;

/// A parse failure with the 1-based position it refers to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl Diagnostic {
    pub fn new(line: usize, column: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            column,
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)
    }
}

impl std::error::Error for Diagnostic {}

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Ident(String),
    /// Raw numeric text; converted on demand so integers keep full precision.
    Number(String),
    Str(String),
    Punct(char),
    Arrow,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Ident(s) => write!(f, "identifier `{s}`"),
            TokenKind::Number(s) => write!(f, "number `{s}`"),
            TokenKind::Str(s) => write!(f, "string {s:?}"),
            TokenKind::Punct(c) => write!(f, "`{c}`"),
            TokenKind::Arrow => write!(f, "`->`"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub line: usize,
    pub column: usize,
}

const PUNCT: &[char] = &['{', '}', '[', ']', ',', ';', ':', '=', '*'];

pub fn tokenize(text: &str) -> Result<Vec<Token>, Diagnostic> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    let mut line = 1;
    let mut column = 1;

    while i < chars.len() {
        let c = chars[i];
        let (start_line, start_col) = (line, column);
        if c == '\n' {
            i += 1;
            line += 1;
            column = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            column += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c == '-' && chars.get(i + 1) == Some(&'>') {
            tokens.push(Token {
                kind: TokenKind::Arrow,
                line,
                column,
            });
            i += 2;
            column += 2;
            continue;
        }
        if PUNCT.contains(&c) {
            tokens.push(Token {
                kind: TokenKind::Punct(c),
                line,
                column,
            });
            i += 1;
            column += 1;
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            column += i - start;
            tokens.push(Token {
                kind: TokenKind::Ident(chars[start..i].iter().collect()),
                line: start_line,
                column: start_col,
            });
            continue;
        }
        if c.is_ascii_digit() || ((c == '-' || c == '+' || c == '.') && next_starts_number(&chars, i)) {
            let start = i;
            if c == '-' || c == '+' {
                i += 1;
            }
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
                } else {
                    return Err(Diagnostic::new(line, column + (i - start), "malformed exponent"));
                }
            }
            if i < chars.len() && (chars[i].is_ascii_alphabetic() || chars[i] == '_') {
                return Err(Diagnostic::new(
                    line,
                    column + (i - start),
                    format!("unexpected character `{}` after number", chars[i]),
                ));
            }
            column += i - start;
            tokens.push(Token {
                kind: TokenKind::Number(chars[start..i].iter().collect()),
                line: start_line,
                column: start_col,
            });
            continue;
        }
        if c == '"' {
            i += 1;
            column += 1;
            let mut value = String::new();
            loop {
                match chars.get(i) {
                    None | Some('\n') => {
                        return Err(Diagnostic::new(start_line, start_col, "unterminated string"))
                    }
                    Some('"') => {
                        i += 1;
                        column += 1;
                        break;
                    }
                    Some('\\') => match chars.get(i + 1) {
                        Some(&e @ ('"' | '\\')) => {
                            value.push(e);
                            i += 2;
                            column += 2;
                        }
                        _ => return Err(Diagnostic::new(line, column, "invalid escape in string")),
                    },
                    Some(&ch) => {
                        value.push(ch);
                        i += 1;
                        column += 1;
                    }
                }
            }
            tokens.push(Token {
                kind: TokenKind::Str(value),
                line: start_line,
                column: start_col,
            });
            continue;
        }
        return Err(Diagnostic::new(line, column, format!("unexpected character `{c}`")));
    }
    Ok(tokens)
}

fn next_starts_number(chars: &[char], i: usize) -> bool {
    match chars.get(i + 1) {
        Some(d) if d.is_ascii_digit() => true,
        Some('.') if chars[i] != '.' => chars.get(i + 2).is_some_and(|d| d.is_ascii_digit()),
        _ => false,
    }
}

/// Recursive-descent helper over a token stream.
pub struct Cursor {
    tokens: Vec<Token>,
    pos: usize,
    end: (usize, usize),
}

impl Cursor {
    pub fn new(text: &str) -> Result<Self, Diagnostic> {
        let tokens = tokenize(text)?;
        let lines = text.split('\n').count();
        let last_col = text.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        Ok(Self {
            tokens,
            pos: 0,
            end: (lines.max(1), last_col),
        })
    }

    pub fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    pub fn peek_kind(&self) -> Option<&TokenKind> {
        self.peek().map(|t| &t.kind)
    }

    pub fn at_end(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    pub fn advance(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    /// Position of the next token, or end of input.
    pub fn here(&self) -> (usize, usize) {
        self.peek().map_or(self.end, |t| (t.line, t.column))
    }

    pub fn error_here(&self, message: impl Into<String>) -> Diagnostic {
        let (l, c) = self.here();
        Diagnostic::new(l, c, message)
    }

    fn unexpected(&self, wanted: &str) -> Diagnostic {
        match self.peek() {
            Some(t) => Diagnostic::new(t.line, t.column, format!("expected {wanted}, found {}", t.kind)),
            None => {
                let (l, c) = self.end;
                Diagnostic::new(l, c, format!("expected {wanted}, found end of input"))
            }
        }
    }

    pub fn is_punct(&self, c: char) -> bool {
        matches!(self.peek_kind(), Some(TokenKind::Punct(p)) if *p == c)
    }

    pub fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek_kind(), Some(TokenKind::Ident(s)) if s == kw)
    }

    pub fn eat_punct(&mut self, c: char) -> bool {
        if self.is_punct(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub fn expect_punct(&mut self, c: char) -> Result<(), Diagnostic> {
        if self.eat_punct(c) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{c}`")))
        }
    }

    pub fn expect_arrow(&mut self) -> Result<(), Diagnostic> {
        if matches!(self.peek_kind(), Some(TokenKind::Arrow)) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.unexpected("`->`"))
        }
    }

    pub fn expect_keyword(&mut self, kw: &str) -> Result<(), Diagnostic> {
        if self.is_keyword(kw) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{kw}`")))
        }
    }

    pub fn expect_ident(&mut self) -> Result<(String, usize, usize), Diagnostic> {
        match self.peek().cloned() {
            Some(Token {
                kind: TokenKind::Ident(s),
                line,
                column,
            }) => {
                self.pos += 1;
                Ok((s, line, column))
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    pub fn expect_string(&mut self) -> Result<String, Diagnostic> {
        match self.peek().cloned() {
            Some(Token {
                kind: TokenKind::Str(s),
                ..
            }) => {
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.unexpected("string")),
        }
    }

    pub fn expect_f64(&mut self) -> Result<f64, Diagnostic> {
        match self.peek().cloned() {
            Some(Token {
                kind: TokenKind::Number(s),
                line,
                column,
            }) => {
                self.pos += 1;
                let v: f64 = s
                    .parse()
                    .map_err(|_| Diagnostic::new(line, column, format!("invalid number `{s}`")))?;
                if !v.is_finite() {
                    return Err(Diagnostic::new(line, column, format!("number `{s}` is not finite")));
                }
                Ok(v)
            }
            _ => Err(self.unexpected("number")),
        }
    }

    pub fn expect_u64(&mut self) -> Result<u64, Diagnostic> {
        match self.peek().cloned() {
            Some(Token {
                kind: TokenKind::Number(s),
                line,
                column,
            }) => {
                self.pos += 1;
                s.parse()
                    .map_err(|_| Diagnostic::new(line, column, format!("expected a non-negative integer, found `{s}`")))
            }
            _ => Err(self.unexpected("integer")),
        }
    }

    /// `[ a , b ]`
    pub fn expect_interval(&mut self) -> Result<(f64, f64), Diagnostic> {
        self.expect_punct('[')?;
        let lo = self.expect_f64()?;
        self.expect_punct(',')?;
        let hi = self.expect_f64()?;
        self.expect_punct(']')?;
        Ok((lo, hi))
    }

    /// `[ n, n, ... ]`, possibly empty.
    pub fn expect_number_list(&mut self) -> Result<Vec<f64>, Diagnostic> {
        self.expect_punct('[')?;
        let mut out = Vec::new();
        if self.eat_punct(']') {
            return Ok(out);
        }
        loop {
            out.push(self.expect_f64()?);
            if self.eat_punct(']') {
                return Ok(out);
            }
            self.expect_punct(',')?;
        }
    }

    pub fn expect_end(&self) -> Result<(), Diagnostic> {
        if self.at_end() {
            Ok(())
        } else {
            Err(self.unexpected("end of input"))
        }
    }
}

/// Formats a float so that it parses back to the identical value and always
/// lexes as a number.
pub fn fmt_num(v: f64) -> String {
    format!("{v}")
}

/// Quotes a string for the shared lexical format.
pub fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}
