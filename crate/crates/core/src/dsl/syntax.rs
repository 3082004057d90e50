//! Lexer and value grammar shared by scenario and profile files.
//!
//! Newlines are insignificant except that they end `#` comments; entries in
//! a block may be separated by commas, newlines, or both.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

/// Literals carry at most this many fractional digits.
pub const MAX_FRACTION_DIGITS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseErrorKind {
    Syntax,
    UnknownKey,
    Range,
    DuplicateId,
    DanglingReference,
}

impl ParseErrorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ParseErrorKind::Syntax => "syntax",
            ParseErrorKind::UnknownKey => "unknown_key",
            ParseErrorKind::Range => "range",
            ParseErrorKind::DuplicateId => "duplicate_id",
            ParseErrorKind::DanglingReference => "dangling_reference",
        }
    }
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[error("{line}:{column}: {kind}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

impl Pos {
    pub const START: Pos = Pos { line: 1, column: 1 };

    pub fn error(self, kind: ParseErrorKind, message: impl Into<String>) -> ParseError {
        ParseError {
            line: self.line,
            column: self.column,
            message: message.into(),
            kind,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Str(String),
    /// Source text of a numeric literal.
    Num(String),
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Colon,
    Comma,
    Arrow,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Str(s) => format!("string {s:?}"),
            Tok::Num(s) => format!("number {s}"),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Arrow => "`->`".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
    /// First token on its source line.
    pub line_start: bool,
}

fn ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '+')
}

/// Splits source text into tokens. Never panics; bad characters become errors.
pub fn lex(source: &str) -> Result<Vec<Token>, Vec<ParseError>> {
    let mut tokens = Vec::new();
    let mut errors = Vec::new();
    let chars: Vec<char> = source.chars().collect();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let mut line_start = true;

    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, column: col };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            line_start = true;
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
        let start = i;
        let tok = match c {
            '{' => Some(Tok::LBrace),
            '}' => Some(Tok::RBrace),
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            ':' => Some(Tok::Colon),
            ',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(tok) = tok {
            i += 1;
            col += 1;
            tokens.push(Token { tok, pos, line_start });
            line_start = false;
            continue;
        }
        if c == '-' && chars.get(i + 1) == Some(&'>') {
            i += 2;
            col += 2;
            tokens.push(Token {
                tok: Tok::Arrow,
                pos,
                line_start,
            });
            line_start = false;
            continue;
        }
        if c == '"' {
            i += 1;
            col += 1;
            let mut text = String::new();
            let mut closed = false;
            while i < chars.len() && chars[i] != '\n' {
                let ch = chars[i];
                i += 1;
                col += 1;
                match ch {
                    '"' => {
                        closed = true;
                        break;
                    }
                    '\\' if i < chars.len() && matches!(chars[i], '"' | '\\') => {
                        text.push(chars[i]);
                        i += 1;
                        col += 1;
                    }
                    _ => text.push(ch),
                }
            }
            if closed {
                tokens.push(Token {
                    tok: Tok::Str(text),
                    pos,
                    line_start,
                });
            } else {
                errors.push(pos.error(ParseErrorKind::Syntax, "unterminated string"));
            }
            line_start = false;
            continue;
        }
        if c.is_ascii_digit() || (c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            i += 1;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            // Trailing identifier characters make the literal malformed.
            while i < chars.len() && ident_continue(chars[i]) {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            col += i - start;
            tokens.push(Token {
                tok: Tok::Num(text),
                pos,
                line_start,
            });
            line_start = false;
            continue;
        }
        if ident_start(c) {
            i += 1;
            while i < chars.len() && ident_continue(chars[i]) {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            col += i - start;
            tokens.push(Token {
                tok: Tok::Ident(text),
                pos,
                line_start,
            });
            line_start = false;
            continue;
        }
        errors.push(pos.error(ParseErrorKind::Syntax, format!("unexpected character {c:?}")));
        i += 1;
        col += 1;
    }
    if errors.is_empty() {
        Ok(tokens)
    } else {
        Err(errors)
    }
}

/// Checks the numeric literal grammar: optional `-`, digits, optional
/// fraction of 1..=6 digits.
pub fn parse_number(text: &str, pos: Pos) -> Result<f64, ParseError> {
    let body = text.strip_prefix('-').unwrap_or(text);
    let (int, frac) = match body.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (body, None),
    };
    let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    if !digits(int) || frac.is_some_and(|f| !digits(f)) {
        return Err(pos.error(
            ParseErrorKind::Syntax,
            format!("malformed number `{text}`"),
        ));
    }
    if frac.is_some_and(|f| f.len() > MAX_FRACTION_DIGITS) {
        return Err(pos.error(
            ParseErrorKind::Syntax,
            format!("`{text}` has more than {MAX_FRACTION_DIGITS} fractional digits"),
        ));
    }
    text.parse::<f64>()
        .map_err(|_| pos.error(ParseErrorKind::Syntax, format!("malformed number `{text}`")))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Num(f64),
    Ident(String),
    Str(String),
    List(Vec<(Value, Pos)>),
    Map(Vec<Entry>),
}

impl Value {
    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Num(_) => "number",
            Value::Ident(_) => "identifier",
            Value::Str(_) => "string",
            Value::List(_) => "list",
            Value::Map(_) => "map",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub key_pos: Pos,
    pub value: Value,
    pub value_pos: Pos,
}

impl Entry {
    fn type_error(&self, want: &str) -> ParseError {
        self.value_pos.error(
            ParseErrorKind::Syntax,
            format!("`{}` expects {want}, found {}", self.key, self.value.type_name()),
        )
    }

    pub fn num(&self) -> Result<f64, ParseError> {
        match self.value {
            Value::Num(x) => Ok(x),
            _ => Err(self.type_error("a number")),
        }
    }

    /// Number constrained to `[lo, hi]`.
    pub fn num_in(&self, lo: f64, hi: f64) -> Result<f64, ParseError> {
        let x = self.num()?;
        if (lo..=hi).contains(&x) {
            Ok(x)
        } else {
            Err(self.value_pos.error(
                ParseErrorKind::Range,
                format!("`{}` = {x} outside [{lo}, {hi}]", self.key),
            ))
        }
    }

    pub fn unit(&self) -> Result<f64, ParseError> {
        self.num_in(0.0, 1.0)
    }

    pub fn ident(&self) -> Result<&str, ParseError> {
        match &self.value {
            Value::Ident(s) => Ok(s),
            _ => Err(self.type_error("an identifier")),
        }
    }

    /// Identifier or quoted string.
    pub fn text(&self) -> Result<&str, ParseError> {
        match &self.value {
            Value::Ident(s) | Value::Str(s) => Ok(s),
            _ => Err(self.type_error("text")),
        }
    }

    pub fn boolean(&self) -> Result<bool, ParseError> {
        match self.ident() {
            Ok("true") => Ok(true),
            Ok("false") => Ok(false),
            _ => Err(self.type_error("`true` or `false`")),
        }
    }

    pub fn ident_list(&self) -> Result<Vec<(String, Pos)>, ParseError> {
        match &self.value {
            Value::List(items) => items
                .iter()
                .map(|(v, p)| match v {
                    Value::Ident(s) => Ok((s.clone(), *p)),
                    other => Err(p.error(
                        ParseErrorKind::Syntax,
                        format!("list of identifiers expected, found {}", other.type_name()),
                    )),
                })
                .collect(),
            _ => Err(self.type_error("a list")),
        }
    }

    pub fn unknown(&self, context: &str) -> ParseError {
        self.key_pos.error(
            ParseErrorKind::UnknownKey,
            format!("unknown key `{}` in {context}", self.key),
        )
    }
}

/// Cursor over a token stream.
pub struct Cursor<'a> {
    tokens: &'a [Token],
    at: usize,
    end: Pos,
}

impl<'a> Cursor<'a> {
    pub fn new(tokens: &'a [Token]) -> Self {
        let end = tokens
            .last()
            .map(|t| Pos {
                line: t.pos.line,
                column: t.pos.column + 1,
            })
            .unwrap_or(Pos::START);
        Self { tokens, at: 0, end }
    }

    pub fn peek(&self) -> Option<&'a Token> {
        self.tokens.get(self.at)
    }

    pub fn is_done(&self) -> bool {
        self.at >= self.tokens.len()
    }

    pub fn pos(&self) -> Pos {
        self.peek().map(|t| t.pos).unwrap_or(self.end)
    }

    pub fn next(&mut self) -> Option<&'a Token> {
        let t = self.tokens.get(self.at);
        if t.is_some() {
            self.at += 1;
        }
        t
    }

    fn unexpected(&self, want: &str) -> ParseError {
        match self.peek() {
            Some(t) => t.pos.error(
                ParseErrorKind::Syntax,
                format!("expected {want}, found {}", t.tok.describe()),
            ),
            None => self
                .end
                .error(ParseErrorKind::Syntax, format!("expected {want}, found end of input")),
        }
    }

    pub fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek().is_some_and(|t| &t.tok == tok) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    pub fn expect(&mut self, tok: &Tok, want: &str) -> Result<Pos, ParseError> {
        let pos = self.pos();
        if self.eat(tok) {
            Ok(pos)
        } else {
            Err(self.unexpected(want))
        }
    }

    pub fn ident(&mut self, want: &str) -> Result<(String, Pos), ParseError> {
        match self.peek() {
            Some(Token {
                tok: Tok::Ident(s),
                pos,
                ..
            }) => {
                self.at += 1;
                Ok((s.clone(), *pos))
            }
            _ => Err(self.unexpected(want)),
        }
    }

    pub fn string(&mut self, want: &str) -> Result<(String, Pos), ParseError> {
        match self.peek() {
            Some(Token {
                tok: Tok::Str(s),
                pos,
                ..
            }) => {
                self.at += 1;
                Ok((s.clone(), *pos))
            }
            _ => Err(self.unexpected(want)),
        }
    }

    pub fn at_block(&self) -> bool {
        matches!(self.peek(), Some(Token { tok: Tok::LBrace, .. }))
    }

    pub fn value(&mut self) -> Result<(Value, Pos), ParseError> {
        let pos = self.pos();
        let Some(token) = self.peek() else {
            return Err(self.unexpected("a value"));
        };
        let value = match &token.tok {
            Tok::Num(text) => {
                self.at += 1;
                Value::Num(parse_number(text, pos)?)
            }
            Tok::Ident(s) => {
                self.at += 1;
                Value::Ident(s.clone())
            }
            Tok::Str(s) => {
                self.at += 1;
                Value::Str(s.clone())
            }
            Tok::LBracket => {
                self.at += 1;
                let mut items = Vec::new();
                loop {
                    if self.eat(&Tok::RBracket) {
                        break;
                    }
                    items.push(self.value()?);
                    if !self.eat(&Tok::Comma) {
                        self.expect(&Tok::RBracket, "`,` or `]`")?;
                        break;
                    }
                }
                Value::List(items)
            }
            Tok::LBrace => Value::Map(self.block()?),
            _ => return Err(self.unexpected("a value")),
        };
        Ok((value, pos))
    }

    /// `{ key: value, ... }` with comma or newline separators. Rejects
    /// repeated keys.
    pub fn block(&mut self) -> Result<Vec<Entry>, ParseError> {
        self.expect(&Tok::LBrace, "`{`")?;
        self.entries_until(Some(&Tok::RBrace))
    }

    /// Entries up to `close` (consumed), or to end of input when `close` is None.
    pub fn entries_until(&mut self, close: Option<&Tok>) -> Result<Vec<Entry>, ParseError> {
        let mut entries: Vec<Entry> = Vec::new();
        loop {
            while self.eat(&Tok::Comma) {}
            match close {
                Some(c) if self.eat(c) => return Ok(entries),
                None if self.is_done() => return Ok(entries),
                _ => {}
            }
            let (key, key_pos) = match self.peek() {
                Some(Token {
                    tok: Tok::Ident(s) | Tok::Str(s),
                    pos,
                    ..
                }) => {
                    self.at += 1;
                    (s.clone(), *pos)
                }
                _ => return Err(self.unexpected("a key")),
            };
            self.expect(&Tok::Colon, "`:`")?;
            let (value, value_pos) = self.value()?;
            if entries.iter().any(|e| e.key == key) {
                return Err(key_pos.error(
                    ParseErrorKind::Syntax,
                    format!("key `{key}` given twice"),
                ));
            }
            entries.push(Entry {
                key,
                key_pos,
                value,
                value_pos,
            });
        }
    }

    /// Index of the next unread token.
    pub fn offset(&self) -> usize {
        self.at
    }

    /// Skips to the next token that starts a line and satisfies `is_item`,
    /// always making progress past `start`.
    pub fn recover(&mut self, start: usize, is_item: impl Fn(&Tok) -> bool) {
        if self.at == start {
            self.at += 1;
        }
        while let Some(t) = self.peek() {
            if t.line_start && is_item(&t.tok) {
                return;
            }
            self.at += 1;
        }
    }
}

/// Renders a number in the shortest form the grammar accepts, rounding to
/// the literal precision.
pub fn write_number(x: f64) -> String {
    let s = format!("{x:.prec$}", prec = MAX_FRACTION_DIGITS);
    let s = if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    };
    if s == "-0" {
        "0".to_string()
    } else {
        s
    }
}

/// Quotes text with the escapes the lexer understands.
pub fn write_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        if matches!(c, '"' | '\\') {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

/// True if `s` lexes as a single identifier token.
pub fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    chars.next().is_some_and(ident_start) && chars.all(ident_continue)
}
