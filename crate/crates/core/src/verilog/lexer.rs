// SPDX-License-Identifier: Apache-2.0

//! Lossless lexer for a Verilog-2005 subset.
//!
//! Every byte of the input ends up in exactly one token: whitespace and
//! comments are emitted as trivia tokens rather than skipped, so the token
//! stream can be concatenated back into the original source.

use serde::{Deserialize, Serialize};

use super::keywords::is_keyword;
use super::{LexError, Span};

/// Lexical class of a token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TokenKind {
    Keyword,
    Identifier,
    Operator,
    NumberLiteral,
    StringLiteral,
    Punctuation,
    Comment,
    Whitespace,
    Directive,
}

impl TokenKind {
    /// Whitespace and comments.
    pub fn is_trivia(self) -> bool {
        matches!(self, TokenKind::Comment | TokenKind::Whitespace)
    }
}

/// A verbatim slice of the source together with its class and byte span.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexToken {
    pub kind: TokenKind,
    pub text: String,
    pub span: Span,
}

impl LexToken {
    pub fn is_trivia(&self) -> bool {
        self.kind.is_trivia()
    }

    pub fn is(&self, kind: TokenKind, text: &str) -> bool {
        self.kind == kind && self.text == text
    }
}

/// Directives that swallow the rest of their line (including `\` continuations).
const LINE_DIRECTIVES: &[&str] = &[
    "define",
    "undef",
    "include",
    "timescale",
    "ifdef",
    "ifndef",
    "elsif",
    "else",
    "endif",
    "default_nettype",
    "resetall",
    "celldefine",
    "endcelldefine",
    "unconnected_drive",
    "nounconnected_drive",
    "line",
    "pragma",
    "begin_keywords",
    "end_keywords",
];

// Longest first so maximal munch works with a linear scan.
const OPERATORS: &[&str] = &[
    "<<<", ">>>", "===", "!==", "==", "!=", "<=", ">=", "&&", "||", "**", "<<", ">>", "~&", "~|",
    "~^", "^~", "->", "+:", "-:", "+", "-", "*", "/", "%", "<", ">", "!", "~", "&", "|", "^", "=",
    "?",
];

const PUNCTUATION: &[u8] = b"()[]{};,.:#@";

/// Lexes a source string into a lossless token stream.
pub fn lex(source: &str) -> Result<Vec<LexToken>, LexError> {
    Lexer::new(source).run()
}

/// Lexes raw bytes, rejecting input that is not valid UTF-8.
pub fn lex_bytes(source: &[u8]) -> Result<Vec<LexToken>, LexError> {
    let text = std::str::from_utf8(source).map_err(|e| LexError::InvalidUtf8 {
        offset: e.valid_up_to(),
    })?;
    lex(text)
}

struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    out: Vec<LexToken>,
}

fn is_ident_start(b: u8) -> bool {
    b.is_ascii_alphabetic() || b == b'_'
}

fn is_ident_continue(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_' || b == b'$'
}

fn is_space(b: u8) -> bool {
    matches!(b, b' ' | b'\t' | b'\n' | b'\r' | 0x0b | 0x0c)
}

fn is_base_char(b: u8) -> bool {
    matches!(b, b'b' | b'B' | b'o' | b'O' | b'd' | b'D' | b'h' | b'H')
}

fn is_based_digit(b: u8) -> bool {
    b.is_ascii_hexdigit() || matches!(b, b'x' | b'X' | b'z' | b'Z' | b'?' | b'_')
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Self {
            src,
            bytes: src.as_bytes(),
            pos: 0,
            out: Vec::new(),
        }
    }

    fn peek(&self, ahead: usize) -> Option<u8> {
        self.bytes.get(self.pos + ahead).copied()
    }

    fn push(&mut self, kind: TokenKind, start: usize) {
        self.out.push(LexToken {
            kind,
            text: self.src[start..self.pos].to_string(),
            span: Span::new(start, self.pos),
        });
    }

    fn eat_while(&mut self, f: impl Fn(u8) -> bool) {
        while let Some(b) = self.peek(0) {
            if !f(b) {
                break;
            }
            self.pos += 1;
        }
    }

    fn run(mut self) -> Result<Vec<LexToken>, LexError> {
        while let Some(b) = self.peek(0) {
            let start = self.pos;
            match b {
                _ if is_space(b) => {
                    self.eat_while(is_space);
                    self.push(TokenKind::Whitespace, start);
                }
                b'/' if self.peek(1) == Some(b'/') => {
                    self.eat_while(|c| c != b'\n');
                    self.push(TokenKind::Comment, start);
                }
                b'/' if self.peek(1) == Some(b'*') => {
                    match self.src[start + 2..].find("*/") {
                        Some(off) => self.pos = start + 2 + off + 2,
                        None => return Err(LexError::UnterminatedComment { offset: start }),
                    }
                    self.push(TokenKind::Comment, start);
                }
                b'"' => {
                    self.string(start)?;
                    self.push(TokenKind::StringLiteral, start);
                }
                b'`' => {
                    self.directive();
                    self.push(TokenKind::Directive, start);
                }
                b'\\' => {
                    // escaped identifier runs to the next whitespace
                    self.pos += 1;
                    self.eat_while(|c| !is_space(c));
                    self.push(TokenKind::Identifier, start);
                }
                b'$' if self.peek(1).is_some_and(is_ident_start) => {
                    self.pos += 1;
                    self.eat_while(is_ident_continue);
                    self.push(TokenKind::Identifier, start);
                }
                _ if is_ident_start(b) => {
                    self.eat_while(is_ident_continue);
                    let kind = if is_keyword(&self.src[start..self.pos]) {
                        TokenKind::Keyword
                    } else {
                        TokenKind::Identifier
                    };
                    self.push(kind, start);
                }
                _ if b.is_ascii_digit() => {
                    self.number();
                    self.push(TokenKind::NumberLiteral, start);
                }
                b'\'' if self.based_literal_follows(0) => {
                    self.based_tail();
                    self.push(TokenKind::NumberLiteral, start);
                }
                _ if PUNCTUATION.contains(&b) => {
                    self.pos += 1;
                    self.push(TokenKind::Punctuation, start);
                }
                _ => {
                    let rest = &self.src[start..];
                    if let Some(op) = OPERATORS.iter().find(|op| rest.starts_with(**op)) {
                        self.pos += op.len();
                        self.push(TokenKind::Operator, start);
                    } else {
                        // Unknown character: keep it (whole code point) so no byte is lost;
                        // the parser will reject it.
                        let ch = rest.chars().next().map_or(1, char::len_utf8);
                        self.pos += ch;
                        self.push(TokenKind::Punctuation, start);
                    }
                }
            }
        }
        Ok(self.out)
    }

    fn string(&mut self, start: usize) -> Result<(), LexError> {
        self.pos += 1;
        loop {
            match self.peek(0) {
                None | Some(b'\n') => return Err(LexError::UnterminatedString { offset: start }),
                Some(b'\\') => self.pos += 2.min(self.bytes.len() - self.pos),
                Some(b'"') => {
                    self.pos += 1;
                    return Ok(());
                }
                Some(_) => self.pos += 1,
            }
        }
    }

    fn directive(&mut self) {
        self.pos += 1;
        let name_start = self.pos;
        self.eat_while(is_ident_continue);
        let name = &self.src[name_start..self.pos];
        if !LINE_DIRECTIVES.contains(&name) {
            // macro usage such as `WIDTH
            return;
        }
        while let Some(b) = self.peek(0) {
            if b == b'\n' {
                break;
            }
            if b == b'\\' && self.peek(1) == Some(b'\n') {
                self.pos += 2;
                continue;
            }
            if b == b'\\' && self.peek(1) == Some(b'\r') && self.peek(2) == Some(b'\n') {
                self.pos += 3;
                continue;
            }
            self.pos += 1;
        }
        // keep the CR of a CRLF line ending out of the directive
        if self.pos > name_start && self.bytes[self.pos - 1] == b'\r' {
            self.pos -= 1;
        }
    }

    /// Is there `'[sS]?<base><digit>` starting `ahead` bytes from here?
    fn based_literal_follows(&self, ahead: usize) -> bool {
        if self.peek(ahead) != Some(b'\'') {
            return false;
        }
        let mut i = ahead + 1;
        if matches!(self.peek(i), Some(b's' | b'S')) {
            i += 1;
        }
        if !self.peek(i).is_some_and(is_base_char) {
            return false;
        }
        i += 1;
        self.peek(i).is_some_and(is_based_digit)
    }

    fn based_tail(&mut self) {
        self.pos += 1;
        if matches!(self.peek(0), Some(b's' | b'S')) {
            self.pos += 1;
        }
        self.pos += 1;
        self.eat_while(is_based_digit);
    }

    fn number(&mut self) {
        self.eat_while(|c| c.is_ascii_digit() || c == b'_');
        if self.based_literal_follows(0) {
            self.based_tail();
            return;
        }
        // real: 1.5, 1.5e3, 1e-3
        if self.peek(0) == Some(b'.') && self.peek(1).is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
            self.eat_while(|c| c.is_ascii_digit() || c == b'_');
        }
        if matches!(self.peek(0), Some(b'e' | b'E')) {
            let mut i = 1;
            if matches!(self.peek(1), Some(b'+' | b'-')) {
                i = 2;
            }
            if self.peek(i).is_some_and(|c| c.is_ascii_digit()) {
                self.pos += i;
                self.eat_while(|c| c.is_ascii_digit() || c == b'_');
            }
        }
    }
}
