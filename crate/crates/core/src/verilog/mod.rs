// SPDX-License-Identifier: Apache-2.0

//! Verilog front end: lexing, a recursive-descent parser over a module-level
//! Verilog-2005 subset, significant-token extraction and fragment segmentation.

mod ast;
mod keywords;
mod lexer;
mod parser;
mod segment;
mod significance;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ast::{Ast, Node, Symbol};
pub use keywords::is_keyword;
pub use lexer::{lex, lex_bytes, LexToken, TokenKind};
pub use parser::parse;
pub use segment::{segment, Fragment, FragmentKind, FragmentedCode};
pub use significance::{
    extract_significant_tokens, extract_significant_tokens_with, SignificanceConfig,
    SignificantTokenSet, MANDATORY_SUPPLEMENTAL,
};

/// Half-open byte range `[start, end)` into the source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum LexError {
    #[error("unterminated block comment starting at byte {offset}")]
    UnterminatedComment { offset: usize },
    #[error("unterminated string literal starting at byte {offset}")]
    UnterminatedString { offset: usize },
    #[error("invalid UTF-8 at byte {offset}")]
    InvalidUtf8 { offset: usize },
}

impl LexError {
    pub fn offset(&self) -> usize {
        match *self {
            LexError::UnterminatedComment { offset }
            | LexError::UnterminatedString { offset }
            | LexError::InvalidUtf8 { offset } => offset,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("syntax error at bytes {}..{}: expected {expected}, found {found}", span.start, span.end)]
pub struct SyntaxError {
    pub span: Span,
    pub expected: String,
    pub found: String,
}

/// A single problem reported by [`syntax_check`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub span: Span,
    pub message: String,
}

impl From<&SyntaxError> for Diagnostic {
    fn from(e: &SyntaxError) -> Self {
        Diagnostic {
            span: e.span,
            message: e.to_string(),
        }
    }
}

impl From<&LexError> for Diagnostic {
    fn from(e: &LexError) -> Self {
        Diagnostic {
            span: Span::new(e.offset(), e.offset()),
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntaxReport {
    pub ok: bool,
    pub diagnostics: Vec<Diagnostic>,
}

/// Accept/reject check: `ok` iff the source lexes and parses.
pub fn syntax_check(source: &str) -> SyntaxReport {
    let result = lex(source).map_err(|e| Diagnostic::from(&e)).and_then(|toks| {
        parse(&toks).map_err(|e| Diagnostic::from(&e))
    });
    match result {
        Ok(_) => SyntaxReport {
            ok: true,
            diagnostics: Vec::new(),
        },
        Err(d) => SyntaxReport {
            ok: false,
            diagnostics: vec![d],
        },
    }
}

/// Byte-level variant of [`syntax_check`]; invalid UTF-8 is a diagnostic.
pub fn syntax_check_bytes(source: &[u8]) -> SyntaxReport {
    match std::str::from_utf8(source) {
        Ok(s) => syntax_check(s),
        Err(e) => {
            let err = LexError::InvalidUtf8 {
                offset: e.valid_up_to(),
            };
            SyntaxReport {
                ok: false,
                diagnostics: vec![Diagnostic::from(&err)],
            }
        }
    }
}

/// Lex, parse and segment a source in one go, using the significant tokens of
/// its own AST.
pub fn fragment_source(source: &str) -> Result<FragmentedCode, FrontendError> {
    let toks = lex(source)?;
    let ast = parse(&toks)?;
    let sig = extract_significant_tokens(&ast);
    Ok(segment(source, &sig)?)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrontendError {
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
}
