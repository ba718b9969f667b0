// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use super::lexer::{lex, TokenKind};
use super::significance::SignificantTokenSet;
use super::{LexError, Span};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FragmentKind {
    Keyword,
    Identifier,
    Operator,
    Literal,
    Punctuation,
    Trivia,
}

impl From<TokenKind> for FragmentKind {
    fn from(k: TokenKind) -> Self {
        match k {
            TokenKind::Keyword | TokenKind::Directive => FragmentKind::Keyword,
            TokenKind::Identifier => FragmentKind::Identifier,
            TokenKind::Operator => FragmentKind::Operator,
            TokenKind::NumberLiteral | TokenKind::StringLiteral => FragmentKind::Literal,
            TokenKind::Punctuation => FragmentKind::Punctuation,
            TokenKind::Comment | TokenKind::Whitespace => FragmentKind::Trivia,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fragment {
    pub text: String,
    pub kind: FragmentKind,
    pub span: Span,
}

/// Ordered fragments whose concatenation is the original source.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FragmentedCode {
    pub fragments: Vec<Fragment>,
}

impl FragmentedCode {
    pub fn len(&self) -> usize {
        self.fragments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fragments.is_empty()
    }

    pub fn concat(&self) -> String {
        self.fragments.iter().map(|f| f.text.as_str()).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Fragment> {
        self.fragments.iter()
    }
}

/// Splits `source` so that a boundary falls right after every significant
/// token. Trivia following a significant token stays in its fragment;
/// non-significant tokens are glued onto the next significant one.
pub fn segment(source: &str, sig: &SignificantTokenSet) -> Result<FragmentedCode, LexError> {
    let tokens = lex(source)?;
    let mut fragments = Vec::new();
    let mut start = 0;
    // kind of the significant token closing the current fragment, if seen
    let mut closed: Option<FragmentKind> = None;
    let mut last_kind: Option<FragmentKind> = None;

    for tok in &tokens {
        if tok.is_trivia() {
            continue;
        }
        if let Some(kind) = closed.take() {
            fragments.push(Fragment {
                text: source[start..tok.span.start].to_string(),
                kind,
                span: Span::new(start, tok.span.start),
            });
            start = tok.span.start;
        }
        last_kind = Some(tok.kind.into());
        if sig.contains(tok) {
            closed = Some(tok.kind.into());
        }
    }
    if start < source.len() {
        let kind = closed.or(last_kind).unwrap_or(FragmentKind::Trivia);
        fragments.push(Fragment {
            text: source[start..].to_string(),
            kind,
            span: Span::new(start, source.len()),
        });
    }
    Ok(FragmentedCode { fragments })
}
