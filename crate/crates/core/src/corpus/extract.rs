// SPDX-License-Identifier: Apache-2.0

use super::{ModuleRecord, RawFile};
use crate::verilog::{lex, LexToken, TokenKind};

fn is_kw(tok: &LexToken, kw: &str) -> bool {
    tok.kind == TokenKind::Keyword && tok.text == kw
}

/// Slices each balanced `module … endmodule` span out of a file, using the
/// lexer so comments and strings never count as boundaries.
///
/// Files that fail to lex, or lack a complete module, give no records.
pub fn extract_modules(file: &RawFile) -> Vec<ModuleRecord> {
    let Ok(text) = std::str::from_utf8(&file.bytes) else {
        return Vec::new();
    };
    let Ok(tokens) = lex(text) else {
        return Vec::new();
    };
    let sig: Vec<&LexToken> = tokens.iter().filter(|t| !t.is_trivia()).collect();
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut open: Option<usize> = None;
    for (i, tok) in sig.iter().enumerate() {
        if is_kw(tok, "module") || is_kw(tok, "macromodule") {
            if depth == 0 {
                open = Some(i);
            }
            depth += 1;
        } else if is_kw(tok, "endmodule") && depth > 0 {
            depth -= 1;
            if depth == 0 {
                let start_idx = open.take().expect("open module");
                let start = sig[start_idx].span.start;
                let name = sig
                    .get(start_idx + 1)
                    .filter(|t| t.kind == TokenKind::Identifier)
                    .map(|t| t.text.clone());
                out.push(ModuleRecord {
                    source: file.path.clone(),
                    index: out.len(),
                    name,
                    code: text[start..tok.span.end].to_string(),
                    description: None,
                    minhash: None,
                });
            }
        }
    }
    out
}
