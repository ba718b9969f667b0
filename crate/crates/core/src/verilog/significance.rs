// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::ast::{Ast, Symbol};
use super::lexer::{LexToken, TokenKind};

/// Constructs that are always significant, whatever the AST or configuration says.
pub const MANDATORY_SUPPLEMENTAL: &[&str] = &[
    "module", "endmodule", "input", "output", "wire", "reg", "assign", "always", "posedge",
    "negedge", "begin", "end", "if", "else", "case", "endcase",
];

const DEFAULT_SUPPLEMENTAL_EXTRA: &[&str] = &[
    "inout", "initial", "parameter", "localparam", "integer", "default", "for", "generate",
    "endgenerate", "function", "endfunction", "task", "endtask", "casez", "casex", "genvar",
];

/// Which non-terminals count as "critical" (their heading token is significant)
/// and which extra constructs are added on top of the mandatory set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignificanceConfig {
    pub critical: Vec<Symbol>,
    pub supplemental: Vec<String>,
}

impl Default for SignificanceConfig {
    fn default() -> Self {
        Self {
            critical: vec![
                // declaration heads
                Symbol::ModuleDecl,
                Symbol::Decl,
                Symbol::ParamDecl,
                Symbol::FunctionDecl,
                Symbol::TaskDecl,
                // control-flow heads
                Symbol::AssignStmt,
                Symbol::AlwaysBlock,
                Symbol::InitialBlock,
                Symbol::IfStmt,
                Symbol::CaseStmt,
                Symbol::ForStmt,
                Symbol::WhileStmt,
                Symbol::RepeatStmt,
                Symbol::ForeverStmt,
                Symbol::SeqBlock,
                Symbol::GenerateRegion,
                // sensitivity-list edges
                Symbol::EventExpr,
            ],
            supplemental: MANDATORY_SUPPLEMENTAL
                .iter()
                .chain(DEFAULT_SUPPLEMENTAL_EXTRA)
                .map(|s| s.to_string())
                .collect(),
        }
    }
}

/// Tokens at which source code is segmented into fragments.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignificantTokenSet {
    pub keywords: BTreeSet<String>,
    pub operator_classes: BTreeSet<String>,
    pub includes_identifiers: bool,
    pub includes_literals: bool,
}

impl SignificantTokenSet {
    /// Only the mandatory constructs, identifiers and literals.
    pub fn mandatory() -> Self {
        Self {
            keywords: MANDATORY_SUPPLEMENTAL.iter().map(|s| s.to_string()).collect(),
            operator_classes: BTreeSet::new(),
            includes_identifiers: true,
            includes_literals: true,
        }
    }

    pub fn contains(&self, tok: &LexToken) -> bool {
        match tok.kind {
            TokenKind::Keyword => self.keywords.contains(&tok.text),
            TokenKind::Identifier => self.includes_identifiers,
            TokenKind::NumberLiteral | TokenKind::StringLiteral => self.includes_literals,
            TokenKind::Operator | TokenKind::Punctuation => self.operator_classes.contains(&tok.text),
            TokenKind::Directive => true,
            TokenKind::Comment | TokenKind::Whitespace => false,
        }
    }

    /// Union of two sets, e.g. to share one set across a corpus.
    pub fn merge(&mut self, other: &SignificantTokenSet) {
        self.keywords.extend(other.keywords.iter().cloned());
        self.operator_classes
            .extend(other.operator_classes.iter().cloned());
        self.includes_identifiers |= other.includes_identifiers;
        self.includes_literals |= other.includes_literals;
    }
}

pub fn extract_significant_tokens(ast: &Ast) -> SignificantTokenSet {
    extract_significant_tokens_with(ast, &SignificanceConfig::default())
}

pub fn extract_significant_tokens_with(ast: &Ast, cfg: &SignificanceConfig) -> SignificantTokenSet {
    let mut set = SignificantTokenSet::mandatory();
    set.keywords.extend(cfg.supplemental.iter().cloned());
    ast.root.walk(&mut |node| {
        if let Some(tok) = &node.token {
            match tok.kind {
                TokenKind::Keyword => {
                    set.keywords.insert(tok.text.clone());
                }
                TokenKind::Operator | TokenKind::Punctuation => {
                    set.operator_classes.insert(tok.text.clone());
                }
                _ => {}
            }
        } else if cfg.critical.contains(&node.symbol) {
            if let Some(head) = node.head() {
                if head.kind == TokenKind::Keyword {
                    set.keywords.insert(head.text.clone());
                }
            }
        }
    });
    set
}

#[cfg(test)]
mod tests {
    use super::super::{lex, parse};
    use super::*;

    fn ast(src: &str) -> Ast {
        parse(&lex(src).unwrap()).unwrap()
    }

    #[test]
    fn trivial_module_keywords() {
        let set = extract_significant_tokens(&ast("module m; endmodule"));
        assert!(set.keywords.contains("module"));
        assert!(set.keywords.contains("endmodule"));
        assert!(set.operator_classes.contains(";"));
        assert!(set.includes_identifiers && set.includes_literals);
    }

    #[test]
    fn empty_supplemental_keeps_mandatory() {
        let cfg = SignificanceConfig {
            critical: Vec::new(),
            supplemental: Vec::new(),
        };
        let set = extract_significant_tokens_with(&ast("module m; endmodule"), &cfg);
        for kw in MANDATORY_SUPPLEMENTAL {
            assert!(set.keywords.contains(*kw), "{kw}");
        }
    }

    #[test]
    fn sensitivity_edges_and_nonblocking() {
        let src = "module c(input clk, output reg q); always @(posedge clk) q <= ~q; endmodule";
        let set = extract_significant_tokens(&ast(src));
        assert!(set.keywords.contains("posedge"));
        assert!(set.operator_classes.contains("<="));
        assert!(set.operator_classes.contains("~"));
    }
}
