// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use super::LexToken;

/// Nonterminal kinds produced by the parser. `Leaf` marks terminal nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Symbol {
    SourceText,
    ModuleDecl,
    ParamPortList,
    PortList,
    Port,
    Decl,
    ParamDecl,
    DeclItem,
    Range,
    AssignStmt,
    AlwaysBlock,
    InitialBlock,
    TimedStmt,
    EventControl,
    EventExpr,
    DelayControl,
    SeqBlock,
    ParBlock,
    IfStmt,
    CaseStmt,
    CaseItem,
    ForStmt,
    WhileStmt,
    RepeatStmt,
    ForeverStmt,
    WaitStmt,
    BlockingAssign,
    NonblockingAssign,
    ProceduralAssign,
    TaskEnable,
    SystemTaskCall,
    DisableStmt,
    EventTrigger,
    NullStmt,
    Instantiation,
    ParamAssignments,
    Instance,
    PortConnection,
    Defparam,
    GenerateRegion,
    GenerateFor,
    GenerateIf,
    GenerateCase,
    GenerateBlock,
    FunctionDecl,
    TaskDecl,
    Expr,
    Concat,
    Replication,
    Call,
    Select,
    Directive,
    Leaf,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub symbol: Symbol,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<Node>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token: Option<LexToken>,
}

impl Node {
    pub fn new(symbol: Symbol) -> Self {
        Self {
            symbol,
            children: Vec::new(),
            token: None,
        }
    }

    pub fn leaf(token: LexToken) -> Self {
        Self {
            symbol: Symbol::Leaf,
            children: Vec::new(),
            token: Some(token),
        }
    }

    pub fn with(symbol: Symbol, children: Vec<Node>) -> Self {
        Self {
            symbol,
            children,
            token: None,
        }
    }

    pub fn push(&mut self, child: Node) {
        self.children.push(child);
    }

    pub fn is_leaf(&self) -> bool {
        self.token.is_some()
    }

    /// Leaf tokens under this node, in source order.
    pub fn leaves(&self) -> Vec<&LexToken> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a LexToken>) {
        if let Some(t) = &self.token {
            out.push(t);
        }
        for c in &self.children {
            c.collect_leaves(out);
        }
    }

    /// First leaf token under this node.
    pub fn head(&self) -> Option<&LexToken> {
        if let Some(t) = &self.token {
            return Some(t);
        }
        self.children.iter().find_map(Node::head)
    }

    /// Pre-order traversal.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Node)) {
        f(self);
        for c in &self.children {
            c.walk(f);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ast {
    pub root: Node,
}

impl Ast {
    pub fn leaves(&self) -> Vec<&LexToken> {
        self.root.leaves()
    }

    /// Top-level module declarations.
    pub fn modules(&self) -> impl Iterator<Item = &Node> {
        self.root
            .children
            .iter()
            .filter(|n| n.symbol == Symbol::ModuleDecl)
    }
}
