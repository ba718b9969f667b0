// SPDX-License-Identifier: Apache-2.0

//! Recursive-descent parser for a module-level Verilog-2005 subset.
//!
//! Covered: module headers (ANSI and non-ANSI ports, `#(...)` parameter
//! ports), port/net/variable/parameter declarations, `assign`, `always` and
//! `initial` with event and delay controls, `begin`/`end` and `fork`/`join`
//! blocks, `if`/`else`, `case`/`casez`/`casex`, loops, blocking and
//! non-blocking assignments, system and user task calls, module and gate
//! instantiation, generate constructs, functions, tasks and expressions with
//! the standard operator precedence. Compiler directives are opaque items.
//!
//! Every consumed token becomes a leaf of the tree, so an in-order walk over
//! the leaves reproduces the non-trivia token stream.

use super::ast::{Ast, Node, Symbol};
use super::lexer::{LexToken, TokenKind};
use super::{Span, SyntaxError};

type PResult<T> = Result<T, SyntaxError>;

/// Parses a token stream from [`super::lex`]. Trivia tokens are ignored.
pub fn parse(tokens: &[LexToken]) -> Result<Ast, SyntaxError> {
    let toks: Vec<LexToken> = tokens.iter().filter(|t| !t.is_trivia()).cloned().collect();
    let eof = tokens.last().map_or(0, |t| t.span.end);
    let mut p = Parser { toks, pos: 0, eof };
    let root = p.source_text()?;
    Ok(Ast { root })
}

const NET_TYPES: &[&str] = &[
    "wire", "tri", "tri0", "tri1", "wand", "wor", "triand", "trior", "trireg", "supply0",
    "supply1", "uwire",
];
const VAR_TYPES: &[&str] = &["reg", "integer", "real", "realtime", "time", "genvar", "event"];
const DIRECTIONS: &[&str] = &["input", "output", "inout"];
const GATES: &[&str] = &[
    "and", "nand", "or", "nor", "xor", "xnor", "not", "buf", "bufif0", "bufif1", "notif0",
    "notif1", "pullup", "pulldown", "nmos", "pmos", "cmos", "tran", "rtran",
];
const UNARY_OPS: &[&str] = &["+", "-", "!", "~", "&", "~&", "|", "~|", "^", "~^", "^~"];

fn binary_power(op: &str) -> Option<u8> {
    Some(match op {
        "||" => 2,
        "&&" => 3,
        "|" | "~|" => 4,
        "^" | "~^" | "^~" => 5,
        "&" | "~&" => 6,
        "==" | "!=" | "===" | "!==" => 7,
        "<" | "<=" | ">" | ">=" => 8,
        "<<" | ">>" | "<<<" | ">>>" => 9,
        "+" | "-" => 10,
        "*" | "/" | "%" => 11,
        "**" => 12,
        _ => return None,
    })
}

const UNARY_POWER: u8 = 13;
const TERNARY_POWER: u8 = 1;

struct Parser {
    toks: Vec<LexToken>,
    pos: usize,
    eof: usize,
}

impl Parser {
    // ---- cursor helpers ----

    fn peek(&self) -> Option<&LexToken> {
        self.toks.get(self.pos)
    }

    fn peek_at(&self, ahead: usize) -> Option<&LexToken> {
        self.toks.get(self.pos + ahead)
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn at(&self, kind: TokenKind, text: &str) -> bool {
        self.peek().is_some_and(|t| t.is(kind, text))
    }

    fn at_kw(&self, kw: &str) -> bool {
        self.at(TokenKind::Keyword, kw)
    }

    fn at_kw_in(&self, set: &[&str]) -> bool {
        self.peek()
            .is_some_and(|t| t.kind == TokenKind::Keyword && set.contains(&t.text.as_str()))
    }

    fn at_punct(&self, p: &str) -> bool {
        self.at(TokenKind::Punctuation, p)
    }

    fn at_op(&self, op: &str) -> bool {
        self.at(TokenKind::Operator, op)
    }

    fn at_kind(&self, kind: TokenKind) -> bool {
        self.peek().is_some_and(|t| t.kind == kind)
    }

    fn error(&self, expected: &str) -> SyntaxError {
        match self.peek() {
            Some(t) => SyntaxError {
                span: t.span,
                expected: expected.to_string(),
                found: format!("`{}`", t.text),
            },
            None => SyntaxError {
                span: Span::new(self.eof, self.eof),
                expected: expected.to_string(),
                found: "end of input".to_string(),
            },
        }
    }

    fn bump(&mut self) -> Node {
        let t = self.toks[self.pos].clone();
        self.pos += 1;
        Node::leaf(t)
    }

    fn expect(&mut self, kind: TokenKind, text: &str) -> PResult<Node> {
        if self.at(kind, text) {
            Ok(self.bump())
        } else {
            Err(self.error(&format!("`{text}`")))
        }
    }

    fn expect_punct(&mut self, p: &str) -> PResult<Node> {
        self.expect(TokenKind::Punctuation, p)
    }

    fn expect_ident(&mut self) -> PResult<Node> {
        if self.at_kind(TokenKind::Identifier) {
            Ok(self.bump())
        } else {
            Err(self.error("identifier"))
        }
    }

    fn eat_punct(&mut self, n: &mut Node, p: &str) -> bool {
        if self.at_punct(p) {
            n.push(self.bump());
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, n: &mut Node, kw: &str) -> bool {
        if self.at_kw(kw) {
            n.push(self.bump());
            true
        } else {
            false
        }
    }

    fn directive(&mut self) -> Node {
        Node::with(Symbol::Directive, vec![self.bump()])
    }

    // ---- top level ----

    fn source_text(&mut self) -> PResult<Node> {
        let mut root = Node::new(Symbol::SourceText);
        while let Some(t) = self.peek() {
            if t.kind == TokenKind::Directive {
                root.push(self.directive());
            } else if self.at_kw("module") || self.at_kw("macromodule") {
                root.push(self.module_decl()?);
            } else {
                return Err(self.error("`module`"));
            }
        }
        Ok(root)
    }

    fn module_decl(&mut self) -> PResult<Node> {
        let mut m = Node::new(Symbol::ModuleDecl);
        m.push(self.bump());
        m.push(self.expect_ident()?);
        if self.at_punct("#") {
            m.push(self.param_port_list()?);
        }
        if self.at_punct("(") {
            m.push(self.port_list()?);
        }
        m.push(self.expect_punct(";")?);
        while !self.at_kw("endmodule") {
            if self.at_end() {
                return Err(self.error("`endmodule`"));
            }
            m.push(self.module_item()?);
        }
        m.push(self.bump());
        Ok(m)
    }

    fn param_port_list(&mut self) -> PResult<Node> {
        let mut n = Node::new(Symbol::ParamPortList);
        n.push(self.bump());
        n.push(self.expect_punct("(")?);
        if !self.at_punct(")") {
            loop {
                let mut d = Node::new(Symbol::ParamDecl);
                if self.at_kw("parameter") || self.at_kw("localparam") {
                    d.push(self.bump());
                }
                self.param_type(&mut d)?;
                d.push(self.expect_ident()?);
                d.push(self.expect(TokenKind::Operator, "=")?);
                d.push(self.expr()?);
                n.push(d);
                if !self.eat_punct(&mut n, ",") {
                    break;
                }
            }
        }
        n.push(self.expect_punct(")")?);
        Ok(n)
    }

    fn param_type(&mut self, d: &mut Node) -> PResult<()> {
        if self.at_kw_in(&["integer", "real", "realtime", "time"]) {
            d.push(self.bump());
            return Ok(());
        }
        self.eat_kw(d, "signed");
        if self.at_punct("[") {
            d.push(self.range()?);
        }
        Ok(())
    }

    fn port_list(&mut self) -> PResult<Node> {
        let mut n = Node::new(Symbol::PortList);
        n.push(self.bump());
        if !self.at_punct(")") {
            loop {
                while self.at_kind(TokenKind::Directive) {
                    n.push(self.directive());
                }
                n.push(self.port()?);
                while self.at_kind(TokenKind::Directive) {
                    n.push(self.directive());
                }
                if !self.eat_punct(&mut n, ",") {
                    break;
                }
            }
        }
        n.push(self.expect_punct(")")?);
        Ok(n)
    }

    fn port(&mut self) -> PResult<Node> {
        let mut p = Node::new(Symbol::Port);
        if self.at_kw_in(DIRECTIONS) {
            p.push(self.bump());
            if self.at_kw_in(NET_TYPES) || self.at_kw_in(VAR_TYPES) {
                p.push(self.bump());
            }
            self.eat_kw(&mut p, "signed");
            if self.at_punct("[") {
                p.push(self.range()?);
            }
        }
        p.push(self.expect_ident()?);
        Ok(p)
    }

    fn range(&mut self) -> PResult<Node> {
        let mut r = Node::new(Symbol::Range);
        r.push(self.expect_punct("[")?);
        r.push(self.expr()?);
        r.push(self.expect_punct(":")?);
        r.push(self.expr()?);
        r.push(self.expect_punct("]")?);
        Ok(r)
    }

    // ---- module items ----

    fn module_item(&mut self) -> PResult<Node> {
        let Some(t) = self.peek() else {
            return Err(self.error("module item"));
        };
        match (t.kind, t.text.as_str()) {
            (TokenKind::Directive, _) => Ok(self.directive()),
            (TokenKind::Keyword, kw) => match kw {
                _ if DIRECTIONS.contains(&kw) => self.declaration(),
                _ if NET_TYPES.contains(&kw) || VAR_TYPES.contains(&kw) => self.declaration(),
                "parameter" | "localparam" => self.param_decl(),
                "defparam" => self.defparam(),
                "assign" => self.continuous_assign(),
                "always" | "initial" => {
                    let sym = if kw == "always" {
                        Symbol::AlwaysBlock
                    } else {
                        Symbol::InitialBlock
                    };
                    let mut n = Node::new(sym);
                    n.push(self.bump());
                    n.push(self.statement()?);
                    Ok(n)
                }
                "generate" => {
                    let mut n = Node::new(Symbol::GenerateRegion);
                    n.push(self.bump());
                    while !self.at_kw("endgenerate") {
                        if self.at_end() {
                            return Err(self.error("`endgenerate`"));
                        }
                        n.push(self.module_item()?);
                    }
                    n.push(self.bump());
                    Ok(n)
                }
                "for" => self.generate_for(),
                "if" => self.generate_if(),
                "case" | "casez" | "casex" => self.generate_case(),
                "begin" => self.generate_block(),
                "function" => self.function_decl(),
                "task" => self.task_decl(),
                _ if GATES.contains(&kw) => self.instantiation(),
                _ => Err(self.error("module item")),
            },
            (TokenKind::Identifier, _) => self.instantiation(),
            _ => Err(self.error("module item")),
        }
    }

    /// Port, net and variable declarations.
    fn declaration(&mut self) -> PResult<Node> {
        let mut d = Node::new(Symbol::Decl);
        let head = self.bump();
        let is_direction = head
            .token
            .as_ref()
            .is_some_and(|t| DIRECTIONS.contains(&t.text.as_str()));
        d.push(head);
        if is_direction && (self.at_kw_in(NET_TYPES) || self.at_kw_in(VAR_TYPES)) {
            d.push(self.bump());
        }
        if self.at_kw("vectored") || self.at_kw("scalared") {
            d.push(self.bump());
        }
        self.eat_kw(&mut d, "signed");
        if self.at_punct("[") {
            d.push(self.range()?);
        }
        if self.at_punct("#") {
            d.push(self.delay_control()?);
        }
        loop {
            let mut item = Node::new(Symbol::DeclItem);
            item.push(self.expect_ident()?);
            while self.at_punct("[") {
                item.push(self.range()?);
            }
            if self.at_op("=") {
                item.push(self.bump());
                item.push(self.expr()?);
            }
            d.push(item);
            if !self.eat_punct(&mut d, ",") {
                break;
            }
        }
        d.push(self.expect_punct(";")?);
        Ok(d)
    }

    fn param_decl(&mut self) -> PResult<Node> {
        let mut d = Node::new(Symbol::ParamDecl);
        d.push(self.bump());
        self.param_type(&mut d)?;
        loop {
            let mut item = Node::new(Symbol::DeclItem);
            item.push(self.expect_ident()?);
            item.push(self.expect(TokenKind::Operator, "=")?);
            item.push(self.expr()?);
            d.push(item);
            if !self.eat_punct(&mut d, ",") {
                break;
            }
        }
        d.push(self.expect_punct(";")?);
        Ok(d)
    }

    fn defparam(&mut self) -> PResult<Node> {
        let mut d = Node::new(Symbol::Defparam);
        d.push(self.bump());
        loop {
            d.push(self.lvalue()?);
            d.push(self.expect(TokenKind::Operator, "=")?);
            d.push(self.expr()?);
            if !self.eat_punct(&mut d, ",") {
                break;
            }
        }
        d.push(self.expect_punct(";")?);
        Ok(d)
    }

    fn continuous_assign(&mut self) -> PResult<Node> {
        let mut a = Node::new(Symbol::AssignStmt);
        a.push(self.bump());
        if self.at_punct("#") {
            a.push(self.delay_control()?);
        }
        loop {
            a.push(self.lvalue()?);
            a.push(self.expect(TokenKind::Operator, "=")?);
            a.push(self.expr()?);
            if !self.eat_punct(&mut a, ",") {
                break;
            }
        }
        a.push(self.expect_punct(";")?);
        Ok(a)
    }

    fn instantiation(&mut self) -> PResult<Node> {
        let mut n = Node::new(Symbol::Instantiation);
        n.push(self.bump());
        if self.at_punct("#") {
            if self.peek_at(1).is_some_and(|t| t.is(TokenKind::Punctuation, "(")) {
                let mut pa = Node::new(Symbol::ParamAssignments);
                pa.push(self.bump());
                pa.push(self.bump());
                self.connection_list(&mut pa)?;
                pa.push(self.expect_punct(")")?);
                n.push(pa);
            } else {
                n.push(self.delay_control()?);
            }
        }
        loop {
            let mut inst = Node::new(Symbol::Instance);
            if self.at_kind(TokenKind::Identifier) {
                inst.push(self.bump());
                if self.at_punct("[") {
                    inst.push(self.range()?);
                }
            }
            inst.push(self.expect_punct("(")?);
            self.connection_list(&mut inst)?;
            inst.push(self.expect_punct(")")?);
            n.push(inst);
            if !self.eat_punct(&mut n, ",") {
                break;
            }
        }
        n.push(self.expect_punct(";")?);
        Ok(n)
    }

    /// Ordered or named connections up to (not including) the closing `)`.
    /// Empty ordered slots (`(a, , b)`) are allowed.
    fn connection_list(&mut self, parent: &mut Node) -> PResult<()> {
        if self.at_punct(")") {
            return Ok(());
        }
        loop {
            let mut c = Node::new(Symbol::PortConnection);
            if self.at_punct(".") {
                c.push(self.bump());
                c.push(self.expect_ident()?);
                c.push(self.expect_punct("(")?);
                if !self.at_punct(")") {
                    c.push(self.expr()?);
                }
                c.push(self.expect_punct(")")?);
            } else if !self.at_punct(",") && !self.at_punct(")") {
                c.push(self.expr()?);
            }
            if !c.children.is_empty() {
                parent.push(c);
            }
            if !self.eat_punct(parent, ",") {
                return Ok(());
            }
        }
    }

    fn generate_block(&mut self) -> PResult<Node> {
        if !self.at_kw("begin") {
            return self.module_item();
        }
        let mut b = Node::new(Symbol::GenerateBlock);
        b.push(self.bump());
        if self.eat_punct(&mut b, ":") {
            b.push(self.expect_ident()?);
        }
        while !self.at_kw("end") {
            if self.at_end() {
                return Err(self.error("`end`"));
            }
            b.push(self.module_item()?);
        }
        b.push(self.bump());
        Ok(b)
    }

    fn genvar_assignment(&mut self, parent: &mut Node) -> PResult<()> {
        self.eat_kw(parent, "genvar");
        parent.push(self.lvalue()?);
        parent.push(self.expect(TokenKind::Operator, "=")?);
        parent.push(self.expr()?);
        Ok(())
    }

    fn generate_for(&mut self) -> PResult<Node> {
        let mut n = Node::new(Symbol::GenerateFor);
        n.push(self.bump());
        n.push(self.expect_punct("(")?);
        self.genvar_assignment(&mut n)?;
        n.push(self.expect_punct(";")?);
        n.push(self.expr()?);
        n.push(self.expect_punct(";")?);
        self.genvar_assignment(&mut n)?;
        n.push(self.expect_punct(")")?);
        n.push(self.generate_block()?);
        Ok(n)
    }

    fn generate_if(&mut self) -> PResult<Node> {
        let mut n = Node::new(Symbol::GenerateIf);
        n.push(self.bump());
        n.push(self.expect_punct("(")?);
        n.push(self.expr()?);
        n.push(self.expect_punct(")")?);
        n.push(self.generate_block()?);
        if self.eat_kw(&mut n, "else") {
            n.push(self.generate_block()?);
        }
        Ok(n)
    }

    fn generate_case(&mut self) -> PResult<Node> {
        let mut n = Node::new(Symbol::GenerateCase);
        n.push(self.bump());
        n.push(self.expect_punct("(")?);
        n.push(self.expr()?);
        n.push(self.expect_punct(")")?);
        while !self.at_kw("endcase") {
            if self.at_end() {
                return Err(self.error("`endcase`"));
            }
            let mut item = self.case_label()?;
            item.push(self.generate_block()?);
            n.push(item);
        }
        n.push(self.bump());
        Ok(n)
    }

    fn function_decl(&mut self) -> PResult<Node> {
        let mut f = Node::new(Symbol::FunctionDecl);
        f.push(self.bump());
        self.eat_kw(&mut f, "automatic");
        self.param_type(&mut f)?;
        f.push(self.expect_ident()?);
        if self.at_punct("(") {
            f.push(self.port_list()?);
        }
        f.push(self.expect_punct(";")?);
        self.subroutine_body(&mut f, "endfunction")?;
        Ok(f)
    }

    fn task_decl(&mut self) -> PResult<Node> {
        let mut t = Node::new(Symbol::TaskDecl);
        t.push(self.bump());
        self.eat_kw(&mut t, "automatic");
        t.push(self.expect_ident()?);
        if self.at_punct("(") {
            t.push(self.port_list()?);
        }
        t.push(self.expect_punct(";")?);
        self.subroutine_body(&mut t, "endtask")?;
        Ok(t)
    }

    fn subroutine_body(&mut self, parent: &mut Node, end_kw: &str) -> PResult<()> {
        while !self.at_kw(end_kw) {
            if self.at_end() {
                return Err(self.error(&format!("`{end_kw}`")));
            }
            if self.at_kw_in(DIRECTIONS) || self.at_kw_in(VAR_TYPES) {
                parent.push(self.declaration()?);
            } else if self.at_kw("parameter") || self.at_kw("localparam") {
                parent.push(self.param_decl()?);
            } else {
                parent.push(self.statement()?);
            }
        }
        parent.push(self.bump());
        Ok(())
    }

    // ---- statements ----

    fn statement(&mut self) -> PResult<Node> {
        let Some(t) = self.peek() else {
            return Err(self.error("statement"));
        };
        match (t.kind, t.text.as_str()) {
            (TokenKind::Punctuation, ";") => Ok(Node::with(Symbol::NullStmt, vec![self.bump()])),
            (TokenKind::Punctuation, "@") | (TokenKind::Punctuation, "#") => {
                let ctl = if t.text == "@" {
                    self.event_control()?
                } else {
                    self.delay_control()?
                };
                let mut n = Node::with(Symbol::TimedStmt, vec![ctl]);
                n.push(self.statement()?);
                Ok(n)
            }
            (TokenKind::Directive, _) => Ok(self.directive()),
            (TokenKind::Operator, "->") => {
                let mut n = Node::new(Symbol::EventTrigger);
                n.push(self.bump());
                n.push(self.lvalue()?);
                n.push(self.expect_punct(";")?);
                Ok(n)
            }
            (TokenKind::Keyword, kw) => match kw {
                "begin" => self.block(Symbol::SeqBlock, "end"),
                "fork" => self.block(Symbol::ParBlock, "join"),
                "if" => self.if_stmt(),
                "case" | "casez" | "casex" => self.case_stmt(),
                "for" => self.for_stmt(),
                "while" | "repeat" | "wait" => {
                    let sym = match kw {
                        "while" => Symbol::WhileStmt,
                        "repeat" => Symbol::RepeatStmt,
                        _ => Symbol::WaitStmt,
                    };
                    let mut n = Node::new(sym);
                    n.push(self.bump());
                    n.push(self.expect_punct("(")?);
                    n.push(self.expr()?);
                    n.push(self.expect_punct(")")?);
                    n.push(self.statement()?);
                    Ok(n)
                }
                "forever" => {
                    let mut n = Node::new(Symbol::ForeverStmt);
                    n.push(self.bump());
                    n.push(self.statement()?);
                    Ok(n)
                }
                "disable" => {
                    let mut n = Node::new(Symbol::DisableStmt);
                    n.push(self.bump());
                    n.push(self.lvalue()?);
                    n.push(self.expect_punct(";")?);
                    Ok(n)
                }
                "assign" | "force" => {
                    let mut n = Node::new(Symbol::ProceduralAssign);
                    n.push(self.bump());
                    n.push(self.lvalue()?);
                    n.push(self.expect(TokenKind::Operator, "=")?);
                    n.push(self.expr()?);
                    n.push(self.expect_punct(";")?);
                    Ok(n)
                }
                "deassign" | "release" => {
                    let mut n = Node::new(Symbol::ProceduralAssign);
                    n.push(self.bump());
                    n.push(self.lvalue()?);
                    n.push(self.expect_punct(";")?);
                    Ok(n)
                }
                _ => Err(self.error("statement")),
            },
            (TokenKind::Identifier, name) if name.starts_with('$') => {
                let mut n = Node::new(Symbol::SystemTaskCall);
                n.push(self.bump());
                if self.at_punct("(") {
                    n.push(self.bump());
                    self.argument_list(&mut n)?;
                    n.push(self.expect_punct(")")?);
                }
                n.push(self.expect_punct(";")?);
                Ok(n)
            }
            (TokenKind::Identifier, _) | (TokenKind::Punctuation, "{") => self.assignment_or_call(),
            _ => Err(self.error("statement")),
        }
    }

    fn block(&mut self, sym: Symbol, end_kw: &str) -> PResult<Node> {
        let mut b = Node::new(sym);
        b.push(self.bump());
        if self.eat_punct(&mut b, ":") {
            b.push(self.expect_ident()?);
        }
        while !self.at_kw(end_kw) {
            if self.at_end() {
                return Err(self.error(&format!("`{end_kw}`")));
            }
            if self.at_kw_in(VAR_TYPES) {
                b.push(self.declaration()?);
            } else if self.at_kw("parameter") || self.at_kw("localparam") {
                b.push(self.param_decl()?);
            } else {
                b.push(self.statement()?);
            }
        }
        b.push(self.bump());
        Ok(b)
    }

    fn if_stmt(&mut self) -> PResult<Node> {
        let mut n = Node::new(Symbol::IfStmt);
        n.push(self.bump());
        n.push(self.expect_punct("(")?);
        n.push(self.expr()?);
        n.push(self.expect_punct(")")?);
        n.push(self.statement()?);
        if self.eat_kw(&mut n, "else") {
            n.push(self.statement()?);
        }
        Ok(n)
    }

    fn case_label(&mut self) -> PResult<Node> {
        let mut item = Node::new(Symbol::CaseItem);
        if self.eat_kw(&mut item, "default") {
            self.eat_punct(&mut item, ":");
            return Ok(item);
        }
        loop {
            item.push(self.expr()?);
            if !self.eat_punct(&mut item, ",") {
                break;
            }
        }
        item.push(self.expect_punct(":")?);
        Ok(item)
    }

    fn case_stmt(&mut self) -> PResult<Node> {
        let mut n = Node::new(Symbol::CaseStmt);
        n.push(self.bump());
        n.push(self.expect_punct("(")?);
        n.push(self.expr()?);
        n.push(self.expect_punct(")")?);
        let mut items = 0;
        while !self.at_kw("endcase") {
            if self.at_end() {
                return Err(self.error("`endcase`"));
            }
            let mut item = self.case_label()?;
            item.push(self.statement()?);
            n.push(item);
            items += 1;
        }
        if items == 0 {
            return Err(self.error("case item"));
        }
        n.push(self.bump());
        Ok(n)
    }

    fn for_stmt(&mut self) -> PResult<Node> {
        let mut n = Node::new(Symbol::ForStmt);
        n.push(self.bump());
        n.push(self.expect_punct("(")?);
        n.push(self.lvalue()?);
        n.push(self.expect(TokenKind::Operator, "=")?);
        n.push(self.expr()?);
        n.push(self.expect_punct(";")?);
        n.push(self.expr()?);
        n.push(self.expect_punct(";")?);
        n.push(self.lvalue()?);
        n.push(self.expect(TokenKind::Operator, "=")?);
        n.push(self.expr()?);
        n.push(self.expect_punct(")")?);
        n.push(self.statement()?);
        Ok(n)
    }

    fn assignment_or_call(&mut self) -> PResult<Node> {
        let start = self.pos;
        let target = self.lvalue()?;
        let simple_name = self.pos == start + 1;
        let sym = if self.at_op("=") {
            Symbol::BlockingAssign
        } else if self.at_op("<=") {
            Symbol::NonblockingAssign
        } else if simple_name && (self.at_punct("(") || self.at_punct(";")) {
            let mut n = Node::with(Symbol::TaskEnable, vec![target]);
            if self.at_punct("(") {
                n.push(self.bump());
                self.argument_list(&mut n)?;
                n.push(self.expect_punct(")")?);
            }
            n.push(self.expect_punct(";")?);
            return Ok(n);
        } else {
            return Err(self.error("`=` or `<=`"));
        };
        let mut n = Node::with(sym, vec![target]);
        n.push(self.bump());
        if self.at_punct("#") {
            n.push(self.delay_control()?);
        } else if self.at_punct("@") {
            n.push(self.event_control()?);
        }
        n.push(self.expr()?);
        n.push(self.expect_punct(";")?);
        Ok(n)
    }

    fn event_control(&mut self) -> PResult<Node> {
        let mut n = Node::new(Symbol::EventControl);
        n.push(self.bump());
        if self.at_op("*") {
            n.push(self.bump());
        } else if self.at_punct("(") {
            n.push(self.bump());
            if self.at_op("*") && self.peek_at(1).is_some_and(|t| t.is(TokenKind::Punctuation, ")"))
            {
                n.push(self.bump());
            } else {
                loop {
                    let mut e = Node::new(Symbol::EventExpr);
                    if self.at_kw("posedge") || self.at_kw("negedge") {
                        e.push(self.bump());
                    }
                    e.push(self.expr()?);
                    n.push(e);
                    if !(self.eat_kw(&mut n, "or") || self.eat_punct(&mut n, ",")) {
                        break;
                    }
                }
            }
            n.push(self.expect_punct(")")?);
        } else {
            n.push(self.lvalue()?);
        }
        Ok(n)
    }

    fn delay_control(&mut self) -> PResult<Node> {
        let mut n = Node::new(Symbol::DelayControl);
        n.push(self.bump());
        match self.peek() {
            Some(t) if matches!(t.kind, TokenKind::NumberLiteral | TokenKind::Identifier) => {
                n.push(self.bump())
            }
            Some(t) if t.kind == TokenKind::Directive => n.push(self.bump()),
            Some(t) if t.is(TokenKind::Punctuation, "(") => {
                n.push(self.bump());
                loop {
                    n.push(self.expr()?);
                    if !(self.eat_punct(&mut n, ",") || self.eat_punct(&mut n, ":")) {
                        break;
                    }
                }
                n.push(self.expect_punct(")")?);
            }
            _ => return Err(self.error("delay value")),
        }
        Ok(n)
    }

    fn argument_list(&mut self, parent: &mut Node) -> PResult<()> {
        if self.at_punct(")") {
            return Ok(());
        }
        loop {
            if !self.at_punct(",") && !self.at_punct(")") {
                parent.push(self.expr()?);
            }
            if !self.eat_punct(parent, ",") {
                return Ok(());
            }
        }
    }

    // ---- expressions ----

    fn lvalue(&mut self) -> PResult<Node> {
        if self.at_punct("{") {
            return self.concatenation();
        }
        if self.at_kind(TokenKind::Identifier) || self.at_kind(TokenKind::Directive) {
            return self.name_with_selects();
        }
        Err(self.error("expression"))
    }

    /// Wraps any expression in an `Expr` node.
    fn expr(&mut self) -> PResult<Node> {
        let e = self.expr_bp(0)?;
        Ok(if e.symbol == Symbol::Expr {
            e
        } else {
            Node::with(Symbol::Expr, vec![e])
        })
    }

    fn expr_bp(&mut self, min_power: u8) -> PResult<Node> {
        let mut lhs = self.unary()?;
        while let Some(t) = self.peek() {
            if t.kind != TokenKind::Operator {
                break;
            }
            if t.text == "?" {
                if TERNARY_POWER < min_power {
                    break;
                }
                let q = self.bump();
                let mid = self.expr_bp(0)?;
                let colon = self.expect_punct(":")?;
                let rhs = self.expr_bp(TERNARY_POWER)?;
                lhs = Node::with(Symbol::Expr, vec![lhs, q, mid, colon, rhs]);
                continue;
            }
            let Some(power) = binary_power(&t.text) else {
                break;
            };
            if power <= min_power {
                break;
            }
            let op = self.bump();
            let rhs = self.expr_bp(power)?;
            lhs = Node::with(Symbol::Expr, vec![lhs, op, rhs]);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Node> {
        if self
            .peek()
            .is_some_and(|t| t.kind == TokenKind::Operator && UNARY_OPS.contains(&t.text.as_str()))
        {
            let op = self.bump();
            let operand = self.expr_bp(UNARY_POWER)?;
            return Ok(Node::with(Symbol::Expr, vec![op, operand]));
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<Node> {
        let Some(t) = self.peek() else {
            return Err(self.error("expression"));
        };
        match t.kind {
            TokenKind::NumberLiteral | TokenKind::StringLiteral => Ok(self.bump()),
            TokenKind::Identifier | TokenKind::Directive => self.name_with_selects(),
            TokenKind::Punctuation if t.text == "(" => {
                let open = self.bump();
                let inner = self.expr_bp(0)?;
                let mut n = Node::with(Symbol::Expr, vec![open, inner]);
                // min:typ:max
                while self.eat_punct(&mut n, ":") {
                    n.push(self.expr_bp(0)?);
                }
                n.push(self.expect_punct(")")?);
                Ok(n)
            }
            TokenKind::Punctuation if t.text == "{" => self.concatenation(),
            _ => Err(self.error("expression")),
        }
    }

    /// Hierarchical name, optional call arguments, then bit/part selects.
    fn name_with_selects(&mut self) -> PResult<Node> {
        let mut name = self.bump();
        while self.at_punct(".")
            && self
                .peek_at(1)
                .is_some_and(|t| t.kind == TokenKind::Identifier)
        {
            let mut hier = Node::with(Symbol::Expr, vec![name]);
            hier.push(self.bump());
            hier.push(self.bump());
            name = hier;
        }
        if self.at_punct("(") {
            let mut call = Node::with(Symbol::Call, vec![name]);
            call.push(self.bump());
            self.argument_list(&mut call)?;
            call.push(self.expect_punct(")")?);
            name = call;
        }
        while self.at_punct("[") {
            let mut sel = Node::with(Symbol::Select, vec![name]);
            sel.push(self.bump());
            sel.push(self.expr()?);
            if self.at_punct(":") || self.at_op("+:") || self.at_op("-:") {
                sel.push(self.bump());
                sel.push(self.expr()?);
            }
            sel.push(self.expect_punct("]")?);
            name = sel;
        }
        Ok(name)
    }

    fn concatenation(&mut self) -> PResult<Node> {
        let open = self.bump();
        let first = self.expr()?;
        if self.at_punct("{") {
            let mut rep = Node::with(Symbol::Replication, vec![open, first]);
            rep.push(self.concatenation()?);
            rep.push(self.expect_punct("}")?);
            return Ok(rep);
        }
        let mut n = Node::with(Symbol::Concat, vec![open, first]);
        while self.eat_punct(&mut n, ",") {
            n.push(self.expr()?);
        }
        n.push(self.expect_punct("}")?);
        Ok(n)
    }
}

#[cfg(test)]
mod tests {
    use super::super::lex;
    use super::*;

    fn parse_src(src: &str) -> PResult<Ast> {
        parse(&lex(src).unwrap())
    }

    fn assert_leaf_agreement(src: &str) {
        let toks = lex(src).unwrap();
        let ast = parse(&toks).unwrap_or_else(|e| panic!("{e}\n{src}"));
        let leaves: Vec<_> = ast.leaves().into_iter().cloned().collect();
        let stream: Vec<_> = toks.into_iter().filter(|t| !t.is_trivia()).collect();
        assert_eq!(leaves, stream);
    }

    #[test]
    fn minimal_module() {
        let ast = parse_src("module m; endmodule").unwrap();
        let m: Vec<_> = ast.modules().collect();
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].symbol, Symbol::ModuleDecl);
        // module, m, ;, endmodule
        assert_eq!(m[0].children.len(), 4);
    }

    #[test]
    fn assign_without_expression() {
        let err = parse_src("module m; assign endmodule").unwrap_err();
        assert_eq!(err.found, "`endmodule`");
        assert_eq!(err.span, Span::new(17, 26));
        assert_eq!(err.expected, "expression");
    }

    #[test]
    fn assign_missing_rhs() {
        let err = parse_src("module m; assign y = ; endmodule").unwrap_err();
        assert_eq!(err.expected, "expression");
        assert_eq!(err.found, "`;`");
    }

    #[test]
    fn missing_endmodule_at_eof() {
        let err = parse_src("module m;").unwrap_err();
        assert_eq!(err.expected, "`endmodule`");
        assert_eq!(err.found, "end of input");
        assert_eq!(err.span, Span::new(9, 9));
    }

    #[test]
    fn operator_precedence() {
        let ast = parse_src("module m; assign y = a + b * c; endmodule").unwrap();
        let mut found = None;
        ast.root.walk(&mut |n| {
            if n.symbol == Symbol::AssignStmt {
                found = Some(n.clone());
            }
        });
        let assign = found.unwrap();
        // assign y = <expr> ;
        let rhs = &assign.children[3];
        assert_eq!(rhs.symbol, Symbol::Expr);
        let op = rhs.children[1].token.as_ref().unwrap();
        assert_eq!(op.text, "+");
        assert_eq!(rhs.children[2].symbol, Symbol::Expr);
        assert_eq!(rhs.children[2].children[1].token.as_ref().unwrap().text, "*");
    }

    #[test]
    fn ternary_is_right_associative() {
        let ast = parse_src("module m; assign y = a ? b : c ? d : e; endmodule").unwrap();
        let mut ternaries = 0;
        ast.root.walk(&mut |n| {
            if n.symbol == Symbol::Expr && n.children.len() == 5 {
                ternaries += 1;
            }
        });
        assert_eq!(ternaries, 2);
    }

    #[test]
    fn rich_module_parses() {
        let src = r#"
`timescale 1ns/1ps
module alu #(parameter WIDTH = 8, parameter OPS = 4) (
    input wire clk,
    input wire rst_n,
    input [WIDTH-1:0] a, b,
    input [1:0] op,
    output reg [WIDTH-1:0] y,
    output zero
);
    localparam ADD = 2'd0, SUB = 2'd1;
    wire [WIDTH:0] sum = {1'b0, a} + {1'b0, b};
    reg [7:0] mem [0:15];
    integer i;
    assign zero = ~|y;
    always @(posedge clk or negedge rst_n) begin : seq
        if (!rst_n)
            y <= {WIDTH{1'b0}};
        else begin
            case (op)
                ADD: y <= a + b;
                SUB: y <= a - b;
                2'd2, 2'd3: y <= a & b;
                default: y <= 0;
            endcase
        end
    end
    always @(*) begin
        for (i = 0; i < 16; i = i + 1)
            mem[i] = 8'h00;
    end
    initial begin
        #10 $display("y=%d", y);
        $finish;
    end
    adder #(.W(WIDTH)) u_add (.a(a), .b(b), .s());
    and g1 (n1, a[0], b[0]);
    genvar g;
    generate
        for (g = 0; g < 4; g = g + 1) begin : gen
            assign dummy[g] = a[g] ^ b[g];
        end
    endgenerate
    function [7:0] inc;
        input [7:0] v;
        inc = v + 1;
    endfunction
    task pulse;
        begin
            clk_en = 1'b1;
            @(posedge clk) clk_en = 1'b0;
        end
    endtask
endmodule
"#;
        assert_leaf_agreement(src);
    }

    #[test]
    fn non_ansi_ports() {
        assert_leaf_agreement(
            "module m(a, b, y);\n input a, b;\n output y;\n assign y = a | b;\nendmodule\n",
        );
    }

    #[test]
    fn missing_semicolon_is_rejected() {
        assert!(parse_src("module m; wire a\n assign a = 1; endmodule").is_err());
    }

    #[test]
    fn unbalanced_begin_is_rejected() {
        let err = parse_src("module m; always @(*) begin a = b; endmodule").unwrap_err();
        assert_eq!(err.expected, "statement");
    }

    #[test]
    fn stray_top_level_token() {
        let err = parse_src("wire x;").unwrap_err();
        assert_eq!(err.expected, "`module`");
    }

    #[test]
    fn empty_case_rejected() {
        assert!(parse_src("module m; always @* case (a) endcase endmodule").is_err());
    }
}
