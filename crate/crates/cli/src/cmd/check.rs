// SPDX-License-Identifier: Apache-2.0

use std::io::Write;
use std::path::PathBuf;

use verispec::verilog::{fragment_source, lex, parse, syntax_check};

use super::read_text;
use crate::fail::{data, CmdResult, OrFail};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Source file, `-` for stdin.
    file: PathBuf,
    /// Print the syntax tree as JSON.
    #[arg(long)]
    dump_ast: bool,
    /// Print one line per fragment: kind, a tab, then the quoted text.
    #[arg(long)]
    dump_fragments: bool,
}

impl Args {
    pub fn run(&self) -> CmdResult {
        let src = read_text(&self.file)?;
        let report = syntax_check(&src);
        if !report.ok {
            for d in &report.diagnostics {
                eprintln!("{}:{}: {}", self.file.display(), d.span.start, d.message);
            }
            return Err(data(format!("{} does not parse", self.file.display())));
        }
        let mut out = std::io::stdout().lock();
        if self.dump_ast {
            let toks = lex(&src).or_data("lexing")?;
            let ast = parse(&toks).or_data("parsing")?;
            let json = serde_json::to_string_pretty(&ast).expect("ast serializes");
            writeln!(out, "{json}").or_data("writing stdout")?;
        }
        if self.dump_fragments {
            let fc = fragment_source(&src).or_data("fragmenting")?;
            for f in &fc.fragments {
                writeln!(out, "{:?}\t{:?}", f.kind, f.text).or_data("writing stdout")?;
            }
        }
        if !self.dump_ast && !self.dump_fragments {
            writeln!(out, "{}: ok", self.file.display()).or_data("writing stdout")?;
        }
        Ok(())
    }
}
