// SPDX-License-Identifier: Apache-2.0

use std::io::Write;
use std::path::PathBuf;

use clap::Subcommand;
use verispec::corpus::{prepare_corpus, train_vocab_on_records};
use verispec::tokenizer::{decode, encode_fragmented, TokenId, FRAG};
use verispec::verilog::fragment_source;

use super::{load_vocab, read_text};
use crate::config::{require, set, set_path, Config};
use crate::fail::{data, CmdResult, OrFail};

#[derive(Debug, clap::Args)]
pub struct Args {
    #[command(subcommand)]
    action: Action,
}

#[derive(Debug, Subcommand)]
enum Action {
    /// Train a byte-level BPE vocabulary on the fragments of a corpus.
    Train {
        /// Corpus directory; modules go through the corpus filters first.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        vocab_size: Option<usize>,
        /// Where to write the vocabulary.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Encode a Verilog file fragment by fragment; ids include [FRAG].
    Encode {
        #[arg(long)]
        vocab: Option<PathBuf>,
        /// Source file, `-` for stdin.
        file: PathBuf,
        /// One line per fragment: its ids, a tab, then the quoted text.
        #[arg(long)]
        show_frag: bool,
    },
    /// Turn whitespace-separated ids back into text; [FRAG] is dropped.
    Decode {
        #[arg(long)]
        vocab: Option<PathBuf>,
        /// Id file, `-` for stdin.
        #[arg(default_value = "-")]
        file: PathBuf,
    },
}

fn join(ids: &[TokenId]) -> String {
    ids.iter().map(|id| id.to_string()).collect::<Vec<_>>().join(" ")
}

impl Args {
    pub fn apply(&self, cfg: &mut Config) {
        match &self.action {
            Action::Train {
                input,
                vocab_size,
                output,
            } => {
                set_path(&mut cfg.paths.corpus_dir, input);
                set_path(&mut cfg.paths.vocab, output);
                set(&mut cfg.tokenizer.vocab_size, vocab_size);
            }
            Action::Encode { vocab, .. } | Action::Decode { vocab, .. } => {
                set_path(&mut cfg.paths.vocab, vocab);
            }
        }
    }

    pub fn run(&self, cfg: &Config) -> CmdResult {
        match &self.action {
            Action::Train { .. } => {
                let input = require(&cfg.paths.corpus_dir, "--input")?;
                let output = require(&cfg.paths.vocab, "--output")?;
                let (records, _) = prepare_corpus(input, &cfg.corpus)
                    .or_data(format!("preparing corpus under {}", input.display()))?;
                let vocab = train_vocab_on_records(&records, cfg.tokenizer.vocab_size)
                    .or_data("training vocabulary")?;
                vocab.save(output).or_data(format!("writing {}", output.display()))?;
                println!("{} ids, sha256 {}", vocab.len(), vocab.fingerprint());
            }
            Action::Encode { file, show_frag, .. } => {
                let vocab = load_vocab(require(&cfg.paths.vocab, "--vocab")?)?;
                let src = read_text(file)?;
                let fc = fragment_source(&src).or_data(format!("fragmenting {}", file.display()))?;
                let seq = encode_fragmented(&fc, &vocab);
                let mut out = std::io::stdout().lock();
                if *show_frag {
                    let groups = seq.ids.split_inclusive(|&id| id == FRAG);
                    for (ids, frag) in groups.zip(&fc.fragments) {
                        writeln!(out, "{}\t{:?}", join(ids), frag.text).or_data("writing stdout")?;
                    }
                } else {
                    writeln!(out, "{}", join(&seq.ids)).or_data("writing stdout")?;
                }
            }
            Action::Decode { file, .. } => {
                let vocab = load_vocab(require(&cfg.paths.vocab, "--vocab")?)?;
                let ids = read_text(file)?
                    .split_whitespace()
                    .map(|w| w.parse::<TokenId>().map_err(|_| data(format!("not a token id: {w:?}"))))
                    .collect::<CmdResult<Vec<_>>>()?;
                let bytes = decode(&ids, &vocab).or_data("decoding ids")?;
                std::io::stdout().lock().write_all(&bytes).or_data("writing stdout")?;
            }
        }
        Ok(())
    }
}
