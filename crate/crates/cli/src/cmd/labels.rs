// SPDX-License-Identifier: Apache-2.0

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use clap::ValueEnum;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use verispec::labelgen::{build_labels_naive, build_labels_parallel};
use verispec::tokenizer::{encode_fragmented, TokenId, FRAG};
use verispec::verilog::fragment_source;

use super::{load_vocab, read_text, write_file};
use crate::config::{require, set, set_path, Config};
use crate::fail::{data, usage, CmdResult, OrFail};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Binary,
}

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Verilog source to fragment-encode.
    #[arg(conflicts_with = "ids")]
    file: Option<PathBuf>,
    /// Explicit ids instead of a source file, e.g. "5 6 256 7 256".
    #[arg(long)]
    ids: Option<String>,
    #[arg(long)]
    vocab: Option<PathBuf>,
    /// Number of heads H; the matrix has H + 1 rows.
    #[arg(long)]
    heads: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Output file; JSON goes to stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Compare the parallel builder against the naive one and exit 2 on any
    /// mismatch.
    #[arg(long)]
    check: bool,
    /// Random sequences (length up to 512) added to the --check run.
    #[arg(long, default_value_t = 0)]
    random: usize,
}

fn random_sequence(rng: &mut ChaCha8Rng) -> Vec<TokenId> {
    let len = rng.gen_range(0..=512);
    let p_frag = rng.gen_range(0.05..0.6);
    (0..len)
        .map(|_| if rng.gen_bool(p_frag) { FRAG } else { rng.gen_range(0..256) })
        .collect()
}

impl Args {
    pub fn apply(&self, cfg: &mut Config) {
        set_path(&mut cfg.paths.vocab, &self.vocab);
        set(&mut cfg.labels.heads, &self.heads);
    }

    fn input_ids(&self, cfg: &Config) -> CmdResult<Vec<TokenId>> {
        if let Some(text) = &self.ids {
            return text
                .split_whitespace()
                .map(|w| w.parse().map_err(|_| usage(format!("not a token id: {w:?}"))))
                .collect();
        }
        let Some(file) = &self.file else {
            return Err(usage("give a source file or --ids"));
        };
        let vocab = load_vocab(require(&cfg.paths.vocab, "--vocab")?)?;
        let src = read_text(file)?;
        let fc = fragment_source(&src).or_data(format!("fragmenting {}", file.display()))?;
        Ok(encode_fragmented(&fc, &vocab).ids)
    }

    pub fn run(&self, cfg: &Config) -> CmdResult {
        let heads = cfg.labels.heads;
        if heads == 0 {
            return Err(usage("head count must be at least 1"));
        }
        let ids = self.input_ids(cfg)?;
        let labels = build_labels_parallel(&ids, heads);

        if self.check {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let mut cases = vec![ids.clone()];
            cases.extend((0..self.random).map(|_| random_sequence(&mut rng)));
            let mut mismatches = 0;
            for (n, case) in cases.iter().enumerate() {
                if build_labels_parallel(case, heads) != build_labels_naive(case, heads) {
                    log::error!("case {n} (length {}) differs", case.len());
                    mismatches += 1;
                }
            }
            eprintln!("checked {} sequences, {mismatches} mismatches", cases.len());
            if mismatches > 0 {
                return Err(data(format!("{mismatches} label mismatches")));
            }
        }

        match (self.format, &self.output) {
            (Format::Json, None) => println!("{}", labels.to_json()),
            (Format::Json, Some(path)) => write_file(path, labels.to_json() + "\n")?,
            (Format::Binary, Some(path)) => {
                let file = File::create(path).or_data(format!("creating {}", path.display()))?;
                labels
                    .write_binary(BufWriter::new(file))
                    .or_data(format!("writing {}", path.display()))?;
            }
            (Format::Binary, None) => return Err(usage("--format binary needs --output")),
        }
        Ok(())
    }
}
