// SPDX-License-Identifier: Apache-2.0

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use verispec::corpus::{emit_dataset, prepare_corpus, train_vocab_on_records};

use super::{load_vocab, write_file};
use crate::config::{require, set, set_path, Config};
use crate::fail::{CmdResult, OrFail};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Directory searched recursively for `.v` files.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Dataset JSONL to write.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Vocabulary used for encoding. Trained on the surviving modules and
    /// saved here if the file does not exist yet.
    #[arg(long)]
    vocab: Option<PathBuf>,
    #[arg(long)]
    vocab_size: Option<usize>,
    /// Stage report JSON (also printed to stdout).
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long)]
    dedup_threshold: Option<f64>,
    #[arg(long)]
    comment_ratio_max: Option<f64>,
}

impl Args {
    pub fn apply(&self, cfg: &mut Config) {
        set_path(&mut cfg.paths.corpus_dir, &self.input);
        set_path(&mut cfg.paths.dataset, &self.output);
        set_path(&mut cfg.paths.vocab, &self.vocab);
        set_path(&mut cfg.paths.report, &self.report);
        set(&mut cfg.tokenizer.vocab_size, &self.vocab_size);
        set(&mut cfg.corpus.dedup_threshold, &self.dedup_threshold);
        set(&mut cfg.corpus.comment_ratio_max, &self.comment_ratio_max);
    }

    pub fn run(&self, cfg: &Config) -> CmdResult {
        let input = require(&cfg.paths.corpus_dir, "--input")?;
        let output = require(&cfg.paths.dataset, "--output")?;
        let vocab_path = require(&cfg.paths.vocab, "--vocab")?;

        let (records, mut report) = prepare_corpus(input, &cfg.corpus)
            .or_data(format!("preparing corpus under {}", input.display()))?;
        log::info!("{} of {} modules kept", report.kept, report.modules_extracted);

        let vocab = if vocab_path.exists() {
            load_vocab(vocab_path)?
        } else {
            let v = train_vocab_on_records(&records, cfg.tokenizer.vocab_size)
                .or_data("training vocabulary")?;
            v.save(vocab_path)
                .or_data(format!("writing {}", vocab_path.display()))?;
            log::info!("trained vocabulary of {} ids into {}", v.len(), vocab_path.display());
            v
        };

        let file = File::create(output).or_data(format!("creating {}", output.display()))?;
        let stats = emit_dataset(&records, &vocab, BufWriter::new(file))
            .or_data(format!("writing {}", output.display()))?;
        report.emitted = Some(stats);

        let json = serde_json::to_string_pretty(&report).expect("report serializes");
        if let Some(path) = &cfg.paths.report {
            write_file(path, format!("{json}\n"))?;
        }
        println!("{json}");
        Ok(())
    }
}
