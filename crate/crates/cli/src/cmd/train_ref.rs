// SPDX-License-Identifier: Apache-2.0

use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use verispec::corpus::load_dataset;
use verispec::refmodel::train_ngram;
use verispec::tokenizer::TokenSequence;

use super::load_vocab;
use crate::config::{require, set, set_path, Config};
use crate::fail::{CmdResult, OrFail};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Dataset JSONL written by `corpus`.
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    vocab: Option<PathBuf>,
    /// n-gram order; 1 is allowed.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    heads: Option<usize>,
    /// Additive smoothing constant.
    #[arg(long)]
    alpha: Option<f64>,
    /// Where to write the model.
    #[arg(long)]
    output: Option<PathBuf>,
}

impl Args {
    pub fn apply(&self, cfg: &mut Config) {
        set_path(&mut cfg.paths.dataset, &self.dataset);
        set_path(&mut cfg.paths.vocab, &self.vocab);
        set_path(&mut cfg.paths.model, &self.output);
        set(&mut cfg.refmodel.n, &self.n);
        set(&mut cfg.refmodel.heads, &self.heads);
        set(&mut cfg.refmodel.alpha, &self.alpha);
    }

    pub fn run(&self, cfg: &Config) -> CmdResult {
        let dataset = require(&cfg.paths.dataset, "--dataset")?;
        let output = require(&cfg.paths.model, "--output")?;
        let vocab = load_vocab(require(&cfg.paths.vocab, "--vocab")?)?;
        let file = File::open(dataset).or_data(format!("opening {}", dataset.display()))?;
        let records = load_dataset(BufReader::new(file)).or_data(format!("reading {}", dataset.display()))?;
        let seqs: Vec<TokenSequence> = records
            .into_iter()
            .map(|r| TokenSequence::new(r.token_ids_with_frag))
            .collect();
        let p = &cfg.refmodel;
        let model = train_ngram(&seqs, p.n, p.heads, p.alpha, &vocab).or_data("training n-gram model")?;
        model.save(output).or_data(format!("writing {}", output.display()))?;
        log::info!("trained {}-gram model with {} heads on {} sequences", p.n, p.heads, seqs.len());
        println!("{}", model.model_hash());
        Ok(())
    }
}
