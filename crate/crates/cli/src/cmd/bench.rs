// SPDX-License-Identifier: Apache-2.0

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::sync::Arc;

use clap::ValueEnum;
use verispec::evalbench::{
    load_prompts, run_benchmark, CheckerConfig, EvalError, MethodSpec, ModelHandle, TimingMode,
};
use verispec::refmodel::NGramMultiHead;

use super::{load_vocab, write_file};
use crate::config::{require, set, set_path, Config};
use crate::fail::{data, usage, CmdResult, Failure, OrFail, EXIT_EXTERNAL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Ours,
    MedusaStyle,
    Ntp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TimingArg {
    Wall,
    Simulated,
}

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Prompts JSONL: `id`, `instruction`, optional `prefix` and `testbench`.
    #[arg(long)]
    prompts: PathBuf,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    vocab: Option<PathBuf>,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [MethodArg::Ours, MethodArg::MedusaStyle, MethodArg::Ntp])]
    methods: Vec<MethodArg>,
    /// Samples per prompt.
    #[arg(long)]
    samples: Option<usize>,
    /// pass@k values, comma separated.
    #[arg(long, value_delimiter = ',')]
    ks: Option<Vec<u64>>,
    #[arg(long)]
    max_tokens: Option<usize>,
    #[arg(long)]
    temperature: Option<f64>,
    /// `simulated` charges --per-call-ms per model call instead of wall time.
    #[arg(long, value_enum)]
    timing: Option<TimingArg>,
    #[arg(long, default_value_t = 10.0)]
    per_call_ms: f64,
    /// Functional checker command; `{design}` and `{testbench}` are replaced
    /// by paths. Exit status 0 means pass.
    #[arg(long, num_args = 1.., allow_hyphen_values = true)]
    checker: Option<Vec<String>>,
    #[arg(long)]
    checker_timeout: Option<f64>,
    /// Report JSON.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Report CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Every run as a JSON line.
    #[arg(long)]
    runs: Option<PathBuf>,
}

impl Args {
    pub fn apply(&self, cfg: &mut Config) {
        set_path(&mut cfg.paths.model, &self.model);
        set_path(&mut cfg.paths.vocab, &self.vocab);
        set_path(&mut cfg.paths.report, &self.output);
        let b = &mut cfg.bench;
        set(&mut b.samples_per_prompt, &self.samples);
        set(&mut b.ks, &self.ks);
        set(&mut b.max_tokens, &self.max_tokens);
        set(&mut b.temperature, &self.temperature);
        if let Some(t) = self.timing {
            b.timing = match t {
                TimingArg::Wall => TimingMode::Wall,
                TimingArg::Simulated => TimingMode::Simulated {
                    per_call_ms: self.per_call_ms,
                },
            };
        }
        if let Some(command) = &self.checker {
            b.checker = Some(CheckerConfig {
                command: command.clone(),
                timeout_s: self.checker_timeout.unwrap_or(30.0),
            });
        } else if let (Some(c), Some(t)) = (&mut b.checker, self.checker_timeout) {
            c.timeout_s = t;
        }
    }

    pub fn run(&self, cfg: &Config) -> CmdResult {
        let vocab = load_vocab(require(&cfg.paths.vocab, "--vocab")?)?;
        let model_path = require(&cfg.paths.model, "--model")?;
        let model = NGramMultiHead::load(model_path).or_data(format!("loading {}", model_path.display()))?;
        if model.header().vocab_hash != vocab.fingerprint() {
            return Err(data(format!("{} was trained with a different vocabulary", model_path.display())));
        }
        let file = File::open(&self.prompts).or_data(format!("opening {}", self.prompts.display()))?;
        let prompts = load_prompts(BufReader::new(file)).or_data(format!("reading {}", self.prompts.display()))?;
        if prompts.is_empty() {
            return Err(data(format!("{} holds no prompts", self.prompts.display())));
        }

        let handle = ModelHandle::Shared(Arc::new(model));
        let mut methods: Vec<MethodArg> = Vec::new();
        for m in &self.methods {
            if !methods.contains(m) {
                methods.push(*m);
            }
        }
        let specs: Vec<MethodSpec> = methods
            .iter()
            .map(|m| match m {
                MethodArg::Ours => MethodSpec::ours(handle.clone(), cfg.acceptance.clone()),
                MethodArg::MedusaStyle => MethodSpec::medusa_style(handle.clone(), cfg.acceptance.clone()),
                MethodArg::Ntp => MethodSpec::ntp(handle.clone()),
            })
            .collect();

        let outcome = run_benchmark(&specs, &prompts, &cfg.bench, &vocab).map_err(|e| match e {
            EvalError::Checker(_) => Failure {
                code: EXIT_EXTERNAL,
                error: e.into(),
            },
            EvalError::Domain(_) => usage(e),
            other => data(other),
        })?;

        let report = &outcome.report;
        if let Some(path) = &cfg.paths.report {
            write_file(path, report.to_json() + "\n")?;
        }
        if let Some(path) = &self.csv {
            write_file(path, report.to_csv())?;
        }
        if let Some(path) = &self.runs {
            let file = File::create(path).or_data(format!("creating {}", path.display()))?;
            let mut w = BufWriter::new(file);
            for run in &outcome.runs {
                serde_json::to_writer(&mut w, run).or_data("serializing run")?;
                w.write_all(b"\n").or_data(format!("writing {}", path.display()))?;
            }
            w.flush().or_data(format!("writing {}", path.display()))?;
        }
        print!("{}", report.to_csv());
        Ok(())
    }
}
