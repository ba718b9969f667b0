// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::BufRead;
use std::path::PathBuf;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{pass_at_k, speed, speedup, CheckerConfig, Checks, EvalError, Method, RunRecord};
use crate::specdec::{decode, ntp_decode, AcceptanceParams, SpeculativeModel, StopCondition, Truncation};
use crate::tokenizer::{decode_to_string, encode, Vocab};
use crate::verilog::syntax_check;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prompt {
    pub id: String,
    pub instruction: String,
    /// Code the model continues from; the instruction is used when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prefix: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub testbench: Option<PathBuf>,
}

impl Prompt {
    fn model_input(&self) -> &str {
        self.prefix.as_deref().unwrap_or(&self.instruction)
    }
}

pub fn load_prompts(r: impl BufRead) -> Result<Vec<Prompt>, EvalError> {
    let mut out = Vec::new();
    for line in r.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TimingMode {
    /// Measured wall-clock time per decode.
    Wall,
    /// Model calls times a fixed cost; reproducible across machines.
    Simulated { per_call_ms: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchConfig {
    pub samples_per_prompt: usize,
    pub ks: Vec<u64>,
    pub max_tokens: usize,
    pub temperature: f64,
    pub seed: u64,
    /// Thread budget; 0 lets the pool decide.
    pub workers: usize,
    pub timing: TimingMode,
    pub checker: Option<CheckerConfig>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            samples_per_prompt: 20,
            ks: vec![1, 5, 10],
            max_tokens: 256,
            temperature: 0.0,
            seed: 0,
            workers: 0,
            timing: TimingMode::Wall,
            checker: None,
        }
    }
}

/// Job coordinates handed to per-job model factories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct JobKey {
    pub method: usize,
    pub prompt: usize,
    pub sample: usize,
}

pub type ModelFactory = dyn Fn(&JobKey) -> Box<dyn SpeculativeModel> + Send + Sync;

/// Shareable models are used by all jobs at once; stateful ones are built
/// fresh for every job.
#[derive(Clone)]
pub enum ModelHandle {
    Shared(Arc<dyn SpeculativeModel + Send + Sync>),
    PerJob(Arc<ModelFactory>),
}

#[derive(Clone)]
pub struct MethodSpec {
    pub method: Method,
    pub model: ModelHandle,
    pub params: AcceptanceParams,
}

impl MethodSpec {
    pub fn ours(model: ModelHandle, params: AcceptanceParams) -> Self {
        Self {
            method: Method::Ours,
            model,
            params: AcceptanceParams {
                fragment_truncation: Truncation::Strict,
                ..params
            },
        }
    }

    pub fn medusa_style(model: ModelHandle, params: AcceptanceParams) -> Self {
        Self {
            method: Method::MedusaStyle,
            model,
            params: AcceptanceParams {
                fragment_truncation: Truncation::Lenient,
                ..params
            },
        }
    }

    pub fn ntp(model: ModelHandle) -> Self {
        Self {
            method: Method::Ntp,
            model,
            params: AcceptanceParams::greedy(0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodMetrics {
    pub method: Method,
    pub runs: usize,
    pub speed: f64,
    pub speedup: Option<f64>,
    /// Emitted ids over steps, pooled across runs.
    pub mean_accepted_len: Option<f64>,
    pub pass_at_k: BTreeMap<String, f64>,
    pub pass_rate: f64,
    pub syntax_ok_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub config: BenchConfig,
    pub prompts: usize,
    pub methods: Vec<MethodMetrics>,
}

impl MetricReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_csv(&self) -> String {
        let ks: Vec<String> = self.config.ks.iter().map(|k| format!("pass@{k}")).collect();
        let mut out = format!(
            "method,speed_tokens_per_s,speedup,mean_accepted_len,{},pass_rate\n",
            ks.join(",")
        );
        for m in &self.methods {
            let opt = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_default();
            let passes: Vec<String> = ks
                .iter()
                .map(|k| m.pass_at_k.get(k).map(|v| format!("{v:.4}")).unwrap_or_default())
                .collect();
            let _ = writeln!(
                out,
                "{},{:.4},{},{},{},{:.4}",
                m.method,
                m.speed,
                opt(m.speedup),
                opt(m.mean_accepted_len),
                passes.join(","),
                m.pass_rate
            );
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct BenchOutcome {
    pub report: MetricReport,
    pub runs: Vec<RunRecord>,
}

fn job_seed(base: u64, key: &JobKey, samples: usize) -> u64 {
    base.wrapping_add((key.prompt * samples + key.sample) as u64)
}

fn run_job(
    spec: &MethodSpec,
    prompt: &Prompt,
    key: JobKey,
    cfg: &BenchConfig,
    vocab: &Vocab,
) -> Result<RunRecord, EvalError> {
    let owned;
    let model: &dyn SpeculativeModel = match &spec.model {
        ModelHandle::Shared(m) => m.as_ref(),
        ModelHandle::PerJob(f) => {
            owned = f(&key);
            owned.as_ref()
        }
    };
    let input = encode(prompt.model_input().as_bytes(), vocab).ids;
    let stop = StopCondition::new(cfg.max_tokens);
    let seed = job_seed(cfg.seed, &key, cfg.samples_per_prompt);
    let result = match spec.method {
        Method::Ntp => ntp_decode(model, &input, cfg.temperature, seed, stop)?,
        _ => {
            let p = AcceptanceParams {
                temperature: cfg.temperature,
                seed,
                ..spec.params.clone()
            };
            decode(model, &input, &p, stop)?
        }
    };
    let output_text = decode_to_string(&result.output.ids, vocab)?;
    let design = format!("{}{}", prompt.prefix.as_deref().unwrap_or(""), output_text);
    let mut checks = Checks {
        syntax_ok: syntax_check(&design).ok,
        ..Checks::default()
    };
    if let (Some(checker), Some(tb)) = (&cfg.checker, &prompt.testbench) {
        let outcome = checker.run(&design, tb)?;
        checks.functional_ok = Some(outcome.passed);
        checks.reason = outcome.reason;
    }
    let time_s = match cfg.timing {
        TimingMode::Wall => result.trace.wall_time,
        TimingMode::Simulated { per_call_ms } => result.trace.model_calls as f64 * per_call_ms / 1000.0,
    };
    Ok(RunRecord {
        prompt_id: prompt.id.clone(),
        method: spec.method,
        sample: key.sample,
        output_text,
        trace: result.trace,
        time_s,
        checks,
    })
}

/// Decodes every method × prompt × sample, checks the outputs and
/// aggregates the metrics. Jobs run concurrently; aggregation walks them in
/// job order.
pub fn run_benchmark(
    methods: &[MethodSpec],
    prompts: &[Prompt],
    cfg: &BenchConfig,
    vocab: &Vocab,
) -> Result<BenchOutcome, EvalError> {
    if methods.is_empty() || prompts.is_empty() || cfg.samples_per_prompt == 0 {
        return Err(EvalError::Empty("benchmark needs methods, prompts and samples"));
    }
    let mut jobs = Vec::new();
    for m in 0..methods.len() {
        for p in 0..prompts.len() {
            for s in 0..cfg.samples_per_prompt {
                jobs.push(JobKey {
                    method: m,
                    prompt: p,
                    sample: s,
                });
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| EvalError::Checker(format!("thread pool: {e}")))?;
    let runs: Vec<RunRecord> = pool.install(|| {
        jobs.par_iter()
            .map(|k| run_job(&methods[k.method], &prompts[k.prompt], *k, cfg, vocab))
            .collect::<Result<_, _>>()
    })?;

    let per_method = cfg.samples_per_prompt * prompts.len();
    let speeds: Vec<f64> = runs
        .chunks(per_method)
        .map(speed)
        .collect::<Result<_, _>>()?;
    let ntp_speed = methods
        .iter()
        .position(|m| m.method == Method::Ntp)
        .map(|i| speeds[i]);

    let mut metrics = Vec::with_capacity(methods.len());
    for ((spec, chunk), &sp) in methods.iter().zip(runs.chunks(per_method)).zip(&speeds) {
        let steps: usize = chunk.iter().map(|r| r.trace.steps.len()).sum();
        let emitted: usize = chunk
            .iter()
            .flat_map(|r| &r.trace.steps)
            .map(|s| s.emitted.len())
            .sum();
        let n = cfg.samples_per_prompt as u64;
        let correct: Vec<u64> = chunk
            .chunks(cfg.samples_per_prompt)
            .map(|c| c.iter().filter(|r| r.checks.correct()).count() as u64)
            .collect();
        let mut pass = BTreeMap::new();
        for &k in cfg.ks.iter().filter(|&&k| k >= 1 && k <= n) {
            let mut total = 0.0;
            for &c in &correct {
                total += pass_at_k(n, c, k)?;
            }
            pass.insert(format!("pass@{k}"), total / correct.len() as f64);
        }
        metrics.push(MethodMetrics {
            method: spec.method,
            runs: chunk.len(),
            speed: sp,
            speedup: ntp_speed.map(|ntp| speedup(sp, ntp)),
            mean_accepted_len: (steps > 0).then(|| emitted as f64 / steps as f64),
            pass_at_k: pass,
            pass_rate: correct.iter().filter(|&&c| c > 0).count() as f64 / correct.len() as f64,
            syntax_ok_rate: chunk.iter().filter(|r| r.checks.syntax_ok).count() as f64
                / chunk.len() as f64,
        });
    }
    Ok(BenchOutcome {
        report: MetricReport {
            config: cfg.clone(),
            prompts: prompts.len(),
            methods: metrics,
        },
        runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::refmodel::{oracle_mock, ScriptEntry, ScriptedMock};
    use crate::specdec::{Distribution, StepOutput};
    use crate::tokenizer::{encode_fragmented, TokenId, EOS, FRAG};
    use crate::verilog::fragment_source;

    const CODE: &str = "module m(input a, output y); assign y = a; endmodule";

    fn target(vocab: &Vocab) -> Vec<TokenId> {
        encode_fragmented(&fragment_source(CODE).unwrap(), vocab).ids
    }

    fn ntp_script(tokens: &[TokenId]) -> ScriptedMock {
        let v = EOS as usize + 1;
        let step = |t| {
            ScriptEntry::Step(StepOutput {
                base: Distribution::one_hot(v, t),
                heads: vec![],
            })
        };
        let script = tokens.iter().map(|&t| step(t)).chain([step(EOS)]).collect();
        ScriptedMock::new(v, 0, script)
    }

    fn setup(vocab: &Vocab) -> (Vec<MethodSpec>, Vec<Prompt>, BenchConfig) {
        let t = target(vocab);
        // enough heads to cover any fragment in one step
        let oracle = oracle_mock(&t, 64);
        let truncated: Vec<TokenId> = t[..t.iter().position(|&x| x == b';' as TokenId).unwrap() + 2].to_vec();
        let full = t.clone();
        let factory: Arc<ModelFactory> = Arc::new(move |k: &JobKey| {
            // sample 1 stops after the header's `;`
            let toks = if k.sample == 1 { truncated.clone() } else { full.clone() };
            Box::new(ntp_script(&toks)) as Box<dyn SpeculativeModel>
        });
        let methods = vec![
            MethodSpec::ours(ModelHandle::Shared(Arc::new(oracle)), AcceptanceParams::greedy(64)),
            MethodSpec::ntp(ModelHandle::PerJob(factory)),
        ];
        let prompts = (0..2)
            .map(|i| Prompt {
                id: format!("p{i}"),
                instruction: String::new(),
                prefix: None,
                testbench: None,
            })
            .collect();
        let cfg = BenchConfig {
            samples_per_prompt: 2,
            ks: vec![1, 2],
            max_tokens: 1000,
            timing: TimingMode::Simulated { per_call_ms: 10.0 },
            ..BenchConfig::default()
        };
        (methods, prompts, cfg)
    }

    #[test]
    fn scripted_report_matches_hand_metrics() {
        let vocab = Vocab::bytes_only();
        let (methods, prompts, cfg) = setup(&vocab);
        let out = run_benchmark(&methods, &prompts, &cfg, &vocab).unwrap();

        let t = target(&vocab);
        let total = t.len() as f64;
        let frags = t.iter().filter(|&&x| x == FRAG).count() as f64;
        let content = total - frags;
        let cut = (t.iter().position(|&x| x == b';' as TokenId).unwrap() + 2) as f64;
        let cut_content = cut - t[..cut as usize].iter().filter(|&&x| x == FRAG).count() as f64;

        let ours = &out.report.methods[0];
        let ntp = &out.report.methods[1];
        let ours_speed = content / ((1.0 + frags) * 0.01);
        let ntp_speed = (content / ((total + 1.0) * 0.01) + cut_content / ((cut + 1.0) * 0.01)) / 2.0;
        assert!((ours.speed - ours_speed).abs() < 1e-9);
        assert!((ntp.speed - ntp_speed).abs() < 1e-9);
        assert!((ours.speedup.unwrap() - ours_speed / ntp_speed).abs() < 1e-9);
        assert_eq!(ntp.speedup, Some(1.0));
        assert_eq!(ours.mean_accepted_len, Some(total / frags));
        assert_eq!(ntp.mean_accepted_len, Some(1.0));
        assert_eq!(ours.pass_at_k["pass@1"], 1.0);
        assert_eq!(ntp.pass_at_k["pass@1"], 0.5);
        assert_eq!(ntp.pass_at_k["pass@2"], 1.0);
        assert_eq!(ntp.pass_rate, 1.0);
        assert_eq!(ntp.syntax_ok_rate, 0.5);
        assert_eq!(out.runs[0].output_text, CODE);
    }

    #[test]
    fn rerun_is_identical_and_csv_has_rows() {
        let vocab = Vocab::bytes_only();
        let (methods, prompts, cfg) = setup(&vocab);
        let a = run_benchmark(&methods, &prompts, &cfg, &vocab).unwrap().report;
        let b = run_benchmark(&methods, &prompts, &cfg, &vocab).unwrap().report;
        assert_eq!(a.to_json(), b.to_json());
        let csv = a.to_csv();
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.starts_with("method,speed_tokens_per_s,speedup,mean_accepted_len,pass@1,pass@2,pass_rate"));
        assert!(csv.lines().nth(2).unwrap().starts_with("ntp,"));
    }

    #[test]
    fn ntp_only_speedup_is_one() {
        let vocab = Vocab::bytes_only();
        let (methods, prompts, cfg) = setup(&vocab);
        let out = run_benchmark(&methods[1..], &prompts, &cfg, &vocab).unwrap();
        assert_eq!(out.report.methods[0].speedup, Some(1.0));
    }

    #[test]
    fn prompts_jsonl() {
        let text = "{\"id\":\"a\",\"instruction\":\"make a counter\"}\n\n{\"id\":\"b\",\"instruction\":\"x\",\"testbench\":\"tb.v\"}\n";
        let p = load_prompts(text.as_bytes()).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p[1].testbench.as_deref(), Some(std::path::Path::new("tb.v")));
    }
}
