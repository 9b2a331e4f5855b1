//! Command-line front end. Exit codes: 0 success, 2 input error, 3 backend
//! error, 4 evaluation failure.
//!
//! Every option can also come from a flat `key = value` config file
//! (`--config`, keys are the long flag names) or from an `ERAG_`-prefixed
//! environment variable. Flags and environment win over the file.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::corpus::{self, ChunkConfig, Document, Tokenizer, WhitespaceTokenizer};
use crate::embed::{Embedder, HashEmbedder, HttpEmbedder};
use crate::error::{CorpusError, EvalError, IndexError, PipelineError, ScriptError};
use crate::eval::{self, Dataset, EvalOptions, EvalReport};
use crate::gate::{GateRule, DEFAULT_WINDOW};
use crate::http::HttpConfig;
use crate::latency::{self, LatencyConfig, DEFAULT_ENTROPY_CHECK_MS, REFERENCE_RETRIEVAL_MS};
use crate::lm::{HttpModel, LanguageModel, MockModel, DEFAULT_MAX_TOKENS};
use crate::pipeline::{Engine, EngineSettings, IngestConfig, KnowledgeBase, Mode, PipelineAnswer, Query, RetrievalScope};
use crate::report;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_BACKEND: i32 = 3;
pub const EXIT_EVAL: i32 = 4;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn input(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }

    fn backend(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_BACKEND,
            message: message.into(),
        }
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        CliError::input(e.to_string())
    }
}

impl From<ScriptError> for CliError {
    fn from(e: ScriptError) -> Self {
        CliError::input(e.to_string())
    }
}

impl From<IndexError> for CliError {
    fn from(e: IndexError) -> Self {
        match e {
            IndexError::Embed(_) => CliError::backend(e.to_string()),
            other => CliError::input(other.to_string()),
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        if e.is_backend() {
            CliError::backend(e.to_string())
        } else {
            CliError::input(e.to_string())
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        let code = match &e {
            EvalError::Record { .. } => EXIT_EVAL,
            EvalError::Index(IndexError::Embed(_)) => EXIT_BACKEND,
            EvalError::Other(_) => EXIT_EVAL,
            _ => EXIT_INPUT,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "erag", version, about = "Entropy-gated retrieval-augmented generation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Chunk and summarize a corpus and report its shape.
    Index(Options),
    /// Answer one query.
    Ask {
        query: String,
        #[command(flatten)]
        options: Options,
    },
    /// Evaluate one or more modes over a labeled dataset.
    Eval(Options),
    /// Evaluate the gated mode over a list of thresholds.
    Sweep(Options),
    /// Tabulate the latency model.
    Latency(Options),
}

#[derive(Debug, Clone, Default, Args)]
pub struct Options {
    /// Flat `key = value` file providing defaults for any option.
    #[arg(long, env = "ERAG_CONFIG")]
    pub config: Option<PathBuf>,
    /// adaptive | baseline | standard | strong | oracle; comma-separated for eval.
    #[arg(long, env = "ERAG_MODE")]
    pub mode: Option<String>,
    #[arg(long, env = "ERAG_TAU")]
    pub tau: Option<f64>,
    /// Comma-separated thresholds for `sweep`.
    #[arg(long, env = "ERAG_TAUS")]
    pub taus: Option<String>,
    #[arg(long = "n-tokens", env = "ERAG_N_TOKENS")]
    pub n_tokens: Option<usize>,
    #[arg(long, env = "ERAG_K")]
    pub k: Option<usize>,
    #[arg(long = "chunk-tokens", env = "ERAG_CHUNK_TOKENS")]
    pub chunk_tokens: Option<usize>,
    #[arg(long, env = "ERAG_OVERLAP")]
    pub overlap: Option<usize>,
    #[arg(long = "max-tokens", env = "ERAG_MAX_TOKENS")]
    pub max_tokens: Option<usize>,
    /// mock:PATH or http:URL
    #[arg(long, env = "ERAG_MODEL")]
    pub model: Option<String>,
    /// builtin or http:URL
    #[arg(long, env = "ERAG_EMBEDDER")]
    pub embedder: Option<String>,
    #[arg(long = "timeout-ms", env = "ERAG_TIMEOUT_MS")]
    pub timeout_ms: Option<u64>,
    /// mean (default) or halt
    #[arg(long, env = "ERAG_GATE")]
    pub gate: Option<String>,
    /// document (default) or corpus
    #[arg(long, env = "ERAG_SCOPE")]
    pub scope: Option<String>,
    #[arg(long, env = "ERAG_DATASET")]
    pub dataset: Option<PathBuf>,
    #[arg(long, env = "ERAG_CORPUS")]
    pub corpus: Option<PathBuf>,
    /// Document id for `ask`.
    #[arg(long, env = "ERAG_DOC")]
    pub doc: Option<String>,
    /// Output directory for report files.
    #[arg(long, env = "ERAG_OUT")]
    pub out: Option<PathBuf>,
    #[arg(long, env = "ERAG_SEED")]
    pub seed: Option<u64>,
    /// Evaluate a seeded random subset of this many records.
    #[arg(long, env = "ERAG_SAMPLE")]
    pub sample: Option<usize>,
    #[arg(long, env = "ERAG_JOBS")]
    pub jobs: Option<usize>,
    #[arg(long, env = "ERAG_JSON", num_args = 0..=1, default_missing_value = "true")]
    pub json: Option<bool>,
    /// Abort on the first failing record (default true).
    #[arg(long, env = "ERAG_STRICT", num_args = 0..=1, default_missing_value = "true")]
    pub strict: Option<bool>,
    /// Emit the reference 3x3 latency table.
    #[arg(long = "paper-defaults", env = "ERAG_PAPER_DEFAULTS", num_args = 0..=1, default_missing_value = "true")]
    pub paper_defaults: Option<bool>,
    /// Take retrieval rates from a JSON report written by `eval` or `sweep`.
    #[arg(long = "from-report", env = "ERAG_FROM_REPORT")]
    pub from_report: Option<PathBuf>,
    /// Comma-separated retrieval rates, each optionally `label=rate`.
    #[arg(long, env = "ERAG_RATES")]
    pub rates: Option<String>,
    /// Comma-separated retrieval latencies in ms.
    #[arg(long = "t-retrieval", env = "ERAG_T_RETRIEVAL")]
    pub t_retrieval: Option<String>,
    #[arg(long = "t-entropy", env = "ERAG_T_ENTROPY")]
    pub t_entropy: Option<f64>,
}

/// Parses a flat `key = value` file. `#` starts a comment; keys may use
/// dashes or underscores.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::input(format!("config line {}: expected key = value", i + 1)))?;
        let value = value.trim().trim_matches('"');
        out.insert(key.trim().replace('_', "-"), value.to_string());
    }
    Ok(out)
}

fn fill<T: std::str::FromStr>(
    slot: &mut Option<T>,
    file: &mut BTreeMap<String, String>,
    key: &str,
) -> Result<(), CliError>
where
    T::Err: std::fmt::Display,
{
    if let Some(raw) = file.remove(key) {
        if slot.is_none() {
            *slot = Some(
                raw.parse()
                    .map_err(|e| CliError::input(format!("config key {key}: {e}")))?,
            );
        }
    }
    Ok(())
}

impl Options {
    /// Fills unset options from the config file, if one was given.
    pub fn merge_config(mut self) -> Result<Self, CliError> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::input(format!("cannot read config {}: {e}", path.display())))?;
        let mut file = parse_config(&text)?;
        fill(&mut self.mode, &mut file, "mode")?;
        fill(&mut self.tau, &mut file, "tau")?;
        fill(&mut self.taus, &mut file, "taus")?;
        fill(&mut self.n_tokens, &mut file, "n-tokens")?;
        fill(&mut self.k, &mut file, "k")?;
        fill(&mut self.chunk_tokens, &mut file, "chunk-tokens")?;
        fill(&mut self.overlap, &mut file, "overlap")?;
        fill(&mut self.max_tokens, &mut file, "max-tokens")?;
        fill(&mut self.model, &mut file, "model")?;
        fill(&mut self.embedder, &mut file, "embedder")?;
        fill(&mut self.timeout_ms, &mut file, "timeout-ms")?;
        fill(&mut self.gate, &mut file, "gate")?;
        fill(&mut self.scope, &mut file, "scope")?;
        fill(&mut self.dataset, &mut file, "dataset")?;
        fill(&mut self.corpus, &mut file, "corpus")?;
        fill(&mut self.doc, &mut file, "doc")?;
        fill(&mut self.out, &mut file, "out")?;
        fill(&mut self.seed, &mut file, "seed")?;
        fill(&mut self.sample, &mut file, "sample")?;
        fill(&mut self.jobs, &mut file, "jobs")?;
        fill(&mut self.json, &mut file, "json")?;
        fill(&mut self.strict, &mut file, "strict")?;
        fill(&mut self.paper_defaults, &mut file, "paper-defaults")?;
        fill(&mut self.from_report, &mut file, "from-report")?;
        fill(&mut self.rates, &mut file, "rates")?;
        fill(&mut self.t_retrieval, &mut file, "t-retrieval")?;
        fill(&mut self.t_entropy, &mut file, "t-entropy")?;
        if let Some(key) = file.keys().next() {
            return Err(CliError::input(format!("unknown config key {key:?}")));
        }
        // relative paths in the file resolve against the file's directory
        let base = path.parent().unwrap_or(Path::new("")).to_path_buf();
        for p in [&mut self.dataset, &mut self.corpus, &mut self.from_report].into_iter().flatten() {
            if p.is_relative() && !p.exists() {
                *p = base.join(&*p);
            }
        }
        if let Some(model) = &mut self.model {
            if let Some(rest) = model.strip_prefix("mock:") {
                let candidate = base.join(rest);
                if Path::new(rest).is_relative() && !Path::new(rest).exists() && candidate.exists() {
                    *model = format!("mock:{}", candidate.display());
                }
            }
        }
        Ok(self)
    }

    fn json(&self) -> bool {
        self.json.unwrap_or(false)
    }

    fn tau(&self) -> f64 {
        self.tau.unwrap_or(1.0)
    }

    fn n(&self) -> usize {
        self.n_tokens.unwrap_or(DEFAULT_WINDOW)
    }

    fn k(&self) -> usize {
        self.k.unwrap_or(crate::embed::DEFAULT_TOP_K)
    }

    fn ingest(&self) -> Result<IngestConfig, CliError> {
        let chunking = ChunkConfig::new(
            self.chunk_tokens.unwrap_or(corpus::DEFAULT_CHUNK_TOKENS),
            self.overlap.unwrap_or(corpus::DEFAULT_OVERLAP_TOKENS),
        )?;
        Ok(IngestConfig {
            chunking,
            ..IngestConfig::default()
        })
    }

    fn timeout(&self) -> Duration {
        Duration::from_millis(self.timeout_ms.unwrap_or(30_000))
    }

    fn engine_settings(&self) -> Result<EngineSettings, CliError> {
        let gate_rule = match self.gate.as_deref().unwrap_or("mean") {
            "mean" | "mean-first-n" => GateRule::MeanFirstN,
            "halt" | "streaming-halt" => GateRule::StreamingHalt,
            other => return Err(CliError::input(format!("unknown gate rule {other:?}"))),
        };
        let scope = match self.scope.as_deref().unwrap_or("document") {
            "document" => RetrievalScope::Document,
            "corpus" => RetrievalScope::Corpus,
            other => return Err(CliError::input(format!("unknown retrieval scope {other:?}"))),
        };
        let max_tokens = self.max_tokens.unwrap_or(DEFAULT_MAX_TOKENS);
        if max_tokens == 0 {
            return Err(CliError::input("--max-tokens must be at least 1"));
        }
        Ok(EngineSettings {
            max_tokens,
            gate_rule,
            scope,
            ..EngineSettings::default()
        })
    }

    fn parse_mode(&self, name: &str) -> Result<Mode, CliError> {
        let mode = match name.trim() {
            "adaptive" => Mode::Adaptive {
                tau: self.tau(),
                n: self.n(),
                k: self.k(),
            },
            "baseline" => Mode::Baseline,
            "standard" => Mode::StandardRag { k: self.k() },
            "strong" => Mode::StrongRag { k: self.k() },
            "oracle" => Mode::Oracle,
            other => return Err(CliError::input(format!("unknown mode {other:?}"))),
        };
        mode.validate().map_err(|e| CliError::input(e.to_string()))?;
        Ok(mode)
    }

    fn modes(&self) -> Result<Vec<Mode>, CliError> {
        self.mode
            .as_deref()
            .unwrap_or("adaptive")
            .split(',')
            .filter(|m| !m.trim().is_empty())
            .map(|m| self.parse_mode(m))
            .collect()
    }

    fn model(&self) -> Result<Box<dyn LanguageModel>, CliError> {
        let spec = self
            .model
            .as_deref()
            .ok_or_else(|| CliError::input("--model is required (mock:PATH or http:URL)"))?;
        if let Some(path) = spec.strip_prefix("mock:") {
            return Ok(Box::new(MockModel::from_file(path)?));
        }
        if let Some(url) = http_url(spec) {
            let config = HttpConfig::new(url).with_timeout(self.timeout());
            return Ok(Box::new(
                HttpModel::new(config).map_err(|e| CliError::backend(e.to_string()))?,
            ));
        }
        Err(CliError::input(format!("unrecognized --model {spec:?}")))
    }

    fn embedder(&self) -> Result<Box<dyn Embedder>, CliError> {
        let spec = self.embedder.as_deref().unwrap_or("builtin");
        if spec == "builtin" {
            return Ok(Box::new(HashEmbedder::default()));
        }
        if let Some(url) = http_url(spec) {
            let config = HttpConfig::new(url).with_timeout(self.timeout());
            return Ok(Box::new(
                HttpEmbedder::new(config).map_err(|e| CliError::backend(e.to_string()))?,
            ));
        }
        Err(CliError::input(format!("unrecognized --embedder {spec:?}")))
    }

    fn eval_options(&self) -> EvalOptions {
        EvalOptions {
            strict: self.strict.unwrap_or(true),
            jobs: self.jobs.unwrap_or(1),
        }
    }

    fn dataset(&self) -> Result<Dataset, CliError> {
        let path = self
            .dataset
            .as_ref()
            .ok_or_else(|| CliError::input("--dataset is required"))?;
        let dataset = Dataset::load(path)?;
        if dataset.is_empty() {
            return Err(CliError::input(format!("dataset {} has no records", path.display())));
        }
        Ok(match self.sample {
            Some(n) => dataset.sample(n, self.seed.unwrap_or(0)),
            None => dataset,
        })
    }
}

/// `http:URL`, or a bare `http(s)://` URL.
fn http_url(spec: &str) -> Option<String> {
    if spec.starts_with("http://") || spec.starts_with("https://") {
        return Some(spec.to_string());
    }
    spec.strip_prefix("http:").map(str::to_string)
}

fn parse_list(raw: &str, what: &str) -> Result<Vec<f64>, CliError> {
    raw.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| CliError::input(format!("bad {what} value {s:?}: {e}")))
        })
        .collect()
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::input(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, contents)
        .map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))
}

struct Io<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

impl Io<'_> {
    fn print(&mut self, s: &str) {
        let _ = self.out.write_all(s.as_bytes());
        if !s.ends_with('\n') {
            let _ = self.out.write_all(b"\n");
        }
    }

    fn warn(&mut self, s: &str) {
        let _ = writeln!(self.err, "warning: {s}");
    }
}

#[derive(Serialize)]
struct DocManifest {
    id: String,
    tokens: usize,
    chunks: usize,
    summary_tokens: usize,
}

#[derive(Serialize)]
struct Manifest {
    documents: usize,
    chunks: usize,
    chunk_tokens: usize,
    overlap_tokens: usize,
    summary_tokens: usize,
    per_document: Vec<DocManifest>,
}

fn cmd_index(options: &Options, io: &mut Io) -> Result<(), CliError> {
    let path = options
        .corpus
        .as_ref()
        .ok_or_else(|| CliError::input("--corpus is required"))?;
    let corpus = corpus::load_corpus(path)?;
    for w in &corpus.warnings {
        io.warn(&format!("{}: {w}", path.display()));
    }
    let ingest = options.ingest()?;
    let tokenizer = WhitespaceTokenizer;
    let per_document: Vec<DocManifest> = corpus
        .documents
        .iter()
        .map(|d| DocManifest {
            id: d.id.clone(),
            tokens: tokenizer.count(&d.text),
            chunks: corpus::chunk(d, ingest.chunking, &tokenizer).len(),
            summary_tokens: tokenizer.count(&corpus::summarize(d, ingest.sentences_per_paragraph).text),
        })
        .collect();
    let manifest = Manifest {
        documents: per_document.len(),
        chunks: per_document.iter().map(|d| d.chunks).sum(),
        chunk_tokens: ingest.chunking.chunk_tokens,
        overlap_tokens: ingest.chunking.overlap_tokens,
        summary_tokens: per_document.iter().map(|d| d.summary_tokens).sum(),
        per_document,
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    if let Some(dir) = &options.out {
        write_file(dir, "manifest.json", &json)?;
    }
    if options.json() {
        io.print(&json);
    } else {
        io.print(&format!(
            "documents: {}\nchunks: {}\nsummary tokens: {}",
            manifest.documents, manifest.chunks, manifest.summary_tokens
        ));
    }
    Ok(())
}

fn render_answer(answer: &PipelineAnswer) -> String {
    let mut lines = vec![
        format!("answer: {}", answer.answer_text),
        format!("mode: {}", answer.mode),
    ];
    match (&answer.mode, &answer.gate_decision) {
        (Mode::Adaptive { .. }, Some(decision)) => {
            lines.push(format!(
                "retrieval: {}",
                if decision.triggered { "triggered" } else { "skipped" }
            ));
            lines.push(format!(
                "mean entropy: {} nats (threshold {})",
                report::fmt4(decision.mean_entropy),
                report::fmt4(decision.threshold)
            ));
        }
        (Mode::StandardRag { .. } | Mode::StrongRag { .. }, _) => {
            lines.push("retrieval: always".to_string());
        }
        _ => {}
    }
    if answer.retrieval_performed {
        lines.push(format!("retrieved: {}", answer.retrieved_chunks.join(", ")));
    }
    lines.push(format!("passes: {}", answer.passes));
    lines.push(format!("input tokens: {}", answer.input_tokens));
    lines.join("\n")
}

fn cmd_ask(query: &str, options: &Options, io: &mut Io) -> Result<(), CliError> {
    let path = options
        .corpus
        .as_ref()
        .ok_or_else(|| CliError::input("--corpus is required"))?;
    let corpus = corpus::load_corpus(path)?;
    let doc_id = match (&options.doc, corpus.documents.as_slice()) {
        (Some(id), _) => id.clone(),
        (None, [only]) => only.id.clone(),
        (None, []) => return Err(CliError::input(format!("corpus {} is empty", path.display()))),
        (None, _) => return Err(CliError::input("--doc is required for a multi-document corpus")),
    };
    let gold = corpus
        .documents
        .iter()
        .find(|d| d.id == doc_id)
        .map(|d| d.text.clone())
        .ok_or_else(|| CliError::input(format!("unknown document {doc_id:?}")))?;
    let mode = options.parse_mode(options.mode.as_deref().unwrap_or("adaptive"))?;
    let embedder = options.embedder()?;
    let model = options.model()?;
    let kb = KnowledgeBase::build(corpus.documents, options.ingest()?, embedder.as_ref())?;
    let engine = Engine::new(&kb, model.as_ref(), embedder.as_ref(), options.engine_settings()?);
    let answer = engine.answer(&Query::new(query, doc_id).with_gold_context(gold), mode)?;
    if options.json() {
        io.print(&serde_json::to_string_pretty(&answer).expect("answer serializes"));
    } else {
        io.print(&render_answer(&answer));
    }
    Ok(())
}

type Backends = (KnowledgeBase, Box<dyn LanguageModel>, Box<dyn Embedder>);

fn dataset_engine_parts(
    options: &Options,
    dataset: &Dataset,
) -> Result<Backends, CliError> {
    let embedder = options.embedder()?;
    let model = options.model()?;
    let documents: Vec<Document> = dataset.documents();
    let kb = KnowledgeBase::build(documents, options.ingest()?, embedder.as_ref())?;
    Ok((kb, model, embedder))
}

fn cmd_eval(options: &Options, io: &mut Io) -> Result<(), CliError> {
    let dataset = options.dataset()?;
    let modes = options.modes()?;
    if modes.is_empty() {
        return Err(CliError::input("no modes given"));
    }
    let (kb, model, embedder) = dataset_engine_parts(options, &dataset)?;
    let engine = Engine::new(&kb, model.as_ref(), embedder.as_ref(), options.engine_settings()?);
    let reports = modes
        .into_iter()
        .map(|mode| eval::run_eval(&engine, &dataset, mode, options.eval_options()))
        .collect::<Result<Vec<EvalReport>, EvalError>>()?;
    for r in &reports {
        for failure in &r.errors {
            io.warn(&format!("{} record {}: {}", r.label, failure.id, failure.error));
        }
    }
    let csv = report::eval_csv(&reports);
    let json = report::eval_json(&reports);
    if let Some(dir) = &options.out {
        write_file(dir, "eval.json", &json)?;
        write_file(dir, "eval.csv", &csv)?;
    }
    io.print(if options.json() { &json } else { &csv });
    Ok(())
}

fn cmd_sweep(options: &Options, io: &mut Io) -> Result<(), CliError> {
    let dataset = options.dataset()?;
    let taus = parse_list(options.taus.as_deref().unwrap_or("0.5,1.0,1.5"), "tau")?;
    if taus.is_empty() {
        return Err(CliError::input("no thresholds given"));
    }
    if let Some(bad) = taus.iter().find(|t| t.is_nan() || **t < 0.0) {
        return Err(CliError::input(format!("threshold {bad} must be >= 0")));
    }
    let (kb, model, embedder) = dataset_engine_parts(options, &dataset)?;
    let engine = Engine::new(&kb, model.as_ref(), embedder.as_ref(), options.engine_settings()?);
    let n = options.n();
    let k = options.k();
    if n == 0 || k == 0 {
        return Err(CliError::input("--n-tokens and --k must be at least 1"));
    }
    let rows = eval::sweep(&engine, &dataset, &taus, n, k, options.eval_options())?;
    let csv = report::sweep_csv(&rows);
    let json = report::sweep_json(&rows);
    if let Some(dir) = &options.out {
        write_file(dir, "sweep.json", &json)?;
        write_file(dir, "sweep.csv", &csv)?;
    }
    io.print(if options.json() { &json } else { &csv });
    Ok(())
}

/// Retrieval rates from a JSON report written by `eval` or `sweep`, or a
/// single report object.
pub fn configs_from_report(json: &str) -> Result<Vec<LatencyConfig>, CliError> {
    let value: serde_json::Value =
        serde_json::from_str(json).map_err(|e| CliError::input(format!("malformed report: {e}")))?;
    let rate_of = |report: &serde_json::Value| -> Result<f64, CliError> {
        report
            .get("retrieval_rate")
            .and_then(serde_json::Value::as_f64)
            .ok_or_else(|| CliError::input("report entry has no retrieval_rate"))
    };
    let label_of = |report: &serde_json::Value| {
        report
            .get("label")
            .and_then(serde_json::Value::as_str)
            .unwrap_or("report")
            .to_string()
    };
    if let Some(reports) = value.get("reports").and_then(serde_json::Value::as_array) {
        return reports
            .iter()
            .map(|r| Ok(LatencyConfig::new(label_of(r), rate_of(r)?)))
            .collect();
    }
    if let Some(sweep) = value.get("sweep").and_then(serde_json::Value::as_array) {
        return sweep
            .iter()
            .map(|entry| {
                let report = entry
                    .get("report")
                    .ok_or_else(|| CliError::input("sweep entry has no report"))?;
                let label = match entry.get("tau").and_then(serde_json::Value::as_f64) {
                    Some(tau) => format!("tau={tau}"),
                    None => label_of(report),
                };
                Ok(LatencyConfig::new(label, rate_of(report)?))
            })
            .collect();
    }
    Ok(vec![LatencyConfig::new(label_of(&value), rate_of(&value)?)])
}

fn parse_rates(raw: &str) -> Result<Vec<LatencyConfig>, CliError> {
    raw.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|item| {
            let (label, rate) = match item.split_once('=') {
                Some((l, r)) => (l.trim().to_string(), r),
                None => (format!("R={}", item.trim()), item),
            };
            let rate = rate
                .trim()
                .parse::<f64>()
                .map_err(|e| CliError::input(format!("bad retrieval rate {item:?}: {e}")))?;
            Ok(LatencyConfig::new(label, rate))
        })
        .collect()
}

fn cmd_latency(options: &Options, io: &mut Io) -> Result<(), CliError> {
    let paper = options.paper_defaults.unwrap_or(false);
    let mut configs = Vec::new();
    if paper {
        configs.extend(latency::reference_configs());
    }
    if let Some(path) = &options.from_report {
        let json = std::fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
        configs.extend(configs_from_report(&json)?);
    }
    if let Some(raw) = &options.rates {
        configs.extend(parse_rates(raw)?);
    }
    if configs.is_empty() {
        return Err(CliError::input(
            "give --paper-defaults, --from-report or --rates",
        ));
    }
    let t_retrieval = match &options.t_retrieval {
        Some(raw) => parse_list(raw, "t-retrieval")?,
        None => REFERENCE_RETRIEVAL_MS.to_vec(),
    };
    let t_entropy = options.t_entropy.unwrap_or(DEFAULT_ENTROPY_CHECK_MS);
    let table = latency::table(&configs, t_entropy, &t_retrieval)
        .map_err(|e| CliError::input(e.to_string()))?;
    let json = serde_json::to_string_pretty(&table).expect("table serializes");
    if let Some(dir) = &options.out {
        write_file(dir, "latency.json", &json)?;
        write_file(dir, "latency.csv", &table.to_csv())?;
    }
    let text = table.to_text();
    io.print(if options.json() { &json } else { &text });
    Ok(())
}

pub fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let mut io = Io { out, err };
    match cli.command {
        Command::Index(o) => cmd_index(&o.merge_config()?, &mut io),
        Command::Ask { query, options } => cmd_ask(&query, &options.merge_config()?, &mut io),
        Command::Eval(o) => cmd_eval(&o.merge_config()?, &mut io),
        Command::Sweep(o) => cmd_sweep(&o.merge_config()?, &mut io),
        Command::Latency(o) => cmd_latency(&o.merge_config()?, &mut io),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if code == EXIT_OK {
                out.write_all(rendered.as_bytes())
            } else {
                err.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    match execute(cli, out, err) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_parsing() {
        let cfg = parse_config("# experiment\nmode = adaptive\ntau=1.5 # balanced\nn_tokens = 8\n\nmodel = \"mock:x.json\"\n").unwrap();
        assert_eq!(cfg["mode"], "adaptive");
        assert_eq!(cfg["tau"], "1.5");
        assert_eq!(cfg["n-tokens"], "8");
        assert_eq!(cfg["model"], "mock:x.json");
        assert!(parse_config("nonsense").is_err());
    }

    #[test]
    fn report_rates() {
        let c = configs_from_report(r#"{"reports": [{"label": "a", "retrieval_rate": 0.5}]}"#).unwrap();
        assert_eq!(c, vec![LatencyConfig::new("a", 0.5)]);
        let c = configs_from_report(r#"{"sweep": [{"tau": 1.0, "report": {"retrieval_rate": 0.74}}]}"#).unwrap();
        assert_eq!(c, vec![LatencyConfig::new("tau=1", 0.74)]);
        let c = configs_from_report(r#"{"retrieval_rate": 0.2}"#).unwrap();
        assert_eq!(c[0].retrieval_rate, 0.2);
        assert!(configs_from_report("{}").is_err());
    }

    #[test]
    fn rate_lists() {
        let c = parse_rates("low=0.9, 0.5").unwrap();
        assert_eq!(c[0], LatencyConfig::new("low", 0.9));
        assert_eq!(c[1], LatencyConfig::new("R=0.5", 0.5));
        assert!(parse_rates("x=abc").is_err());
    }

    #[test]
    fn url_specs() {
        assert_eq!(http_url("http:http://h:1/x").as_deref(), Some("http://h:1/x"));
        assert_eq!(http_url("http://h:1/x").as_deref(), Some("http://h:1/x"));
        assert_eq!(http_url("mock:x"), None);
    }
}
