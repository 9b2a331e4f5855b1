//! Query answering in every supported mode, including the entropy-gated
//! two-pass flow: answer from the summary first, and only when the first
//! pass is uncertain, retrieve chunks and regenerate from scratch with the
//! summary plus the retrieved details.

use std::cell::OnceCell;
use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::{self, Chunk, ChunkConfig, Document, SummaryContext, Tokenizer, WhitespaceTokenizer};
use crate::embed::{Embedder, EmbeddingVector, VectorIndex};
use crate::error::{IndexError, PipelineError};
use crate::gate::{self, EntropyTrace, GateDecision, GateRule};
use crate::lm::{generated_text, GenerationRequest, LanguageModel, TokenStep, DEFAULT_MAX_TOKENS};

pub const INSTRUCTION: &str = "Based on the context above, answer the following question.";

pub fn build_prompt_first_pass(summary: &str, query: &str) -> String {
    if summary.is_empty() {
        log::warn!("building a prompt with an empty context");
    }
    format!("Context: {summary}\n{INSTRUCTION}\nQuestion: {query}\nAnswer:")
}

/// Chunks are deduplicated by id (first occurrence wins) and joined by blank
/// lines in the order given.
pub fn build_prompt_expanded(summary: &str, chunks: &[&Chunk], query: &str) -> String {
    let details = join_chunks(chunks);
    format!("Context: {summary}\nAdditional Details: {details}\n{INSTRUCTION}\nQuestion: {query}\nAnswer:")
}

/// Retrieved chunks only, no summary.
pub fn build_prompt_chunks_only(chunks: &[&Chunk], query: &str) -> String {
    build_prompt_first_pass(&join_chunks(chunks), query)
}

pub fn build_prompt_no_context(query: &str) -> String {
    format!("Question: {query}\nAnswer:")
}

fn join_chunks(chunks: &[&Chunk]) -> String {
    let mut seen = HashSet::new();
    chunks
        .iter()
        .filter(|c| seen.insert(c.id()))
        .map(|c| c.text.as_str())
        .collect::<Vec<_>>()
        .join("\n\n")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Mode {
    /// Entropy-gated two-pass answering.
    Adaptive { tau: f64, n: usize, k: usize },
    /// No context at all.
    Baseline,
    /// Always retrieve; chunks only.
    StandardRag { k: usize },
    /// Always retrieve; summary plus chunks.
    StrongRag { k: usize },
    /// The gold paragraph as context.
    Oracle,
}

impl Mode {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: &str| Err(PipelineError::InvalidMode(m.to_string()));
        match *self {
            Mode::Adaptive { tau, n, k } => {
                if tau.is_nan() || tau < 0.0 {
                    return bad("tau must be >= 0");
                }
                if n == 0 {
                    return bad("n must be >= 1");
                }
                if k == 0 {
                    return bad("k must be >= 1");
                }
            }
            Mode::StandardRag { k } | Mode::StrongRag { k } if k == 0 => return bad("k must be >= 1"),
            _ => {}
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self {
            Mode::Adaptive { .. } => "adaptive",
            Mode::Baseline => "baseline",
            Mode::StandardRag { .. } => "standard",
            Mode::StrongRag { .. } => "strong",
            Mode::Oracle => "oracle",
        }
    }

    pub fn tau(&self) -> Option<f64> {
        match self {
            Mode::Adaptive { tau, .. } => Some(*tau),
            _ => None,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Adaptive { tau, n, k } => write!(f, "adaptive(tau={tau} n={n} k={k})"),
            Mode::StandardRag { k } => write!(f, "standard(k={k})"),
            Mode::StrongRag { k } => write!(f, "strong(k={k})"),
            other => f.write_str(other.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineAnswer {
    pub answer_text: String,
    pub mode: Mode,
    pub retrieval_performed: bool,
    pub passes: u8,
    pub retrieved_chunks: Vec<String>,
    pub input_tokens: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entropy_trace: Option<EntropyTrace>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gate_decision: Option<GateDecision>,
}

/// Final answer: generated text up to the first newline or stop sequence,
/// trimmed.
pub fn extract_answer(steps: &[TokenStep], stop_sequences: &[String]) -> String {
    let text = generated_text(steps);
    let cut = stop_sequences
        .iter()
        .filter(|s| !s.is_empty())
        .map(String::as_str)
        .chain(std::iter::once("\n"))
        .filter_map(|s| text.find(s))
        .min()
        .unwrap_or(text.len());
    text[..cut].trim().to_string()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RetrievalScope {
    /// Search only the chunks of the query's own document.
    #[default]
    Document,
    /// Search the chunks of every document.
    Corpus,
}

#[derive(Debug, Clone)]
struct DocEntry {
    document: Document,
    summary: SummaryContext,
    chunks: Vec<Chunk>,
    index: VectorIndex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IngestConfig {
    pub chunking: ChunkConfig,
    pub sentences_per_paragraph: usize,
}

impl Default for IngestConfig {
    fn default() -> Self {
        Self {
            chunking: ChunkConfig::default(),
            sentences_per_paragraph: corpus::DEFAULT_SENTENCES_PER_PARAGRAPH,
        }
    }
}

/// Summaries, chunks and per-document indices for a set of documents, plus
/// one corpus-wide index over every chunk. Read-only after construction.
pub struct KnowledgeBase {
    docs: Vec<DocEntry>,
    by_id: HashMap<String, usize>,
    global: Option<VectorIndex>,
    global_refs: Vec<(usize, usize)>,
    tokenizer: Box<dyn Tokenizer>,
}

impl KnowledgeBase {
    pub fn build(
        documents: Vec<Document>,
        config: IngestConfig,
        embedder: &dyn Embedder,
    ) -> Result<Self, IndexError> {
        Self::build_with_tokenizer(documents, config, embedder, Box::new(WhitespaceTokenizer))
    }

    pub fn build_with_tokenizer(
        documents: Vec<Document>,
        config: IngestConfig,
        embedder: &dyn Embedder,
        tokenizer: Box<dyn Tokenizer>,
    ) -> Result<Self, IndexError> {
        let mut docs = Vec::with_capacity(documents.len());
        let mut by_id = HashMap::new();
        for document in documents {
            let summary = corpus::summarize(&document, config.sentences_per_paragraph);
            let chunks = corpus::chunk(&document, config.chunking, tokenizer.as_ref());
            let index = VectorIndex::build(&chunks, embedder)?;
            if by_id.insert(document.id.clone(), docs.len()).is_some() {
                return Err(IndexError::DuplicateId(document.id));
            }
            docs.push(DocEntry {
                document,
                summary,
                chunks,
                index,
            });
        }
        let mut entries: Vec<(String, EmbeddingVector)> = Vec::new();
        let mut global_refs = Vec::new();
        for (d, entry) in docs.iter().enumerate() {
            for (c, chunk) in entry.chunks.iter().enumerate() {
                entries.push((chunk.id(), entry.index.vector(c).clone()));
                global_refs.push((d, c));
            }
        }
        let global = if entries.is_empty() {
            None
        } else {
            Some(VectorIndex::from_entries(entries)?)
        };
        Ok(Self {
            docs,
            by_id,
            global,
            global_refs,
            tokenizer,
        })
    }

    fn entry(&self, doc_id: &str) -> Result<&DocEntry, PipelineError> {
        self.by_id
            .get(doc_id)
            .map(|i| &self.docs[*i])
            .ok_or_else(|| PipelineError::UnknownDocument(doc_id.to_string()))
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn document_ids(&self) -> impl Iterator<Item = &str> {
        self.docs.iter().map(|d| d.document.id.as_str())
    }

    pub fn document(&self, doc_id: &str) -> Option<&Document> {
        self.entry(doc_id).ok().map(|e| &e.document)
    }

    pub fn summary(&self, doc_id: &str) -> Option<&SummaryContext> {
        self.entry(doc_id).ok().map(|e| &e.summary)
    }

    pub fn chunks(&self, doc_id: &str) -> Option<&[Chunk]> {
        self.entry(doc_id).ok().map(|e| e.chunks.as_slice())
    }

    pub fn index(&self, doc_id: &str) -> Option<&VectorIndex> {
        self.entry(doc_id).ok().map(|e| &e.index)
    }

    pub fn tokenizer(&self) -> &dyn Tokenizer {
        self.tokenizer.as_ref()
    }

    pub fn total_chunks(&self) -> usize {
        self.global_refs.len()
    }

    fn retrieve(
        &self,
        doc_id: &str,
        query: &EmbeddingVector,
        k: usize,
        scope: RetrievalScope,
    ) -> Result<Vec<&Chunk>, PipelineError> {
        match scope {
            RetrievalScope::Document => {
                let entry = self.entry(doc_id)?;
                Ok(entry
                    .index
                    .search(query, k)?
                    .into_iter()
                    .map(|hit| &entry.chunks[hit.position])
                    .collect())
            }
            RetrievalScope::Corpus => {
                let global = self.global.as_ref().ok_or(IndexError::Empty)?;
                Ok(global
                    .search(query, k)?
                    .into_iter()
                    .map(|hit| {
                        let (d, c) = self.global_refs[hit.position];
                        &self.docs[d].chunks[c]
                    })
                    .collect())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub text: String,
    pub doc_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_context: Option<String>,
}

impl Query {
    pub fn new(text: impl Into<String>, doc_id: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            doc_id: doc_id.into(),
            gold_context: None,
        }
    }

    pub fn with_gold_context(mut self, context: impl Into<String>) -> Self {
        self.gold_context = Some(context.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineSettings {
    pub max_tokens: usize,
    pub gate_rule: GateRule,
    pub scope: RetrievalScope,
    pub stop_sequences: Vec<String>,
}

impl Default for EngineSettings {
    fn default() -> Self {
        Self {
            max_tokens: DEFAULT_MAX_TOKENS,
            gate_rule: GateRule::MeanFirstN,
            scope: RetrievalScope::Document,
            stop_sequences: vec!["\n".to_string()],
        }
    }
}

pub struct Engine<'a> {
    kb: &'a KnowledgeBase,
    model: &'a dyn LanguageModel,
    embedder: &'a dyn Embedder,
    settings: EngineSettings,
}

impl<'a> Engine<'a> {
    pub fn new(
        kb: &'a KnowledgeBase,
        model: &'a dyn LanguageModel,
        embedder: &'a dyn Embedder,
        settings: EngineSettings,
    ) -> Self {
        Self {
            kb,
            model,
            embedder,
            settings,
        }
    }

    pub fn knowledge(&self) -> &KnowledgeBase {
        self.kb
    }

    pub fn settings(&self) -> &EngineSettings {
        &self.settings
    }

    fn generate(&self, prompt: &str, max_tokens: usize) -> Result<Vec<TokenStep>, PipelineError> {
        let request = GenerationRequest {
            prompt: prompt.to_string(),
            max_tokens,
            stop_sequences: self.settings.stop_sequences.clone(),
        };
        Ok(self.model.generate(&request)?)
    }

    fn retrieve(&self, query: &Query, k: usize) -> Result<Vec<&'a Chunk>, PipelineError> {
        let qvec = self.embedder.embed(&query.text)?;
        self.kb.retrieve(&query.doc_id, &qvec, k, self.settings.scope)
    }

    fn single_pass(
        &self,
        mode: Mode,
        prompt: String,
        retrieved: &[&Chunk],
    ) -> Result<PipelineAnswer, PipelineError> {
        let steps = self.generate(&prompt, self.settings.max_tokens)?;
        Ok(PipelineAnswer {
            answer_text: extract_answer(&steps, &self.settings.stop_sequences),
            mode,
            retrieval_performed: !retrieved.is_empty(),
            passes: 1,
            retrieved_chunks: retrieved.iter().map(|c| c.id()).collect(),
            input_tokens: self.kb.tokenizer().count(&prompt),
            entropy_trace: None,
            gate_decision: None,
        })
    }

    pub fn answer(&self, query: &Query, mode: Mode) -> Result<PipelineAnswer, PipelineError> {
        mode.validate()?;
        if query.text.trim().is_empty() {
            return Err(PipelineError::EmptyQuery);
        }
        match mode {
            Mode::Adaptive { tau, n, k } => AdaptiveRun::start(self, query, n, k)?.answer_at(tau),
            Mode::Baseline => self.single_pass(mode, build_prompt_no_context(&query.text), &[]),
            Mode::StandardRag { k } => {
                self.kb.entry(&query.doc_id)?;
                let chunks = self.retrieve(query, k)?;
                self.single_pass(mode, build_prompt_chunks_only(&chunks, &query.text), &chunks)
            }
            Mode::StrongRag { k } => {
                let summary = &self.kb.entry(&query.doc_id)?.summary.text;
                let chunks = self.retrieve(query, k)?;
                self.single_pass(
                    mode,
                    build_prompt_expanded(summary, &chunks, &query.text),
                    &chunks,
                )
            }
            Mode::Oracle => {
                let gold = query
                    .gold_context
                    .as_deref()
                    .ok_or(PipelineError::MissingGoldContext)?;
                self.single_pass(mode, build_prompt_first_pass(gold, &query.text), &[])
            }
        }
    }
}

struct SecondPass {
    prompt: String,
    steps: Vec<TokenStep>,
    chunk_ids: Vec<String>,
}

/// One query's gated flow with the first pass (and, once needed, the second
/// pass) computed once. Neither prompt depends on the threshold, so the same
/// run can be resolved at many thresholds.
pub struct AdaptiveRun<'e, 'a> {
    engine: &'e Engine<'a>,
    query: Query,
    summary: &'a str,
    n: usize,
    k: usize,
    first_prompt: String,
    first_steps: Vec<TokenStep>,
    first_entropies: Vec<f64>,
    second: OnceCell<SecondPass>,
}

impl<'e, 'a> AdaptiveRun<'e, 'a> {
    pub fn start(engine: &'e Engine<'a>, query: &Query, n: usize, k: usize) -> Result<Self, PipelineError> {
        Mode::Adaptive { tau: 0.0, n, k }.validate()?;
        let summary = engine.kb.entry(&query.doc_id)?.summary.text.as_str();
        let first_prompt = build_prompt_first_pass(summary, &query.text);
        let cap = match engine.settings.gate_rule {
            GateRule::MeanFirstN => n.max(engine.settings.max_tokens),
            GateRule::StreamingHalt => engine.settings.max_tokens,
        };
        let first_steps = engine.generate(&first_prompt, cap)?;
        let first_entropies = gate::step_entropies(&first_steps)?;
        Ok(Self {
            engine,
            query: query.clone(),
            summary,
            n,
            k,
            first_prompt,
            first_steps,
            first_entropies,
            second: OnceCell::new(),
        })
    }

    fn second_pass(&self) -> Result<&SecondPass, PipelineError> {
        if let Some(second) = self.second.get() {
            return Ok(second);
        }
        let chunks = self.engine.retrieve(&self.query, self.k)?;
        let prompt = build_prompt_expanded(self.summary, &chunks, &self.query.text);
        let steps = self.engine.generate(&prompt, self.engine.settings.max_tokens)?;
        let pass = SecondPass {
            prompt,
            steps,
            chunk_ids: chunks.iter().map(|c| c.id()).collect(),
        };
        Ok(self.second.get_or_init(|| pass))
    }

    pub fn answer_at(&self, tau: f64) -> Result<PipelineAnswer, PipelineError> {
        let mode = Mode::Adaptive {
            tau,
            n: self.n,
            k: self.k,
        };
        mode.validate()?;
        let (trace, decision, kept) = match self.engine.settings.gate_rule {
            GateRule::MeanFirstN => {
                let trace = EntropyTrace::from_entropies(self.first_entropies.clone(), self.n)?;
                let decision = gate::decide(&trace, tau);
                (trace, decision, self.first_steps.len())
            }
            GateRule::StreamingHalt => {
                let full = EntropyTrace::from_entropies(self.first_entropies.clone(), self.n)?;
                let decision = gate::decide_streaming(&full, tau);
                let kept = decision.halted_at.map_or(self.first_steps.len(), |i| i + 1);
                let trace = EntropyTrace::from_entropies(self.first_entropies[..kept].to_vec(), self.n)?;
                let decision = GateDecision {
                    mean_entropy: trace.mean_first_n,
                    ..decision
                };
                (trace, decision, kept)
            }
        };
        let stops = &self.engine.settings.stop_sequences;
        let tokenizer = self.engine.kb.tokenizer();
        let answer = if decision.triggered {
            let second = self.second_pass()?;
            PipelineAnswer {
                answer_text: extract_answer(&second.steps, stops),
                mode,
                retrieval_performed: true,
                passes: 2,
                retrieved_chunks: second.chunk_ids.clone(),
                input_tokens: tokenizer.count(&second.prompt),
                entropy_trace: Some(trace),
                gate_decision: Some(decision),
            }
        } else {
            PipelineAnswer {
                answer_text: extract_answer(&self.first_steps[..kept], stops),
                mode,
                retrieval_performed: false,
                passes: 1,
                retrieved_chunks: Vec::new(),
                input_tokens: tokenizer.count(&self.first_prompt),
                entropy_trace: Some(trace),
                gate_decision: Some(decision),
            }
        };
        Ok(answer)
    }
}
