//! Evaluation harness: normalized exact match, per-mode runs over a labeled
//! dataset, threshold sweeps and entropy statistics.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use unicode_general_category::{get_general_category, GeneralCategory};

use crate::corpus::Document;
use crate::error::{EvalError, PipelineError};
use crate::pipeline::{AdaptiveRun, Engine, Mode, PipelineAnswer, Query};
use crate::stats::{compare_groups, EntropyStats};

fn is_punctuation(c: char) -> bool {
    matches!(
        get_general_category(c),
        GeneralCategory::ConnectorPunctuation
            | GeneralCategory::DashPunctuation
            | GeneralCategory::OpenPunctuation
            | GeneralCategory::ClosePunctuation
            | GeneralCategory::InitialPunctuation
            | GeneralCategory::FinalPunctuation
            | GeneralCategory::OtherPunctuation
    )
}

/// Lowercase, drop punctuation characters, drop the articles `a`, `an`,
/// `the`, and collapse whitespace.
pub fn normalize_answer(text: &str) -> String {
    let stripped: String = text
        .to_lowercase()
        .chars()
        .filter(|c| !is_punctuation(*c))
        .collect();
    stripped
        .split_whitespace()
        .filter(|w| !matches!(*w, "a" | "an" | "the"))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn exact_match<S: AsRef<str>>(prediction: &str, references: &[S]) -> bool {
    let prediction = normalize_answer(prediction);
    references
        .iter()
        .any(|r| normalize_answer(r.as_ref()) == prediction)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub id: String,
    pub query: String,
    pub gold_context: String,
    pub references: Vec<String>,
    pub doc_id: String,
}

impl EvalRecord {
    pub fn to_query(&self) -> Query {
        Query::new(self.query.clone(), self.doc_id.clone()).with_gold_context(self.gold_context.clone())
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    id: String,
    question: String,
    context: String,
    answers: Vec<String>,
}

/// Labeled questions. Each distinct context becomes one document, identified
/// by the id of the first record that uses it.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Dataset {
    pub records: Vec<EvalRecord>,
}

impl Dataset {
    /// Parses a JSON array of `{id, question, context, answers}`.
    pub fn from_json(json: &str) -> Result<Self, EvalError> {
        let raw: Vec<RawRecord> =
            serde_json::from_str(json).map_err(|e| EvalError::Parse(e.to_string()))?;
        let mut ids = HashSet::new();
        let mut doc_for_context: HashMap<String, String> = HashMap::new();
        let mut records = Vec::with_capacity(raw.len());
        for r in raw {
            let invalid = |message: &str| EvalError::InvalidRecord {
                id: r.id.clone(),
                message: message.to_string(),
            };
            if r.id.is_empty() {
                return Err(EvalError::Parse("record with empty id".into()));
            }
            if !ids.insert(r.id.clone()) {
                return Err(invalid("duplicate record id"));
            }
            if r.question.trim().is_empty() {
                return Err(invalid("empty question"));
            }
            if r.context.trim().is_empty() {
                return Err(invalid("empty context"));
            }
            if r.answers.is_empty() {
                return Err(invalid("no reference answers"));
            }
            let doc_id = doc_for_context
                .entry(r.context.clone())
                .or_insert_with(|| r.id.clone())
                .clone();
            records.push(EvalRecord {
                id: r.id,
                query: r.question,
                gold_context: r.context,
                references: r.answers,
                doc_id,
            });
        }
        Ok(Self { records })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EvalError> {
        let path = path.as_ref();
        let json = std::fs::read_to_string(path).map_err(|source| EvalError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&json)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// One document per distinct context, in first-appearance order.
    pub fn documents(&self) -> Vec<Document> {
        let mut seen = HashSet::new();
        self.records
            .iter()
            .filter(|r| seen.insert(r.doc_id.clone()))
            .map(|r| Document {
                id: r.doc_id.clone(),
                title: None,
                text: r.gold_context.clone(),
            })
            .collect()
    }

    /// A reproducible random subset of `n` records, kept in dataset order.
    pub fn sample(&self, n: usize, seed: u64) -> Dataset {
        if n >= self.records.len() {
            return self.clone();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut picked = rand::seq::index::sample(&mut rng, self.records.len(), n).into_vec();
        picked.sort_unstable();
        Dataset {
            records: picked.into_iter().map(|i| self.records[i].clone()).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalOptions {
    /// Abort on the first failing record. When off, failures are listed in
    /// the report and excluded from every denominator.
    pub strict: bool,
    pub jobs: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self { strict: true, jobs: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryOutcome {
    pub id: String,
    pub correct: bool,
    pub answer: PipelineAnswer,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecordFailure {
    pub id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub mode: Mode,
    pub label: String,
    pub processed: usize,
    pub accuracy: f64,
    pub avg_tokens: f64,
    pub retrieval_rate: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entropy_stats: Option<EntropyStats>,
    pub per_query: Vec<QueryOutcome>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<RecordFailure>,
}

impl EvalReport {
    fn assemble(
        mode: Mode,
        mut per_query: Vec<QueryOutcome>,
        mut errors: Vec<RecordFailure>,
    ) -> Self {
        per_query.sort_by(|a, b| a.id.cmp(&b.id));
        errors.sort_by(|a, b| a.id.cmp(&b.id));
        let processed = per_query.len();
        let frac = |count: usize| {
            if processed == 0 {
                0.0
            } else {
                count as f64 / processed as f64
            }
        };
        let accuracy = frac(per_query.iter().filter(|q| q.correct).count());
        let retrieval_rate = frac(per_query.iter().filter(|q| q.answer.retrieval_performed).count());
        let avg_tokens = if processed == 0 {
            0.0
        } else {
            per_query.iter().map(|q| q.answer.input_tokens as f64).sum::<f64>() / processed as f64
        };
        let entropy_stats = entropy_stats(&per_query).ok();
        Self {
            label: mode.to_string(),
            mode,
            processed,
            accuracy,
            avg_tokens,
            retrieval_rate,
            entropy_stats,
            per_query,
            errors,
        }
    }
}

/// Welch comparison of first-pass mean entropy between correctly and
/// incorrectly answered queries. Queries without a finite trace are skipped.
pub fn entropy_stats(outcomes: &[QueryOutcome]) -> Result<EntropyStats, EvalError> {
    let mut correct = Vec::new();
    let mut incorrect = Vec::new();
    for outcome in outcomes {
        let Some(trace) = &outcome.answer.entropy_trace else {
            continue;
        };
        if !trace.mean_first_n.is_finite() {
            continue;
        }
        if outcome.correct {
            correct.push(trace.mean_first_n);
        } else {
            incorrect.push(trace.mean_first_n);
        }
    }
    compare_groups(&correct, &incorrect)
}

fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool, EvalError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| EvalError::Other(format!("cannot start worker pool: {e}")))
}

/// Successful results keyed by record position, plus recorded failures.
type Evaluated<T> = (Vec<(usize, T)>, Vec<RecordFailure>);

/// Runs `f` over every record on `jobs` threads. Strict runs stop handing
/// out work after a failure and report that record; with one job it is the
/// first failing record in dataset order.
fn evaluate<T, F>(
    records: &[EvalRecord],
    options: EvalOptions,
    f: F,
) -> Result<Evaluated<T>, EvalError>
where
    T: Send,
    F: Fn(&EvalRecord) -> Result<T, PipelineError> + Sync,
{
    let pool = thread_pool(options.jobs)?;
    if options.strict {
        let ok = pool
            .install(|| {
                records
                    .par_iter()
                    .enumerate()
                    .map(|(i, r)| f(r).map(|v| (i, v)).map_err(|e| (i, e)))
                    .collect::<Result<Vec<_>, _>>()
            })
            .map_err(|(i, source)| EvalError::Record {
                id: records[i].id.clone(),
                source,
            })?;
        return Ok((ok, Vec::new()));
    }
    let results: Vec<Result<T, PipelineError>> = pool.install(|| records.par_iter().map(&f).collect());
    let mut ok = Vec::new();
    let mut failures = Vec::new();
    for (i, result) in results.into_iter().enumerate() {
        match result {
            Ok(value) => ok.push((i, value)),
            Err(e) => failures.push(RecordFailure {
                id: records[i].id.clone(),
                error: e.to_string(),
            }),
        }
    }
    Ok((ok, failures))
}

fn outcome(record: &EvalRecord, answer: PipelineAnswer) -> QueryOutcome {
    QueryOutcome {
        id: record.id.clone(),
        correct: exact_match(&answer.answer_text, &record.references),
        answer,
    }
}

pub fn run_eval(
    engine: &Engine<'_>,
    dataset: &Dataset,
    mode: Mode,
    options: EvalOptions,
) -> Result<EvalReport, EvalError> {
    if dataset.is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    mode.validate()
        .map_err(|e| EvalError::Other(e.to_string()))?;
    let records = &dataset.records;
    let (ok, failures) = evaluate(records, options, |r| engine.answer(&r.to_query(), mode))?;
    let per_query = ok
        .into_iter()
        .map(|(i, answer)| outcome(&records[i], answer))
        .collect();
    Ok(EvalReport::assemble(mode, per_query, failures))
}

/// One gated-mode report per threshold. Each record's first pass, and its
/// second pass once any threshold needs it, is generated once and reused
/// across thresholds.
pub fn sweep(
    engine: &Engine<'_>,
    dataset: &Dataset,
    taus: &[f64],
    n: usize,
    k: usize,
    options: EvalOptions,
) -> Result<Vec<(f64, EvalReport)>, EvalError> {
    if taus.is_empty() {
        return Err(EvalError::NoThresholds);
    }
    if dataset.is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    for &tau in taus {
        Mode::Adaptive { tau, n, k }
            .validate()
            .map_err(|e| EvalError::Other(e.to_string()))?;
    }
    let records = &dataset.records;
    let (ok, failures) = evaluate(records, options, |r| {
        let run = AdaptiveRun::start(engine, &r.to_query(), n, k)?;
        taus.iter().map(|&tau| run.answer_at(tau)).collect::<Result<Vec<_>, _>>()
    })?;
    let mut per_tau: Vec<Vec<QueryOutcome>> = vec![Vec::with_capacity(ok.len()); taus.len()];
    for (i, answers) in ok {
        for (slot, answer) in per_tau.iter_mut().zip(answers) {
            slot.push(outcome(&records[i], answer));
        }
    }
    Ok(taus
        .iter()
        .zip(per_tau)
        .map(|(&tau, outcomes)| {
            (
                tau,
                EvalReport::assemble(Mode::Adaptive { tau, n, k }, outcomes, failures.clone()),
            )
        })
        .collect())
}
