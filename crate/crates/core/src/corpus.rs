//! Document ingestion and the two-tier representation used for answering:
//! a short extractive summary that is always in context, and an ordered list
//! of overlapping chunks that is embedded and searched on demand.

use std::collections::HashSet;
use std::io::BufRead;
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::CorpusError;

pub const DEFAULT_CHUNK_TOKENS: usize = 100;
pub const DEFAULT_OVERLAP_TOKENS: usize = 20;
pub const DEFAULT_SENTENCES_PER_PARAGRAPH: usize = 2;

/// Lowercased tokens that end in a period but do not end a sentence.
const ABBREVIATIONS: &[&str] = &[
    "e.g.", "i.e.", "dr.", "mr.", "mrs.", "ms.", "prof.", "st.", "vs.", "jr.", "sr.", "inc.",
    "ltd.", "co.", "corp.", "no.", "fig.", "approx.", "u.s.", "u.k.", "a.m.", "p.m.",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    pub text: String,
}

impl Document {
    pub fn new(
        id: impl Into<String>,
        title: Option<String>,
        text: impl Into<String>,
    ) -> Result<Self, CorpusError> {
        let doc = Self {
            id: id.into(),
            title,
            text: text.into(),
        };
        doc.validate()?;
        Ok(doc)
    }

    fn validate(&self) -> Result<(), CorpusError> {
        if self.id.is_empty() {
            return Err(CorpusError::Invalid("document id is empty".into()));
        }
        if self.text.trim().is_empty() {
            return Err(CorpusError::Invalid(format!(
                "document {:?} has empty text",
                self.id
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryContext {
    pub doc_id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub doc_id: String,
    pub index: usize,
    pub text: String,
    /// Half-open `[start, end)` range over the document's token sequence.
    pub token_span: (usize, usize),
}

impl Chunk {
    /// Identifier unique across a corpus: `{doc_id}#{index}`.
    pub fn id(&self) -> String {
        format!("{}#{}", self.doc_id, self.index)
    }
}

/// Splits text into tokens, reported as byte ranges into the input.
pub trait Tokenizer: Send + Sync {
    fn token_spans(&self, text: &str) -> Vec<Range<usize>>;

    fn count(&self, text: &str) -> usize {
        self.token_spans(text).len()
    }
}

/// Whitespace-delimited word tokens.
#[derive(Debug, Clone, Copy, Default)]
pub struct WhitespaceTokenizer;

impl Tokenizer for WhitespaceTokenizer {
    fn token_spans(&self, text: &str) -> Vec<Range<usize>> {
        let mut spans = Vec::new();
        let mut start = None;
        for (i, c) in text.char_indices() {
            match (c.is_whitespace(), start) {
                (true, Some(s)) => {
                    spans.push(s..i);
                    start = None;
                }
                (false, None) => start = Some(i),
                _ => {}
            }
        }
        if let Some(s) = start {
            spans.push(s..text.len());
        }
        spans
    }

    fn count(&self, text: &str) -> usize {
        text.split_whitespace().count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkConfig {
    pub chunk_tokens: usize,
    pub overlap_tokens: usize,
}

impl Default for ChunkConfig {
    fn default() -> Self {
        Self {
            chunk_tokens: DEFAULT_CHUNK_TOKENS,
            overlap_tokens: DEFAULT_OVERLAP_TOKENS,
        }
    }
}

impl ChunkConfig {
    pub fn new(chunk_tokens: usize, overlap_tokens: usize) -> Result<Self, CorpusError> {
        if chunk_tokens == 0 || overlap_tokens >= chunk_tokens {
            return Err(CorpusError::Invalid(format!(
                "chunk configuration requires 0 <= overlap < size, got size={chunk_tokens} overlap={overlap_tokens}"
            )));
        }
        Ok(Self {
            chunk_tokens,
            overlap_tokens,
        })
    }

    pub fn stride(&self) -> usize {
        self.chunk_tokens - self.overlap_tokens
    }
}

/// Token-index windows `[start, end)` for a sequence of `token_count` tokens.
///
/// The last window ends at `token_count` and may be shorter than the others.
pub fn window_spans(token_count: usize, config: ChunkConfig) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut start = 0;
    while start < token_count {
        let end = (start + config.chunk_tokens).min(token_count);
        spans.push((start, end));
        if end == token_count {
            break;
        }
        start += config.stride();
    }
    spans
}

pub fn chunk(doc: &Document, config: ChunkConfig, tokenizer: &dyn Tokenizer) -> Vec<Chunk> {
    let tokens = tokenizer.token_spans(&doc.text);
    window_spans(tokens.len(), config)
        .into_iter()
        .enumerate()
        .map(|(index, (start, end))| Chunk {
            doc_id: doc.id.clone(),
            index,
            text: doc.text[tokens[start].start..tokens[end - 1].end].to_string(),
            token_span: (start, end),
        })
        .collect()
}

/// Paragraphs are separated by one or more blank lines.
pub fn split_paragraphs(text: &str) -> Vec<String> {
    let mut paragraphs = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            if !current.is_empty() {
                paragraphs.push(current.join("\n"));
                current.clear();
            }
        } else {
            current.push(line);
        }
    }
    if !current.is_empty() {
        paragraphs.push(current.join("\n"));
    }
    paragraphs
}

fn is_closing(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '}' | '\u{201d}' | '\u{2019}' | '\u{bb}')
}

fn ends_with_abbreviation(word: &str) -> bool {
    let lower = word
        .trim_start_matches(|c: char| !c.is_alphanumeric())
        .to_lowercase();
    if ABBREVIATIONS.contains(&lower.as_str()) {
        return true;
    }
    // single-letter initials such as "J."
    let mut chars = lower.chars();
    matches!((chars.next(), chars.next(), chars.next()), (Some(c), Some('.'), None) if c.is_alphabetic())
}

/// Sentences end at `.`, `!` or `?` (plus trailing closing quotes/brackets)
/// followed by whitespace or end of text. Whitespace inside a sentence is
/// collapsed to single spaces.
pub fn split_sentences(paragraph: &str) -> Vec<String> {
    let words: Vec<&str> = paragraph.split_whitespace().collect();
    let mut sentences = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    for word in words {
        current.push(word);
        let core = word.trim_end_matches(is_closing);
        let terminal = core.ends_with(['.', '!', '?']);
        if terminal && !(core.ends_with('.') && ends_with_abbreviation(core)) {
            sentences.push(current.join(" "));
            current.clear();
        }
    }
    if !current.is_empty() {
        sentences.push(current.join(" "));
    }
    sentences
}

/// Extractive summary: the first `sentences_per_paragraph` sentences of each
/// paragraph, joined by single spaces.
pub fn summarize(doc: &Document, sentences_per_paragraph: usize) -> SummaryContext {
    let text = split_paragraphs(&doc.text)
        .iter()
        .flat_map(|p| {
            split_sentences(p)
                .into_iter()
                .take(sentences_per_paragraph)
        })
        .collect::<Vec<_>>()
        .join(" ");
    SummaryContext {
        doc_id: doc.id.clone(),
        text,
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CorpusRecord {
    id: String,
    #[serde(default)]
    title: Option<String>,
    text: String,
}

/// Documents read from a corpus file, plus any non-fatal warnings.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub documents: Vec<Document>,
    pub warnings: Vec<String>,
}

/// Reads newline-delimited JSON records `{id, title?, text}`. Blank lines are
/// skipped.
pub fn read_corpus(reader: impl BufRead) -> Result<Corpus, CorpusError> {
    let mut corpus = Corpus::default();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|source| CorpusError::Io {
            path: format!("line {line_no}"),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: CorpusRecord =
            serde_json::from_str(&line).map_err(|e| CorpusError::Parse {
                line: line_no,
                message: e.to_string(),
            })?;
        let doc = Document::new(record.id, record.title, record.text).map_err(|e| {
            CorpusError::Parse {
                line: line_no,
                message: e.to_string(),
            }
        })?;
        if !seen.insert(doc.id.clone()) {
            return Err(CorpusError::DuplicateId {
                id: doc.id,
                line: line_no,
            });
        }
        corpus.documents.push(doc);
    }
    if corpus.documents.is_empty() {
        let warning = "corpus contains no documents".to_string();
        log::warn!("{warning}");
        corpus.warnings.push(warning);
    }
    Ok(corpus)
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus, CorpusError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_corpus(std::io::BufReader::new(file))
}
