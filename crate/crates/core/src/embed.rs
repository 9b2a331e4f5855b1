//! Text embedding and exact top-k inner-product search.
//!
//! Every vector stored or queried here is L2-normalized, so the inner
//! product of two vectors is their cosine similarity.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::corpus::Chunk;
use crate::error::{EmbedError, IndexError};
use crate::http::{HttpConfig, JsonClient};

pub const DEFAULT_TOP_K: usize = 3;
pub const HASH_EMBEDDER_DIMENSION: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    /// Normalizes `raw` to unit length. Fails on empty, non-finite or zero
    /// input.
    pub fn normalized(raw: Vec<f64>) -> Result<Self, EmbedError> {
        if raw.is_empty() {
            return Err(EmbedError::Protocol("embedding has no components".into()));
        }
        if raw.iter().any(|x| !x.is_finite()) {
            return Err(EmbedError::Protocol("embedding has non-finite components".into()));
        }
        let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(EmbedError::Protocol("embedding has zero norm".into()));
        }
        Ok(Self(raw.into_iter().map(|x| x / norm).collect()))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn dot(&self, other: &EmbeddingVector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }
}

/// Maps text into a shared vector space. Implementations must be
/// deterministic and safe to share between threads.
pub trait Embedder: Send + Sync {
    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbedError>;

    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        let mut out = self.embed_batch(&[text])?;
        out.pop()
            .ok_or_else(|| EmbedError::Protocol("embedder returned no vector".into()))
    }

    /// Known output dimension, if fixed ahead of the first call.
    fn dimension(&self) -> Option<usize>;
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        hash ^= u64::from(*b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Signed feature hashing of lowercased alphanumeric words into a
/// fixed-width vector. No model weights; similarity is purely lexical.
#[derive(Debug, Clone)]
pub struct HashEmbedder {
    dimension: usize,
}

impl Default for HashEmbedder {
    fn default() -> Self {
        Self {
            dimension: HASH_EMBEDDER_DIMENSION,
        }
    }
}

impl HashEmbedder {
    pub fn with_dimension(dimension: usize) -> Self {
        assert!(dimension > 0, "embedding dimension must be positive");
        Self { dimension }
    }

    fn add_feature(&self, raw: &mut [f64], feature: &str) {
        let h = fnv1a(feature.as_bytes());
        let bucket = (h % self.dimension as u64) as usize;
        raw[bucket] += if h >> 63 == 1 { -1.0 } else { 1.0 };
    }

    fn embed_one(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        if text.trim().is_empty() {
            return Err(EmbedError::EmptyText);
        }
        let mut raw = vec![0.0; self.dimension];
        for word in text
            .split(|c: char| !c.is_alphanumeric())
            .filter(|w| !w.is_empty())
        {
            self.add_feature(&mut raw, &word.to_lowercase());
        }
        if raw.iter().all(|x| *x == 0.0) {
            // punctuation-only text, or features that cancelled out
            raw[(fnv1a(text.trim().as_bytes()) % self.dimension as u64) as usize] = 1.0;
        }
        EmbeddingVector::normalized(raw)
    }
}

impl Embedder for HashEmbedder {
    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        texts.iter().map(|t| self.embed_one(t)).collect()
    }

    fn dimension(&self) -> Option<usize> {
        Some(self.dimension)
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [&'a str],
}

#[derive(Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vec<f64>>,
}

/// Client for an external embedding service speaking
/// `POST {"texts": [...]}` → `{"vectors": [[...], ...]}`.
///
/// The dimension is taken from the first successful response and every later
/// response must match it.
pub struct HttpEmbedder {
    client: JsonClient,
    dimension: OnceLock<usize>,
}

impl HttpEmbedder {
    pub fn new(config: HttpConfig) -> Result<Self, EmbedError> {
        Ok(Self {
            client: JsonClient::new(config)?,
            dimension: OnceLock::new(),
        })
    }
}

impl Embedder for HttpEmbedder {
    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        if texts.iter().any(|t| t.trim().is_empty()) {
            return Err(EmbedError::EmptyText);
        }
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        let response: EmbedResponse = self.client.post(&EmbedRequest { texts })?;
        if response.vectors.len() != texts.len() {
            return Err(EmbedError::Protocol(format!(
                "{} returned {} vectors for {} texts",
                self.client.endpoint(),
                response.vectors.len(),
                texts.len()
            )));
        }
        let mut out = Vec::with_capacity(texts.len());
        for raw in response.vectors {
            let expected = *self.dimension.get_or_init(|| raw.len());
            if raw.len() != expected {
                return Err(EmbedError::Protocol(format!(
                    "dimension changed from {expected} to {}",
                    raw.len()
                )));
            }
            out.push(EmbeddingVector::normalized(raw)?);
        }
        Ok(out)
    }

    fn dimension(&self) -> Option<usize> {
        self.dimension.get().copied()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RetrievalResult {
    /// Insertion position of the entry in the index.
    pub position: usize,
    pub chunk_id: String,
    pub score: f64,
    /// 1-based.
    pub rank: usize,
}

/// Exact flat inner-product index. Immutable once built.
#[derive(Debug, Clone)]
pub struct VectorIndex {
    dimension: usize,
    ids: Vec<String>,
    vectors: Vec<EmbeddingVector>,
}

impl VectorIndex {
    pub fn from_entries(entries: Vec<(String, EmbeddingVector)>) -> Result<Self, IndexError> {
        let dimension = entries.first().ok_or(IndexError::Empty)?.1.dimension();
        let mut seen = HashSet::with_capacity(entries.len());
        let mut ids = Vec::with_capacity(entries.len());
        let mut vectors = Vec::with_capacity(entries.len());
        for (id, vector) in entries {
            if vector.dimension() != dimension {
                return Err(IndexError::DimensionMismatch {
                    expected: dimension,
                    actual: vector.dimension(),
                });
            }
            if !seen.insert(id.clone()) {
                return Err(IndexError::DuplicateId(id));
            }
            ids.push(id);
            vectors.push(vector);
        }
        Ok(Self {
            dimension,
            ids,
            vectors,
        })
    }

    /// Embeds every chunk; entry positions follow the order of `chunks`.
    pub fn build(chunks: &[Chunk], embedder: &dyn Embedder) -> Result<Self, IndexError> {
        if chunks.is_empty() {
            return Err(IndexError::Empty);
        }
        let texts: Vec<&str> = chunks.iter().map(|c| c.text.as_str()).collect();
        let vectors = embedder.embed_batch(&texts)?;
        Self::from_entries(chunks.iter().map(Chunk::id).zip(vectors).collect())
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn id(&self, position: usize) -> &str {
        &self.ids[position]
    }

    pub fn vector(&self, position: usize) -> &EmbeddingVector {
        &self.vectors[position]
    }

    /// The `min(k, len)` entries with the highest inner product against
    /// `query`, best first. Equal scores keep insertion order.
    pub fn search(
        &self,
        query: &EmbeddingVector,
        k: usize,
    ) -> Result<Vec<RetrievalResult>, IndexError> {
        if k == 0 {
            return Err(IndexError::ZeroK);
        }
        if query.dimension() != self.dimension {
            return Err(IndexError::DimensionMismatch {
                expected: self.dimension,
                actual: query.dimension(),
            });
        }
        let mut scored: Vec<(usize, f64)> = self
            .vectors
            .iter()
            .enumerate()
            .map(|(i, v)| (i, v.dot(query)))
            .collect();
        let order = |a: &(usize, f64), b: &(usize, f64)| -> Ordering {
            // scores are finite; -0.0 and 0.0 must tie
            b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal).then(a.0.cmp(&b.0))
        };
        if k < scored.len() {
            scored.select_nth_unstable_by(k - 1, order);
            scored.truncate(k);
        }
        scored.sort_unstable_by(order);
        Ok(scored
            .into_iter()
            .enumerate()
            .map(|(i, (position, score))| RetrievalResult {
                position,
                chunk_id: self.ids[position].clone(),
                score,
                rank: i + 1,
            })
            .collect())
    }
}
