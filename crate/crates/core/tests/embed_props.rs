use std::fs;

use entropy_rag::{Embedder, EmbeddingVector, HashEmbedder, VectorIndex};
use proptest::prelude::*;

mod common;

/// Brute-force ranking: every score computed independently, stable sort by
/// descending score so equal scores keep insertion order.
fn brute_force(index: &VectorIndex, query: &EmbeddingVector, k: usize) -> Vec<(usize, f64)> {
    let mut all: Vec<(usize, f64)> = (0..index.len())
        .map(|i| {
            let mut s = 0.0;
            for (a, b) in index.vector(i).values().iter().zip(query.values()) {
                s += a * b;
            }
            (i, s)
        })
        .collect();
    all.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    all.truncate(k);
    all
}

fn raw_vector(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    // small integer grid so exact ties are common
    prop::collection::vec((-2i32..=2).prop_map(f64::from), dim).prop_filter("nonzero", |v| v.iter().any(|x| *x != 0.0))
}

fn corpus_and_query() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>, usize)> {
    (1usize..=16, 1usize..=100).prop_flat_map(|(dim, n)| {
        (prop::collection::vec(raw_vector(dim), n), raw_vector(dim), 1usize..=n + 2)
    })
}

proptest! {
    #[test]
    fn search_matches_brute_force((rows, query, k) in corpus_and_query()) {
        let entries = rows
            .into_iter()
            .enumerate()
            .map(|(i, r)| (format!("c{i}"), EmbeddingVector::normalized(r).unwrap()))
            .collect();
        let index = VectorIndex::from_entries(entries).unwrap();
        let q = EmbeddingVector::normalized(query).unwrap();
        let got = index.search(&q, k).unwrap();
        let want = brute_force(&index, &q, k);
        prop_assert_eq!(got.len(), want.len());
        for (rank, (g, (pos, score))) in got.iter().zip(&want).enumerate() {
            prop_assert_eq!(g.rank, rank + 1);
            prop_assert_eq!(g.position, *pos);
            prop_assert_eq!(&g.chunk_id, &format!("c{pos}"));
            prop_assert_eq!(g.score, *score);
            prop_assert!(g.score >= -1.0 - 1e-6 && g.score <= 1.0 + 1e-6);
        }
        for pair in got.windows(2) {
            prop_assert!(pair[0].score >= pair[1].score);
        }
    }

    #[test]
    fn normalization_ignores_positive_scale(raw in raw_vector(12), scale in 1e-3f64..1e3) {
        let a = EmbeddingVector::normalized(raw.clone()).unwrap();
        let b = EmbeddingVector::normalized(raw.iter().map(|x| x * scale).collect()).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
        let norm: f64 = a.values().iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hash_embedder_is_deterministic_and_unit(text in "[a-zA-Z ,.!?]{1,80}") {
        prop_assume!(!text.trim().is_empty());
        let e = HashEmbedder::default();
        let a = e.embed(&text).unwrap();
        prop_assert_eq!(&a, &e.embed(&text).unwrap());
        prop_assert_eq!(a.dimension(), 64);
        let norm: f64 = a.values().iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assert!((norm - 1.0).abs() < 1e-12);
    }
}

#[test]
fn hash_embedder_matches_golden_vectors() {
    #[derive(serde::Deserialize)]
    struct Golden {
        text: String,
        vector: Vec<f64>,
    }
    let golden: Vec<Golden> =
        serde_json::from_str(&fs::read_to_string(common::fixture("embedding_golden.json")).unwrap()).unwrap();
    assert!(!golden.is_empty());
    let e = HashEmbedder::default();
    for g in golden {
        let v = e.embed(&g.text).unwrap();
        assert_eq!(v.values().len(), g.vector.len(), "{}", g.text);
        for (a, b) in v.values().iter().zip(&g.vector) {
            assert!((a - b).abs() < 1e-12, "{}", g.text);
        }
    }
}

#[test]
fn related_text_ranks_first() {
    let e = HashEmbedder::default();
    let chunks = [
        "the lighthouse lamp burned colza oil",
        "barges carried slate down the river",
        "the orchestra toured by steamer",
    ];
    let entries = chunks
        .iter()
        .enumerate()
        .map(|(i, t)| (format!("c{i}"), e.embed(t).unwrap()))
        .collect();
    let index = VectorIndex::from_entries(entries).unwrap();
    let hits = index.search(&e.embed("what did barges carry on the river").unwrap(), 1).unwrap();
    assert_eq!(hits[0].chunk_id, "c1");
}
