// Embed chunks with the built-in hashing embedder and run exact top-k search.

use entropy_rag::corpus::{self, ChunkConfig};
use entropy_rag::{Embedder, HashEmbedder, VectorIndex, WhitespaceTokenizer};

fn main() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/corpus.jsonl");
    let docs = corpus::load_corpus(path).expect("fixture corpus").documents;
    let config = ChunkConfig::new(30, 10).expect("valid window");
    let chunks: Vec<_> = docs
        .iter()
        .flat_map(|d| corpus::chunk(d, config, &WhitespaceTokenizer))
        .collect();

    let embedder = HashEmbedder::default();
    let index = VectorIndex::build(&chunks, &embedder).expect("index");
    println!("{} chunks, dimension {}", index.len(), index.dimension());

    let query = "organ built from reclaimed ship timber";
    for hit in index.search(&embedder.embed(query).expect("embed"), 3).expect("search") {
        println!("#{} {:.3} {}", hit.rank, hit.score, hit.chunk_id);
    }
}
