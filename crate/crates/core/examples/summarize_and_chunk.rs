// Split a document into overlapping windows and build its extractive summary.

use entropy_rag::corpus::{self, ChunkConfig, Document, WhitespaceTokenizer};

fn main() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/corpus.jsonl");
    let corpus = corpus::load_corpus(path).expect("fixture corpus");
    let doc: &Document = &corpus.documents[0];

    let summary = corpus::summarize(doc, 2);
    println!("summary of {}:\n  {}\n", doc.id, summary.text);

    // small windows so the overlap is visible
    let config = ChunkConfig::new(24, 6).expect("valid window");
    for chunk in corpus::chunk(doc, config, &WhitespaceTokenizer) {
        println!("{} tokens {:?}: {}", chunk.id(), chunk.token_span, chunk.text);
    }
}
