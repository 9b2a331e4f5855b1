// Answer two questions in adaptive mode: one the summary covers, one that
// needs a retrieved chunk.

use entropy_rag::{
    Dataset, Engine, EngineSettings, HashEmbedder, IngestConfig, KnowledgeBase, MockModel, Mode,
};

fn main() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");
    let dataset = Dataset::load(format!("{dir}/eval_dataset.json")).expect("dataset");
    let model = MockModel::from_file(format!("{dir}/mock_script.json")).expect("script");
    let embedder = HashEmbedder::default();
    let kb = KnowledgeBase::build(dataset.documents(), IngestConfig::default(), &embedder).expect("knowledge base");
    let engine = Engine::new(&kb, &model, &embedder, EngineSettings::default());

    let mode = Mode::Adaptive { tau: 1.0, n: 10, k: 3 };
    for record in dataset.records.iter().filter(|r| r.id == "q01" || r.id == "q02") {
        let answer = engine.answer(&record.to_query(), mode).expect("answer");
        let decision = answer.gate_decision.as_ref().expect("adaptive decision");
        println!("Q: {}", record.query);
        println!(
            "   mean entropy {:.3} -> {}, {} pass(es), {} prompt tokens",
            decision.mean_entropy,
            if decision.triggered { "retrieved" } else { "no retrieval" },
            answer.passes,
            answer.input_tokens
        );
        println!("   A: {} (chunks {:?})", answer.answer_text, answer.retrieved_chunks);
    }
}
