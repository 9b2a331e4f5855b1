// Evaluate every mode on the bundled dataset and print the aggregate CSV.

use entropy_rag::eval::run_eval;
use entropy_rag::report::eval_csv;
use entropy_rag::{
    Dataset, Engine, EngineSettings, EvalOptions, HashEmbedder, IngestConfig, KnowledgeBase, MockModel, Mode,
};

fn main() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");
    let dataset = Dataset::load(format!("{dir}/eval_dataset.json")).expect("dataset");
    let model = MockModel::from_file(format!("{dir}/mock_script.json")).expect("script");
    let embedder = HashEmbedder::default();
    let kb = KnowledgeBase::build(dataset.documents(), IngestConfig::default(), &embedder).expect("knowledge base");
    let engine = Engine::new(&kb, &model, &embedder, EngineSettings::default());

    let modes = [
        Mode::Baseline,
        Mode::StandardRag { k: 3 },
        Mode::StrongRag { k: 3 },
        Mode::Oracle,
        Mode::Adaptive { tau: 0.8, n: 10, k: 3 },
    ];
    let reports: Vec<_> = modes
        .into_iter()
        .map(|m| run_eval(&engine, &dataset, m, EvalOptions { strict: true, jobs: 2 }).expect("eval"))
        .collect();
    print!("{}", eval_csv(&reports));
}
