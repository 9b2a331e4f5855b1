// Sweep the entropy threshold; each record's passes are generated once and
// reused across thresholds.

use entropy_rag::eval::sweep;
use entropy_rag::report::sweep_csv;
use entropy_rag::{Dataset, Engine, EngineSettings, EvalOptions, HashEmbedder, IngestConfig, KnowledgeBase, MockModel};

fn main() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");
    let dataset = Dataset::load(format!("{dir}/eval_dataset.json")).expect("dataset");
    let model = MockModel::from_file(format!("{dir}/mock_script.json")).expect("script");
    let embedder = HashEmbedder::default();
    let kb = KnowledgeBase::build(dataset.documents(), IngestConfig::default(), &embedder).expect("knowledge base");
    let engine = Engine::new(&kb, &model, &embedder, EngineSettings::default());

    let taus = [0.0, 0.25, 0.5, 1.0, 1.33, 1.5, 2.0];
    let rows = sweep(&engine, &dataset, &taus, 10, 3, EvalOptions::default()).expect("sweep");
    print!("{}", sweep_csv(&rows));
}
