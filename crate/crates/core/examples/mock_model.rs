// A scripted language model: the first rule whose pattern matches the prompt
// decides the tokens and their distributions.

use entropy_rag::lm::generated_text;
use entropy_rag::{gate, GenerationRequest, LanguageModel, MockModel};

const SCRIPT: &str = r#"{
  "rules": [
    {"pattern": ["Additional Details", "colour"], "steps": [
      {"token": "green", "probs": {"green": 0.95, "blue": 0.05}}
    ]},
    {"pattern": "colour", "steps": [
      {"token": "red", "probs": {"red": 0.35, "green": 0.33, "blue": 0.32}}
    ]}
  ],
  "default": {"steps": [{"token": "unsure", "probs": {"unsure": 0.5, "maybe": 0.5}}]}
}"#;

fn main() {
    let model = MockModel::from_json(SCRIPT).expect("valid script");
    for prompt in [
        "Question: What colour is the bridge?\nAnswer:",
        "Context: ...\nAdditional Details: painted deep green\nQuestion: What colour is the bridge?\nAnswer:",
        "Question: Anything else?\nAnswer:",
    ] {
        let steps = model.generate(&GenerationRequest::new(prompt, 8)).expect("generation");
        let trace = gate::mean_entropy(&steps, 10).expect("entropy");
        println!("{:<8} mean entropy {:.3}", generated_text(&steps), trace.mean_first_n);
    }
}
