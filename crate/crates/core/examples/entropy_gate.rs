// Per-token entropy, the windowed mean, and the trigger decision at a few
// thresholds.

use entropy_rag::gate::{self, decide, decide_streaming};
use entropy_rag::{Distribution, TokenStep};

fn step(token: &str, probs: &[(&str, f64)]) -> TokenStep {
    TokenStep {
        token: token.into(),
        distribution: Distribution::Full(probs.iter().map(|(t, p)| (t.to_string(), *p)).collect()),
    }
}

fn main() {
    let steps = vec![
        step("The", &[("The", 0.9), ("A", 0.1)]),
        step(" answer", &[(" answer", 0.5), (" result", 0.3), (" end", 0.2)]),
        step(" is", &[(" is", 1.0)]),
    ];
    let trace = gate::mean_entropy(&steps, 10).expect("valid steps");
    println!("per-step entropy (nats): {:?}", trace.per_step);
    println!("mean over first {}: {:.4}", trace.n_used, trace.mean_first_n);

    for tau in [0.0, 0.3, 0.5, 1.0] {
        let mean = decide(&trace, tau);
        let streaming = decide_streaming(&trace, tau);
        println!(
            "tau {tau:.1}: mean rule {}, streaming rule {} (halt at {:?})",
            if mean.triggered { "retrieves" } else { "skips" },
            if streaming.triggered { "retrieves" } else { "skips" },
            streaming.halted_at
        );
    }
}
