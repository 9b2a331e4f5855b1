// Break-even retrieval latency and per-query savings for a few retrieval
// rates.

use entropy_rag::latency::{self, LatencyConfig, DEFAULT_ENTROPY_CHECK_MS, REFERENCE_RETRIEVAL_MS};

fn main() {
    let reference = latency::table(&latency::reference_configs(), DEFAULT_ENTROPY_CHECK_MS, &REFERENCE_RETRIEVAL_MS)
        .expect("valid table");
    print!("{}", reference.to_text());
    println!();

    let measured = [LatencyConfig::new("measured", 0.4), LatencyConfig::new("always", 1.0)];
    let custom = latency::table(&measured, 20.0, &[50.0, 150.0]).expect("valid table");
    print!("{}", custom.to_csv());
}
