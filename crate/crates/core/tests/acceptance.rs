//! Runs every acceptance criterion and prints one PASS/FAIL line each.
//! Exits non-zero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use entropy_rag::eval;
use entropy_rag::gate::{decide, distribution_entropy};
use entropy_rag::latency::{self, REFERENCE_RETRIEVAL_MS};
use entropy_rag::stats::compare_groups;
use entropy_rag::{EmbeddingVector, EntropyTrace, EvalOptions, Mode, VectorIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Normal};

mod common;
use common::{entropy_oracle, full, run_cli, tau_mid, welch_oracle, Fixture, H_HIGH, H_LOW};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn latency_table() -> Outcome {
    let start = Instant::now();
    let (code, out, err) = run_cli(&["latency", "--paper-defaults", "--json"]);
    ensure(code == 0, || format!("exit {code}: {err}"))?;
    let table: serde_json::Value = serde_json::from_str(&out).map_err(|e| e.to_string())?;
    let want_savings = [[-34.0, -10.0, 30.0], [2.0, 80.0, 210.0], [42.0, 180.0, 410.0]];
    let want_break_even = [625.0, 192.0, 109.0];
    let rows = table["rows"].as_array().ok_or("no rows")?;
    ensure(rows.len() == 3, || format!("{} rows", rows.len()))?;
    for (i, row) in rows.iter().enumerate() {
        for (j, want) in want_savings[i].iter().enumerate() {
            let raw = row["savings_ms"][j].as_f64().ok_or("missing cell")?;
            ensure(latency::display_ms(raw) as f64 == *want && (raw - want).abs() < 0.5, || {
                format!("row {i} col {j}: {raw} vs {want}")
            })?;
        }
        let raw = row["break_even_ms"].as_f64().ok_or("missing break-even")?;
        let want = want_break_even[i];
        ensure(latency::display_ms(raw) as f64 == want && (raw - want).abs() < 0.5, || {
            format!("break-even row {i}: {raw} vs {want}")
        })?;
    }
    let (_, text, _) = run_cli(&["latency", "--paper-defaults"]);
    for cell in ["-34", "-10", "+30", "+2", "+80", "+210", "+42", "+180", "+410", "625ms", "192ms", "109ms"] {
        ensure(text.contains(cell), || format!("text table lacks {cell}"))?;
    }
    ensure(table["t_retrieval_ms"] == serde_json::json!(REFERENCE_RETRIEVAL_MS), || "wrong columns".into())?;
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))?;
    Ok(format!("9 cells and 3 break-even values exact, {elapsed:.2?}"))
}

fn entropy_bounds() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for case in 0..1000 {
        let len = rng.gen_range(1..=64);
        let weights: Vec<f64> = (0..len)
            .map(|_| if rng.gen_bool(0.15) { 0.0 } else { rng.gen::<f64>() })
            .collect();
        let total: f64 = weights.iter().sum();
        if total == 0.0 {
            continue;
        }
        let ps: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let h = distribution_entropy(&full(&ps)).map_err(|e| e.to_string())?;
        let bound = (len as f64).ln();
        ensure(h >= -1e-9 && h <= bound + 1e-9, || format!("case {case}: H={h}, ln|S|={bound}"))?;
        ensure((h - entropy_oracle(&ps)).abs() < 1e-9, || format!("case {case}: oracle mismatch"))?;
        let uniform = distribution_entropy(&full(&vec![1.0 / len as f64; len])).unwrap();
        ensure((uniform - bound).abs() < 1e-9, || format!("uniform over {len}: {uniform}"))?;
        let mut one_hot = vec![0.0; len];
        one_hot[rng.gen_range(0..len)] = 1.0;
        ensure(distribution_entropy(&full(&one_hot)).unwrap() == 0.0, || "one-hot not zero".into())?;
    }
    Ok("1000 random distributions within [0, ln|support|]".into())
}

fn gate_monotonicity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let grid: Vec<f64> = (0..=60).map(|i| i as f64 * 0.05).collect();
    for set in 0..200 {
        let traces: Vec<EntropyTrace> = (0..rng.gen_range(1..50))
            .map(|_| {
                let steps = (0..rng.gen_range(0..20)).map(|_| rng.gen_range(0.0..3.0)).collect();
                EntropyTrace::from_entropies(steps, rng.gen_range(1..12)).unwrap()
            })
            .collect();
        let fractions: Vec<f64> = grid
            .iter()
            .map(|tau| traces.iter().filter(|t| decide(t, *tau).triggered).count() as f64 / traces.len() as f64)
            .collect();
        ensure(fractions.windows(2).all(|w| w[1] <= w[0]), || format!("set {set}: {fractions:?}"))?;
    }
    Ok("200 trace sets, non-increasing over a 61-point grid".into())
}

fn retrieval_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut ties = 0;
    for corpus in 0..200 {
        let dim = rng.gen_range(1..=16);
        let n = rng.gen_range(1..=100);
        let vector = |rng: &mut ChaCha8Rng| loop {
            let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-2i32..=2) as f64).collect();
            if v.iter().any(|x| *x != 0.0) {
                return EmbeddingVector::normalized(v).unwrap();
            }
        };
        let entries: Vec<(String, EmbeddingVector)> = (0..n).map(|i| (format!("c{i}"), vector(&mut rng))).collect();
        let query = vector(&mut rng);
        let index = VectorIndex::from_entries(entries.clone()).map_err(|e| e.to_string())?;
        let k = rng.gen_range(1..=n);
        let got: Vec<String> = index.search(&query, k).unwrap().into_iter().map(|r| r.chunk_id).collect();
        let mut scored: Vec<(usize, f64)> = entries
            .iter()
            .enumerate()
            .map(|(i, (_, v))| (i, v.values().iter().zip(query.values()).map(|(a, b)| a * b).sum::<f64>()))
            .collect();
        scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
        ties += scored.windows(2).filter(|w| w[0].1 == w[1].1).count();
        let want: Vec<String> = scored.iter().take(k).map(|(i, _)| format!("c{i}")).collect();
        ensure(got == want, || format!("corpus {corpus}: {got:?} vs {want:?}"))?;
    }
    Ok(format!("200 corpora match brute force ({ties} tied neighbours)"))
}

fn normalization_suite() -> Outcome {
    let failures = common::golden_answer_failures();
    let g = common::golden_answers();
    let total = g.normalize.len() + g.exact_match.len();
    ensure(total == 30, || format!("{total} cases"))?;
    ensure(failures.is_empty(), || failures.join("; "))?;
    Ok("30/30 golden cases".into())
}

fn mock_hierarchy() -> Outcome {
    let start = Instant::now();
    let fx = Fixture::load();
    ensure(fx.dataset.len() == 20, || format!("{} records", fx.dataset.len()))?;
    let engine = fx.engine();
    let opts = EvalOptions::default();
    let run = |mode| eval::run_eval(&engine, &fx.dataset, mode, opts).map_err(|e| e.to_string());
    let adaptive = |tau| Mode::Adaptive { tau, n: 10, k: 3 };
    let baseline = run(Mode::Baseline)?;
    let mid = run(adaptive(tau_mid()))?;
    ensure(baseline.accuracy < mid.accuracy, || {
        format!("baseline {} vs adaptive {}", baseline.accuracy, mid.accuracy)
    })?;
    ensure(mid.retrieval_rate > 0.0 && mid.retrieval_rate < 1.0, || format!("R = {}", mid.retrieval_rate))?;

    let zero = run(adaptive(0.0))?;
    let strong = run(Mode::StrongRag { k: 3 })?;
    let same_aggregates = (zero.accuracy, zero.retrieval_rate, zero.avg_tokens, zero.processed)
        == (strong.accuracy, strong.retrieval_rate, strong.avg_tokens, strong.processed);
    ensure(same_aggregates, || "tau=0 aggregates differ from strong".into())?;
    for (a, b) in zero.per_query.iter().zip(&strong.per_query) {
        let same = a.id == b.id
            && a.correct == b.correct
            && a.answer.answer_text == b.answer.answer_text
            && a.answer.retrieved_chunks == b.answer.retrieved_chunks
            && a.answer.input_tokens == b.answer.input_tokens
            && a.answer.retrieval_performed == b.answer.retrieval_performed;
        ensure(same, || format!("record {} differs between tau=0 and strong", a.id))?;
    }

    let taus = [0.0, H_LOW, 0.5 * H_LOW + 0.5 * H_HIGH, H_HIGH, 2.0, f64::INFINITY];
    let sweep = eval::sweep(&engine, &fx.dataset, &taus, 10, 3, opts).map_err(|e| e.to_string())?;
    let rates: Vec<f64> = sweep.iter().map(|(_, r)| r.retrieval_rate).collect();
    ensure(rates.windows(2).all(|w| w[1] <= w[0]), || format!("rates {rates:?}"))?;
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(10), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "baseline {:.2} < adaptive {:.2} at R={:.2}; tau=0 == strong; sweep rates {:?}; {elapsed:.2?}",
        baseline.accuracy, mid.accuracy, mid.retrieval_rate, rates
    ))
}

fn statistics_oracle() -> Outcome {
    let (a, b) = ([1.0, 2.0, 3.0], [2.0, 3.0, 4.0]);
    let s = compare_groups(&a, &b).map_err(|e| e.to_string())?;
    let (t, _, p, d, ci) = welch_oracle(&a, &b);
    for (name, got, want) in [
        ("t", s.t_statistic, t),
        ("d", s.cohens_d, d),
        ("p", s.p_value, p),
        ("ci low", s.ci95.0, ci.0),
        ("ci high", s.ci95.1, ci.1),
    ] {
        ensure((got - want).abs() <= 1e-6, || format!("{name}: {got} vs {want}"))?;
    }
    let same = compare_groups(&a, &a).map_err(|e| e.to_string())?;
    ensure((same.t_statistic, same.cohens_d, same.p_value) == (0.0, 0.0, 1.0), || format!("{same:?}"))?;
    Ok(format!("t={:.6} d={:.6} ci=({:.6}, {:.6})", s.t_statistic, s.cohens_d, s.ci95.0, s.ci95.1))
}

fn synthetic_recovery() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(500);
    let correct: Vec<f64> = Normal::new(1.72, 0.9).unwrap().sample_iter(&mut rng).take(250).collect();
    let incorrect: Vec<f64> = Normal::new(2.20, 0.9).unwrap().sample_iter(&mut rng).take(250).collect();
    let s = compare_groups(&correct, &incorrect).map_err(|e| e.to_string())?;
    ensure((s.mean_correct - 1.72).abs() < 0.1, || format!("mean correct {}", s.mean_correct))?;
    ensure((s.mean_incorrect - 2.20).abs() < 0.1, || format!("mean incorrect {}", s.mean_incorrect))?;
    ensure(s.ci95.0 > 0.0, || format!("ci {:?} includes 0", s.ci95))?;
    Ok(format!(
        "means {:.3}/{:.3}, gap ci ({:.3}, {:.3}), p={:.1e}, d={:.2}",
        s.mean_correct, s.mean_incorrect, s.ci95.0, s.ci95.1, s.p_value, s.cohens_d
    ))
}

fn determinism() -> Outcome {
    let dataset = common::fixture_str("eval_dataset.json");
    let model = format!("mock:{}", common::fixture_str("mock_script.json"));
    let run = || -> Result<Vec<Vec<u8>>, String> {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let out = dir.path().to_str().unwrap().to_string();
        let shared = ["--dataset", &dataset, "--model", &model, "--seed", "11", "--out", &out];
        let (code, _, err) = run_cli(&[&["eval", "--mode", "baseline,adaptive,standard,strong,oracle"][..], &shared].concat());
        ensure(code == 0, || format!("eval exit {code}: {err}"))?;
        let (code, _, err) = run_cli(&[&["sweep", "--taus", "0,0.25,0.5,1,1.5"][..], &shared].concat());
        ensure(code == 0, || format!("sweep exit {code}: {err}"))?;
        ["eval.json", "eval.csv", "sweep.json", "sweep.csv"]
            .iter()
            .map(|f| std::fs::read(dir.path().join(f)).map_err(|e| e.to_string()))
            .collect()
    };
    let (a, b) = (run()?, run()?);
    ensure(a == b, || "outputs differ between runs".into())?;
    Ok(format!("eval and sweep JSON/CSV identical ({} bytes)", a.iter().map(Vec::len).sum::<usize>()))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("latency table reproduction", latency_table),
        ("entropy bounds", entropy_bounds),
        ("gate monotonicity", gate_monotonicity),
        ("retrieval exactness", retrieval_exactness),
        ("normalization and exact match", normalization_suite),
        ("mock mode hierarchy", mock_hierarchy),
        ("statistics oracle", statistics_oracle),
        ("synthetic entropy recovery", synthetic_recovery),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|panic| {
            Err(panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match result {
            Ok(detail) => println!("PASS  {}. {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL  {}. {name}: {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
