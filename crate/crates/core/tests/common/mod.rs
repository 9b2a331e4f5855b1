#![allow(dead_code)]

use std::path::PathBuf;

use entropy_rag::{
    Dataset, Distribution, Engine, EngineSettings, HashEmbedder, IngestConfig, KnowledgeBase, MockModel, TokenStep,
};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn fixture_str(name: &str) -> String {
    fixture(name).to_string_lossy().into_owned()
}

/// Largest first-pass entropy among low-entropy scripted answers and the
/// smallest among high-entropy ones, both in nats.
pub const H_LOW: f64 = 0.331_694_430_821_226;
pub const H_HIGH: f64 = 1.319_545_463_249_337;

pub fn tau_mid() -> f64 {
    0.5 * H_LOW + 0.5 * H_HIGH
}

pub struct Fixture {
    pub dataset: Dataset,
    pub kb: KnowledgeBase,
    pub model: MockModel,
    pub embedder: HashEmbedder,
}

impl Fixture {
    pub fn load() -> Self {
        let dataset = Dataset::load(fixture("eval_dataset.json")).expect("fixture dataset");
        let embedder = HashEmbedder::default();
        let kb = KnowledgeBase::build(dataset.documents(), IngestConfig::default(), &embedder).expect("knowledge base");
        let model = MockModel::from_file(fixture("mock_script.json")).expect("fixture script");
        Self {
            dataset,
            kb,
            model,
            embedder,
        }
    }

    pub fn engine(&self) -> Engine<'_> {
        self.engine_with(EngineSettings::default())
    }

    pub fn engine_with(&self, settings: EngineSettings) -> Engine<'_> {
        Engine::new(&self.kb, &self.model, &self.embedder, settings)
    }
}

pub fn step(token: &str, probs: &[(&str, f64)]) -> TokenStep {
    TokenStep {
        token: token.to_string(),
        distribution: Distribution::Full(probs.iter().map(|(t, p)| (t.to_string(), *p)).collect()),
    }
}

/// Runs `cli::run` in-process and returns (exit code, stdout, stderr).
pub fn run_cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = entropy_rag::cli::run(
        std::iter::once("erag").chain(args.iter().copied()),
        &mut out,
        &mut err,
    );
    (
        code,
        String::from_utf8(out).expect("utf-8 stdout"),
        String::from_utf8(err).expect("utf-8 stderr"),
    )
}

/// Random probability vector over `len` outcomes, some entries possibly zero.
pub fn probability_vector(len: std::ops::Range<usize>) -> impl proptest::strategy::Strategy<Value = Vec<f64>> {
    use proptest::prelude::*;
    prop::collection::vec(prop_oneof![1 => Just(0.0), 6 => 1e-6f64..1.0], len)
        .prop_filter("some mass", |w| w.iter().sum::<f64>() > 0.0)
        .prop_map(|w| {
            let total: f64 = w.iter().sum();
            w.into_iter().map(|x| x / total).collect()
        })
}

pub fn full(ps: &[f64]) -> Distribution {
    Distribution::Full(ps.iter().enumerate().map(|(i, p)| (format!("t{i}"), *p)).collect())
}

/// Independent Shannon entropy in nats.
pub fn entropy_oracle(ps: &[f64]) -> f64 {
    let mut h = 0.0;
    for &p in ps {
        if p > 0.0 {
            h -= p * p.ln();
        }
    }
    h
}

/// From-scratch Welch test: (t, df, two-sided p, pooled-sd d, ci95) for
/// `mean(b) - mean(a)`. Shares no code with the library.
pub fn welch_oracle(a: &[f64], b: &[f64]) -> (f64, f64, f64, f64, (f64, f64)) {
    let n1 = a.len() as f64;
    let n2 = b.len() as f64;
    let m1 = a.iter().sum::<f64>() / n1;
    let m2 = b.iter().sum::<f64>() / n2;
    let s1 = a.iter().map(|x| (x - m1) * (x - m1)).sum::<f64>() / (n1 - 1.0);
    let s2 = b.iter().map(|x| (x - m2) * (x - m2)).sum::<f64>() / (n2 - 1.0);
    let se = (s1 / n1 + s2 / n2).sqrt();
    let t = (m2 - m1) / se;
    let df = (s1 / n1 + s2 / n2).powi(2) / ((s1 / n1).powi(2) / (n1 - 1.0) + (s2 / n2).powi(2) / (n2 - 1.0));
    let p = 2.0 * student_upper_tail(t.abs(), df);
    let d = (m2 - m1) / (((n1 - 1.0) * s1 + (n2 - 1.0) * s2) / (n1 + n2 - 2.0)).sqrt();
    let q = student_quantile_975(df);
    (t, df, p, d, (m2 - m1 - q * se, m2 - m1 + q * se))
}

fn ln_gamma(x: f64) -> f64 {
    // Lanczos, g = 7
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    let x = x - 1.0;
    let mut s = C[0];
    for (i, c) in C.iter().enumerate().skip(1) {
        s += c / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + s.ln()
}

/// Continued fraction for the regularized incomplete beta (modified Lentz).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    let tiny = 1e-300;
    let mut c = 1.0;
    let mut d = 1.0 - (a + b) * x / (a + 1.0);
    if d.abs() < tiny {
        d = tiny;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..10_000 {
        let m = m as f64;
        let aa = m * (b - m) * x / ((a + 2.0 * m - 1.0) * (a + 2.0 * m));
        d = 1.0 + aa * d;
        d = if d.abs() < tiny { tiny } else { d };
        c = 1.0 + aa / c;
        c = if c.abs() < tiny { tiny } else { c };
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (a + b + m) * x / ((a + 2.0 * m) * (a + 2.0 * m + 1.0));
        d = 1.0 + aa * d;
        d = if d.abs() < tiny { tiny } else { d };
        c = 1.0 + aa / c;
        c = if c.abs() < tiny { tiny } else { c };
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}

fn reg_inc_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let front = (ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln()).exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    }
}

/// P(T > t) for t >= 0.
pub fn student_upper_tail(t: f64, df: f64) -> f64 {
    0.5 * reg_inc_beta(df / 2.0, 0.5, df / (df + t * t))
}

fn student_quantile_975(df: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 1000.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if student_upper_tail(mid, df) > 0.025 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(serde::Deserialize)]
pub struct NormalizeCase {
    pub input: String,
    pub expected: String,
}

#[derive(serde::Deserialize)]
pub struct MatchCase {
    pub prediction: String,
    pub references: Vec<String>,
    pub expected: bool,
}

#[derive(serde::Deserialize)]
pub struct GoldenAnswers {
    pub normalize: Vec<NormalizeCase>,
    pub exact_match: Vec<MatchCase>,
}

pub fn golden_answers() -> GoldenAnswers {
    serde_json::from_str(&std::fs::read_to_string(fixture("normalization_golden.json")).unwrap()).unwrap()
}

/// Failures as readable lines; empty when every case passes.
pub fn golden_answer_failures() -> Vec<String> {
    let golden = golden_answers();
    let mut failures = Vec::new();
    for c in &golden.normalize {
        let got = entropy_rag::eval::normalize_answer(&c.input);
        if got != c.expected {
            failures.push(format!("normalize({:?}) = {got:?}, want {:?}", c.input, c.expected));
        }
    }
    for c in &golden.exact_match {
        let got = entropy_rag::eval::exact_match(&c.prediction, &c.references);
        if got != c.expected {
            failures.push(format!("exact_match({:?}, {:?}) = {got}", c.prediction, c.references));
        }
    }
    failures
}

/// One-shot HTTP stub: answers the i-th connection with `responses[i]`
/// (status, JSON body) and returns the request bodies it saw.
pub fn stub_server(responses: Vec<(u16, String)>) -> (String, std::thread::JoinHandle<Vec<String>>) {
    use std::io::{BufRead, BufReader, Read, Write};
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1", listener.local_addr().unwrap());
    let handle = std::thread::spawn(move || {
        let mut bodies = Vec::new();
        for (status, body) in responses {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut length = 0;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if line == "\r\n" || line.is_empty() {
                    break;
                }
                if let Some((k, v)) = line.split_once(':') {
                    if k.eq_ignore_ascii_case("content-length") {
                        length = v.trim().parse().unwrap();
                    }
                }
            }
            let mut buf = vec![0; length];
            reader.read_exact(&mut buf).unwrap();
            bodies.push(String::from_utf8(buf).unwrap());
            let mut stream = stream;
            write!(
                stream,
                "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                body.len()
            )
            .unwrap();
        }
        bodies
    });
    (url, handle)
}
