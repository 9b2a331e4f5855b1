//! JSON and CSV rendering of evaluation results. CSV floats use four
//! decimal places; JSON keeps full precision.

use serde::Serialize;

use crate::eval::EvalReport;

pub fn fmt4(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{v:.4}")
    }
}

fn csv_string(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory csv write");
    for row in rows {
        w.write_record(row).expect("in-memory csv write");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("csv is utf-8")
}

/// `mode,tau,accuracy,avg_tokens,retrieval_rate`; `tau` is blank for modes
/// without a threshold.
pub fn eval_csv(reports: &[EvalReport]) -> String {
    csv_string(
        &["mode", "tau", "accuracy", "avg_tokens", "retrieval_rate"],
        reports.iter().map(|r| {
            vec![
                r.mode.name().to_string(),
                r.mode.tau().map(fmt4).unwrap_or_default(),
                fmt4(r.accuracy),
                fmt4(r.avg_tokens),
                fmt4(r.retrieval_rate),
            ]
        }),
    )
}

/// `tau,accuracy,retrieval_rate,avg_tokens`, one row per threshold.
pub fn sweep_csv(rows: &[(f64, EvalReport)]) -> String {
    csv_string(
        &["tau", "accuracy", "retrieval_rate", "avg_tokens"],
        rows.iter().map(|(tau, r)| {
            vec![
                fmt4(*tau),
                fmt4(r.accuracy),
                fmt4(r.retrieval_rate),
                fmt4(r.avg_tokens),
            ]
        }),
    )
}

#[derive(Serialize)]
struct ReportsJson<'a> {
    reports: &'a [EvalReport],
}

pub fn eval_json(reports: &[EvalReport]) -> String {
    serde_json::to_string_pretty(&ReportsJson { reports }).expect("reports serialize")
}

#[derive(Serialize)]
struct SweepEntry<'a> {
    tau: f64,
    report: &'a EvalReport,
}

#[derive(Serialize)]
struct SweepJson<'a> {
    sweep: Vec<SweepEntry<'a>>,
}

pub fn sweep_json(rows: &[(f64, EvalReport)]) -> String {
    serde_json::to_string_pretty(&SweepJson {
        sweep: rows
            .iter()
            .map(|(tau, report)| SweepEntry { tau: *tau, report })
            .collect(),
    })
    .expect("sweep serializes")
}
