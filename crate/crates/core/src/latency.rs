//! Closed-form latency model for gated retrieval against an always-retrieve
//! baseline. Only retrieval-side latency is modeled; the cost of a second
//! generation pass is not included.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::LatencyError;
use crate::report::fmt4;

pub const DEFAULT_ENTROPY_CHECK_MS: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyScenario {
    pub retrieval_rate: f64,
    pub t_retrieval_ms: f64,
    pub t_entropy_ms: f64,
}

impl LatencyScenario {
    pub fn new(retrieval_rate: f64, t_retrieval_ms: f64, t_entropy_ms: f64) -> Result<Self, LatencyError> {
        let s = Self {
            retrieval_rate,
            t_retrieval_ms,
            t_entropy_ms,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), LatencyError> {
        if !(0.0..=1.0).contains(&self.retrieval_rate) {
            return Err(LatencyError::Invalid(format!(
                "retrieval rate {} outside [0, 1]",
                self.retrieval_rate
            )));
        }
        for (name, v) in [("t_retrieval", self.t_retrieval_ms), ("t_entropy", self.t_entropy_ms)] {
            if !v.is_finite() || v < 0.0 {
                return Err(LatencyError::Invalid(format!("{name} must be a finite value >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// `t_entropy + R * t_retrieval`
pub fn overhead(s: &LatencyScenario) -> f64 {
    s.t_entropy_ms + s.retrieval_rate * s.t_retrieval_ms
}

/// Per-query saving versus retrieving on every query; negative when the
/// entropy check costs more than the skipped retrievals save.
pub fn savings(s: &LatencyScenario) -> f64 {
    (1.0 - s.retrieval_rate) * s.t_retrieval_ms - s.t_entropy_ms
}

/// Retrieval latency above which gating saves time. `None` when every query
/// retrieves anyway.
pub fn break_even(retrieval_rate: f64, t_entropy_ms: f64) -> Option<f64> {
    if retrieval_rate >= 1.0 {
        None
    } else {
        Some(t_entropy_ms / (1.0 - retrieval_rate))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyConfig {
    pub label: String,
    pub retrieval_rate: f64,
}

impl LatencyConfig {
    pub fn new(label: impl Into<String>, retrieval_rate: f64) -> Self {
        Self {
            label: label.into(),
            retrieval_rate,
        }
    }
}

/// The three threshold settings and retrieval latencies of the reference
/// analysis.
pub fn reference_configs() -> Vec<LatencyConfig> {
    vec![
        LatencyConfig::new("tau=0.5", 0.92),
        LatencyConfig::new("tau=1.0", 0.74),
        LatencyConfig::new("tau=1.5", 0.54),
    ]
}

pub const REFERENCE_RETRIEVAL_MS: [f64; 3] = [200.0, 500.0, 1000.0];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatencyRow {
    pub config: String,
    pub retrieval_rate: f64,
    pub break_even_ms: Option<f64>,
    /// One entry per retrieval latency, in table column order.
    pub savings_ms: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatencyTable {
    pub t_entropy_ms: f64,
    pub t_retrieval_ms: Vec<f64>,
    pub rows: Vec<LatencyRow>,
}

pub fn table(
    configs: &[LatencyConfig],
    t_entropy_ms: f64,
    t_retrieval_ms: &[f64],
) -> Result<LatencyTable, LatencyError> {
    if t_retrieval_ms.is_empty() {
        return Err(LatencyError::NoScenarios);
    }
    if configs.is_empty() {
        return Err(LatencyError::NoConfigs);
    }
    let rows = configs
        .iter()
        .map(|c| {
            let savings_ms = t_retrieval_ms
                .iter()
                .map(|&t| LatencyScenario::new(c.retrieval_rate, t, t_entropy_ms).map(|s| savings(&s)))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(LatencyRow {
                config: c.label.clone(),
                retrieval_rate: c.retrieval_rate,
                break_even_ms: break_even(c.retrieval_rate, t_entropy_ms),
                savings_ms,
            })
        })
        .collect::<Result<Vec<_>, LatencyError>>()?;
    Ok(LatencyTable {
        t_entropy_ms,
        t_retrieval_ms: t_retrieval_ms.to_vec(),
        rows,
    })
}

/// Integer display value, rounding half away from zero.
pub fn display_ms(v: f64) -> i64 {
    v.round() as i64
}

fn signed(v: f64) -> String {
    let r = display_ms(v);
    if r > 0 {
        format!("+{r}")
    } else {
        r.to_string()
    }
}

fn fmt_ms(v: f64) -> String {
    let s = format!("{v}");
    s.strip_suffix(".0").map(str::to_string).unwrap_or(s)
}

impl LatencyTable {
    pub fn headers(&self) -> Vec<String> {
        let mut h = vec![
            "config".to_string(),
            "retrieval_rate".to_string(),
            "break_even_ms".to_string(),
        ];
        h.extend(self.t_retrieval_ms.iter().map(|t| format!("savings@{}ms", fmt_ms(*t))));
        h
    }

    /// Rounded, human-readable table.
    pub fn to_text(&self) -> String {
        let mut cells: Vec<Vec<String>> = vec![{
            let mut h = vec![
                "config".to_string(),
                "retrieval".to_string(),
                "reduction".to_string(),
                "break-even".to_string(),
            ];
            h.extend(self.t_retrieval_ms.iter().map(|t| format!("@{}ms", fmt_ms(*t))));
            h
        }];
        for row in &self.rows {
            let mut line = vec![
                row.config.clone(),
                format!("{:.0}%", row.retrieval_rate * 100.0),
                format!("{:.0}%", (1.0 - row.retrieval_rate) * 100.0),
                row.break_even_ms
                    .map_or("n/a".to_string(), |b| format!("{}ms", display_ms(b))),
            ];
            line.extend(row.savings_ms.iter().map(|s| signed(*s)));
            cells.push(line);
        }
        let widths: Vec<usize> = (0..cells[0].len())
            .map(|i| cells.iter().map(|r| r[i].len()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for row in &cells {
            let line: Vec<String> = row
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
                .collect();
            let _ = writeln!(out, "{}", line.join("  ").trim_end());
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.headers()).expect("in-memory csv write");
        for row in &self.rows {
            let mut rec = vec![
                row.config.clone(),
                fmt4(row.retrieval_rate),
                row.break_even_ms.map_or("n/a".to_string(), fmt4),
            ];
            rec.extend(row.savings_ms.iter().map(|s| fmt4(*s)));
            w.write_record(rec).expect("in-memory csv write");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("csv is utf-8")
    }
}
