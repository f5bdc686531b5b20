//! Micro/macro F1 and multi-run aggregation.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jsonl;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub micro_f1: f64,
    pub macro_f1: f64,
    pub per_class: Vec<ClassScore>,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

pub fn score(preds: &[usize], golds: &[usize], num_classes: usize) -> Result<Metrics> {
    if preds.len() != golds.len() {
        return Err(Error::validation(format!(
            "{} predictions for {} gold labels",
            preds.len(),
            golds.len()
        )));
    }
    if preds.is_empty() {
        return Err(Error::validation("cannot score an empty prediction list"));
    }
    if num_classes == 0 {
        return Err(Error::validation("class count must be positive"));
    }
    if let Some(bad) = preds.iter().chain(golds).find(|&&c| c >= num_classes) {
        return Err(Error::validation(format!("class index {bad} out of range")));
    }
    let mut tp = vec![0u64; num_classes];
    let mut pred_count = vec![0u64; num_classes];
    let mut gold_count = vec![0u64; num_classes];
    for (&p, &g) in preds.iter().zip(golds) {
        pred_count[p] += 1;
        gold_count[g] += 1;
        if p == g {
            tp[p] += 1;
        }
    }
    let per_class: Vec<ClassScore> = (0..num_classes)
        .map(|c| {
            let precision = ratio(tp[c], pred_count[c]);
            let recall = ratio(tp[c], gold_count[c]);
            ClassScore {
                precision,
                recall,
                f1: f1(precision, recall),
            }
        })
        .collect();
    let tp_all: u64 = tp.iter().sum();
    // single-label: pooled FP and FN both equal the error count
    let n = preds.len() as u64;
    let micro_p = ratio(tp_all, n);
    let micro_r = ratio(tp_all, n);
    let macro_f1 = per_class.iter().map(|s| s.f1).sum::<f64>() / num_classes as f64;
    Ok(Metrics {
        micro_f1: f1(micro_p, micro_r),
        macro_f1,
        per_class,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample (n - 1) standard deviation; `None` for a single run.
    pub std: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub runs: usize,
    pub micro_f1: MeanStd,
    pub macro_f1: MeanStd,
}

// Welford updates keep identical runs at exactly zero spread.
fn mean_std(xs: &[f64]) -> MeanStd {
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let d = x - mean;
        mean += d / (i + 1) as f64;
        m2 += d * (x - mean);
    }
    let std = (xs.len() >= 2).then(|| (m2 / (xs.len() - 1) as f64).sqrt());
    MeanStd { mean, std }
}

pub fn aggregate_runs(runs: &[Metrics]) -> Result<RunSummary> {
    if runs.is_empty() {
        return Err(Error::validation("no runs to aggregate"));
    }
    let micro: Vec<f64> = runs.iter().map(|m| m.micro_f1).collect();
    let macro_: Vec<f64> = runs.iter().map(|m| m.macro_f1).collect();
    Ok(RunSummary {
        runs: runs.len(),
        micro_f1: mean_std(&micro),
        macro_f1: mean_std(&macro_),
    })
}

/// One labeled row of the report, e.g. a dataset or method name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub name: String,
    pub summary: RunSummary,
}

fn fmt4(x: f64) -> String {
    format!("{x:.4}")
}

fn fmt_std(s: Option<f64>) -> String {
    s.map(fmt4).unwrap_or_else(|| "-".into())
}

/// Aligned plain-text table with mean and std of micro and macro F1.
pub fn render_table(rows: &[ReportRow]) -> String {
    let header = ["name", "runs", "micro_f1", "micro_std", "macro_f1", "macro_std"];
    let cells: Vec<[String; 6]> = rows
        .iter()
        .map(|r| {
            [
                r.name.clone(),
                r.summary.runs.to_string(),
                fmt4(r.summary.micro_f1.mean),
                fmt_std(r.summary.micro_f1.std),
                fmt4(r.summary.macro_f1.mean),
                fmt_std(r.summary.macro_f1.std),
            ]
        })
        .collect();
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in &cells {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let mut out = String::new();
    let mut line = |cols: &mut dyn Iterator<Item = &str>| {
        let parts: Vec<String> = cols
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, &w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    line(&mut header.iter().copied());
    for row in &cells {
        line(&mut row.iter().map(String::as_str));
    }
    out
}

#[derive(Serialize)]
struct ReportRecord<'a> {
    name: &'a str,
    runs: usize,
    micro_f1_mean: f64,
    micro_f1_std: Option<f64>,
    macro_f1_mean: f64,
    macro_f1_std: Option<f64>,
}

/// Writes `<stem>.txt` (table) and `<stem>.jsonl` (one record per row).
pub fn write_report(txt_path: &Path, jsonl_path: &Path, rows: &[ReportRow]) -> Result<()> {
    jsonl::write_atomic(txt_path, render_table(rows).as_bytes())?;
    let records: Vec<ReportRecord<'_>> = rows
        .iter()
        .map(|r| ReportRecord {
            name: &r.name,
            runs: r.summary.runs,
            micro_f1_mean: r.summary.micro_f1.mean,
            micro_f1_std: r.summary.micro_f1.std,
            macro_f1_mean: r.summary.macro_f1.mean,
            macro_f1_std: r.summary.macro_f1.std,
        })
        .collect();
    jsonl::write_records(jsonl_path, &records)
}

/// Per-run scores as stored in a run file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub micro_f1: f64,
    pub macro_f1: f64,
}

pub fn read_runs(path: &Path) -> Result<Vec<Metrics>> {
    Ok(jsonl::read_records::<RunRecord>(path)?
        .into_iter()
        .map(|r| Metrics {
            micro_f1: r.micro_f1,
            macro_f1: r.macro_f1,
            per_class: Vec::new(),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(micro: f64, macro_: f64) -> Metrics {
        Metrics {
            micro_f1: micro,
            macro_f1: macro_,
            per_class: Vec::new(),
        }
    }

    #[test]
    fn perfect_and_all_wrong() {
        let s = score(&[0, 1, 2, 1], &[0, 1, 2, 1], 3).unwrap();
        assert_eq!((s.micro_f1, s.macro_f1), (1.0, 1.0));
        let s = score(&[1, 0, 1], &[0, 1, 0], 2).unwrap();
        assert_eq!((s.micro_f1, s.macro_f1), (0.0, 0.0));
    }

    #[test]
    fn worked_example() {
        let s = score(&[0, 1, 1, 1, 2], &[0, 0, 1, 1, 2], 3).unwrap();
        assert!((s.micro_f1 - 0.8).abs() < 1e-12);
        assert!((s.macro_f1 - 0.822222).abs() < 1e-5);
    }

    #[test]
    fn absent_class_counts_in_macro() {
        let s = score(&[0, 0], &[0, 0], 2).unwrap();
        assert_eq!(s.micro_f1, 1.0);
        assert_eq!(s.macro_f1, 0.5);
    }

    #[test]
    fn length_mismatch() {
        assert!(matches!(score(&[0], &[0, 1], 2), Err(Error::Validation(_))));
    }

    #[test]
    fn aggregation() {
        let a = aggregate_runs(&[m(0.8, 0.8), m(0.9, 0.9)]).unwrap();
        assert!((a.micro_f1.mean - 0.85).abs() < 1e-12);
        assert!((a.micro_f1.std.unwrap() - 0.070711).abs() < 1e-6);
        let same = aggregate_runs(&[m(0.5, 0.4), m(0.5, 0.4), m(0.5, 0.4)]).unwrap();
        assert_eq!(same.macro_f1.std, Some(0.0));
        assert!(aggregate_runs(&[]).is_err());
        assert_eq!(aggregate_runs(&[m(0.3, 0.2)]).unwrap().micro_f1.std, None);
    }

    #[test]
    fn table_row_format() {
        let summary = RunSummary {
            runs: 5,
            micro_f1: MeanStd {
                mean: 0.8826,
                std: Some(0.0013),
            },
            macro_f1: MeanStd {
                mean: 0.8822,
                std: Some(0.0014),
            },
        };
        let t = render_table(&[ReportRow {
            name: "agnews".into(),
            summary,
        }]);
        let row = t.lines().nth(1).unwrap();
        assert!(row.contains("0.8826") && row.contains("0.0013"), "{row}");
    }
}
