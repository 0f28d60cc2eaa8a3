//! Markdown tables for metrics, sparsity and grid results, and the
//! published results-table fixture format.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use popsent_core::experiments::{GridRow, SparsityRow};
use popsent_core::metrics::MetricsRow;
use popsent_core::SentenceMetrics;

/// Pipe table with columns padded to their widest cell.
pub fn markdown_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let mut s = String::from("|");
        for (c, w) in cells.iter().zip(&widths) {
            let _ = write!(s, " {c:<w$} |");
        }
        s.push('\n');
        s
    };
    let mut out = line(header.to_vec());
    out.push('|');
    for w in &widths {
        out.push_str(&"-".repeat(w + 2));
        out.push('|');
    }
    out.push('\n');
    for r in rows {
        out.push_str(&line(r.iter().map(String::as_str).collect()));
    }
    out
}

pub fn f2(x: f64) -> String {
    format!("{x:.2}")
}

pub const METRIC_COLUMNS: [&str; 9] = ["Data", "N", "Accuracy", "Precision", "Recall", "F1", "F2", "AuROC", "MCC"];

pub fn metrics_cells(label: &str, m: &MetricsRow) -> Vec<String> {
    vec![
        label.to_string(),
        m.n.to_string(),
        f2(m.accuracy),
        f2(m.precision),
        f2(m.recall),
        f2(m.f1),
        f2(m.f2),
        m.auroc.map(f2).unwrap_or_else(|| "n/a".into()),
        f2(m.mcc),
    ]
}

pub fn sentence_cells(m: &SentenceMetrics) -> Vec<String> {
    vec![f2(m.accuracy), f2(m.precision), f2(m.recall), f2(m.f1), f2(m.mcc)]
}

pub const SPARSITY_COLUMNS: [&str; 6] = ["Number of sentences per class", "Accuracy", "Precision", "Recall", "F1", "MCC"];

pub fn sparsity_table(rows: &[SparsityRow]) -> String {
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut c = vec![r.sentences_per_class.to_string()];
            c.extend(sentence_cells(&r.metrics));
            c
        })
        .collect();
    markdown_table(&SPARSITY_COLUMNS, &cells)
}

fn mean_std(mean: f64, std: f64) -> String {
    format!("{mean:.2} ({std:.2})")
}

pub const GRID_COLUMNS: [&str; 6] = ["Model", "Accuracy (std)", "Precision (std)", "Recall (std)", "f1 (std)", "MCC (std)"];

pub fn grid_cells(r: &GridRow) -> Vec<String> {
    let (m, s) = (&r.mean, &r.std);
    vec![
        r.variant.clone(),
        mean_std(m.accuracy, s.accuracy),
        mean_std(m.precision, s.precision),
        mean_std(m.recall, s.recall),
        mean_std(m.f1, s.f1),
        mean_std(m.mcc, s.mcc),
    ]
}

pub fn grid_table(rows: &[GridRow]) -> String {
    markdown_table(&GRID_COLUMNS, &rows.iter().map(grid_cells).collect::<Vec<_>>())
}

/// Reads a number as printed in a published table. A digits-only cell
/// with leading zeros and no decimal point ("0082") is a dropped decimal
/// point and reads as 0.82.
pub fn parse_table_number(cell: &str) -> Result<f64> {
    let c = cell.trim();
    if c.len() > 1 && c.starts_with('0') && c.bytes().all(|b| b.is_ascii_digit()) {
        let digits = c.trim_start_matches('0');
        return Ok(format!("0.{digits}").parse()?);
    }
    c.parse().with_context(|| format!("not a number: {cell:?}"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PublishedRow {
    pub data: String,
    pub metrics: MetricsRow,
}

/// Loads a results table in the published layout
/// (`Data,N,Accuracy,Precision,Recall,F1,F2,AuROC,MCC`).
pub fn load_published_table(path: &Path) -> Result<Vec<PublishedRow>> {
    crate::io::require(path, "results table")?;
    let mut rdr = csv::Reader::from_path(path)?;
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if header != METRIC_COLUMNS {
        bail!("{}: expected columns {}", path.display(), METRIC_COLUMNS.join(","));
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let ctx = || format!("{} line {}", path.display(), i + 2);
        let num = |k: usize| parse_table_number(&rec[k]).with_context(ctx);
        out.push(PublishedRow {
            data: rec[0].trim().to_string(),
            metrics: MetricsRow {
                n: rec[1].trim().parse().with_context(ctx)?,
                accuracy: num(2)?,
                precision: num(3)?,
                recall: num(4)?,
                f1: num(5)?,
                f2: num(6)?,
                auroc: Some(num(7)?),
                mcc: num(8)?,
            },
        });
    }
    Ok(out)
}

pub fn published_table(rows: &[PublishedRow]) -> String {
    let cells: Vec<Vec<String>> = rows.iter().map(|r| metrics_cells(&r.data, &r.metrics)).collect();
    markdown_table(&METRIC_COLUMNS, &cells)
}
