//! Relative-mapping-similarity F1 between chart data tables.

use super::edit::norm_edit_distance;
use crate::error::Result;
use crate::pipe_table::PipeTable;

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub row: String,
    pub column: String,
    pub value: String,
}

impl Entry {
    fn key(&self) -> String {
        format!("{} {}", self.row, self.column)
    }
}

/// Flattens a table into (row key, column key, value) triples. The first
/// column holds the row keys; a single-column table keys rows by header.
pub fn table_entries(table: &PipeTable) -> Vec<Entry> {
    let mut out = Vec::new();
    if table.header.len() == 1 {
        for row in &table.rows {
            out.push(Entry {
                row: String::new(),
                column: table.header[0].clone(),
                value: row[0].clone(),
            });
        }
        return out;
    }
    for row in &table.rows {
        for (c, value) in row.iter().enumerate().skip(1) {
            out.push(Entry {
                row: row[0].clone(),
                column: table.header[c].clone(),
                value: value.clone(),
            });
        }
    }
    out
}

/// Parses a chart value after stripping percent signs, thousands
/// separators and currency symbols.
pub fn parse_numeric(value: &str) -> Option<f64> {
    let cleaned: String = value
        .chars()
        .filter(|c| !matches!(c, '%' | ',' | '$' | '€' | '£' | '¥') && !c.is_whitespace())
        .collect();
    if cleaned.is_empty() {
        return None;
    }
    cleaned.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn relative_error(pred: f64, gt: f64) -> f64 {
    if gt == 0.0 {
        if pred == 0.0 {
            0.0
        } else {
            1.0
        }
    } else {
        ((pred - gt) / gt).abs()
    }
}

/// Key similarity times value similarity. Numeric pairs compare by
/// relative error, anything else by normalized edit distance.
pub fn entry_similarity(pred: &Entry, gt: &Entry) -> f64 {
    let key_sim = 1.0 - norm_edit_distance(&pred.key(), &gt.key());
    let value_sim = match (parse_numeric(&pred.value), parse_numeric(&gt.value)) {
        (Some(p), Some(g)) => 1.0 - relative_error(p, g).min(1.0),
        _ => 1.0 - norm_edit_distance(&pred.value, &gt.value),
    };
    key_sim * value_sim
}

pub fn rms_f1_entries(pred: &[Entry], gt: &[Entry]) -> f64 {
    match (pred.is_empty(), gt.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let mut pairs = Vec::with_capacity(pred.len() * gt.len());
    for (pi, p) in pred.iter().enumerate() {
        for (gi, g) in gt.iter().enumerate() {
            let s = entry_similarity(p, g);
            if s > 0.0 {
                pairs.push((s, gi, pi));
            }
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut pred_used = vec![false; pred.len()];
    let mut gt_used = vec![false; gt.len()];
    let mut total = 0.0;
    for (s, gi, pi) in pairs {
        if !pred_used[pi] && !gt_used[gi] {
            pred_used[pi] = true;
            gt_used[gi] = true;
            total += s;
        }
    }
    let precision = total / pred.len() as f64;
    let recall = total / gt.len() as f64;
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

pub fn rms_f1(pred_table: &str, gt_table: &str) -> Result<f64> {
    let pred = table_entries(&PipeTable::parse(pred_table)?);
    let gt = table_entries(&PipeTable::parse(gt_table)?);
    Ok(rms_f1_entries(&pred, &gt))
}
