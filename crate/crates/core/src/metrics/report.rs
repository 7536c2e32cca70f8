//! Per-page metric rows and their aggregation into the benchmark report.

use serde::{Deserialize, Serialize};

/// Running sum of per-sample scores.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SampleSum {
    pub sum: f64,
    pub count: usize,
}

impl SampleSum {
    pub fn push(&mut self, v: f64) {
        self.sum += v;
        self.count += 1;
    }

    pub fn merge(&mut self, other: &SampleSum) {
        self.sum += other.sum;
        self.count += other.count;
    }

    pub fn mean(&self) -> Option<f64> {
        (self.count > 0).then(|| self.sum / self.count as f64)
    }
}

/// Scores for one page. Block-level metrics are summed over the page's
/// matched blocks; reading order contributes one sample per page.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PageRow {
    pub page_id: String,
    pub text_edit: SampleSum,
    pub formula: SampleSum,
    pub table_teds: SampleSum,
    pub table_teds_s: SampleSum,
    pub chart_rms_f1: SampleSum,
    pub reading_order_edit: SampleSum,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    HigherBetter,
    LowerBetter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricValue {
    pub name: String,
    pub value: f64,
    pub direction: Direction,
    pub count: usize,
}

/// Weights of the text, formula and table components of `Overall`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverallWeights {
    pub text: f64,
    pub formula: f64,
    pub table: f64,
}

impl Default for OverallWeights {
    fn default() -> Self {
        Self {
            text: 1.0,
            formula: 1.0,
            table: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub pages: usize,
    pub flagged_pages: Vec<String>,
    pub overall: Option<MetricValue>,
    pub text_edit: Option<MetricValue>,
    pub formula: Option<MetricValue>,
    pub table_teds: Option<MetricValue>,
    pub table_teds_s: Option<MetricValue>,
    pub reading_order_edit: Option<MetricValue>,
    pub chart_rms_f1: Option<MetricValue>,
}

fn metric(name: &str, s: &SampleSum, direction: Direction) -> Option<MetricValue> {
    s.mean().map(|value| MetricValue {
        name: name.to_string(),
        value,
        direction,
        count: s.count,
    })
}

/// Sample means per category plus the weighted `Overall` score on a 0-100
/// scale, taken over the components that have samples.
pub fn aggregate(rows: &[PageRow], weights: OverallWeights) -> EvalReport {
    let mut total = PageRow::default();
    let mut flagged = Vec::new();
    for row in rows {
        total.text_edit.merge(&row.text_edit);
        total.formula.merge(&row.formula);
        total.table_teds.merge(&row.table_teds);
        total.table_teds_s.merge(&row.table_teds_s);
        total.chart_rms_f1.merge(&row.chart_rms_f1);
        total.reading_order_edit.merge(&row.reading_order_edit);
        if !row.flags.is_empty() {
            flagged.push(row.page_id.clone());
        }
    }
    use Direction::*;
    let text_edit = metric("Text-Edit", &total.text_edit, LowerBetter);
    let formula = metric("Formula", &total.formula, HigherBetter);
    let table_teds = metric("Table-TEDS", &total.table_teds, HigherBetter);

    let components = [
        text_edit.as_ref().map(|m| ((1.0 - m.value) * 100.0, weights.text)),
        formula.as_ref().map(|m| (m.value * 100.0, weights.formula)),
        table_teds.as_ref().map(|m| (m.value * 100.0, weights.table)),
    ];
    let present: Vec<(f64, f64)> = components.into_iter().flatten().filter(|(_, w)| *w > 0.0).collect();
    let weight_sum: f64 = present.iter().map(|(_, w)| w).sum();
    let overall = (weight_sum > 0.0).then(|| MetricValue {
        name: "Overall".into(),
        value: present.iter().map(|(v, w)| v * w).sum::<f64>() / weight_sum,
        direction: HigherBetter,
        count: present.len(),
    });

    EvalReport {
        pages: rows.len(),
        flagged_pages: flagged,
        overall,
        text_edit,
        formula,
        table_teds,
        table_teds_s: metric("Table-TEDS-S", &total.table_teds_s, HigherBetter),
        reading_order_edit: metric("Reading-Order-Edit", &total.reading_order_edit, LowerBetter),
        chart_rms_f1: metric("Chart-RMS-F1", &total.chart_rms_f1, HigherBetter),
    }
}

impl EvalReport {
    /// Single-row Markdown table in the benchmark's column layout: edit
    /// distances as fractions, similarity scores as percentages.
    pub fn to_markdown(&self) -> String {
        let fmt = |m: &Option<MetricValue>, scale: f64, digits: usize| {
            m.as_ref().map_or_else(|| "-".to_string(), |m| format!("{:.*}", digits, m.value * scale))
        };
        let mut out = String::new();
        out.push_str("| Overall↑ | Text-Edit↓ | Formula↑ | Table-TEDS↑ | Table-TEDS-S↑ | Reading-Order-Edit↓ |\n");
        out.push_str("| --- | --- | --- | --- | --- | --- |\n");
        out.push_str(&format!(
            "| {} | {} | {} | {} | {} | {} |\n",
            fmt(&self.overall, 1.0, 2),
            fmt(&self.text_edit, 1.0, 3),
            fmt(&self.formula, 100.0, 2),
            fmt(&self.table_teds, 100.0, 2),
            fmt(&self.table_teds_s, 100.0, 2),
            fmt(&self.reading_order_edit, 1.0, 3),
        ));
        out
    }
}
