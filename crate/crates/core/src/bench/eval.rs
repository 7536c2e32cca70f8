use crate::assemble::AssembledPage;
use crate::doc_model::{Page, Region};
use crate::layout::annotated_order;
use crate::metrics::{
    bleu4, match_regions, norm_edit_distance, reading_order_edit, rms_f1, teds, PageRow, TedsOptions,
};
use crate::otsl::{self, OtslMode};
use crate::reading_order::ReadingOrder;
use crate::recognizers::{formula_body, normalize_payload, RecognitionTask};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    /// Minimum IoU for a prediction to count as a ground-truth block.
    pub match_iou: f64,
    pub teds: TedsOptions,
    pub otsl_mode: OtslMode,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            match_iou: 0.5,
            teds: TedsOptions::default(),
            otsl_mode: OtslMode::Interleaved,
        }
    }
}

/// HTML for a table payload given as OTSL or as an HTML table.
fn table_html(payload: &str, mode: OtslMode) -> Option<String> {
    let t = payload.trim();
    if t.starts_with('<') {
        return otsl::html_to_grid(t).ok().map(|g| otsl::grid_to_html(&g));
    }
    let seq = otsl::parse_otsl(t, mode).ok()?;
    otsl::otsl_to_grid(&seq).ok().map(|g| otsl::grid_to_html(&g))
}

/// Scores one predicted page against its ground truth.
///
/// Each ground-truth block with content contributes one sample to its
/// category: matched blocks are compared with the prediction, unmatched
/// ones get the worst score. Unmatched predictions are ignored. Blocks
/// without content are skipped and flag the page.
pub fn evaluate_page(gt: &Page, pred: Option<&AssembledPage>, opts: &EvalOptions) -> PageRow {
    let mut row = PageRow {
        page_id: gt.id.clone(),
        ..Default::default()
    };
    if !gt.annotated {
        row.flags.push("MissingGroundTruth: page has no annotations".into());
        return row;
    }
    if pred.is_none() {
        row.flags.push("MissingPrediction".into());
    }
    let elements = pred.map_or(&[][..], |p| &p.elements[..]);
    let pred_regions: Vec<Region> = elements.iter().map(|e| Region::new(e.id.clone(), e.bbox, e.category)).collect();
    let matching = match_regions(&pred_regions, &gt.regions, opts.match_iou);
    let mut pred_for_gt = vec![None; gt.regions.len()];
    for (&p, &g) in &matching {
        pred_for_gt[g] = Some(p);
    }

    for (gi, region) in gt.regions.iter().enumerate() {
        let Some(task) = RecognitionTask::for_category(region.category) else { continue };
        let Some(content) = region.gt_content.as_deref() else {
            row.flags.push(format!("MissingGroundTruth: region `{}`", region.id));
            continue;
        };
        let payload = pred_for_gt[gi].map(|p| elements[p].payload.as_str());
        match task {
            RecognitionTask::Ocr => {
                let gt_text = normalize_payload(task, content);
                let d = payload.map_or(1.0, |p| norm_edit_distance(&normalize_payload(task, p), &gt_text));
                row.text_edit.push(d);
            }
            RecognitionTask::FormulaLatex => {
                let gt_tex = normalize_payload(task, content);
                let s = payload.map_or(0.0, |p| bleu4(formula_body(p), formula_body(&gt_tex)));
                row.formula.push(s);
            }
            RecognitionTask::TableOtsl => {
                let Some(gt_html) = table_html(content, opts.otsl_mode) else {
                    row.flags.push(format!("UnparseableGroundTruth: table `{}`", region.id));
                    continue;
                };
                let pred_html = payload.and_then(|p| table_html(p, opts.otsl_mode));
                let score = |o: TedsOptions| pred_html.as_deref().map_or(0.0, |h| teds(h, &gt_html, o).unwrap_or(0.0));
                row.table_teds.push(score(opts.teds));
                row.table_teds_s.push(score(TedsOptions {
                    structure_only: true,
                    ..opts.teds
                }));
            }
            RecognitionTask::ChartTable => {
                if rms_f1(content, content).is_err() {
                    row.flags.push(format!("UnparseableGroundTruth: chart `{}`", region.id));
                    continue;
                }
                row.chart_rms_f1.push(payload.map_or(0.0, |p| rms_f1(p, content).unwrap_or(0.0)));
            }
        }
    }

    if !gt.regions.is_empty() {
        let gt_order = annotated_order(&gt.regions);
        let pred_order = ReadingOrder::identity(elements.len());
        row.reading_order_edit.push(reading_order_edit(&pred_order, &gt_order, &matching));
    }
    row
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assemble::AssembledElement;
    use crate::doc_model::{BBox, ElementCategory};

    fn gt_page() -> Page {
        let b = |y: f64| BBox::new(0.0, y, 100.0, y + 10.0).unwrap();
        Page::new(
            "p",
            200,
            200,
            vec![
                Region::new("t", b(0.0), ElementCategory::Text).with_content("kitten").with_order(0),
                Region::new("f", b(20.0), ElementCategory::Formula).with_content("\\[x + y\\]").with_order(1),
                Region::new("tab", b(40.0), ElementCategory::Table)
                    .with_content("fcel \"a\" fcel \"b\" nl")
                    .with_order(2),
            ],
        )
        .unwrap()
    }

    fn pred_from(gt: &Page, payloads: &[&str]) -> AssembledPage {
        AssembledPage {
            order: ReadingOrder::identity(gt.regions.len()),
            elements: gt
                .regions
                .iter()
                .zip(payloads)
                .map(|(r, p)| AssembledElement {
                    id: r.id.clone(),
                    category: r.category,
                    payload: p.to_string(),
                    valid: true,
                    bbox: r.bbox,
                })
                .collect(),
            markdown: String::new(),
        }
    }

    #[test]
    fn perfect_prediction() {
        let gt = gt_page();
        let pred = pred_from(&gt, &["kitten", "\\[x + y\\]", "fcel \"a\" fcel \"b\" nl"]);
        let row = evaluate_page(&gt, Some(&pred), &EvalOptions::default());
        assert_eq!(row.text_edit.mean(), Some(0.0));
        assert_eq!(row.formula.mean(), Some(1.0));
        assert_eq!(row.table_teds.mean(), Some(1.0));
        assert_eq!(row.table_teds_s.mean(), Some(1.0));
        assert_eq!(row.reading_order_edit.mean(), Some(0.0));
        assert!(row.flags.is_empty());
    }

    #[test]
    fn text_error_and_structure_only_table_match() {
        let gt = gt_page();
        let pred = pred_from(&gt, &["sitting", "\\[x + y\\]", "fcel \"a\" fcel \"c\" nl"]);
        let row = evaluate_page(&gt, Some(&pred), &EvalOptions::default());
        assert!((row.text_edit.mean().unwrap() - 3.0 / 7.0).abs() < 1e-12);
        assert!(row.table_teds.mean().unwrap() < 1.0);
        assert_eq!(row.table_teds_s.mean(), Some(1.0));
    }

    #[test]
    fn missing_prediction_scores_worst() {
        let gt = gt_page();
        let row = evaluate_page(&gt, None, &EvalOptions::default());
        assert_eq!(row.text_edit.mean(), Some(1.0));
        assert_eq!(row.formula.mean(), Some(0.0));
        assert_eq!(row.reading_order_edit.mean(), Some(1.0));
        assert_eq!(row.flags, ["MissingPrediction"]);
    }

    #[test]
    fn missing_ground_truth_is_flagged() {
        let mut gt = gt_page();
        gt.annotated = false;
        let row = evaluate_page(&gt, None, &EvalOptions::default());
        assert!(row.text_edit.mean().is_none());
        assert!(row.flags[0].starts_with("MissingGroundTruth"));
    }
}
