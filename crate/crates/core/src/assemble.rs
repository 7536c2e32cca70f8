//! Fine-stage outputs merged back into one page in reading order, rendered
//! as Markdown with a JSON sidecar.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::doc_model::{BBox, ElementCategory};
use crate::error::{Error, Result};
use crate::layout::LayoutResult;
use crate::otsl::{self, OtslMode};
use crate::reading_order::ReadingOrder;
use crate::recognizers::{RecognitionTask, RecognizedElement};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssembledElement {
    pub id: String,
    pub category: ElementCategory,
    pub payload: String,
    pub valid: bool,
    pub bbox: BBox,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssembledPage {
    /// Reading order over the layout's regions.
    pub order: ReadingOrder,
    /// Emitted elements in reading order.
    pub elements: Vec<AssembledElement>,
    pub markdown: String,
}

/// Merges recognized elements in layout order. Every routable region must
/// be recognized exactly once; figure placeholders are optional and
/// synthesized when absent. Regions of category `Other` are not emitted.
pub fn assemble(layout: &LayoutResult, recognized: &[RecognizedElement]) -> Result<AssembledPage> {
    assemble_with(layout, recognized, OtslMode::default())
}

pub fn assemble_with(layout: &LayoutResult, recognized: &[RecognizedElement], mode: OtslMode) -> Result<AssembledPage> {
    let mut by_id: BTreeMap<&str, &RecognizedElement> = BTreeMap::new();
    for el in recognized {
        if by_id.insert(el.region.id.as_str(), el).is_some() {
            return Err(Error::CoverageMismatch(format!("region `{}` recognized twice", el.region.id)));
        }
    }
    let layout_ids: BTreeSet<&str> = layout.regions.iter().map(|r| r.id.as_str()).collect();
    if let Some(extra) = by_id.keys().find(|id| !layout_ids.contains(*id)) {
        return Err(Error::CoverageMismatch(format!("region `{extra}` is not part of the layout")));
    }

    let mut elements = Vec::new();
    let mut blocks = Vec::new();
    for region in layout.ordered_regions() {
        let routable = RecognitionTask::for_category(region.category).is_some();
        let found = by_id.get(region.id.as_str()).copied();
        let el = match (routable, found, region.category) {
            (true, Some(el), _) => el.clone(),
            (true, None, _) => {
                return Err(Error::CoverageMismatch(format!("region `{}` was not recognized", region.id)));
            }
            (false, found, ElementCategory::Figure) => {
                found.cloned().unwrap_or_else(|| RecognizedElement::placeholder(region.clone()))
            }
            (false, Some(_), _) => {
                return Err(Error::CoverageMismatch(format!(
                    "region `{}` of category {} has no recognizer",
                    region.id, region.category
                )));
            }
            (false, None, _) => continue,
        };
        blocks.push(render_block(&el, mode));
        elements.push(AssembledElement {
            id: region.id.clone(),
            category: region.category,
            payload: el.payload,
            valid: el.valid,
            bbox: region.bbox,
        });
    }

    let mut markdown = blocks.join("\n\n");
    if !markdown.is_empty() {
        markdown.push('\n');
    }
    Ok(AssembledPage {
        order: layout.order.clone(),
        elements,
        markdown,
    })
}

fn html_comment(text: &str) -> String {
    format!("<!-- {} -->", text.replace("--", "- -").replace('\n', " "))
}

fn render_block(el: &RecognizedElement, mode: OtslMode) -> String {
    let body = render_payload(el, mode);
    if el.valid {
        return body;
    }
    let task = el.task.map_or("element", |t| t.as_str());
    let note = html_comment(&format!("invalid {task} `{}`: {}", el.region.id, el.diagnostics.join("; ")));
    if body.is_empty() {
        note
    } else {
        format!("{note}\n{body}")
    }
}

fn render_payload(el: &RecognizedElement, mode: OtslMode) -> String {
    let payload = el.payload.trim_end_matches('\n');
    match (el.region.category, el.task) {
        (ElementCategory::Figure, _) => format!("![](#region-{})", el.region.id),
        (ElementCategory::Title, _) => {
            let line = payload.split_whitespace().collect::<Vec<_>>().join(" ");
            format!("# {line}")
        }
        (_, Some(RecognitionTask::TableOtsl)) if el.valid => otsl::parse_otsl(payload, mode)
            .and_then(|seq| otsl::otsl_to_grid(&seq))
            .map(|grid| otsl::grid_to_html(&grid))
            .unwrap_or_else(|_| payload.to_string()),
        _ => payload.to_string(),
    }
}

/// Canonical JSON: sorted keys, compact, one terminal LF.
pub fn to_json(page: &AssembledPage) -> String {
    let value = serde_json::to_value(page).expect("assembled pages always serialize");
    let mut out = serde_json::to_string(&value).expect("JSON values always serialize");
    out.push('\n');
    out
}

pub fn from_json(text: &str) -> Result<AssembledPage> {
    Ok(serde_json::from_str(text)?)
}
