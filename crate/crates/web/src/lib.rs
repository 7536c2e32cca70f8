//! wasm-bindgen bindings behind `www/index.html`. Every export takes and
//! returns plain strings so the page needs no glue beyond `JSON.parse`.

use serde_json::json;
use vrdoc::doc_model::BBox;
use vrdoc::otsl::{self, OtslMode};
use vrdoc::reading_order::{self, PairwiseOrderMatrix};
use vrdoc::resolution::{self, MergeFactor, Tier};
use wasm_bindgen::prelude::*;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// Resize plans for a `width`×`height` crop under the S, M and L tiers.
#[wasm_bindgen]
pub fn plan_tiers(width: u32, height: u32, merge_factor: u32) -> Result<String, String> {
    let merge = MergeFactor::try_from(merge_factor).map_err(err)?;
    let mut plans = Vec::new();
    for tier in Tier::STANDARD {
        let p = resolution::plan_resize_with(width, height, tier, merge).map_err(err)?;
        plans.push(json!({
            "tier": tier.name.to_string(),
            "max_pixels": tier.max_pixels,
            "width": p.dst_w,
            "height": p.dst_h,
            "patches": [p.patches_w, p.patches_h],
            "tokens": p.tokens,
            "aspect_pinned": p.aspect_pinned,
        }));
    }
    Ok(serde_json::Value::Array(plans).to_string())
}

/// Decodes a reading order from a JSON pairwise score matrix and a JSON list
/// of `[x0, y0, x1, y1]` boxes. Returns the decoded order next to the purely
/// geometric one.
#[wasm_bindgen]
pub fn decode_order(matrix_json: &str, boxes_json: &str) -> Result<String, String> {
    let scores: Vec<Vec<f64>> = serde_json::from_str(matrix_json).map_err(|e| format!("matrix: {e}"))?;
    let raw: Vec<[f64; 4]> = serde_json::from_str(boxes_json).map_err(|e| format!("boxes: {e}"))?;
    let boxes = raw.into_iter().map(BBox::try_from).collect::<vrdoc::Result<Vec<_>>>().map_err(err)?;
    let matrix = PairwiseOrderMatrix::new(scores).map_err(err)?;
    let order = reading_order::decode_order(&matrix, &boxes).map_err(err)?;
    let geometric = reading_order::geometric_order(&boxes);
    Ok(json!({
        "order": order.as_slice(),
        "geometric": geometric.as_slice(),
        "copeland": matrix.copeland(),
        "borda": matrix.borda(),
        "kendall_tau": reading_order::kendall_tau_distance(&order, &geometric),
    })
    .to_string())
}

/// Validates OTSL text and renders it as an HTML table. `structure_only`
/// selects the token-only dialect.
#[wasm_bindgen]
pub fn otsl_to_html(text: &str, structure_only: bool) -> Result<String, String> {
    let mode = if structure_only { OtslMode::StructureOnly } else { OtslMode::Interleaved };
    let seq = otsl::parse_otsl(text, mode).map_err(err)?;
    if let Err(violations) = otsl::validate(&seq) {
        return Err(violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n"));
    }
    let grid = otsl::otsl_to_grid(&seq).map_err(err)?;
    Ok(otsl::grid_to_html(&grid))
}
