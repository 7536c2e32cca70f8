use std::collections::BTreeMap;

use super::edit::norm_levenshtein;
use crate::doc_model::Region;
use crate::reading_order::ReadingOrder;

/// Prediction index to ground-truth index.
pub type RegionMatching = BTreeMap<usize, usize>;

/// Greedy one-to-one pairing of same-category regions by descending IoU,
/// keeping only pairs with IoU at least `iou_min`. Ties resolve by ground
/// truth index, then prediction index.
pub fn match_regions(pred: &[Region], gt: &[Region], iou_min: f64) -> RegionMatching {
    let mut pairs = Vec::new();
    for (pi, p) in pred.iter().enumerate() {
        for (gi, g) in gt.iter().enumerate() {
            if p.category != g.category {
                continue;
            }
            let iou = p.bbox.iou(&g.bbox);
            if iou >= iou_min && iou > 0.0 {
                pairs.push((iou, gi, pi));
            }
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut gt_used = vec![false; gt.len()];
    let mut matching = RegionMatching::new();
    for (_, gi, pi) in pairs {
        if !gt_used[gi] && !matching.contains_key(&pi) {
            gt_used[gi] = true;
            matching.insert(pi, gi);
        }
    }
    matching
}

/// Normalized edit distance between the ground-truth indices visited in
/// predicted order (unmatched predictions dropped) and the true order.
pub fn reading_order_edit(pred: &ReadingOrder, gt: &ReadingOrder, matching: &RegionMatching) -> f64 {
    if gt.is_empty() {
        return if pred.is_empty() { 0.0 } else { 1.0 };
    }
    let mapped: Vec<usize> = pred.as_slice().iter().filter_map(|p| matching.get(p).copied()).collect();
    norm_levenshtein(&mapped, gt.as_slice())
}
