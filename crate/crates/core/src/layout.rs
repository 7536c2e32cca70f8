//! Coarse stage: which regions a page has and in what order they are read.
//! Regions come from ground-truth annotations, from a replayed detector
//! output (annotations plus an order matrix) or from a remote detector.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::doc_model::{clamp_region, Page, Region};
use crate::error::{Error, Result};
use crate::http::{HttpSettings, InFlightLimiter};
use crate::reading_order::{decode_order, geometric_order, PairwiseOrderMatrix, ReadingOrder};

pub const DEFAULT_DEDUP_IOU: f64 = 0.9;
pub const DEFAULT_MIN_SCORE: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayoutSource {
    #[serde(alias = "gt")]
    GroundTruth,
    #[serde(alias = "matrix")]
    MatrixReplay,
    #[serde(alias = "remote")]
    RemoteDetector,
}

impl std::str::FromStr for LayoutSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gt" | "ground_truth" | "groundtruth" => Ok(Self::GroundTruth),
            "matrix" | "matrix_replay" | "replay" => Ok(Self::MatrixReplay),
            "remote" | "detector" | "remote_detector" => Ok(Self::RemoteDetector),
            other => Err(Error::Config(format!("unknown layout source `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub endpoint: String,
    #[serde(default = "default_min_score")]
    pub min_score: f64,
    #[serde(default)]
    pub http: HttpSettings,
}

fn default_min_score() -> f64 {
    DEFAULT_MIN_SCORE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LayoutConfig {
    pub dedup_iou: f64,
    pub detector: Option<DetectorConfig>,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        Self {
            dedup_iou: DEFAULT_DEDUP_IOU,
            detector: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutResult {
    pub regions: Vec<Region>,
    /// Permutation of indices into `regions`.
    pub order: ReadingOrder,
    pub source: LayoutSource,
    /// Ids of regions dropped as degenerate or duplicate.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dropped: Vec<String>,
}

impl LayoutResult {
    pub fn ordered_regions(&self) -> impl Iterator<Item = &Region> + '_ {
        self.order.as_slice().iter().map(|&i| &self.regions[i])
    }
}

/// Indices of the regions kept by greedy duplicate suppression, ascending.
fn suppress_indices(regions: &[Region], iou_threshold: f64) -> Vec<usize> {
    let mut by_area: Vec<usize> = (0..regions.len()).collect();
    by_area.sort_by(|&a, &b| regions[b].bbox.area().total_cmp(&regions[a].bbox.area()).then(a.cmp(&b)));
    let mut kept: Vec<usize> = Vec::with_capacity(regions.len());
    for i in by_area {
        let r = &regions[i];
        let duplicate = kept
            .iter()
            .any(|&k| regions[k].category == r.category && regions[k].bbox.iou(&r.bbox) > iou_threshold);
        if !duplicate {
            kept.push(i);
        }
    }
    kept.sort_unstable();
    kept
}

/// Drops every region whose IoU with a larger kept region of the same
/// category exceeds the threshold. Survivors keep their input order.
pub fn suppress_duplicates(regions: &[Region], iou_threshold: f64) -> Vec<Region> {
    suppress_indices(regions, iou_threshold).into_iter().map(|i| regions[i].clone()).collect()
}

/// Order of `regions` by annotation: regions with `gt_order` first in that
/// order, the rest after them in geometric order.
pub fn annotated_order(regions: &[Region]) -> ReadingOrder {
    let (mut ranked, rest): (Vec<usize>, Vec<usize>) = (0..regions.len()).partition(|&i| regions[i].gt_order.is_some());
    if rest.is_empty() {
        ranked.sort_by_key(|&i| regions[i].gt_order);
        return ReadingOrder::new(ranked).expect("sorted indices form a permutation");
    }
    ranked.sort_by_key(|&i| regions[i].gt_order);
    let boxes: Vec<_> = rest.iter().map(|&i| regions[i].bbox).collect();
    let tail = geometric_order(&boxes);
    ranked.extend(tail.as_slice().iter().map(|&k| rest[k]));
    ReadingOrder::new(ranked).expect("annotated and geometric indices partition the regions")
}

fn check_matrix(rows: &[Vec<f64>], regions: usize) -> Result<PairwiseOrderMatrix> {
    let bad_row = rows.iter().position(|r| r.len() != regions);
    if rows.len() != regions || bad_row.is_some() {
        let detail = match bad_row {
            Some(i) if rows.len() == regions => format!("row {i} has {} entries", rows[i].len()),
            _ => format!("matrix has {} rows", rows.len()),
        };
        return Err(Error::MatrixShapeMismatch { regions, detail });
    }
    PairwiseOrderMatrix::new(rows.to_vec()).map_err(|e| Error::MatrixShapeMismatch {
        regions,
        detail: e.to_string(),
    })
}

/// Clamps to the page and drops degenerate boxes, then suppresses
/// duplicates. Returns survivors with their original indices.
fn clean(page: &Page, regions: &[Region], iou: f64, dropped: &mut Vec<String>) -> (Vec<Region>, Vec<usize>) {
    let mut clamped = Vec::with_capacity(regions.len());
    let mut origin = Vec::with_capacity(regions.len());
    for (i, r) in regions.iter().enumerate() {
        match clamp_region(r, page) {
            Ok(c) => {
                clamped.push(c);
                origin.push(i);
            }
            Err(e) => {
                tracing::warn!(page = %page.id, region = %r.id, "dropping region: {e}");
                dropped.push(r.id.clone());
            }
        }
    }
    let keep = suppress_indices(&clamped, iou);
    let mut k = keep.iter().peekable();
    for (j, r) in clamped.iter().enumerate() {
        if k.peek() == Some(&&j) {
            k.next();
        } else {
            tracing::debug!(page = %page.id, region = %r.id, "suppressed duplicate region");
            dropped.push(r.id.clone());
        }
    }
    let origin = keep.iter().map(|&j| origin[j]).collect();
    let regions = keep.into_iter().map(|j| clamped[j].clone()).collect();
    (regions, origin)
}

/// Produces regions and their order for one page. Pages are independent;
/// the remote detector shares an in-flight limit with the recognizers.
pub struct LayoutAnalyzer {
    source: LayoutSource,
    config: LayoutConfig,
    limiter: Arc<InFlightLimiter>,
    #[cfg(feature = "remote")]
    client: Option<crate::http::JsonClient>,
}

impl LayoutAnalyzer {
    pub fn new(source: LayoutSource, config: LayoutConfig, limiter: Arc<InFlightLimiter>) -> Result<Self> {
        if !(config.dedup_iou > 0.0 && config.dedup_iou <= 1.0) {
            return Err(Error::Config(format!("dedup IoU must lie in (0, 1], got {}", config.dedup_iou)));
        }
        if source == LayoutSource::RemoteDetector && config.detector.is_none() {
            return Err(Error::Config("the remote layout source needs a detector endpoint".into()));
        }
        #[cfg(feature = "remote")]
        let client = match (&config.detector, source) {
            (Some(d), LayoutSource::RemoteDetector) => Some(crate::http::JsonClient::new(d.http.clone())?),
            _ => None,
        };
        Ok(Self {
            source,
            config,
            limiter,
            #[cfg(feature = "remote")]
            client,
        })
    }

    pub fn source(&self) -> LayoutSource {
        self.source
    }

    pub fn analyze(&self, page: &Page) -> Result<LayoutResult> {
        let mut dropped = Vec::new();
        let (regions, order) = match self.source {
            LayoutSource::GroundTruth => {
                if !page.annotated {
                    return Err(Error::MissingAnnotations(page.id.clone()));
                }
                let (regions, _) = clean(page, &page.regions, self.config.dedup_iou, &mut dropped);
                let order = annotated_order(&regions);
                (regions, order)
            }
            LayoutSource::MatrixReplay => {
                if !page.annotated {
                    return Err(Error::MissingAnnotations(page.id.clone()));
                }
                let rows = page.order_matrix.as_deref().ok_or_else(|| Error::MatrixShapeMismatch {
                    regions: page.regions.len(),
                    detail: "page has no order matrix to replay".into(),
                })?;
                let matrix = check_matrix(rows, page.regions.len())?;
                let (regions, origin) = clean(page, &page.regions, self.config.dedup_iou, &mut dropped);
                let boxes: Vec<_> = regions.iter().map(|r| r.bbox).collect();
                let order = decode_order(&matrix.submatrix(&origin), &boxes)?;
                (regions, order)
            }
            LayoutSource::RemoteDetector => {
                let (detected, matrix) = self.detect(page)?;
                let (regions, origin) = clean(page, &detected, self.config.dedup_iou, &mut dropped);
                let boxes: Vec<_> = regions.iter().map(|r| r.bbox).collect();
                let order = match matrix {
                    Some(m) => decode_order(&m.submatrix(&origin), &boxes)?,
                    None => geometric_order(&boxes),
                };
                (regions, order)
            }
        };
        Ok(LayoutResult {
            regions,
            order,
            source: self.source,
            dropped,
        })
    }

    /// Detections above the score threshold and, if the service sent one,
    /// the order matrix restricted to them.
    #[cfg(feature = "remote")]
    fn detect(&self, page: &Page) -> Result<(Vec<Region>, Option<PairwiseOrderMatrix>)> {
        use base64::Engine;

        let cfg = self.config.detector.as_ref().expect("checked in new");
        let path = page
            .image_path
            .as_ref()
            .ok_or_else(|| Error::MissingImage(format!("page `{}` has no image path", page.id)))?;
        let bytes = std::fs::read(path).map_err(|e| Error::MissingImage(format!("{}: {e}", path.display())))?;
        let body = serde_json::json!({
            "image": base64::engine::general_purpose::STANDARD.encode(bytes),
            "width": page.width,
            "height": page.height,
        });
        let client = self.client.as_ref().expect("remote source has a client");
        let response = {
            let _permit = self.limiter.acquire();
            client.post_json(&cfg.endpoint, &body)
        }
        .map_err(|e| Error::DetectorUnavailable(e.to_string()))?;
        parse_detections(&page.id, &response, cfg.min_score)
    }

    #[cfg(not(feature = "remote"))]
    fn detect(&self, _page: &Page) -> Result<(Vec<Region>, Option<PairwiseOrderMatrix>)> {
        let _ = &self.limiter;
        Err(Error::Config("built without the `remote` feature".into()))
    }
}

#[derive(Deserialize)]
struct Detection {
    bbox: [f64; 4],
    category: String,
    #[serde(default = "full_score")]
    score: f64,
}

fn full_score() -> f64 {
    1.0
}

#[derive(Deserialize)]
struct DetectorResponse {
    regions: Vec<Detection>,
    #[serde(default)]
    order_matrix: Option<Vec<Vec<f64>>>,
}

/// Decodes a detector response. Detections below `min_score` or with an
/// unusable box are discarded together with their matrix rows and columns.
pub fn parse_detections(
    page_id: &str,
    response: &serde_json::Value,
    min_score: f64,
) -> Result<(Vec<Region>, Option<PairwiseOrderMatrix>)> {
    let resp: DetectorResponse = serde_json::from_value(response.clone())
        .map_err(|e| Error::DetectorUnavailable(format!("malformed detector response for page `{page_id}`: {e}")))?;
    let matrix = resp
        .order_matrix
        .as_deref()
        .map(|rows| check_matrix(rows, resp.regions.len()))
        .transpose()?;
    let mut keep = Vec::new();
    let mut regions = Vec::new();
    for (i, d) in resp.regions.iter().enumerate() {
        if d.score < min_score {
            continue;
        }
        let Some(bbox) = crate::doc_model::BBox::from_raw(d.bbox) else {
            tracing::warn!(page = page_id, detection = i, "discarding detection with unusable box");
            continue;
        };
        keep.push(i);
        regions.push(Region::new(
            format!("det-{i}"),
            bbox,
            crate::doc_model::ElementCategory::from_label(&d.category),
        ));
    }
    Ok((regions, matrix.map(|m| m.submatrix(&keep))))
}

/// One-off analysis with a private limiter.
pub fn analyze(page: &Page, source: LayoutSource, config: &LayoutConfig) -> Result<LayoutResult> {
    LayoutAnalyzer::new(source, config.clone(), Arc::new(InFlightLimiter::new(1)))?.analyze(page)
}
