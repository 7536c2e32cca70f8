//! Pages, regions and the geometry shared by every stage of the pipeline.

use std::collections::HashSet;
use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned box in continuous pixel coordinates, origin top-left.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct BBox {
    x0: f64,
    y0: f64,
    x1: f64,
    y1: f64,
}

impl BBox {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        let ok = [x0, y0, x1, y1].iter().all(|v| v.is_finite() && *v >= 0.0) && x0 <= x1 && y0 <= y1;
        if ok {
            Ok(Self { x0, y0, x1, y1 })
        } else {
            Err(Error::InvalidBBox([x0, y0, x1, y1]))
        }
    }

    /// Builds a box from raw detector coordinates, which may be negative or
    /// reversed. Callers clamp the result against the page afterwards.
    pub(crate) fn from_raw(c: [f64; 4]) -> Option<Self> {
        if !c.iter().all(|v| v.is_finite()) {
            return None;
        }
        let (x0, x1) = (c[0].min(c[2]), c[0].max(c[2]));
        let (y0, y1) = (c[1].min(c[3]), c[1].max(c[3]));
        Some(Self {
            x0: x0.max(0.0),
            y0: y0.max(0.0),
            x1: x1.max(0.0),
            y1: y1.max(0.0),
        })
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }
    pub fn y0(&self) -> f64 {
        self.y0
    }
    pub fn x1(&self) -> f64 {
        self.x1
    }
    pub fn y1(&self) -> f64 {
        self.y1
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn coords(&self) -> [f64; 4] {
        [self.x0, self.y0, self.x1, self.y1]
    }

    /// Intersection with `other`, or `None` when the overlap has zero area.
    pub fn intersect(&self, other: &BBox) -> Option<BBox> {
        let x0 = self.x0.max(other.x0);
        let y0 = self.y0.max(other.y0);
        let x1 = self.x1.min(other.x1);
        let y1 = self.y1.min(other.y1);
        (x1 > x0 && y1 > y0).then_some(BBox { x0, y0, x1, y1 })
    }

    pub fn iou(&self, other: &BBox) -> f64 {
        let inter = self.intersect(other).map_or(0.0, |b| b.area());
        let union = self.area() + other.area() - inter;
        if union <= 0.0 {
            0.0
        } else {
            inter / union
        }
    }

    pub fn translate(&self, dx: f64, dy: f64) -> Result<BBox> {
        BBox::new(self.x0 + dx, self.y0 + dy, self.x1 + dx, self.y1 + dy)
    }

    pub fn scale(&self, k: f64) -> Result<BBox> {
        BBox::new(self.x0 * k, self.y0 * k, self.x1 * k, self.y1 * k)
    }
}

impl TryFrom<[f64; 4]> for BBox {
    type Error = Error;

    fn try_from(c: [f64; 4]) -> Result<Self> {
        BBox::new(c[0], c[1], c[2], c[3])
    }
}

impl From<BBox> for [f64; 4] {
    fn from(b: BBox) -> Self {
        b.coords()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElementCategory {
    Text,
    Title,
    Formula,
    Table,
    Chart,
    Figure,
    Other,
}

impl ElementCategory {
    pub const ALL: [ElementCategory; 7] = [
        Self::Text,
        Self::Title,
        Self::Formula,
        Self::Table,
        Self::Chart,
        Self::Figure,
        Self::Other,
    ];

    /// Maps an input label onto the closed category set; anything
    /// unrecognised becomes `Other`.
    pub fn from_label(label: &str) -> Self {
        match label.trim().to_ascii_lowercase().as_str() {
            "text" | "paragraph" | "plain text" | "plain_text" => Self::Text,
            "title" | "heading" | "header" | "doc_title" | "paragraph_title" => Self::Title,
            "formula" | "equation" | "display_formula" | "isolate_formula" => Self::Formula,
            "table" => Self::Table,
            "chart" => Self::Chart,
            "figure" | "image" | "picture" => Self::Figure,
            _ => Self::Other,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Text => "text",
            Self::Title => "title",
            Self::Formula => "formula",
            Self::Table => "table",
            Self::Chart => "chart",
            Self::Figure => "figure",
            Self::Other => "other",
        }
    }
}

impl fmt::Display for ElementCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub id: String,
    pub bbox: BBox,
    pub category: ElementCategory,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_content: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_order: Option<u32>,
}

impl Region {
    pub fn new(id: impl Into<String>, bbox: BBox, category: ElementCategory) -> Self {
        Self {
            id: id.into(),
            bbox,
            category,
            gt_content: None,
            gt_order: None,
        }
    }

    pub fn with_content(mut self, content: impl Into<String>) -> Self {
        self.gt_content = Some(content.into());
        self
    }

    pub fn with_order(mut self, order: u32) -> Self {
        self.gt_order = Some(order);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Page {
    pub id: String,
    pub width: u32,
    pub height: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_path: Option<PathBuf>,
    pub regions: Vec<Region>,
    /// False when the source record carried no region annotations at all
    /// (as opposed to an annotated page with zero regions).
    #[serde(default = "default_true")]
    pub annotated: bool,
    /// Replayed pairwise precedence scores over `regions`, if supplied.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order_matrix: Option<Vec<Vec<f64>>>,
}

fn default_true() -> bool {
    true
}

impl Page {
    pub fn new(id: impl Into<String>, width: u32, height: u32, regions: Vec<Region>) -> Result<Self> {
        let page = Self {
            id: id.into(),
            width,
            height,
            image_path: None,
            regions,
            annotated: true,
            order_matrix: None,
        };
        page.validate()?;
        Ok(page)
    }

    /// Checks the page-level invariants: positive size, unique region ids and
    /// distinct ground-truth order values.
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidPage(format!(
                "page `{}` has non-positive size {}x{}",
                self.id, self.width, self.height
            )));
        }
        let mut ids = HashSet::new();
        let mut orders = HashSet::new();
        for r in &self.regions {
            if !ids.insert(r.id.as_str()) {
                return Err(Error::InvalidPage(format!("duplicate region id `{}` on page `{}`", r.id, self.id)));
            }
            if let Some(o) = r.gt_order {
                if !orders.insert(o) {
                    return Err(Error::InvalidPage(format!("duplicate order value {o} on page `{}`", self.id)));
                }
            }
        }
        Ok(())
    }

    pub fn bounds(&self) -> BBox {
        BBox {
            x0: 0.0,
            y0: 0.0,
            x1: self.width as f64,
            y1: self.height as f64,
        }
    }

    pub fn area(&self) -> f64 {
        self.width as f64 * self.height as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub source_id: String,
    pub pages: Vec<Page>,
}

impl Document {
    pub fn new(source_id: impl Into<String>, pages: Vec<Page>) -> Result<Self> {
        if pages.is_empty() {
            return Err(Error::InvalidPage("document has no pages".into()));
        }
        Ok(Self {
            source_id: source_id.into(),
            pages,
        })
    }
}

/// Exact area of the union of `boxes`, by coordinate compression over x
/// and interval merging within each slab.
pub fn union_area(boxes: &[BBox]) -> f64 {
    let boxes: Vec<&BBox> = boxes.iter().filter(|b| b.area() > 0.0).collect();
    if boxes.is_empty() {
        return 0.0;
    }
    let mut xs: Vec<f64> = boxes.iter().flat_map(|b| [b.x0, b.x1]).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();

    let mut total = 0.0;
    let mut spans: Vec<(f64, f64)> = Vec::with_capacity(boxes.len());
    for w in xs.windows(2) {
        let (left, right) = (w[0], w[1]);
        spans.clear();
        spans.extend(boxes.iter().filter(|b| b.x0 <= left && b.x1 >= right).map(|b| (b.y0, b.y1)));
        if spans.is_empty() {
            continue;
        }
        spans.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut covered = 0.0;
        let (mut start, mut end) = spans[0];
        for &(s, e) in &spans[1..] {
            if s > end {
                covered += end - start;
                start = s;
                end = e;
            } else if e > end {
                end = e;
            }
        }
        covered += end - start;
        total += covered * (right - left);
    }
    total
}

/// Fraction of the page covered by the union of its region boxes.
pub fn valid_area_ratio(page: &Page) -> f64 {
    let bounds = page.bounds();
    let clipped: Vec<BBox> = page.regions.iter().filter_map(|r| r.bbox.intersect(&bounds)).collect();
    (union_area(&clipped) / page.area()).clamp(0.0, 1.0)
}

/// Intersects the region box with the page bounds.
pub fn clamp_region(region: &Region, page: &Page) -> Result<Region> {
    match region.bbox.intersect(&page.bounds()) {
        Some(bbox) => Ok(Region {
            bbox,
            ..region.clone()
        }),
        None => Err(Error::DegenerateRegion(region.id.clone())),
    }
}

/// Crop rectangle for a region: the box grown by `margin` pixels on every
/// side, clipped to the page.
pub fn crop_spec(region: &Region, page: &Page, margin: f64) -> BBox {
    let b = region.bbox;
    let m = margin.max(0.0);
    BBox {
        x0: (b.x0 - m).max(0.0),
        y0: (b.y0 - m).max(0.0),
        x1: (b.x1 + m).min(page.width as f64),
        y1: (b.y1 + m).min(page.height as f64),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bb(x0: f64, y0: f64, x1: f64, y1: f64) -> BBox {
        BBox::new(x0, y0, x1, y1).unwrap()
    }

    fn page_with(w: u32, h: u32, boxes: &[BBox]) -> Page {
        let regions = boxes
            .iter()
            .enumerate()
            .map(|(i, b)| Region::new(format!("r{i}"), *b, ElementCategory::Text))
            .collect();
        Page::new("p", w, h, regions).unwrap()
    }

    #[test]
    fn valid_area_examples() {
        let p = page_with(1000, 1000, &[bb(0.0, 0.0, 650.0, 600.0)]);
        assert!((valid_area_ratio(&p) - 0.39).abs() < 1e-12);
        assert_eq!(valid_area_ratio(&page_with(1000, 1000, &[])), 0.0);
        let b = bb(0.0, 0.0, 500.0, 500.0);
        assert!((valid_area_ratio(&page_with(1000, 1000, &[b, b])) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn union_of_overlapping_boxes() {
        // Two 10x10 squares overlapping in a 5x5 corner.
        let a = bb(0.0, 0.0, 10.0, 10.0);
        let b = bb(5.0, 5.0, 15.0, 15.0);
        assert!((union_area(&[a, b]) - 175.0).abs() < 1e-12);
        // Nested box adds nothing.
        assert!((union_area(&[a, bb(2.0, 2.0, 3.0, 3.0)]) - 100.0).abs() < 1e-12);
    }

    #[test]
    fn clamp_examples() {
        let page = page_with(100, 100, &[]);
        let r = Region::new("a", BBox::from_raw([-5.0, -5.0, 50.0, 50.0]).unwrap(), ElementCategory::Text);
        assert_eq!(clamp_region(&r, &page).unwrap().bbox, bb(0.0, 0.0, 50.0, 50.0));

        let inside = Region::new("b", bb(10.0, 10.0, 20.0, 30.0), ElementCategory::Table);
        assert_eq!(clamp_region(&inside, &page).unwrap(), inside);

        let outside = Region::new("c", bb(200.0, 200.0, 300.0, 300.0), ElementCategory::Text);
        assert!(matches!(clamp_region(&outside, &page), Err(Error::DegenerateRegion(id)) if id == "c"));
    }

    #[test]
    fn crop_examples() {
        let page = page_with(100, 100, &[]);
        let r = Region::new("a", bb(10.0, 10.0, 20.0, 20.0), ElementCategory::Text);
        assert_eq!(crop_spec(&r, &page, 0.0), bb(10.0, 10.0, 20.0, 20.0));
        assert_eq!(crop_spec(&r, &page, 2.0), bb(8.0, 8.0, 22.0, 22.0));
        let corner = Region::new("b", bb(0.0, 0.0, 20.0, 20.0), ElementCategory::Text);
        assert_eq!(crop_spec(&corner, &page, 5.0), bb(0.0, 0.0, 25.0, 25.0));
    }

    #[test]
    fn bbox_rejects_bad_coordinates() {
        assert!(BBox::new(5.0, 0.0, 1.0, 1.0).is_err());
        assert!(BBox::new(-1.0, 0.0, 1.0, 1.0).is_err());
        assert!(BBox::new(0.0, 0.0, f64::NAN, 1.0).is_err());
    }

    #[test]
    fn page_rejects_duplicate_ids_and_orders() {
        let r = Region::new("a", bb(0.0, 0.0, 1.0, 1.0), ElementCategory::Text);
        assert!(Page::new("p", 10, 10, vec![r.clone(), r.clone()]).is_err());
        let a = r.clone().with_order(1);
        let b = Region { id: "b".into(), ..r.clone() }.with_order(1);
        assert!(Page::new("p", 10, 10, vec![a, b]).is_err());
        assert!(Page::new("p", 0, 10, vec![]).is_err());
    }

    #[test]
    fn unknown_category_maps_to_other() {
        assert_eq!(ElementCategory::from_label("Table"), ElementCategory::Table);
        assert_eq!(ElementCategory::from_label("seal"), ElementCategory::Other);
    }
}
