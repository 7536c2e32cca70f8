//! JSONL page datasets: one JSON object per page.
//!
//! ```text
//! {"id": "p1", "image": "p1.png", "width": 1000, "height": 1400,
//!  "regions": [{"id": "r0", "bbox": [0, 0, 500, 80], "category": "title",
//!               "content": "Intro", "order": 0}],
//!  "order_matrix": [[0]]}
//! ```
//!
//! `id`, `image`, `order_matrix` and the per-region `id`, `content` and
//! `order` keys are optional; unknown keys are ignored. A record without a
//! `regions` key is an unannotated page.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Lines, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::doc_model::{BBox, ElementCategory, Page, Region};
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
struct RawRegion {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    id: Option<String>,
    bbox: [f64; 4],
    category: String,
    #[serde(default)]
    content: Option<String>,
    #[serde(default)]
    order: Option<u32>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawPage {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    id: Option<String>,
    #[serde(default)]
    image: Option<PathBuf>,
    width: u32,
    height: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    regions: Option<Vec<RawRegion>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    order_matrix: Option<Vec<Vec<f64>>>,
}

/// A line that could not be turned into a page.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Malformed {
    pub line: usize,
    pub detail: String,
}

impl std::fmt::Display for Malformed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.detail)
    }
}

/// Converts one record. `image_root` resolves relative image paths.
pub fn parse_page_line(text: &str, line: usize, image_root: Option<&Path>) -> std::result::Result<Page, String> {
    let raw: RawPage = serde_json::from_str(text).map_err(|e| e.to_string())?;
    let annotated = raw.regions.is_some();
    let mut regions = Vec::new();
    for (i, r) in raw.regions.unwrap_or_default().into_iter().enumerate() {
        let bbox = BBox::new(r.bbox[0], r.bbox[1], r.bbox[2], r.bbox[3]).map_err(|e| format!("region {i}: {e}"))?;
        regions.push(Region {
            id: r.id.unwrap_or_else(|| format!("r{i}")),
            bbox,
            category: ElementCategory::from_label(&r.category),
            gt_content: r.content,
            gt_order: r.order,
        });
    }
    let image_path = raw.image.map(|p| match image_root {
        Some(root) if p.is_relative() => root.join(p),
        _ => p,
    });
    let page = Page {
        id: raw.id.unwrap_or_else(|| format!("page-{line:06}")),
        width: raw.width,
        height: raw.height,
        image_path,
        regions,
        annotated,
        order_matrix: raw.order_matrix,
    };
    page.validate().map_err(|e| e.to_string())?;
    Ok(page)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReadOptions {
    /// Largest tolerated fraction of malformed non-blank lines.
    pub max_malformed_fraction: f64,
}

impl Default for ReadOptions {
    fn default() -> Self {
        Self {
            max_malformed_fraction: 0.1,
        }
    }
}

/// Streams pages from a JSONL source, one line at a time. Malformed lines
/// are yielded as diagnostics; blank lines are skipped.
pub struct DatasetReader<R> {
    lines: Lines<R>,
    line: usize,
    image_root: Option<PathBuf>,
    pub pages: usize,
    pub malformed: usize,
}

impl DatasetReader<BufReader<File>> {
    pub fn open(path: &Path, image_root: Option<&Path>) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::Dataset {
            path: path.to_path_buf(),
            detail: e.to_string(),
        })?;
        Ok(Self::new(BufReader::new(file), image_root))
    }
}

impl<R: BufRead> DatasetReader<R> {
    pub fn new(reader: R, image_root: Option<&Path>) -> Self {
        Self {
            lines: reader.lines(),
            line: 0,
            image_root: image_root.map(Path::to_path_buf),
            pages: 0,
            malformed: 0,
        }
    }

    /// Fraction of non-blank lines seen so far that were malformed.
    pub fn malformed_fraction(&self) -> f64 {
        let seen = self.pages + self.malformed;
        if seen == 0 {
            0.0
        } else {
            self.malformed as f64 / seen as f64
        }
    }
}

impl<R: BufRead> Iterator for DatasetReader<R> {
    type Item = std::result::Result<Page, Malformed>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let text = match self.lines.next()? {
                Ok(t) => t,
                Err(e) => {
                    self.line += 1;
                    self.malformed += 1;
                    return Some(Err(Malformed {
                        line: self.line,
                        detail: e.to_string(),
                    }));
                }
            };
            self.line += 1;
            if text.trim().is_empty() {
                continue;
            }
            return Some(match parse_page_line(&text, self.line, self.image_root.as_deref()) {
                Ok(page) => {
                    self.pages += 1;
                    Ok(page)
                }
                Err(detail) => {
                    self.malformed += 1;
                    Err(Malformed { line: self.line, detail })
                }
            });
        }
    }
}

/// Reads a whole dataset, failing when too many lines are malformed.
pub fn load_dataset(path: &Path, image_root: Option<&Path>, opts: ReadOptions) -> Result<(Vec<Page>, Vec<Malformed>)> {
    let mut reader = DatasetReader::open(path, image_root)?;
    let mut pages = Vec::new();
    let mut bad = Vec::new();
    for item in reader.by_ref() {
        match item {
            Ok(p) => pages.push(p),
            Err(m) => {
                tracing::warn!(path = %path.display(), "{m}");
                bad.push(m);
            }
        }
    }
    check_malformed(path, &reader, opts)?;
    Ok((pages, bad))
}

pub fn check_malformed<R>(path: &Path, reader: &DatasetReader<R>, opts: ReadOptions) -> Result<()>
where
    R: BufRead,
{
    if reader.malformed > 0 && reader.malformed_fraction() > opts.max_malformed_fraction {
        return Err(Error::Dataset {
            path: path.to_path_buf(),
            detail: format!(
                "{} of {} lines malformed (limit {:.0}%)",
                reader.malformed,
                reader.pages + reader.malformed,
                opts.max_malformed_fraction * 100.0
            ),
        });
    }
    Ok(())
}

fn to_raw(page: &Page) -> RawPage {
    RawPage {
        id: Some(page.id.clone()),
        image: page.image_path.clone(),
        width: page.width,
        height: page.height,
        regions: page.annotated.then(|| {
            page.regions
                .iter()
                .map(|r| RawRegion {
                    id: Some(r.id.clone()),
                    bbox: r.bbox.coords(),
                    category: r.category.as_str().to_string(),
                    content: r.gt_content.clone(),
                    order: r.gt_order,
                })
                .collect()
        }),
        order_matrix: page.order_matrix.clone(),
    }
}

pub fn page_to_line(page: &Page) -> String {
    serde_json::to_string(&to_raw(page)).expect("pages always serialize")
}

pub fn write_dataset(path: &Path, pages: &[Page]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for p in pages {
        writeln!(w, "{}", page_to_line(p))?;
    }
    w.flush()?;
    Ok(())
}
