//! Seeded synthetic pages with canonical ground truth, for pipeline tests,
//! demos and the benchmark harness.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::doc_model::{BBox, ElementCategory, Page, Region};
use crate::otsl::{self, Cell, OtslMode, TableGrid};
use crate::pipe_table::PipeTable;
use crate::reading_order::{matrix_from_order, ReadingOrder};
use crate::recognizers::{normalize_payload, RecognitionTask};

const WORDS: &[&str] = &[
    "layout", "region", "page", "model", "table", "value", "result", "method", "parsing", "document", "order", "token",
    "image", "text", "score", "input", "output", "stage", "detector", "matrix", "column", "budget", "patch", "cell",
];

const FORMULAS: &[&str] = &[
    "E = m c^{2}",
    "\\frac{a}{b} + \\sqrt{x}",
    "\\sum_{i=1}^{n} x_{i}^{2}",
    "\\int_{0}^{1} f(t) \\, dt",
    "\\alpha \\beta = \\gamma",
    "p(y \\mid x) = \\prod_{t} p(y_{t})",
    "\\mathbf{A} \\mathbf{x} = \\mathbf{b}",
];

pub const PAGE_WIDTH: u32 = 1000;
pub const PAGE_HEIGHT: u32 = 1400;

fn words<R: Rng>(rng: &mut R, n: usize) -> String {
    (0..n).map(|_| *WORDS.choose(rng).expect("non-empty")).collect::<Vec<_>>().join(" ")
}

/// A random grid of at most `max_rows x max_cols` slots tiled by cells
/// with random row and column spans. Headers are never set.
pub fn random_grid<R: Rng>(rng: &mut R, max_rows: usize, max_cols: usize) -> TableGrid {
    let rows = rng.gen_range(1..=max_rows.max(1));
    let cols = rng.gen_range(1..=max_cols.max(1));
    let mut taken = vec![false; rows * cols];
    let mut cells = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if taken[r * cols + c] {
                continue;
            }
            let (mut h, mut w) = (1, 1);
            if rng.gen_bool(0.3) {
                let mut max_w = 0;
                while c + max_w < cols && !taken[r * cols + c + max_w] {
                    max_w += 1;
                }
                w = rng.gen_range(1..=max_w);
                h = rng.gen_range(1..=rows - r);
                // Rows below may already be claimed by earlier spans.
                while (r..r + h).any(|rr| (c..c + w).any(|cc| taken[rr * cols + cc])) {
                    h -= 1;
                }
            }
            for rr in r..r + h {
                for cc in c..c + w {
                    taken[rr * cols + cc] = true;
                }
            }
            let content = if rng.gen_bool(0.15) {
                String::new()
            } else if rng.gen_bool(0.5) {
                format!("{}", rng.gen_range(0..1000))
            } else {
                let n = rng.gen_range(1..=2);
                words(rng, n)
            };
            cells.push(Cell {
                row: r,
                col: c,
                rowspan: h,
                colspan: w,
                content,
                header: false,
            });
        }
    }
    TableGrid { rows, cols, cells }
}

fn random_chart<R: Rng>(rng: &mut R) -> String {
    let series = rng.gen_range(1..=3);
    let mut header = vec!["Year".to_string()];
    header.extend((0..series).map(|s| format!("Series {}", (b'A' + s as u8) as char)));
    let rows = (0..rng.gen_range(2..=5))
        .map(|i| {
            let mut row = vec![format!("{}", 2018 + i)];
            row.extend((0..series).map(|_| format!("{:.1}", rng.gen_range(0.0..100.0))));
            row
        })
        .collect();
    PipeTable { header, rows }.to_markdown()
}

fn content_for<R: Rng>(rng: &mut R, category: ElementCategory) -> Option<String> {
    let raw = match category {
        ElementCategory::Title => {
            let section = rng.gen_range(1..10);
            let n = rng.gen_range(1..=4);
            format!("{section} {}", words(rng, n))
        }
        ElementCategory::Text => {
            let lines = rng.gen_range(1..=3);
            (0..lines)
                .map(|_| {
                    let n = rng.gen_range(3..=10);
                    words(rng, n)
                })
                .collect::<Vec<_>>()
                .join("\n")
        }
        ElementCategory::Formula => format!("\\[{}\\]", FORMULAS.choose(rng).expect("non-empty")),
        ElementCategory::Table => otsl::grid_to_otsl(&random_grid(rng, 4, 4)).to_text(OtslMode::Interleaved),
        ElementCategory::Chart => random_chart(rng),
        ElementCategory::Figure | ElementCategory::Other => return None,
    };
    let task = RecognitionTask::for_category(category).expect("content categories are routable");
    Some(normalize_payload(task, &raw))
}

const CATEGORY_MIX: &[(ElementCategory, u32)] = &[
    (ElementCategory::Text, 6),
    (ElementCategory::Title, 2),
    (ElementCategory::Formula, 2),
    (ElementCategory::Table, 2),
    (ElementCategory::Chart, 1),
    (ElementCategory::Figure, 1),
];

fn pick_category<R: Rng>(rng: &mut R) -> ElementCategory {
    CATEGORY_MIX.choose_weighted(rng, |(_, w)| *w).expect("weights are positive").0
}

/// One page of 4 to 12 non-overlapping blocks in one or two columns, with
/// ground-truth content, reading order and the matching order matrix.
/// Regions are stored shuffled so index order differs from reading order.
pub fn synthetic_page<R: Rng>(rng: &mut R, id: &str) -> Page {
    let n: usize = rng.gen_range(4..=12);
    let two_columns = n >= 6 && rng.gen_bool(0.5);
    let margin = 60.0;
    let gap = 40.0;
    let columns: Vec<(f64, f64)> = if two_columns {
        let w = (PAGE_WIDTH as f64 - 2.0 * margin - gap) / 2.0;
        vec![(margin, margin + w), (margin + w + gap, PAGE_WIDTH as f64 - margin)]
    } else {
        vec![(margin, PAGE_WIDTH as f64 - margin)]
    };
    let per_column = n.div_ceil(columns.len());
    let slot = (PAGE_HEIGHT as f64 - 2.0 * margin) / per_column as f64;

    let mut blocks = Vec::with_capacity(n);
    for k in 0..n {
        let (x0, x1) = columns[k / per_column];
        let y0 = margin + (k % per_column) as f64 * slot;
        let h = slot * rng.gen_range(0.5..0.9);
        let category = pick_category(rng);
        let bbox = BBox::new(x0, y0, x1, (y0 + h).round()).expect("inside the page");
        blocks.push((bbox, category, content_for(rng, category)));
    }

    let mut index: Vec<usize> = (0..n).collect();
    index.shuffle(rng);
    let mut regions = vec![None; n];
    for (reading_pos, &slot_idx) in index.iter().enumerate() {
        let (bbox, category, content) = blocks[reading_pos].clone();
        let mut r = Region::new(format!("b{reading_pos:02}"), bbox, category).with_order(reading_pos as u32);
        r.gt_content = content;
        regions[slot_idx] = Some(r);
    }
    let regions: Vec<Region> = regions.into_iter().map(|r| r.expect("every slot filled")).collect();
    let order = ReadingOrder::new(index).expect("shuffled indices are a permutation");
    let mut page = Page::new(id, PAGE_WIDTH, PAGE_HEIGHT, regions).expect("synthetic pages are valid");
    page.order_matrix = Some(matrix_from_order(&order).rows().to_vec());
    page
}

pub fn synthetic_dataset(pages: usize, seed: u64) -> Vec<Page> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..pages).map(|i| synthetic_page(&mut rng, &format!("synth-{i:04}"))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reading_order::decode_order;

    #[test]
    fn seeded_and_valid() {
        let a = synthetic_dataset(5, 11);
        assert_eq!(a, synthetic_dataset(5, 11));
        assert_ne!(a, synthetic_dataset(5, 12));
        for page in &a {
            page.validate().unwrap();
            for r in &page.regions {
                if let Some(task) = RecognitionTask::for_category(r.category) {
                    let c = r.gt_content.as_deref().unwrap();
                    assert_eq!(normalize_payload(task, c), c);
                }
            }
        }
    }

    #[test]
    fn matrix_encodes_gt_order() {
        for page in synthetic_dataset(10, 3) {
            let m = crate::reading_order::PairwiseOrderMatrix::new(page.order_matrix.clone().unwrap()).unwrap();
            let boxes: Vec<_> = page.regions.iter().map(|r| r.bbox).collect();
            let order = decode_order(&m, &boxes).unwrap();
            let ranks: Vec<u32> = order.as_slice().iter().map(|&i| page.regions[i].gt_order.unwrap()).collect();
            assert!(ranks.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn random_grids_tile() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..500 {
            random_grid(&mut rng, 8, 8).check_tiling().unwrap();
        }
    }
}
