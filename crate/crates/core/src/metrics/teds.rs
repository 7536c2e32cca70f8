//! Tree-edit-distance similarity between HTML tables.

use serde::{Deserialize, Serialize};

use super::edit::norm_edit_distance;
use super::ted::{tree_edit_distance, EditCost, TreeNode};
use crate::error::{Error, Result};
use crate::otsl::{is_inline_tag, lex_html, HtmlItem};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TableLabel {
    Table,
    Row,
    Cell { colspan: usize, rowspan: usize, text: String },
}

pub type TableTree = TreeNode<TableLabel>;

/// How differing cell text is charged when both cells share structure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
#[derive(Default)]
pub enum CellCost {
    /// Normalized edit distance of the two texts.
    #[default]
    Graded,
    /// 1 when the normalized edit distance exceeds `threshold`, else 0.
    Binary { threshold: f64 },
}


#[derive(Debug, Clone, Copy, PartialEq)]
struct TedsCost {
    structure_only: bool,
    cell: CellCost,
}

impl EditCost<TableLabel> for TedsCost {
    fn insert(&self, _: &TableLabel) -> f64 {
        1.0
    }

    fn delete(&self, _: &TableLabel) -> f64 {
        1.0
    }

    fn relabel(&self, from: &TableLabel, to: &TableLabel) -> f64 {
        match (from, to) {
            (TableLabel::Table, TableLabel::Table) | (TableLabel::Row, TableLabel::Row) => 0.0,
            (
                TableLabel::Cell { colspan: c1, rowspan: r1, text: t1 },
                TableLabel::Cell { colspan: c2, rowspan: r2, text: t2 },
            ) => {
                if c1 != c2 || r1 != r2 {
                    1.0
                } else if self.structure_only {
                    0.0
                } else {
                    let d = norm_edit_distance(t1, t2);
                    match self.cell {
                        CellCost::Graded => d,
                        CellCost::Binary { threshold } => {
                            if d > threshold {
                                1.0
                            } else {
                                0.0
                            }
                        }
                    }
                }
            }
            _ => 1.0,
        }
    }
}

/// Builds the `table > tr > td` tree. Section wrappers are transparent,
/// `th` is treated as `td`, and cell text has its whitespace collapsed.
pub fn parse_table_tree(html: &str) -> Result<TableTree> {
    let mut root: Option<TableTree> = None;
    let mut depth_table = 0usize;
    let mut cell: Option<(usize, usize, String)> = None;
    let mut closed = false;

    fn flush(root: &mut Option<TableTree>, cell: &mut Option<(usize, usize, String)>) {
        if let Some((colspan, rowspan, text)) = cell.take() {
            let table = root.as_mut().expect("cell inside table");
            if table.children.is_empty() {
                table.children.push(TreeNode::leaf(TableLabel::Row));
            }
            let text = text.split_whitespace().collect::<Vec<_>>().join(" ");
            table
                .children
                .last_mut()
                .expect("row exists")
                .children
                .push(TreeNode::leaf(TableLabel::Cell { colspan, rowspan, text }));
        }
    }

    for item in lex_html(html).map_err(|e| Error::ParseFailure(e.to_string()))? {
        match item {
            HtmlItem::Open { name, rowspan, colspan } => match name.as_str() {
                "table" if depth_table == 0 && !closed => {
                    depth_table = 1;
                    root = Some(TreeNode::leaf(TableLabel::Table));
                }
                "table" => return Err(Error::ParseFailure("nested or repeated <table>".into())),
                _ if depth_table == 0 => return Err(Error::ParseFailure(format!("<{name}> outside <table>"))),
                "thead" | "tbody" | "tfoot" => flush(&mut root, &mut cell),
                "tr" => {
                    flush(&mut root, &mut cell);
                    root.as_mut().expect("inside table").children.push(TreeNode::leaf(TableLabel::Row));
                }
                "td" | "th" => {
                    flush(&mut root, &mut cell);
                    cell = Some((colspan, rowspan, String::new()));
                }
                n if cell.is_some() && is_inline_tag(n) => {
                    if n == "br" {
                        if let Some(c) = cell.as_mut() {
                            c.2.push(' ');
                        }
                    }
                }
                n => return Err(Error::ParseFailure(format!("unsupported tag <{n}>"))),
            },
            HtmlItem::Close(name) => match name.as_str() {
                "td" | "th" | "tr" | "thead" | "tbody" | "tfoot" => flush(&mut root, &mut cell),
                "table" => {
                    flush(&mut root, &mut cell);
                    depth_table = 0;
                    closed = true;
                }
                n if is_inline_tag(n) => {}
                n => return Err(Error::ParseFailure(format!("unsupported tag </{n}>"))),
            },
            HtmlItem::Text(text) => match cell.as_mut() {
                Some(c) => c.2.push_str(&text),
                None if text.trim().is_empty() => {}
                None => return Err(Error::ParseFailure(format!("text `{}` outside a cell", text.trim()))),
            },
        }
    }
    flush(&mut root, &mut cell);
    root.ok_or_else(|| Error::ParseFailure("no <table> element".into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TedsOptions {
    pub structure_only: bool,
    #[serde(default)]
    pub cell_cost: CellCost,
}

impl TedsOptions {
    pub fn structure() -> Self {
        Self {
            structure_only: true,
            cell_cost: CellCost::Graded,
        }
    }
}

/// `1 - TED / max(|pred|, |gt|)`.
pub fn teds_trees(pred: &TableTree, gt: &TableTree, opts: TedsOptions) -> f64 {
    let cost = TedsCost {
        structure_only: opts.structure_only,
        cell: opts.cell_cost,
    };
    let denom = pred.size().max(gt.size()) as f64;
    let d = tree_edit_distance(Some(pred), Some(gt), &cost);
    (1.0 - d / denom).clamp(0.0, 1.0)
}

pub fn teds(pred_html: &str, gt_html: &str, opts: TedsOptions) -> Result<f64> {
    let pred = parse_table_tree(pred_html)?;
    let gt = parse_table_tree(gt_html)?;
    Ok(teds_trees(&pred, &gt, opts))
}
