//! Evaluation metrics: normalized edit distance for text and reading order,
//! TEDS / TEDS-S for tables, RMS-F1 for charts, BLEU-4 for formulas, and
//! region matching between predictions and ground truth.

pub mod bleu;
pub mod edit;
pub mod matching;
pub mod report;
pub mod rms;
pub mod ted;
pub mod teds;

pub use bleu::bleu4;
pub use edit::{levenshtein, norm_edit_distance, norm_levenshtein};
pub use matching::{match_regions, reading_order_edit, RegionMatching};
pub use report::{aggregate, Direction, EvalReport, MetricValue, OverallWeights, PageRow, SampleSum};
pub use rms::rms_f1;
pub use ted::{tree_edit_distance, EditCost, TreeNode, UnitCost};
pub use teds::{parse_table_tree, teds, CellCost, TableLabel, TableTree, TedsOptions};
