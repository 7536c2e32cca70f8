//! Benchmark harness behind the command-line tool: end-to-end parsing with
//! throughput accounting, evaluation against ground truth, and visual-token
//! accounting per resolution tier.

mod config;
mod eval;
mod pipeline;
mod throughput;

use std::collections::HashSet;
use std::fs;
use std::io::{BufRead, BufWriter};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{BackendKind, RunConfig};
pub use eval::{evaluate_page, EvalOptions};
pub use pipeline::{crop_size, region_plans, PageOutput, Pipeline};
pub use throughput::{peak_rss_bytes, ThroughputReport};

use crate::assemble::{from_json, to_json};
use crate::dataset::{check_malformed, DatasetReader, Malformed, ReadOptions};
use crate::doc_model::{clamp_region, valid_area_ratio, Page, Region};
use crate::error::{Error, Result};
use crate::metrics::{aggregate, EvalReport, PageRow};
use crate::resolution::{MergeFactor, Tier};

/// File stem used for a page's outputs: the id with anything outside
/// `[A-Za-z0-9._-]` replaced by `_`.
pub fn output_stem(page_id: &str) -> String {
    let stem: String = page_id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-') { c } else { '_' })
        .collect();
    match stem.as_str() {
        "" | "." | ".." => format!("_{stem}"),
        _ => stem,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageFailure {
    pub page_id: String,
    pub error: String,
}

fn worker_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .thread_name(|i| format!("vrdoc-worker-{i}"))
        .build()
        .map_err(|e| Error::Config(format!("cannot start {jobs} workers: {e}")))
}

/// Streams the dataset in batches, handing each batch to `f`.
fn for_each_batch<F>(cfg: &RunConfig, malformed: &mut Vec<Malformed>, mut f: F) -> Result<()>
where
    F: FnMut(Vec<Page>) -> Result<()>,
{
    let path = cfg.dataset_path()?;
    let mut reader = DatasetReader::open(path, cfg.image_root.as_deref())?;
    loop {
        let mut batch = Vec::with_capacity(cfg.batch_size.min(4096));
        for item in reader.by_ref() {
            match item {
                Ok(p) => {
                    batch.push(p);
                    if batch.len() == cfg.batch_size {
                        break;
                    }
                }
                Err(m) => {
                    tracing::warn!(path = %path.display(), "{m}");
                    malformed.push(m);
                }
            }
        }
        if batch.is_empty() {
            break;
        }
        f(batch)?;
    }
    check_malformed(path, &reader, read_options(cfg))
}

fn read_options(cfg: &RunConfig) -> ReadOptions {
    ReadOptions {
        max_malformed_fraction: cfg.max_malformed_fraction,
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, contents)?;
    Ok(())
}

fn write_failures(out_dir: &Path, failures: &[PageFailure]) -> Result<()> {
    let path = out_dir.join("errors.log");
    if failures.is_empty() {
        if path.exists() {
            fs::remove_file(path)?;
        }
        return Ok(());
    }
    let text: String = failures.iter().map(|f| format!("{}: {}\n", f.page_id, f.error)).collect();
    write_file(&path, &text)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParseOutcome {
    pub throughput: ThroughputReport,
    pub failures: Vec<PageFailure>,
    pub malformed: Vec<Malformed>,
    pub report_path: PathBuf,
}

/// Runs the full pipeline over the dataset, writing `{page}.md` and
/// `{page}.json` per page plus a throughput report. The clock covers the
/// whole run, reading and writing included.
pub fn cmd_parse(cfg: &RunConfig) -> Result<ParseOutcome> {
    let pipeline = Pipeline::new(cfg)?;
    let pool = worker_pool(cfg.jobs)?;
    fs::create_dir_all(&cfg.out_dir)?;

    let start = Instant::now();
    let mut failures = Vec::new();
    let mut malformed = Vec::new();
    let mut seen = HashSet::new();
    let (mut pages, mut tokens) = (0usize, 0u64);
    for_each_batch(cfg, &mut malformed, |batch| {
        let results: Vec<Result<PageOutput>> =
            pool.install(|| batch.par_iter().map(|p| pipeline.process_page(p)).collect());
        for (page, result) in batch.iter().zip(results) {
            let stem = output_stem(&page.id);
            if !seen.insert(stem.clone()) {
                failures.push(PageFailure {
                    page_id: page.id.clone(),
                    error: format!("duplicate page id (output `{stem}` already written)"),
                });
                continue;
            }
            match result {
                Ok(out) => {
                    write_file(&cfg.out_dir.join(format!("{stem}.md")), &out.page.markdown)?;
                    write_file(&cfg.out_dir.join(format!("{stem}.json")), &to_json(&out.page))?;
                    pages += 1;
                    tokens += out.tokens;
                }
                Err(e) => {
                    tracing::error!(page = %page.id, "page aborted: {e}");
                    failures.push(PageFailure {
                        page_id: page.id.clone(),
                        error: e.to_string(),
                    });
                }
            }
        }
        Ok(())
    })?;
    let throughput = ThroughputReport::new(pages, tokens, start.elapsed().as_secs_f64()).with_peak_memory();

    write_failures(&cfg.out_dir, &failures)?;
    let report_path = cfg.report.clone().unwrap_or_else(|| cfg.out_dir.join("throughput.json"));
    write_file(&report_path, &(serde_json::to_string_pretty(&throughput)? + "\n"))?;
    Ok(ParseOutcome {
        throughput,
        failures,
        malformed,
        report_path,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOutcome {
    pub report: EvalReport,
    pub rows: Vec<PageRow>,
    pub failures: Vec<PageFailure>,
    pub malformed: Vec<Malformed>,
    pub report_path: PathBuf,
}

/// Scores predictions against the dataset's ground truth. Predictions are
/// read from `pred_dir` when set, otherwise produced by running the
/// pipeline. Writes per-page rows (JSONL), the aggregate report (JSON) and
/// its Markdown table.
pub fn cmd_eval(cfg: &RunConfig) -> Result<EvalOutcome> {
    cfg.validate()?;
    let pipeline = match cfg.pred_dir {
        Some(_) => None,
        None => Some(Pipeline::new(cfg)?),
    };
    let opts = EvalOptions {
        match_iou: cfg.match_iou,
        teds: cfg.teds_options()?,
        otsl_mode: cfg.otsl_mode,
    };
    let pool = worker_pool(cfg.jobs)?;
    fs::create_dir_all(&cfg.out_dir)?;

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut malformed = Vec::new();
    for_each_batch(cfg, &mut malformed, |batch| {
        let scored: Vec<(PageRow, Option<PageFailure>)> = pool.install(|| {
            batch
                .par_iter()
                .map(|page| {
                    let (pred, failure) = predict(cfg, pipeline.as_ref(), page);
                    (evaluate_page(page, pred.as_ref(), &opts), failure)
                })
                .collect()
        });
        for (row, failure) in scored {
            rows.push(row);
            failures.extend(failure);
        }
        Ok(())
    })?;

    let report = aggregate(&rows, cfg.weights());
    let mut lines = String::new();
    for row in &rows {
        lines.push_str(&serde_json::to_string(row)?);
        lines.push('\n');
    }
    write_file(&cfg.out_dir.join("eval_rows.jsonl"), &lines)?;
    write_file(&cfg.out_dir.join("eval_report.md"), &report.to_markdown())?;
    let report_path = cfg.report.clone().unwrap_or_else(|| cfg.out_dir.join("eval_report.json"));
    write_file(&report_path, &(serde_json::to_string_pretty(&report)? + "\n"))?;
    write_failures(&cfg.out_dir, &failures)?;
    Ok(EvalOutcome {
        report,
        rows,
        failures,
        malformed,
        report_path,
    })
}

fn predict(
    cfg: &RunConfig,
    pipeline: Option<&Pipeline>,
    page: &Page,
) -> (Option<crate::assemble::AssembledPage>, Option<PageFailure>) {
    let fail = |error: String| PageFailure {
        page_id: page.id.clone(),
        error,
    };
    match (pipeline, &cfg.pred_dir) {
        (Some(p), _) => match p.process_page(page) {
            Ok(out) => (Some(out.page), None),
            Err(e) => (None, Some(fail(e.to_string()))),
        },
        (None, Some(dir)) => {
            let path = dir.join(format!("{}.json", output_stem(&page.id)));
            match fs::read_to_string(&path).map_err(Error::from).and_then(|t| from_json(&t)) {
                Ok(pred) => (Some(pred), None),
                Err(e) => (None, Some(fail(format!("{}: {e}", path.display())))),
            }
        }
        (None, None) => unreachable!("either a pipeline or a prediction directory"),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenRow {
    pub page_id: String,
    pub regions: usize,
    pub valid_area_ratio: f64,
    pub tokens_s: u64,
    pub tokens_m: u64,
    pub tokens_l: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenTable {
    pub rows: Vec<TokenRow>,
    pub mean_s: f64,
    pub mean_m: f64,
    pub mean_l: f64,
}

impl TokenTable {
    pub fn to_markdown(&self) -> String {
        format!(
            "| Tier | Mean vision tokens per page |\n| --- | --- |\n| S | {:.1} |\n| M | {:.1} |\n| L | {:.1} |\n",
            self.mean_s, self.mean_m, self.mean_l
        )
    }
}

/// Vision tokens a page costs when each routable region is sent at `tier`.
/// Regions falling outside the page are skipped.
pub fn page_tokens(page: &Page, tier: Tier, merge: MergeFactor, margin: f64) -> Result<u64> {
    let regions: Vec<Region> = page.regions.iter().filter_map(|r| clamp_region(r, page).ok()).collect();
    Ok(region_plans(page, &regions, tier, merge, margin)?.iter().map(|(_, p)| p.tokens).sum())
}

pub fn token_row(page: &Page, merge: MergeFactor, margin: f64) -> Result<TokenRow> {
    Ok(TokenRow {
        page_id: page.id.clone(),
        regions: page.regions.len(),
        valid_area_ratio: valid_area_ratio(page),
        tokens_s: page_tokens(page, Tier::S, merge, margin)?,
        tokens_m: page_tokens(page, Tier::M, merge, margin)?,
        tokens_l: page_tokens(page, Tier::L, merge, margin)?,
    })
}

/// Per-page token counts under every standard tier, written as CSV.
pub fn cmd_tokens(cfg: &RunConfig) -> Result<(TokenTable, PathBuf)> {
    cfg.validate()?;
    let merge = cfg.merge()?;
    let pool = worker_pool(cfg.jobs)?;
    let mut rows = Vec::new();
    let mut malformed = Vec::new();
    for_each_batch(cfg, &mut malformed, |batch| {
        let batch_rows: Result<Vec<TokenRow>> =
            pool.install(|| batch.par_iter().map(|p| token_row(p, merge, cfg.crop_margin)).collect());
        rows.extend(batch_rows?);
        Ok(())
    })?;
    let mean = |f: fn(&TokenRow) -> u64| {
        if rows.is_empty() {
            0.0
        } else {
            rows.iter().map(|r| f(r) as f64).sum::<f64>() / rows.len() as f64
        }
    };
    let table = TokenTable {
        mean_s: mean(|r| r.tokens_s),
        mean_m: mean(|r| r.tokens_m),
        mean_l: mean(|r| r.tokens_l),
        rows,
    };

    let path = cfg.report.clone().unwrap_or_else(|| cfg.out_dir.join("tokens.csv"));
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_writer(BufWriter::new(fs::File::create(&path)?));
    for row in &table.rows {
        w.serialize(row).map_err(|e| Error::Io(e.into()))?;
    }
    w.flush()?;
    Ok((table, path))
}

/// Reads a token CSV written by [`cmd_tokens`].
pub fn read_token_csv<R: BufRead>(reader: R) -> Result<Vec<TokenRow>> {
    csv::Reader::from_reader(reader)
        .deserialize()
        .collect::<std::result::Result<Vec<TokenRow>, _>>()
        .map_err(|e| Error::ParseFailure(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stems() {
        assert_eq!(output_stem("page-000001"), "page-000001");
        assert_eq!(output_stem("a/b c"), "a_b_c");
        assert_eq!(output_stem(".."), "_..");
    }
}
