use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vrdoc::bench::{self, BackendKind, RunConfig};
use vrdoc::dataset::write_dataset;
use vrdoc::layout::LayoutSource;
use vrdoc::synth::synthetic_dataset;

#[derive(Parser)]
#[command(name = "vrdoc", version, about = "Coarse-to-fine document parsing benchmark harness")]
struct Cli {
    /// Log debug output to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse every page of a dataset into Markdown and JSON.
    Parse(RunArgs),
    /// Score predictions against the dataset's ground truth.
    Eval {
        #[command(flatten)]
        run: RunArgs,
        /// Evaluate existing `parse` outputs instead of running the pipeline.
        #[arg(long)]
        pred: Option<PathBuf>,
    },
    /// Count vision tokens per page under each resolution tier.
    Tokens(RunArgs),
    /// Write a seeded synthetic dataset with ground truth.
    Synth {
        #[arg(long, default_value_t = 25)]
        pages: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// JSONL page dataset.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Resolution tier: s, m or l.
    #[arg(long)]
    tier: Option<String>,
    /// Layout source: gt, matrix or remote.
    #[arg(long)]
    layout: Option<LayoutSource>,
    /// Recognizer backend: mock or remote.
    #[arg(long)]
    recognizer: Option<BackendKind>,
    #[arg(long)]
    jobs: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report file.
    #[arg(long)]
    report: Option<PathBuf>,
}

impl RunArgs {
    fn config(&self) -> vrdoc::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(v) = &self.dataset {
            cfg.dataset = Some(v.clone());
        }
        if let Some(v) = &self.tier {
            cfg.tier = v.clone();
        }
        if let Some(v) = self.layout {
            cfg.layout = v;
        }
        if let Some(v) = self.recognizer {
            cfg.recognizer = v;
        }
        if let Some(v) = self.jobs {
            cfg.jobs = v;
        }
        if let Some(v) = &self.out {
            cfg.out_dir = v.clone();
        }
        if let Some(v) = &self.report {
            cfg.report = Some(v.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn report_failures(failures: &[bench::PageFailure], malformed: &[vrdoc::dataset::Malformed]) {
    for m in malformed {
        eprintln!("skipped {m}");
    }
    for f in failures {
        eprintln!("page {} failed: {}", f.page_id, f.error);
    }
}

fn run(cli: Cli) -> vrdoc::Result<ExitCode> {
    let partial = |failed: bool| if failed { ExitCode::from(1) } else { ExitCode::SUCCESS };
    match cli.command {
        Command::Parse(args) => {
            let cfg = args.config()?;
            let out = bench::cmd_parse(&cfg)?;
            report_failures(&out.failures, &out.malformed);
            print!("{}", out.throughput.to_markdown());
            println!("{} pages, {} vision tokens; report: {}", out.throughput.pages, out.throughput.tokens_total, out.report_path.display());
            Ok(partial(!out.failures.is_empty()))
        }
        Command::Eval { run, pred } => {
            let mut cfg = run.config()?;
            if pred.is_some() {
                cfg.pred_dir = pred;
            }
            let out = bench::cmd_eval(&cfg)?;
            report_failures(&out.failures, &out.malformed);
            print!("{}", out.report.to_markdown());
            if !out.report.flagged_pages.is_empty() {
                eprintln!("flagged pages: {}", out.report.flagged_pages.join(", "));
            }
            println!("report: {}", out.report_path.display());
            Ok(partial(!out.failures.is_empty()))
        }
        Command::Tokens(args) => {
            let cfg = args.config()?;
            let (table, path) = bench::cmd_tokens(&cfg)?;
            print!("{}", table.to_markdown());
            println!("{} pages; per-page counts: {}", table.rows.len(), path.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Synth { pages, seed, out } => {
            write_dataset(&out, &synthetic_dataset(pages, seed))?;
            println!("wrote {pages} pages to {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_max_level(if cli.verbose { tracing::Level::DEBUG } else { tracing::Level::WARN })
        .init();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
