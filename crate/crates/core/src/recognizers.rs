//! Element-level recognition: routing regions to task-specific recognizers,
//! normalizing their raw output and validating it against the task format.

use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::doc_model::{ElementCategory, Region};
use crate::error::{Error, Result};
use crate::http::{HttpSettings, InFlightLimiter};
use crate::otsl::{self, OtslMode};
use crate::pipe_table::PipeTable;
use crate::resolution::ResizePlan;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecognitionTask {
    Ocr,
    TableOtsl,
    FormulaLatex,
    ChartTable,
}

impl RecognitionTask {
    pub const ALL: [RecognitionTask; 4] = [Self::Ocr, Self::TableOtsl, Self::FormulaLatex, Self::ChartTable];

    /// `None` for figures and unclassified regions.
    pub fn for_category(category: ElementCategory) -> Option<Self> {
        match category {
            ElementCategory::Text | ElementCategory::Title => Some(Self::Ocr),
            ElementCategory::Table => Some(Self::TableOtsl),
            ElementCategory::Formula => Some(Self::FormulaLatex),
            ElementCategory::Chart => Some(Self::ChartTable),
            ElementCategory::Figure | ElementCategory::Other => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Ocr => "ocr",
            Self::TableOtsl => "table_otsl",
            Self::FormulaLatex => "formula_latex",
            Self::ChartTable => "chart_table",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecognizedElement {
    pub region: Region,
    /// `None` for figure placeholders, which never reach a model.
    pub task: Option<RecognitionTask>,
    pub payload: String,
    pub valid: bool,
    pub diagnostics: Vec<String>,
}

impl RecognizedElement {
    pub fn placeholder(region: Region) -> Self {
        Self {
            region,
            task: None,
            payload: String::new(),
            valid: true,
            diagnostics: Vec::new(),
        }
    }

    fn failed(region: Region, task: Option<RecognitionTask>, err: &Error) -> Self {
        Self {
            region,
            task,
            payload: String::new(),
            valid: false,
            diagnostics: vec![diagnostic_for(err)],
        }
    }
}

fn diagnostic_for(err: &Error) -> String {
    let kind = match err {
        Error::BackendTimeout { .. } => "BackendTimeout",
        Error::Backend(_) => "BackendError",
        Error::MissingGroundTruth(_) => "MissingGroundTruth",
        Error::UnroutableCategory(_) => "UnroutableCategory",
        Error::MissingImage(_) => "MissingImage",
        _ => "Error",
    };
    format!("{kind}: {err}")
}

fn is_transport(err: &Error) -> bool {
    matches!(err, Error::BackendTimeout { .. } | Error::Backend(_))
}

// ---------------------------------------------------------------------------
// Normalization

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum FormulaStyle {
    Inline,
    Display,
}

const FORMULA_WRAPPERS: [(&str, &str, FormulaStyle); 4] = [
    ("\\[", "\\]", FormulaStyle::Display),
    ("$$", "$$", FormulaStyle::Display),
    ("\\(", "\\)", FormulaStyle::Inline),
    ("$", "$", FormulaStyle::Inline),
];

/// Peels every layer of math delimiters, reporting the outermost style.
fn strip_formula_wrappers(raw: &str) -> (&str, Option<FormulaStyle>) {
    let mut s = raw.trim();
    let mut style = None;
    'outer: loop {
        for (open, close, st) in FORMULA_WRAPPERS {
            if s.len() >= open.len() + close.len() && s.starts_with(open) && s.ends_with(close) {
                let inner = &s[open.len()..s.len() - close.len()];
                // `$a$ + $b$` is two formulas, not one wrapped formula.
                if inner.contains(close) && !inner.ends_with(close) {
                    continue;
                }
                if open == "$" && inner.starts_with('$') != inner.ends_with('$') {
                    continue;
                }
                style.get_or_insert(st);
                s = inner.trim();
                continue 'outer;
            }
        }
        break;
    }
    (s, style)
}

/// Content of a formula payload without its delimiters.
pub fn formula_body(payload: &str) -> &str {
    strip_formula_wrappers(payload).0
}

pub fn normalize_payload(task: RecognitionTask, raw: &str) -> String {
    normalize_payload_with(task, raw, OtslMode::default())
}

/// Canonical form of a raw model output. Total: output that cannot be
/// parsed is returned with whitespace tidied, and judged by
/// [`validate_payload`].
pub fn normalize_payload_with(task: RecognitionTask, raw: &str, mode: OtslMode) -> String {
    match task {
        RecognitionTask::Ocr => {
            let text = raw.replace("\r\n", "\n").replace('\r', "\n");
            let lines: Vec<&str> = text.split('\n').map(str::trim_end).collect();
            lines.join("\n").trim_end_matches('\n').to_string()
        }
        RecognitionTask::FormulaLatex => {
            let (body, style) = strip_formula_wrappers(raw);
            let style = style.unwrap_or(FormulaStyle::Display);
            let wrapped = match style {
                FormulaStyle::Display => format!("\\[{body}\\]"),
                FormulaStyle::Inline => format!("\\({body}\\)"),
            };
            // Stray delimiters inside the body can make the wrapped form read
            // differently; such output is left as is and fails validation.
            if strip_formula_wrappers(&wrapped) == (body, Some(style)) {
                wrapped
            } else {
                raw.trim().to_string()
            }
        }
        RecognitionTask::TableOtsl => match otsl::parse_otsl(raw, mode) {
            Ok(seq) => seq.to_text(mode),
            Err(_) => raw.split_whitespace().collect::<Vec<_>>().join(" "),
        },
        RecognitionTask::ChartTable => {
            let body = strip_code_fence(raw);
            match PipeTable::parse(body) {
                Ok(t) => t.to_markdown(),
                Err(_) => body.lines().map(str::trim).filter(|l| !l.is_empty()).collect::<Vec<_>>().join("\n"),
            }
        }
    }
}

fn strip_code_fence(raw: &str) -> &str {
    let t = raw.trim();
    if let Some(rest) = t.strip_prefix("```") {
        if let Some(body) = rest.strip_suffix("```") {
            // Drop an info string such as `markdown` on the opening line.
            return match body.find('\n') {
                Some(nl) if !body[..nl].contains('|') => body[nl + 1..].trim(),
                _ => body.trim(),
            };
        }
    }
    t
}

/// Format problems in a normalized payload; empty means valid.
pub fn validate_payload(task: RecognitionTask, payload: &str, mode: OtslMode) -> Vec<String> {
    match task {
        RecognitionTask::Ocr => Vec::new(),
        RecognitionTask::TableOtsl => match otsl::parse_otsl(payload, mode) {
            Err(e) => vec![e.to_string()],
            Ok(seq) => match otsl::validate(&seq) {
                Ok(()) => Vec::new(),
                Err(v) => v.into_iter().map(|v| format!("invalid OTSL: {v}")).collect(),
            },
        },
        RecognitionTask::FormulaLatex => validate_formula(payload),
        RecognitionTask::ChartTable => match PipeTable::parse(payload) {
            Ok(t) if t.header.is_empty() => vec!["chart table has no header row".into()],
            Ok(_) => Vec::new(),
            Err(e) => vec![e.to_string()],
        },
    }
}

fn validate_formula(payload: &str) -> Vec<String> {
    let mut out = Vec::new();
    let wrapped = (payload.starts_with("\\[") && payload.ends_with("\\]"))
        || (payload.starts_with("\\(") && payload.ends_with("\\)"));
    if !wrapped || payload.len() < 4 {
        out.push("formula is not wrapped in \\( \\) or \\[ \\]".into());
        return out;
    }
    let body = &payload[2..payload.len() - 2];
    if body.trim().is_empty() {
        out.push("empty formula".into());
    }
    if strip_formula_wrappers(body).1.is_some() {
        out.push("formula carries more than one wrapper".into());
    }
    let mut depth = 0i64;
    let mut chars = body.chars();
    while let Some(c) = chars.next() {
        match c {
            '\\' => {
                chars.next();
            }
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth < 0 {
                    break;
                }
            }
            _ => {}
        }
    }
    if depth != 0 {
        out.push("unbalanced braces in formula".into());
    }
    if body.matches("\\begin{").count() != body.matches("\\end{").count() {
        out.push("unbalanced \\begin/\\end in formula".into());
    }
    out
}

// ---------------------------------------------------------------------------
// Prompts

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PromptSet {
    pub ocr: String,
    pub table: String,
    pub formula: String,
    pub chart: String,
}

impl Default for PromptSet {
    fn default() -> Self {
        Self {
            ocr: "OCR: transcribe all text in the image, keeping line breaks.".into(),
            table: "Table Recognition: output the table structure as OTSL tokens \
                    (fcel ecel lcel ucel xcel nl), with each cell's text in double quotes right after its fcel."
                .into(),
            formula: "Formula Recognition: transcribe the formula as LaTeX, wrapped in \\( \\) if it is inline \
                      or \\[ \\] if it is displayed."
                .into(),
            chart: "Chart Recognition: extract the chart's underlying data as a Markdown table with one header row."
                .into(),
        }
    }
}

impl PromptSet {
    pub fn get(&self, task: RecognitionTask) -> &str {
        match task {
            RecognitionTask::Ocr => &self.ocr,
            RecognitionTask::TableOtsl => &self.table,
            RecognitionTask::FormulaLatex => &self.formula,
            RecognitionTask::ChartTable => &self.chart,
        }
    }
}

pub fn build_prompt(task: RecognitionTask) -> String {
    PromptSet::default().get(task).to_string()
}

// ---------------------------------------------------------------------------
// Backends

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteRecognizerConfig {
    /// Base URL; requests go to `{endpoint}/v1/chat/completions`.
    pub endpoint: String,
    pub model: String,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
    #[serde(default)]
    pub http: HttpSettings,
}

fn default_max_tokens() -> u32 {
    4096
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RecognizerBackend {
    /// Replays each region's ground-truth content.
    Mock,
    Remote(RemoteRecognizerConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RecognizerOptions {
    pub prompts: PromptSet,
    pub otsl_mode: OtslMode,
    /// On-disk payload cache for remote calls.
    pub cache_dir: Option<PathBuf>,
}

impl Default for RecognizerOptions {
    fn default() -> Self {
        Self {
            prompts: PromptSet::default(),
            otsl_mode: OtslMode::Interleaved,
            cache_dir: None,
        }
    }
}

/// One unit of work for [`Recognizer::recognize_batch`].
#[derive(Debug, Clone)]
pub struct RecognitionInput {
    pub region: Region,
    /// Encoded crop, already resampled to `plan`. Only remote backends
    /// need it.
    pub image: Option<Arc<Vec<u8>>>,
    pub plan: ResizePlan,
}

pub struct Recognizer {
    backend: RecognizerBackend,
    options: RecognizerOptions,
    limiter: Arc<InFlightLimiter>,
    #[cfg(feature = "remote")]
    client: Option<crate::http::JsonClient>,
    calls: AtomicUsize,
}

impl Recognizer {
    pub fn new(backend: RecognizerBackend, options: RecognizerOptions, limiter: Arc<InFlightLimiter>) -> Result<Self> {
        #[cfg(feature = "remote")]
        let client = match &backend {
            RecognizerBackend::Remote(cfg) => Some(crate::http::JsonClient::new(cfg.http.clone())?),
            RecognizerBackend::Mock => None,
        };
        Ok(Self {
            backend,
            options,
            limiter,
            #[cfg(feature = "remote")]
            client,
            calls: AtomicUsize::new(0),
        })
    }

    pub fn mock() -> Self {
        Self::new(RecognizerBackend::Mock, RecognizerOptions::default(), Arc::new(InFlightLimiter::new(1)))
            .expect("mock recognizer needs no setup")
    }

    pub fn backend(&self) -> &RecognizerBackend {
        &self.backend
    }

    pub fn options(&self) -> &RecognizerOptions {
        &self.options
    }

    pub fn limiter(&self) -> &Arc<InFlightLimiter> {
        &self.limiter
    }

    /// Remote model calls issued so far (cache hits excluded).
    pub fn remote_calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }

    /// Recognizes one region. Transport failures and missing inputs are
    /// errors; format problems in the output are reported through
    /// `valid` and `diagnostics` instead.
    pub fn recognize(&self, region: &Region, image: Option<&[u8]>, plan: &ResizePlan) -> Result<RecognizedElement> {
        let task = RecognitionTask::for_category(region.category)
            .ok_or_else(|| Error::UnroutableCategory(region.category.to_string()))?;
        let raw = match &self.backend {
            RecognizerBackend::Mock => region
                .gt_content
                .clone()
                .ok_or_else(|| Error::MissingGroundTruth(region.id.clone()))?,
            RecognizerBackend::Remote(cfg) => self.call_remote(cfg, task, region, image, plan)?,
        };
        let payload = normalize_payload_with(task, &raw, self.options.otsl_mode);
        let diagnostics = validate_payload(task, &payload, self.options.otsl_mode);
        Ok(RecognizedElement {
            region: region.clone(),
            task: Some(task),
            valid: diagnostics.is_empty(),
            payload,
            diagnostics,
        })
    }

    /// Recognizes every input, keeping input order. Element failures become
    /// invalid elements; only a batch in which every element failed in
    /// transport is an error.
    pub fn recognize_batch(&self, inputs: &[RecognitionInput]) -> Result<Vec<RecognizedElement>> {
        let run = |input: &RecognitionInput| {
            self.recognize(&input.region, input.image.as_deref().map(Vec::as_slice), &input.plan)
        };
        let results: Vec<Result<RecognizedElement>> = match &self.backend {
            RecognizerBackend::Mock => inputs.iter().map(run).collect(),
            RecognizerBackend::Remote(_) => {
                let workers = self.limiter.max().min(inputs.len()).max(1);
                let next = AtomicUsize::new(0);
                let slots: Mutex<Vec<Option<Result<RecognizedElement>>>> =
                    Mutex::new((0..inputs.len()).map(|_| None).collect());
                std::thread::scope(|s| {
                    for _ in 0..workers {
                        s.spawn(|| loop {
                            let i = next.fetch_add(1, Ordering::Relaxed);
                            let Some(input) = inputs.get(i) else { break };
                            let r = run(input);
                            slots.lock().expect("result slots poisoned")[i] = Some(r);
                        });
                    }
                });
                slots
                    .into_inner()
                    .expect("result slots poisoned")
                    .into_iter()
                    .map(|r| r.expect("every slot filled"))
                    .collect()
            }
        };

        if !results.is_empty() && results.iter().all(|r| matches!(r, Err(e) if is_transport(e))) {
            let first = results.into_iter().find_map(Result::err).expect("non-empty");
            return Err(Error::BatchFailed(first.to_string()));
        }
        Ok(results
            .into_iter()
            .zip(inputs)
            .map(|(r, input)| match r {
                Ok(el) => el,
                Err(e) => {
                    tracing::warn!(region = %input.region.id, error = %e, "recognition failed");
                    RecognizedElement::failed(
                        input.region.clone(),
                        RecognitionTask::for_category(input.region.category),
                        &e,
                    )
                }
            })
            .collect())
    }

    #[cfg(feature = "remote")]
    fn call_remote(
        &self,
        cfg: &RemoteRecognizerConfig,
        task: RecognitionTask,
        region: &Region,
        image: Option<&[u8]>,
        plan: &ResizePlan,
    ) -> Result<String> {
        use base64::Engine;

        let image = image.ok_or_else(|| Error::MissingImage(format!("no crop for region `{}`", region.id)))?;
        let prompt = self.options.prompts.get(task);
        let cache = self.options.cache_dir.as_ref().map(|dir| dir.join(cache_key(cfg, task, prompt, image)));
        if let Some(path) = &cache {
            if let Ok(text) = std::fs::read_to_string(path) {
                return Ok(text);
            }
        }

        let data_url = format!("data:image/png;base64,{}", base64::engine::general_purpose::STANDARD.encode(image));
        let body = serde_json::json!({
            "model": cfg.model,
            "messages": [{
                "role": "user",
                "content": [
                    {"type": "image_url", "image_url": {"url": data_url}},
                    {"type": "text", "text": prompt},
                ],
            }],
            "temperature": 0,
            "max_tokens": cfg.max_tokens,
        });
        let url = format!("{}/v1/chat/completions", cfg.endpoint.trim_end_matches('/'));
        let client = self.client.as_ref().expect("remote backend has a client");
        let response = {
            let _permit = self.limiter.acquire();
            self.calls.fetch_add(1, Ordering::Relaxed);
            client.post_json(&url, &body)?
        };
        let text = response
            .pointer("/choices/0/message/content")
            .and_then(|v| v.as_str())
            .ok_or_else(|| Error::Backend(format!("response for region `{}` has no message content", region.id)))?
            .to_string();
        tracing::debug!(region = %region.id, tokens = plan.tokens, "recognized");

        if let Some(path) = &cache {
            if let Some(dir) = path.parent() {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(path, &text)?;
        }
        Ok(text)
    }

    #[cfg(not(feature = "remote"))]
    fn call_remote(
        &self,
        _cfg: &RemoteRecognizerConfig,
        _task: RecognitionTask,
        _region: &Region,
        _image: Option<&[u8]>,
        _plan: &ResizePlan,
    ) -> Result<String> {
        Err(Error::Config("built without the `remote` feature".into()))
    }
}

#[cfg(feature = "remote")]
fn cache_key(cfg: &RemoteRecognizerConfig, task: RecognitionTask, prompt: &str, image: &[u8]) -> String {
    use sha2::{Digest, Sha256};

    let hex = |bytes: &[u8]| bytes.iter().map(|b| format!("{b:02x}")).collect::<String>();
    let image_hash = hex(&Sha256::digest(image));
    let prompt_hash = hex(&Sha256::digest(prompt.as_bytes()));
    let mut h = Sha256::new();
    for part in [image_hash.as_str(), task.as_str(), prompt_hash.as_str(), cfg.endpoint.as_str(), cfg.model.as_str()] {
        h.update(part.as_bytes());
        h.update([0]);
    }
    format!("{}.txt", hex(&h.finalize()))
}
