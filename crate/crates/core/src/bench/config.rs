use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::http::HttpSettings;
use crate::layout::{DetectorConfig, LayoutConfig, LayoutSource, DEFAULT_DEDUP_IOU, DEFAULT_MIN_SCORE};
use crate::metrics::{CellCost, OverallWeights, TedsOptions};
use crate::otsl::OtslMode;
use crate::recognizers::{PromptSet, RecognizerBackend, RecognizerOptions, RemoteRecognizerConfig};
use crate::resolution::{MergeFactor, Tier};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    #[default]
    Mock,
    Remote,
}

impl std::str::FromStr for BackendKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mock" => Ok(Self::Mock),
            "remote" => Ok(Self::Remote),
            other => Err(Error::Config(format!("unknown recognizer `{other}` (expected mock or remote)"))),
        }
    }
}

/// Everything a run needs, as one flat TOML table. Relative paths are
/// resolved against the directory of the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// JSONL page dataset (also the ground truth for `eval`).
    pub dataset: Option<PathBuf>,
    pub image_root: Option<PathBuf>,
    pub out_dir: PathBuf,
    /// Report file; each command has its own default inside `out_dir`.
    pub report: Option<PathBuf>,
    /// Existing `parse` outputs to evaluate instead of running the pipeline.
    pub pred_dir: Option<PathBuf>,

    /// `s`, `m`, `l` or `custom` (with the two bounds below).
    pub tier: String,
    pub tier_min_pixels: Option<u64>,
    pub tier_max_pixels: Option<u64>,
    pub merge_factor: u32,
    pub crop_margin: f64,

    pub layout: LayoutSource,
    pub dedup_iou: f64,
    pub recognizer: BackendKind,
    pub otsl_mode: OtslMode,

    pub jobs: usize,
    pub max_in_flight: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub max_malformed_fraction: f64,

    pub match_iou: f64,
    /// `graded` or `binary`.
    pub teds_cell_cost: String,
    pub teds_binary_threshold: f64,
    pub weight_text: f64,
    pub weight_formula: f64,
    pub weight_table: f64,

    pub recognizer_endpoint: Option<String>,
    pub recognizer_model: Option<String>,
    pub recognizer_max_tokens: u32,
    pub detector_endpoint: Option<String>,
    pub detector_min_score: f64,
    pub timeout_s: f64,
    pub retries: u32,
    pub backoff_base_ms: u64,
    /// Environment variable holding the bearer token for remote services.
    pub auth_env: Option<String>,
    pub cache_dir: Option<PathBuf>,

    pub prompt_ocr: Option<String>,
    pub prompt_table: Option<String>,
    pub prompt_formula: Option<String>,
    pub prompt_chart: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let http = HttpSettings::default();
        Self {
            dataset: None,
            image_root: None,
            out_dir: PathBuf::from("out"),
            report: None,
            pred_dir: None,
            tier: "l".into(),
            tier_min_pixels: None,
            tier_max_pixels: None,
            merge_factor: 1,
            crop_margin: 0.0,
            layout: LayoutSource::GroundTruth,
            dedup_iou: DEFAULT_DEDUP_IOU,
            recognizer: BackendKind::Mock,
            otsl_mode: OtslMode::Interleaved,
            jobs: 1,
            max_in_flight: 8,
            batch_size: 512,
            seed: 0,
            max_malformed_fraction: 0.1,
            match_iou: 0.5,
            teds_cell_cost: "graded".into(),
            teds_binary_threshold: 0.0,
            weight_text: 1.0,
            weight_formula: 1.0,
            weight_table: 1.0,
            recognizer_endpoint: None,
            recognizer_model: None,
            recognizer_max_tokens: 4096,
            detector_endpoint: None,
            detector_min_score: DEFAULT_MIN_SCORE,
            timeout_s: http.timeout_s,
            retries: http.retries,
            backoff_base_ms: http.backoff_base_ms,
            auth_env: None,
            cache_dir: None,
            prompt_ocr: None,
            prompt_table: None,
            prompt_formula: None,
            prompt_chart: None,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run configs always serialize")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(cfg)
    }

    /// Makes every relative path absolute with respect to `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in [&mut self.dataset, &mut self.image_root, &mut self.report, &mut self.pred_dir, &mut self.cache_dir]
            .into_iter()
            .flatten()
        {
            fix(p);
        }
        fix(&mut self.out_dir);
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.jobs == 0 {
            return bad("jobs must be at least 1".into());
        }
        if self.max_in_flight == 0 {
            return bad("max_in_flight must be at least 1".into());
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.max_malformed_fraction) {
            return bad(format!("max_malformed_fraction {} outside [0, 1]", self.max_malformed_fraction));
        }
        if !(self.match_iou > 0.0 && self.match_iou <= 1.0) {
            return bad(format!("match_iou {} outside (0, 1]", self.match_iou));
        }
        if !(self.crop_margin >= 0.0 && self.crop_margin.is_finite()) {
            return bad(format!("crop_margin {} must be a nonnegative number", self.crop_margin));
        }
        self.tier()?;
        self.merge()?;
        self.teds_options()?;
        self.layout_config()?;
        self.recognizer_backend()?;
        Ok(())
    }

    pub fn tier(&self) -> Result<Tier> {
        if self.tier.eq_ignore_ascii_case("custom") {
            match (self.tier_min_pixels, self.tier_max_pixels) {
                (Some(lo), Some(hi)) => Tier::custom(lo, hi),
                _ => Err(Error::Config("a custom tier needs tier_min_pixels and tier_max_pixels".into())),
            }
        } else {
            self.tier.parse()
        }
    }

    pub fn merge(&self) -> Result<MergeFactor> {
        MergeFactor::try_from(self.merge_factor)
    }

    pub fn http(&self) -> HttpSettings {
        HttpSettings {
            timeout_s: self.timeout_s,
            retries: self.retries,
            backoff_base_ms: self.backoff_base_ms,
            auth_env: self.auth_env.clone(),
        }
    }

    pub fn layout_config(&self) -> Result<LayoutConfig> {
        let detector = match (&self.detector_endpoint, self.layout) {
            (Some(endpoint), _) => Some(DetectorConfig {
                endpoint: endpoint.clone(),
                min_score: self.detector_min_score,
                http: self.http(),
            }),
            (None, LayoutSource::RemoteDetector) => {
                return Err(Error::Config("layout = remote needs detector_endpoint".into()));
            }
            (None, _) => None,
        };
        Ok(LayoutConfig {
            dedup_iou: self.dedup_iou,
            detector,
        })
    }

    pub fn recognizer_backend(&self) -> Result<RecognizerBackend> {
        match self.recognizer {
            BackendKind::Mock => Ok(RecognizerBackend::Mock),
            BackendKind::Remote => {
                let endpoint = self
                    .recognizer_endpoint
                    .clone()
                    .ok_or_else(|| Error::Config("recognizer = remote needs recognizer_endpoint".into()))?;
                let model = self
                    .recognizer_model
                    .clone()
                    .ok_or_else(|| Error::Config("recognizer = remote needs recognizer_model".into()))?;
                Ok(RecognizerBackend::Remote(RemoteRecognizerConfig {
                    endpoint,
                    model,
                    max_tokens: self.recognizer_max_tokens,
                    http: self.http(),
                }))
            }
        }
    }

    pub fn recognizer_options(&self) -> RecognizerOptions {
        let mut prompts = PromptSet::default();
        for (slot, custom) in [
            (&mut prompts.ocr, &self.prompt_ocr),
            (&mut prompts.table, &self.prompt_table),
            (&mut prompts.formula, &self.prompt_formula),
            (&mut prompts.chart, &self.prompt_chart),
        ] {
            if let Some(p) = custom {
                *slot = p.clone();
            }
        }
        RecognizerOptions {
            prompts,
            otsl_mode: self.otsl_mode,
            cache_dir: self.cache_dir.clone(),
        }
    }

    pub fn teds_options(&self) -> Result<TedsOptions> {
        let cell_cost = match self.teds_cell_cost.to_ascii_lowercase().as_str() {
            "graded" => CellCost::Graded,
            "binary" => CellCost::Binary {
                threshold: self.teds_binary_threshold,
            },
            other => return Err(Error::Config(format!("unknown teds_cell_cost `{other}` (expected graded or binary)"))),
        };
        Ok(TedsOptions {
            structure_only: false,
            cell_cost,
        })
    }

    pub fn weights(&self) -> OverallWeights {
        OverallWeights {
            text: self.weight_text,
            formula: self.weight_formula,
            table: self.weight_table,
        }
    }

    pub fn dataset_path(&self) -> Result<&Path> {
        self.dataset.as_deref().ok_or_else(|| Error::Config("no dataset given".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn toml_round_trip() {
        let cfg = RunConfig {
            dataset: Some("data/pages.jsonl".into()),
            tier: "m".into(),
            jobs: 4,
            ..Default::default()
        };
        assert_eq!(RunConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn flat_file() {
        let cfg = RunConfig::from_toml("dataset = \"d.jsonl\"\ntier = \"s\"\nlayout = \"matrix_replay\"\njobs = 2\n").unwrap();
        assert_eq!(cfg.tier().unwrap(), Tier::S);
        assert_eq!(cfg.layout, LayoutSource::MatrixReplay);
        assert!(RunConfig::from_toml("jbos = 2").is_err());
    }

    #[test]
    fn rejects_bad_values() {
        let mut cfg = RunConfig {
            jobs: 0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        cfg.jobs = 1;
        cfg.recognizer = BackendKind::Remote;
        assert!(cfg.validate().is_err());
        cfg.recognizer_endpoint = Some("http://localhost:8000".into());
        cfg.recognizer_model = Some("m".into());
        cfg.validate().unwrap();
        cfg.tier = "xl".into();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn relative_paths_follow_the_config_file() {
        let mut cfg = RunConfig {
            dataset: Some("d.jsonl".into()),
            ..Default::default()
        };
        cfg.resolve_paths(Path::new("/data/run"));
        assert_eq!(cfg.dataset.unwrap(), Path::new("/data/run/d.jsonl"));
        assert_eq!(cfg.out_dir, Path::new("/data/run/out"));
    }
}
