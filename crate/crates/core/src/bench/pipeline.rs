use std::sync::Arc;

use crate::assemble::{assemble_with, AssembledPage};
use crate::doc_model::{crop_spec, Page, Region};
use crate::error::{Error, Result};
use crate::http::InFlightLimiter;
use crate::layout::LayoutAnalyzer;
use crate::otsl::OtslMode;
use crate::recognizers::{RecognitionInput, RecognitionTask, Recognizer, RecognizerBackend};
use crate::resolution::{plan_resize_with, MergeFactor, ResizePlan, Tier};

use super::config::RunConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct PageOutput {
    pub page_id: String,
    pub page: AssembledPage,
    /// Planned vision tokens over the page's recognized regions.
    pub tokens: u64,
}

/// Source size of a region crop, in whole pixels.
pub fn crop_size(region: &Region, page: &Page, margin: f64) -> (u32, u32) {
    let c = crop_spec(region, page, margin);
    (c.width().ceil().max(1.0) as u32, c.height().ceil().max(1.0) as u32)
}

/// Resize plan for every routable region of `regions`, in input order.
pub fn region_plans(
    page: &Page,
    regions: &[Region],
    tier: Tier,
    merge: MergeFactor,
    margin: f64,
) -> Result<Vec<(usize, ResizePlan)>> {
    regions
        .iter()
        .enumerate()
        .filter(|(_, r)| RecognitionTask::for_category(r.category).is_some())
        .map(|(i, r)| {
            let (w, h) = crop_size(r, page, margin);
            plan_resize_with(w, h, tier, merge).map(|p| (i, p))
        })
        .collect()
}

/// Layout, recognition and assembly for one page at a time. Shareable
/// across worker threads.
pub struct Pipeline {
    layout: LayoutAnalyzer,
    recognizer: Recognizer,
    tier: Tier,
    merge: MergeFactor,
    margin: f64,
    otsl_mode: OtslMode,
}

impl Pipeline {
    pub fn new(cfg: &RunConfig) -> Result<Self> {
        cfg.validate()?;
        let limiter = Arc::new(InFlightLimiter::new(cfg.max_in_flight));
        Ok(Self {
            layout: LayoutAnalyzer::new(cfg.layout, cfg.layout_config()?, Arc::clone(&limiter))?,
            recognizer: Recognizer::new(cfg.recognizer_backend()?, cfg.recognizer_options(), limiter)?,
            tier: cfg.tier()?,
            merge: cfg.merge()?,
            margin: cfg.crop_margin,
            otsl_mode: cfg.otsl_mode,
        })
    }

    pub fn recognizer(&self) -> &Recognizer {
        &self.recognizer
    }

    pub fn process_page(&self, page: &Page) -> Result<PageOutput> {
        let layout = self.layout.analyze(page)?;
        let plans = region_plans(page, &layout.regions, self.tier, self.merge, self.margin)?;
        let images = self.crops(page, &layout.regions, &plans)?;
        let tokens = plans.iter().map(|(_, p)| p.tokens).sum();

        // Recognize in reading order so remote requests go out page-top first.
        let rank = layout.order.ranks();
        let mut jobs: Vec<_> = plans.into_iter().zip(images).collect();
        jobs.sort_by_key(|((i, _), _)| rank[*i]);
        let inputs: Vec<RecognitionInput> = jobs
            .into_iter()
            .map(|((i, plan), image)| RecognitionInput {
                region: layout.regions[i].clone(),
                image,
                plan,
            })
            .collect();
        let recognized = self.recognizer.recognize_batch(&inputs)?;
        let assembled = assemble_with(&layout, &recognized, self.otsl_mode)?;
        Ok(PageOutput {
            page_id: page.id.clone(),
            page: assembled,
            tokens,
        })
    }

    /// Encoded crops for remote recognition; `None` for the mock backend.
    fn crops(&self, page: &Page, regions: &[Region], plans: &[(usize, ResizePlan)]) -> Result<Vec<Option<Arc<Vec<u8>>>>> {
        if matches!(self.recognizer.backend(), RecognizerBackend::Mock) {
            return Ok(vec![None; plans.len()]);
        }
        self.remote_crops(page, regions, plans)
    }

    #[cfg(feature = "remote")]
    fn remote_crops(
        &self,
        page: &Page,
        regions: &[Region],
        plans: &[(usize, ResizePlan)],
    ) -> Result<Vec<Option<Arc<Vec<u8>>>>> {
        let path = page
            .image_path
            .as_ref()
            .ok_or_else(|| Error::MissingImage(format!("page `{}` has no image path", page.id)))?;
        let img = crate::imaging::load_image(path)?;
        plans
            .iter()
            .map(|(i, plan)| {
                let crop = crop_spec(&regions[*i], page, self.margin);
                crate::imaging::crop_to_png(&img, (page.width, page.height), &crop, plan).map(|png| Some(Arc::new(png)))
            })
            .collect()
    }

    #[cfg(not(feature = "remote"))]
    fn remote_crops(
        &self,
        _page: &Page,
        _regions: &[Region],
        _plans: &[(usize, ResizePlan)],
    ) -> Result<Vec<Option<Arc<Vec<u8>>>>> {
        Err(Error::Config("built without the `remote` feature".into()))
    }
}
