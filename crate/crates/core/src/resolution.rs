//! Native-resolution resize planning on the 28x28 patch grid.
//!
//! A region crop is rescaled so that its pixel area falls inside the tier's
//! `[min_pixels, max_pixels]` interval, then snapped to whole patches. The
//! target is the grid point closest (L1, in patch units) to the ideally
//! scaled size; ties go to the larger area, then to the wider grid.

use std::cmp::Reverse;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Side length of one vision patch in pixels.
pub const PATCH_SIZE: u32 = 28;
/// Pixels per patch.
pub const PATCH_AREA: u64 = (PATCH_SIZE as u64) * (PATCH_SIZE as u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tier {
    pub name: TierName,
    pub min_pixels: u64,
    pub max_pixels: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TierName {
    S,
    M,
    L,
    Custom,
}

impl Tier {
    pub const S: Tier = Tier {
        name: TierName::S,
        min_pixels: 3136,
        max_pixels: 235_200,
    };
    pub const M: Tier = Tier {
        name: TierName::M,
        min_pixels: 3136,
        max_pixels: 392_000,
    };
    pub const L: Tier = Tier {
        name: TierName::L,
        min_pixels: 3136,
        max_pixels: 627_200,
    };

    pub const STANDARD: [Tier; 3] = [Tier::S, Tier::M, Tier::L];

    pub fn custom(min_pixels: u64, max_pixels: u64) -> Result<Tier> {
        if min_pixels == 0 || !min_pixels.is_multiple_of(PATCH_AREA) || !max_pixels.is_multiple_of(PATCH_AREA) {
            return Err(Error::InvalidTier(format!(
                "bounds [{min_pixels}, {max_pixels}] must be positive multiples of {PATCH_AREA}"
            )));
        }
        if min_pixels > max_pixels {
            return Err(Error::InvalidTier(format!("min {min_pixels} exceeds max {max_pixels}")));
        }
        Ok(Tier {
            name: TierName::Custom,
            min_pixels,
            max_pixels,
        })
    }

    /// Largest patch count any plan under this tier can reach.
    pub fn max_patches(&self) -> u64 {
        self.max_pixels / PATCH_AREA
    }

    fn min_patches(&self) -> u64 {
        self.min_pixels / PATCH_AREA
    }
}

impl fmt::Display for TierName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TierName::S => "S",
            TierName::M => "M",
            TierName::L => "L",
            TierName::Custom => "custom",
        })
    }
}

impl FromStr for Tier {
    type Err = Error;

    fn from_str(s: &str) -> Result<Tier> {
        match s.trim().to_ascii_lowercase().as_str() {
            "s" => Ok(Tier::S),
            "m" => Ok(Tier::M),
            "l" => Ok(Tier::L),
            other => Err(Error::InvalidTier(format!("unknown tier `{other}` (expected s, m or l)"))),
        }
    }
}

/// Spatial token merging applied on top of the raw patch count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub enum MergeFactor {
    #[default]
    None,
    TwoByTwo,
}

impl MergeFactor {
    pub fn value(self) -> u64 {
        match self {
            MergeFactor::None => 1,
            MergeFactor::TwoByTwo => 4,
        }
    }
}

impl TryFrom<u32> for MergeFactor {
    type Error = Error;

    fn try_from(v: u32) -> Result<Self> {
        match v {
            1 => Ok(MergeFactor::None),
            4 => Ok(MergeFactor::TwoByTwo),
            _ => Err(Error::Config(format!("merge_factor must be 1 or 4, got {v}"))),
        }
    }
}

impl From<MergeFactor> for u32 {
    fn from(m: MergeFactor) -> u32 {
        m.value() as u32
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResizePlan {
    pub src_w: u32,
    pub src_h: u32,
    pub dst_w: u32,
    pub dst_h: u32,
    pub patches_w: u32,
    pub patches_h: u32,
    pub tokens: u64,
    /// Set when one side had to be pinned to a single patch because the
    /// aspect ratio was too extreme to keep it.
    pub aspect_pinned: bool,
}

impl ResizePlan {
    pub fn dst_area(&self) -> u64 {
        self.dst_w as u64 * self.dst_h as u64
    }
}

pub fn plan_resize(src_w: u32, src_h: u32, tier: Tier) -> Result<ResizePlan> {
    plan_resize_with(src_w, src_h, tier, MergeFactor::None)
}

pub fn plan_resize_with(src_w: u32, src_h: u32, tier: Tier, merge: MergeFactor) -> Result<ResizePlan> {
    if src_w == 0 || src_h == 0 {
        return Err(Error::InvalidSourceSize(src_w, src_h));
    }
    let (ideal_w, ideal_h) = ideal_patches(src_w, src_h, tier);
    let (pw, ph) = snap_to_grid(ideal_w, ideal_h, tier.min_patches(), tier.max_patches());
    let patches = pw * ph;
    debug_assert!(patches * PATCH_AREA >= tier.min_pixels && patches * PATCH_AREA <= tier.max_pixels);
    Ok(ResizePlan {
        src_w,
        src_h,
        dst_w: (pw * PATCH_SIZE as u64) as u32,
        dst_h: (ph * PATCH_SIZE as u64) as u32,
        patches_w: pw as u32,
        patches_h: ph as u32,
        tokens: patches.div_ceil(merge.value()),
        aspect_pinned: round_half_up(ideal_w) == 0 || round_half_up(ideal_h) == 0,
    })
}

pub fn token_count(plan: &ResizePlan) -> u64 {
    plan.tokens
}

/// Per-page vision-token total over the region plans.
pub fn page_token_budget(plans: &[ResizePlan]) -> u64 {
    plans.iter().map(token_count).sum()
}

/// Source size scaled into the tier's pixel interval, in patch units.
pub fn ideal_patches(src_w: u32, src_h: u32, tier: Tier) -> (f64, f64) {
    let area = src_w as f64 * src_h as f64;
    let scale = if area < tier.min_pixels as f64 {
        (tier.min_pixels as f64 / area).sqrt()
    } else if area > tier.max_pixels as f64 {
        (tier.max_pixels as f64 / area).sqrt()
    } else {
        1.0
    };
    let p = PATCH_SIZE as f64;
    (src_w as f64 * scale / p, src_h as f64 * scale / p)
}

/// Selection key for a grid point; smaller is better.
type GridKey = (f64, Reverse<u64>, Reverse<u64>);

fn grid_key(a: u64, b: u64, ideal_w: f64, ideal_h: f64) -> GridKey {
    let dist = (a as f64 - ideal_w).abs() + (b as f64 - ideal_h).abs();
    (dist, Reverse(a * b), Reverse(a))
}

fn better(a: GridKey, b: GridKey) -> bool {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)).is_lt()
}

fn round_half_up(x: f64) -> u64 {
    (x + 0.5).floor().max(0.0) as u64
}

fn snap_to_grid(ideal_w: f64, ideal_h: f64, min_patches: u64, max_patches: u64) -> (u64, u64) {
    // Nearest grid point per side; it is optimal whenever it fits the budget.
    let a0 = round_half_up(ideal_w).max(1);
    let b0 = round_half_up(ideal_h).max(1);
    if (min_patches..=max_patches).contains(&(a0 * b0)) {
        return (a0, b0);
    }

    // Otherwise search widths outward from the nearest one. For a fixed width
    // the best height is the nearest one clamped into the feasible range, and
    // a width further than the best distance found so far cannot win.
    let best_height = |a: u64| -> Option<u64> {
        let lo = min_patches.div_ceil(a).max(1);
        let hi = max_patches / a;
        (lo <= hi).then(|| round_half_up(ideal_h).clamp(lo, hi))
    };
    let mut best: Option<((u64, u64), GridKey)> = None;
    let consider = |a: u64, best: &mut Option<((u64, u64), GridKey)>| {
        if let Some(b) = best_height(a) {
            let key = grid_key(a, b, ideal_w, ideal_h);
            if best.as_ref().is_none_or(|(_, k)| better(key, *k)) {
                *best = Some(((a, b), key));
            }
        }
    };
    let bound = |best: &Option<((u64, u64), GridKey)>| best.as_ref().map_or(f64::INFINITY, |(_, k)| k.0);

    let mut a = a0;
    while a <= max_patches && (a as f64 - ideal_w).abs() <= bound(&best) {
        consider(a, &mut best);
        a += 1;
    }
    let mut a = a0;
    while a > 1 && (ideal_w - (a - 1) as f64).abs() <= bound(&best) {
        a -= 1;
        consider(a, &mut best);
    }
    best.map(|(p, _)| p).expect("tier bounds always admit a 1-patch-wide grid")
}
