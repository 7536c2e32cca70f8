//! Crop and resample region images for remote recognizers.

use std::io::Cursor;
use std::path::Path;

use image::imageops::FilterType;
use image::{DynamicImage, GenericImageView, ImageFormat};

use crate::doc_model::BBox;
use crate::error::{Error, Result};
use crate::resolution::ResizePlan;

pub fn load_image(path: &Path) -> Result<DynamicImage> {
    image::open(path).map_err(|e| Error::MissingImage(format!("{}: {e}", path.display())))
}

/// Cuts `crop` (page coordinates) out of the page image, resamples it to
/// the planned size and encodes it as PNG. The image may be stored at a
/// different resolution than the page coordinates.
pub fn crop_to_png(img: &DynamicImage, page_size: (u32, u32), crop: &BBox, plan: &ResizePlan) -> Result<Vec<u8>> {
    let (iw, ih) = img.dimensions();
    let sx = iw as f64 / page_size.0.max(1) as f64;
    let sy = ih as f64 / page_size.1.max(1) as f64;
    let x0 = ((crop.x0() * sx).floor() as u32).min(iw.saturating_sub(1));
    let y0 = ((crop.y0() * sy).floor() as u32).min(ih.saturating_sub(1));
    let x1 = ((crop.x1() * sx).ceil() as u32).clamp(x0 + 1, iw);
    let y1 = ((crop.y1() * sy).ceil() as u32).clamp(y0 + 1, ih);
    let region = img.crop_imm(x0, y0, x1 - x0, y1 - y0);
    let resized = region.resize_exact(plan.dst_w, plan.dst_h, FilterType::CatmullRom);
    let mut out = Vec::new();
    resized
        .write_to(&mut Cursor::new(&mut out), ImageFormat::Png)
        .map_err(|e| Error::Backend(format!("PNG encoding failed: {e}")))?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resolution::{plan_resize, Tier};

    #[test]
    fn crop_has_planned_size() {
        let img = DynamicImage::new_rgb8(200, 100);
        let crop = BBox::new(10.0, 10.0, 110.0, 60.0).unwrap();
        let plan = plan_resize(100, 50, Tier::S).unwrap();
        let png = crop_to_png(&img, (400, 200), &crop, &plan).unwrap();
        let back = image::load_from_memory(&png).unwrap();
        assert_eq!(back.dimensions(), (plan.dst_w, plan.dst_h));
    }
}
