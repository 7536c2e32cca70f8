mod common;

use proptest::prelude::*;
use vrdoc::doc_model::{clamp_region, union_area, valid_area_ratio, BBox, ElementCategory, Page, Region};

fn int_box(max: u32) -> impl Strategy<Value = BBox> {
    (0..max, 0..max, 1..max / 2, 1..max / 2).prop_map(|(x, y, w, h)| common::bbox(x as f64, y as f64, (x + w) as f64, (y + h) as f64))
}

fn page_with(boxes: &[BBox], w: u32, h: u32) -> Page {
    let regions = boxes
        .iter()
        .enumerate()
        .map(|(i, b)| Region::new(format!("r{i}"), *b, ElementCategory::Text))
        .collect();
    Page::new("p", w, h, regions).unwrap()
}

proptest! {
    #[test]
    fn union_matches_raster(boxes in prop::collection::vec(int_box(60), 0..8)) {
        // Integer corners and unit cells make the raster count exact.
        let page = page_with(&boxes, 60, 60);
        let clipped: Vec<BBox> = boxes.iter().filter_map(|b| b.intersect(&page.bounds())).collect();
        prop_assert_eq!(union_area(&clipped), common::raster_area(&page, 1.0));
        prop_assert!((valid_area_ratio(&page) - common::raster_area(&page, 1.0) / 3600.0).abs() < 1e-12);
    }

    #[test]
    fn ratio_in_unit_interval_and_monotone(boxes in prop::collection::vec(int_box(80), 1..8), extra in int_box(80)) {
        let before = valid_area_ratio(&page_with(&boxes, 80, 80));
        let mut more = boxes.clone();
        more.push(extra);
        let after = valid_area_ratio(&page_with(&more, 80, 80));
        prop_assert!((0.0..=1.0).contains(&before));
        prop_assert!(after >= before - 1e-12);
    }

    #[test]
    fn duplicates_do_not_change_union(boxes in prop::collection::vec(int_box(50), 1..6)) {
        let mut doubled = boxes.clone();
        doubled.extend(boxes.iter().copied());
        prop_assert_eq!(union_area(&doubled), union_area(&boxes));
    }

    #[test]
    fn ratio_is_scale_invariant(boxes in prop::collection::vec(int_box(40), 1..6), k in 1u32..5) {
        let scaled: Vec<BBox> = boxes.iter().map(|b| b.scale(k as f64).unwrap()).collect();
        let a = valid_area_ratio(&page_with(&boxes, 40, 40));
        let b = valid_area_ratio(&page_with(&scaled, 40 * k, 40 * k));
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn clamp_is_idempotent(b in int_box(120)) {
        let page = page_with(&[], 70, 70);
        let region = Region::new("r", b, ElementCategory::Text);
        match clamp_region(&region, &page) {
            Ok(once) => {
                let twice = clamp_region(&once, &page).unwrap();
                prop_assert_eq!(&once, &twice);
                prop_assert!(once.bbox.x1() <= 70.0 && once.bbox.y1() <= 70.0);
            }
            Err(_) => prop_assert!(b.x0() >= 70.0 || b.y0() >= 70.0),
        }
    }

    #[test]
    fn iou_is_symmetric_and_bounded(a in int_box(50), b in int_box(50)) {
        let (ab, ba) = (a.iou(&b), b.iou(&a));
        prop_assert_eq!(ab, ba);
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert_eq!(a.iou(&a), 1.0);
    }
}
