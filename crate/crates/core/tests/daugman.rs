mod common;

use proptest::prelude::*;

use common::disk;
use irisloc::daugman::{daugman_locate, radial_profile, DaugmanConfig};
use irisloc::synth::{render_corpus, CorpusSpec};
use irisloc::GrayImage;

fn small_cfg() -> DaugmanConfig {
    DaugmanConfig { r_min: 10, r_max: 30, ..DaugmanConfig::default() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn offsets_change_neither_circle_nor_score(
        cx in 40i32..56, cy in 40i32..56, r in 14i32..24, c in 1u8..40,
    ) {
        let img = disk(96, 96, cx as f64, cy as f64, r as f64, 60.0, 180.0);
        let lifted = GrayImage::from_fn(96, 96, |x, y| img.get(x, y) + c);
        let (a, sa) = daugman_locate(&img, &small_cfg()).unwrap();
        let (b, sb) = daugman_locate(&lifted, &small_cfg()).unwrap();
        prop_assert_eq!(a, b);
        prop_assert!((sa - sb).abs() < 1e-9);
    }

    #[test]
    fn translation_moves_the_center_by_the_same_amount(
        cx in 42i32..48, cy in 42i32..48, r in 14i32..20, dx in -4i32..=4, dy in -4i32..=4,
    ) {
        let cfg = small_cfg();
        let a = disk(128, 128, cx as f64, cy as f64, r as f64, 70.0, 190.0);
        let b = disk(128, 128, (cx + dx) as f64, (cy + dy) as f64, r as f64, 70.0, 190.0);
        let (ca, sa) = daugman_locate(&a, &cfg).unwrap();
        let (cb, sb) = daugman_locate(&b, &cfg).unwrap();
        prop_assert_eq!((cb.cx - ca.cx, cb.cy - ca.cy), (dx as f64, dy as f64));
        prop_assert_eq!(ca.r, cb.r);
        prop_assert!((sa - sb).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn true_circle_dominates_distant_centers(cx in 40i32..56, cy in 40i32..56, r in 14i32..22) {
        let cfg = small_cfg();
        let img = disk(96, 96, cx as f64, cy as f64, r as f64, 50.0, 200.0);
        let at_truth = radial_profile(&img, cx as f64, cy as f64, &cfg).unwrap();
        let truth_score = at_truth.values[(r - 1) as usize - cfg.r_min]
            .max(at_truth.values[r as usize - cfg.r_min]);
        for y in cfg.r_min..=96 - cfg.r_min {
            for x in cfg.r_min..=96 - cfg.r_min {
                if (x as f64 - cx as f64).hypot(y as f64 - cy as f64) <= 3.0 {
                    continue;
                }
                let p = radial_profile(&img, x as f64, y as f64, &cfg).unwrap();
                prop_assert!(p.peak().1 < truth_score, "({x}, {y}) scores {} >= {truth_score}", p.peak().1);
            }
        }
    }
}

#[test]
fn refine_matches_exhaustive_on_small_images() {
    let spec = CorpusSpec { width: 96, height: 96, radius: 16..=26, ..CorpusSpec::default() };
    let cfg = DaugmanConfig { r_min: 12, r_max: 34, ..DaugmanConfig::default() };
    for (img, ann) in render_corpus(6, &spec, 31).unwrap() {
        let fast = daugman_locate(&img, &cfg).unwrap();
        let oracle = common::exhaustive_daugman(&img, &cfg);
        assert_eq!(fast, oracle, "{}", ann.image_id);
    }
}

#[test]
fn clean_corpus_is_recovered_within_two_pixels() {
    let spec = CorpusSpec { noise_sigma: 0.0..=0.0, occlusion: 0.0..=0.0, ..CorpusSpec::default() };
    let cfg = DaugmanConfig::default();
    for (img, ann) in render_corpus(100, &spec, 12).unwrap() {
        let truth = ann.circle.unwrap();
        let (c, _) = daugman_locate(&img, &cfg).unwrap();
        assert!(
            (c.cx - truth.cx).abs() <= 2.0 && (c.cy - truth.cy).abs() <= 2.0 && (c.r - truth.r).abs() <= 2.0,
            "{}: {c:?} vs {truth:?}",
            ann.image_id
        );
    }
}
