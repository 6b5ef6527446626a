use std::fs;

use proptest::prelude::*;

use irisloc::dataset::load_manifest;
use irisloc::image::load_grayscale;
use irisloc::synth::{generate_corpus, render_corpus, render_eye, CorpusSpec, EyeParams};
use irisloc::BBox;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ground_truth_is_the_analytic_square(
        r in 8u32..40, dx in 0u32..=40, dy in 0u32..=40, occlusion in 0.0f64..0.4, seed in any::<u64>(),
    ) {
        let p = EyeParams {
            cx: (r + 2 + dx) as f64,
            cy: (r + 2 + dy) as f64,
            r: r as f64,
            occlusion,
            noise_sigma: 4.0,
            highlight: seed % 2 == 0,
            seed,
            ..EyeParams::default()
        };
        prop_assume!(p.validate().is_ok());
        let (_, ann) = render_eye(&p).unwrap();
        let side = 2 * r as i64;
        prop_assert_eq!(ann.bbox, BBox::square(p.cx as i64 - r as i64, p.cy as i64 - r as i64, side));
    }
}

#[test]
fn written_corpus_matches_the_in_memory_one() {
    let dir = tempfile::tempdir().unwrap();
    let spec = CorpusSpec::default();
    let m = generate_corpus(12, &spec, 21, dir.path()).unwrap();
    let again = load_manifest(dir.path().join("annotations.csv")).unwrap();
    assert_eq!(again, m);
    for ((img, ann), a) in render_corpus(12, &spec, 21).unwrap().iter().zip(&m.entries) {
        assert_eq!(ann, a);
        assert_eq!(&load_grayscale(m.image_path(a)).unwrap(), img);
    }
    assert_eq!(fs::read_dir(dir.path().join("images")).unwrap().count(), 12);
}
