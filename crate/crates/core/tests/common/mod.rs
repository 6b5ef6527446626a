//! Reference implementations used as test oracles.
#![allow(dead_code)]

use irisloc::daugman::{radial_profile, CircleParams, DaugmanConfig};
use irisloc::eval::EvalCounts;
use irisloc::hogsvm::{hog_descriptor, HogConfig, LinearModel, ScanConfig};
use irisloc::image::crop_resize;
use irisloc::{BBox, GrayImage};

/// Per-pixel classification over the whole image grid.
pub fn brute_counts(gt: &BBox, pred: &BBox, w: usize, h: usize) -> EvalCounts {
    let inside = |b: &BBox, x: i64, y: i64| x >= b.x && x < b.x + b.w && y >= b.y && y < b.y + b.h;
    let mut c = EvalCounts::default();
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            match (inside(gt, x, y), inside(pred, x, y)) {
                (true, true) => c.tp += 1,
                (false, true) => c.fp += 1,
                (true, false) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
    }
    c
}

/// Every window at every scale with stride 1; best score, then smaller
/// side, then smaller (y, x).
pub fn exhaustive_window_argmax(img: &GrayImage, model: &LinearModel, scan: &ScanConfig, hog: &HogConfig) -> (BBox, f64) {
    let mut all = Vec::new();
    for side in scan.scale_sides() {
        if side > img.width() || side > img.height() {
            continue;
        }
        for y in 0..=img.height() - side {
            for x in 0..=img.width() - side {
                let b = BBox::square(x as i64, y as i64, side as i64);
                let window = crop_resize(img, &b, hog.window_side).unwrap();
                let f = hog_descriptor(&window, hog).unwrap();
                let s: f64 = model.weights.iter().zip(&f.0).map(|(w, v)| w * v).sum::<f64>() + model.bias;
                all.push((s, side, y, x, b));
            }
        }
    }
    all.sort_by(|a, b| b.0.total_cmp(&a.0).then((a.1, a.2, a.3).cmp(&(b.1, b.2, b.3))));
    (all[0].4, all[0].0)
}

/// Every integer center in `[r_min, len - r_min]` and every radius whose
/// circle `r + 1` keeps all unmasked samples inside the image; best score,
/// then smaller radius, then smaller (cy, cx).
pub fn exhaustive_daugman(img: &GrayImage, cfg: &DaugmanConfig) -> (CircleParams, f64) {
    let dirs = cfg.arc_mask.directions(cfg.angular_samples).unwrap();
    let (w, h) = (img.width() as f64, img.height() as f64);
    let mut all = Vec::new();
    for cy in cfg.r_min..=img.height() - cfg.r_min {
        for cx in cfg.r_min..=img.width() - cfg.r_min {
            let (x, y) = (cx as f64, cy as f64);
            let p = radial_profile(img, x, y, cfg).unwrap();
            for (&r, &v) in p.radii.iter().zip(&p.values) {
                let rr = (r + 1) as f64;
                let inside = dirs.iter().all(|&(dx, dy)| {
                    let (u, t) = (x + rr * dx, y + rr * dy);
                    (0.0..w).contains(&u) && (0.0..h).contains(&t)
                });
                if inside {
                    all.push((v, r, cy, cx));
                }
            }
        }
    }
    all.sort_by(|a, b| b.0.total_cmp(&a.0).then((a.1, a.2, a.3).cmp(&(b.1, b.2, b.3))));
    let (s, r, cy, cx) = all[0];
    (CircleParams::new(cx as f64, cy as f64, r as f64 + 0.5), s)
}

/// Filled disk over a constant background, 4x4 supersampled.
pub fn disk(w: usize, h: usize, cx: f64, cy: f64, r: f64, inside: f64, outside: f64) -> GrayImage {
    GrayImage::from_fn(w, h, |x, y| {
        let mut hits = 0;
        for j in 0..4 {
            for i in 0..4 {
                let u = x as f64 + (i as f64 + 0.5) / 4.0;
                let v = y as f64 + (j as f64 + 0.5) / 4.0;
                if (u - cx).hypot(v - cy) <= r {
                    hits += 1;
                }
            }
        }
        let f = hits as f64 / 16.0;
        (inside * f + outside * (1.0 - f)).round() as u8
    })
}
