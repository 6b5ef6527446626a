//! WebAssembly bindings for the browser demo in `www/`: render a synthetic
//! eye, locate its iris with the integro-differential operator, and score a
//! box against the ground truth.
//!
//! The `#[wasm_bindgen]` exports are thin wrappers over plain functions so
//! the logic is testable natively.

use wasm_bindgen::prelude::*;

use irisloc::daugman::{circle_to_bbox, daugman_locate, radial_profile, ArcMask, DaugmanConfig};
use irisloc::eval::{metrics, pixel_counts};
use irisloc::synth::{render_eye as render, EyeParams};
use irisloc::{BBox, GrayImage};

pub const SIDE: usize = 128;

/// Scene settings exposed by the page sliders; everything else keeps the
/// renderer defaults.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scene {
    pub cx: f64,
    pub cy: f64,
    pub r: f64,
    pub occlusion: f64,
    pub noise_sigma: f64,
    pub highlight: bool,
    pub seed: u64,
}

pub fn eye_pixels(s: &Scene) -> Result<Vec<u8>, String> {
    let p = EyeParams {
        width: SIDE,
        height: SIDE,
        cx: s.cx,
        cy: s.cy,
        r: s.r,
        occlusion: s.occlusion,
        noise_sigma: s.noise_sigma,
        highlight: s.highlight,
        seed: s.seed,
        ..EyeParams::default()
    };
    let (img, _) = render(&p).map_err(|e| e.to_string())?;
    Ok(img.into_data())
}

/// Ground-truth box of a scene as `[x, y, w, h]`.
pub fn eye_box(s: &Scene) -> [i64; 4] {
    let b = EyeParams { cx: s.cx, cy: s.cy, r: s.r, ..EyeParams::default() }.bbox();
    [b.x, b.y, b.w, b.h]
}

/// `[cx, cy, r, score, x, y, w, h]` followed by the radial profile at the
/// located center (one value per radius from `r_min`).
pub fn locate_pixels(
    pixels: &[u8],
    width: usize,
    height: usize,
    r_min: usize,
    r_max: usize,
    stride: usize,
    lateral: bool,
) -> Result<Vec<f64>, String> {
    let img = GrayImage::new(width, height, pixels.to_vec()).map_err(|e| e.to_string())?;
    let cfg = DaugmanConfig {
        r_min,
        r_max,
        center_stride_coarse: stride,
        arc_mask: if lateral { ArcMask::lateral() } else { ArcMask::full() },
        ..DaugmanConfig::default()
    };
    let (c, score) = daugman_locate(&img, &cfg).map_err(|e| e.to_string())?;
    let b = circle_to_bbox(c, width, height);
    let profile = radial_profile(&img, c.cx, c.cy, &cfg).map_err(|e| e.to_string())?;
    let mut out = vec![c.cx, c.cy, c.r, score, b.x as f64, b.y as f64, b.w as f64, b.h as f64];
    out.extend(profile.values);
    Ok(out)
}

/// `[tp, fp, fn, tn, recall, precision, accuracy, iou]`.
pub fn box_scores(gt: [i64; 4], pred: [i64; 4], width: usize, height: usize) -> Result<Vec<f64>, String> {
    let b = |v: [i64; 4]| BBox::new(v[0], v[1], v[2], v[3]).map_err(|e| e.to_string());
    let c = pixel_counts(&b(gt)?, &b(pred)?, width, height).map_err(|e| e.to_string())?;
    let m = metrics(&c);
    Ok(vec![c.tp as f64, c.fp as f64, c.fn_ as f64, c.tn as f64, m.recall, m.precision, m.accuracy, m.iou])
}

fn four(v: &[i32]) -> Result<[i64; 4], JsError> {
    match v {
        &[a, b, c, d] => Ok([a as i64, b as i64, c as i64, d as i64]),
        _ => Err(JsError::new("a box is [x, y, w, h]")),
    }
}

/// 128x128 grayscale eye, row-major.
#[wasm_bindgen(js_name = renderEye)]
#[allow(clippy::too_many_arguments)]
pub fn render_eye(
    cx: f64,
    cy: f64,
    r: f64,
    occlusion: f64,
    noise_sigma: f64,
    highlight: bool,
    seed: u32,
) -> Result<Vec<u8>, JsError> {
    let s = Scene { cx, cy, r, occlusion, noise_sigma, highlight, seed: seed as u64 };
    eye_pixels(&s).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = groundTruthBox)]
pub fn ground_truth_box(cx: f64, cy: f64, r: f64) -> Vec<i32> {
    let s = Scene { cx, cy, r, occlusion: 0.0, noise_sigma: 0.0, highlight: false, seed: 0 };
    eye_box(&s).iter().map(|&v| v as i32).collect()
}

#[wasm_bindgen]
pub fn locate(
    pixels: &[u8],
    width: usize,
    height: usize,
    r_min: usize,
    r_max: usize,
    stride: usize,
    lateral: bool,
) -> Result<Vec<f64>, JsError> {
    locate_pixels(pixels, width, height, r_min, r_max, stride, lateral).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = boxMetrics)]
pub fn box_metrics(gt: &[i32], pred: &[i32], width: usize, height: usize) -> Result<Vec<f64>, JsError> {
    box_scores(four(gt)?, four(pred)?, width, height).map_err(|e| JsError::new(&e))
}
