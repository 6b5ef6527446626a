//! Integro-differential circle search.
//!
//! For every candidate center the mean intensity is sampled on concentric
//! circles of unit-spaced radii; the absolute radial difference of those means,
//! smoothed by a 1-D Gaussian along the radius axis, is the operator response.
//! The circle with the strongest response wins.

use serde::{Deserialize, Serialize};

use crate::bbox::BBox;
use crate::error::{Error, Result};
use crate::image::{convolve_replicate, gaussian_kernel, GrayImage};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircleParams {
    pub cx: f64,
    pub cy: f64,
    pub r: f64,
}

impl CircleParams {
    pub fn new(cx: f64, cy: f64, r: f64) -> Self {
        Self { cx, cy, r }
    }
}

/// Angular sector `[start, end)` in degrees, counter-clockwise from the
/// positive x-axis. `start` may be negative to express a sector crossing 0°.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArcSector {
    pub start: f64,
    pub end: f64,
}

/// Set of sectors the contour samples are drawn from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ArcMask(pub Vec<ArcSector>);

impl ArcMask {
    pub fn full() -> Self {
        ArcMask(vec![ArcSector { start: 0.0, end: 360.0 }])
    }

    /// Left and right quadrants only; the top and bottom arcs
    /// (`[45°, 135°]`, `[225°, 315°]`) are where eyelids sit.
    pub fn lateral() -> Self {
        ArcMask(vec![ArcSector { start: -45.0, end: 45.0 }, ArcSector { start: 135.0, end: 225.0 }])
    }

    fn validate(&self) -> Result<f64> {
        let mut span = 0.0;
        for s in &self.0 {
            if !(s.end > s.start) || s.end - s.start > 360.0 {
                return Err(Error::InvalidArgument(format!("arc sector [{}, {})", s.start, s.end)));
            }
            span += s.end - s.start;
        }
        if self.0.is_empty() || span > 360.0 + 1e-9 {
            return Err(Error::InvalidArgument("arc mask must be non-empty and at most 360°".into()));
        }
        Ok(span)
    }

    /// Unit direction vectors for `n` points spaced uniformly by arc length
    /// over the concatenated sectors. Image y grows downward, so the
    /// y component is negated to keep angles counter-clockwise on screen.
    pub fn directions(&self, n: usize) -> Result<Vec<(f64, f64)>> {
        let span = self.validate()?;
        let step = span / n as f64;
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let mut t = (i as f64 + 0.5) * step;
            let mut theta = self.0[self.0.len() - 1].end;
            for s in &self.0 {
                let len = s.end - s.start;
                if t < len {
                    theta = s.start + t;
                    break;
                }
                t -= len;
            }
            let rad = theta.to_radians();
            out.push((rad.cos(), -rad.sin()));
        }
        Ok(out)
    }
}

impl Default for ArcMask {
    fn default() -> Self {
        Self::lateral()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DaugmanConfig {
    pub r_min: usize,
    pub r_max: usize,
    pub center_stride_coarse: usize,
    pub angular_samples: usize,
    pub sigma_radial: f64,
    pub arc_mask: ArcMask,
    pub refine: bool,
    pub score_floor: f64,
}

impl Default for DaugmanConfig {
    fn default() -> Self {
        Self {
            r_min: 16,
            r_max: 60,
            center_stride_coarse: 4,
            angular_samples: 64,
            sigma_radial: 1.0,
            arc_mask: ArcMask::lateral(),
            refine: true,
            score_floor: 1.0,
        }
    }
}

impl DaugmanConfig {
    pub fn validate(&self) -> Result<()> {
        if self.r_min < 1 || self.r_min >= self.r_max {
            return Err(Error::InvalidArgument(format!(
                "radius range [{}, {}] must satisfy 1 <= r_min < r_max",
                self.r_min, self.r_max
            )));
        }
        if self.r_max - self.r_min < 3 {
            return Err(Error::RangeTooSmall(self.r_max - self.r_min));
        }
        if self.angular_samples < 16 {
            return Err(Error::InvalidArgument(format!(
                "angular_samples = {} (need >= 16)",
                self.angular_samples
            )));
        }
        if self.center_stride_coarse < 1 {
            return Err(Error::InvalidArgument("center_stride_coarse must be >= 1".into()));
        }
        if !(self.sigma_radial > 0.0) {
            return Err(Error::InvalidArgument("sigma_radial must be > 0".into()));
        }
        self.arc_mask.validate()?;
        Ok(())
    }

    fn validate_for(&self, img: &GrayImage) -> Result<()> {
        self.validate()?;
        let min_side = img.width().min(img.height());
        if min_side < 2 * self.r_min + 3 {
            return Err(Error::ImageTooSmall {
                width: img.width(),
                height: img.height(),
                min: 2 * self.r_min + 3,
            });
        }
        if 2 * self.r_max >= min_side {
            return Err(Error::InvalidArgument(format!(
                "r_max = {} must be below half the smaller image side ({min_side})",
                self.r_max
            )));
        }
        Ok(())
    }
}

/// Mean of bilinear samples on the unmasked part of the circle. Samples
/// falling outside the image are skipped.
pub fn circular_mean_intensity(
    img: &GrayImage,
    circle: CircleParams,
    mask: &ArcMask,
    samples: usize,
) -> Result<f64> {
    let dirs = mask.directions(samples.max(1))?;
    mean_on_circle(img, circle.cx, circle.cy, circle.r, &dirs).ok_or(Error::AllSamplesOutside)
}

#[inline]
fn mean_on_circle(img: &GrayImage, cx: f64, cy: f64, r: f64, dirs: &[(f64, f64)]) -> Option<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for &(dx, dy) in dirs {
        if let Some(v) = img.sample_bilinear(cx + r * dx, cy + r * dy) {
            sum += v;
            n += 1;
        }
    }
    (n > 0).then(|| sum / n as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    /// `r_min..=r_max`.
    pub radii: Vec<usize>,
    /// Smoothed `|m(r+1) - m(r)|` for each radius.
    pub values: Vec<f64>,
    /// Radii whose difference could not be formed because a circle had no
    /// sample inside the image; their raw contribution is zero.
    pub outside: Vec<bool>,
}

impl RadialProfile {
    /// Peak value and its radius; the smaller radius wins a tie.
    pub fn peak(&self) -> (usize, f64) {
        self.peak_up_to(usize::MAX).expect("profile is never empty")
    }

    /// Peak over radii `<= r_limit`.
    pub fn peak_up_to(&self, r_limit: usize) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for (&r, &v) in self.radii.iter().zip(&self.values).take_while(|(&r, _)| r <= r_limit) {
            if best.is_none_or(|b| v > b.1) {
                best = Some((r, v));
            }
        }
        best
    }
}

/// Precomputed sampling geometry shared by every center of one search.
struct Sampler {
    r_min: usize,
    r_max: usize,
    dirs: Vec<(f64, f64)>,
    kernel: Vec<f64>,
}

impl Sampler {
    fn new(cfg: &DaugmanConfig) -> Result<Self> {
        Ok(Self {
            r_min: cfg.r_min,
            r_max: cfg.r_max,
            dirs: cfg.arc_mask.directions(cfg.angular_samples)?,
            kernel: gaussian_kernel(cfg.sigma_radial),
        })
    }

    /// Largest searched radius `r` whose outer circle `r + 1` has every
    /// unmasked sample inside the image.
    fn max_fitting_radius(&self, img: &GrayImage, cx: f64, cy: f64) -> Option<usize> {
        let (w, h) = (img.width() as f64, img.height() as f64);
        let fits = |r: f64| {
            self.dirs.iter().all(|&(dx, dy)| {
                let (u, v) = (cx + r * dx, cy + r * dy);
                u >= 0.0 && v >= 0.0 && u < w && v < h
            })
        };
        (self.r_min..=self.r_max).rev().find(|&r| fits((r + 1) as f64))
    }

    fn profile(&self, img: &GrayImage, cx: f64, cy: f64) -> RadialProfile {
        self.profile_span(img, cx, cy, 1)
    }

    /// Profile of `|m(r+span) - m(r)|`. Only the unit span is smoothed; a
    /// wider span already averages over its width.
    fn profile_span(&self, img: &GrayImage, cx: f64, cy: f64, span: usize) -> RadialProfile {
        let means: Vec<Option<f64>> = (self.r_min..=self.r_max + span)
            .map(|r| mean_on_circle(img, cx, cy, r as f64, &self.dirs))
            .collect();
        let n = self.r_max - self.r_min + 1;
        let mut raw = Vec::with_capacity(n);
        let mut outside = Vec::with_capacity(n);
        for i in 0..n {
            match (means[i], means[i + span]) {
                (Some(a), Some(b)) => {
                    raw.push((b - a).abs());
                    outside.push(false);
                }
                _ => {
                    raw.push(0.0);
                    outside.push(true);
                }
            }
        }
        RadialProfile {
            radii: (self.r_min..=self.r_max).collect(),
            values: if span == 1 { convolve_replicate(&raw, &self.kernel) } else { raw },
            outside,
        }
    }
}

pub fn radial_profile(img: &GrayImage, cx: f64, cy: f64, cfg: &DaugmanConfig) -> Result<RadialProfile> {
    cfg.validate()?;
    if !(cx >= 0.0 && cy >= 0.0 && cx < img.width() as f64 && cy < img.height() as f64) {
        return Err(Error::InvalidArgument(format!("center ({cx}, {cy}) outside the image")));
    }
    Ok(Sampler::new(cfg)?.profile(img, cx, cy))
}

/// Best circle at one integer center.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    cx: i64,
    cy: i64,
    r: usize,
    score: f64,
}

impl Candidate {
    /// Higher score first, then smaller radius, then smaller (cy, cx).
    fn beats(&self, other: &Candidate) -> bool {
        if self.score != other.score {
            return self.score > other.score;
        }
        (self.r, self.cy, self.cx) < (other.r, other.cy, other.cx)
    }
}

/// Integer center coordinates searched along one axis.
fn center_range(len: usize, r_min: usize) -> (i64, i64) {
    (r_min as i64, (len - r_min) as i64)
}

/// Radial difference span of the coarse stage. An edge seen from a center
/// up to `stride / 2` px off on each axis is smeared over about
/// `sqrt(2) * stride` radii, which a unit difference splits into weak pieces.
pub fn coarse_span(stride: usize) -> usize {
    ((stride as f64) * std::f64::consts::SQRT_2).ceil() as usize
}

fn evaluate(
    sampler: &Sampler,
    img: &GrayImage,
    span: usize,
    xs: impl Iterator<Item = i64> + Clone,
    ys: impl Iterator<Item = i64>,
    best: &mut Option<Candidate>,
) {
    for cy in ys {
        for cx in xs.clone() {
            let (x, y) = (cx as f64, cy as f64);
            let Some(limit) = sampler.max_fitting_radius(img, x, y) else { continue };
            let Some((r, score)) = sampler.profile_span(img, x, y, span).peak_up_to(limit) else { continue };
            let cand = Candidate { cx, cy, r, score };
            if best.as_ref().is_none_or(|b| cand.beats(b)) {
                *best = Some(cand);
            }
        }
    }
}

/// Locate the strongest circular edge. Returns the circle and its smoothed
/// radial-derivative score.
///
/// Only circles whose unmasked arcs lie inside the image compete: at each
/// center the peak is taken over radii `r` for which circle `r + 1` fits.
///
/// With `refine`, the coarse grid is ranked by the wide difference of
/// [`coarse_span`] and only the stride-1 pass around its winner is scored
/// with the unit difference.
///
/// The reported radius sits halfway between the two sampled circles whose
/// mean difference peaked, i.e. on the edge itself.
pub fn daugman_locate(img: &GrayImage, cfg: &DaugmanConfig) -> Result<(CircleParams, f64)> {
    cfg.validate_for(img)?;
    let sampler = Sampler::new(cfg)?;
    let (x_lo, x_hi) = center_range(img.width(), cfg.r_min);
    let (y_lo, y_hi) = center_range(img.height(), cfg.r_min);
    let stride = cfg.center_stride_coarse;
    let refine = cfg.refine && stride > 1;

    let mut coarse = None;
    evaluate(
        &sampler,
        img,
        if refine { coarse_span(stride) } else { 1 },
        (x_lo..=x_hi).step_by(stride),
        (y_lo..=y_hi).step_by(stride),
        &mut coarse,
    );
    let Some(coarse) = coarse else {
        return Err(Error::NoCircleFound { score: 0.0, floor: cfg.score_floor });
    };
    let best = if refine {
        let s = stride as i64;
        let mut fine = None;
        evaluate(
            &sampler,
            img,
            1,
            (coarse.cx - s).max(x_lo)..=(coarse.cx + s).min(x_hi),
            (coarse.cy - s).max(y_lo)..=(coarse.cy + s).min(y_hi),
            &mut fine,
        );
        fine.expect("fine window contains the coarse center")
    } else {
        coarse
    };
    if best.score < cfg.score_floor {
        return Err(Error::NoCircleFound { score: best.score, floor: cfg.score_floor });
    }
    Ok((CircleParams::new(best.cx as f64, best.cy as f64, best.r as f64 + 0.5), best.score))
}

/// Square of side `2r` centered on the circle, clipped to the image.
pub fn circle_to_bbox(c: CircleParams, img_w: usize, img_h: usize) -> BBox {
    let side = ((2.0 * c.r + 0.5).floor() as i64).max(1);
    let x = (c.cx - side as f64 / 2.0 + 0.5).floor() as i64;
    let y = (c.cy - side as f64 / 2.0 + 0.5).floor() as i64;
    let full = BBox::square(x, y, side);
    full.clip(img_w, img_h).unwrap_or(full)
}
