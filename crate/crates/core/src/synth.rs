//! Deterministic synthetic periocular images with exact iris ground truth.

use std::fs;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bbox::BBox;
use crate::daugman::{circle_to_bbox, CircleParams};
use crate::dataset::{Annotation, Manifest, Split};
use crate::error::{Error, Result};
use crate::image::{quantize, save_pgm, GrayImage};

const SUPERSAMPLE: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EyeParams {
    pub width: usize,
    pub height: usize,
    pub cx: f64,
    pub cy: f64,
    pub r: f64,
    /// Pupil radius as a fraction of the iris radius, in (0.2, 0.6).
    pub pupil_ratio: f64,
    pub sclera: f64,
    pub iris: f64,
    pub pupil: f64,
    pub skin: f64,
    /// Peak deviation of the angular (spoke) texture on the iris.
    pub texture_amplitude: f64,
    pub texture_frequency: u32,
    /// Fraction of the iris diameter hidden by the two lids together, in [0, 0.4].
    pub occlusion: f64,
    pub highlight: bool,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for EyeParams {
    fn default() -> Self {
        Self {
            width: 128,
            height: 128,
            cx: 64.0,
            cy: 64.0,
            r: 28.0,
            pupil_ratio: 0.4,
            sclera: 210.0,
            iris: 110.0,
            pupil: 60.0,
            skin: 165.0,
            texture_amplitude: 8.0,
            texture_frequency: 12,
            occlusion: 0.0,
            highlight: false,
            noise_sigma: 0.0,
            seed: 0,
        }
    }
}

impl EyeParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if self.width == 0 || self.height == 0 {
            return bad(format!("image size {}x{}", self.width, self.height));
        }
        if !(self.pupil_ratio > 0.2 && self.pupil_ratio < 0.6) {
            return bad(format!("pupil ratio {} outside (0.2, 0.6)", self.pupil_ratio));
        }
        if !(0.0..=0.4).contains(&self.occlusion) {
            return bad(format!("occlusion {} outside [0, 0.4]", self.occlusion));
        }
        let half = self.width.min(self.height) as f64 / 2.0;
        if !(self.r > 0.0 && self.r < half) {
            return bad(format!("iris radius {} must be in (0, {half})", self.r));
        }
        let margin = 2.0;
        if self.cx - self.r < margin
            || self.cy - self.r < margin
            || self.cx + self.r > self.width as f64 - margin
            || self.cy + self.r > self.height as f64 - margin
        {
            return bad(format!(
                "iris disk ({}, {}, {}) does not fit with a {margin}-px margin",
                self.cx, self.cy, self.r
            ));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad(format!("noise sigma {}", self.noise_sigma));
        }
        if !(self.texture_amplitude >= 0.0) {
            return bad(format!("texture amplitude {}", self.texture_amplitude));
        }
        for (name, v) in [("sclera", self.sclera), ("iris", self.iris), ("pupil", self.pupil), ("skin", self.skin)] {
            if !(0.0..=255.0).contains(&v) {
                return bad(format!("{name} intensity {v} outside [0, 255]"));
            }
        }
        Ok(())
    }

    pub fn circle(&self) -> CircleParams {
        CircleParams::new(self.cx, self.cy, self.r)
    }

    pub fn bbox(&self) -> BBox {
        circle_to_bbox(self.circle(), self.width, self.height)
    }
}

/// Scene intensity at a continuous point, before noise.
struct Scene<'a> {
    p: &'a EyeParams,
    phase: f64,
    pupil_r: f64,
    highlight: Option<(f64, f64, f64)>,
}

impl Scene<'_> {
    fn lid(&self, x: f64, y: f64) -> bool {
        let p = self.p;
        if p.occlusion <= 0.0 {
            return false;
        }
        let depth = p.occlusion * p.r;
        let bend = (x - p.cx).powi(2) / (3.0 * p.r);
        let upper = p.cy - p.r + depth + bend;
        let lower = p.cy + p.r - depth - bend;
        y < upper || y > lower
    }

    fn at(&self, x: f64, y: f64) -> f64 {
        let p = self.p;
        if self.lid(x, y) {
            return p.skin;
        }
        if let Some((hx, hy, hr)) = self.highlight {
            if (x - hx).powi(2) + (y - hy).powi(2) < hr * hr {
                return 255.0;
            }
        }
        let dx = x - p.cx;
        let dy = y - p.cy;
        let d2 = dx * dx + dy * dy;
        if d2 < self.pupil_r * self.pupil_r {
            p.pupil
        } else if d2 < p.r * p.r {
            let theta = dy.atan2(dx);
            p.iris + p.texture_amplitude * (p.texture_frequency as f64 * theta + self.phase).sin()
        } else {
            p.sclera
        }
    }
}

/// Render an eye and its annotation. Same parameters and seed give the same
/// image bits.
pub fn render_eye(p: &EyeParams) -> Result<(GrayImage, Annotation)> {
    p.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let phase = rng.random_range(0.0..std::f64::consts::TAU);
    let pupil_r = p.pupil_ratio * p.r;
    let highlight = p.highlight.then(|| {
        let angle = rng.random_range(0.0..std::f64::consts::TAU);
        let off = 0.5 * pupil_r;
        (p.cx + off * angle.cos(), p.cy + off * angle.sin(), (0.3 * pupil_r).max(1.0))
    });
    let scene = Scene { p, phase, pupil_r, highlight };

    let noise = Normal::new(0.0, p.noise_sigma.max(f64::MIN_POSITIVE)).expect("finite sigma");
    let step = 1.0 / SUPERSAMPLE as f64;
    let mut data = Vec::with_capacity(p.width * p.height);
    for y in 0..p.height {
        for x in 0..p.width {
            let mut acc = 0.0;
            for j in 0..SUPERSAMPLE {
                for i in 0..SUPERSAMPLE {
                    acc += scene.at(x as f64 + (i as f64 + 0.5) * step, y as f64 + (j as f64 + 0.5) * step);
                }
            }
            let mut v = acc / (SUPERSAMPLE * SUPERSAMPLE) as f64;
            if p.noise_sigma > 0.0 {
                v += noise.sample(&mut rng);
            }
            data.push(quantize(v));
        }
    }
    let img = GrayImage::new(p.width, p.height, data)?;
    let ann = Annotation {
        image_id: String::new(),
        path: PathBuf::new(),
        split: Split::Train,
        bbox: p.bbox(),
        circle: Some(p.circle()),
    };
    Ok((img, ann))
}

/// Parameter ranges for a corpus. Centers and radii are drawn as integers so
/// every ground-truth box is exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusSpec {
    pub width: usize,
    pub height: usize,
    pub radius: RangeInclusive<u32>,
    pub pupil_ratio: RangeInclusive<f64>,
    pub sclera: RangeInclusive<f64>,
    pub iris: RangeInclusive<f64>,
    pub pupil: RangeInclusive<f64>,
    pub skin: RangeInclusive<f64>,
    pub texture_amplitude: RangeInclusive<f64>,
    pub texture_frequency: RangeInclusive<u32>,
    pub occlusion: RangeInclusive<f64>,
    pub highlight_probability: f64,
    pub noise_sigma: RangeInclusive<f64>,
    pub test_fraction: f64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        Self {
            width: 128,
            height: 128,
            radius: 20..=36,
            pupil_ratio: 0.25..=0.5,
            sclera: 195.0..=230.0,
            iris: 100.0..=125.0,
            pupil: 60.0..=85.0,
            skin: 150.0..=175.0,
            texture_amplitude: 4.0..=12.0,
            texture_frequency: 8..=16,
            occlusion: 0.0..=0.1,
            highlight_probability: 0.5,
            noise_sigma: 0.0..=5.0,
            test_fraction: 0.2,
        }
    }
}

fn check_range<T: PartialOrd + std::fmt::Debug>(name: &str, r: &RangeInclusive<T>) -> Result<()> {
    if r.start() > r.end() {
        return Err(Error::InvalidParams(format!("{name} range {r:?} is empty")));
    }
    Ok(())
}

impl CorpusSpec {
    pub fn validate(&self) -> Result<()> {
        check_range("radius", &self.radius)?;
        check_range("pupil_ratio", &self.pupil_ratio)?;
        check_range("sclera", &self.sclera)?;
        check_range("iris", &self.iris)?;
        check_range("pupil", &self.pupil)?;
        check_range("skin", &self.skin)?;
        check_range("texture_amplitude", &self.texture_amplitude)?;
        check_range("texture_frequency", &self.texture_frequency)?;
        check_range("occlusion", &self.occlusion)?;
        check_range("noise_sigma", &self.noise_sigma)?;
        if !(0.0..=1.0).contains(&self.highlight_probability) {
            return Err(Error::InvalidParams("highlight_probability outside [0, 1]".into()));
        }
        if !(0.0..1.0).contains(&self.test_fraction) {
            return Err(Error::InvalidParams("test_fraction outside [0, 1)".into()));
        }
        let max_r = *self.radius.end() as usize;
        if 2 * max_r + 4 > self.width.min(self.height) {
            return Err(Error::InvalidParams(format!(
                "radius {max_r} does not fit a {}x{} image with margin",
                self.width, self.height
            )));
        }
        Ok(())
    }

    /// Parameters of image `index`, drawn from its own sub-seed.
    pub fn draw(&self, seed: u64, index: usize) -> EyeParams {
        let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, index));
        let r = rng.random_range(self.radius.clone()) as usize;
        let cx = rng.random_range(r + 2..=self.width - r - 2);
        let cy = rng.random_range(r + 2..=self.height - r - 2);
        let f = |rng: &mut ChaCha8Rng, range: &RangeInclusive<f64>| rng.random_range(range.clone());
        EyeParams {
            width: self.width,
            height: self.height,
            cx: cx as f64,
            cy: cy as f64,
            r: r as f64,
            pupil_ratio: f(&mut rng, &self.pupil_ratio),
            sclera: f(&mut rng, &self.sclera),
            iris: f(&mut rng, &self.iris),
            pupil: f(&mut rng, &self.pupil),
            skin: f(&mut rng, &self.skin),
            texture_amplitude: f(&mut rng, &self.texture_amplitude),
            texture_frequency: rng.random_range(self.texture_frequency.clone()),
            occlusion: f(&mut rng, &self.occlusion),
            highlight: rng.random_bool(self.highlight_probability),
            noise_sigma: f(&mut rng, &self.noise_sigma),
            seed: rng.random(),
        }
    }
}

fn sub_seed(seed: u64, index: usize) -> u64 {
    let digest = Sha256::new().chain_update(seed.to_le_bytes()).chain_update((index as u64).to_le_bytes()).finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

fn id_hash(id: &str) -> [u8; 32] {
    Sha256::digest(id.as_bytes()).into()
}

pub fn image_id(index: usize) -> String {
    format!("eye_{index:05}")
}

/// Test ids: the `floor(n · fraction)` ids with the smallest SHA-256 digests.
pub fn hash_split(ids: &[String], test_fraction: f64) -> Vec<Split> {
    let n_test = (ids.len() as f64 * test_fraction).floor() as usize;
    let mut order: Vec<usize> = (0..ids.len()).collect();
    order.sort_by_key(|&i| (id_hash(&ids[i]), i));
    let mut splits = vec![Split::Train; ids.len()];
    for &i in &order[..n_test] {
        splits[i] = Split::Test;
    }
    splits
}

/// Render `n` images in memory; annotations carry ids, relative paths and splits.
pub fn render_corpus(n: usize, spec: &CorpusSpec, seed: u64) -> Result<Vec<(GrayImage, Annotation)>> {
    if n == 0 {
        return Err(Error::InvalidParams("corpus size must be >= 1".into()));
    }
    spec.validate()?;
    let ids: Vec<String> = (0..n).map(image_id).collect();
    let splits = hash_split(&ids, spec.test_fraction);
    ids.into_iter()
        .zip(splits)
        .enumerate()
        .map(|(i, (id, split))| {
            let (img, mut ann) = render_eye(&spec.draw(seed, i))?;
            ann.path = PathBuf::from("images").join(format!("{id}.pgm"));
            ann.image_id = id;
            ann.split = split;
            Ok((img, ann))
        })
        .collect()
}

/// Write a corpus as `images/*.pgm` plus `annotations.csv` under `out_dir`.
pub fn generate_corpus(n: usize, spec: &CorpusSpec, seed: u64, out_dir: impl AsRef<Path>) -> Result<Manifest> {
    let out_dir = out_dir.as_ref();
    let corpus = render_corpus(n, spec, seed)?;
    let images = out_dir.join("images");
    fs::create_dir_all(&images).map_err(|e| Error::io(&images, e))?;
    let mut entries = Vec::with_capacity(n);
    for (img, ann) in corpus {
        save_pgm(&img, out_dir.join(&ann.path))?;
        entries.push(ann);
    }
    let name = out_dir
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "synthetic".into());
    let manifest = Manifest { sensor: name.clone(), name, root: out_dir.to_path_buf(), entries };
    manifest.save(out_dir.join("annotations.csv"))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::daugman::{circular_mean_intensity, ArcMask};

    #[test]
    fn clean_iris_ring_mean() {
        let p = EyeParams { texture_amplitude: 10.0, ..Default::default() };
        let (img, ann) = render_eye(&p).unwrap();
        let m = circular_mean_intensity(&img, CircleParams::new(p.cx, p.cy, p.r - 2.0), &ArcMask::full(), 64).unwrap();
        assert!((m - p.iris).abs() <= p.texture_amplitude, "{m}");
        assert_eq!(ann.bbox, BBox::square(36, 36, 56));
    }

    #[test]
    fn deterministic() {
        let p = EyeParams { noise_sigma: 4.0, highlight: true, occlusion: 0.2, seed: 99, ..Default::default() };
        assert_eq!(render_eye(&p).unwrap().0, render_eye(&p).unwrap().0);
        let q = EyeParams { seed: 100, ..p.clone() };
        assert_ne!(render_eye(&p).unwrap().0, render_eye(&q).unwrap().0);
    }

    #[test]
    fn invalid_params() {
        for p in [
            EyeParams { pupil_ratio: 0.7, ..Default::default() },
            EyeParams { occlusion: 0.5, ..Default::default() },
            EyeParams { cx: 20.0, ..Default::default() },
            EyeParams { r: 70.0, ..Default::default() },
        ] {
            assert!(matches!(render_eye(&p), Err(Error::InvalidParams(_))), "{p:?}");
        }
    }

    #[test]
    fn split_counts() {
        let ids: Vec<String> = (0..10).map(image_id).collect();
        let s = hash_split(&ids, 0.2);
        assert_eq!(s.iter().filter(|&&x| x == Split::Test).count(), 2);
        assert_eq!(hash_split(&ids[..1], 0.2), vec![Split::Train]);
    }

    #[test]
    fn invalid_range() {
        #[allow(clippy::reversed_empty_ranges)]
        let spec = CorpusSpec { radius: 30..=20, ..Default::default() };
        assert!(matches!(render_corpus(3, &spec, 1), Err(Error::InvalidParams(_))));
        assert!(matches!(render_corpus(0, &CorpusSpec::default(), 1), Err(Error::InvalidParams(_))));
    }
}
