//! 8-bit grayscale rasters, PGM/PNG decoding and the small set of kernels
//! shared by both detectors.
//!
//! Coordinates: pixel `(x, y)` covers the continuous square `[x, x+1) × [y, y+1)`
//! and its intensity is taken to sit at the pixel center `(x + 0.5, y + 0.5)`.
//! Circle centers, box corners and bilinear sample points all live in this
//! continuous frame.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::bbox::BBox;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument(format!("image dimensions {width}x{height}")));
        }
        if data.len() != width * height {
            return Err(Error::InvalidArgument(format!(
                "{} bytes for a {width}x{height} image",
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        Self { width, height, data: vec![value; width * height] }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self { width, height, data }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.data[y * self.width + x] = v;
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().map(|&v| v as f64).sum::<f64>() / self.data.len() as f64
    }

    /// Bilinear sample at continuous point `(u, v)`. Points outside the image
    /// domain `[0, w) × [0, h)` return `None`; inside, neighbours past the
    /// outermost pixel centers are clamped.
    #[inline]
    pub fn sample_bilinear(&self, u: f64, v: f64) -> Option<f64> {
        if !(u >= 0.0 && v >= 0.0 && u < self.width as f64 && v < self.height as f64) {
            return None;
        }
        Some(self.sample_clamped(u - 0.5, v - 0.5))
    }

    /// Bilinear interpolation in pixel-center index space with edge clamping.
    #[inline]
    fn sample_clamped(&self, fx: f64, fy: f64) -> f64 {
        let max_x = (self.width - 1) as f64;
        let max_y = (self.height - 1) as f64;
        let fx = fx.clamp(0.0, max_x);
        let fy = fy.clamp(0.0, max_y);
        let x0 = fx.floor() as usize;
        let y0 = fy.floor() as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let tx = fx - x0 as f64;
        let ty = fy - y0 as f64;
        let p00 = self.get(x0, y0) as f64;
        let p10 = self.get(x1, y0) as f64;
        let p01 = self.get(x0, y1) as f64;
        let p11 = self.get(x1, y1) as f64;
        let top = p00 + (p10 - p00) * tx;
        let bottom = p01 + (p11 - p01) * tx;
        top + (bottom - top) * ty
    }
}

/// Round half-up and clamp into the 8-bit range.
#[inline]
pub fn quantize(v: f64) -> u8 {
    (v + 0.5).floor().clamp(0.0, 255.0) as u8
}

// ---------------------------------------------------------------------------
// Decoding / encoding

pub fn load_grayscale(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_grayscale(&bytes)
}

/// Decode a binary PGM (P5) or PNG byte buffer, sniffing the format from its
/// magic bytes.
pub fn decode_grayscale(bytes: &[u8]) -> Result<GrayImage> {
    if bytes.starts_with(b"P5") {
        decode_pgm(bytes)
    } else if bytes.starts_with(b"\x89PNG\r\n\x1a\n") {
        decode_png(bytes)
    } else if bytes.len() >= 2 && bytes[0] == b'P' && bytes[1].is_ascii_digit() {
        Err(Error::UnsupportedFormat(format!(
            "netpbm variant P{} (only binary P5 is supported)",
            bytes[1] as char
        )))
    } else {
        Err(Error::UnsupportedFormat("unrecognized magic bytes".into()))
    }
}

pub fn decode_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let mut pos = 2usize;
    let mut fields = [0usize; 3];
    for (i, field) in fields.iter_mut().enumerate() {
        // whitespace and comments
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while let Some(&b) = bytes.get(pos) {
                        pos += 1;
                        if b == b'\n' || b == b'\r' {
                            break;
                        }
                    }
                }
                Some(_) => break,
                None => return Err(Error::CorruptFile("truncated PGM header".into())),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(|b| b.is_ascii_digit()) {
            pos += 1;
        }
        if start == pos {
            return Err(Error::CorruptFile(format!("PGM header field {} is not a number", i + 1)));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::CorruptFile("PGM header value out of range".into()))?;
    }
    let [width, height, maxval] = fields;
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(Error::CorruptFile("missing whitespace after PGM header".into())),
    }
    if maxval != 255 {
        return Err(Error::UnsupportedFormat(format!("PGM maxval {maxval} (only 255 is supported)")));
    }
    if width == 0 || height == 0 {
        return Err(Error::CorruptFile(format!("PGM dimensions {width}x{height}")));
    }
    let n = width
        .checked_mul(height)
        .ok_or_else(|| Error::CorruptFile("PGM dimensions overflow".into()))?;
    let payload = &bytes[pos..];
    if payload.len() < n {
        return Err(Error::CorruptFile(format!(
            "PGM header declares {n} pixels but payload has {} bytes",
            payload.len()
        )));
    }
    GrayImage::new(width, height, payload[..n].to_vec())
}

pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.data);
    out
}

pub fn save_pgm(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&encode_pgm(img)).map_err(|e| Error::io(path, e))
}

fn decode_png(bytes: &[u8]) -> Result<GrayImage> {
    let mut decoder = png::Decoder::new(std::io::Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::EXPAND | png::Transformations::STRIP_16);
    let mut reader = decoder.read_info().map_err(|e| Error::CorruptFile(e.to_string()))?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::CorruptFile("PNG output buffer size overflow".into()))?;
    let mut buf = vec![0u8; size];
    let info = reader.next_frame(&mut buf).map_err(|e| Error::CorruptFile(e.to_string()))?;
    let (w, h) = (info.width as usize, info.height as usize);
    let buf = &buf[..info.buffer_size()];
    let channels = info.color_type.samples();
    let stride = info.line_size;
    let mut data = Vec::with_capacity(w * h);
    for row in buf.chunks(stride).take(h) {
        for px in row.chunks(channels).take(w) {
            let v = match info.color_type {
                png::ColorType::Grayscale | png::ColorType::GrayscaleAlpha => px[0],
                png::ColorType::Rgb | png::ColorType::Rgba => luma(px[0], px[1], px[2]),
                png::ColorType::Indexed => {
                    return Err(Error::UnsupportedFormat("indexed PNG after expansion".into()))
                }
            };
            data.push(v);
        }
    }
    if data.len() != w * h {
        return Err(Error::CorruptFile("PNG raster shorter than its header".into()));
    }
    GrayImage::new(w, h, data)
}

/// BT.601 luma with round half-up, in exact integer arithmetic.
#[inline]
pub fn luma(r: u8, g: u8, b: u8) -> u8 {
    ((299 * r as u32 + 587 * g as u32 + 114 * b as u32 + 500) / 1000) as u8
}

// ---------------------------------------------------------------------------
// Kernels

/// Per-pixel gradients, magnitude and unsigned orientation in degrees.
#[derive(Debug, Clone)]
pub struct GradientField {
    pub width: usize,
    pub height: usize,
    pub gx: Vec<f64>,
    pub gy: Vec<f64>,
    pub magnitude: Vec<f64>,
    /// Degrees in `[0, 180)`.
    pub orientation: Vec<f64>,
}

/// Fold a gradient direction into the unsigned range `[0°, 180°)`.
#[inline]
pub fn unsigned_orientation(gx: f64, gy: f64) -> f64 {
    let deg = gy.atan2(gx).to_degrees().rem_euclid(180.0);
    if deg >= 180.0 {
        0.0
    } else {
        deg
    }
}

/// Central differences in the interior, one-sided differences on the border.
pub fn gradients(img: &GrayImage) -> Result<GradientField> {
    let (w, h) = (img.width, img.height);
    if w < 3 || h < 3 {
        return Err(Error::ImageTooSmall { width: w, height: h, min: 3 });
    }
    let px = |x: usize, y: usize| img.get(x, y) as f64;
    let n = w * h;
    let mut gx = Vec::with_capacity(n);
    let mut gy = Vec::with_capacity(n);
    for y in 0..h {
        for x in 0..w {
            let dx = if x == 0 {
                px(1, y) - px(0, y)
            } else if x == w - 1 {
                px(w - 1, y) - px(w - 2, y)
            } else {
                (px(x + 1, y) - px(x - 1, y)) / 2.0
            };
            let dy = if y == 0 {
                px(x, 1) - px(x, 0)
            } else if y == h - 1 {
                px(x, h - 1) - px(x, h - 2)
            } else {
                (px(x, y + 1) - px(x, y - 1)) / 2.0
            };
            gx.push(dx);
            gy.push(dy);
        }
    }
    let magnitude = gx.iter().zip(&gy).map(|(a, b)| a.hypot(*b)).collect();
    let orientation = gx.iter().zip(&gy).map(|(a, b)| unsigned_orientation(*a, *b)).collect();
    Ok(GradientField { width: w, height: h, gx, gy, magnitude, orientation })
}

/// Normalized 1-D Gaussian kernel of radius `ceil(3σ)`; index `radius` is the center tap.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as i64;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// Convolve a 1-D signal with `kernel`, replicating the edge samples.
pub fn convolve_replicate(signal: &[f64], kernel: &[f64]) -> Vec<f64> {
    let radius = (kernel.len() / 2) as i64;
    let last = signal.len() as i64 - 1;
    (0..signal.len() as i64)
        .map(|i| {
            kernel
                .iter()
                .enumerate()
                .map(|(j, k)| k * signal[(i + j as i64 - radius).clamp(0, last) as usize])
                .sum()
        })
        .collect()
}

pub fn gaussian_blur(img: &GrayImage, sigma: f64) -> Result<GrayImage> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!("blur sigma must be > 0, got {sigma}")));
    }
    let kernel = gaussian_kernel(sigma);
    let (w, h) = (img.width, img.height);
    let mut tmp = vec![0.0; w * h];
    let mut row = vec![0.0; w];
    for y in 0..h {
        for (x, v) in row.iter_mut().enumerate() {
            *v = img.get(x, y) as f64;
        }
        let out = convolve_replicate(&row, &kernel);
        tmp[y * w..(y + 1) * w].copy_from_slice(&out);
    }
    let mut data = vec![0u8; w * h];
    let mut col = vec![0.0; h];
    for x in 0..w {
        for y in 0..h {
            col[y] = tmp[y * w + x];
        }
        for (y, v) in convolve_replicate(&col, &kernel).into_iter().enumerate() {
            data[y * w + x] = quantize(v);
        }
    }
    GrayImage::new(w, h, data)
}

/// Clip `bbox` to the image, crop it and resample to `side × side` bilinearly.
pub fn crop_resize(img: &GrayImage, bbox: &BBox, side: usize) -> Result<GrayImage> {
    if side < 8 {
        return Err(Error::InvalidArgument(format!("resize side {side} < 8")));
    }
    let clipped = bbox.clip(img.width, img.height).ok_or(Error::EmptyIntersection)?;
    let mut out = vec![0u8; side * side];
    resample_into(img, &clipped, side, |i, v| out[i] = quantize(v));
    GrayImage::new(side, side, out)
}

/// Shared resampling loop; `bbox` must already be clipped.
pub(crate) fn resample_into(img: &GrayImage, bbox: &BBox, side: usize, mut put: impl FnMut(usize, f64)) {
    let sx = bbox.w as f64 / side as f64;
    let sy = bbox.h as f64 / side as f64;
    let ox = bbox.x as f64;
    let oy = bbox.y as f64;
    for j in 0..side {
        let fy = oy + (j as f64 + 0.5) * sy - 0.5;
        for i in 0..side {
            let fx = ox + (i as f64 + 0.5) * sx - 0.5;
            put(j * side + i, img.sample_clamped(fx, fy));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_passthrough() {
        let mut bytes = b"P5\n2 2\n255\n".to_vec();
        bytes.extend_from_slice(&[0, 255, 128, 64]);
        let img = decode_grayscale(&bytes).unwrap();
        assert_eq!((img.width(), img.height()), (2, 2));
        assert_eq!(img.data(), &[0, 255, 128, 64]);
    }

    #[test]
    fn pgm_header_comments() {
        let mut bytes = b"P5 # made by hand\n2 # width\n1\n255\n".to_vec();
        bytes.extend_from_slice(&[7, 9]);
        assert_eq!(decode_grayscale(&bytes).unwrap().data(), &[7, 9]);
    }

    #[test]
    fn pgm_truncated_payload() {
        let mut bytes = b"P5\n2 2\n255\n".to_vec();
        bytes.extend_from_slice(&[1, 2, 3]);
        assert!(matches!(decode_grayscale(&bytes), Err(Error::CorruptFile(_))));
        assert!(matches!(decode_grayscale(b"P5\n2 "), Err(Error::CorruptFile(_))));
    }

    #[test]
    fn unsupported_formats() {
        assert!(matches!(decode_grayscale(b"P2\n1 1\n255\n0"), Err(Error::UnsupportedFormat(_))));
        assert!(matches!(decode_grayscale(b"GIF89a"), Err(Error::UnsupportedFormat(_))));
        let mut bytes = b"P5\n1 1\n65535\n".to_vec();
        bytes.extend_from_slice(&[0, 0]);
        assert!(matches!(decode_grayscale(&bytes), Err(Error::UnsupportedFormat(_))));
    }

    fn encode_png(w: u32, h: u32, color: png::ColorType, data: &[u8]) -> Vec<u8> {
        let mut out = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut out, w, h);
            enc.set_color(color);
            enc.set_depth(png::BitDepth::Eight);
            let mut writer = enc.write_header().unwrap();
            writer.write_image_data(data).unwrap();
        }
        out
    }

    #[test]
    fn png_uniform_gray() {
        let bytes = encode_png(10, 10, png::ColorType::Grayscale, &[128; 100]);
        let img = decode_grayscale(&bytes).unwrap();
        assert_eq!((img.width(), img.height()), (10, 10));
        assert!(img.data().iter().all(|&v| v == 128));
    }

    #[test]
    fn png_rgb_uses_bt601_luma() {
        let data = [255, 0, 0, 0, 255, 0, 0, 0, 255, 10, 20, 30];
        let bytes = encode_png(2, 2, png::ColorType::Rgb, &data);
        let img = decode_grayscale(&bytes).unwrap();
        // 0.299*255 = 76.245, 0.587*255 = 149.685, 0.114*255 = 29.07,
        // 2.99 + 11.74 + 3.42 = 18.15
        assert_eq!(img.data(), &[76, 150, 29, 18]);
        assert_eq!(luma(0, 0, 0), 0);
        assert_eq!(luma(255, 255, 255), 255);
    }

    #[test]
    fn gradients_constant_image() {
        let g = gradients(&GrayImage::filled(5, 4, 77)).unwrap();
        assert!(g.gx.iter().chain(&g.gy).chain(&g.magnitude).all(|&v| v == 0.0));
    }

    #[test]
    fn gradients_vertical_step() {
        let img = GrayImage::from_fn(6, 6, |x, _| if x < 3 { 0 } else { 200 });
        let g = gradients(&img).unwrap();
        for y in 0..6 {
            for x in 0..6 {
                let expected = if x == 2 || x == 3 { 100.0 } else { 0.0 };
                assert_eq!(g.gx[y * 6 + x], expected, "gx at ({x},{y})");
                assert_eq!(g.gy[y * 6 + x], 0.0);
            }
        }
    }

    #[test]
    fn gradients_ramp() {
        let img = GrayImage::from_fn(8, 5, |x, _| (10 * x) as u8);
        let g = gradients(&img).unwrap();
        for y in 0..5 {
            for x in 0..8 {
                let i = y * 8 + x;
                assert_eq!(g.gx[i], 10.0);
                assert_eq!(g.magnitude[i], 10.0);
                assert_eq!(g.orientation[i], 0.0);
            }
        }
    }

    #[test]
    fn gradients_too_small() {
        assert!(matches!(
            gradients(&GrayImage::filled(2, 5, 0)),
            Err(Error::ImageTooSmall { .. })
        ));
    }

    #[test]
    fn orientation_folding() {
        assert_eq!(unsigned_orientation(-10.0, 0.0), 0.0);
        assert_eq!(unsigned_orientation(-10.0, -0.0), 0.0);
        assert!((unsigned_orientation(0.0, 1.0) - 90.0).abs() < 1e-12);
        assert!((unsigned_orientation(0.0, -1.0) - 90.0).abs() < 1e-12);
        assert!((unsigned_orientation(-1.0, -1.0) - 45.0).abs() < 1e-12);
    }

    #[test]
    fn blur_constant_and_impulse() {
        let flat = GrayImage::filled(9, 7, 93);
        assert_eq!(gaussian_blur(&flat, 2.3).unwrap(), flat);

        let mut img = GrayImage::filled(11, 11, 0);
        img.set(5, 5, 255);
        let out = gaussian_blur(&img, 1.0).unwrap();
        // independent kernel: radius 3, weights e^{-i^2/2}
        let w: Vec<f64> = (-3i32..=3).map(|i| (-(i * i) as f64 / 2.0).exp()).collect();
        let k0 = 1.0 / w.iter().sum::<f64>();
        assert_eq!(out.get(5, 5) as f64, (255.0 * k0 * k0 + 0.5).floor());
        assert_eq!(out.get(5, 5), 41);
    }

    #[test]
    fn blur_rejects_nonpositive_sigma() {
        let img = GrayImage::filled(4, 4, 0);
        assert!(gaussian_blur(&img, 0.0).is_err());
        assert!(gaussian_blur(&img, -1.0).is_err());
    }

    #[test]
    fn crop_resize_identity() {
        let img = GrayImage::from_fn(12, 12, |x, y| (x * 17 + y * 3) as u8);
        let out = crop_resize(&img, &BBox::square(0, 0, 12), 12).unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn crop_resize_checkerboard_upsample() {
        // 4x4 output is below crop_resize's 8-px minimum; exercise the resampler directly.
        let img = GrayImage::new(2, 2, vec![0, 255, 255, 0]).unwrap();
        let mut out = [0.0; 16];
        let b = BBox::square(0, 0, 2);
        resample_into(&img, &b, 4, |i, v| out[i] = v);
        // sample points in source index space: -0.25, 0.25, 0.75, 1.25 (clamped)
        let t = [0.0, 0.25, 0.75, 1.0];
        for j in 0..4 {
            for i in 0..4 {
                let (tx, ty) = (t[i], t[j]);
                let expected = 255.0 * (tx * (1.0 - ty) + (1.0 - tx) * ty);
                assert!((out[j * 4 + i] - expected).abs() < 1e-9, "({i},{j})");
            }
        }
        assert_eq!([out[0], out[3], out[12], out[15]], [0.0, 255.0, 255.0, 0.0]);
    }

    #[test]
    fn crop_resize_outside() {
        let img = GrayImage::filled(10, 10, 1);
        assert!(matches!(
            crop_resize(&img, &BBox::square(20, 20, 5), 8),
            Err(Error::EmptyIntersection)
        ));
    }

    #[test]
    fn crop_resize_exact_crop() {
        let img = GrayImage::from_fn(30, 20, |x, y| (x * 7 + y * 11) as u8);
        let out = crop_resize(&img, &BBox::square(4, 3, 10), 10).unwrap();
        for y in 0..10 {
            for x in 0..10 {
                assert_eq!(out.get(x, y), img.get(x + 4, y + 3));
            }
        }
    }
}
