//! Colour images and frame stacks as RB tensors, ket augmentation, sampling
//! masks and quality metrics.
//!
//! A pixel `(R, G, B)` becomes the pure RB number `R i + G j + B k` with the
//! channels scaled to `[0, 1]`. Metrics are taken over those three colour
//! components only.

use std::fs;
use std::io::Cursor;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{RbError, Result};
use crate::format::write_atomic;
use crate::scalar::RbScalar;
use crate::tensor::{IndexMask, RbTensor};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColorImage {
    pub width: usize,
    pub height: usize,
    /// Row-major RGB triples.
    pub pixels: Vec<[u8; 3]>,
}

impl ColorImage {
    pub fn new(width: usize, height: usize, pixels: Vec<[u8; 3]>) -> Result<Self> {
        if pixels.len() != width * height || width == 0 || height == 0 {
            return Err(RbError::dim(format!("{} pixels for a {width}x{height} image", pixels.len())));
        }
        Ok(ColorImage { width, height, pixels })
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Self {
        ColorImage { width, height, pixels: vec![rgb; width * height] }
    }

    pub fn get(&self, row: usize, col: usize) -> [u8; 3] {
        self.pixels[row * self.width + col]
    }

    pub fn load(path: &Path) -> Result<Self> {
        let img = image::ImageReader::open(path)?.with_guessed_format()?.decode()?.to_rgb8();
        let (w, h) = img.dimensions();
        let pixels = img.pixels().map(|p| p.0).collect();
        ColorImage::new(w as usize, h as usize, pixels)
    }

    pub fn to_png_bytes(&self) -> Result<Vec<u8>> {
        let raw: Vec<u8> = self.pixels.iter().flatten().copied().collect();
        let buf = image::RgbImage::from_raw(self.width as u32, self.height as u32, raw)
            .ok_or_else(|| RbError::dim("pixel buffer does not match image size"))?;
        let mut out = Cursor::new(Vec::new());
        buf.write_to(&mut out, image::ImageFormat::Png)?;
        Ok(out.into_inner())
    }

    /// Writes an 8-bit RGB PNG atomically.
    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_png_bytes()?)
    }
}

/// PNG frames of a directory, in file-name order.
pub fn load_frames(dir: &Path) -> Result<Vec<ColorImage>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(RbError::arg(format!("no PNG frames in {}", dir.display())));
    }
    let frames = paths.iter().map(|p| ColorImage::load(p)).collect::<Result<Vec<_>>>()?;
    if frames.iter().any(|f| (f.width, f.height) != (frames[0].width, frames[0].height)) {
        return Err(RbError::dim("frames differ in size"));
    }
    Ok(frames)
}

fn pixel_to_rb(p: [u8; 3]) -> RbScalar {
    RbScalar::from_coeffs(0.0, p[0] as f64 / 255.0, p[1] as f64 / 255.0, p[2] as f64 / 255.0)
}

fn rb_to_pixel(q: RbScalar) -> [u8; 3] {
    let [_, b, c, d] = q.coeffs();
    let quant = |v: f64| (v.clamp(0.0, 1.0) * 255.0).round() as u8;
    [quant(b), quant(c), quant(d)]
}

/// `H x W` tensor of pure RB pixels.
pub fn encode_rb(img: &ColorImage) -> RbTensor {
    RbTensor::from_fn(&[img.height, img.width], |idx| pixel_to_rb(img.get(idx[0], idx[1])))
}

/// `H x W x F` tensor with frames along the trailing mode.
pub fn encode_frames(frames: &[ColorImage]) -> Result<RbTensor> {
    let first = frames.first().ok_or_else(|| RbError::arg("no frames"))?;
    if frames.iter().any(|f| (f.width, f.height) != (first.width, first.height)) {
        return Err(RbError::dim("frames differ in size"));
    }
    Ok(RbTensor::from_fn(&[first.height, first.width, frames.len()], |idx| {
        pixel_to_rb(frames[idx[2]].get(idx[0], idx[1]))
    }))
}

/// Clamps the `i, j, k` components to `[0, 1]` and quantises to 8 bits.
pub fn decode_rb(t: &RbTensor) -> Result<ColorImage> {
    if t.order() != 2 {
        return Err(RbError::dim(format!("an image tensor has order 2, got {}", t.order())));
    }
    let (h, w) = (t.dims()[0], t.dims()[1]);
    let mut pixels = Vec::with_capacity(h * w);
    for r in 0..h {
        for c in 0..w {
            pixels.push(rb_to_pixel(t.get_linear(r + h * c)));
        }
    }
    ColorImage::new(w, h, pixels)
}

/// Inverse of [`encode_frames`].
pub fn decode_frames(t: &RbTensor) -> Result<Vec<ColorImage>> {
    if t.order() != 3 {
        return Err(RbError::dim(format!("a frame stack has order 3, got {}", t.order())));
    }
    let (h, w, f) = (t.dims()[0], t.dims()[1], t.dims()[2]);
    (0..f)
        .map(|k| {
            let slice = RbTensor::from_fn(&[h, w], |idx| t.get_linear(idx[0] + h * idx[1] + h * w * k));
            decode_rb(&slice)
        })
        .collect()
}

fn side_bits(h: usize, w: usize) -> Result<usize> {
    if h != w || !h.is_power_of_two() || h < 2 {
        return Err(RbError::dim(format!("ket augmentation needs a square power-of-two side >= 2, got {h}x{w}")));
    }
    Ok(h.trailing_zeros() as usize)
}

// Pixel (r, c) -> linear index of the order-n base-4 tensor.
fn ket_index(r: usize, c: usize, n: usize) -> usize {
    (0..n).map(|l| (((r >> l) & 1) + 2 * ((c >> l) & 1)) << (2 * l)).sum()
}

/// Reindexes `2^n x 2^n x rest...` into `4 x ... x 4 (n times) x rest...`.
///
/// Pixel `(r, c)` with bits `r_l`, `c_l` lands at mode index `i_l = r_l + 2 c_l`.
pub fn ket_augment(t: &RbTensor) -> Result<RbTensor> {
    if t.order() < 2 {
        return Err(RbError::dim("ket augmentation needs at least two modes"));
    }
    let side = t.dims()[0];
    let n = side_bits(side, t.dims()[1])?;
    let plane = side * side;
    let mut dims = vec![4; n];
    dims.extend_from_slice(&t.dims()[2..]);
    let mut out = RbTensor::zeros(&dims);
    for lin in 0..t.len() {
        let (r, c, rest) = (lin % side, (lin / side) % side, lin / plane);
        out.set_linear(ket_index(r, c, n) + plane * rest, t.get_linear(lin));
    }
    Ok(out)
}

/// Inverse of [`ket_augment`]; `n` is the number of base-4 modes.
pub fn ket_restore(t: &RbTensor, n: usize) -> Result<RbTensor> {
    if n == 0 || t.order() < n || t.dims()[..n].iter().any(|&d| d != 4) {
        return Err(RbError::dim(format!("expected {n} leading modes of size 4, got {:?}", t.dims())));
    }
    let side = 1usize << n;
    let plane = side * side;
    let mut dims = vec![side, side];
    dims.extend_from_slice(&t.dims()[n..]);
    let mut out = RbTensor::zeros(&dims);
    for lin in 0..out.len() {
        let (r, c, rest) = (lin % side, (lin / side) % side, lin / plane);
        out.set_linear(lin, t.get_linear(ket_index(r, c, n) + plane * rest));
    }
    Ok(out)
}

/// Exactly `round(sr * prod(dims))` observed entries, drawn uniformly without
/// replacement from a ChaCha8 stream seeded with `seed`.
pub fn gen_mask(dims: &[usize], sr: f64, seed: u64) -> Result<IndexMask> {
    if !(sr > 0.0 && sr <= 1.0) {
        return Err(RbError::arg(format!("sampling rate must lie in (0, 1], got {sr}")));
    }
    let total: usize = dims.iter().product();
    let count = (sr * total as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut observed = vec![false; total];
    for i in rand::seq::index::sample(&mut rng, total, count) {
        observed[i] = true;
    }
    IndexMask::new(dims, observed)
}

fn colour_error(x_hat: &RbTensor, x: &RbTensor) -> Result<(f64, f64, usize)> {
    if x_hat.dims() != x.dims() {
        return Err(RbError::dim(format!("dims {:?} and {:?} differ", x_hat.dims(), x.dims())));
    }
    let (mut err, mut norm) = (0.0, 0.0);
    for (a, b) in x_hat.iter().zip(x.iter()) {
        let (ca, cb) = (a.coeffs(), b.coeffs());
        for l in 1..4 {
            err += (ca[l] - cb[l]).powi(2);
            norm += cb[l] * cb[l];
        }
    }
    Ok((err, norm, 3 * x.len()))
}

/// `||X_hat - X||_F / ||X||_F` over the colour components.
pub fn rse(x_hat: &RbTensor, x: &RbTensor) -> Result<f64> {
    let (err, norm, _) = colour_error(x_hat, x)?;
    if norm == 0.0 {
        return Err(RbError::arg("relative error against a zero reference"));
    }
    Ok((err / norm).sqrt())
}

/// `10 log10(max^2 / MSE)` with `MSE = ||X_hat - X||_F^2 / N`, `N` the number
/// of colour components. Identical inputs give `+inf`.
pub fn psnr(x_hat: &RbTensor, x: &RbTensor, max_val: f64) -> Result<f64> {
    let (err, _, n) = colour_error(x_hat, x)?;
    if err == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (max_val * max_val / (err / n as f64)).log10())
}

pub const PSNR_FORMULA: &str = "10*log10(max^2/(||X_hat-X||_F^2/N)), N = 3 colour components per pixel";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    #[serde(serialize_with = "ser_psnr", deserialize_with = "de_psnr")]
    pub psnr: f64,
    pub rse: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub storage_cost: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub compression_ratio: Option<f64>,
    pub psnr_formula: String,
}

impl MetricReport {
    pub fn compute(x_hat: &RbTensor, x: &RbTensor) -> Result<Self> {
        Ok(MetricReport {
            psnr: psnr(x_hat, x, 1.0)?,
            rse: rse(x_hat, x)?,
            storage_cost: None,
            compression_ratio: None,
            psnr_formula: PSNR_FORMULA.to_string(),
        })
    }
}

// JSON has no infinity; an exact reconstruction is written as "inf".
fn ser_psnr<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_str("inf")
    }
}

fn de_psnr<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Value {
        Num(f64),
        Str(String),
    }
    match Value::deserialize(d)? {
        Value::Num(v) => Ok(v),
        Value::Str(s) if s == "inf" => Ok(f64::INFINITY),
        Value::Str(s) => Err(serde::de::Error::custom(format!("bad psnr value {s:?}"))),
    }
}
