//! 8-bit images: PGM/PPM codec, bilinear resize, tensor conversion, and
//! directory ingestion.

mod ingest;
mod pnm;

pub use ingest::{ingest_directory, load_images, Ingested};
pub use pnm::{decode_pnm, encode_pnm, read_pnm, write_pnm};

use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tensor};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    /// 1 (gray) or 3 (RGB, interleaved).
    pub channels: usize,
    pub pixels: Vec<u8>,
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize, pixels: Vec<u8>) -> Result<Self> {
        if !(channels == 1 || channels == 3) {
            return Err(Error::invalid(format!("{channels} channels; expected 1 or 3")));
        }
        if width == 0 || height == 0 || pixels.len() != width * height * channels {
            return Err(Error::shape(format!(
                "{width}x{height}x{channels} image with {} bytes",
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: u8) -> Self {
        Self::new(width, height, channels, vec![value; width * height * channels]).expect("valid dims")
    }

    pub fn get(&self, x: usize, y: usize, c: usize) -> u8 {
        self.pixels[(y * self.width + x) * self.channels + c]
    }

    pub fn to_rgb(&self) -> Image {
        if self.channels == 3 {
            return self.clone();
        }
        let pixels = self.pixels.iter().flat_map(|&v| [v, v, v]).collect();
        Image::new(self.width, self.height, 3, pixels).expect("valid dims")
    }

    /// FNV-1a over the pixel bytes.
    pub fn content_hash(&self) -> u64 {
        crate::transfer::fnv1a(&self.pixels)
    }
}

/// Source coordinate for output index `o` under half-pixel-centre mapping,
/// split into the clamped integer neighbours and the blend weight.
pub(crate) fn bilinear_taps(o: usize, src: usize, dst: usize) -> (usize, usize, f64) {
    let pos = ((o as f64 + 0.5) * src as f64 / dst as f64 - 0.5).clamp(0.0, (src - 1) as f64);
    let i0 = pos.floor() as usize;
    let i1 = (i0 + 1).min(src - 1);
    (i0, i1, pos - i0 as f64)
}

/// Bilinear resampling with half-pixel centres and edge clamping; results
/// round half up to 8 bits.
pub fn bilinear_resize(img: &Image, out_w: usize, out_h: usize) -> Result<Image> {
    if out_w == 0 || out_h == 0 {
        return Err(Error::invalid("resize target must be non-empty"));
    }
    if out_w == img.width && out_h == img.height {
        return Ok(img.clone());
    }
    let c = img.channels;
    let xs: Vec<_> = (0..out_w).map(|x| bilinear_taps(x, img.width, out_w)).collect();
    let mut pixels = Vec::with_capacity(out_w * out_h * c);
    for y in 0..out_h {
        let (y0, y1, fy) = bilinear_taps(y, img.height, out_h);
        for &(x0, x1, fx) in &xs {
            for ch in 0..c {
                let p = |xx, yy| img.get(xx, yy, ch) as f64;
                let top = p(x0, y0) + (p(x1, y0) - p(x0, y0)) * fx;
                let bot = p(x0, y1) + (p(x1, y1) - p(x0, y1)) * fx;
                let v = top + (bot - top) * fy;
                pixels.push((v + 0.5).floor().clamp(0.0, 255.0) as u8);
            }
        }
    }
    Image::new(out_w, out_h, c, pixels)
}

/// Overlap weights of output cell `o` on the source axis (box filter).
fn area_taps(o: usize, src: usize, dst: usize) -> Vec<(usize, f64)> {
    let scale = src as f64 / dst as f64;
    let (lo, hi) = (o as f64 * scale, (o + 1) as f64 * scale);
    let mut taps = Vec::new();
    let mut i = lo.floor() as usize;
    while (i as f64) < hi && i < src {
        let w = (hi.min(i as f64 + 1.0) - lo.max(i as f64)) / scale;
        if w > 0.0 {
            taps.push((i, w));
        }
        i += 1;
    }
    taps
}

/// Area-averaging resize: each output pixel is the mean of the source region
/// it covers. Unlike bilinear sampling it keeps thin strokes when shrinking.
pub fn area_resize(img: &Image, out_w: usize, out_h: usize) -> Result<Image> {
    if out_w == 0 || out_h == 0 {
        return Err(Error::invalid("resize target must be non-empty"));
    }
    if out_w == img.width && out_h == img.height {
        return Ok(img.clone());
    }
    let c = img.channels;
    let xs: Vec<_> = (0..out_w).map(|x| area_taps(x, img.width, out_w)).collect();
    let mut pixels = Vec::with_capacity(out_w * out_h * c);
    for y in 0..out_h {
        let ys = area_taps(y, img.height, out_h);
        for xt in &xs {
            for ch in 0..c {
                let mut v = 0.0;
                for &(yy, wy) in &ys {
                    for &(xx, wx) in xt {
                        v += wy * wx * img.get(xx, yy, ch) as f64;
                    }
                }
                pixels.push((v + 0.5).floor().clamp(0.0, 255.0) as u8);
            }
        }
    }
    Image::new(out_w, out_h, c, pixels)
}

/// Bilinear upsampling of a float map (same sampling rule, no rounding).
pub fn bilinear_resize_f32(map: &[f32], w: usize, h: usize, out_w: usize, out_h: usize) -> Vec<f32> {
    let xs: Vec<_> = (0..out_w).map(|x| bilinear_taps(x, w, out_w)).collect();
    let mut out = Vec::with_capacity(out_w * out_h);
    for y in 0..out_h {
        let (y0, y1, fy) = bilinear_taps(y, h, out_h);
        for &(x0, x1, fx) in &xs {
            let p = |xx: usize, yy: usize| map[yy * w + xx] as f64;
            let top = p(x0, y0) + (p(x1, y0) - p(x0, y0)) * fx;
            let bot = p(x0, y1) + (p(x1, y1) - p(x0, y1)) * fx;
            out.push((top + (bot - top) * fy) as f32);
        }
    }
    out
}

/// ITU-R BT.601 luma weights.
pub const BT601: [f64; 3] = [0.299, 0.587, 0.114];

/// Scale to [0,1] and lay out as `1×C×H×W`, replicating gray to 3 planes or
/// reducing RGB to luma when `channels` differs from the image.
pub fn to_input_tensor<T: Scalar>(img: &Image, channels: usize) -> Result<Tensor<T>> {
    let (w, h) = (img.width, img.height);
    let plane = w * h;
    let mut data = vec![T::zero(); channels * plane];
    match (img.channels, channels) {
        (1, c) => {
            for p in data.chunks_exact_mut(plane).take(c) {
                for (d, &v) in p.iter_mut().zip(&img.pixels) {
                    *d = T::of(v as f64 / 255.0);
                }
            }
        }
        (3, 3) => {
            for (i, px) in img.pixels.chunks_exact(3).enumerate() {
                for ch in 0..3 {
                    data[ch * plane + i] = T::of(px[ch] as f64 / 255.0);
                }
            }
        }
        (3, 1) => {
            for (d, px) in data.iter_mut().zip(img.pixels.chunks_exact(3)) {
                let luma: f64 = px.iter().zip(BT601).map(|(&v, w)| v as f64 * w).sum();
                *d = T::of(luma / 255.0);
            }
        }
        (src, dst) => {
            return Err(Error::invalid(format!("cannot convert {src} channels to {dst}")));
        }
    }
    Tensor::from_vec(vec![1, channels, h, w], data)
}
