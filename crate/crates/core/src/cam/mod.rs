//! Class activation maps for models whose head is global average pooling
//! followed by a single dense layer.

mod colormap;

use std::path::Path;

pub use colormap::{colorize, colormap, colormap_table};

use crate::error::{Error, Result};
use crate::imageio::{bilinear_resize, bilinear_resize_f32, to_input_tensor, write_pnm, Image};
use crate::models::Model;
use crate::nn::{LayerKind, Op};
use crate::tensor::{Scalar, Tensor};

pub const DEFAULT_ALPHA: f64 = 0.4;

/// Unnormalized map on the final conv grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RawCam {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

/// Normalized, upsampled map with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatMap {
    pub width: usize,
    pub height: usize,
    /// Row-major, each in [0, 1].
    pub values: Vec<f32>,
    pub image_id: u64,
    pub class: usize,
    pub fingerprint: u64,
}

/// Weighted channel sum of `features` (`1×K×h×w`).
pub fn cam_from_weights<T: Scalar>(features: &Tensor<T>, weights: &[f64]) -> Result<RawCam> {
    let (n, k, h, w) = features.dims4();
    if n != 1 || k != weights.len() {
        return Err(Error::shape(format!(
            "features {:?} against {} weights",
            features.shape(),
            weights.len()
        )));
    }
    let plane = h * w;
    let mut values = vec![0.0; plane];
    for (ch, &wk) in weights.iter().enumerate() {
        for (v, f) in values.iter_mut().zip(&features.data()[ch * plane..(ch + 1) * plane]) {
            *v += wk * f.as_f64();
        }
    }
    Ok(RawCam {
        width: w,
        height: h,
        values,
    })
}

/// Index of the GAP layer and the head weights into `class`. With a single
/// sigmoid output, class 1 uses the weights and class 0 their negation.
pub fn class_weights<T: Scalar>(model: &Model<T>, class: usize) -> Result<(usize, Vec<f64>)> {
    let gap = model
        .gap_index()
        .ok_or_else(|| Error::invalid("CAM needs a global-average-pooling head"))?;
    let head = &model.layers[gap + 1..];
    let last = match head {
        [l] => l,
        [drop, l] if drop.kind() == LayerKind::Dropout => l,
        _ => return Err(Error::invalid("CAM needs the head to be GAP -> (dropout) -> one dense layer")),
    };
    let Op::Dense(d) = &last.op else {
        return Err(Error::invalid("CAM needs the last layer to be dense"));
    };
    let (k, o) = (d.inputs(), d.outputs());
    let w = d.weight.value.data();
    let column = |c: usize| (0..k).map(|i| w[i * o + c].as_f64()).collect::<Vec<_>>();
    let weights = match (o, class) {
        (1, 1) => column(0),
        (1, 0) => column(0).into_iter().map(|v| -v).collect(),
        (o, c) if o > 1 && c < o => column(c),
        _ => return Err(Error::invalid(format!("class {class} out of range for {o} output(s)"))),
    };
    Ok((gap, weights))
}

/// Raw CAM of `input` (`1×C×H×W`) for `class`. Bias is excluded.
pub fn compute_cam<T: Scalar>(model: &Model<T>, input: &Tensor<T>, class: usize) -> Result<RawCam> {
    let (gap, weights) = class_weights(model, class)?;
    let features = model.forward_range_eval(input, 0, gap)?;
    cam_from_weights(&features, &weights)
}

/// Min-max normalize to [0, 1]; a constant map becomes all zeros.
pub fn normalize(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return vec![0.0; values.len()];
    }
    values.iter().map(|v| (v - lo) / (hi - lo)).collect()
}

impl RawCam {
    /// Normalize, then bilinearly upsample to `width×height`.
    pub fn heatmap(&self, width: usize, height: usize) -> HeatMap {
        let norm: Vec<f32> = normalize(&self.values).into_iter().map(|v| v as f32).collect();
        let values = bilinear_resize_f32(&norm, self.width, self.height, width, height)
            .into_iter()
            .map(|v| v.clamp(0.0, 1.0))
            .collect();
        HeatMap {
            width,
            height,
            values,
            image_id: 0,
            class: 0,
            fingerprint: 0,
        }
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

impl HeatMap {
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.values[y * self.width + x]
    }

    /// Sum of each column.
    pub fn column_mass(&self) -> Vec<f64> {
        let mut mass = vec![0.0; self.width];
        for row in self.values.chunks_exact(self.width) {
            for (m, &v) in mass.iter_mut().zip(row) {
                *m += v as f64;
            }
        }
        mass
    }

    /// Mean column mass inside `columns` divided by the mean outside.
    pub fn column_mass_ratio(&self, columns: &[bool]) -> f64 {
        let mass = self.column_mass();
        let (mut inside, mut ni, mut outside, mut no) = (0.0, 0, 0.0, 0);
        for (m, &on) in mass.iter().zip(columns) {
            if on {
                inside += m;
                ni += 1;
            } else {
                outside += m;
                no += 1;
            }
        }
        if ni == 0 || no == 0 {
            return f64::NAN;
        }
        let (inside, outside) = (inside / ni as f64, outside / no as f64);
        if outside == 0.0 {
            f64::INFINITY
        } else {
            inside / outside
        }
    }
}

/// Original (as RGB) on the left, heatmap blended over it on the right.
pub fn render_overlay(heat: &HeatMap, image: &Image, alpha: f64) -> Result<Image> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::invalid(format!("alpha {alpha} outside [0, 1]")));
    }
    let base = image.to_rgb();
    let (w, h) = (base.width, base.height);
    let heat = if heat.width == w && heat.height == h {
        heat.values.clone()
    } else {
        bilinear_resize_f32(&heat.values, heat.width, heat.height, w, h)
    };
    let mut pixels = vec![0u8; 2 * w * h * 3];
    for y in 0..h {
        for x in 0..w {
            let color = colorize(heat[y * w + x] as f64);
            for c in 0..3 {
                let v = base.get(x, y, c);
                pixels[(y * 2 * w + x) * 3 + c] = v;
                let blended = (1.0 - alpha) * v as f64 + alpha * color[c] as f64;
                pixels[(y * 2 * w + w + x) * 3 + c] = (blended + 0.5).floor().clamp(0.0, 255.0) as u8;
            }
        }
    }
    Image::new(2 * w, h, 3, pixels)
}

/// CAM for `class` on `image` (resized to the model input for the forward
/// pass), rendered side by side at the image's own size.
pub fn cam_for_image(model: &Model<f32>, image: &Image, class: usize) -> Result<(RawCam, HeatMap)> {
    let [c, h, w] = model.spec.input;
    let resized;
    let src = if image.width == w && image.height == h {
        image
    } else {
        resized = bilinear_resize(image, w, h)?;
        &resized
    };
    let raw = compute_cam(model, &to_input_tensor::<f32>(src, c)?, class)?;
    let mut heat = raw.heatmap(image.width, image.height);
    heat.image_id = image.content_hash();
    heat.class = class;
    heat.fingerprint = crate::transfer::backbone_fingerprint(model);
    Ok((raw, heat))
}

pub fn render_heatmap_overlay(heat: &HeatMap, image: &Image, alpha: f64, out: impl AsRef<Path>) -> Result<Image> {
    let img = render_overlay(heat, image, alpha)?;
    write_pnm(&img, out)?;
    Ok(img)
}
