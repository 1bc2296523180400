//! Cached pooled features of a frozen backbone.
//!
//! A cache lives in two files named after the backbone fingerprint:
//! `features-<fp>.idx` (text: a header line, then one image hash per row, all
//! 16-digit hex) and `features-<fp>.bin` (rows of little-endian f32, same
//! order). Both are written to a temporary name and renamed into place, so
//! readers never observe a partial file.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::backbone_fingerprint;
use crate::error::{Error, Result};
use crate::imageio::{bilinear_resize, to_input_tensor, Image};
use crate::models::Model;
use crate::tensor::Tensor;

const IDX_MAGIC: &str = "feature-cache v1";

#[derive(Debug, Clone)]
pub struct FeatureCache {
    fingerprint: u64,
    dim: usize,
    index: HashMap<u64, usize>,
    keys: Vec<u64>,
    rows: Vec<f32>,
    dir: Option<PathBuf>,
    hits: usize,
    misses: usize,
}

impl FeatureCache {
    pub fn in_memory(fingerprint: u64, dim: usize) -> Self {
        FeatureCache {
            fingerprint,
            dim,
            index: HashMap::new(),
            keys: Vec::new(),
            rows: Vec::new(),
            dir: None,
            hits: 0,
            misses: 0,
        }
    }

    pub fn paths(dir: &Path, fingerprint: u64) -> (PathBuf, PathBuf) {
        (
            dir.join(format!("features-{fingerprint:016x}.idx")),
            dir.join(format!("features-{fingerprint:016x}.bin")),
        )
    }

    /// Open (or start) the on-disk cache for `fingerprint` in `dir`.
    pub fn open(dir: impl AsRef<Path>, fingerprint: u64, dim: usize) -> Result<Self> {
        let dir = dir.as_ref();
        let mut cache = FeatureCache::in_memory(fingerprint, dim);
        cache.dir = Some(dir.to_path_buf());
        let (idx_path, bin_path) = Self::paths(dir, fingerprint);
        if !idx_path.exists() {
            return Ok(cache);
        }
        let bad = |d: String| Error::format("feature cache", d);
        let idx = fs::read_to_string(&idx_path).map_err(|e| Error::io(&idx_path, e))?;
        let mut lines = idx.lines();
        if lines.next() != Some(IDX_MAGIC) {
            return Err(bad(format!("{}: bad header", idx_path.display())));
        }
        let meta = lines.next().unwrap_or_default();
        let expect = format!("fingerprint={fingerprint:016x} dim={dim}");
        if meta != expect {
            return Err(bad(format!("{}: expected `{expect}`, found `{meta}`", idx_path.display())));
        }
        for l in lines {
            let key = u64::from_str_radix(l.trim(), 16).map_err(|e| bad(format!("{l:?}: {e}")))?;
            cache.index.insert(key, cache.keys.len());
            cache.keys.push(key);
        }
        let bin = fs::read(&bin_path).map_err(|e| Error::io(&bin_path, e))?;
        if bin.len() != cache.keys.len() * dim * 4 {
            return Err(bad(format!(
                "{}: {} bytes for {} rows of {dim}",
                bin_path.display(),
                bin.len(),
                cache.keys.len()
            )));
        }
        cache.rows = bin
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
            .collect();
        Ok(cache)
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    /// (hits, misses) across all lookups made through [`extract_features`].
    pub fn stats(&self) -> (usize, usize) {
        (self.hits, self.misses)
    }

    pub fn get(&self, key: u64) -> Option<&[f32]> {
        self.index
            .get(&key)
            .map(|&r| &self.rows[r * self.dim..(r + 1) * self.dim])
    }

    pub fn insert(&mut self, key: u64, row: &[f32]) -> Result<()> {
        if row.len() != self.dim {
            return Err(Error::shape(format!("feature row of {} for cache dim {}", row.len(), self.dim)));
        }
        match self.index.get(&key) {
            Some(&r) => self.rows[r * self.dim..(r + 1) * self.dim].copy_from_slice(row),
            None => {
                self.index.insert(key, self.keys.len());
                self.keys.push(key);
                self.rows.extend_from_slice(row);
            }
        }
        Ok(())
    }

    /// Write the cache to its directory, if it has one.
    pub fn persist(&self) -> Result<()> {
        let Some(dir) = &self.dir else { return Ok(()) };
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let (idx_path, bin_path) = Self::paths(dir, self.fingerprint);
        let mut idx = format!("{IDX_MAGIC}\nfingerprint={:016x} dim={}\n", self.fingerprint, self.dim);
        for k in &self.keys {
            writeln!(idx, "{k:016x}").unwrap();
        }
        let bin: Vec<u8> = self.rows.iter().flat_map(|v| v.to_le_bytes()).collect();
        // payload first: a reader that sees the new index always finds enough rows
        for (path, bytes) in [(&bin_path, bin), (&idx_path, idx.into_bytes())] {
            let tmp = path.with_extension("tmp");
            fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
            fs::rename(&tmp, path).map_err(|e| Error::io(path, e))?;
        }
        Ok(())
    }
}

fn image_tensor(img: &Image, input: [usize; 3]) -> Result<Tensor<f32>> {
    let [c, h, w] = input;
    if img.width == w && img.height == h {
        to_input_tensor(img, c)
    } else {
        to_input_tensor(&bilinear_resize(img, w, h)?, c)
    }
}

/// Stack images into an `N×C×H×W` batch matching the model input, resizing
/// when needed.
pub fn images_to_tensor(images: &[Image], input: [usize; 3]) -> Result<Tensor<f32>> {
    let samples = images
        .par_iter()
        .map(|img| image_tensor(img, input).map(Tensor::into_data))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&[f32]> = samples.iter().map(Vec::as_slice).collect();
    Tensor::stack(&refs, &input)
}

/// Pooled backbone features (`N×C`) for `images`, computing only what the
/// cache lacks.
pub fn extract_features(model: &Model<f32>, images: &[Image], cache: &mut FeatureCache) -> Result<Tensor<f32>> {
    let gap = model
        .gap_index()
        .ok_or_else(|| Error::invalid("model has no global average pooling"))?;
    let fp = backbone_fingerprint(model);
    if fp != cache.fingerprint {
        return Err(Error::data(format!(
            "cache was built for backbone {:016x}, model backbone is {fp:016x}",
            cache.fingerprint
        )));
    }
    let keys: Vec<u64> = images.iter().map(Image::content_hash).collect();
    let mut missing: Vec<usize> = (0..images.len()).filter(|&i| cache.get(keys[i]).is_none()).collect();
    missing.dedup_by_key(|&mut i| keys[i]);
    cache.hits += images.len() - missing.len();
    cache.misses += missing.len();
    let computed = missing
        .par_iter()
        .map(|&i| {
            let x = image_tensor(&images[i], model.spec.input)?;
            let f = model.forward_range_eval(&x, 0, gap + 1)?;
            f.ensure_finite("backbone features")?;
            Ok(f.into_data())
        })
        .collect::<Result<Vec<_>>>()?;
    for (&i, row) in missing.iter().zip(&computed) {
        cache.insert(keys[i], row)?;
    }
    let rows: Vec<&[f32]> = keys.iter().map(|&k| cache.get(k).expect("just filled")).collect();
    Tensor::stack(&rows, &[cache.dim])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{ArchId, ArchSpec};
    use crate::rng::SeededRng;

    fn setup() -> (Model<f32>, Vec<Image>) {
        let spec = ArchSpec::new(ArchId::MiniFrozen, 1).with_input([1, 16, 16]);
        let model = Model::build(&spec, 2).unwrap();
        let mut rng = SeededRng::new(8);
        let images = (0..5)
            .map(|_| Image::new(16, 16, 1, (0..256).map(|_| rng.next_u64() as u8).collect()).unwrap())
            .collect();
        (model, images)
    }

    #[test]
    fn cached_matches_direct_and_persists() {
        let (model, images) = setup();
        let tmp = tempfile::tempdir().unwrap();
        let fp = backbone_fingerprint(&model);
        let mut cache = FeatureCache::open(tmp.path(), fp, 64).unwrap();
        let a = extract_features(&model, &images, &mut cache).unwrap();
        assert_eq!(a.shape(), &[5, 64]);
        assert_eq!(cache.stats(), (0, 5));
        cache.persist().unwrap();

        let x = images_to_tensor(&images, model.spec.input).unwrap();
        let gap = model.gap_index().unwrap();
        let direct = model.forward_range_eval(&x, 0, gap + 1).unwrap();
        assert!(a.bitwise_eq(&direct));

        let mut reopened = FeatureCache::open(tmp.path(), fp, 64).unwrap();
        assert_eq!(reopened.len(), 5);
        let b = extract_features(&model, &images, &mut reopened).unwrap();
        assert_eq!(reopened.stats(), (5, 0));
        assert!(a.bitwise_eq(&b));
    }

    #[test]
    fn fingerprint_mismatch_is_refused() {
        let (model, images) = setup();
        let mut cache = FeatureCache::in_memory(backbone_fingerprint(&model) ^ 1, 64);
        assert!(extract_features(&model, &images, &mut cache).is_err());
    }

    #[test]
    fn changing_one_backbone_weight_changes_fingerprint() {
        let (mut model, _) = setup();
        let fp = backbone_fingerprint(&model);
        let bytes = crate::transfer::WeightFile::from_model(&model, true).payload;
        assert_eq!(fp, crate::transfer::fingerprint(&bytes));
        let w = model.layer_mut("block2_conv1").unwrap().params_mut().remove(0);
        let v = w.value.data_mut();
        v[3] = f32::from_bits(v[3].to_bits() ^ 1);
        assert_ne!(backbone_fingerprint(&model), fp);
    }
}
