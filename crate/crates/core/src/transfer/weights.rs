//! NNWT weight files.
//!
//! ```text
//! "NNWT" | version: u32 LE (=1) | header length: u64 LE | header (UTF-8 JSON) | payload
//! ```
//!
//! The header records the architecture and a tensor table of
//! `{name, dtype: "f32", shape, offset}`; offsets are byte offsets into the
//! payload, which holds the tensors back to back as little-endian f32 in
//! table order.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{ArchSpec, Model};
use crate::tensor::{Scalar, Tensor};

pub const MAGIC: &[u8; 4] = b"NNWT";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub dtype: String,
    pub shape: Vec<usize>,
    pub offset: u64,
}

impl TensorEntry {
    fn byte_len(&self) -> u64 {
        self.shape.iter().product::<usize>() as u64 * 4
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightHeader {
    pub arch: ArchSpec,
    /// True when only the layers ahead of global average pooling are stored.
    pub backbone_only: bool,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
    pub tensors: Vec<TensorEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightFile {
    pub header: WeightHeader,
    pub payload: Vec<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoadMode {
    /// Every model parameter must be present, with no extras.
    Strict,
    /// Load whatever names match; report the rest.
    ByName,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub loaded: Vec<String>,
    /// Model parameters the file did not provide (left at their current values).
    pub unmatched: Vec<String>,
    /// File tensors with no matching model parameter.
    pub unused: Vec<String>,
}

impl WeightFile {
    pub fn from_model<T: Scalar>(model: &Model<T>, backbone_only: bool) -> Self {
        let end = if backbone_only {
            model.gap_index().unwrap_or(model.layers.len())
        } else {
            model.layers.len()
        };
        let mut tensors = Vec::new();
        let mut payload = Vec::new();
        for l in &model.layers[..end] {
            for p in l.params() {
                tensors.push(TensorEntry {
                    name: format!("{}.{}", l.name, p.name),
                    dtype: "f32".into(),
                    shape: p.value.shape().to_vec(),
                    offset: payload.len() as u64,
                });
                for &v in p.value.data() {
                    payload.extend_from_slice(&(v.as_f64() as f32).to_le_bytes());
                }
            }
        }
        WeightFile {
            header: WeightHeader {
                arch: model.spec.clone(),
                backbone_only,
                metadata: BTreeMap::new(),
                tensors,
            },
            payload,
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let header = serde_json::to_vec(&self.header).expect("header serializes");
        let mut out = Vec::with_capacity(16 + header.len() + self.payload.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(header.len() as u64).to_le_bytes());
        out.extend_from_slice(&header);
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let bad = |d: String| Error::format("NNWT file", d);
        if bytes.len() < 16 || &bytes[..4] != MAGIC {
            return Err(bad("bad magic".into()));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        if version != VERSION {
            return Err(bad(format!("unsupported version {version}")));
        }
        let hlen = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
        let hend = 16u64
            .checked_add(hlen)
            .filter(|&e| e <= bytes.len() as u64)
            .ok_or_else(|| bad("header length exceeds file".into()))? as usize;
        let header: WeightHeader =
            serde_json::from_slice(&bytes[16..hend]).map_err(|e| bad(format!("header: {e}")))?;
        let payload = bytes[hend..].to_vec();
        let file = WeightFile { header, payload };
        file.validate()?;
        Ok(file)
    }

    /// Offsets ascending and non-overlapping; tensor bytes sum to the payload length.
    pub fn validate(&self) -> Result<()> {
        let bad = |d: String| Error::format("NNWT file", d);
        let mut end = 0u64;
        let mut total = 0u64;
        let mut names = std::collections::HashSet::new();
        for t in &self.header.tensors {
            if t.dtype != "f32" {
                return Err(bad(format!("{}: dtype {} unsupported", t.name, t.dtype)));
            }
            if !names.insert(&t.name) {
                return Err(bad(format!("{} appears twice", t.name)));
            }
            if t.offset < end {
                return Err(bad(format!("{}: offset {} overlaps previous tensor", t.name, t.offset)));
            }
            end = t.offset + t.byte_len();
            total += t.byte_len();
            if end > self.payload.len() as u64 {
                return Err(bad(format!("{}: extends past payload (truncated?)", t.name)));
            }
        }
        if total != self.payload.len() as u64 {
            return Err(bad(format!(
                "tensor table covers {total} bytes, payload has {}",
                self.payload.len()
            )));
        }
        Ok(())
    }

    pub fn tensor<T: Scalar>(&self, entry: &TensorEntry) -> Result<Tensor<T>> {
        let start = entry.offset as usize;
        let bytes = &self.payload[start..start + entry.byte_len() as usize];
        let data = bytes
            .chunks_exact(4)
            .map(|b| T::of(f32::from_le_bytes(b.try_into().unwrap()) as f64))
            .collect();
        Tensor::from_vec(entry.shape.clone(), data)
    }

    /// Rebuild the stored architecture and load the weights strictly. For a
    /// backbone-only file the head keeps its seeded initialisation.
    pub fn to_model(&self, seed: u64) -> Result<Model<f32>> {
        let mut model = Model::build(&self.header.arch, seed)?;
        let mode = if self.header.backbone_only {
            LoadMode::ByName
        } else {
            LoadMode::Strict
        };
        self.apply(&mut model, mode)?;
        Ok(model)
    }

    /// Load into `model`. Nothing is modified unless every check passes.
    pub fn apply<T: Scalar>(&self, model: &mut Model<T>, mode: LoadMode) -> Result<LoadReport> {
        let entries: BTreeMap<&str, &TensorEntry> =
            self.header.tensors.iter().map(|t| (t.name.as_str(), t)).collect();
        let mut report = LoadReport::default();
        let mut staged = Vec::new();
        for (name, value) in model.named_params() {
            match entries.get(name.as_str()) {
                Some(e) if e.shape == value.shape() => {
                    staged.push((name.clone(), self.tensor::<T>(e)?));
                    report.loaded.push(name);
                }
                Some(e) => {
                    return Err(Error::shape(format!(
                        "{name}: file shape {:?}, model shape {:?}",
                        e.shape,
                        value.shape()
                    )))
                }
                None => report.unmatched.push(name),
            }
        }
        report.unused = self
            .header
            .tensors
            .iter()
            .filter(|t| !report.loaded.contains(&t.name))
            .map(|t| t.name.clone())
            .collect();
        if mode == LoadMode::Strict && (!report.unmatched.is_empty() || !report.unused.is_empty()) {
            return Err(Error::data(format!(
                "strict load: missing {:?}, unexpected {:?}",
                report.unmatched, report.unused
            )));
        }
        let mut staged = staged.into_iter();
        for (name, slot) in model.named_params_mut() {
            if report.loaded.contains(&name) {
                *slot = staged.next().expect("staged in the same order").1;
            }
        }
        Ok(report)
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn save_weights<T: Scalar>(model: &Model<T>, path: impl AsRef<Path>) -> Result<WeightFile> {
    let file = WeightFile::from_model(model, false);
    write_atomic(path.as_ref(), &file.encode())?;
    Ok(file)
}

/// Save only the layers ahead of global average pooling.
pub fn save_backbone<T: Scalar>(
    model: &Model<T>,
    path: impl AsRef<Path>,
    metadata: BTreeMap<String, String>,
) -> Result<WeightFile> {
    let mut file = WeightFile::from_model(model, true);
    file.header.metadata = metadata;
    write_atomic(path.as_ref(), &file.encode())?;
    Ok(file)
}

pub fn read_weight_file(path: impl AsRef<Path>) -> Result<WeightFile> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    WeightFile::decode(&bytes)
}

pub fn load_weights<T: Scalar>(model: &mut Model<T>, path: impl AsRef<Path>, mode: LoadMode) -> Result<LoadReport> {
    read_weight_file(path)?.apply(model, mode)
}
