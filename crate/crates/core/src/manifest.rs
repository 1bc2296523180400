//! Labelled image collections stored as `root/<label>/<file>` plus a CSV
//! manifest.
//!
//! The manifest is one `#` provenance line followed by CSV with the fixed
//! header `filename,label,seed`:
//!
//! ```text
//! # kind=uml count=2 seed=7 canvas=64x64 classes=class;sequence
//! filename,label,seed
//! class/uml_000000.pgm,class,11400714785074694791
//! sequence/uml_000001.pgm,sequence,3218930443213101372
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.csv";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestRow {
    /// Path relative to the dataset root, `/`-separated.
    pub filename: String,
    pub label: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetManifest {
    pub kind: String,
    pub seed: u64,
    /// (width, height) of generated images; `None` for ingested data.
    pub canvas: Option<(usize, usize)>,
    /// Class names; a row's label index is its position here.
    pub classes: Vec<String>,
    pub rows: Vec<ManifestRow>,
}

impl DatasetManifest {
    pub fn label_index(&self, label: &str) -> Result<usize> {
        self.classes
            .iter()
            .position(|c| c == label)
            .ok_or_else(|| Error::data(format!("label {label:?} not among {:?}", self.classes)))
    }

    pub fn label_indices(&self) -> Result<Vec<usize>> {
        self.rows.iter().map(|r| self.label_index(&r.label)).collect()
    }

    pub fn to_csv(&self) -> String {
        let canvas = self.canvas.map_or("none".to_string(), |(w, h)| format!("{w}x{h}"));
        let mut s = format!(
            "# kind={} count={} seed={} canvas={} classes={}\nfilename,label,seed\n",
            self.kind,
            self.rows.len(),
            self.seed,
            canvas,
            self.classes.join(";")
        );
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{}", r.filename, r.label, r.seed);
        }
        s
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let bad = |d: String| Error::format("manifest", d);
        let (first, body) = text.split_once('\n').ok_or_else(|| bad("empty file".into()))?;
        let meta = first
            .strip_prefix("# ")
            .ok_or_else(|| bad("missing '# ' provenance line".into()))?;
        let mut kv = std::collections::HashMap::new();
        for pair in meta.split_whitespace() {
            let (k, v) = pair.split_once('=').ok_or_else(|| bad(format!("bad field {pair:?}")))?;
            kv.insert(k, v);
        }
        let get = |k: &str| kv.get(k).copied().ok_or_else(|| bad(format!("missing {k}")));
        let count: usize = get("count")?.parse().map_err(|_| bad("bad count".into()))?;
        let seed: u64 = get("seed")?.parse().map_err(|_| bad("bad seed".into()))?;
        let canvas = match get("canvas")? {
            "none" => None,
            c => {
                let (w, h) = c.split_once('x').ok_or_else(|| bad(format!("bad canvas {c}")))?;
                Some((
                    w.parse().map_err(|_| bad("bad canvas width".into()))?,
                    h.parse().map_err(|_| bad("bad canvas height".into()))?,
                ))
            }
        };
        let classes: Vec<String> = get("classes")?
            .split(';')
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect();

        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(body.as_bytes());
        let headers = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
        if headers.iter().collect::<Vec<_>>() != ["filename", "label", "seed"] {
            return Err(bad(format!("unexpected columns {headers:?}")));
        }
        let mut rows = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            rows.push(ManifestRow {
                filename: rec[0].to_string(),
                label: rec[1].to_string(),
                seed: rec[2].parse().map_err(|_| bad(format!("bad seed {:?}", &rec[2])))?,
            });
        }
        if rows.len() != count {
            return Err(bad(format!("header says {count} rows, found {}", rows.len())));
        }
        let m = Self {
            kind: get("kind")?.to_string(),
            seed,
            canvas,
            classes,
            rows,
        };
        m.label_indices()?;
        Ok(m)
    }

    pub fn write(&self, root: impl AsRef<Path>) -> Result<()> {
        let path = root.as_ref().join(MANIFEST_FILE);
        fs::write(&path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn read(root: impl AsRef<Path>) -> Result<Self> {
        let path = root.as_ref().join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Self::parse_csv(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_roundtrip_and_layout() {
        let m = DatasetManifest {
            kind: "uml".into(),
            seed: 7,
            canvas: Some((64, 64)),
            classes: vec!["class".into(), "sequence".into()],
            rows: vec![
                ManifestRow {
                    filename: "class/a.pgm".into(),
                    label: "class".into(),
                    seed: 1,
                },
                ManifestRow {
                    filename: "sequence/b.pgm".into(),
                    label: "sequence".into(),
                    seed: u64::MAX,
                },
            ],
        };
        let text = m.to_csv();
        assert!(text.starts_with("# kind=uml count=2 seed=7 canvas=64x64 classes=class;sequence\nfilename,label,seed\n"));
        assert_eq!(DatasetManifest::parse_csv(&text).unwrap(), m);
        assert_eq!(m.label_indices().unwrap(), vec![0, 1]);
    }

    #[test]
    fn rejects_inconsistent_files() {
        let bad_count = "# kind=x count=2 seed=0 canvas=none classes=a\nfilename,label,seed\na/1.pgm,a,0\n";
        assert!(DatasetManifest::parse_csv(bad_count).is_err());
        let bad_label = "# kind=x count=1 seed=0 canvas=none classes=a\nfilename,label,seed\nb/1.pgm,b,0\n";
        assert!(DatasetManifest::parse_csv(bad_label).is_err());
        let empty = "# kind=x count=0 seed=0 canvas=none classes=\nfilename,label,seed\n";
        assert!(DatasetManifest::parse_csv(empty).unwrap().rows.is_empty());
    }
}
