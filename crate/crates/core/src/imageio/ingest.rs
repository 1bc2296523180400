use std::fs;
use std::path::Path;

use log::warn;
use rayon::prelude::*;

use super::{read_pnm, Image};
use crate::error::{Error, Result};
use crate::manifest::{DatasetManifest, ManifestRow};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ingested {
    pub manifest: DatasetManifest,
    /// Files skipped for having an unsupported extension.
    pub skipped: usize,
}

fn sorted_entries(dir: &Path) -> Result<Vec<fs::DirEntry>> {
    let mut entries: Vec<_> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .collect::<std::io::Result<_>>()
        .map_err(|e| Error::io(dir, e))?;
    entries.sort_by_key(|e| e.file_name());
    Ok(entries)
}

/// Build a manifest from `root/<label>/*.{pgm,ppm}`. Labels and files are
/// taken in lexicographic order; every accepted file is decoded once to make
/// sure it is readable.
pub fn ingest_directory(root: impl AsRef<Path>) -> Result<Ingested> {
    let root = root.as_ref();
    let mut classes = Vec::new();
    let mut rows = Vec::new();
    let mut skipped = 0;
    for class_dir in sorted_entries(root)? {
        let path = class_dir.path();
        if !path.is_dir() {
            continue;
        }
        let label = class_dir.file_name().to_string_lossy().into_owned();
        let mut accepted = 0;
        for file in sorted_entries(&path)? {
            let fpath = file.path();
            if !fpath.is_file() {
                continue;
            }
            let ext = fpath
                .extension()
                .map(|e| e.to_string_lossy().to_ascii_lowercase())
                .unwrap_or_default();
            if ext != "pgm" && ext != "ppm" {
                warn!("skipping {}: unsupported extension", fpath.display());
                skipped += 1;
                continue;
            }
            read_pnm(&fpath)?;
            rows.push(ManifestRow {
                filename: format!("{label}/{}", file.file_name().to_string_lossy()),
                label: label.clone(),
                seed: 0,
            });
            accepted += 1;
        }
        if accepted == 0 {
            return Err(Error::data(format!("class directory {} has no PGM/PPM images", path.display())));
        }
        classes.push(label);
    }
    if classes.is_empty() {
        return Err(Error::data(format!("{} has no class subdirectories", root.display())));
    }
    Ok(Ingested {
        manifest: DatasetManifest {
            kind: "ingested".into(),
            seed: 0,
            canvas: None,
            classes,
            rows,
        },
        skipped,
    })
}

/// Decode every image listed in `manifest`, in row order.
pub fn load_images(root: impl AsRef<Path>, manifest: &DatasetManifest) -> Result<Vec<Image>> {
    let root = root.as_ref();
    manifest
        .rows
        .par_iter()
        .map(|r| read_pnm(root.join(&r.filename)))
        .collect()
}
