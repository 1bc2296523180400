//! Seeded procedural image generation: UML class and sequence diagrams for
//! the target task, plain geometry for the source task.

mod raster;
mod scene;
mod shapes;
mod uml;

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

pub use raster::{bresenham, Canvas, Point};
pub use scene::{
    arrow_head, ArrowHead, Element, Pattern, SceneKind, SceneSpec, Stroke, DASH, DEFAULT_NOISE, RENDER_SIZE,
};
pub use shapes::{source_scene, SOURCE_CLASSES};
pub use uml::{class_scene, lifelines, sequence_scene, Lifeline};

use crate::error::{Error, Result};
use crate::imageio::{write_pnm, Image};
use crate::manifest::{DatasetManifest, ManifestRow};
use crate::rng::child_seed;

pub const UML_CLASSES: [&str; 2] = ["class", "sequence"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetKind {
    Uml,
    Source,
}

impl DatasetKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DatasetKind::Uml => "uml",
            DatasetKind::Source => "source",
        }
    }

    pub fn classes(self) -> &'static [&'static str] {
        match self {
            DatasetKind::Uml => &UML_CLASSES,
            DatasetKind::Source => &SOURCE_CLASSES,
        }
    }

    /// Scene for item `index`: labels cycle round-robin through the classes.
    pub fn scene(self, index: usize, item_seed: u64) -> SceneSpec {
        match self {
            DatasetKind::Uml if index % 2 == 0 => class_scene(item_seed),
            DatasetKind::Uml => sequence_scene(item_seed),
            DatasetKind::Source => source_scene((index % 4) as u8, item_seed).expect("class in range"),
        }
    }
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DatasetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uml" => Ok(DatasetKind::Uml),
            "source" | "shapes" => Ok(DatasetKind::Source),
            _ => Err(Error::invalid(format!("unknown dataset kind {s:?} (uml|source)"))),
        }
    }
}

pub fn gen_class_diagram(seed: u64, canvas: (usize, usize)) -> Result<Image> {
    class_scene(seed).render_to(canvas)
}

pub fn gen_sequence_diagram(seed: u64, canvas: (usize, usize)) -> Result<Image> {
    sequence_scene(seed).render_to(canvas)
}

pub fn gen_source_scene(class: u8, seed: u64, canvas: (usize, usize)) -> Result<Image> {
    source_scene(class, seed)?.render_to(canvas)
}

fn check_canvas(canvas: (usize, usize)) -> Result<()> {
    if canvas.0 == 0 || canvas.1 == 0 {
        return Err(Error::invalid(format!("canvas {}x{}", canvas.0, canvas.1)));
    }
    Ok(())
}

fn manifest_for(kind: DatasetKind, count: usize, seed: u64, canvas: (usize, usize)) -> DatasetManifest {
    let classes = kind.classes();
    DatasetManifest {
        kind: kind.as_str().into(),
        seed,
        canvas: Some(canvas),
        classes: classes.iter().map(|c| c.to_string()).collect(),
        rows: (0..count)
            .map(|i| {
                let label = classes[i % classes.len()];
                ManifestRow {
                    filename: format!("{label}/{}_{i:06}.pgm", kind.as_str()),
                    label: label.into(),
                    seed: child_seed(seed, i as u64),
                }
            })
            .collect(),
    }
}

/// Generate in memory. Images come back in manifest order.
pub fn render_dataset(
    kind: DatasetKind,
    count: usize,
    seed: u64,
    canvas: (usize, usize),
) -> Result<(DatasetManifest, Vec<Image>)> {
    check_canvas(canvas)?;
    let manifest = manifest_for(kind, count, seed, canvas);
    let images = manifest
        .rows
        .par_iter()
        .enumerate()
        .map(|(i, row)| kind.scene(i, row.seed).render_to(canvas))
        .collect::<Result<Vec<_>>>()?;
    Ok((manifest, images))
}

/// Generate `count` images under `out_dir/<label>/` plus `manifest.csv`.
pub fn gen_dataset(
    kind: DatasetKind,
    count: usize,
    seed: u64,
    out_dir: impl AsRef<Path>,
    canvas: (usize, usize),
) -> Result<DatasetManifest> {
    check_canvas(canvas)?;
    let out = out_dir.as_ref();
    let manifest = manifest_for(kind, count, seed, canvas);
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    for label in kind.classes().iter().take(count) {
        let dir = out.join(label);
        fs::create_dir_all(&dir).map_err(|e| Error::io(dir, e))?;
    }
    manifest
        .rows
        .par_iter()
        .enumerate()
        .try_for_each(|(i, row)| write_pnm(&kind.scene(i, row.seed).render_to(canvas)?, out.join(&row.filename)))?;
    manifest.write(out)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imageio::load_images;

    #[test]
    fn uml_dataset_is_balanced_and_reproducible() {
        let tmp = tempfile::tempdir().unwrap();
        let m = gen_dataset(DatasetKind::Uml, 100, 3, tmp.path().join("a"), (32, 32)).unwrap();
        assert_eq!(m.rows.iter().filter(|r| r.label == "class").count(), 50);
        assert_eq!(m.rows.iter().filter(|r| r.label == "sequence").count(), 50);
        let m2 = gen_dataset(DatasetKind::Uml, 100, 3, tmp.path().join("b"), (32, 32)).unwrap();
        assert_eq!(m, m2);
        for r in &m.rows {
            let a = fs::read(tmp.path().join("a").join(&r.filename)).unwrap();
            let b = fs::read(tmp.path().join("b").join(&r.filename)).unwrap();
            assert_eq!(a, b);
        }
        assert_eq!(
            fs::read(tmp.path().join("a/manifest.csv")).unwrap(),
            fs::read(tmp.path().join("b/manifest.csv")).unwrap()
        );
        let (mem, images) = render_dataset(DatasetKind::Uml, 100, 3, (32, 32)).unwrap();
        assert_eq!(mem, m);
        assert_eq!(load_images(tmp.path().join("a"), &m).unwrap(), images);
    }

    #[test]
    fn empty_dataset() {
        let tmp = tempfile::tempdir().unwrap();
        let m = gen_dataset(DatasetKind::Source, 0, 1, tmp.path(), (16, 16)).unwrap();
        assert!(m.rows.is_empty());
        assert_eq!(DatasetManifest::read(tmp.path()).unwrap(), m);
        let entries: Vec<_> = fs::read_dir(tmp.path()).unwrap().collect();
        assert_eq!(entries.len(), 1);
    }

    #[test]
    fn source_round_robin() {
        let (m, _) = render_dataset(DatasetKind::Source, 8, 0, (16, 16)).unwrap();
        let labels: Vec<_> = m.rows.iter().map(|r| r.label.as_str()).collect();
        assert_eq!(labels, ["circles", "triangles", "textures", "polylines"].repeat(2));
    }

    #[test]
    fn same_seed_same_pixels() {
        assert_eq!(gen_class_diagram(9, (64, 64)).unwrap(), gen_class_diagram(9, (64, 64)).unwrap());
        assert_eq!(gen_sequence_diagram(9, (64, 64)).unwrap(), gen_sequence_diagram(9, (64, 64)).unwrap());
        assert_eq!(gen_source_scene(2, 9, (64, 64)).unwrap(), gen_source_scene(2, 9, (64, 64)).unwrap());
        assert_ne!(gen_class_diagram(9, (64, 64)).unwrap(), gen_class_diagram(10, (64, 64)).unwrap());
    }
}
