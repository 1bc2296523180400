use std::fs;

use translab::experiment::LabeledImages;
use translab::manifest::DatasetManifest;
use translab::models::{ArchId, ArchSpec, Model, WidthMult};
use translab::synth::{gen_dataset, render_dataset, DatasetKind};
use translab::transfer::{load_weights, read_weight_file, save_backbone, save_weights, LoadMode};

#[test]
fn generated_tree_loads_back_identically() {
    let tmp = tempfile::tempdir().unwrap();
    let m = gen_dataset(DatasetKind::Uml, 10, 21, tmp.path(), (48, 40)).unwrap();
    assert_eq!(DatasetManifest::read(tmp.path()).unwrap(), m);
    let loaded = LabeledImages::load(tmp.path()).unwrap();
    let (_, images) = render_dataset(DatasetKind::Uml, 10, 21, (48, 40)).unwrap();
    assert_eq!(loaded.images, images);
    assert_eq!(loaded.class_counts(), vec![5, 5]);
    assert!(images.iter().all(|i| (i.width, i.height) == (48, 40)));
}

#[test]
fn directory_without_manifest_is_ingested() {
    let tmp = tempfile::tempdir().unwrap();
    gen_dataset(DatasetKind::Source, 8, 2, tmp.path(), (32, 32)).unwrap();
    fs::remove_file(tmp.path().join("manifest.csv")).unwrap();
    let loaded = LabeledImages::load(tmp.path()).unwrap();
    assert_eq!(loaded.num_classes(), 4);
    assert_eq!(loaded.images.len(), 8);
}

#[test]
fn weights_survive_disk_bitwise() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = ArchSpec::new(ArchId::Mini, 4).with_width(WidthMult::new(1, 16).unwrap());
    let model = Model::<f32>::build(&spec, 8).unwrap();
    let path = tmp.path().join("m.nnwt");
    save_weights(&model, &path).unwrap();
    let mut other = Model::<f32>::build(&spec, 9).unwrap();
    assert!(!other.snapshot().bitwise_eq(&model.snapshot()));
    load_weights(&mut other, &path, LoadMode::Strict).unwrap();
    assert!(other.snapshot().bitwise_eq(&model.snapshot()));

    let bb = tmp.path().join("bb.nnwt");
    save_backbone(&model, &bb, Default::default()).unwrap();
    let file = read_weight_file(&bb).unwrap();
    assert!(file.header.backbone_only);
    let frozen_spec = ArchSpec { arch: ArchId::MiniFrozen, outputs: 1, ..spec };
    let mut frozen = Model::<f32>::build(&frozen_spec, 1).unwrap();
    let rep = file.apply(&mut frozen, LoadMode::ByName).unwrap();
    assert_eq!(rep.unmatched, vec!["logits.W".to_string(), "logits.b".to_string()]);
    assert!(file.apply(&mut frozen, LoadMode::Strict).is_err());

    let mut bytes = fs::read(&path).unwrap();
    bytes[0] = b'X';
    fs::write(&path, bytes).unwrap();
    assert!(read_weight_file(&path).is_err());
}
