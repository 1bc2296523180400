use translab::experiment::{run_sweep, EvalMode, ExperimentPreset, GridSpec, LabeledImages};
use translab::models::{ArchId, Model, WidthMult};
use translab::synth::DatasetKind;
use translab::train::TrainConfig;
use translab::transfer::{save_backbone, read_weight_file};

fn tiny_preset() -> ExperimentPreset {
    let mut p = ExperimentPreset::named("mini").unwrap();
    p.grid = GridSpec::List(vec![2, 4]);
    p.trials = 2;
    p.canvas = (32, 32);
    p.width_mult = WidthMult::new(1, 16).unwrap();
    p.test_per_class = 4;
    p.train_overrides.clear();
    p.train = TrainConfig {
        max_epochs: 2,
        min_epochs: 1,
        patience: 1,
        ..TrainConfig::default()
    };
    p
}

fn backbone(p: &ExperimentPreset) -> translab::transfer::WeightFile {
    let tmp = tempfile::tempdir().unwrap();
    let model = Model::<f32>::build(&p.arch_spec(ArchId::Mini, 4), 3).unwrap();
    let path = tmp.path().join("bb.nnwt");
    save_backbone(&model, &path, Default::default()).unwrap();
    read_weight_file(&path).unwrap()
}

#[test]
fn rows_checks_and_determinism() {
    let p = tiny_preset();
    let pool = LabeledImages::synthetic(DatasetKind::Uml, 40, 1, (32, 32)).unwrap();
    let bb = backbone(&p);
    let a = run_sweep(&p, &pool, Some(&bb), None).unwrap();
    assert_eq!(a.rows.len(), p.row_count().unwrap());
    assert_eq!(a.rows.len(), 12);
    assert!(a.checks.all_passed(), "{:?}", a.checks);
    assert_eq!(a.checks.cells, 12);
    assert_eq!(a.checks.frozen_cells, 4);
    let b = run_sweep(&p, &pool, Some(&bb), None).unwrap();
    assert_eq!(a.to_csv(), b.to_csv());
    assert!(a.to_csv().lines().any(|l| l.starts_with("mini-frozen,2,0,")));
}

#[test]
fn kfold_rows_and_missing_backbone() {
    let mut p = tiny_preset();
    p.archs = vec![ArchId::SmallCnn];
    p.trials = 1;
    p.eval = EvalMode::KFold(3);
    p.grid = GridSpec::List(vec![3, 6]);
    let pool = LabeledImages::synthetic(DatasetKind::Uml, 40, 1, (32, 32)).unwrap();
    let r = run_sweep(&p, &pool, None, None).unwrap();
    assert_eq!(r.rows.len(), 6);
    assert_eq!(r.rows.iter().map(|r| r.fold).collect::<Vec<_>>(), [0, 1, 2, 0, 1, 2]);

    p.archs = vec![ArchId::MiniFrozen];
    assert!(run_sweep(&p, &pool, None, None).is_err());
}

#[test]
fn too_little_data_is_refused() {
    let mut p = tiny_preset();
    p.archs = vec![ArchId::SmallCnn];
    p.grid = GridSpec::List(vec![30]);
    let pool = LabeledImages::synthetic(DatasetKind::Uml, 40, 1, (32, 32)).unwrap();
    assert!(run_sweep(&p, &pool, None, None).is_err());
}
