use translab::models::{ArchId, ArchSpec, Model, WidthMult};
use translab::nn::gradcheck::{grad_check, layer_suite};
use translab::{SeededRng, Tensor};

#[test]
fn every_layer_and_loss_over_twenty_seeds() {
    let mut worst = std::collections::BTreeMap::new();
    for seed in 0..20 {
        for (name, err) in layer_suite(seed).unwrap() {
            let w = worst.entry(name).or_insert(0.0f64);
            *w = w.max(err);
        }
    }
    assert_eq!(worst.len(), 9);
    for (name, err) in worst {
        assert!(err < 1e-6, "{name}: {err:e}");
    }
}

#[test]
fn whole_small_model() {
    let spec = ArchSpec::new(ArchId::SmallCnn, 3)
        .with_input([1, 16, 16])
        .with_width(WidthMult::new(1, 64).unwrap());
    let mut model = Model::<f64>::build(&spec, 5).unwrap();
    let mut rng = SeededRng::new(2);
    let x = Tensor::from_fn(&[2, 1, 16, 16], |_| rng.uniform_range(0.0, 1.0));
    let report = grad_check(&mut model, &x, &mut rng).unwrap();
    assert!(report.max_rel_err < 1e-5, "{report:?}");
}

#[test]
fn frozen_layers_are_skipped() {
    let spec = ArchSpec::new(ArchId::MiniFrozen, 1)
        .with_input([1, 16, 16])
        .with_width(WidthMult::new(1, 64).unwrap());
    let mut model = Model::<f64>::build(&spec, 5).unwrap();
    let mut rng = SeededRng::new(3);
    let x = Tensor::from_fn(&[1, 1, 16, 16], |_| rng.uniform_range(0.0, 1.0));
    let report = grad_check(&mut model, &x, &mut rng).unwrap();
    let checked: Vec<_> = report.entries.iter().filter(|e| e.rel_err.is_some()).map(|e| e.name.as_str()).collect();
    assert_eq!(checked, ["input", "logits.W", "logits.b"]);
    assert!(report.max_rel_err < 1e-6, "{report:?}");
}
