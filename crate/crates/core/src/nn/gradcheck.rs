//! Central finite-difference verification of analytic gradients (double precision).

use crate::error::Result;
use crate::rng::{Distribution, SeededRng};
use crate::tensor::Tensor;

use super::loss::LossHead;
use super::{Layer, Param};

pub const EPSILON: f64 = 1e-5;

/// Anything with a train-mode forward pass and a matching backward pass.
pub trait Differentiable {
    fn forward_train(&mut self, x: &Tensor<f64>, rng: &mut SeededRng) -> Result<Tensor<f64>>;
    /// Propagate `dy`, writing parameter gradients; returns the input gradient.
    fn backward_input(&mut self, dy: &Tensor<f64>) -> Result<Tensor<f64>>;
    /// Every parameter with its qualified name and trainability.
    fn param_slots(&mut self) -> Vec<(String, bool, &mut Param<f64>)>;
}

impl Differentiable for Layer<f64> {
    fn forward_train(&mut self, x: &Tensor<f64>, rng: &mut SeededRng) -> Result<Tensor<f64>> {
        Layer::forward_train(self, x, rng)
    }

    fn backward_input(&mut self, dy: &Tensor<f64>) -> Result<Tensor<f64>> {
        Ok(self.backward(dy, true)?.expect("need_dx requested"))
    }

    fn param_slots(&mut self) -> Vec<(String, bool, &mut Param<f64>)> {
        let trainable = !self.frozen;
        let name = self.name.clone();
        self.params_mut()
            .into_iter()
            .map(|p| (format!("{name}.{}", p.name), trainable, p))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct GradCheckEntry {
    pub name: String,
    /// `None` when the tensor was skipped because its layer is frozen.
    pub rel_err: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    pub entries: Vec<GradCheckEntry>,
}

/// Norm-wise relative error `‖a − n‖ / max(‖a‖, ‖n‖)`, zero when both vanish.
pub fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let norm = |v: &mut dyn Iterator<Item = f64>| v.map(|x| x * x).sum::<f64>().sqrt();
    let diff = norm(&mut analytic.iter().zip(numeric).map(|(a, b)| a - b));
    let scale = norm(&mut analytic.iter().copied()).max(norm(&mut numeric.iter().copied()));
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

fn objective<N: Differentiable>(net: &mut N, x: &Tensor<f64>, proj: &Tensor<f64>, seed: u64) -> Result<f64> {
    let y = net.forward_train(x, &mut SeededRng::new(seed))?;
    Ok(y.data().iter().zip(proj.data()).map(|(a, b)| a * b).sum())
}

/// Compare `backward` against central differences of `Σ r ⊙ f(x)` for a
/// random projection `r`. Dropout masks are held fixed by reseeding.
pub fn grad_check<N: Differentiable>(net: &mut N, input: &Tensor<f64>, rng: &mut SeededRng) -> Result<GradCheckReport> {
    let seed = rng.next_u64();
    let y = net.forward_train(input, &mut SeededRng::new(seed))?;
    let proj: Tensor<f64> = rng.draw(Distribution::Gaussian, y.len()).reshape(y.shape())?;
    let dx = net.backward_input(&proj)?;

    let mut entries = Vec::new();
    let mut numeric = vec![0.0; input.len()];
    let mut probe = input.clone();
    for (i, slot) in numeric.iter_mut().enumerate() {
        let orig = probe.data()[i];
        probe.data_mut()[i] = orig + EPSILON;
        let plus = objective(net, &probe, &proj, seed)?;
        probe.data_mut()[i] = orig - EPSILON;
        let minus = objective(net, &probe, &proj, seed)?;
        probe.data_mut()[i] = orig;
        *slot = (plus - minus) / (2.0 * EPSILON);
    }
    entries.push(GradCheckEntry {
        name: "input".into(),
        rel_err: Some(relative_error(dx.data(), &numeric)),
    });

    let slot_count = net.param_slots().len();
    for s in 0..slot_count {
        let (name, trainable, analytic) = {
            let mut slots = net.param_slots();
            let (name, trainable, p) = &mut slots[s];
            (name.clone(), *trainable, p.grad.clone())
        };
        if !trainable {
            debug_assert!(analytic.is_none(), "frozen layer wrote a gradient");
            entries.push(GradCheckEntry { name, rel_err: None });
            continue;
        }
        let analytic = analytic.expect("trainable parameter has a gradient after backward");
        let mut numeric = vec![0.0; analytic.len()];
        for (i, slot) in numeric.iter_mut().enumerate() {
            let orig = net.param_slots()[s].2.value.data()[i];
            net.param_slots()[s].2.value.data_mut()[i] = orig + EPSILON;
            let plus = objective(net, input, &proj, seed)?;
            net.param_slots()[s].2.value.data_mut()[i] = orig - EPSILON;
            let minus = objective(net, input, &proj, seed)?;
            net.param_slots()[s].2.value.data_mut()[i] = orig;
            *slot = (plus - minus) / (2.0 * EPSILON);
        }
        entries.push(GradCheckEntry {
            name,
            rel_err: Some(relative_error(analytic.data(), &numeric)),
        });
    }
    let max_rel_err = entries.iter().filter_map(|e| e.rel_err).fold(0.0, f64::max);
    Ok(GradCheckReport { max_rel_err, entries })
}

/// Finite-difference check of a loss head's logit gradient.
pub fn grad_check_loss(head: LossHead, logits: &Tensor<f64>, labels: &[usize]) -> Result<f64> {
    let (_, analytic) = head.loss(logits, labels)?;
    let mut probe = logits.clone();
    let mut numeric = vec![0.0; logits.len()];
    for (i, slot) in numeric.iter_mut().enumerate() {
        let orig = probe.data()[i];
        probe.data_mut()[i] = orig + EPSILON;
        let (plus, _) = head.loss(&probe, labels)?;
        probe.data_mut()[i] = orig - EPSILON;
        let (minus, _) = head.loss(&probe, labels)?;
        probe.data_mut()[i] = orig;
        *slot = (plus - minus) / (2.0 * EPSILON);
    }
    Ok(relative_error(analytic.data(), &numeric))
}

fn randomize(layer: &mut Layer<f64>, rng: &mut SeededRng) {
    for p in layer.params_mut() {
        for v in p.value.data_mut() {
            *v = rng.uniform_range(-1.0, 1.0);
        }
    }
}

/// Distinct values with magnitude at least 0.05, so ReLU kinks and max-pool
/// ties sit far outside the finite-difference step.
fn separated_input(shape: &[usize], rng: &mut SeededRng) -> Tensor<f64> {
    let n: usize = shape.iter().product();
    let mut order: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut order);
    let data = order
        .into_iter()
        .map(|i| {
            let mag = 0.05 + i as f64 / n as f64;
            if rng.bernoulli(0.5) {
                mag
            } else {
                -mag
            }
        })
        .collect();
    Tensor::from_vec(shape.to_vec(), data).expect("shape matches")
}

/// Worst relative error per layer kind and per loss head for one seed, on
/// small random instances with randomized parameters.
pub fn layer_suite(seed: u64) -> Result<Vec<(&'static str, f64)>> {
    use super::{Conv2d, Dense, Dropout, GlobalAvgPool, MaxPool2x2, Op, Relu};
    let mut rng = SeededRng::new(seed);
    let cases: Vec<(&'static str, Op<f64>, Vec<usize>)> = vec![
        ("conv2d", Op::Conv2d(Conv2d::new(2, 3, 3, &mut rng)), vec![2, 2, 5, 5]),
        ("conv2d_1x1", Op::Conv2d(Conv2d::new(3, 2, 1, &mut rng)), vec![1, 3, 4, 4]),
        ("relu", Op::Relu(Relu::new()), vec![2, 3, 4, 4]),
        ("maxpool2x2", Op::MaxPool2x2(MaxPool2x2::new()), vec![2, 2, 6, 6]),
        ("dropout", Op::Dropout(Dropout::new(0.5)?), vec![3, 8]),
        ("global_avg_pool", Op::GlobalAvgPool(GlobalAvgPool::new()), vec![2, 3, 3, 4]),
        ("dense", Op::Dense(Dense::new(4, 3, &mut rng)), vec![5, 4]),
    ];
    let mut out = Vec::new();
    for (name, op, shape) in cases {
        let mut layer = Layer::new(name, op);
        randomize(&mut layer, &mut rng);
        let x = separated_input(&shape, &mut rng);
        out.push((name, grad_check(&mut layer, &x, &mut rng)?.max_rel_err));
    }
    let logits: Tensor<f64> = rng.draw(Distribution::Gaussian, 6).reshape(&[6, 1])?;
    let labels: Vec<usize> = (0..6).map(|_| rng.below(2)).collect();
    out.push(("sigmoid_bce", grad_check_loss(LossHead::SigmoidBce, &logits, &labels)?));
    let logits: Tensor<f64> = rng.draw(Distribution::Gaussian, 12).reshape(&[3, 4])?;
    let labels: Vec<usize> = (0..3).map(|_| rng.below(4)).collect();
    out.push(("softmax_ce", grad_check_loss(LossHead::SoftmaxCe, &logits, &labels)?));
    Ok(out)
}
