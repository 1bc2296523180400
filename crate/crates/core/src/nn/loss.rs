use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tensor};

/// Classification loss attached to a model's logits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossHead {
    /// One logit per sample, labels in {0, 1}.
    SigmoidBce,
    /// K logits per sample, labels in 0..K.
    SoftmaxCe,
}

impl LossHead {
    pub fn for_outputs(outputs: usize) -> Self {
        if outputs == 1 {
            LossHead::SigmoidBce
        } else {
            LossHead::SoftmaxCe
        }
    }

    pub fn loss<T: Scalar>(self, logits: &Tensor<T>, labels: &[usize]) -> Result<(T, Tensor<T>)> {
        match self {
            LossHead::SigmoidBce => sigmoid_bce(logits, labels),
            LossHead::SoftmaxCe => softmax_ce(logits, labels),
        }
    }

    /// Predicted class per row: σ(z) >= 0.5 counts as class 1; argmax takes the first maximum.
    pub fn predict<T: Scalar>(self, logits: &Tensor<T>) -> Vec<usize> {
        match self {
            LossHead::SigmoidBce => logits.data().iter().map(|&z| usize::from(z >= T::zero())).collect(),
            LossHead::SoftmaxCe => {
                let k = logits.shape()[1];
                logits
                    .data()
                    .chunks_exact(k)
                    .map(|row| {
                        let mut best = 0;
                        for (i, &v) in row.iter().enumerate() {
                            if v > row[best] {
                                best = i;
                            }
                        }
                        best
                    })
                    .collect()
            }
        }
    }
}

pub fn sigmoid<T: Scalar>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

fn check_rows<T: Scalar>(logits: &Tensor<T>, labels: &[usize], k: usize) -> Result<usize> {
    if logits.rank() != 2 || (k == 1 && logits.shape()[1] != 1) {
        return Err(Error::shape(format!("logits {:?}", logits.shape())));
    }
    let n = logits.batch();
    if labels.len() != n {
        return Err(Error::shape(format!("{} labels for {n} rows", labels.len())));
    }
    let classes = if k == 1 { 2 } else { logits.shape()[1] };
    if let Some(bad) = labels.iter().find(|&&y| y >= classes) {
        return Err(Error::invalid(format!("label {bad} out of range for {classes} classes")));
    }
    Ok(n)
}

/// Mean binary cross-entropy on logits, in the overflow-free form
/// `max(z,0) - z·y + ln(1 + e^-|z|)`. Gradient is `(σ(z) - y)/N`.
pub fn sigmoid_bce<T: Scalar>(logits: &Tensor<T>, labels: &[usize]) -> Result<(T, Tensor<T>)> {
    let n = check_rows(logits, labels, 1)?;
    let inv_n = T::of(1.0 / n as f64);
    let mut total = T::zero();
    let mut grad = Tensor::zeros(&[n, 1]);
    for ((&z, &y), g) in logits.data().iter().zip(labels).zip(grad.data_mut()) {
        let y = T::of(y as f64);
        total = total + z.max(T::zero()) - z * y + (-z.abs()).exp().ln_1p();
        *g = (sigmoid(z) - y) * inv_n;
    }
    Ok((total * inv_n, grad))
}

/// Mean softmax cross-entropy via log-sum-exp. Gradient is `(softmax - onehot)/N`.
pub fn softmax_ce<T: Scalar>(logits: &Tensor<T>, labels: &[usize]) -> Result<(T, Tensor<T>)> {
    let n = check_rows(logits, labels, 0)?;
    let k = logits.shape()[1];
    let inv_n = T::of(1.0 / n as f64);
    let mut total = T::zero();
    let mut grad = Tensor::zeros(&[n, k]);
    for ((row, &y), g) in logits
        .data()
        .chunks_exact(k)
        .zip(labels)
        .zip(grad.data_mut().chunks_exact_mut(k))
    {
        let m = row.iter().copied().fold(T::neg_infinity(), T::max);
        let sum: T = row.iter().map(|&v| (v - m).exp()).sum();
        let lse = m + sum.ln();
        total = total + lse - row[y];
        for (i, (gi, &v)) in g.iter_mut().zip(row).enumerate() {
            let p = (v - lse).exp();
            let onehot = if i == y { T::one() } else { T::zero() };
            *gi = (p - onehot) * inv_n;
        }
    }
    Ok((total * inv_n, grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(rows: usize, k: usize, v: Vec<f64>) -> Tensor<f64> {
        Tensor::from_vec(vec![rows, k], v).unwrap()
    }

    #[test]
    fn bce_at_zero_is_ln2() {
        for y in [0, 1] {
            let (l, g) = sigmoid_bce(&t(1, 1, vec![0.0]), &[y]).unwrap();
            assert!((l - std::f64::consts::LN_2).abs() < 1e-15);
            assert_eq!(g.data()[0], 0.5 - y as f64);
        }
    }

    #[test]
    fn bce_limits_and_stability() {
        let (l, _) = sigmoid_bce(&t(1, 1, vec![60.0]), &[1]).unwrap();
        assert!(l < 1e-25);
        // Exact values: ln(1+e^-50) and 50 + ln(1+e^-50).
        let tail = (-50f64).exp().ln_1p();
        let (l, _) = sigmoid_bce(&t(1, 1, vec![50.0]), &[0]).unwrap();
        assert!((l - (50.0 + tail)).abs() < 1e-12);
        let (l, _) = sigmoid_bce(&t(1, 1, vec![-50.0]), &[0]).unwrap();
        assert!((l - tail).abs() < 1e-30);
        let (l32, g32) = sigmoid_bce(&Tensor::<f32>::from_vec(vec![2, 1], vec![50.0, -50.0]).unwrap(), &[0, 1]).unwrap();
        assert!(l32.is_finite() && (l32 - 50.0).abs() < 1e-4);
        assert!(g32.is_finite());
    }

    #[test]
    fn softmax_uniform_is_ln_k() {
        let (l, _) = softmax_ce(&t(2, 4, vec![0.3; 8]), &[0, 3]).unwrap();
        assert!((l - 4f64.ln()).abs() < 1e-15);
        let (l, _) = softmax_ce(&t(1, 3, vec![0.0, 200.0, 0.0]), &[1]).unwrap();
        assert!(l < 1e-80);
    }

    #[test]
    fn bce_matches_two_way_softmax() {
        for &z in &[-7.5, -0.3, 0.0, 1.0, 12.0] {
            for y in [0usize, 1] {
                let (a, _) = sigmoid_bce(&t(1, 1, vec![z]), &[y]).unwrap();
                // P(class 1) = e^z / (e^0 + e^z) = σ(z)
                let (b, _) = softmax_ce(&t(1, 2, vec![0.0, z]), &[y]).unwrap();
                assert!((a - b).abs() < 1e-10, "z={z} y={y}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn label_errors() {
        assert!(sigmoid_bce(&t(1, 1, vec![0.0]), &[2]).is_err());
        assert!(softmax_ce(&t(1, 3, vec![0.0; 3]), &[3]).is_err());
        assert!(sigmoid_bce(&t(2, 1, vec![0.0; 2]), &[1]).is_err());
    }

    #[test]
    fn predictions_and_tie_rule() {
        let p = LossHead::SigmoidBce.predict(&t(3, 1, vec![0.0, -1e-9, 2.0]));
        assert_eq!(p, vec![1, 0, 1]);
        let p = LossHead::SoftmaxCe.predict(&t(2, 3, vec![1.0, 1.0, 0.0, 0.0, 0.5, 0.5]));
        assert_eq!(p, vec![0, 1]);
    }
}
