use crate::error::{Error, Result};
use crate::kernels::gemm_into;
use crate::rng::{fill_uniform, Init, SeededRng};
use crate::tensor::{transpose_into, Scalar, Tensor};

use super::{missing_cache, Param};

/// Fully connected layer, `y = x·W + b` with `W` stored as `F×O`.
#[derive(Debug, Clone)]
pub struct Dense<T> {
    pub weight: Param<T>,
    pub bias: Param<T>,
    pub(crate) cache: Option<Tensor<T>>,
}

impl<T: Scalar> Dense<T> {
    pub fn new(inputs: usize, outputs: usize, rng: &mut SeededRng) -> Self {
        Self::with_init(inputs, outputs, Init::GlorotUniform, rng)
    }

    pub fn with_init(inputs: usize, outputs: usize, init: Init, rng: &mut SeededRng) -> Self {
        let mut w = Tensor::zeros(&[inputs, outputs]);
        fill_uniform(rng, w.data_mut(), init.limit(inputs, outputs));
        Self::from_params(w, Tensor::zeros(&[outputs]))
    }

    pub fn from_params(weight: Tensor<T>, bias: Tensor<T>) -> Self {
        Self {
            weight: Param::new("W", weight),
            bias: Param::new("b", bias),
            cache: None,
        }
    }

    pub fn inputs(&self) -> usize {
        self.weight.value.shape()[0]
    }

    pub fn outputs(&self) -> usize {
        self.weight.value.shape()[1]
    }

    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        if x.rank() != 2 || x.shape()[1] != self.inputs() {
            return Err(Error::shape(format!(
                "dense expects Nx{}, got {:?}",
                self.inputs(),
                x.shape()
            )));
        }
        let (n, f, o) = (x.batch(), self.inputs(), self.outputs());
        let mut y = Tensor::zeros(&[n, o]);
        gemm_into(n, o, f, x.data(), self.weight.value.data(), y.data_mut());
        let b = self.bias.value.data();
        for row in y.data_mut().chunks_exact_mut(o) {
            row.iter_mut().zip(b).for_each(|(v, &bb)| *v = *v + bb);
        }
        Ok(y)
    }

    pub fn forward_train(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let y = self.forward(x)?;
        self.cache = Some(x.clone());
        Ok(y)
    }

    pub fn backward(
        &mut self,
        dy: &Tensor<T>,
        param_grads: bool,
        need_dx: bool,
    ) -> Result<Option<Tensor<T>>> {
        let x = self.cache.as_ref().ok_or_else(|| missing_cache("dense"))?;
        let (n, f, o) = (x.batch(), self.inputs(), self.outputs());
        if dy.shape() != [n, o] {
            return Err(Error::shape(format!("dense dy {:?}, expected [{n}, {o}]", dy.shape())));
        }
        if param_grads {
            let mut x_t = vec![T::zero(); n * f];
            transpose_into(x.data(), n, f, &mut x_t);
            let mut dw = Tensor::zeros(&[f, o]);
            gemm_into(f, o, n, &x_t, dy.data(), dw.data_mut());
            let mut db = vec![T::zero(); o];
            for row in dy.data().chunks_exact(o) {
                db.iter_mut().zip(row).for_each(|(a, &g)| *a = *a + g);
            }
            self.weight.grad = Some(dw);
            self.bias.grad = Some(Tensor::from_vec(vec![o], db)?);
        }
        if !need_dx {
            return Ok(None);
        }
        let mut w_t = vec![T::zero(); f * o];
        transpose_into(self.weight.value.data(), f, o, &mut w_t);
        let mut dx = Tensor::zeros(&[n, f]);
        gemm_into(n, f, o, dy.data(), &w_t, dx.data_mut());
        Ok(Some(dx))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_weights() {
        let d = Dense::from_params(Tensor::<f32>::identity(4), Tensor::zeros(&[4]));
        let x = Tensor::<f32>::from_fn(&[3, 4], |i| i as f32 * 0.25 - 1.0);
        assert!(d.forward(&x).unwrap().bitwise_eq(&x));
    }

    #[test]
    fn parameter_count() {
        let d = Dense::<f32>::new(512, 1, &mut SeededRng::new(0));
        assert_eq!(d.weight.value.len() + d.bias.value.len(), 513);
    }

    #[test]
    fn glorot_bounds() {
        let d = Dense::<f64>::new(64, 1, &mut SeededRng::new(3));
        let lim = crate::rng::glorot_limit(64, 1);
        assert!(d.weight.value.data().iter().all(|v| v.abs() <= lim));
        assert!(d.bias.value.data().iter().all(|&v| v == 0.0));
    }
}
