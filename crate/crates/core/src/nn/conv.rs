use crate::error::{Error, Result};
use crate::kernels::{col2im_add, gemm_into, im2col_into, ConvGeometry};
use crate::rng::{fill_uniform, Init, SeededRng};
use crate::tensor::{transpose_into, Scalar, Tensor};

use super::{missing_cache, Param};

/// Square-kernel, stride-1 "same" convolution computed as im2col + GEMM.
#[derive(Debug, Clone)]
pub struct Conv2d<T> {
    pub weight: Param<T>,
    pub bias: Param<T>,
    pub kernel: usize,
    pub(crate) cache: Option<Tensor<T>>,
}

impl<T: Scalar> Conv2d<T> {
    /// Glorot-uniform weights, zero bias.
    pub fn new(in_ch: usize, out_ch: usize, kernel: usize, rng: &mut SeededRng) -> Self {
        Self::with_init(in_ch, out_ch, kernel, Init::GlorotUniform, rng)
    }

    pub fn with_init(in_ch: usize, out_ch: usize, kernel: usize, init: Init, rng: &mut SeededRng) -> Self {
        assert!(kernel % 2 == 1, "same padding needs an odd kernel");
        let mut w = Tensor::zeros(&[out_ch, in_ch, kernel, kernel]);
        let area = kernel * kernel;
        fill_uniform(rng, w.data_mut(), init.limit(in_ch * area, out_ch * area));
        Self::from_params(w, Tensor::zeros(&[out_ch]))
    }

    pub fn from_params(weight: Tensor<T>, bias: Tensor<T>) -> Self {
        let kernel = weight.shape()[2];
        Self {
            weight: Param::new("W", weight),
            bias: Param::new("b", bias),
            kernel,
            cache: None,
        }
    }

    pub fn in_channels(&self) -> usize {
        self.weight.value.shape()[1]
    }

    pub fn out_channels(&self) -> usize {
        self.weight.value.shape()[0]
    }

    fn geometry(&self, x: &Tensor<T>) -> Result<ConvGeometry> {
        let (_, c, h, w) = x.dims4();
        if x.rank() != 4 || c != self.in_channels() {
            return Err(Error::shape(format!(
                "conv2d expects Nx{}xHxW, got {:?}",
                self.in_channels(),
                x.shape()
            )));
        }
        ConvGeometry::new(c, h, w, self.kernel, 1, self.kernel / 2)
    }

    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let g = self.geometry(x)?;
        let (n, co) = (x.batch(), self.out_channels());
        let hw = g.col_cols();
        let mut out = Tensor::zeros(&[n, co, g.out_h, g.out_w]);
        let mut cols = vec![T::zero(); g.col_rows() * hw];
        let bias = self.bias.value.data();
        for (i, y) in out.data_mut().chunks_exact_mut(co * hw).enumerate() {
            im2col_into(x.sample(i), &g, &mut cols);
            gemm_into(co, hw, g.col_rows(), self.weight.value.data(), &cols, y);
            for (plane, &b) in y.chunks_exact_mut(hw).zip(bias) {
                plane.iter_mut().for_each(|v| *v = *v + b);
            }
        }
        Ok(out)
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
        let x = self.cache.as_ref().ok_or_else(|| missing_cache("conv2d"))?;
        let g = self.geometry(x)?;
        let (n, co) = (x.batch(), self.out_channels());
        let (hw, ckk) = (g.col_cols(), g.col_rows());
        if dy.shape() != [n, co, g.out_h, g.out_w] {
            return Err(Error::shape(format!("conv2d dy {:?}", dy.shape())));
        }
        let mut cols = vec![T::zero(); ckk * hw];
        let mut cols_t = vec![T::zero(); ckk * hw];
        let mut dw = vec![T::zero(); co * ckk];
        let mut dw_i = vec![T::zero(); co * ckk];
        let mut db = vec![T::zero(); co];
        let mut dx = need_dx.then(|| Tensor::zeros(x.shape()));
        let mut w_t = Vec::new();
        let mut dcols = Vec::new();
        if need_dx {
            w_t = vec![T::zero(); co * ckk];
            transpose_into(self.weight.value.data(), co, ckk, &mut w_t);
            dcols = vec![T::zero(); ckk * hw];
        }
        for i in 0..n {
            let dy_i = dy.sample(i);
            if param_grads {
                im2col_into(x.sample(i), &g, &mut cols);
                transpose_into(&cols, ckk, hw, &mut cols_t);
                gemm_into(co, ckk, hw, dy_i, &cols_t, &mut dw_i);
                dw.iter_mut().zip(&dw_i).for_each(|(a, &b)| *a = *a + b);
                for (d, plane) in db.iter_mut().zip(dy_i.chunks_exact(hw)) {
                    *d = *d + plane.iter().copied().sum();
                }
            }
            if let Some(dx) = dx.as_mut() {
                gemm_into(ckk, hw, co, &w_t, dy_i, &mut dcols);
                let per = dx.sample_len();
                col2im_add(&dcols, &g, &mut dx.data_mut()[i * per..(i + 1) * per]);
            }
        }
        if param_grads {
            self.weight.grad = Some(Tensor::from_vec(self.weight.value.shape().to_vec(), dw)?);
            self.bias.grad = Some(Tensor::from_vec(vec![co], db)?);
        }
        Ok(dx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Distribution;

    fn naive_conv(x: &Tensor<f64>, w: &Tensor<f64>, b: &Tensor<f64>) -> Tensor<f64> {
        let (n, ci, h, wd) = x.dims4();
        let (co, _, k, _) = w.dims4();
        let p = (k / 2) as isize;
        let mut y = Tensor::zeros(&[n, co, h, wd]);
        for s in 0..n {
            for o in 0..co {
                for r in 0..h {
                    for c in 0..wd {
                        let mut acc = b.data()[o];
                        for i in 0..ci {
                            for ky in 0..k {
                                for kx in 0..k {
                                    let (yy, xx) = (r as isize + ky as isize - p, c as isize + kx as isize - p);
                                    if yy < 0 || xx < 0 || yy >= h as isize || xx >= wd as isize {
                                        continue;
                                    }
                                    acc += w.data()[((o * ci + i) * k + ky) * k + kx]
                                        * x.data()[((s * ci + i) * h + yy as usize) * wd + xx as usize];
                                }
                            }
                        }
                        y.data_mut()[((s * co + o) * h + r) * wd + c] = acc;
                    }
                }
            }
        }
        y
    }

    #[test]
    fn identity_kernel() {
        let mut w = Tensor::<f32>::zeros(&[1, 1, 3, 3]);
        w.data_mut()[4] = 1.0;
        let conv = Conv2d::from_params(w, Tensor::zeros(&[1]));
        let x = Tensor::<f32>::from_fn(&[2, 1, 5, 4], |i| i as f32 - 7.0);
        assert!(conv.forward(&x).unwrap().bitwise_eq(&x));
    }

    #[test]
    fn zero_weights_and_window_sum_gradient() {
        let mut conv = Conv2d::from_params(Tensor::<f64>::zeros(&[1, 1, 3, 3]), Tensor::zeros(&[1]));
        let x = Tensor::<f64>::from_fn(&[1, 1, 4, 4], |i| (i + 1) as f64);
        let y = conv.forward_train(&x).unwrap();
        assert!(y.data().iter().all(|&v| v == 0.0));
        conv.backward(&Tensor::full(&[1, 1, 4, 4], 1.0), true, false).unwrap();
        let dw = conv.weight.grad.as_ref().unwrap();
        // dW[ky][kx] = sum of x over every output's (ky, kx) tap, borders zero-padded.
        for ky in 0..3 {
            for kx in 0..3 {
                let mut s = 0.0;
                for r in 0..4i32 {
                    for c in 0..4i32 {
                        let (yy, xx) = (r + ky as i32 - 1, c + kx as i32 - 1);
                        if (0..4).contains(&yy) && (0..4).contains(&xx) {
                            s += x.data()[(yy * 4 + xx) as usize];
                        }
                    }
                }
                assert_eq!(dw.data()[ky * 3 + kx], s);
            }
        }
        assert_eq!(conv.bias.grad.as_ref().unwrap().data(), &[16.0]);
    }

    #[test]
    fn matches_direct_convolution() {
        let mut rng = SeededRng::new(17);
        for &(n, ci, co, h, w, k) in &[(2, 3, 4, 6, 5, 3), (1, 1, 2, 3, 3, 3), (1, 2, 3, 7, 7, 5), (3, 2, 2, 4, 4, 1)] {
            let conv = Conv2d::<f64>::new(ci, co, k, &mut rng);
            let mut conv = conv;
            conv.bias.value = rng.draw(Distribution::Gaussian, co);
            let x: Tensor<f64> = rng.draw(Distribution::Gaussian, n * ci * h * w);
            let x = x.reshape(&[n, ci, h, w]).unwrap();
            let fast = conv.forward(&x).unwrap();
            let slow = naive_conv(&x, &conv.weight.value, &conv.bias.value);
            let scale = slow.data().iter().fold(1.0f64, |m, v| m.max(v.abs()));
            assert!(fast.max_abs_diff(&slow) <= 1e-12 * scale);
        }
    }
}
