use std::marker::PhantomData;

use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::tensor::{Scalar, Tensor};

use super::missing_cache;

pub(crate) fn relu<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    x.map(|v| if v > T::zero() { v } else { T::zero() })
}

#[derive(Debug, Clone, Default)]
pub struct Relu<T> {
    pub(crate) mask: Option<Vec<bool>>,
    _t: PhantomData<T>,
}

impl<T: Scalar> Relu<T> {
    pub fn new() -> Self {
        Self {
            mask: None,
            _t: PhantomData,
        }
    }

    pub(crate) fn forward_train(&mut self, x: &Tensor<T>) -> Tensor<T> {
        self.mask = Some(x.data().iter().map(|&v| v > T::zero()).collect());
        relu(x)
    }

    pub(crate) fn backward(&mut self, dy: &Tensor<T>) -> Result<Tensor<T>> {
        let mask = self.mask.as_ref().ok_or_else(|| missing_cache("relu"))?;
        if mask.len() != dy.len() {
            return Err(Error::shape("relu dy does not match cached input"));
        }
        let mut dx = dy.clone();
        for (d, &keep) in dx.data_mut().iter_mut().zip(mask) {
            if !keep {
                *d = T::zero();
            }
        }
        Ok(dx)
    }
}

/// Marks a padded window slot in the argmax cache.
const PAD: u32 = u32::MAX;

/// 2x2 max pooling, stride 2. Odd extents are zero-padded by one row/column
/// at the bottom/right; ties go to the first window element in row-major order.
pub(crate) fn maxpool<T: Scalar>(x: &Tensor<T>) -> Result<(Tensor<T>, Vec<u32>)> {
    if x.rank() != 4 {
        return Err(Error::shape(format!("maxpool expects NCHW, got {:?}", x.shape())));
    }
    let (n, c, h, w) = x.dims4();
    let (ho, wo) = (h.div_ceil(2), w.div_ceil(2));
    let mut out = Tensor::zeros(&[n, c, ho, wo]);
    let mut arg = vec![PAD; n * c * ho * wo];
    let src = x.data();
    for plane in 0..n * c {
        let base = plane * h * w;
        for oy in 0..ho {
            for ox in 0..wo {
                let mut best = T::neg_infinity();
                let mut best_at = PAD;
                for (dy, dx) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                    let (yy, xx) = (2 * oy + dy, 2 * ox + dx);
                    let (v, at) = if yy < h && xx < w {
                        (src[base + yy * w + xx], (yy * w + xx) as u32)
                    } else {
                        (T::zero(), PAD)
                    };
                    if v > best {
                        best = v;
                        best_at = at;
                    }
                }
                let o = (plane * ho + oy) * wo + ox;
                out.data_mut()[o] = best;
                arg[o] = best_at;
            }
        }
    }
    Ok((out, arg))
}

#[derive(Debug, Clone, Default)]
pub struct MaxPool2x2 {
    pub(crate) cache: Option<(Vec<usize>, Vec<u32>)>,
}

impl MaxPool2x2 {
    pub fn new() -> Self {
        Self::default()
    }

    pub(crate) fn forward_train<T: Scalar>(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let (y, arg) = maxpool(x)?;
        self.cache = Some((x.shape().to_vec(), arg));
        Ok(y)
    }

    pub(crate) fn backward<T: Scalar>(&mut self, dy: &Tensor<T>) -> Result<Tensor<T>> {
        let (shape, arg) = self.cache.as_ref().ok_or_else(|| missing_cache("maxpool2x2"))?;
        if arg.len() != dy.len() {
            return Err(Error::shape("maxpool dy does not match cached output"));
        }
        let (h, w) = (shape[2], shape[3]);
        let out_plane = dy.len() / (shape[0] * shape[1]);
        let mut dx = Tensor::zeros(shape);
        let dxd = dx.data_mut();
        for (o, (&a, &g)) in arg.iter().zip(dy.data()).enumerate() {
            if a != PAD {
                let idx = (o / out_plane) * h * w + a as usize;
                dxd[idx] = dxd[idx] + g;
            }
        }
        Ok(dx)
    }
}

/// Inverted dropout: survivors are scaled by `1/(1-rate)` at train time.
#[derive(Debug, Clone)]
pub struct Dropout<T> {
    pub rate: f64,
    pub(crate) mask: Option<Vec<T>>,
}

impl<T: Scalar> Dropout<T> {
    pub fn new(rate: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::invalid(format!("dropout rate {rate} outside [0, 1)")));
        }
        Ok(Self { rate, mask: None })
    }

    pub(crate) fn forward_train(&mut self, x: &Tensor<T>, rng: &mut SeededRng) -> Tensor<T> {
        if self.rate == 0.0 {
            self.mask = Some(vec![T::one(); x.len()]);
            return x.clone();
        }
        let scale = T::of(1.0 / (1.0 - self.rate));
        let mask: Vec<T> = (0..x.len())
            .map(|_| if rng.uniform() < self.rate { T::zero() } else { scale })
            .collect();
        let mut y = x.clone();
        y.data_mut().iter_mut().zip(&mask).for_each(|(v, &m)| *v = *v * m);
        self.mask = Some(mask);
        y
    }

    pub(crate) fn backward(&mut self, dy: &Tensor<T>) -> Result<Tensor<T>> {
        let mask = self.mask.as_ref().ok_or_else(|| missing_cache("dropout"))?;
        if mask.len() != dy.len() {
            return Err(Error::shape("dropout dy does not match cached mask"));
        }
        let mut dx = dy.clone();
        dx.data_mut().iter_mut().zip(mask).for_each(|(v, &m)| *v = *v * m);
        Ok(dx)
    }
}

pub(crate) fn global_avg_pool<T: Scalar>(x: &Tensor<T>) -> Result<Tensor<T>> {
    if x.rank() != 4 {
        return Err(Error::shape(format!("global_avg_pool expects NCHW, got {:?}", x.shape())));
    }
    let (n, c, h, w) = x.dims4();
    let area = T::of((h * w) as f64);
    let data = x
        .data()
        .chunks_exact(h * w)
        .map(|plane| plane.iter().copied().sum::<T>() / area)
        .collect();
    Tensor::from_vec(vec![n, c], data)
}

#[derive(Debug, Clone, Default)]
pub struct GlobalAvgPool {
    pub(crate) cache: Option<Vec<usize>>,
}

impl GlobalAvgPool {
    pub fn new() -> Self {
        Self::default()
    }

    pub(crate) fn forward_train<T: Scalar>(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let y = global_avg_pool(x)?;
        self.cache = Some(x.shape().to_vec());
        Ok(y)
    }

    pub(crate) fn backward<T: Scalar>(&mut self, dy: &Tensor<T>) -> Result<Tensor<T>> {
        let shape = self.cache.as_ref().ok_or_else(|| missing_cache("global_avg_pool"))?;
        let area = shape[2] * shape[3];
        if dy.len() * area != shape.iter().product::<usize>() {
            return Err(Error::shape("global_avg_pool dy does not match cached input"));
        }
        let inv = T::of(1.0 / area as f64);
        let mut dx = Tensor::zeros(shape);
        for (plane, &g) in dx.data_mut().chunks_exact_mut(area).zip(dy.data()) {
            plane.fill(g * inv);
        }
        Ok(dx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relu_identity_and_zero() {
        let x = Tensor::<f32>::from_vec(vec![4], vec![0.0, 1.5, 3.0, 7.0]).unwrap();
        assert!(relu(&x).bitwise_eq(&x));
        let neg = x.map(|v| -v);
        assert!(relu(&neg).data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn maxpool_window_and_gradient() {
        let x = Tensor::<f32>::from_vec(vec![1, 1, 2, 2], vec![1., 2., 3., 4.]).unwrap();
        let mut pool = MaxPool2x2::new();
        assert_eq!(pool.forward_train(&x).unwrap().data(), &[4.0]);
        let dx = pool.backward(&Tensor::full(&[1, 1, 1, 1], 2.5)).unwrap();
        assert_eq!(dx.data(), &[0., 0., 0., 2.5]);
    }

    #[test]
    fn maxpool_ties_go_to_first() {
        let x = Tensor::<f32>::full(&[1, 1, 4, 4], 3.0);
        let mut pool = MaxPool2x2::new();
        let y = pool.forward_train(&x).unwrap();
        assert!(y.data().iter().all(|&v| v == 3.0));
        let dx = pool.backward(&Tensor::full(&[1, 1, 2, 2], 1.0)).unwrap();
        let hot: Vec<usize> = (0..16).filter(|&i| dx.data()[i] != 0.0).collect();
        assert_eq!(hot, vec![0, 2, 8, 10]);
    }

    #[test]
    fn maxpool_pads_odd_extents() {
        let x = Tensor::<f32>::from_fn(&[1, 1, 5, 3], |i| i as f32 + 1.0);
        let (y, _) = maxpool(&x).unwrap();
        assert_eq!(y.shape(), &[1, 1, 3, 2]);
        assert_eq!(y.data(), &[5., 6., 11., 12., 14., 15.]);
        // 250 -> 125 -> 63 -> 32 -> 16 is total
        let mut e: usize = 250;
        for _ in 0..4 {
            e = e.div_ceil(2);
        }
        assert_eq!(e, 16);
        // all-negative window on the padded edge is won by the zero pad
        let neg = Tensor::<f32>::full(&[1, 1, 1, 1], -1.0);
        let mut pool = MaxPool2x2::new();
        assert_eq!(pool.forward_train(&neg).unwrap().data(), &[0.0]);
        let dx = pool.backward(&Tensor::full(&[1, 1, 1, 1], 1.0)).unwrap();
        assert_eq!(dx.data(), &[0.0]);
    }

    #[test]
    fn dropout_modes() {
        let x = Tensor::<f64>::from_fn(&[10, 10], |i| i as f64);
        let mut rng = SeededRng::new(1);
        let mut d0 = Dropout::new(0.0).unwrap();
        assert!(d0.forward_train(&x, &mut rng).bitwise_eq(&x));
        assert!(Dropout::<f64>::new(1.0).is_err());
        assert!(Dropout::<f64>::new(-0.1).is_err());
    }

    #[test]
    fn dropout_rate_is_respected() {
        let x = Tensor::<f32>::full(&[100_000], 1.0);
        let mut d = Dropout::new(0.5).unwrap();
        let y = d.forward_train(&x, &mut SeededRng::new(99));
        let zeroed = y.data().iter().filter(|&&v| v == 0.0).count() as f64 / 1e5;
        assert!((zeroed - 0.5).abs() < 0.01, "{zeroed}");
        assert!(y.data().iter().all(|&v| v == 0.0 || v == 2.0));
    }

    #[test]
    fn gap_constant_and_single_pixel() {
        let x = Tensor::<f32>::full(&[2, 3, 4, 5], 1.25);
        assert!(global_avg_pool(&x).unwrap().data().iter().all(|&v| v == 1.25));
        let x = Tensor::<f32>::from_fn(&[2, 3, 1, 1], |i| i as f32);
        assert_eq!(global_avg_pool(&x).unwrap().data(), x.data());
    }
}
