//! GEMM and im2col, the two kernels every convolution and dense layer uses.
//!
//! Each output element of the GEMM is accumulated from zero in ascending `k`
//! order, whatever the matrix sizes or the tile it lands in. A row of the
//! result therefore depends only on the matching row of `a` and on `b`, so
//! batching never changes a sample's bits.

use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tensor};

const MR: usize = 4;
const NR: usize = 32;

/// `c = a · b` for row-major `a[m×k]`, `b[k×n]`, `c[m×n]`.
pub fn gemm_into<T: Scalar>(m: usize, n: usize, k: usize, a: &[T], b: &[T], c: &mut [T]) {
    assert_eq!(a.len(), m * k);
    assert_eq!(b.len(), k * n);
    assert_eq!(c.len(), m * n);
    for i0 in (0..m).step_by(MR) {
        let mr = MR.min(m - i0);
        for j0 in (0..n).step_by(NR) {
            let nr = NR.min(n - j0);
            if mr == MR && nr == NR {
                tile_full(n, k, a, b, c, i0, j0);
            } else {
                tile_edge(n, k, a, b, c, i0, j0, mr, nr);
            }
        }
    }
}

#[inline(always)]
fn tile_full<T: Scalar>(n: usize, k: usize, a: &[T], b: &[T], c: &mut [T], i0: usize, j0: usize) {
    let mut acc = [[T::zero(); NR]; MR];
    for kk in 0..k {
        let brow: &[T; NR] = b[kk * n + j0..kk * n + j0 + NR].try_into().unwrap();
        for (r, row) in acc.iter_mut().enumerate() {
            let av = a[(i0 + r) * k + kk];
            for (x, &bv) in row.iter_mut().zip(brow.iter()) {
                *x = *x + av * bv;
            }
        }
    }
    for (r, row) in acc.iter().enumerate() {
        c[(i0 + r) * n + j0..(i0 + r) * n + j0 + NR].copy_from_slice(row);
    }
}

#[allow(clippy::too_many_arguments)]
fn tile_edge<T: Scalar>(
    n: usize,
    k: usize,
    a: &[T],
    b: &[T],
    c: &mut [T],
    i0: usize,
    j0: usize,
    mr: usize,
    nr: usize,
) {
    let mut acc = [[T::zero(); NR]; MR];
    for kk in 0..k {
        let brow = &b[kk * n + j0..kk * n + j0 + nr];
        for (r, row) in acc.iter_mut().take(mr).enumerate() {
            let av = a[(i0 + r) * k + kk];
            for (x, &bv) in row.iter_mut().zip(brow.iter()) {
                *x = *x + av * bv;
            }
        }
    }
    for (r, row) in acc.iter().take(mr).enumerate() {
        c[(i0 + r) * n + j0..(i0 + r) * n + j0 + nr].copy_from_slice(&row[..nr]);
    }
}

/// Matrix product of two rank-2 tensors.
pub fn gemm<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    if a.rank() != 2 || b.rank() != 2 || a.shape()[1] != b.shape()[0] {
        return Err(Error::shape(format!(
            "gemm {:?} x {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let (m, k, n) = (a.shape()[0], a.shape()[1], b.shape()[1]);
    let mut c = Tensor::zeros(&[m, n]);
    gemm_into(m, n, k, a.data(), b.data(), c.data_mut());
    Ok(c)
}

/// Geometry of a 2-D convolution window sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvGeometry {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub kernel: usize,
    pub stride: usize,
    pub pad: usize,
    pub out_h: usize,
    pub out_w: usize,
}

impl ConvGeometry {
    pub fn new(
        channels: usize,
        height: usize,
        width: usize,
        kernel: usize,
        stride: usize,
        pad: usize,
    ) -> Result<Self> {
        if kernel == 0 || stride == 0 {
            return Err(Error::invalid("kernel and stride must be positive"));
        }
        let extent = |size: usize| -> Result<usize> {
            let span = size + 2 * pad;
            if span < kernel || (span - kernel) % stride != 0 {
                return Err(Error::shape(format!(
                    "output extent ({size}+2*{pad}-{kernel})/{stride}+1 is not integral"
                )));
            }
            Ok((span - kernel) / stride + 1)
        };
        Ok(Self {
            channels,
            height,
            width,
            kernel,
            stride,
            pad,
            out_h: extent(height)?,
            out_w: extent(width)?,
        })
    }

    pub fn col_rows(&self) -> usize {
        self.channels * self.kernel * self.kernel
    }

    pub fn col_cols(&self) -> usize {
        self.out_h * self.out_w
    }

    /// Input coordinate for output row/col `o` and kernel offset `q`, or None in the padding.
    #[inline]
    fn source(&self, o: usize, q: usize, size: usize) -> Option<usize> {
        let pos = (o * self.stride + q) as isize - self.pad as isize;
        (pos >= 0 && (pos as usize) < size).then_some(pos as usize)
    }
}

/// Unfold one `C×H×W` image into a `(C·k·k) × (Ho·Wo)` matrix.
pub fn im2col_into<T: Scalar>(x: &[T], g: &ConvGeometry, cols: &mut [T]) {
    let (hw_out, k) = (g.col_cols(), g.kernel);
    debug_assert_eq!(cols.len(), g.col_rows() * hw_out);
    for c in 0..g.channels {
        let plane = &x[c * g.height * g.width..(c + 1) * g.height * g.width];
        for ky in 0..k {
            for kx in 0..k {
                let row = (c * k + ky) * k + kx;
                let dst = &mut cols[row * hw_out..(row + 1) * hw_out];
                for oy in 0..g.out_h {
                    let drow = &mut dst[oy * g.out_w..(oy + 1) * g.out_w];
                    match g.source(oy, ky, g.height) {
                        None => drow.fill(T::zero()),
                        Some(iy) => {
                            let src = &plane[iy * g.width..(iy + 1) * g.width];
                            if g.stride == 1 {
                                // Contiguous run with zero borders.
                                let shift = kx as isize - g.pad as isize;
                                for (ox, d) in drow.iter_mut().enumerate() {
                                    let ix = ox as isize + shift;
                                    *d = if ix >= 0 && (ix as usize) < g.width {
                                        src[ix as usize]
                                    } else {
                                        T::zero()
                                    };
                                }
                            } else {
                                for (ox, d) in drow.iter_mut().enumerate() {
                                    *d = g.source(ox, kx, g.width).map_or(T::zero(), |ix| src[ix]);
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Inverse scatter of [`im2col_into`]: accumulate columns back into a `C×H×W` image.
pub fn col2im_add<T: Scalar>(cols: &[T], g: &ConvGeometry, x: &mut [T]) {
    let (hw_out, k) = (g.col_cols(), g.kernel);
    for c in 0..g.channels {
        let plane = &mut x[c * g.height * g.width..(c + 1) * g.height * g.width];
        for ky in 0..k {
            for kx in 0..k {
                let row = (c * k + ky) * k + kx;
                let src = &cols[row * hw_out..(row + 1) * hw_out];
                for oy in 0..g.out_h {
                    let Some(iy) = g.source(oy, ky, g.height) else {
                        continue;
                    };
                    for ox in 0..g.out_w {
                        if let Some(ix) = g.source(ox, kx, g.width) {
                            plane[iy * g.width + ix] = plane[iy * g.width + ix] + src[oy * g.out_w + ox];
                        }
                    }
                }
            }
        }
    }
}

/// Tensor-level im2col for a single image `1×C×H×W`.
pub fn im2col<T: Scalar>(x: &Tensor<T>, kernel: usize, stride: usize, pad: usize) -> Result<Tensor<T>> {
    if x.rank() != 4 || x.shape()[0] != 1 {
        return Err(Error::shape(format!("im2col expects 1xCxHxW, got {:?}", x.shape())));
    }
    let (_, c, h, w) = x.dims4();
    let g = ConvGeometry::new(c, h, w, kernel, stride, pad)?;
    let mut cols = Tensor::zeros(&[g.col_rows(), g.col_cols()]);
    im2col_into(x.data(), &g, cols.data_mut());
    Ok(cols)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{Distribution, SeededRng};

    fn naive_gemm(m: usize, n: usize, k: usize, a: &[f64], b: &[f64]) -> Vec<f64> {
        let mut c = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                for p in 0..k {
                    c[i * n + j] += a[i * k + p] * b[p * n + j];
                }
            }
        }
        c
    }

    #[test]
    fn gemm_hand_example() {
        let a = Tensor::<f32>::from_vec(vec![2, 2], vec![1., 2., 3., 4.]).unwrap();
        let b = Tensor::<f32>::from_vec(vec![2, 2], vec![5., 6., 7., 8.]).unwrap();
        assert_eq!(gemm(&a, &b).unwrap().data(), &[19., 22., 43., 50.]);
    }

    #[test]
    fn gemm_identity_and_zero() {
        let a: Tensor<f32> = SeededRng::new(1).draw(Distribution::Gaussian, 35);
        let a = a.reshape(&[5, 7]).unwrap();
        assert!(gemm(&a, &Tensor::identity(7)).unwrap().bitwise_eq(&a));
        let z = gemm(&Tensor::zeros(&[3, 5]), &a).unwrap();
        assert!(z.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gemm_shape_mismatch() {
        assert!(gemm(&Tensor::<f32>::zeros(&[2, 3]), &Tensor::zeros(&[2, 3])).is_err());
    }

    #[test]
    fn gemm_matches_naive_on_odd_sizes() {
        let mut rng = SeededRng::new(11);
        for &(m, n, k) in &[(16, 16, 16), (1, 1, 1), (5, 67, 9), (9, 33, 70), (4, 32, 3)] {
            let a: Tensor<f32> = rng.draw(Distribution::Gaussian, m * k);
            let b: Tensor<f32> = rng.draw(Distribution::Gaussian, k * n);
            let mut c = vec![0f32; m * n];
            gemm_into(m, n, k, a.data(), b.data(), &mut c);
            let a64: Vec<f64> = a.data().iter().map(|&v| v as f64).collect();
            let b64: Vec<f64> = b.data().iter().map(|&v| v as f64).collect();
            let oracle = naive_gemm(m, n, k, &a64, &b64);
            for (x, y) in c.iter().zip(&oracle) {
                assert!((*x as f64 - y).abs() <= 1e-5 * y.abs().max(1.0), "{x} vs {y}");
            }
        }
    }

    #[test]
    fn gemm_rows_independent_of_batch() {
        let mut rng = SeededRng::new(2);
        let (k, n) = (40, 45);
        let a: Tensor<f32> = rng.draw(Distribution::Gaussian, 9 * k);
        let b: Tensor<f32> = rng.draw(Distribution::Gaussian, k * n);
        let mut full = vec![0f32; 9 * n];
        gemm_into(9, n, k, a.data(), b.data(), &mut full);
        for i in 0..9 {
            let mut row = vec![0f32; n];
            gemm_into(1, n, k, &a.data()[i * k..(i + 1) * k], b.data(), &mut row);
            assert_eq!(row, full[i * n..(i + 1) * n]);
        }
    }

    #[test]
    fn im2col_shapes() {
        let x = Tensor::<f32>::from_fn(&[1, 1, 4, 4], |i| i as f32);
        let cols = im2col(&x, 3, 1, 0).unwrap();
        assert_eq!(cols.shape(), &[9, 4]);
        // first column is the top-left 3x3 window
        let first: Vec<f32> = (0..9).map(|r| cols.data()[r * 4]).collect();
        assert_eq!(first, vec![0., 1., 2., 4., 5., 6., 8., 9., 10.]);
    }

    #[test]
    fn im2col_one_by_one_is_reshape() {
        let x = Tensor::<f32>::from_fn(&[1, 3, 4, 5], |i| i as f32 * 0.5);
        let cols = im2col(&x, 1, 1, 0).unwrap();
        assert_eq!(cols.shape(), &[3, 20]);
        assert_eq!(cols.data(), x.data());
    }

    #[test]
    fn im2col_zero_input_and_non_integral() {
        let x = Tensor::<f32>::zeros(&[1, 2, 5, 5]);
        assert!(im2col(&x, 3, 1, 1).unwrap().data().iter().all(|&v| v == 0.0));
        assert!(im2col(&x, 3, 2, 0).is_ok());
        assert!(im2col(&Tensor::<f32>::zeros(&[1, 1, 6, 6]), 3, 2, 0).is_err());
    }

    #[test]
    fn col2im_is_adjoint_of_im2col() {
        // <im2col(x), y> == <x, col2im(y)>
        let mut rng = SeededRng::new(5);
        for &(k, s, p) in &[(3, 1, 1), (3, 2, 1), (3, 2, 0), (1, 1, 0)] {
            let g = ConvGeometry::new(2, 7, 7, k, s, p).unwrap();
            let x: Tensor<f64> = rng.draw(Distribution::Gaussian, 2 * 49);
            let y: Tensor<f64> = rng.draw(Distribution::Gaussian, g.col_rows() * g.col_cols());
            let mut cols = vec![0.0; g.col_rows() * g.col_cols()];
            im2col_into(x.data(), &g, &mut cols);
            let mut back = vec![0.0; 98];
            col2im_add(y.data(), &g, &mut back);
            let lhs: f64 = cols.iter().zip(y.data()).map(|(a, b)| a * b).sum();
            let rhs: f64 = x.data().iter().zip(&back).map(|(a, b)| a * b).sum();
            assert!((lhs - rhs).abs() < 1e-10);
        }
    }
}
