//! Stride-1, same-size 2-D cross-correlation via im2col + GEMM.
//!
//! Every batch item is processed independently and per-item weight
//! gradients are reduced in batch order, so results do not depend on how
//! many threads rayon uses.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::tensor::{Scalar, Shape, Tensor4};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct ConvGeom {
    pub c_in: usize,
    pub c_out: usize,
    pub k: usize,
    pub pad: usize,
    pub h: usize,
    pub w: usize,
}

impl ConvGeom {
    fn col_rows(&self) -> usize {
        self.c_in * self.k * self.k
    }

    fn plane(&self) -> usize {
        self.h * self.w
    }
}

pub(crate) fn check_conv<T: Scalar>(
    x: &Tensor4<T>,
    w: &Tensor4<T>,
    b: Option<&Tensor4<T>>,
    padding: usize,
) -> Result<ConvGeom> {
    let xs = x.shape();
    let ws = w.shape();
    if ws.h != ws.w || ws.h.is_multiple_of(2) {
        return Err(Error::shape(
            "conv2d",
            "square odd kernel (c_out, c_in, k, k)",
            ws,
        ));
    }
    if xs.c != ws.c {
        return Err(Error::shape(
            "conv2d",
            format!("input with {} channels (weight {ws})", ws.c),
            xs,
        ));
    }
    if padding != (ws.h - 1) / 2 {
        return Err(Error::shape(
            "conv2d",
            format!("padding {} for a {}x{} kernel", (ws.h - 1) / 2, ws.h, ws.h),
            format!("padding {padding}"),
        ));
    }
    if let Some(b) = b {
        if b.len() != ws.n {
            return Err(Error::shape(
                "conv2d",
                format!("bias with {} elements", ws.n),
                b.shape(),
            ));
        }
    }
    Ok(ConvGeom {
        c_in: ws.c,
        c_out: ws.n,
        k: ws.h,
        pad: padding,
        h: xs.h,
        w: xs.w,
    })
}

/// Unfolds one batch item into a `(c_in*k*k) x (h*w)` column matrix.
fn im2col<T: Scalar>(g: &ConvGeom, x: &[T], col: &mut [T]) {
    let (h, w, k, pad) = (g.h as isize, g.w as isize, g.k, g.pad as isize);
    let plane = g.plane();
    for ci in 0..g.c_in {
        let src = &x[ci * plane..(ci + 1) * plane];
        for ky in 0..k {
            for kx in 0..k {
                let row = (ci * k + ky) * k + kx;
                let dst = &mut col[row * plane..(row + 1) * plane];
                let dy = ky as isize - pad;
                let dx = kx as isize - pad;
                for y in 0..h {
                    let sy = y + dy;
                    let out = &mut dst[(y * w) as usize..((y + 1) * w) as usize];
                    if sy < 0 || sy >= h {
                        out.fill(T::zero());
                        continue;
                    }
                    let srow = &src[(sy * w) as usize..((sy + 1) * w) as usize];
                    for (x, o) in out.iter_mut().enumerate() {
                        let sx = x as isize + dx;
                        *o = if sx < 0 || sx >= w {
                            T::zero()
                        } else {
                            srow[sx as usize]
                        };
                    }
                }
            }
        }
    }
}

/// Scatters a column matrix back onto an image, accumulating overlaps.
fn col2im<T: Scalar>(g: &ConvGeom, col: &[T], dx: &mut [T]) {
    let (h, w, k, pad) = (g.h as isize, g.w as isize, g.k, g.pad as isize);
    let plane = g.plane();
    for ci in 0..g.c_in {
        let dst = &mut dx[ci * plane..(ci + 1) * plane];
        for ky in 0..k {
            for kx in 0..k {
                let row = (ci * k + ky) * k + kx;
                let src = &col[row * plane..(row + 1) * plane];
                let dy = ky as isize - pad;
                let ddx = kx as isize - pad;
                for y in 0..h {
                    let sy = y + dy;
                    if sy < 0 || sy >= h {
                        continue;
                    }
                    let crow = &src[(y * w) as usize..((y + 1) * w) as usize];
                    let drow = &mut dst[(sy * w) as usize..((sy + 1) * w) as usize];
                    for (x, &v) in crow.iter().enumerate() {
                        let sx = x as isize + ddx;
                        if sx >= 0 && sx < w {
                            drow[sx as usize] = drow[sx as usize] + v;
                        }
                    }
                }
            }
        }
    }
}

/// Row-major `a (m x k) · b (k x n)` into `c`, with optional transposes
/// expressed through strides.
#[allow(clippy::too_many_arguments)]
fn matmul<T: Scalar>(
    m: usize,
    k: usize,
    n: usize,
    a: &[T],
    a_t: bool,
    b: &[T],
    b_t: bool,
    beta: T,
    c: &mut [T],
) {
    debug_assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
    let (rsa, csa) = if a_t { (1, m as isize) } else { (k as isize, 1) };
    let (rsb, csb) = if b_t { (1, k as isize) } else { (n as isize, 1) };
    // SAFETY: lengths are checked above; strides describe row-major
    // (or transposed row-major) views of exactly those extents.
    unsafe {
        T::gemm(
            m,
            k,
            n,
            T::one(),
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

pub fn conv2d<T: Scalar>(
    x: &Tensor4<T>,
    w: &Tensor4<T>,
    b: Option<&Tensor4<T>>,
    padding: usize,
) -> Result<Tensor4<T>> {
    let g = check_conv(x, w, b, padding)?;
    let xs = x.shape();
    let out_shape = Shape::new(xs.n, g.c_out, g.h, g.w);
    let mut out = Tensor4::zeros(out_shape);
    let plane = g.plane();
    let in_item = xs.item();
    let out_item = out_shape.item();
    let xd = x.data();
    let wd = w.data();

    out.data_mut()
        .par_chunks_mut(out_item.max(1))
        .enumerate()
        .for_each(|(n, o)| {
            if let Some(b) = b {
                for (co, chunk) in o.chunks_mut(plane).enumerate() {
                    chunk.fill(b.data()[co]);
                }
            }
            let xi = &xd[n * in_item..(n + 1) * in_item];
            if g.k == 1 {
                matmul(g.c_out, g.c_in, plane, wd, false, xi, false, T::one(), o);
            } else {
                let mut col = vec![T::zero(); g.col_rows() * plane];
                im2col(&g, xi, &mut col);
                matmul(g.c_out, g.col_rows(), plane, wd, false, &col, false, T::one(), o);
            }
        });
    Ok(out)
}

pub(crate) fn conv2d_grad_input<T: Scalar>(
    x_shape: Shape,
    w: &Tensor4<T>,
    dout: &Tensor4<T>,
    padding: usize,
) -> Tensor4<T> {
    let ws = w.shape();
    let g = ConvGeom {
        c_in: ws.c,
        c_out: ws.n,
        k: ws.h,
        pad: padding,
        h: x_shape.h,
        w: x_shape.w,
    };
    let plane = g.plane();
    let mut dx = Tensor4::zeros(x_shape);
    let dd = dout.data();
    let out_item = dout.shape().item();
    dx.data_mut()
        .par_chunks_mut(x_shape.item().max(1))
        .enumerate()
        .for_each(|(n, dxi)| {
            let go = &dd[n * out_item..(n + 1) * out_item];
            if g.k == 1 {
                matmul(g.c_in, g.c_out, plane, w.data(), true, go, false, T::zero(), dxi);
            } else {
                let mut col = vec![T::zero(); g.col_rows() * plane];
                matmul(g.col_rows(), g.c_out, plane, w.data(), true, go, false, T::zero(), &mut col);
                col2im(&g, &col, dxi);
            }
        });
    dx
}

pub(crate) fn conv2d_grad_weight<T: Scalar>(
    x: &Tensor4<T>,
    w_shape: Shape,
    dout: &Tensor4<T>,
    padding: usize,
) -> Tensor4<T> {
    let xs = x.shape();
    let g = ConvGeom {
        c_in: w_shape.c,
        c_out: w_shape.n,
        k: w_shape.h,
        pad: padding,
        h: xs.h,
        w: xs.w,
    };
    let plane = g.plane();
    let kk = g.col_rows();
    let in_item = xs.item();
    let out_item = dout.shape().item();
    let partials: Vec<Vec<T>> = (0..xs.n)
        .into_par_iter()
        .map(|n| {
            let xi = &x.data()[n * in_item..(n + 1) * in_item];
            let go = &dout.data()[n * out_item..(n + 1) * out_item];
            let mut dw = vec![T::zero(); g.c_out * kk];
            if g.k == 1 {
                matmul(g.c_out, plane, kk, go, false, xi, true, T::zero(), &mut dw);
            } else {
                let mut col = vec![T::zero(); kk * plane];
                im2col(&g, xi, &mut col);
                matmul(g.c_out, plane, kk, go, false, &col, true, T::zero(), &mut dw);
            }
            dw
        })
        .collect();
    let mut dw = Tensor4::zeros(w_shape);
    for p in &partials {
        for (a, &b) in dw.data_mut().iter_mut().zip(p) {
            *a = *a + b;
        }
    }
    dw
}

pub(crate) fn conv2d_grad_bias<T: Scalar>(b_shape: Shape, dout: &Tensor4<T>) -> Tensor4<T> {
    let ds = dout.shape();
    let plane = ds.plane();
    let mut db = Tensor4::zeros(b_shape);
    for n in 0..ds.n {
        for c in 0..ds.c {
            let start = (n * ds.c + c) * plane;
            let s: T = dout.data()[start..start + plane].iter().copied().sum();
            db.data_mut()[c] = db.data()[c] + s;
        }
    }
    db
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct six-loop cross-correlation with zero padding.
    fn naive(x: &Tensor4<f64>, w: &Tensor4<f64>, b: &[f64]) -> Tensor4<f64> {
        let xs = x.shape();
        let ws = w.shape();
        let p = (ws.h / 2) as isize;
        Tensor4::from_fn([xs.n, ws.n, xs.h, xs.w], |n, co, y, xx| {
            let mut s = b[co];
            for ci in 0..ws.c {
                for ky in 0..ws.h {
                    for kx in 0..ws.w {
                        let sy = y as isize + ky as isize - p;
                        let sx = xx as isize + kx as isize - p;
                        if sy >= 0 && sx >= 0 && (sy as usize) < xs.h && (sx as usize) < xs.w {
                            s += w.at(co, ci, ky, kx) * x.at(n, ci, sy as usize, sx as usize);
                        }
                    }
                }
            }
            s
        })
    }

    fn pseudo(shape: [usize; 4], seed: u64) -> Tensor4<f64> {
        let mut state = seed;
        Tensor4::from_fn(shape, |_, _, _, _| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        })
    }

    #[test]
    fn identity_kernel() {
        let x = Tensor4::<f32>::from_vec([1, 1, 2, 2], vec![1., 2., 3., 4.]).unwrap();
        let w = Tensor4::ones([1, 1, 1, 1]);
        let y = conv2d(&x, &w, Some(&Tensor4::zeros([1, 1, 1, 1])), 0).unwrap();
        assert_eq!(y.data(), x.data());
    }

    #[test]
    fn all_ones_3x3_with_padding() {
        let x = Tensor4::<f32>::from_vec([1, 1, 2, 2], vec![1., 2., 3., 4.]).unwrap();
        let w = Tensor4::ones([1, 1, 3, 3]);
        let y = conv2d(&x, &w, None, 1).unwrap();
        assert_eq!(y.data(), &[10., 10., 10., 10.]);
    }

    #[test]
    fn zero_kernel_leaves_bias() {
        let x = pseudo([2, 3, 4, 5], 1).cast::<f32>();
        let w = Tensor4::zeros([1, 3, 3, 3]);
        let b = Tensor4::full([1, 1, 1, 1], 5.0f32);
        let y = conv2d(&x, &w, Some(&b), 1).unwrap();
        assert!(y.data().iter().all(|&v| v == 5.0));
    }

    #[test]
    fn matches_naive_loops() {
        for (k, shape) in [(3, [2, 3, 5, 4]), (1, [3, 4, 3, 3]), (3, [1, 2, 1, 1]), (5, [1, 2, 6, 7])] {
            let x = pseudo(shape, 7);
            let w = pseudo([4, shape[1], k, k], 9);
            let b = vec![0.5, -0.25, 0.0, 1.0];
            let bt = Tensor4::from_vec([4, 1, 1, 1], b.clone()).unwrap();
            let got = conv2d(&x, &w, Some(&bt), k / 2).unwrap();
            let want = naive(&x, &w, &b);
            assert!(got.max_abs_diff(&want) < 1e-12, "k={k}");
        }
    }

    #[test]
    fn shape_errors_name_both_shapes() {
        let x = Tensor4::<f32>::zeros([1, 2, 4, 4]);
        let w = Tensor4::<f32>::zeros([3, 5, 3, 3]);
        let err = conv2d(&x, &w, None, 1).unwrap_err().to_string();
        assert!(err.contains("1x2x4x4") && err.contains("3x5x3x3"), "{err}");
        let w = Tensor4::<f32>::zeros([3, 2, 3, 3]);
        assert!(conv2d(&x, &w, None, 0).is_err());
        assert!(conv2d(&x, &w, Some(&Tensor4::zeros([2, 1, 1, 1])), 1).is_err());
    }
}
