use crate::error::{Error, Result};
use crate::tensor::{Scalar, Shape, Tensor4};

/// Concatenates along the channel axis, in the order given.
pub fn concat_channels<T: Scalar>(parts: &[&Tensor4<T>]) -> Result<Tensor4<T>> {
    let first = parts
        .first()
        .ok_or_else(|| Error::InvalidArgument("concat_channels of zero tensors".into()))?
        .shape();
    let mut c = 0;
    for p in parts {
        let s = p.shape();
        if (s.n, s.h, s.w) != (first.n, first.h, first.w) {
            return Err(Error::shape("concat_channels", first, s));
        }
        c += s.c;
    }
    let shape = Shape::new(first.n, c, first.h, first.w);
    let mut data = Vec::with_capacity(shape.numel());
    for n in 0..first.n {
        for p in parts {
            let item = p.shape().item();
            data.extend_from_slice(&p.data()[n * item..(n + 1) * item]);
        }
    }
    Tensor4::from_vec(shape, data)
}

/// Splits a channel-concatenated gradient back into per-input pieces.
pub(crate) fn split_channels<T: Scalar>(t: &Tensor4<T>, widths: &[usize]) -> Vec<Tensor4<T>> {
    let mut start = 0;
    widths
        .iter()
        .map(|&c| {
            let s = t.slice_channels(start, start + c).expect("widths sum to channel count");
            start += c;
            s
        })
        .collect()
}

pub fn global_avg_pool<T: Scalar>(u: &Tensor4<T>) -> Result<Tensor4<T>> {
    let s = u.shape();
    if s.plane() == 0 {
        return Err(Error::shape("global_avg_pool", "spatial extent h*w >= 1", s));
    }
    let inv = T::of(1.0 / s.plane() as f64);
    let data = u
        .data()
        .chunks(s.plane())
        .map(|ch| ch.iter().copied().sum::<T>() * inv)
        .collect();
    Tensor4::from_vec([s.n, s.c, 1, 1], data)
}

pub(crate) fn global_avg_pool_grad<T: Scalar>(in_shape: Shape, dout: &Tensor4<T>) -> Tensor4<T> {
    let inv = T::of(1.0 / in_shape.plane() as f64);
    let mut dx = Tensor4::zeros(in_shape);
    for (ch, &d) in dx.data_mut().chunks_mut(in_shape.plane()).zip(dout.data()) {
        ch.fill(d * inv);
    }
    dx
}

/// `out[n, c, r*i + di, r*j + dj] = in[n, c*r*r + di*r + dj, i, j]`.
pub fn pixel_shuffle<T: Scalar>(x: &Tensor4<T>, r: usize) -> Result<Tensor4<T>> {
    let s = x.shape();
    if r == 0 || !s.c.is_multiple_of(r * r) {
        return Err(Error::shape(
            "pixel_shuffle",
            format!("channel count divisible by {}", r * r),
            s,
        ));
    }
    let oc = s.c / (r * r);
    let out_shape = Shape::new(s.n, oc, s.h * r, s.w * r);
    let mut out = Tensor4::zeros(out_shape);
    for n in 0..s.n {
        for c in 0..oc {
            for di in 0..r {
                for dj in 0..r {
                    let ic = c * r * r + di * r + dj;
                    for i in 0..s.h {
                        for j in 0..s.w {
                            out.set(n, c, r * i + di, r * j + dj, x.at(n, ic, i, j));
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Exact inverse of [`pixel_shuffle`].
pub fn pixel_unshuffle<T: Scalar>(y: &Tensor4<T>, r: usize) -> Result<Tensor4<T>> {
    let s = y.shape();
    if r == 0 || !s.h.is_multiple_of(r) || !s.w.is_multiple_of(r) {
        return Err(Error::shape(
            "pixel_unshuffle",
            format!("spatial size divisible by {r}"),
            s,
        ));
    }
    let (h, w) = (s.h / r, s.w / r);
    let mut out = Tensor4::zeros([s.n, s.c * r * r, h, w]);
    for n in 0..s.n {
        for c in 0..s.c {
            for di in 0..r {
                for dj in 0..r {
                    let oc = c * r * r + di * r + dj;
                    for i in 0..h {
                        for j in 0..w {
                            out.set(n, oc, i, j, y.at(n, c, r * i + di, r * j + dj));
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

fn check_channel_conv1d<T: Scalar>(z: &Tensor4<T>, kernel: &Tensor4<T>) -> Result<usize> {
    let zs = z.shape();
    if zs.h != 1 || zs.w != 1 {
        return Err(Error::shape("channel_conv1d", "descriptor of shape n x c x 1 x 1", zs));
    }
    let k = kernel.len();
    if k.is_multiple_of(2) {
        return Err(Error::shape("channel_conv1d", "odd kernel length", kernel.shape()));
    }
    Ok(k)
}

/// 1-d cross-correlation across the channel axis of a pooled descriptor,
/// zero-padded at both ends (no wrap-around).
pub fn channel_conv1d<T: Scalar>(z: &Tensor4<T>, kernel: &Tensor4<T>) -> Result<Tensor4<T>> {
    let k = check_channel_conv1d(z, kernel)?;
    let zs = z.shape();
    let half = (k / 2) as isize;
    let kd = kernel.data();
    let mut out = Tensor4::zeros(zs);
    for n in 0..zs.n {
        let row = &z.data()[n * zs.c..(n + 1) * zs.c];
        for c in 0..zs.c {
            let mut acc = T::zero();
            for (t, &wt) in kd.iter().enumerate() {
                let src = c as isize + t as isize - half;
                if src >= 0 && (src as usize) < zs.c {
                    acc = acc + wt * row[src as usize];
                }
            }
            out.data_mut()[n * zs.c + c] = acc;
        }
    }
    Ok(out)
}

pub(crate) fn channel_conv1d_grads<T: Scalar>(
    z: &Tensor4<T>,
    kernel: &Tensor4<T>,
    dout: &Tensor4<T>,
) -> (Tensor4<T>, Tensor4<T>) {
    let zs = z.shape();
    let k = kernel.len();
    let half = (k / 2) as isize;
    let mut dz = Tensor4::zeros(zs);
    let mut dk = Tensor4::zeros(kernel.shape());
    for n in 0..zs.n {
        for c in 0..zs.c {
            let d = dout.data()[n * zs.c + c];
            for t in 0..k {
                let src = c as isize + t as isize - half;
                if src >= 0 && (src as usize) < zs.c {
                    let si = n * zs.c + src as usize;
                    dz.data_mut()[si] = dz.data()[si] + d * kernel.data()[t];
                    dk.data_mut()[t] = dk.data()[t] + d * z.data()[si];
                }
            }
        }
    }
    (dz, dk)
}

pub fn sum<T: Scalar>(x: &Tensor4<T>) -> Tensor4<T> {
    Tensor4::scalar(x.sum())
}

/// Mean absolute error over all elements.
pub fn l1_loss<T: Scalar>(sr: &Tensor4<T>, hr: &Tensor4<T>) -> Result<Tensor4<T>> {
    if sr.shape() != hr.shape() {
        return Err(Error::shape("l1_loss", hr.shape(), sr.shape()));
    }
    let total: T = sr.data().iter().zip(hr.data()).map(|(&a, &b)| (a - b).abs()).sum();
    Ok(Tensor4::scalar(total / T::of(sr.len().max(1) as f64)))
}

/// Subgradient `sign(sr - hr) / N`, with `sign(0) = 0`.
pub(crate) fn l1_loss_grad<T: Scalar>(sr: &Tensor4<T>, hr: &Tensor4<T>, dout: T) -> Tensor4<T> {
    let k = dout / T::of(sr.len().max(1) as f64);
    let data = sr
        .data()
        .iter()
        .zip(hr.data())
        .map(|(&a, &b)| {
            if a > b {
                k
            } else if a < b {
                -k
            } else {
                T::zero()
            }
        })
        .collect();
    Tensor4::from_vec(sr.shape(), data).expect("same shape")
}
