use crate::error::{Error, Result};
use crate::tensor::{Scalar, Shape, Tensor4};

fn same_shape<T: Scalar>(op: &'static str, a: &Tensor4<T>, b: &Tensor4<T>) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::shape(op, a.shape(), b.shape()));
    }
    Ok(())
}

fn zip<T: Scalar>(a: &Tensor4<T>, b: &Tensor4<T>, f: impl Fn(T, T) -> T) -> Tensor4<T> {
    let data = a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect();
    Tensor4::from_vec(a.shape(), data).expect("zip of equal shapes")
}

pub fn add<T: Scalar>(a: &Tensor4<T>, b: &Tensor4<T>) -> Result<Tensor4<T>> {
    same_shape("add", a, b)?;
    Ok(zip(a, b, |x, y| x + y))
}

pub fn mul<T: Scalar>(a: &Tensor4<T>, b: &Tensor4<T>) -> Result<Tensor4<T>> {
    same_shape("mul", a, b)?;
    Ok(zip(a, b, |x, y| x * y))
}

pub(crate) fn mul_grad<T: Scalar>(dout: &Tensor4<T>, other: &Tensor4<T>) -> Tensor4<T> {
    zip(dout, other, |d, o| d * o)
}

pub fn scale<T: Scalar>(x: &Tensor4<T>, s: T) -> Tensor4<T> {
    x.map(|v| v * s)
}

pub fn relu<T: Scalar>(x: &Tensor4<T>) -> Tensor4<T> {
    x.map(|v| if v > T::zero() { v } else { T::zero() })
}

pub(crate) fn relu_grad<T: Scalar>(x: &Tensor4<T>, dout: &Tensor4<T>) -> Tensor4<T> {
    zip(x, dout, |v, d| if v > T::zero() { d } else { T::zero() })
}

#[inline]
pub(crate) fn sigmoid_scalar<T: Scalar>(v: T) -> T {
    // Branch on sign so exp never overflows.
    if v >= T::zero() {
        T::one() / (T::one() + (-v).exp())
    } else {
        let e = v.exp();
        e / (T::one() + e)
    }
}

pub fn sigmoid<T: Scalar>(x: &Tensor4<T>) -> Tensor4<T> {
    x.map(sigmoid_scalar)
}

pub(crate) fn sigmoid_grad<T: Scalar>(y: &Tensor4<T>, dout: &Tensor4<T>) -> Tensor4<T> {
    zip(y, dout, |s, d| d * s * (T::one() - s))
}

fn check_channelwise<T: Scalar>(u: &Tensor4<T>, alpha: &Tensor4<T>) -> Result<()> {
    let us = u.shape();
    let want = Shape::new(us.n, us.c, 1, 1);
    if alpha.shape() != want {
        return Err(Error::shape("mul_channelwise", want, alpha.shape()));
    }
    Ok(())
}

/// Scales channel `c` of item `n` by `alpha[n, c]`.
pub fn mul_channelwise<T: Scalar>(u: &Tensor4<T>, alpha: &Tensor4<T>) -> Result<Tensor4<T>> {
    check_channelwise(u, alpha)?;
    let plane = u.shape().plane();
    let mut out = u.clone();
    for (chunk, &a) in out.data_mut().chunks_mut(plane.max(1)).zip(alpha.data()) {
        for v in chunk {
            *v = *v * a;
        }
    }
    Ok(out)
}

pub(crate) fn mul_channelwise_grad_u<T: Scalar>(alpha: &Tensor4<T>, dout: &Tensor4<T>) -> Tensor4<T> {
    mul_channelwise(dout, alpha).expect("validated in forward")
}

pub(crate) fn mul_channelwise_grad_alpha<T: Scalar>(u: &Tensor4<T>, dout: &Tensor4<T>) -> Tensor4<T> {
    let us = u.shape();
    let plane = us.plane();
    let data = u
        .data()
        .chunks(plane.max(1))
        .zip(dout.data().chunks(plane.max(1)))
        .map(|(uc, dc)| uc.iter().zip(dc).map(|(&a, &b)| a * b).sum())
        .collect();
    Tensor4::from_vec([us.n, us.c, 1, 1], data).expect("one value per channel")
}
