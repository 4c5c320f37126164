//! `w = g * v / ||v||` with one norm and one gain per output channel.

use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tensor4};

/// Direction norms below this are rejected as degenerate.
pub const MIN_DIRECTION_NORM: f64 = 1e-12;

fn row_norms<T: Scalar>(v: &Tensor4<T>) -> Vec<T> {
    let per = v.shape().item();
    v.data()
        .chunks(per.max(1))
        .map(|row| row.iter().map(|&x| x * x).sum::<T>().sqrt())
        .collect()
}

/// Per-output-channel L2 norms of a kernel, in `f64`.
pub fn direction_norms<T: Scalar>(v: &Tensor4<T>) -> Vec<f64> {
    row_norms(v).into_iter().map(|n| n.as_f64()).collect()
}

pub fn weight_norm<T: Scalar>(v: &Tensor4<T>, g: &Tensor4<T>) -> Result<Tensor4<T>> {
    let co = v.shape().n;
    if g.len() != co {
        return Err(Error::shape(
            "weight_norm",
            format!("gain with {co} elements"),
            g.shape(),
        ));
    }
    let norms = row_norms(v);
    if let Some(o) = norms.iter().position(|n| n.as_f64().is_nan() || n.as_f64() < MIN_DIRECTION_NORM) {
        return Err(Error::InvalidArgument(format!(
            "weight_norm: direction of output channel {o} has norm {} (< {MIN_DIRECTION_NORM:e})",
            norms[o]
        )));
    }
    let per = v.shape().item();
    let mut w = v.clone();
    for (o, row) in w.data_mut().chunks_mut(per.max(1)).enumerate() {
        let s = g.data()[o] / norms[o];
        for x in row {
            *x = *x * s;
        }
    }
    Ok(w)
}

/// Returns `(dv, dg)`.
pub(crate) fn weight_norm_grads<T: Scalar>(
    v: &Tensor4<T>,
    g: &Tensor4<T>,
    dw: &Tensor4<T>,
) -> (Tensor4<T>, Tensor4<T>) {
    let per = v.shape().item().max(1);
    let norms = row_norms(v);
    let mut dv = Tensor4::zeros(v.shape());
    let mut dg = Tensor4::zeros(g.shape());
    for (o, ((vrow, dwrow), dvrow)) in v
        .data()
        .chunks(per)
        .zip(dw.data().chunks(per))
        .zip(dv.data_mut().chunks_mut(per))
        .enumerate()
    {
        let n = norms[o];
        let dot: T = vrow.iter().zip(dwrow).map(|(&a, &b)| a * b).sum();
        let dgo = dot / n;
        dg.data_mut()[o] = dgo;
        let s = g.data()[o] / n;
        for ((dvx, &vx), &dwx) in dvrow.iter_mut().zip(vrow).zip(dwrow) {
            *dvx = s * (dwx - dgo / n * vx);
        }
    }
    (dv, dg)
}
