use std::sync::Arc;

use crate::error::{Error, Result};
use crate::ops;
use crate::tensor::{Scalar, Tensor4};

/// The differentiable primitive set that every layer is written against.
///
/// [`Tape`](super::Tape) records each call for reverse-mode gradients;
/// [`Eager`] just evaluates, letting intermediates drop as soon as they are
/// no longer referenced.
pub trait Backend<T: Scalar> {
    type Var: Clone;

    /// A trainable leaf.
    fn param(&mut self, t: Tensor4<T>) -> Self::Var;

    /// A leaf that never receives a gradient (input data, targets).
    fn constant(&mut self, t: Tensor4<T>) -> Self::Var;

    fn value<'a>(&'a self, v: &'a Self::Var) -> &'a Tensor4<T>;

    fn conv2d(
        &mut self,
        x: &Self::Var,
        w: &Self::Var,
        b: Option<&Self::Var>,
        padding: usize,
    ) -> Result<Self::Var>;
    fn weight_norm(&mut self, v: &Self::Var, g: &Self::Var) -> Result<Self::Var>;
    fn add(&mut self, a: &Self::Var, b: &Self::Var) -> Result<Self::Var>;
    fn mul(&mut self, a: &Self::Var, b: &Self::Var) -> Result<Self::Var>;
    fn mul_channelwise(&mut self, u: &Self::Var, alpha: &Self::Var) -> Result<Self::Var>;
    fn relu(&mut self, x: &Self::Var) -> Result<Self::Var>;
    fn sigmoid(&mut self, x: &Self::Var) -> Result<Self::Var>;
    fn scale(&mut self, x: &Self::Var, s: T) -> Result<Self::Var>;
    fn concat_channels(&mut self, parts: &[Self::Var]) -> Result<Self::Var>;
    fn global_avg_pool(&mut self, x: &Self::Var) -> Result<Self::Var>;
    fn pixel_shuffle(&mut self, x: &Self::Var, r: usize) -> Result<Self::Var>;
    fn channel_conv1d(&mut self, z: &Self::Var, kernel: &Self::Var) -> Result<Self::Var>;
    fn sum(&mut self, x: &Self::Var) -> Result<Self::Var>;
    fn l1_loss(&mut self, sr: &Self::Var, hr: &Self::Var) -> Result<Self::Var>;
}

pub(crate) fn finite<T: Scalar>(op: &str, t: Tensor4<T>) -> Result<Tensor4<T>> {
    if t.is_finite() {
        Ok(t)
    } else {
        Err(Error::NonFinite { op: op.to_string() })
    }
}

/// Forward-only evaluation.
#[derive(Debug, Default, Clone, Copy)]
pub struct Eager;

impl<T: Scalar> Backend<T> for Eager {
    type Var = Arc<Tensor4<T>>;

    fn param(&mut self, t: Tensor4<T>) -> Self::Var {
        Arc::new(t)
    }

    fn constant(&mut self, t: Tensor4<T>) -> Self::Var {
        Arc::new(t)
    }

    fn value<'a>(&'a self, v: &'a Self::Var) -> &'a Tensor4<T> {
        v
    }

    fn conv2d(
        &mut self,
        x: &Self::Var,
        w: &Self::Var,
        b: Option<&Self::Var>,
        padding: usize,
    ) -> Result<Self::Var> {
        let out = ops::conv2d(x, w, b.map(|b| &**b), padding)?;
        finite("conv2d", out).map(Arc::new)
    }

    fn weight_norm(&mut self, v: &Self::Var, g: &Self::Var) -> Result<Self::Var> {
        finite("weight_norm", ops::weight_norm(v, g)?).map(Arc::new)
    }

    fn add(&mut self, a: &Self::Var, b: &Self::Var) -> Result<Self::Var> {
        finite("add", ops::add(a, b)?).map(Arc::new)
    }

    fn mul(&mut self, a: &Self::Var, b: &Self::Var) -> Result<Self::Var> {
        finite("mul", ops::mul(a, b)?).map(Arc::new)
    }

    fn mul_channelwise(&mut self, u: &Self::Var, alpha: &Self::Var) -> Result<Self::Var> {
        finite("mul_channelwise", ops::mul_channelwise(u, alpha)?).map(Arc::new)
    }

    fn relu(&mut self, x: &Self::Var) -> Result<Self::Var> {
        Ok(Arc::new(ops::relu(x)))
    }

    fn sigmoid(&mut self, x: &Self::Var) -> Result<Self::Var> {
        finite("sigmoid", ops::sigmoid(x)).map(Arc::new)
    }

    fn scale(&mut self, x: &Self::Var, s: T) -> Result<Self::Var> {
        finite("scale", ops::scale(x, s)).map(Arc::new)
    }

    fn concat_channels(&mut self, parts: &[Self::Var]) -> Result<Self::Var> {
        let refs: Vec<&Tensor4<T>> = parts.iter().map(|p| &**p).collect();
        Ok(Arc::new(ops::concat_channels(&refs)?))
    }

    fn global_avg_pool(&mut self, x: &Self::Var) -> Result<Self::Var> {
        finite("global_avg_pool", ops::global_avg_pool(x)?).map(Arc::new)
    }

    fn pixel_shuffle(&mut self, x: &Self::Var, r: usize) -> Result<Self::Var> {
        Ok(Arc::new(ops::pixel_shuffle(x, r)?))
    }

    fn channel_conv1d(&mut self, z: &Self::Var, kernel: &Self::Var) -> Result<Self::Var> {
        finite("channel_conv1d", ops::channel_conv1d(z, kernel)?).map(Arc::new)
    }

    fn sum(&mut self, x: &Self::Var) -> Result<Self::Var> {
        finite("sum", ops::sum(x)).map(Arc::new)
    }

    fn l1_loss(&mut self, sr: &Self::Var, hr: &Self::Var) -> Result<Self::Var> {
        finite("l1_loss", ops::l1_loss(sr, hr)?).map(Arc::new)
    }
}
