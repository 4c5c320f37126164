use crate::autodiff::Backend;
use crate::error::{Error, Result};
use crate::tensor::Scalar;

use super::{Bound, Conv, Layer, LayerKind, ParamSpec};

pub const SUPPORTED_SCALES: [usize; 3] = [2, 3, 4];

pub fn check_scale(scale: usize) -> Result<()> {
    if SUPPORTED_SCALES.contains(&scale) {
        Ok(())
    } else {
        Err(Error::Config(format!("unsupported scale {scale} (expected 2, 3 or 4)")))
    }
}

/// Single-stage sub-pixel head: `conv3x3 (C -> U*s*s)`, pixel shuffle by
/// `s`, then `conv3x3 (U -> 3)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Upsampler {
    pub scale: usize,
    pub expand: Conv,
    pub out: Conv,
}

impl Upsampler {
    pub fn new(prefix: &str, channels: usize, upsample_channels: usize, scale: usize, weight_norm: bool) -> Result<Self> {
        check_scale(scale)?;
        Ok(Upsampler {
            scale,
            expand: Conv::new(
                format!("{prefix}.convexpand"),
                channels,
                upsample_channels * scale * scale,
                3,
                weight_norm,
            ),
            out: Conv::new(format!("{prefix}.convout"), upsample_channels, 3, 3, weight_norm),
        })
    }
}

impl Layer for Upsampler {
    fn kind(&self) -> LayerKind {
        LayerKind::Upsampler
    }

    fn name(&self) -> &str {
        "upsampler"
    }

    fn param_specs(&self) -> Vec<ParamSpec> {
        let mut specs = self.expand.param_specs();
        specs.extend(self.out.param_specs());
        specs
    }

    fn forward<T: Scalar, B: Backend<T>>(&self, be: &mut B, p: &Bound<B::Var>, x: &B::Var) -> Result<B::Var> {
        let h = self.expand.forward(be, p, x)?;
        let h = be.pixel_shuffle(&h, self.scale)?;
        self.out.forward(be, p, &h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Eager;
    use crate::nn::ParamStore;
    use crate::rng::Rng;
    use crate::tensor::{Shape, Tensor4};

    fn out_shape(c: usize, h: usize, w: usize, s: usize) -> Shape {
        let up = Upsampler::new("head", c, 4, s, true).unwrap();
        let store = ParamStore::<f32>::initialize(&up.param_specs(), &mut Rng::seeded(5)).unwrap();
        let mut be = Eager;
        let p = store.bind(&mut be);
        let x = be.constant(Tensor4::full([1, c, h, w], 0.25f32));
        up.forward(&mut be, &p, &x).unwrap().shape()
    }

    #[test]
    fn shape_contract() {
        assert_eq!(out_shape(8, 8, 8, 2), Shape::new(1, 3, 16, 16));
        assert_eq!(out_shape(8, 10, 7, 3), Shape::new(1, 3, 30, 21));
        assert_eq!(out_shape(4, 3, 5, 4), Shape::new(1, 3, 12, 20));
    }

    #[test]
    fn rejects_unsupported_scale() {
        assert!(Upsampler::new("head", 8, 8, 5, true).is_err());
        assert!(Upsampler::new("head", 8, 8, 1, true).is_err());
    }
}
