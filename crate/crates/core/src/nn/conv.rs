use crate::autodiff::Backend;
use crate::error::{Error, Result};
use crate::ops;
use crate::tensor::{Scalar, Tensor4};

use super::{Bound, Init, Layer, LayerKind, ParamSpec};

/// Same-size convolution, optionally weight-normalized.
///
/// With weight normalization the parameters are `{name}.v` (direction),
/// `{name}.g` (per-output-channel gain) and `{name}.bias`; without it the
/// raw kernel is `{name}.w`.
#[derive(Clone, Debug, PartialEq)]
pub struct Conv {
    pub name: String,
    pub c_in: usize,
    pub c_out: usize,
    pub kernel: usize,
    pub weight_norm: bool,
    pub bias: bool,
}

impl Conv {
    pub fn new(name: impl Into<String>, c_in: usize, c_out: usize, kernel: usize, weight_norm: bool) -> Self {
        Conv {
            name: name.into(),
            c_in,
            c_out,
            kernel,
            weight_norm,
            bias: true,
        }
    }

    pub fn padding(&self) -> usize {
        (self.kernel - 1) / 2
    }

    fn pname(&self, leaf: &str) -> String {
        format!("{}.{leaf}", self.name)
    }

    /// The kernel actually applied, as a backend value.
    pub fn kernel<T: Scalar, B: Backend<T>>(&self, be: &mut B, p: &Bound<B::Var>) -> Result<B::Var> {
        if self.weight_norm {
            let v = p.get(&self.pname("v"))?.clone();
            let g = p.get(&self.pname("g"))?.clone();
            be.weight_norm(&v, &g)
        } else {
            Ok(p.get(&self.pname("w"))?.clone())
        }
    }
}

impl Layer for Conv {
    fn kind(&self) -> LayerKind {
        LayerKind::Conv
    }

    fn name(&self) -> &str {
        &self.name
    }

    fn param_specs(&self) -> Vec<ParamSpec> {
        let kshape = [self.c_out, self.c_in, self.kernel, self.kernel];
        let fan_in = self.c_in * self.kernel * self.kernel;
        let mut specs = Vec::new();
        if self.weight_norm {
            specs.push(ParamSpec::new(self.pname("v"), kshape, Init::KaimingUniform { fan_in }));
            specs.push(ParamSpec::new(
                self.pname("g"),
                [self.c_out, 1, 1, 1],
                Init::NormOf(self.pname("v")),
            ));
        } else {
            specs.push(ParamSpec::new(self.pname("w"), kshape, Init::KaimingUniform { fan_in }));
        }
        if self.bias {
            specs.push(ParamSpec::new(self.pname("bias"), [self.c_out, 1, 1, 1], Init::Zeros));
        }
        specs
    }

    fn forward<T: Scalar, B: Backend<T>>(&self, be: &mut B, p: &Bound<B::Var>, x: &B::Var) -> Result<B::Var> {
        let c = be.value(x).shape().c;
        if c != self.c_in {
            return Err(Error::shape(
                "conv",
                format!("{} input channels for `{}`", self.c_in, self.name),
                be.value(x).shape(),
            ));
        }
        let w = self.kernel(be, p)?;
        let b = if self.bias {
            Some(p.get(&self.pname("bias"))?.clone())
        } else {
            None
        };
        be.conv2d(x, &w, b.as_ref(), self.padding())
    }
}

/// Direction and gain of a weight-normalized kernel.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightNormState<T: Scalar> {
    pub v: Tensor4<T>,
    pub g: Tensor4<T>,
}

impl<T: Scalar> WeightNormState<T> {
    /// Gains start at the direction norms, so the effective kernel equals `v`.
    pub fn from_kernel(v: Tensor4<T>) -> Self {
        let norms = ops::direction_norms(&v);
        let g = Tensor4::from_vec(
            [v.shape().n, 1, 1, 1],
            norms.into_iter().map(T::of).collect(),
        )
        .expect("one gain per output channel");
        WeightNormState { v, g }
    }

    /// `g * v / ||v||`, per output channel.
    pub fn effective(&self) -> Result<Tensor4<T>> {
        ops::weight_norm(&self.v, &self.g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Eager;
    use crate::nn::ParamStore;
    use crate::rng::Rng;

    #[test]
    fn raw_conv_3_to_16_has_448_params() {
        let conv = Conv::new("c", 3, 16, 3, false);
        let n: usize = conv.param_specs().iter().map(|s| s.shape.numel()).sum();
        assert_eq!(n, 448);
    }

    #[test]
    fn weight_norm_starts_at_raw_init() {
        let wn = Conv::new("c", 3, 4, 3, true);
        let store = ParamStore::<f64>::initialize(&wn.param_specs(), &mut Rng::seeded(1)).unwrap();
        let mut be = Eager;
        let p = store.bind(&mut be);
        let k = wn.kernel(&mut be, &p).unwrap();
        assert!(k.max_abs_diff(store.get("c.v").unwrap()) < 1e-14);
    }

    #[test]
    fn effective_kernel_is_scale_invariant_in_v() {
        let v = Tensor4::<f64>::from_fn([3, 2, 3, 3], |o, i, y, x| ((o * 7 + i * 5 + y * 3 + x) % 11) as f64 - 5.0);
        let state = WeightNormState::from_kernel(v.clone());
        let w = state.effective().unwrap();
        assert!(w.max_abs_diff(&v) < 1e-12);
        for lambda in [0.001, 3.0, 1e4] {
            let scaled = WeightNormState {
                v: v.map(|x| x * lambda),
                g: state.g.clone(),
            };
            assert!(scaled.effective().unwrap().max_abs_diff(&w) < 1e-11);
        }
    }
}
