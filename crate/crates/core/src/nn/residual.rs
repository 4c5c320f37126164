use crate::autodiff::Backend;
use crate::error::{Error, Result};
use crate::tensor::Scalar;

use super::{Attention, Bound, Conv, Layer, LayerKind, ParamSpec};

/// `x + conv2(relu(conv1(x)))`, no normalization layers, no residual
/// scaling. With in-place attention the branch is gated before the
/// addition: `x + att(conv2(relu(conv1(x))))`.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualBlock {
    pub name: String,
    pub channels: usize,
    pub conv1: Conv,
    pub conv2: Conv,
    pub inplace_attention: Option<Attention>,
}

impl ResidualBlock {
    pub fn new(name: impl Into<String>, channels: usize, weight_norm: bool) -> Self {
        let name = name.into();
        ResidualBlock {
            conv1: Conv::new(format!("{name}.conv1"), channels, channels, 3, weight_norm),
            conv2: Conv::new(format!("{name}.conv2"), channels, channels, 3, weight_norm),
            name,
            channels,
            inplace_attention: None,
        }
    }

    pub fn with_inplace_attention(mut self, att: Attention) -> Self {
        self.inplace_attention = Some(att);
        self
    }
}

impl Layer for ResidualBlock {
    fn kind(&self) -> LayerKind {
        LayerKind::ResidualBlock
    }

    fn name(&self) -> &str {
        &self.name
    }

    fn param_specs(&self) -> Vec<ParamSpec> {
        let mut specs = self.conv1.param_specs();
        specs.extend(self.conv2.param_specs());
        if let Some(att) = &self.inplace_attention {
            specs.extend(att.param_specs());
        }
        specs
    }

    fn forward<T: Scalar, B: Backend<T>>(&self, be: &mut B, p: &Bound<B::Var>, x: &B::Var) -> Result<B::Var> {
        let xs = be.value(x).shape();
        if xs.c != self.channels {
            return Err(Error::shape(
                "residual_block",
                format!("{} channels for `{}`", self.channels, self.name),
                xs,
            ));
        }
        let h = self.conv1.forward(be, p, x)?;
        let h = be.relu(&h)?;
        let mut h = self.conv2.forward(be, p, &h)?;
        if let Some(att) = &self.inplace_attention {
            h = att.forward(be, p, &h)?;
        }
        be.add(x, &h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Eager;
    use crate::nn::ParamStore;
    use crate::tensor::Tensor4;

    fn zero_store(rb: &ResidualBlock) -> ParamStore<f64> {
        let mut store = ParamStore::default();
        for s in rb.param_specs() {
            store.insert(s.name, Tensor4::zeros(s.shape)).unwrap();
        }
        store
    }

    #[test]
    fn zero_branch_is_identity() {
        let rb = ResidualBlock::new("rb", 3, false);
        let store = zero_store(&rb);
        let x = Tensor4::<f64>::from_fn([2, 3, 4, 4], |n, c, y, x| (n + 2 * c + 3 * y + 5 * x) as f64 * 0.1 - 1.0);
        let mut be = Eager;
        let p = store.bind(&mut be);
        let xv = be.constant(x.clone());
        assert_eq!(*rb.forward(&mut be, &p, &xv).unwrap(), x);
    }

    #[test]
    fn zero_input_passes_bias_through_two_layers() {
        // Single channel: conv1 bias 0.7 -> relu -> 0.7; conv2 all-ones 3x3
        // kernel sums the zero-padded neighbourhood of a constant 0.7 map,
        // then adds bias -0.2.
        let rb = ResidualBlock::new("rb", 1, false);
        let mut store = zero_store(&rb);
        store.get_mut("rb.conv1.bias").unwrap().data_mut()[0] = 0.7;
        store.get_mut("rb.conv2.w").unwrap().data_mut().fill(1.0);
        store.get_mut("rb.conv2.bias").unwrap().data_mut()[0] = -0.2;
        let mut be = Eager;
        let p = store.bind(&mut be);
        let xv = be.constant(Tensor4::<f64>::zeros([1, 1, 3, 3]));
        let out = rb.forward(&mut be, &p, &xv).unwrap();
        let corner = 4.0 * 0.7 - 0.2;
        let edge = 6.0 * 0.7 - 0.2;
        let center = 9.0 * 0.7 - 0.2;
        let want = [corner, edge, corner, edge, center, edge, corner, edge, corner];
        for (g, w) in out.data().iter().zip(want) {
            assert!((g - w).abs() < 1e-12);
        }
    }

    #[test]
    fn channel_mismatch_errors() {
        let rb = ResidualBlock::new("rb", 3, false);
        let store = zero_store(&rb);
        let mut be = Eager;
        let p = store.bind(&mut be);
        let xv = be.constant(Tensor4::<f64>::zeros([1, 2, 3, 3]));
        assert!(rb.forward(&mut be, &p, &xv).is_err());
    }
}
