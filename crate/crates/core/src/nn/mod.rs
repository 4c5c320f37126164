//! Parameterized layers built from the autodiff primitives.

mod attention;
mod conv;
mod params;
mod residual;
mod upsampler;

pub use attention::{ca_forward, eca_forward, lca_forward, pa_forward, Attention, AttentionKind};
pub use conv::{Conv, WeightNormState};
pub use params::{Bound, Init, ParamSpec, ParamStore};
pub use residual::ResidualBlock;
pub use upsampler::{check_scale, Upsampler, SUPPORTED_SCALES};

use crate::autodiff::Backend;
use crate::error::Result;
use crate::tensor::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LayerKind {
    ResidualBlock,
    Lca,
    Ca,
    Eca,
    Pa,
    Conv,
    Upsampler,
}

pub trait Layer {
    fn kind(&self) -> LayerKind;

    fn name(&self) -> &str;

    /// Parameters in registration order, with fully-qualified names.
    fn param_specs(&self) -> Vec<ParamSpec>;

    fn forward<T: Scalar, B: Backend<T>>(&self, be: &mut B, p: &Bound<B::Var>, x: &B::Var) -> Result<B::Var>;
}
