//! Channel attention variants. All of them produce a sigmoid gate and
//! rescale their input with it; they differ in how the gate is computed.

use std::fmt;
use std::str::FromStr;

use crate::autodiff::Backend;
use crate::error::{Error, Result};
use crate::tensor::{Scalar, Shape};

use super::{Bound, Init, Layer, LayerKind, ParamSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AttentionKind {
    /// Lightweight channel attention: one bias-free `C x C` map on the
    /// pooled descriptor.
    Lca,
    /// Squeeze-and-excitation bottleneck `C -> C/r -> C`.
    Ca,
    /// 1-d convolution across channels of the pooled descriptor.
    Eca,
    /// Per-pixel gate from a 1x1 convolution over the full map.
    Pa,
}

impl AttentionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AttentionKind::Lca => "lca",
            AttentionKind::Ca => "ca",
            AttentionKind::Eca => "eca",
            AttentionKind::Pa => "pa",
        }
    }
}

impl fmt::Display for AttentionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AttentionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lca" => Ok(AttentionKind::Lca),
            "ca" => Ok(AttentionKind::Ca),
            "eca" => Ok(AttentionKind::Eca),
            "pa" => Ok(AttentionKind::Pa),
            _ => Err(Error::Config(format!(
                "unknown attention kind `{s}` (expected lca, ca, eca, pa or none)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Attention {
    pub name: String,
    pub kind: AttentionKind,
    pub channels: usize,
    /// CA bottleneck reduction ratio.
    pub reduction: usize,
    /// ECA kernel length.
    pub eca_kernel: usize,
}

impl Attention {
    pub fn new(name: impl Into<String>, kind: AttentionKind, channels: usize) -> Self {
        Attention {
            name: name.into(),
            kind,
            channels,
            reduction: 16,
            eca_kernel: 3,
        }
    }

    pub fn with_reduction(mut self, r: usize) -> Self {
        self.reduction = r;
        self
    }

    pub fn with_eca_kernel(mut self, k: usize) -> Self {
        self.eca_kernel = k;
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            AttentionKind::Ca if self.reduction == 0 || !self.channels.is_multiple_of(self.reduction) => {
                Err(Error::Config(format!(
                    "{}: channel attention needs channels ({}) divisible by the reduction ratio ({})",
                    self.name, self.channels, self.reduction
                )))
            }
            AttentionKind::Eca if self.eca_kernel.is_multiple_of(2) => Err(Error::Config(format!(
                "{}: ECA kernel length must be odd, got {}",
                self.name, self.eca_kernel
            ))),
            _ => Ok(()),
        }
    }

    fn pname(&self, leaf: &str) -> String {
        format!("{}.{leaf}", self.name)
    }
}

impl Layer for Attention {
    fn kind(&self) -> LayerKind {
        match self.kind {
            AttentionKind::Lca => LayerKind::Lca,
            AttentionKind::Ca => LayerKind::Ca,
            AttentionKind::Eca => LayerKind::Eca,
            AttentionKind::Pa => LayerKind::Pa,
        }
    }

    fn name(&self) -> &str {
        &self.name
    }

    fn param_specs(&self) -> Vec<ParamSpec> {
        let c = self.channels;
        match self.kind {
            AttentionKind::Lca | AttentionKind::Pa => {
                vec![ParamSpec::new(self.pname("w"), [c, c, 1, 1], Init::Zeros)]
            }
            AttentionKind::Ca => {
                let hidden = c / self.reduction.max(1);
                vec![
                    // A zero squeeze would leave both layers without gradient.
                    ParamSpec::new(self.pname("w1"), [hidden, c, 1, 1], Init::KaimingUniform { fan_in: c }),
                    ParamSpec::new(self.pname("w2"), [c, hidden, 1, 1], Init::Zeros),
                ]
            }
            AttentionKind::Eca => {
                vec![ParamSpec::new(self.pname("w"), [1, 1, 1, self.eca_kernel], Init::Zeros)]
            }
        }
    }

    fn forward<T: Scalar, B: Backend<T>>(&self, be: &mut B, p: &Bound<B::Var>, u: &B::Var) -> Result<B::Var> {
        let us = be.value(u).shape();
        if us.c != self.channels {
            return Err(Error::shape(
                "attention",
                format!("{} channels for `{}`", self.channels, self.name),
                us,
            ));
        }
        match self.kind {
            AttentionKind::Lca => lca_forward(be, u, p.get(&self.pname("w"))?),
            AttentionKind::Ca => ca_forward(be, u, p.get(&self.pname("w1"))?, p.get(&self.pname("w2"))?),
            AttentionKind::Eca => eca_forward(be, u, p.get(&self.pname("w"))?),
            AttentionKind::Pa => pa_forward(be, u, p.get(&self.pname("w"))?),
        }
    }
}

fn expect_weight<T: Scalar, B: Backend<T>>(be: &B, w: &B::Var, want: Shape, what: &'static str) -> Result<()> {
    let got = be.value(w).shape();
    if got != want {
        return Err(Error::shape(what, want, got));
    }
    Ok(())
}

/// `u_c * sigmoid(W z)_c` where `z` is the per-channel spatial mean.
pub fn lca_forward<T: Scalar, B: Backend<T>>(be: &mut B, u: &B::Var, w: &B::Var) -> Result<B::Var> {
    let c = be.value(u).shape().c;
    expect_weight(be, w, Shape::new(c, c, 1, 1), "lca weight")?;
    let z = be.global_avg_pool(u)?;
    let logits = be.conv2d(&z, w, None, 0)?;
    let alpha = be.sigmoid(&logits)?;
    be.mul_channelwise(u, &alpha)
}

/// `u_c * sigmoid(W2 relu(W1 z))_c`.
pub fn ca_forward<T: Scalar, B: Backend<T>>(be: &mut B, u: &B::Var, w1: &B::Var, w2: &B::Var) -> Result<B::Var> {
    let c = be.value(u).shape().c;
    let hidden = be.value(w1).shape().n;
    expect_weight(be, w1, Shape::new(hidden, c, 1, 1), "ca squeeze weight")?;
    expect_weight(be, w2, Shape::new(c, hidden, 1, 1), "ca excite weight")?;
    let z = be.global_avg_pool(u)?;
    let h = be.conv2d(&z, w1, None, 0)?;
    let h = be.relu(&h)?;
    let logits = be.conv2d(&h, w2, None, 0)?;
    let alpha = be.sigmoid(&logits)?;
    be.mul_channelwise(u, &alpha)
}

/// `u_c * sigmoid(conv1d_k(z))_c`, zero-padded across channels.
pub fn eca_forward<T: Scalar, B: Backend<T>>(be: &mut B, u: &B::Var, kernel: &B::Var) -> Result<B::Var> {
    let z = be.global_avg_pool(u)?;
    let logits = be.channel_conv1d(&z, kernel)?;
    let alpha = be.sigmoid(&logits)?;
    be.mul_channelwise(u, &alpha)
}

/// `u * sigmoid(conv1x1(u))`, a full `C x H x W` mask.
pub fn pa_forward<T: Scalar, B: Backend<T>>(be: &mut B, u: &B::Var, w: &B::Var) -> Result<B::Var> {
    let c = be.value(u).shape().c;
    expect_weight(be, w, Shape::new(c, c, 1, 1), "pa weight")?;
    let logits = be.conv2d(u, w, None, 0)?;
    let mask = be.sigmoid(&logits)?;
    be.mul(u, &mask)
}
