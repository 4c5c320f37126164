use crate::autodiff::Backend;
use crate::error::{Error, Result};
use crate::nn::{Attention, Bound, Conv, Layer, ParamSpec, ResidualBlock};
use crate::tensor::Scalar;

use super::{ModelConfig, Placement};

/// Intermediate results of one group, kept for the global banks and for
/// feature-map export.
#[derive(Clone, Debug)]
pub struct RafgOutput<V> {
    pub out: V,
    pub fbank_out: Option<V>,
    pub abank_out: Option<V>,
    pub rb_outputs: Vec<V>,
}

/// Residual attention feature group: a chain of residual blocks with an
/// optional parallel attention tap on each block and banks aggregating
/// both paths.
#[derive(Clone, Debug, PartialEq)]
pub struct Rafg {
    pub name: String,
    pub channels: usize,
    pub blocks: Vec<ResidualBlock>,
    /// One per block when attention runs in parallel.
    pub attentions: Vec<Attention>,
    pub fbank: Option<Conv>,
    pub abank: Option<(Conv, Attention)>,
}

pub(crate) fn attention_for(cfg: &ModelConfig, name: String, channels: usize) -> Option<Attention> {
    cfg.attention.map(|kind| {
        Attention::new(name, kind, channels)
            .with_reduction(cfg.ca_reduction)
            .with_eca_kernel(cfg.eca_kernel)
    })
}

impl Rafg {
    /// Group number `index` (1-based) under `cfg`.
    pub fn new(index: usize, cfg: &ModelConfig) -> Self {
        let name = format!("rafg{index}");
        let c = cfg.channels;
        let b = cfg.blocks_per_rafg;
        let att_name = |j: usize| {
            let kind = cfg.attention.map_or("att", |k| k.as_str());
            format!("{name}.{kind}{j}")
        };
        let mut blocks = Vec::with_capacity(b);
        let mut attentions = Vec::new();
        for j in 1..=b {
            let mut rb = ResidualBlock::new(format!("{name}.rb{j}"), c, cfg.weight_norm);
            if let Some(att) = attention_for(cfg, att_name(j), c) {
                match cfg.placement {
                    Placement::InPlace => rb = rb.with_inplace_attention(att),
                    Placement::Parallel => attentions.push(att),
                }
            }
            blocks.push(rb);
        }
        let fbank = cfg
            .has_group_feature_bank()
            .then(|| Conv::new(format!("{name}.fbank.conv"), b * c, c, 1, cfg.weight_norm));
        let abank = if cfg.has_attention_bank() {
            let kind = cfg.attention.map_or("att", |k| k.as_str());
            attention_for(cfg, format!("{name}.abank.{kind}"), c)
                .map(|att| (Conv::new(format!("{name}.abank.conv"), b * c, c, 1, cfg.weight_norm), att))
        } else {
            None
        };
        Rafg {
            name,
            channels: c,
            blocks,
            attentions,
            fbank,
            abank,
        }
    }

    pub fn param_specs(&self) -> Vec<ParamSpec> {
        let mut specs = Vec::new();
        for (j, rb) in self.blocks.iter().enumerate() {
            specs.extend(rb.param_specs());
            if let Some(att) = self.attentions.get(j) {
                specs.extend(att.param_specs());
            }
        }
        if let Some(conv) = &self.fbank {
            specs.extend(conv.param_specs());
        }
        if let Some((conv, att)) = &self.abank {
            specs.extend(conv.param_specs());
            specs.extend(att.param_specs());
        }
        specs
    }

    pub fn forward<T: Scalar, B: Backend<T>>(
        &self,
        be: &mut B,
        p: &Bound<B::Var>,
        x: &B::Var,
    ) -> Result<RafgOutput<B::Var>> {
        let xs = be.value(x).shape();
        if xs.c != self.channels {
            return Err(Error::shape(
                "rafg",
                format!("{} channels for `{}`", self.channels, self.name),
                xs,
            ));
        }
        let mut h = x.clone();
        let mut rb_outputs = Vec::with_capacity(self.blocks.len());
        let mut taps = Vec::with_capacity(self.attentions.len());
        for (j, rb) in self.blocks.iter().enumerate() {
            h = rb.forward(be, p, &h)?;
            if let Some(att) = self.attentions.get(j) {
                taps.push(att.forward(be, p, &h)?);
            }
            rb_outputs.push(h.clone());
        }

        let fbank_out = match &self.fbank {
            Some(conv) => {
                let cat = be.concat_channels(&rb_outputs)?;
                Some(conv.forward(be, p, &cat)?)
            }
            None => None,
        };
        let abank_out = match &self.abank {
            Some((conv, att)) => {
                let cat = be.concat_channels(&taps)?;
                let z = conv.forward(be, p, &cat)?;
                Some(att.forward(be, p, &z)?)
            }
            None => None,
        };
        let out = match (&fbank_out, &abank_out) {
            (Some(f), Some(a)) => be.add(f, a)?,
            (Some(f), None) => f.clone(),
            (None, _) => h,
        };
        Ok(RafgOutput {
            out,
            fbank_out,
            abank_out,
            rb_outputs,
        })
    }
}
