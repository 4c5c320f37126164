use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::autodiff::{Backend, Eager};
use crate::error::{Error, Result};
use crate::nn::{Attention, Bound, Conv, Layer, ParamSpec, ParamStore, Upsampler};
use crate::rng::{Rng, INIT_STREAM};
use crate::tensor::{Scalar, Shape, Tensor4};

use super::rafg::{attention_for, Rafg, RafgOutput};
use super::ModelConfig;

/// Network structure without weights.
#[derive(Clone, Debug, PartialEq)]
pub struct Hran {
    pub config: ModelConfig,
    pub head: Conv,
    pub rafgs: Vec<Rafg>,
    pub global_fbank: Option<Conv>,
    pub global_abank: Option<(Conv, Attention)>,
    pub upsampler: Upsampler,
}

#[derive(Clone, Debug)]
pub struct ForwardTrace<V> {
    pub output: V,
    pub rafgs: Vec<RafgOutput<V>>,
}

impl Hran {
    pub fn new(config: &ModelConfig) -> Result<Self> {
        config.validate()?;
        let c = config.channels;
        let g = config.num_rafgs;
        let wn = config.weight_norm;
        let rafgs = (1..=g).map(|i| Rafg::new(i, config)).collect();
        let global_fbank = config
            .banks
            .then(|| Conv::new("global.fbank.conv", g * c, c, 1, wn));
        let global_abank = if config.banks && config.has_attention_bank() {
            let kind = config.attention.map_or("att", |k| k.as_str());
            attention_for(config, format!("global.abank.{kind}"), c)
                .map(|att| (Conv::new("global.abank.conv", g * c, c, 1, wn), att))
        } else {
            None
        };
        Ok(Hran {
            config: config.clone(),
            head: Conv::new("head.conv0", 3, c, 3, wn),
            rafgs,
            global_fbank,
            global_abank,
            upsampler: Upsampler::new("head", c, config.upsample_channels, config.scale, wn)?,
        })
    }

    pub fn param_specs(&self) -> Vec<ParamSpec> {
        let mut specs = self.head.param_specs();
        for r in &self.rafgs {
            specs.extend(r.param_specs());
        }
        if let Some(conv) = &self.global_fbank {
            specs.extend(conv.param_specs());
        }
        if let Some((conv, att)) = &self.global_abank {
            specs.extend(conv.param_specs());
            specs.extend(att.param_specs());
        }
        specs.extend(self.upsampler.param_specs());
        specs
    }

    pub fn count_params(&self) -> ParamCount {
        ParamCount::from_specs(&self.param_specs())
    }

    pub fn forward<T: Scalar, B: Backend<T>>(&self, be: &mut B, p: &Bound<B::Var>, x: &B::Var) -> Result<B::Var> {
        Ok(self.forward_traced(be, p, x)?.output)
    }

    /// Forward pass keeping every group's intermediate outputs. Not clamped.
    pub fn forward_traced<T: Scalar, B: Backend<T>>(
        &self,
        be: &mut B,
        p: &Bound<B::Var>,
        x: &B::Var,
    ) -> Result<ForwardTrace<B::Var>> {
        let xv = be.value(x);
        let xs = xv.shape();
        if xs.c != 3 || xs.h == 0 || xs.w == 0 || xs.n == 0 {
            return Err(Error::shape("hran", "n x 3 x h x w with n, h, w >= 1", xs));
        }
        if !xv.is_finite() {
            return Err(Error::NonFinite { op: "hran input".into() });
        }

        let f0 = self.head.forward(be, p, x)?;
        let mut h = f0.clone();
        let mut traces = Vec::with_capacity(self.rafgs.len());
        for r in &self.rafgs {
            let t = r.forward(be, p, &h)?;
            h = t.out.clone();
            traces.push(t);
        }

        let trunk = match &self.global_fbank {
            Some(conv) => {
                let parts: Vec<B::Var> = traces
                    .iter()
                    .map(|t| t.fbank_out.clone().unwrap_or_else(|| t.out.clone()))
                    .collect();
                let cat = be.concat_channels(&parts)?;
                let mut f = conv.forward(be, p, &cat)?;
                if let Some((aconv, att)) = &self.global_abank {
                    let parts: Vec<B::Var> = traces
                        .iter()
                        .map(|t| t.abank_out.clone().expect("attention bank present in every group"))
                        .collect();
                    let cat = be.concat_channels(&parts)?;
                    let z = aconv.forward(be, p, &cat)?;
                    let a = att.forward(be, p, &z)?;
                    f = be.add(&f, &a)?;
                }
                f
            }
            None => h,
        };
        let f = be.add(&trunk, &f0)?;
        let output = self.upsampler.forward(be, p, &f)?;
        Ok(ForwardTrace { output, rafgs: traces })
    }
}

/// Exact scalar parameter count with a per-name breakdown.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamCount {
    pub total: usize,
    pub by_name: Vec<(String, Shape, usize)>,
}

impl ParamCount {
    pub fn from_specs(specs: &[ParamSpec]) -> Self {
        let by_name: Vec<(String, Shape, usize)> = specs
            .iter()
            .map(|s| (s.name.clone(), s.shape, s.shape.numel()))
            .collect();
        ParamCount {
            total: by_name.iter().map(|e| e.2).sum(),
            by_name,
        }
    }

    /// Totals grouped by layer (parameter name minus its last component),
    /// in first-appearance order.
    pub fn by_layer(&self) -> Vec<(String, usize)> {
        let mut out: Vec<(String, usize)> = Vec::new();
        for (name, _, n) in &self.by_name {
            let layer = name.rsplit_once('.').map_or(name.as_str(), |(l, _)| l);
            match out.last_mut() {
                Some((l, total)) if l == layer => *total += n,
                _ => out.push((layer.to_string(), *n)),
            }
        }
        out
    }

    /// Totals per top-level block (`head`, `rafg1`, `global`, ...).
    pub fn by_block(&self) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        for (name, _, n) in &self.by_name {
            let block = name.split('.').next().unwrap_or(name);
            *out.entry(block.to_string()).or_insert(0) += n;
        }
        out
    }

    pub fn table(&self) -> String {
        let width = self.by_name.iter().map(|e| e.0.len()).max().unwrap_or(4).max(5);
        let mut s = String::new();
        let _ = writeln!(s, "{:<width$}  {:>14}  {:>10}", "name", "shape", "count");
        for (name, shape, n) in &self.by_name {
            let _ = writeln!(s, "{name:<width$}  {:>14}  {n:>10}", shape.to_string());
        }
        let _ = writeln!(s, "{:<width$}  {:>14}  {:>10}", "total", "", self.total);
        s
    }

    pub fn key_values(&self) -> String {
        let mut s = String::new();
        for (name, shape, n) in &self.by_name {
            let _ = writeln!(s, "param.{name} = {n} # {shape}");
        }
        let _ = writeln!(s, "total = {}", self.total);
        s
    }
}

/// Architecture plus `f32` weights.
#[derive(Clone, Debug)]
pub struct HranModel {
    pub arch: Hran,
    pub params: ParamStore<f32>,
}

impl HranModel {
    /// Freshly initialized weights drawn from the reserved init stream of
    /// `seed`.
    pub fn new(config: &ModelConfig, seed: u64) -> Result<Self> {
        let arch = Hran::new(config)?;
        let params = ParamStore::initialize(&arch.param_specs(), &mut Rng::stream(seed, INIT_STREAM))?;
        Ok(HranModel { arch, params })
    }

    /// Pairs an architecture with existing weights, checking every name
    /// and shape.
    pub fn from_params(config: &ModelConfig, params: ParamStore<f32>) -> Result<Self> {
        let arch = Hran::new(config)?;
        let specs = arch.param_specs();
        for s in &specs {
            let t = params.get(&s.name)?;
            if t.shape() != s.shape {
                return Err(Error::shape("parameter", format!("{} for `{}`", s.shape, s.name), t.shape()));
            }
        }
        if params.len() != specs.len() {
            let extra = params
                .names()
                .find(|n| !specs.iter().any(|s| s.name == *n))
                .unwrap_or_default()
                .to_string();
            return Err(Error::InvalidArgument(format!("unexpected parameter `{extra}`")));
        }
        Ok(HranModel { arch, params })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.arch.config
    }

    /// Inference on a batch in `[0, 1]`; output clamped to `[0, 1]`.
    pub fn super_resolve(&self, lr: &Tensor4<f32>) -> Result<Tensor4<f32>> {
        let mut be = Eager;
        let p = self.params.bind(&mut be);
        let x = be.constant(lr.clone());
        let out = self.arch.forward(&mut be, &p, &x)?;
        Ok(out.map(|v| v.clamp(0.0, 1.0)))
    }
}

pub fn build_variant(config: &ModelConfig, seed: u64) -> Result<HranModel> {
    HranModel::new(config, seed)
}

pub fn count_params(model: &HranModel) -> ParamCount {
    model.arch.count_params()
}
