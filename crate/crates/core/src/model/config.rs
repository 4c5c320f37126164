use std::fmt;
use std::str::FromStr;

use crate::config::{parse_bool, parse_value, KeyValue};
use crate::error::{Error, Result};
use crate::nn::{check_scale, AttentionKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Placement {
    /// Attention on a dedicated side path, aggregated by its own bank.
    Parallel,
    /// Attention gates each residual branch before the skip addition.
    InPlace,
}

impl fmt::Display for Placement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Placement::Parallel => "parallel",
            Placement::InPlace => "in_place",
        })
    }
}

impl FromStr for Placement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "parallel" => Ok(Placement::Parallel),
            "in_place" | "inplace" | "in-place" => Ok(Placement::InPlace),
            _ => Err(Error::Config(format!(
                "unknown attention placement `{s}` (expected parallel or in_place)"
            ))),
        }
    }
}

/// Architecture hyperparameters.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    pub num_rafgs: usize,
    pub blocks_per_rafg: usize,
    pub channels: usize,
    pub scale: usize,
    /// `None` disables the attention path entirely.
    pub attention: Option<AttentionKind>,
    pub placement: Placement,
    pub banks: bool,
    /// Feature width after the sub-pixel shuffle.
    pub upsample_channels: usize,
    pub weight_norm: bool,
    pub ca_reduction: usize,
    pub eca_kernel: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            num_rafgs: 3,
            blocks_per_rafg: 3,
            channels: 64,
            scale: 4,
            attention: Some(AttentionKind::Lca),
            placement: Placement::Parallel,
            banks: true,
            upsample_channels: 10,
            weight_norm: true,
            ca_reduction: 16,
            eca_kernel: 3,
        }
    }
}

impl ModelConfig {
    /// One group, one block, two channels at x2.
    pub fn tiny() -> Self {
        ModelConfig {
            num_rafgs: 1,
            blocks_per_rafg: 1,
            channels: 2,
            scale: 2,
            upsample_channels: 2,
            ..ModelConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_rafgs == 0 {
            return Err(Error::Config("num_rafgs must be at least 1".into()));
        }
        if self.blocks_per_rafg == 0 {
            return Err(Error::Config("blocks_per_rafg must be at least 1".into()));
        }
        if self.channels == 0 || self.upsample_channels == 0 {
            return Err(Error::Config("channel widths must be at least 1".into()));
        }
        check_scale(self.scale)?;
        if self.placement == Placement::InPlace && self.attention.is_none() {
            return Err(Error::Config(
                "in_place attention placement requires an attention kind".into(),
            ));
        }
        match self.attention {
            Some(AttentionKind::Ca) if self.ca_reduction == 0 || !self.channels.is_multiple_of(self.ca_reduction) => {
                Err(Error::Config(format!(
                    "channel attention needs channels ({}) divisible by ca_reduction ({})",
                    self.channels, self.ca_reduction
                )))
            }
            Some(AttentionKind::Eca) if self.eca_kernel.is_multiple_of(2) => Err(Error::Config(format!(
                "eca_kernel must be odd, got {}",
                self.eca_kernel
            ))),
            _ => Ok(()),
        }
    }

    /// Whether each group carries a parallel attention path and bank.
    pub fn has_attention_bank(&self) -> bool {
        self.attention.is_some() && self.placement == Placement::Parallel
    }

    /// Whether each group aggregates its blocks into a feature bank. Only
    /// the plain residual stack (no attention, banks off) goes without.
    pub fn has_group_feature_bank(&self) -> bool {
        self.banks || self.attention.is_some()
    }
}

impl KeyValue for ModelConfig {
    fn set(&mut self, key: &str, value: &str) -> Result<bool> {
        match key {
            "num_rafgs" => self.num_rafgs = parse_value(key, value)?,
            "blocks_per_rafg" => self.blocks_per_rafg = parse_value(key, value)?,
            "channels" => self.channels = parse_value(key, value)?,
            "scale" => self.scale = parse_value(key, value)?,
            "attention" => {
                self.attention = if value.eq_ignore_ascii_case("none") {
                    None
                } else {
                    Some(value.parse()?)
                }
            }
            "attention_placement" => self.placement = value.parse()?,
            "banks" => self.banks = parse_bool(key, value)?,
            "upsample_channels" => self.upsample_channels = parse_value(key, value)?,
            "weight_norm" => self.weight_norm = parse_bool(key, value)?,
            "ca_reduction" => self.ca_reduction = parse_value(key, value)?,
            "eca_kernel" => self.eca_kernel = parse_value(key, value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    fn entries(&self) -> Vec<(&'static str, String)> {
        vec![
            ("num_rafgs", self.num_rafgs.to_string()),
            ("blocks_per_rafg", self.blocks_per_rafg.to_string()),
            ("channels", self.channels.to_string()),
            ("scale", self.scale.to_string()),
            (
                "attention",
                self.attention.map_or("none".to_string(), |a| a.to_string()),
            ),
            ("attention_placement", self.placement.to_string()),
            ("banks", self.banks.to_string()),
            ("upsample_channels", self.upsample_channels.to_string()),
            ("weight_norm", self.weight_norm.to_string()),
            ("ca_reduction", self.ca_reduction.to_string()),
            ("eca_kernel", self.eca_kernel.to_string()),
        ]
    }
}
