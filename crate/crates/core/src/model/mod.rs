//! The full super-resolution network and its ablation variants.

mod config;
mod featmaps;
mod hran;
mod rafg;

pub use config::{ModelConfig, Placement};
pub use featmaps::{dump_feature_maps, feature_map_gray};
pub use hran::{build_variant, count_params, ForwardTrace, Hran, HranModel, ParamCount};
pub use rafg::{Rafg, RafgOutput};
