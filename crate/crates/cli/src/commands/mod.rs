//! One module per subcommand. Each `run` writes its report to the given
//! sink and returns the process exit code.

use std::path::Path;

use anyhow::Context as _;
use hran::data::ImageRGB8;
use hran::train::Checkpoint;

pub mod degrade;
pub mod eval;
pub mod featmaps;
pub mod gradcheck;
pub mod params;
pub mod sr;
pub mod train;

pub(crate) fn load_checkpoint(path: &Path) -> anyhow::Result<Checkpoint> {
    Checkpoint::load(path).with_context(|| format!("loading checkpoint {}", path.display()))
}

pub(crate) fn load_image(path: &Path) -> anyhow::Result<ImageRGB8> {
    Ok(ImageRGB8::load(path)?)
}
