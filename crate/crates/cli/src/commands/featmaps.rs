use std::io::Write;

use hran::data::images_to_tensor;
use hran::model::dump_feature_maps;

use super::{load_checkpoint, load_image};
use crate::{exit, FeatmapsArgs};

pub fn run(a: &FeatmapsArgs, out: &mut dyn Write) -> anyhow::Result<i32> {
    let model = load_checkpoint(&a.ckpt)?.to_model()?;
    let img = load_image(&a.input)?;
    let x = images_to_tensor::<f32>(&[&img])?;
    for p in dump_feature_maps(&model, &x, &a.out)? {
        writeln!(out, "{}", p.display())?;
    }
    Ok(exit::OK)
}
