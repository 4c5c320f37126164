use std::io::Write;

use hran::data::{images_to_tensor, tensor_to_image, ImageRGB8};
use hran::{HranModel, Tensor4};

use super::{load_checkpoint, load_image};
use crate::{exit, SrArgs};

/// Context pixels added around each LR tile.
pub const TILE_OVERLAP: usize = 8;
/// Inputs with more pixels than this are tiled by default.
pub const AUTO_TILE_PIXELS: usize = 1280 * 720;
pub const AUTO_TILE: usize = 256;

/// Super-resolves `img`, optionally tile by tile. Each LR tile is padded
/// with up to [`TILE_OVERLAP`] pixels of real context per side and only
/// the SR pixels of its core are kept.
pub fn super_resolve(model: &HranModel, img: &ImageRGB8, tile: Option<usize>) -> hran::Result<ImageRGB8> {
    let whole = |x: &ImageRGB8| -> hran::Result<Tensor4<f32>> { model.super_resolve(&images_to_tensor(&[x])?) };
    let Some(tile) = tile.filter(|&t| t < img.width() || t < img.height()) else {
        return tensor_to_image(&whole(img)?, 0);
    };
    if tile == 0 {
        return Err(hran::Error::Config("--tile must be positive".into()));
    }
    let s = model.config().scale;
    let (w, h) = (img.width(), img.height());
    let mut out = Tensor4::<f32>::zeros([1, 3, h * s, w * s]);
    for y0 in (0..h).step_by(tile) {
        for x0 in (0..w).step_by(tile) {
            let (cw, ch) = (tile.min(w - x0), tile.min(h - y0));
            let (ex, ey) = (x0.saturating_sub(TILE_OVERLAP), y0.saturating_sub(TILE_OVERLAP));
            let ew = (x0 + cw + TILE_OVERLAP).min(w) - ex;
            let eh = (y0 + ch + TILE_OVERLAP).min(h) - ey;
            let sr = whole(&img.crop(ex, ey, ew, eh)?)?;
            let (ox, oy) = ((x0 - ex) * s, (y0 - ey) * s);
            for c in 0..3 {
                for y in 0..ch * s {
                    for x in 0..cw * s {
                        out.set(0, c, y0 * s + y, x0 * s + x, sr.at(0, c, oy + y, ox + x));
                    }
                }
            }
        }
    }
    tensor_to_image(&out, 0)
}

pub fn run(a: &SrArgs, out: &mut dyn Write) -> anyhow::Result<i32> {
    let ck = load_checkpoint(&a.ckpt)?;
    if let Some(s) = a.scale {
        if s != ck.model.scale {
            return Err(hran::Error::Config(format!(
                "--scale {s} does not match the x{} checkpoint {}",
                ck.model.scale,
                a.ckpt.display()
            ))
            .into());
        }
    }
    let model = ck.to_model()?;
    let img = load_image(&a.input)?;
    let tile = a
        .tile
        .or((img.width() * img.height() > AUTO_TILE_PIXELS).then_some(AUTO_TILE));
    let sr = super_resolve(&model, &img, tile)?;
    sr.save(&a.out)?;
    writeln!(
        out,
        "{} {}x{} -> {} {}x{}",
        a.input.display(),
        img.width(),
        img.height(),
        a.out.display(),
        sr.width(),
        sr.height()
    )?;
    Ok(exit::OK)
}
