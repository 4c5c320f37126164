use crate::error::{Error, Result};
use crate::rng::Rng;

use super::image::ImageRGB8;

/// Uniformly placed LR patch and the HR patch covering the same area.
pub fn sample_patch_pair(
    hr: &ImageRGB8,
    lr: &ImageRGB8,
    lr_patch: usize,
    scale: usize,
    rng: &mut Rng,
) -> Result<(ImageRGB8, ImageRGB8)> {
    if lr.width() < lr_patch || lr.height() < lr_patch {
        return Err(Error::Data(format!(
            "LR image {}x{} is smaller than the {lr_patch}x{lr_patch} patch; HR images need at least {}x{} pixels",
            lr.width(),
            lr.height(),
            lr_patch * scale,
            lr_patch * scale
        )));
    }
    if hr.width() < lr.width() * scale || hr.height() < lr.height() * scale {
        return Err(Error::Data(format!(
            "HR image {}x{} does not cover LR {}x{} at x{scale}",
            hr.width(),
            hr.height(),
            lr.width(),
            lr.height()
        )));
    }
    let x = rng.below((lr.width() - lr_patch + 1) as u64) as usize;
    let y = rng.below((lr.height() - lr_patch + 1) as u64) as usize;
    let p = lr_patch * scale;
    Ok((
        lr.crop(x, y, lr_patch, lr_patch)?,
        hr.crop(x * scale, y * scale, p, p)?,
    ))
}

/// Horizontal flip followed by `rot` clockwise quarter turns.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Transform {
    pub flip: bool,
    pub rot: u8,
}

impl Transform {
    pub fn sample(rng: &mut Rng) -> Self {
        let flip = rng.coin();
        let rot = rng.below(4) as u8;
        Transform { flip, rot }
    }

    pub fn apply(&self, img: &ImageRGB8) -> ImageRGB8 {
        let mut out = if self.flip {
            img.flip_horizontal()
        } else {
            img.clone()
        };
        for _ in 0..self.rot % 4 {
            out = out.rot90();
        }
        out
    }
}

/// Applies one random transform to both patches.
pub fn augment(lr: &ImageRGB8, hr: &ImageRGB8, rng: &mut Rng) -> Result<(ImageRGB8, ImageRGB8)> {
    for p in [lr, hr] {
        if p.width() != p.height() {
            return Err(Error::InvalidArgument(format!(
                "rotation augmentation needs square patches, got {}x{}",
                p.width(),
                p.height()
            )));
        }
    }
    let t = Transform::sample(rng);
    Ok((t.apply(lr), t.apply(hr)))
}
