use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::Tensor4;

use super::image::{images_to_tensor, ImageRGB8};
use super::patch::{augment, sample_patch_pair};
use super::resize::{degrade, DegradationSpec};

#[derive(Clone, Debug, PartialEq)]
pub struct Pair {
    pub name: String,
    /// Cropped to a multiple of the scale.
    pub hr: ImageRGB8,
    pub lr: ImageRGB8,
}

#[derive(Clone, Debug)]
pub struct Dataset {
    pub spec: DegradationSpec,
    pub pairs: Vec<Pair>,
}

/// `*.png` files in `dir`, sorted by file name.
pub fn list_pngs(dir: &Path) -> Result<Vec<PathBuf>> {
    let rd = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = Vec::new();
    for entry in rd {
        let p = entry.map_err(|e| Error::io(dir, e))?.path();
        if p.is_file() && p.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")) {
            out.push(p);
        }
    }
    out.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(out)
}

impl Dataset {
    /// Degrades every HR image with `spec`.
    pub fn from_hr_images(images: Vec<(String, ImageRGB8)>, spec: DegradationSpec) -> Result<Self> {
        spec.validate()?;
        let pairs = images
            .into_iter()
            .map(|(name, hr)| {
                let hr = hr.crop_to_multiple(spec.scale)?;
                let lr = degrade(&hr, &spec)?;
                Ok(Pair { name, hr, lr })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Dataset { spec, pairs })
    }

    /// Loads a directory of HR PNGs. LR inputs come from a sibling
    /// `LR_{BI|BD}_x{s}` directory holding files of the same name when it
    /// exists, and are generated otherwise.
    pub fn open(hr_dir: &Path, spec: DegradationSpec) -> Result<Self> {
        spec.validate()?;
        if !hr_dir.is_dir() {
            return Err(Error::Data(format!("{}: not a directory", hr_dir.display())));
        }
        let files = list_pngs(hr_dir)?;
        if files.is_empty() {
            return Err(Error::Data(format!("{}: no PNG images found", hr_dir.display())));
        }
        let lr_dir = hr_dir
            .canonicalize()
            .ok()
            .and_then(|p| p.parent().map(|d| d.join(spec.lr_dir_name())))
            .filter(|d| d.is_dir());
        let mut pairs = Vec::with_capacity(files.len());
        for f in files {
            let name = f.file_name().unwrap_or_default().to_string_lossy().into_owned();
            let hr = ImageRGB8::load(&f)?.crop_to_multiple(spec.scale).map_err(|e| Error::Data(format!("{}: {e}", f.display())))?;
            let lr = match &lr_dir {
                Some(d) => {
                    let p = d.join(&name);
                    let lr = ImageRGB8::load(&p)?;
                    if lr.width() * spec.scale != hr.width() || lr.height() * spec.scale != hr.height() {
                        return Err(Error::Data(format!(
                            "{}: {}x{} does not match HR {}x{} at x{}",
                            p.display(),
                            lr.width(),
                            lr.height(),
                            hr.width(),
                            hr.height(),
                            spec.scale
                        )));
                    }
                    lr
                }
                None => degrade(&hr, &spec)?,
            };
            pairs.push(Pair { name, hr, lr });
        }
        Ok(Dataset { spec, pairs })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// `batch` augmented patch pairs as `(lr, hr)` tensors. Each item draws
    /// an image index, a corner, then a transform, in that order.
    pub fn sample_batch(&self, batch: usize, lr_patch: usize, rng: &mut Rng) -> Result<(Tensor4<f32>, Tensor4<f32>)> {
        if self.pairs.is_empty() {
            return Err(Error::Data("dataset is empty".into()));
        }
        let mut lrs = Vec::with_capacity(batch);
        let mut hrs = Vec::with_capacity(batch);
        for _ in 0..batch {
            let pair = &self.pairs[rng.below(self.pairs.len() as u64) as usize];
            let (l, h) = sample_patch_pair(&pair.hr, &pair.lr, lr_patch, self.spec.scale, rng)
                .map_err(|e| Error::Data(format!("{}: {e}", pair.name)))?;
            let (l, h) = augment(&l, &h, rng)?;
            lrs.push(l);
            hrs.push(h);
        }
        let lr = images_to_tensor(&lrs.iter().collect::<Vec<_>>())?;
        let hr = images_to_tensor(&hrs.iter().collect::<Vec<_>>())?;
        Ok((lr, hr))
    }
}
