use std::path::{Path, PathBuf};

use crate::autodiff::Eager;
use crate::error::{Error, Result};
use crate::tensor::Tensor4;

use super::HranModel;

/// Channel mean of item 0, min-max stretched to `0..=255`. A constant map
/// becomes mid-gray.
pub fn feature_map_gray(t: &Tensor4<f32>) -> (usize, usize, Vec<u8>) {
    let s = t.shape();
    let plane = s.plane();
    let mut mean = vec![0f64; plane];
    for c in 0..s.c {
        let off = c * plane;
        for (m, v) in mean.iter_mut().zip(&t.data()[off..off + plane]) {
            *m += *v as f64;
        }
    }
    for m in &mut mean {
        *m /= s.c as f64;
    }
    let lo = mean.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = mean.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let px = if hi > lo {
        mean.iter().map(|m| ((m - lo) / (hi - lo) * 255.0).round() as u8).collect()
    } else {
        vec![128u8; plane]
    };
    (s.w, s.h, px)
}

/// Writes `rafg{i}_rb{j}.png` for every residual block and `rafg{i}_out.png`
/// for every group, from the first image of `lr`.
pub fn dump_feature_maps(model: &HranModel, lr: &Tensor4<f32>, out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let first = lr.batch_item(0);
    let mut be = Eager;
    let p = model.params.bind(&mut be);
    let x = std::sync::Arc::new(first);
    let trace = model.arch.forward_traced(&mut be, &p, &x)?;

    let mut written = Vec::new();
    for (i, r) in trace.rafgs.iter().enumerate() {
        let mut maps: Vec<(String, &Tensor4<f32>)> = r
            .rb_outputs
            .iter()
            .enumerate()
            .map(|(j, t)| (format!("rafg{}_rb{}.png", i + 1, j + 1), &**t))
            .collect();
        maps.push((format!("rafg{}_out.png", i + 1), &*r.out));
        for (file, t) in maps {
            let (w, h, px) = feature_map_gray(t);
            let path = out_dir.join(file);
            let img = image::GrayImage::from_raw(w as u32, h as u32, px).expect("buffer matches dimensions");
            img.save_with_format(&path, image::ImageFormat::Png).map_err(|e| match e {
                image::ImageError::IoError(io) => Error::io(&path, io),
                other => Error::Image {
                    path: path.clone(),
                    message: other.to_string(),
                },
            })?;
            written.push(path);
        }
    }
    Ok(written)
}
