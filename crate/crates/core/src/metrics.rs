//! PSNR and SSIM on the luma channel with border shaving.

use crate::data::{rgb_to_ycbcr_y, FloatImage, ImageRGB8};
use crate::error::{Error, Result};

pub const DATA_RANGE: f64 = 255.0;
pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EvalProtocol {
    pub shave: usize,
}

impl EvalProtocol {
    /// Shaves `scale` pixels from every side.
    pub fn for_scale(scale: usize) -> Self {
        EvalProtocol { shave: scale }
    }
}

/// Row-major luma plane.
#[derive(Clone, Debug, PartialEq)]
pub struct Plane {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl Plane {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::InvalidArgument(format!(
                "plane buffer has {} values, {width}x{height} needs {}",
                data.len(),
                width * height
            )));
        }
        Ok(Plane { width, height, data })
    }

    pub fn filled(width: usize, height: usize, v: f64) -> Self {
        Plane {
            width,
            height,
            data: vec![v; width * height],
        }
    }

    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn shave(&self, border: usize) -> Result<Plane> {
        if 2 * border >= self.width || 2 * border >= self.height {
            return Err(Error::InvalidArgument(format!(
                "shave {border} leaves nothing of a {}x{} image",
                self.width, self.height
            )));
        }
        let (w, h) = (self.width - 2 * border, self.height - 2 * border);
        let mut data = Vec::with_capacity(w * h);
        for y in border..border + h {
            data.extend_from_slice(&self.data[y * self.width + border..y * self.width + border + w]);
        }
        Ok(Plane { width: w, height: h, data })
    }
}

impl From<FloatImage> for Plane {
    fn from(f: FloatImage) -> Self {
        debug_assert_eq!(f.channels, 1);
        Plane {
            width: f.width,
            height: f.height,
            data: f.data,
        }
    }
}

pub fn y_plane(img: &ImageRGB8) -> Plane {
    rgb_to_ycbcr_y(img).into()
}

fn same_dims(a: &Plane, b: &Plane) -> Result<()> {
    if (a.width, a.height) != (b.width, b.height) {
        return Err(Error::InvalidArgument(format!(
            "image sizes differ: {}x{} vs {}x{}",
            a.width, a.height, b.width, b.height
        )));
    }
    Ok(())
}

/// `10 log10(255^2 / MSE)`; `+inf` for identical planes.
pub fn psnr_plane(a: &Plane, b: &Plane) -> Result<f64> {
    same_dims(a, b)?;
    let sse: f64 = a.data.iter().zip(&b.data).map(|(x, y)| (x - y) * (x - y)).sum();
    if sse == 0.0 {
        return Ok(f64::INFINITY);
    }
    let mse = sse / a.data.len() as f64;
    Ok(10.0 * (DATA_RANGE * DATA_RANGE / mse).log10())
}

pub fn psnr_y(sr: &ImageRGB8, hr: &ImageRGB8, protocol: EvalProtocol) -> Result<f64> {
    let (a, b) = (y_plane(sr), y_plane(hr));
    same_dims(&a, &b)?;
    psnr_plane(&a.shave(protocol.shave)?, &b.shave(protocol.shave)?)
}

/// Normalized 11x11 Gaussian window, row-major.
pub fn ssim_window() -> Vec<f64> {
    crate::data::gaussian_kernel_2d(SSIM_WINDOW, SSIM_SIGMA)
}

/// Mean SSIM over every full window position.
pub fn ssim_plane(a: &Plane, b: &Plane) -> Result<f64> {
    same_dims(a, b)?;
    let k = SSIM_WINDOW;
    if a.width < k || a.height < k {
        return Err(Error::InvalidArgument(format!(
            "SSIM needs at least {k}x{k} pixels, got {}x{}",
            a.width, a.height
        )));
    }
    let g = crate::data::gaussian_kernel(k, SSIM_SIGMA);
    let (w, h) = (a.width, a.height);
    let (ow, oh) = (w - k + 1, h - k + 1);

    // Separable filtering of the five moment images; horizontal pass first.
    let moments: [Box<dyn Fn(usize) -> f64>; 5] = [
        Box::new(|i| a.data[i]),
        Box::new(|i| b.data[i]),
        Box::new(|i| a.data[i] * a.data[i]),
        Box::new(|i| b.data[i] * b.data[i]),
        Box::new(|i| a.data[i] * b.data[i]),
    ];
    let filtered: Vec<Vec<f64>> = moments
        .iter()
        .map(|m| {
            let mut hpass = vec![0.0; ow * h];
            for y in 0..h {
                for x in 0..ow {
                    hpass[y * ow + x] = (0..k).map(|t| g[t] * m(y * w + x + t)).sum();
                }
            }
            let mut out = vec![0.0; ow * oh];
            for y in 0..oh {
                for x in 0..ow {
                    out[y * ow + x] = (0..k).map(|t| g[t] * hpass[(y + t) * ow + x]).sum();
                }
            }
            out
        })
        .collect();

    let c1 = (SSIM_K1 * DATA_RANGE).powi(2);
    let c2 = (SSIM_K2 * DATA_RANGE).powi(2);
    let mut total = 0.0;
    #[allow(clippy::needless_range_loop)]
    for i in 0..ow * oh {
        let (mu1, mu2) = (filtered[0][i], filtered[1][i]);
        let s11 = filtered[2][i] - mu1 * mu1;
        let s22 = filtered[3][i] - mu2 * mu2;
        let s12 = filtered[4][i] - mu1 * mu2;
        total += ((2.0 * mu1 * mu2 + c1) * (2.0 * s12 + c2)) / ((mu1 * mu1 + mu2 * mu2 + c1) * (s11 + s22 + c2));
    }
    Ok(total / (ow * oh) as f64)
}

pub fn ssim_y(sr: &ImageRGB8, hr: &ImageRGB8, protocol: EvalProtocol) -> Result<f64> {
    let (a, b) = (y_plane(sr), y_plane(hr));
    same_dims(&a, &b)?;
    ssim_plane(&a.shave(protocol.shave)?, &b.shave(protocol.shave)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    #[test]
    fn psnr_reference_values() {
        let a = Plane::filled(1, 1, 0.0);
        let b = Plane::filled(1, 1, 255.0);
        assert_eq!(psnr_plane(&a, &b).unwrap(), 0.0);
        let a = Plane::filled(6, 5, 100.0);
        let b = Plane::filled(6, 5, 101.0);
        assert!((psnr_plane(&a, &b).unwrap() - 48.1308).abs() < 1e-4);
        assert_eq!(psnr_plane(&a, &a).unwrap(), f64::INFINITY);
    }

    #[test]
    fn ssim_constant_luminance_only() {
        let a = Plane::filled(16, 16, 100.0);
        let b = Plane::filled(16, 16, 110.0);
        let c1 = 6.5025;
        let want = (2.0 * 100.0 * 110.0 + c1) / (100.0f64 * 100.0 + 110.0 * 110.0 + c1);
        assert!((ssim_plane(&a, &b).unwrap() - want).abs() < 1e-12);
        assert!((want - 0.99547).abs() < 1e-5);
    }

    #[test]
    fn ssim_inverted_is_negative() {
        let mut r = Rng::seeded(4);
        let img = ImageRGB8::from_fn(24, 24, |_, _| {
            let v = if r.coin() { 255 } else { 0 };
            [v, v, v]
        })
        .unwrap();
        let inv = ImageRGB8::new(24, 24, img.pixels().iter().map(|v| 255 - v).collect()).unwrap();
        assert!(ssim_y(&inv, &img, EvalProtocol { shave: 0 }).unwrap() < 0.0);
        assert!((ssim_y(&img, &img, EvalProtocol { shave: 2 }).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn size_errors() {
        let a = ImageRGB8::filled(12, 12, [0, 0, 0]).unwrap();
        let b = ImageRGB8::filled(12, 10, [0, 0, 0]).unwrap();
        assert!(psnr_y(&a, &b, EvalProtocol { shave: 0 }).is_err());
        assert!(ssim_y(&a, &a, EvalProtocol { shave: 1 }).is_err());
        assert!(psnr_y(&a, &a, EvalProtocol { shave: 6 }).is_err());
    }
}
