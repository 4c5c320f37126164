use std::fmt;
use std::str::FromStr;

use crate::config::{parse_bool, parse_value, KeyValue};
use crate::error::{Error, Result};

use super::image::{FloatImage, ImageRGB8};

/// Cubic convolution parameter.
pub const CUBIC_A: f64 = -0.5;

pub fn cubic(x: f64) -> f64 {
    let a = CUBIC_A;
    let x = x.abs();
    if x <= 1.0 {
        ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0
    } else if x < 2.0 {
        ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a
    } else {
        0.0
    }
}

/// Taps for a sample `t` in `[0, 1)` past the second of four neighbours.
pub fn cubic_weights(t: f64) -> [f64; 4] {
    [cubic(1.0 + t), cubic(t), cubic(1.0 - t), cubic(2.0 - t)]
}

struct Taps {
    index: Vec<usize>,
    weight: Vec<f64>,
}

fn axis_taps(in_len: usize, out_len: usize, antialias: bool) -> Vec<Taps> {
    let scale = in_len as f64 / out_len as f64;
    let stretch = if antialias && scale > 1.0 { scale } else { 1.0 };
    let support = 2.0 * stretch;
    (0..out_len)
        .map(|o| {
            let center = (o as f64 + 0.5) * scale - 0.5;
            let lo = (center - support).ceil() as isize;
            let hi = (center + support).floor() as isize;
            let mut index = Vec::new();
            let mut weight = Vec::new();
            for i in lo..=hi {
                let w = cubic((center - i as f64) / stretch);
                if w != 0.0 {
                    index.push(i.clamp(0, in_len as isize - 1) as usize);
                    weight.push(w);
                }
            }
            let total: f64 = weight.iter().sum();
            for w in &mut weight {
                *w /= total;
            }
            Taps { index, weight }
        })
        .collect()
}

/// `x[a] + sum w (x[i] - x[a])`: equal to the plain weighted sum for
/// normalized weights, but exact on constant input.
fn apply_taps(taps: &Taps, get: impl Fn(usize) -> f64) -> f64 {
    let anchor = get(taps.index[0]);
    let mut acc = 0.0;
    for (&i, &w) in taps.index.iter().zip(&taps.weight) {
        acc += w * (get(i) - anchor);
    }
    anchor + acc
}

/// Separable cubic resampling; coordinates outside the image clamp to the
/// edge. With `antialias`, downscaling stretches the kernel by the scale
/// factor. Output is clamped to `[0, 1]`.
pub fn bicubic_resize(img: &FloatImage, out_w: usize, out_h: usize, antialias: bool) -> Result<FloatImage> {
    if out_w == 0 || out_h == 0 {
        return Err(Error::InvalidArgument(format!("resize target {out_w}x{out_h} is empty")));
    }
    let (w, h) = (img.width, img.height);
    let xt = axis_taps(w, out_w, antialias);
    let yt = axis_taps(h, out_h, antialias);
    let mut data = Vec::with_capacity(img.channels * out_w * out_h);
    let mut tmp = vec![0.0; out_w * h];
    for c in 0..img.channels {
        let src = img.plane(c);
        for y in 0..h {
            let row = &src[y * w..(y + 1) * w];
            for (x, t) in xt.iter().enumerate() {
                tmp[y * out_w + x] = apply_taps(t, |i| row[i]);
            }
        }
        for t in &yt {
            for x in 0..out_w {
                data.push(apply_taps(t, |i| tmp[i * out_w + x]).clamp(0.0, 1.0));
            }
        }
    }
    FloatImage::new(out_w, out_h, img.channels, data)
}

/// Normalized 1-d Gaussian of odd length `size`.
pub fn gaussian_kernel(size: usize, sigma: f64) -> Vec<f64> {
    let r = (size / 2) as f64;
    let k: Vec<f64> = (0..size)
        .map(|i| {
            let d = i as f64 - r;
            (-d * d / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let total: f64 = k.iter().sum();
    k.into_iter().map(|v| v / total).collect()
}

/// Normalized `size x size` Gaussian, row-major.
pub fn gaussian_kernel_2d(size: usize, sigma: f64) -> Vec<f64> {
    let g = gaussian_kernel(size, sigma);
    let k: Vec<f64> = g.iter().flat_map(|a| g.iter().map(move |b| a * b)).collect();
    let total: f64 = k.iter().sum();
    k.into_iter().map(|v| v / total).collect()
}

/// Mirror without repeating the edge sample.
fn reflect(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let m = i.rem_euclid(period);
    if m < n as isize {
        m as usize
    } else {
        (period - m) as usize
    }
}

/// Separable Gaussian blur with reflect padding.
pub fn gaussian_blur(img: &FloatImage, size: usize, sigma: f64) -> FloatImage {
    let k = gaussian_kernel(size, sigma);
    let r = (size / 2) as isize;
    let (w, h) = (img.width, img.height);
    let taps = |len: usize| -> Vec<Taps> {
        (0..len as isize)
            .map(|o| Taps {
                // Anchor on the center sample.
                index: std::iter::once(o)
                    .chain((-r..=r).map(|d| o + d))
                    .map(|i| reflect(i, len))
                    .collect(),
                weight: std::iter::once(0.0).chain(k.iter().copied()).collect(),
            })
            .collect()
    };
    let xt = taps(w);
    let yt = taps(h);
    let mut data = Vec::with_capacity(img.data.len());
    let mut tmp = vec![0.0; w * h];
    for c in 0..img.channels {
        let src = img.plane(c);
        for y in 0..h {
            for (x, t) in xt.iter().enumerate() {
                tmp[y * w + x] = apply_taps(t, |i| src[y * w + i]);
            }
        }
        for t in &yt {
            for x in 0..w {
                data.push(apply_taps(t, |i| tmp[i * w + x]));
            }
        }
    }
    FloatImage {
        data,
        ..img.clone()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Degradation {
    /// Bicubic downscale.
    Bi,
    /// Gaussian blur, then bicubic downscale.
    Bd,
}

impl fmt::Display for Degradation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Degradation::Bi => "BI",
            Degradation::Bd => "BD",
        })
    }
}

impl FromStr for Degradation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "BI" => Ok(Degradation::Bi),
            "BD" => Ok(Degradation::Bd),
            _ => Err(Error::Config(format!("unknown degradation `{s}` (expected BI or BD)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DegradationSpec {
    pub kind: Degradation,
    pub scale: usize,
    pub blur_size: usize,
    pub blur_sigma: f64,
    /// BD is evaluated at x3; other scales need this set.
    pub bd_any_scale: bool,
}

impl DegradationSpec {
    pub fn bi(scale: usize) -> Self {
        DegradationSpec {
            kind: Degradation::Bi,
            scale,
            blur_size: 7,
            blur_sigma: 1.6,
            bd_any_scale: false,
        }
    }

    pub fn bd(scale: usize) -> Self {
        DegradationSpec {
            kind: Degradation::Bd,
            ..Self::bi(scale)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.scale < 1 {
            return Err(Error::Config("degradation scale must be at least 1".into()));
        }
        if self.kind == Degradation::Bd {
            if self.scale != 3 && !self.bd_any_scale {
                return Err(Error::Config(format!(
                    "BD degradation is defined for scale 3; set bd_any_scale = true to use x{}",
                    self.scale
                )));
            }
            if self.blur_size.is_multiple_of(2) || self.blur_sigma.is_nan() || self.blur_sigma <= 0.0 {
                return Err(Error::Config(format!(
                    "blur needs an odd size and positive sigma, got {} and {}",
                    self.blur_size, self.blur_sigma
                )));
            }
        }
        Ok(())
    }

    /// Directory name for pre-generated inputs, e.g. `LR_BI_x4`.
    pub fn lr_dir_name(&self) -> String {
        format!("LR_{}_x{}", self.kind, self.scale)
    }
}

impl KeyValue for DegradationSpec {
    fn set(&mut self, key: &str, value: &str) -> Result<bool> {
        match key {
            "degradation" => self.kind = value.parse()?,
            "blur_size" => self.blur_size = parse_value(key, value)?,
            "blur_sigma" => self.blur_sigma = parse_value(key, value)?,
            "bd_any_scale" => self.bd_any_scale = parse_bool(key, value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    fn entries(&self) -> Vec<(&'static str, String)> {
        vec![
            ("degradation", self.kind.to_string()),
            ("blur_size", self.blur_size.to_string()),
            ("blur_sigma", format!("{:?}", self.blur_sigma)),
            ("bd_any_scale", self.bd_any_scale.to_string()),
        ]
    }
}

pub fn degrade_float(hr: &FloatImage, spec: &DegradationSpec) -> Result<FloatImage> {
    spec.validate()?;
    let s = spec.scale;
    if !hr.width.is_multiple_of(s) || !hr.height.is_multiple_of(s) {
        return Err(Error::InvalidArgument(format!(
            "{}x{} is not divisible by the scale {s}",
            hr.width, hr.height
        )));
    }
    let blurred;
    let src = match spec.kind {
        Degradation::Bi => hr,
        Degradation::Bd => {
            blurred = gaussian_blur(hr, spec.blur_size, spec.blur_sigma);
            &blurred
        }
    };
    bicubic_resize(src, hr.width / s, hr.height / s, true)
}

/// Crops to a multiple of the scale, degrades and quantizes.
pub fn degrade(hr: &ImageRGB8, spec: &DegradationSpec) -> Result<ImageRGB8> {
    let hr = hr.crop_to_multiple(spec.scale)?;
    degrade_float(&hr.to_float(), spec)?.to_rgb8()
}

/// Plain bicubic upscaling, the reference baseline.
pub fn upscale_bicubic(lr: &ImageRGB8, scale: usize) -> Result<ImageRGB8> {
    bicubic_resize(&lr.to_float(), lr.width() * scale, lr.height() * scale, false)?.to_rgb8()
}
