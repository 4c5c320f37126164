use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tensor4};

/// Interleaved 8-bit RGB, row-major.
#[derive(Clone, PartialEq, Eq)]
pub struct ImageRGB8 {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl std::fmt::Debug for ImageRGB8 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ImageRGB8({}x{})", self.width, self.height)
    }
}

impl ImageRGB8 {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument(format!("image size {width}x{height} is empty")));
        }
        if pixels.len() != 3 * width * height {
            return Err(Error::InvalidArgument(format!(
                "pixel buffer has {} bytes, {width}x{height} RGB needs {}",
                pixels.len(),
                3 * width * height
            )));
        }
        Ok(ImageRGB8 { width, height, pixels })
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Result<Self> {
        Self::new(width, height, rgb.repeat(width * height))
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [u8; 3]) -> Result<Self> {
        let mut pixels = Vec::with_capacity(3 * width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.extend_from_slice(&f(x, y));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        let i = 3 * (y * self.width + x);
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<Self> {
        if w == 0 || h == 0 || x0 + w > self.width || y0 + h > self.height {
            return Err(Error::InvalidArgument(format!(
                "crop {w}x{h} at ({x0},{y0}) outside {}x{} image",
                self.width, self.height
            )));
        }
        let mut pixels = Vec::with_capacity(3 * w * h);
        for y in y0..y0 + h {
            let start = 3 * (y * self.width + x0);
            pixels.extend_from_slice(&self.pixels[start..start + 3 * w]);
        }
        Self::new(w, h, pixels)
    }

    /// Largest top-left crop whose sides are multiples of `s`.
    pub fn crop_to_multiple(&self, s: usize) -> Result<Self> {
        let (w, h) = (self.width / s * s, self.height / s * s);
        if w == 0 || h == 0 {
            return Err(Error::InvalidArgument(format!(
                "{}x{} image is smaller than the scale factor {s}",
                self.width, self.height
            )));
        }
        self.crop(0, 0, w, h)
    }

    pub fn flip_horizontal(&self) -> Self {
        let mut pixels = Vec::with_capacity(self.pixels.len());
        for y in 0..self.height {
            for x in (0..self.width).rev() {
                pixels.extend_from_slice(&self.get(x, y));
            }
        }
        ImageRGB8 { pixels, ..*self }
    }

    /// Quarter turn clockwise: row `i`, column `j` moves to row `j`,
    /// column `H - 1 - i`.
    pub fn rot90(&self) -> Self {
        let (w, h) = (self.width, self.height);
        let mut pixels = vec![0u8; self.pixels.len()];
        for i in 0..h {
            for j in 0..w {
                let (ni, nj) = (j, h - 1 - i);
                let d = 3 * (ni * h + nj);
                pixels[d..d + 3].copy_from_slice(&self.get(j, i));
            }
        }
        ImageRGB8 {
            width: h,
            height: w,
            pixels,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let img = image::open(path).map_err(|e| image_error(path, e))?.into_rgb8();
        let (w, h) = img.dimensions();
        Self::new(w as usize, h as usize, img.into_raw()).map_err(|e| Error::Image {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let buf = image::RgbImage::from_raw(self.width as u32, self.height as u32, self.pixels.clone())
            .expect("buffer length checked at construction");
        buf.save_with_format(path, image::ImageFormat::Png)
            .map_err(|e| image_error(path, e))
    }

    pub fn to_float(&self) -> FloatImage {
        let plane = self.width * self.height;
        let mut data = vec![0.0; 3 * plane];
        for (i, px) in self.pixels.chunks_exact(3).enumerate() {
            for c in 0..3 {
                data[c * plane + i] = px[c] as f64 / 255.0;
            }
        }
        FloatImage {
            width: self.width,
            height: self.height,
            channels: 3,
            data,
        }
    }
}

pub(crate) fn image_error(path: &Path, e: image::ImageError) -> Error {
    match e {
        image::ImageError::IoError(io) => Error::io(path, io),
        other => Error::Image {
            path: path.to_path_buf(),
            message: other.to_string(),
        },
    }
}

/// Rounds half away from zero and saturates.
pub fn quantize(v: f64) -> u8 {
    (v * 255.0).round().clamp(0.0, 255.0) as u8
}

/// Planar float image, nominally in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct FloatImage {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl FloatImage {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height * channels {
            return Err(Error::InvalidArgument(format!(
                "float image buffer has {} values, {width}x{height}x{channels} needs {}",
                data.len(),
                width * height * channels
            )));
        }
        Ok(FloatImage {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn plane(&self, c: usize) -> &[f64] {
        let n = self.width * self.height;
        &self.data[c * n..(c + 1) * n]
    }

    pub fn to_rgb8(&self) -> Result<ImageRGB8> {
        if self.channels != 3 {
            return Err(Error::InvalidArgument(format!(
                "expected 3 channels, got {}",
                self.channels
            )));
        }
        let plane = self.width * self.height;
        let mut pixels = Vec::with_capacity(3 * plane);
        for i in 0..plane {
            for c in 0..3 {
                pixels.push(quantize(self.data[c * plane + i]));
            }
        }
        ImageRGB8::new(self.width, self.height, pixels)
    }
}

/// Stacks equally sized images into an `n x 3 x h x w` batch in `[0, 1]`.
pub fn images_to_tensor<T: Scalar>(images: &[&ImageRGB8]) -> Result<Tensor4<T>> {
    let first = images
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty image batch".into()))?;
    let (w, h) = (first.width, first.height);
    let plane = w * h;
    let mut data = Vec::with_capacity(images.len() * 3 * plane);
    for img in images {
        if (img.width, img.height) != (w, h) {
            return Err(Error::InvalidArgument(format!(
                "batch mixes {}x{} with {w}x{h}",
                img.width, img.height
            )));
        }
        for c in 0..3 {
            data.extend(img.pixels[c..].iter().step_by(3).map(|&v| T::of(v as f64 / 255.0)));
        }
    }
    Tensor4::from_vec([images.len(), 3, h, w], data)
}

/// Quantizes batch item `n` of an RGB tensor.
pub fn tensor_to_image<T: Scalar>(t: &Tensor4<T>, n: usize) -> Result<ImageRGB8> {
    let s = t.shape();
    if s.c != 3 || n >= s.n {
        return Err(Error::shape("tensor_to_image", format!("item {n} of an RGB batch"), s));
    }
    let plane = s.plane();
    let base = n * 3 * plane;
    let d = t.data();
    let mut pixels = Vec::with_capacity(3 * plane);
    for i in 0..plane {
        for c in 0..3 {
            pixels.push(quantize(d[base + c * plane + i].as_f64()));
        }
    }
    ImageRGB8::new(s.w, s.h, pixels)
}
