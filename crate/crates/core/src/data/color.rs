use super::image::{FloatImage, ImageRGB8};

/// Studio-swing BT.601 luma for one pixel, in `[16, 235]`.
pub fn luma(rgb: [u8; 3]) -> f64 {
    let [r, g, b] = rgb.map(|v| v as f64 / 255.0);
    16.0 + (65.481 * r + 128.553 * g + 24.966 * b)
}

/// Single-channel float Y plane, not re-quantized.
pub fn rgb_to_ycbcr_y(img: &ImageRGB8) -> FloatImage {
    let data = img
        .pixels()
        .chunks_exact(3)
        .map(|p| luma([p[0], p[1], p[2]]))
        .collect();
    FloatImage {
        width: img.width(),
        height: img.height(),
        channels: 1,
        data,
    }
}
