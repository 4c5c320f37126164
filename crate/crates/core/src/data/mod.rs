//! Image I/O, color conversion, degradation models, patches and
//! augmentation.

mod color;
mod dataset;
mod image;
mod patch;
mod resize;
mod synth;

pub use self::image::{images_to_tensor, quantize, tensor_to_image, FloatImage, ImageRGB8};
pub use color::{luma, rgb_to_ycbcr_y};
pub use dataset::{list_pngs, Dataset, Pair};
pub use patch::{augment, sample_patch_pair, Transform};
pub use resize::{
    bicubic_resize, cubic, cubic_weights, degrade, degrade_float, gaussian_blur, gaussian_kernel,
    gaussian_kernel_2d, upscale_bicubic, Degradation, DegradationSpec, CUBIC_A,
};
pub use synth::synthetic_image;
