//! Pure tensor kernels. Forward functions are public; the matching
//! gradient kernels are crate-private and driven by the tape.

pub(crate) mod conv;
pub(crate) mod elementwise;
pub(crate) mod structural;
pub(crate) mod weight_norm;

pub use conv::conv2d;
pub use elementwise::{add, mul, mul_channelwise, relu, scale, sigmoid};
pub use structural::{
    channel_conv1d, concat_channels, global_avg_pool, l1_loss, pixel_shuffle, pixel_unshuffle, sum,
};
pub use weight_norm::{direction_norms, weight_norm, MIN_DIRECTION_NORM};
