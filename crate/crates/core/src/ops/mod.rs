//! Differentiable primitives recorded on a [`Tape`](crate::Tape).

mod conv;
mod criteria;
mod elementwise;
mod layers;

pub use conv::{conv2d, conv_output_size, reflect_index, Padding};
pub use layers::{global_avg_pool, max_pool_full, upsample_nearest2x};
