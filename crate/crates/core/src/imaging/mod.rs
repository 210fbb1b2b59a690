//! Images, quality metrics, synthetic rain, procedural scenes, paired
//! datasets and checkpoint persistence.

pub mod checkpoint;
pub mod dataset;
pub mod io;
pub mod metrics;
pub mod rain;
pub mod scenes;

use crate::tensor::Tensor;

/// `[3, H, W]` tensor with values in `[0, 1]`.
pub type Image = Tensor;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use dataset::{load_pairs, write_pair, Pair};
pub use io::{load_image, save_image};
pub use metrics::{psnr, ssim, PSNR_CAP_DB};
pub use rain::{synth_rain, RainParams};
