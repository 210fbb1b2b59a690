//! Pyramid wavelet-Fourier image restoration.
//!
//! The crate bundles a non-learned sub-band swap analysis ([`swap`]), a
//! trainable multi-input multi-output network built from wavelet
//! down/up-sampling and FFT token mixers ([`model`], [`train`]), and the
//! numerical substrate both rest on ([`tensor`], [`autodiff`], [`fourier`],
//! [`wavelet`]). Image IO, metrics, synthetic rain and checkpoints live in
//! [`imaging`]; the command-line front end is [`cli`].

pub mod ablation;
pub mod autodiff;
pub mod cli;
pub mod error;
pub mod fourier;
pub mod imaging;
pub mod model;
pub mod selftest;
pub mod swap;
pub mod tensor;
pub mod train;
pub mod wavelet;

pub use error::{Error, Result};
pub use tensor::Tensor;
