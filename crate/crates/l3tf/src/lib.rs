//! Lossless intra-frame image codec laboratory.
//!
//! Four prediction methods over 8-bit grayscale planes: block-based intra
//! prediction, sample-based angular prediction (SAP), pixel-wise 3-tap
//! filtering with per-mode weights, and an adaptive variant that fine-tunes
//! the 3-tap weights per prediction unit during rate-distortion
//! optimization, signaling the choice with a 3-bit flag. Residuals are coded
//! with an adaptive Golomb-Rice coder. Everything is integer-exact and
//! deterministic, so encoder and decoder stay in lockstep without side
//! channels, and every stream decodes back to the source bit-exactly.
//!
//! Start with the runnable examples (`cargo run -p l3tf --example
//! roundtrip`) or the `l3tf` binary (`encode`, `decode`, `train`, `bench`).

pub mod canvas;
pub mod cli;
pub mod codec;
pub mod entropy;
pub mod modes;
pub mod plane;
pub mod predict;
pub mod rng;
pub mod synth;
pub mod trainer;
pub mod weights;

mod error;

pub use error::Error;

pub type Result<T> = std::result::Result<T, Error>;
