//! Perceptual rate allocation and neural coding tools on a small block codec.
//!
//! The analysis side derives per-CTU quantization parameters from
//! motion-compensated error statistics (block importance mapping) and a
//! simple activity-based perceptual rule. The coding side is a single key
//! frame + forward-P block codec that consumes those QP maps, offers a neural
//! intra prediction mode, and runs a QP-conditioned CNN in-loop filter with
//! CTU and frame level on/off decisions.

pub mod bim;
pub mod codec;
pub mod ctu;
pub mod error;
pub mod motion;
pub mod nn;
pub mod pipeline;
pub mod qp_adapt;
pub mod synth;
pub mod video_io;

pub use error::{Error, Result};
