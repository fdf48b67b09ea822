//! A deliberately small block codec used as the host for the learned tools.
//!
//! 16x16 blocks with DC / Planar / NN-intra / integer-pel inter prediction, an
//! 8x8 DCT, a uniform quantizer and Exp-Golomb run/level coding. Every frame
//! uses the previous reconstructed frame as its only reference. An optional
//! CTU-switched CNN loop filter runs after reconstruction.

pub mod block;
pub mod decoder;
pub mod encoder;
pub mod entropy;
pub mod predict;
pub mod rdo;
pub mod stream;
pub mod transform;

use serde::{Deserialize, Serialize};

pub use block::{bs_planes, BlockMode};
pub use decoder::{decode_sequence, Decoded};
pub use encoder::{encode_sequence, EncodeOutput, EncoderConfig};
pub use entropy::{BitReader, BitWriter};
pub use rdo::{apply_cnnlf_flags, decide_cnnlf_flags, rd_cost, rd_lambda, CnnlfDecision};
pub use stream::StreamHeader;
pub use transform::{dct8, dequantize, idct8, qstep, quantize};

use crate::ctu::CtuGrid;
use crate::error::Result;
use crate::nn::{cnnlf_forward, CnnlfInput, CnnlfPair, NnIntraSet};
use crate::video_io::{Frame420, Plane};

/// Learned models available to the codec.
#[derive(Clone, Debug, Default)]
pub struct CodecTools {
    pub cnnlf: Option<CnnlfPair>,
    pub nn_intra: Option<NnIntraSet>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeCounts {
    pub dc: usize,
    pub planar: usize,
    pub nn: usize,
    pub inter: usize,
}

impl ModeCounts {
    pub fn of(modes: &[BlockMode]) -> Self {
        let mut c = ModeCounts::default();
        for m in modes {
            match m {
                BlockMode::Dc => c.dc += 1,
                BlockMode::Planar => c.planar += 1,
                BlockMode::Nn => c.nn += 1,
                BlockMode::Inter => c.inter += 1,
            }
        }
        c
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameStats {
    pub poc: u32,
    pub is_key: bool,
    pub qp: i32,
    /// Whole frame including its header and alignment padding.
    pub bits: usize,
    /// Block payload bits per CTU.
    pub ctu_bits: CtuGrid<usize>,
    pub modes: ModeCounts,
    /// Per-CTU CNNLF switch, absent when the stream has no CNNLF.
    pub cnnlf_flags: Option<CtuGrid<bool>>,
}

/// Per-frame side data for training the loop filter: reconstruction before
/// filtering, the prediction signal and the boundary-strength planes.
#[derive(Clone, Debug, PartialEq)]
pub struct AuxFrame {
    pub poc: u32,
    pub qp: i32,
    pub rec: Frame420,
    pub pred: Frame420,
    pub bs_luma: Plane,
    pub bs_chroma: Plane,
}

/// Runs both CNNLF models over a whole frame with the frame QP.
pub fn cnnlf_filter_frame(pair: &CnnlfPair, rec: &Frame420, pred: &Frame420, bs_luma: &Plane, bs_chroma: &Plane, qp: i32) -> Result<Frame420> {
    let y = cnnlf_forward(&pair.luma, &CnnlfInput { rec: &[&rec.y], pred: &[&pred.y], bs: bs_luma, qp })?;
    let c = cnnlf_forward(
        &pair.chroma,
        &CnnlfInput { rec: &[&rec.cb, &rec.cr], pred: &[&pred.cb, &pred.cr], bs: bs_chroma, qp },
    )?;
    let mut it = y.into_iter().chain(c);
    let (y, cb, cr) = (it.next().unwrap(), it.next().unwrap(), it.next().unwrap());
    Frame420::new(y, cb, cr, rec.poc)
}

/// Sum of per-CTU bits, handy for checks against the frame total.
pub fn total_ctu_bits(stats: &FrameStats) -> usize {
    stats.ctu_bits.values.iter().sum()
}
