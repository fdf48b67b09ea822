use super::block::{block_grid, bs_planes, predict, read_block, reconstruct, store, BlockMode, BLOCK};
use super::entropy::BitReader;
use super::rdo::apply_cnnlf_flags;
use super::stream::{FrameHeader, StreamHeader};
use super::{cnnlf_filter_frame, CodecTools};
use crate::error::{Error, Result};
use crate::video_io::{Frame420, Plane};

#[derive(Clone, Debug)]
pub struct Decoded {
    pub header: StreamHeader,
    pub frames: Vec<Frame420>,
    pub frame_headers: Vec<FrameHeader>,
    /// Coded size of each frame including its header and padding.
    pub frame_bits: Vec<usize>,
}

/// Decodes a complete stream. Weights are needed only for the tools the stream
/// actually uses: NN-intra blocks, or frames with the CNNLF switched on.
pub fn decode_sequence(bytes: &[u8], tools: &CodecTools) -> Result<Decoded> {
    let mut r = BitReader::new(bytes);
    let header = StreamHeader::read(&mut r)?;
    let (w, h) = (header.width, header.height);
    let (bcols, brows) = block_grid(w, h);
    let mut frames: Vec<Frame420> = Vec::with_capacity(header.frame_count);
    let mut frame_headers = Vec::with_capacity(header.frame_count);
    let mut frame_bits = Vec::with_capacity(header.frame_count);
    for _ in 0..header.frame_count {
        let start = r.position();
        let fh = FrameHeader::read(&mut r, &header)?;
        let reference = if fh.is_key { None } else { frames.last() };
        let mut recon = Frame420::from_luma(Plane::filled(w, h, 0), fh.poc);
        let mut pred_frame = recon.clone();
        let mut modes = Vec::with_capacity(bcols * brows);
        for by in 0..brows {
            for bx in 0..bcols {
                let (x0, y0) = (bx * BLOCK, by * BLOCK);
                let at = r.position();
                let b = read_block(&mut r)?;
                let qp = *fh.ctu_qps.get(x0 / header.ctu_size, y0 / header.ctu_size);
                let bad = |msg: &str| Error::Bitstream { bit: at, msg: format!("{msg} (block at {x0},{y0})") };
                match b.mode {
                    BlockMode::Nn if !header.nn_intra => return Err(bad("nn-intra block in a stream without nn-intra")),
                    BlockMode::Nn if tools.nn_intra.is_none() => return Err(bad("nn-intra block but no nn-intra weights")),
                    BlockMode::Inter if reference.is_none() => return Err(bad("inter block without a reference")),
                    _ => {}
                }
                let pred = predict(b.mode, b.mv, &recon, reference, tools.nn_intra.as_ref(), qp, x0, y0)
                    .map_err(|e| bad(&e.to_string()))?;
                let rec = reconstruct(&pred, &b.levels, qp)?;
                store(&mut recon, &rec, x0, y0);
                store(&mut pred_frame, &pred, x0, y0);
                modes.push(b.mode);
            }
        }
        if let Some(flags) = fh.cnnlf_flags.as_ref().filter(|_| fh.cnnlf_on()) {
            let pair = tools
                .cnnlf
                .as_ref()
                .ok_or_else(|| Error::Bitstream { bit: r.position(), msg: "frame uses cnnlf but no cnnlf weights".into() })?;
            let (bs_luma, bs_chroma) = bs_planes(&modes, w, h);
            let filtered = cnnlf_filter_frame(pair, &recon, &pred_frame, &bs_luma, &bs_chroma, fh.qp)?;
            apply_cnnlf_flags(&mut recon, &filtered, flags, header.ctu_size)?;
        }
        r.align();
        frame_bits.push(r.position() - start);
        frames.push(recon);
        frame_headers.push(fh);
    }
    if r.remaining_bits() != 0 {
        return Err(Error::Bitstream { bit: r.position(), msg: "trailing bytes after the last frame".into() });
    }
    Ok(Decoded { header, frames, frame_headers, frame_bits })
}
