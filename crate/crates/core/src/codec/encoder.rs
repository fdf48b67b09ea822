use serde::{Deserialize, Serialize};

use super::block::{
    block_bits, block_grid, block_sse, bs_planes, nn_available, predict, quantize_residual, reconstruct, store, write_block,
    BlockMode, BlockSyntax, BLOCK,
};
use super::entropy::BitWriter;
use super::rdo::{apply_cnnlf_flags, decide_cnnlf_flags, pick_best, rd_cost, rd_lambda};
use super::stream::{FrameHeader, StreamHeader};
use super::{cnnlf_filter_frame, AuxFrame, CodecTools, FrameStats, ModeCounts};
use crate::ctu::CtuGrid;
use crate::error::{Error, Result};
use crate::motion::{estimate_motion, MotionField, MotionVector};
use crate::qp_adapt::QpPlan;
use crate::video_io::{Frame420, Plane};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub search_range: u32,
    pub enable_cnnlf: bool,
    pub enable_nn_intra: bool,
    /// Keep [`AuxFrame`]s for every frame.
    pub collect_aux: bool,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig { search_range: 16, enable_cnnlf: false, enable_nn_intra: false, collect_aux: false }
    }
}

#[derive(Clone, Debug)]
pub struct EncodeOutput {
    pub header: StreamHeader,
    pub bitstream: Vec<u8>,
    /// Decoder-identical reconstruction, after the loop filter.
    pub recon: Vec<Frame420>,
    pub stats: Vec<FrameStats>,
    pub aux: Vec<AuxFrame>,
}

fn check_inputs(frames: &[Frame420], plan: &QpPlan) -> Result<()> {
    let Some(first) = frames.first() else {
        return Err(Error::arg("cannot encode an empty sequence"));
    };
    let (w, h) = (first.width(), first.height());
    if frames.iter().any(|f| f.width() != w || f.height() != h) {
        return Err(Error::dims("all frames must share one size"));
    }
    if plan.width != w || plan.height != h {
        return Err(Error::dims(format!("qp plan is for {}x{}, sequence is {w}x{h}", plan.width, plan.height)));
    }
    if plan.frames.len() != frames.len() {
        return Err(Error::arg(format!("qp plan covers {} frames, sequence has {}", plan.frames.len(), frames.len())));
    }
    for (f, q) in frames.iter().zip(&plan.frames) {
        if f.poc != q.poc {
            return Err(Error::arg(format!("qp plan frame {} does not match sequence poc {}", q.poc, f.poc)));
        }
    }
    Ok(())
}

/// Encodes `frames` in the given order with the per-CTU QPs of `plan`.
pub fn encode_sequence(frames: &[Frame420], plan: &QpPlan, cfg: &EncoderConfig, tools: &CodecTools) -> Result<EncodeOutput> {
    check_inputs(frames, plan)?;
    if cfg.enable_cnnlf && tools.cnnlf.is_none() {
        return Err(Error::arg("cnnlf is enabled but no cnnlf weights were supplied"));
    }
    if cfg.enable_nn_intra && tools.nn_intra.is_none() {
        return Err(Error::arg("nn-intra is enabled but no nn-intra weights were supplied"));
    }
    let header = StreamHeader {
        width: frames[0].width(),
        height: frames[0].height(),
        frame_count: frames.len(),
        ctu_size: plan.ctu_size,
        cnnlf: cfg.enable_cnnlf,
        nn_intra: cfg.enable_nn_intra,
    };
    let mut out = BitWriter::new();
    header.write(&mut out)?;
    let nn = if cfg.enable_nn_intra { tools.nn_intra.as_ref() } else { None };
    let cnnlf = if cfg.enable_cnnlf { tools.cnnlf.as_ref() } else { None };

    let mut recon_seq: Vec<Frame420> = Vec::with_capacity(frames.len());
    let mut stats = Vec::with_capacity(frames.len());
    let mut aux = Vec::new();
    for (orig, fq) in frames.iter().zip(&plan.frames) {
        let reference = if fq.is_key { None } else { recon_seq.last() };
        let field = match reference {
            Some(r) => estimate_motion(&orig.y, &r.y, cfg.search_range)?,
            None => MotionField::zero(orig.width(), orig.height()),
        };
        let (w, h) = (orig.width(), orig.height());
        let mut recon = Frame420::from_luma(Plane::filled(w, h, 0), orig.poc);
        let mut pred_frame = recon.clone();
        let (bcols, brows) = block_grid(w, h);
        let mut modes = Vec::with_capacity(bcols * brows);
        let mut ctu_bits = CtuGrid::filled(fq.ctu_qps.cols, fq.ctu_qps.rows, 0usize);
        let mut payload = BitWriter::new();
        for by in 0..brows {
            for bx in 0..bcols {
                let (x0, y0) = (bx * BLOCK, by * BLOCK);
                let (cc, cr) = (x0 / plan.ctu_size, y0 / plan.ctu_size);
                let qp = *fq.ctu_qps.get(cc, cr);
                let lambda = rd_lambda(qp);
                let mut cands = Vec::with_capacity(4);
                for mode in BlockMode::ALL {
                    let usable = match mode {
                        BlockMode::Nn => nn_available(nn, &recon, x0, y0, qp),
                        BlockMode::Inter => reference.is_some(),
                        _ => true,
                    };
                    if !usable {
                        continue;
                    }
                    let mv = if mode == BlockMode::Inter { field.get(bx, by) } else { MotionVector::ZERO };
                    let pred = predict(mode, mv, &recon, reference, nn, qp, x0, y0)?;
                    let levels = quantize_residual(orig, &pred, x0, y0, qp)?;
                    let rec = reconstruct(&pred, &levels, qp)?;
                    let syntax = BlockSyntax { mode, mv, levels };
                    let bits = block_bits(&syntax);
                    let cost = rd_cost(block_sse(orig, &rec, x0, y0) as f64, bits as f64, lambda);
                    cands.push((cost, syntax, pred, rec, bits));
                }
                let costs: Vec<f64> = cands.iter().map(|c| c.0).collect();
                let best = pick_best(&costs).expect("dc is always usable");
                let (_, syntax, pred, rec, bits) = cands.swap_remove(best);
                store(&mut recon, &rec, x0, y0);
                store(&mut pred_frame, &pred, x0, y0);
                write_block(&mut payload, &syntax);
                *ctu_bits.get_mut(cc, cr) += bits;
                modes.push(syntax.mode);
            }
        }

        let (bs_luma, bs_chroma) = bs_planes(&modes, w, h);
        let cnnlf_flags = match cnnlf {
            Some(pair) => {
                let filtered = cnnlf_filter_frame(pair, &recon, &pred_frame, &bs_luma, &bs_chroma, fq.qp)?;
                let d = decide_cnnlf_flags(orig, &recon, &filtered, rd_lambda(fq.qp), plan.ctu_size)?;
                Some((d.ctu_flags, filtered))
            }
            None => None,
        };
        if cfg.collect_aux {
            aux.push(AuxFrame { poc: orig.poc, qp: fq.qp, rec: recon.clone(), pred: pred_frame, bs_luma, bs_chroma });
        }
        if let Some((flags, filtered)) = &cnnlf_flags {
            apply_cnnlf_flags(&mut recon, filtered, flags, plan.ctu_size)?;
        }

        let fh = FrameHeader {
            poc: orig.poc,
            is_key: fq.is_key,
            qp: fq.qp,
            ctu_qps: fq.ctu_qps.clone(),
            cnnlf_flags: cnnlf_flags.map(|(f, _)| f),
        };
        let start = out.bit_len();
        fh.write(&mut out, &header)?;
        out.append(&payload);
        out.align();
        stats.push(FrameStats {
            poc: orig.poc,
            is_key: fq.is_key,
            qp: fq.qp,
            bits: out.bit_len() - start,
            ctu_bits,
            modes: ModeCounts::of(&modes),
            cnnlf_flags: fh.cnnlf_flags,
        });
        recon_seq.push(recon);
    }
    Ok(EncodeOutput { header, bitstream: out.finish(), recon: recon_seq, stats, aux })
}
