//! Rate-distortion helpers and the CTU-level CNNLF switch.

use serde::{Deserialize, Serialize};

use crate::ctu::{ctu_dims, CtuGrid};
use crate::error::{Error, Result};
use crate::video_io::{Frame420, Plane};

/// `0.85 * 2^((qp - 12) / 3)`
pub fn rd_lambda(qp: i32) -> f64 {
    0.85 * 2f64.powf((qp - 12) as f64 / 3.0)
}

pub fn rd_cost(distortion: f64, bits: f64, lambda: f64) -> f64 {
    distortion + lambda * bits
}

/// Index of the cheapest candidate; ties keep the earliest.
pub fn pick_best(costs: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &c) in costs.iter().enumerate() {
        if best.is_none_or(|b| c < costs[b]) {
            best = Some(i);
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CnnlfDecision {
    pub frame_on: bool,
    pub ctu_flags: CtuGrid<bool>,
    /// Cost of what was chosen, and of the two forced alternatives.
    pub cost: f64,
    pub cost_all_on: f64,
    pub cost_off: f64,
}

fn region_sse(a: &Plane, b: &Plane, x0: usize, y0: usize, size: usize) -> u64 {
    let x1 = (x0 + size).min(a.width());
    let y1 = (y0 + size).min(a.height());
    let mut acc = 0u64;
    for y in y0..y1 {
        for x in x0..x1 {
            let d = a.get(x, y) as i64 - b.get(x, y) as i64;
            acc += (d * d) as u64;
        }
    }
    acc
}

/// Y+Cb+Cr squared error of one CTU.
pub fn ctu_sse(a: &Frame420, b: &Frame420, col: usize, row: usize, ctu_size: usize) -> u64 {
    let (x, y) = (col * ctu_size, row * ctu_size);
    region_sse(&a.y, &b.y, x, y, ctu_size)
        + region_sse(&a.cb, &b.cb, x / 2, y / 2, ctu_size / 2)
        + region_sse(&a.cr, &b.cr, x / 2, y / 2, ctu_size / 2)
}

fn check(a: &Frame420, b: &Frame420) -> Result<()> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(Error::dims("cnnlf decision frames differ in size"));
    }
    Ok(())
}

/// Chooses per-CTU filter flags and the frame flag, signalling cost one bit each.
///
/// A CTU is filtered when that lowers its distortion. The frame flag is raised when
/// the flagged frame (1 + n_ctu bits) is cheaper than the unfiltered one (1 bit).
pub fn decide_cnnlf_flags(orig: &Frame420, unfiltered: &Frame420, filtered: &Frame420, lambda: f64, ctu_size: usize) -> Result<CnnlfDecision> {
    check(orig, unfiltered)?;
    check(orig, filtered)?;
    let (cols, rows) = ctu_dims(orig.width(), orig.height(), ctu_size);
    let mut flags = CtuGrid::filled(cols, rows, false);
    let (mut d_best, mut d_on, mut d_off) = (0u64, 0u64, 0u64);
    for row in 0..rows {
        for col in 0..cols {
            let off = ctu_sse(orig, unfiltered, col, row, ctu_size);
            let on = ctu_sse(orig, filtered, col, row, ctu_size);
            d_on += on;
            d_off += off;
            if on < off {
                *flags.get_mut(col, row) = true;
                d_best += on;
            } else {
                d_best += off;
            }
        }
    }
    let n = (cols * rows) as f64;
    let cost_flagged = rd_cost(d_best as f64, 1.0 + n, lambda);
    let cost_all_on = rd_cost(d_on as f64, 1.0 + n, lambda);
    let cost_off = rd_cost(d_off as f64, 1.0, lambda);
    let frame_on = cost_flagged < cost_off;
    if !frame_on {
        flags.values.iter_mut().for_each(|f| *f = false);
    }
    Ok(CnnlfDecision { frame_on, ctu_flags: flags, cost: cost_flagged.min(cost_off), cost_all_on, cost_off })
}

/// Copies the filtered samples of every flagged CTU over `frame`.
pub fn apply_cnnlf_flags(frame: &mut Frame420, filtered: &Frame420, flags: &CtuGrid<bool>, ctu_size: usize) -> Result<()> {
    check(frame, filtered)?;
    for row in 0..flags.rows {
        for col in 0..flags.cols {
            if !*flags.get(col, row) {
                continue;
            }
            let sizes = [ctu_size, ctu_size / 2, ctu_size / 2];
            for ((dst, src), size) in frame.planes_mut().into_iter().zip(filtered.planes()).zip(sizes) {
                let (x0, y0) = (col * size, row * size);
                for y in y0..(y0 + size).min(dst.height()) {
                    for x in x0..(x0 + size).min(dst.width()) {
                        dst.set(x, y, src.get(x, y));
                    }
                }
            }
        }
    }
    Ok(())
}
