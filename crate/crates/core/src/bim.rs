//! Block importance mapping.
//!
//! Every 16x16 luma block of a frame is compared against its motion-compensated
//! temporal neighbours. The resulting error `E` is averaged per CTU against the
//! frames at distance one (`E1`) and two (`E2`), combined into `E3`, and
//! thresholded into a CTU delta QP in `[-2, +2]`. Only frames whose POC is a
//! multiple of eight are adjusted.

use serde::{Deserialize, Serialize};

use crate::ctu::{check_ctu_size, ctu_dims, CtuGrid};
use crate::error::{Error, Result};
use crate::motion::{estimate_motion, motion_compensate, MotionField};
use crate::video_io::{Frame420, Plane};

pub const BLOCK: usize = 16;
const BLOCK_SAMPLES: i64 = (BLOCK * BLOCK) as i64;

/// POC period of the frames that receive BIM adjustments.
pub const GATE_PERIOD: u32 = 8;

pub fn is_gated(poc: u32) -> bool {
    poc.is_multiple_of(GATE_PERIOD)
}

/// `0.2 * (ssd + 5) / (variance + 5) + ssd / 3200`, with both inputs as sums over the block.
pub fn block_error(ssd: f64, variance: f64) -> Result<f64> {
    if !(ssd >= 0.0) || !(variance >= 0.0) {
        return Err(Error::arg(format!("ssd and variance must be non-negative, got ssd={ssd} variance={variance}")));
    }
    Ok(0.2 * (ssd + 5.0) / (variance + 5.0) + ssd / 3200.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockError {
    pub ssd: f64,
    pub variance: f64,
    pub e: f64,
}

/// Per-block errors of one (current, reference) pair over the full 16x16 blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct ImportanceGrid {
    pub poc: u32,
    pub width: usize,
    pub height: usize,
    pub cols: usize,
    pub rows: usize,
    pub blocks: Vec<BlockError>,
}

impl ImportanceGrid {
    pub fn get(&self, col: usize, row: usize) -> &BlockError {
        &self.blocks[row * self.cols + col]
    }

    pub fn mean_e(&self) -> f64 {
        if self.blocks.is_empty() {
            return 0.0;
        }
        self.blocks.iter().map(|b| b.e).sum::<f64>() / self.blocks.len() as f64
    }
}

/// Sum of squared deviations from the block mean.
///
/// Computed as `(n * sum(x^2) - sum(x)^2) / n` in integers; with `n = 256` the
/// division is exact, so the result does not depend on summation order.
fn block_variance(plane: &Plane, x0: usize, y0: usize) -> f64 {
    let mut sum = 0i64;
    let mut sum_sq = 0i64;
    for y in y0..y0 + BLOCK {
        for &v in &plane.data()[y * plane.width() + x0..y * plane.width() + x0 + BLOCK] {
            sum += v as i64;
            sum_sq += (v as i64) * (v as i64);
        }
    }
    (BLOCK_SAMPLES * sum_sq - sum * sum) as f64 / BLOCK_SAMPLES as f64
}

fn block_sse(a: &Plane, b: &Plane, x0: usize, y0: usize) -> f64 {
    let mut ssd = 0i64;
    for y in y0..y0 + BLOCK {
        let ra = &a.data()[y * a.width() + x0..y * a.width() + x0 + BLOCK];
        let rb = &b.data()[y * b.width() + x0..y * b.width() + x0 + BLOCK];
        for (&p, &q) in ra.iter().zip(rb) {
            let d = p as i64 - q as i64;
            ssd += d * d;
        }
    }
    ssd as f64
}

pub fn frame_errors(poc: u32, current: &Plane, reference: &Plane, field: &MotionField) -> Result<ImportanceGrid> {
    if !current.same_dims(reference) {
        return Err(Error::dims(format!(
            "current {}x{} vs reference {}x{}",
            current.width(),
            current.height(),
            reference.width(),
            reference.height()
        )));
    }
    let compensated = motion_compensate(reference, field)?;
    let cols = current.width() / BLOCK;
    let rows = current.height() / BLOCK;
    let mut blocks = Vec::with_capacity(cols * rows);
    for row in 0..rows {
        for col in 0..cols {
            let (x0, y0) = (col * BLOCK, row * BLOCK);
            let variance = block_variance(current, x0, y0);
            let ssd = block_sse(current, &compensated, x0, y0);
            blocks.push(BlockError { ssd, variance, e: block_error(ssd, variance)? });
        }
    }
    Ok(ImportanceGrid { poc, width: current.width(), height: current.height(), cols, rows, blocks })
}

/// Mean block error per CTU, over the full blocks whose top-left lies inside it.
pub fn ctu_mean_e(grid: &ImportanceGrid, ctu_size: usize) -> Result<CtuGrid<f64>> {
    check_ctu_size(ctu_size)?;
    let (cols, rows) = ctu_dims(grid.width, grid.height, ctu_size);
    let per = ctu_size / BLOCK;
    let mut out = CtuGrid::filled(cols, rows, 0.0);
    for cr in 0..rows {
        for cc in 0..cols {
            let mut sum = 0.0;
            let mut n = 0usize;
            for br in cr * per..((cr + 1) * per).min(grid.rows) {
                for bc in cc * per..((cc + 1) * per).min(grid.cols) {
                    sum += grid.get(bc, br).e;
                    n += 1;
                }
            }
            if n > 0 {
                *out.get_mut(cc, cr) = sum / n as f64;
            }
        }
    }
    Ok(out)
}

fn neighbour_ctu_e(current: &Frame420, neighbour: &Frame420, ctu_size: usize, search_range: u32) -> Result<CtuGrid<f64>> {
    let field = estimate_motion(&current.y, &neighbour.y, search_range)?;
    let grid = frame_errors(current.poc, &current.y, &neighbour.y, &field)?;
    ctu_mean_e(&grid, ctu_size)
}

/// Per-CTU mean E against the frames `distance` before and after the current one,
/// averaged over the sides that exist.
pub fn pair_e(
    current: &Frame420,
    prev: Option<&Frame420>,
    next: Option<&Frame420>,
    distance: u32,
    ctu_size: usize,
    search_range: u32,
) -> Result<CtuGrid<f64>> {
    if distance != 1 && distance != 2 {
        return Err(Error::arg(format!("temporal distance must be 1 or 2, got {distance}")));
    }
    let maps = [prev, next]
        .into_iter()
        .flatten()
        .map(|n| neighbour_ctu_e(current, n, ctu_size, search_range))
        .collect::<Result<Vec<_>>>()?;
    combine_sides(&maps)
}

fn combine_sides(maps: &[CtuGrid<f64>]) -> Result<CtuGrid<f64>> {
    match maps {
        [] => Err(Error::arg("pair_e needs at least one neighbouring frame")),
        [one] => Ok(one.clone()),
        [a, b] => Ok(CtuGrid {
            cols: a.cols,
            rows: a.rows,
            values: a.values.iter().zip(&b.values).map(|(x, y)| (x + y) / 2.0).collect(),
        }),
        _ => unreachable!("at most two sides"),
    }
}

/// `max(e1, e2) + 3 * |e2 - e1|`
pub fn e3(e1: f64, e2: f64) -> f64 {
    e1.max(e2) + (e2 - e1).abs() * 3.0
}

/// Delta QP thresholds. Band edges are inclusive upper bounds; 102 falls into the top band.
pub fn delta_qp_of_e3(e3: f64) -> Result<i32> {
    if !(e3 >= 0.0) {
        return Err(Error::arg(format!("e3 must be non-negative, got {e3}")));
    }
    Ok(if e3 <= 22.0 {
        -2
    } else if e3 <= 41.0 {
        -1
    } else if e3 <= 76.0 {
        0
    } else if e3 < 102.0 {
        1
    } else {
        2
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CtuImportance {
    pub ctu_row: usize,
    pub ctu_col: usize,
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
    pub delta_qp: i32,
}

/// BIM result for one gated frame.
#[derive(Clone, Debug, PartialEq)]
pub struct BimFrame {
    pub poc: u32,
    pub deltas: CtuGrid<i32>,
    /// `None` when the frame has no temporal neighbour (single-frame sequence).
    pub importance: Option<CtuGrid<CtuImportance>>,
}

fn importance_grid(e1: &CtuGrid<f64>, e2: &CtuGrid<f64>) -> Result<CtuGrid<CtuImportance>> {
    let mut values = Vec::with_capacity(e1.values.len());
    for row in 0..e1.rows {
        for col in 0..e1.cols {
            let (a, b) = (*e1.get(col, row), *e2.get(col, row));
            let v = e3(a, b);
            values.push(CtuImportance { ctu_row: row, ctu_col: col, e1: a, e2: b, e3: v, delta_qp: delta_qp_of_e3(v)? });
        }
    }
    Ok(CtuGrid { cols: e1.cols, rows: e1.rows, values })
}

/// Runs BIM over a display-ordered sequence. The result has one entry per input
/// frame, `Some` exactly for frames whose POC is a multiple of eight.
///
/// When neither side has a frame at distance two, `E2` falls back to `E1`.
pub fn bim_sequence(frames: &[Frame420], ctu_size: usize, search_range: u32) -> Result<Vec<Option<BimFrame>>> {
    check_ctu_size(ctu_size)?;
    let Some(first) = frames.first() else {
        return Err(Error::arg("bim_sequence needs at least one frame"));
    };
    let by_poc = |poc: i64| -> Option<&Frame420> {
        if poc < 0 {
            return None;
        }
        frames.iter().find(|f| f.poc as i64 == poc)
    };
    let (w, h) = (first.width(), first.height());
    frames
        .iter()
        .map(|cur| {
            if !is_gated(cur.poc) {
                return Ok(None);
            }
            let p = cur.poc as i64;
            let (p1, n1) = (by_poc(p - 1), by_poc(p + 1));
            if p1.is_none() && n1.is_none() {
                return Ok(Some(BimFrame {
                    poc: cur.poc,
                    deltas: CtuGrid::for_picture(w, h, ctu_size, 0),
                    importance: None,
                }));
            }
            let e1 = pair_e(cur, p1, n1, 1, ctu_size, search_range)?;
            let (p2, n2) = (by_poc(p - 2), by_poc(p + 2));
            let e2 = if p2.is_none() && n2.is_none() { e1.clone() } else { pair_e(cur, p2, n2, 2, ctu_size, search_range)? };
            let importance = importance_grid(&e1, &e2)?;
            Ok(Some(BimFrame { poc: cur.poc, deltas: importance.map(|c| c.delta_qp), importance: Some(importance) }))
        })
        .collect()
}
