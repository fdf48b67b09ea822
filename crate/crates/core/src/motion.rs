//! Integer-pel hierarchical block motion estimation and compensation.
//!
//! Motion vectors use the convention `pred(x, y) = ref(x + dx, y + dy)`.
//! Reads outside the reference picture are clamped to the nearest edge sample.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::video_io::Plane;

pub const MOTION_BLOCK: usize = 16;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MotionVector {
    pub dx: i32,
    pub dy: i32,
}

impl MotionVector {
    pub const ZERO: MotionVector = MotionVector { dx: 0, dy: 0 };

    pub fn new(dx: i32, dy: i32) -> Self {
        MotionVector { dx, dy }
    }

    fn l1(self) -> i32 {
        self.dx.abs() + self.dy.abs()
    }

    /// Deterministic ranking key: SSD first, then smaller |dx|+|dy|, then dy, then dx.
    fn rank(self, ssd: u64) -> (u64, i32, i32, i32) {
        (ssd, self.l1(), self.dy, self.dx)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MotionField {
    pub block_size: usize,
    pub cols: usize,
    pub rows: usize,
    pub vectors: Vec<MotionVector>,
}

impl MotionField {
    pub fn zero(width: usize, height: usize) -> Self {
        let cols = width.div_ceil(MOTION_BLOCK);
        let rows = height.div_ceil(MOTION_BLOCK);
        MotionField { block_size: MOTION_BLOCK, cols, rows, vectors: vec![MotionVector::ZERO; cols * rows] }
    }

    #[inline]
    pub fn get(&self, col: usize, row: usize) -> MotionVector {
        self.vectors[row * self.cols + col]
    }

    pub fn matches(&self, plane: &Plane) -> bool {
        self.block_size == MOTION_BLOCK
            && self.cols == plane.width().div_ceil(MOTION_BLOCK)
            && self.rows == plane.height().div_ceil(MOTION_BLOCK)
            && self.vectors.len() == self.cols * self.rows
    }
}

/// Halves both extents, each output sample being the rounded mean of its 2x2 source cell.
pub fn downsample2x(plane: &Plane) -> Plane {
    let (w, h) = (plane.width(), plane.height());
    Plane::from_fn(w.div_ceil(2), h.div_ceil(2), |x, y| {
        let mut sum = 0u32;
        let mut n = 0u32;
        for sy in 2 * y..(2 * y + 2).min(h) {
            for sx in 2 * x..(2 * x + 2).min(w) {
                sum += plane.get(sx, sy) as u32;
                n += 1;
            }
        }
        ((sum + n / 2) / n) as u8
    })
}

/// SSD between the `bw`x`bh` block of `cur` at (x0, y0), clipped to the picture,
/// and the reference block displaced by `mv`.
pub fn block_ssd(cur: &Plane, reference: &Plane, x0: usize, y0: usize, bw: usize, bh: usize, mv: MotionVector) -> u64 {
    let x1 = (x0 + bw).min(cur.width());
    let y1 = (y0 + bh).min(cur.height());
    let rx0 = x0 as isize + mv.dx as isize;
    let ry0 = y0 as isize + mv.dy as isize;
    let inside = rx0 >= 0
        && ry0 >= 0
        && rx0 as usize + (x1 - x0) <= reference.width()
        && ry0 as usize + (y1 - y0) <= reference.height();
    let mut ssd = 0u64;
    if inside {
        let (rx0, ry0) = (rx0 as usize, ry0 as usize);
        for y in y0..y1 {
            let c = &cur.data()[y * cur.width() + x0..y * cur.width() + x1];
            let ry = ry0 + (y - y0);
            let r = &reference.data()[ry * reference.width() + rx0..ry * reference.width() + rx0 + (x1 - x0)];
            for (&a, &b) in c.iter().zip(r) {
                let d = a as i32 - b as i32;
                ssd += (d * d) as u64;
            }
        }
    } else {
        for y in y0..y1 {
            for x in x0..x1 {
                let a = cur.get(x, y) as i32;
                let b = reference.get_clamped(x as isize + mv.dx as isize, y as isize + mv.dy as isize) as i32;
                let d = a - b;
                ssd += (d * d) as u64;
            }
        }
    }
    ssd
}

fn best_of(
    cur: &Plane,
    reference: &Plane,
    x0: usize,
    y0: usize,
    bs: usize,
    candidates: impl IntoIterator<Item = MotionVector>,
) -> MotionVector {
    let mut best: Option<((u64, i32, i32, i32), MotionVector)> = None;
    for mv in candidates {
        let key = mv.rank(block_ssd(cur, reference, x0, y0, bs, bs, mv));
        if best.is_none_or(|(k, _)| key < k) {
            best = Some((key, mv));
        }
    }
    best.map(|(_, mv)| mv).unwrap_or(MotionVector::ZERO)
}

fn refine_candidates(center: MotionVector, radius: i32, bound: i32) -> Vec<MotionVector> {
    let mut out = vec![MotionVector::ZERO];
    for dy in -radius..=radius {
        for dx in -radius..=radius {
            let mv = MotionVector::new(center.dx + dx, center.dy + dy);
            if mv.dx.abs() <= bound && mv.dy.abs() <= bound {
                out.push(mv);
            }
        }
    }
    out
}

/// Three-level hierarchical block matching on 16x16 blocks.
///
/// Full search at quarter resolution over `±ceil(range/4)`, then `±2` refinement at
/// half and full resolution around the upscaled predictor. The zero vector is a
/// candidate at every level, so the returned vector never has a larger SSD than
/// the zero vector.
pub fn estimate_motion(current: &Plane, reference: &Plane, search_range: u32) -> Result<MotionField> {
    if !current.same_dims(reference) {
        return Err(Error::dims(format!(
            "current {}x{} vs reference {}x{}",
            current.width(),
            current.height(),
            reference.width(),
            reference.height()
        )));
    }
    if search_range < 2 {
        return Err(Error::arg(format!("search range must be >= 2, got {search_range}")));
    }
    let range = search_range as i32;
    let cur1 = downsample2x(current);
    let ref1 = downsample2x(reference);
    let cur2 = downsample2x(&cur1);
    let ref2 = downsample2x(&ref1);

    let mut field = MotionField::zero(current.width(), current.height());
    let coarse = (range + 3) / 4;
    let half_bound = (range + 1) / 2;
    for row in 0..field.rows {
        for col in 0..field.cols {
            let mut candidates = Vec::with_capacity(((2 * coarse + 1) * (2 * coarse + 1)) as usize);
            for dy in -coarse..=coarse {
                for dx in -coarse..=coarse {
                    candidates.push(MotionVector::new(dx, dy));
                }
            }
            let q = best_of(&cur2, &ref2, col * 4, row * 4, 4, candidates);
            let p1 = MotionVector::new(q.dx * 2, q.dy * 2);
            let h = best_of(&cur1, &ref1, col * 8, row * 8, 8, refine_candidates(p1, 2, half_bound));
            let p0 = MotionVector::new(h.dx * 2, h.dy * 2);
            let f = best_of(current, reference, col * 16, row * 16, 16, refine_candidates(p0, 2, range));
            field.vectors[row * field.cols + col] = f;
        }
    }
    Ok(field)
}

/// Writes the `bw`x`bh` block at (x0, y0) predicted from `reference` displaced by `mv`
/// into `out`, clipped to the picture.
pub fn compensate_block(reference: &Plane, out: &mut Plane, x0: usize, y0: usize, bw: usize, bh: usize, mv: MotionVector) {
    let x1 = (x0 + bw).min(out.width());
    let y1 = (y0 + bh).min(out.height());
    for y in y0..y1 {
        for x in x0..x1 {
            let v = reference.get_clamped(x as isize + mv.dx as isize, y as isize + mv.dy as isize);
            out.set(x, y, v);
        }
    }
}

pub fn motion_compensate(reference: &Plane, field: &MotionField) -> Result<Plane> {
    if !field.matches(reference) {
        return Err(Error::dims(format!(
            "motion field {}x{} does not cover a {}x{} picture",
            field.cols,
            field.rows,
            reference.width(),
            reference.height()
        )));
    }
    let mut out = Plane::filled(reference.width(), reference.height(), 0);
    for row in 0..field.rows {
        for col in 0..field.cols {
            let mv = field.get(col, row);
            compensate_block(reference, &mut out, col * MOTION_BLOCK, row * MOTION_BLOCK, MOTION_BLOCK, MOTION_BLOCK, mv);
        }
    }
    Ok(out)
}
