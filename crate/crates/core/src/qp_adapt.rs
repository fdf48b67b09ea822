//! Sequence classification, key-frame QP offset, perceptual CTU deltas and the
//! final per-frame, per-CTU QP plan.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::bim::{frame_errors, is_gated, BimFrame};
use crate::ctu::{check_ctu_size, ctu_dims, CtuGrid};
use crate::error::{Error, Result};
use crate::motion::estimate_motion;
use crate::video_io::Frame420;

pub const MAX_QP: i32 = 63;

/// Offset applied to the key frame of fast-moving sequences.
pub const FAST_KEYFRAME_OFFSET: i32 = -3;

pub fn clamp_qp(qp: i32) -> i32 {
    qp.clamp(0, MAX_QP)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MotionClass {
    Slow,
    Fast,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceClass {
    pub class: MotionClass,
    /// Mean frame-level block error over the probed consecutive pairs.
    pub activity: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdaptConfig {
    pub activity_threshold: f64,
    pub probe_count: usize,
    pub slow_gain: f64,
    pub epsilon: f64,
    pub search_range: u32,
}

impl Default for AdaptConfig {
    fn default() -> Self {
        AdaptConfig { activity_threshold: 2.0, probe_count: 8, slow_gain: 1.0, epsilon: 0.05, search_range: 16 }
    }
}

/// Mean block error between consecutive frames at distance one, motion compensated.
pub fn sequence_activity(frames: &[Frame420], probe_count: usize, search_range: u32) -> Result<f64> {
    if frames.len() < 2 {
        return Err(Error::arg(format!("classification needs at least 2 frames, got {}", frames.len())));
    }
    let pairs = probe_count.min(frames.len() - 1).max(1);
    let mut total = 0.0;
    for i in 0..pairs {
        let (prev, cur) = (&frames[i], &frames[i + 1]);
        let field = estimate_motion(&cur.y, &prev.y, search_range)?;
        total += frame_errors(cur.poc, &cur.y, &prev.y, &field)?.mean_e();
    }
    Ok(total / pairs as f64)
}

pub fn classify_activity(activity: f64, threshold: f64) -> SequenceClass {
    let class = if activity < threshold { MotionClass::Slow } else { MotionClass::Fast };
    SequenceClass { class, activity }
}

pub fn classify_sequence(frames: &[Frame420], probe_count: usize, threshold: f64, search_range: u32) -> Result<SequenceClass> {
    Ok(classify_activity(sequence_activity(frames, probe_count, search_range)?, threshold))
}

/// Key-frame QP offset: `-3` for fast content; for slow content an offset in
/// `[-10, -4]` that grows more negative as activity falls.
pub fn keyframe_offset(class: &SequenceClass, cfg: &AdaptConfig) -> i32 {
    match class.class {
        MotionClass::Fast => FAST_KEYFRAME_OFFSET,
        MotionClass::Slow => {
            let magnitude = (3.0 + cfg.slow_gain / (class.activity.max(0.0) + cfg.epsilon)).round();
            let magnitude = if magnitude.is_finite() { magnitude.clamp(4.0, 10.0) } else { 10.0 };
            -(magnitude as i32)
        }
    }
}

/// Log-activity perceptual delta per CTU, relative to the frame's geometric mean activity.
pub fn perceptual_ctu_delta(frame: &Frame420, ctu_size: usize) -> Result<CtuGrid<i32>> {
    check_ctu_size(ctu_size)?;
    let y = &frame.y;
    let (cols, rows) = ctu_dims(y.width(), y.height(), ctu_size);
    let mut acts = Vec::with_capacity(cols * rows);
    for row in 0..rows {
        for col in 0..cols {
            let (x0, y0) = (col * ctu_size, row * ctu_size);
            let (x1, y1) = ((x0 + ctu_size).min(y.width()), (y0 + ctu_size).min(y.height()));
            let n = ((x1 - x0) * (y1 - y0)) as i64;
            let (mut s, mut s2) = (0i64, 0i64);
            for yy in y0..y1 {
                for &v in &y.data()[yy * y.width() + x0..yy * y.width() + x1] {
                    s += v as i64;
                    s2 += (v as i64) * (v as i64);
                }
            }
            let variance = (n * s2 - s * s) as f64 / n as f64;
            acts.push(1.0 + variance);
        }
    }
    let log_mean = acts.iter().map(|a| a.ln()).sum::<f64>() / acts.len() as f64;
    let values = acts
        .iter()
        .map(|a| ((a.ln() - log_mean) / std::f64::consts::LN_2).round().clamp(-3.0, 3.0) as i32)
        .collect();
    Ok(CtuGrid { cols, rows, values })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameQp {
    pub poc: u32,
    pub is_key: bool,
    /// Frame-level QP: the key-frame QP on the key frame, the base QP elsewhere.
    pub qp: i32,
    pub ctu_qps: CtuGrid<i32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QpPlan {
    pub base_qp: i32,
    pub keyframe_qp: i32,
    pub width: usize,
    pub height: usize,
    pub ctu_size: usize,
    pub frames: Vec<FrameQp>,
}

impl QpPlan {
    /// Every CTU of every frame at `base_qp`.
    pub fn uniform(base_qp: i32, width: usize, height: usize, ctu_size: usize, frame_count: usize) -> Result<Self> {
        check_ctu_size(ctu_size)?;
        check_qp(base_qp)?;
        let frames = (0..frame_count as u32)
            .map(|poc| FrameQp {
                poc,
                is_key: poc == 0,
                qp: base_qp,
                ctu_qps: CtuGrid::for_picture(width, height, ctu_size, base_qp),
            })
            .collect();
        Ok(QpPlan { base_qp, keyframe_qp: base_qp, width, height, ctu_size, frames })
    }

    pub fn frame(&self, poc: u32) -> Option<&FrameQp> {
        self.frames.iter().find(|f| f.poc == poc)
    }
}

fn check_qp(qp: i32) -> Result<()> {
    if !(0..=MAX_QP).contains(&qp) {
        return Err(Error::arg(format!("qp must be in [0, {MAX_QP}], got {qp}")));
    }
    Ok(())
}

/// Final QP per frame and CTU:
/// `clamp(frame_qp + perceptual + bim)`, with the BIM term only on POCs divisible by eight
/// and `frame_qp` being the offset key-frame QP on POC 0.
pub fn compose_qp_plan(
    base_qp: i32,
    frames: &[Frame420],
    bim: Option<&[Option<BimFrame>]>,
    perceptual: Option<&[CtuGrid<i32>]>,
    class: &SequenceClass,
    cfg: &AdaptConfig,
    ctu_size: usize,
) -> Result<QpPlan> {
    check_qp(base_qp)?;
    check_ctu_size(ctu_size)?;
    let Some(first) = frames.first() else {
        return Err(Error::arg("cannot plan an empty sequence"));
    };
    let (width, height) = (first.width(), first.height());
    let (cols, rows) = ctu_dims(width, height, ctu_size);
    let check_len = |what: &str, n: usize| {
        if n != frames.len() {
            return Err(Error::dims(format!("{what} covers {n} frames, sequence has {}", frames.len())));
        }
        Ok(())
    };
    if let Some(b) = bim {
        check_len("bim", b.len())?;
    }
    if let Some(p) = perceptual {
        check_len("perceptual", p.len())?;
    }
    let keyframe_qp = clamp_qp(base_qp + keyframe_offset(class, cfg));
    let mut out = Vec::with_capacity(frames.len());
    for (i, f) in frames.iter().enumerate() {
        let is_key = f.poc == 0;
        let frame_qp = if is_key { keyframe_qp } else { base_qp };
        let mut grid = CtuGrid::filled(cols, rows, frame_qp);
        if let Some(p) = perceptual {
            let g = &p[i];
            if g.cols != cols || g.rows != rows {
                return Err(Error::dims(format!("perceptual grid for poc {} is {}x{}, expected {cols}x{rows}", f.poc, g.cols, g.rows)));
            }
            for (q, d) in grid.values.iter_mut().zip(&g.values) {
                *q += d;
            }
        }
        if let Some(b) = bim {
            if let (true, Some(bf)) = (is_gated(f.poc), &b[i]) {
                let g = &bf.deltas;
                if g.cols != cols || g.rows != rows || bf.poc != f.poc {
                    return Err(Error::dims(format!("bim grid for poc {} does not match the frame", f.poc)));
                }
                for (q, d) in grid.values.iter_mut().zip(&g.values) {
                    *q += d;
                }
            }
        }
        for q in grid.values.iter_mut() {
            *q = clamp_qp(*q);
        }
        out.push(FrameQp { poc: f.poc, is_key, qp: frame_qp, ctu_qps: grid });
    }
    Ok(QpPlan { base_qp, keyframe_qp, width, height, ctu_size, frames: out })
}

pub const QPMAP_VERSION: u32 = 1;

pub fn write_qpmap(plan: &QpPlan) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "QPMAP {} {} {} {}", QPMAP_VERSION, plan.width, plan.height, plan.ctu_size);
    for f in &plan.frames {
        let _ = writeln!(s, "frame {} key={} qp={}", f.poc, u8::from(f.is_key), f.qp);
        for row in 0..f.ctu_qps.rows {
            let line: Vec<String> = (0..f.ctu_qps.cols).map(|c| f.ctu_qps.get(c, row).to_string()).collect();
            let _ = writeln!(s, "{}", line.join(" "));
        }
    }
    s
}

fn qerr(line: usize, msg: impl Into<String>) -> Error {
    Error::QpMap { line, msg: msg.into() }
}

fn parse_num<T: std::str::FromStr>(line: usize, what: &str, tok: Option<&str>) -> Result<T> {
    let tok = tok.ok_or_else(|| qerr(line, format!("missing {what}")))?;
    tok.parse().map_err(|_| qerr(line, format!("bad {what} {tok:?}")))
}

fn parse_kv<T: std::str::FromStr>(line: usize, key: &str, tok: Option<&str>) -> Result<T> {
    let tok = tok.ok_or_else(|| qerr(line, format!("missing {key}=")))?;
    let v = tok.strip_prefix(key).and_then(|r| r.strip_prefix('=')).ok_or_else(|| qerr(line, format!("expected {key}=<value>, got {tok:?}")))?;
    v.parse().map_err(|_| qerr(line, format!("bad {key} value {v:?}")))
}

pub fn parse_qpmap(text: &str) -> Result<QpPlan> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l)).filter(|(_, l)| !l.trim().is_empty());
    let (ln, header) = lines.next().ok_or_else(|| qerr(1, "empty qpmap"))?;
    let mut toks = header.split_whitespace();
    if toks.next() != Some("QPMAP") {
        return Err(qerr(ln, "missing QPMAP magic"));
    }
    let version: u32 = parse_num(ln, "version", toks.next())?;
    if version != QPMAP_VERSION {
        return Err(qerr(ln, format!("unsupported version {version}")));
    }
    let width: usize = parse_num(ln, "width", toks.next())?;
    let height: usize = parse_num(ln, "height", toks.next())?;
    let ctu_size: usize = parse_num(ln, "ctu size", toks.next())?;
    if toks.next().is_some() {
        return Err(qerr(ln, "trailing tokens in header"));
    }
    check_ctu_size(ctu_size).map_err(|e| qerr(ln, e.to_string()))?;
    let (cols, rows) = ctu_dims(width, height, ctu_size);

    let mut frames = Vec::new();
    while let Some((ln, line)) = lines.next() {
        let mut toks = line.split_whitespace();
        if toks.next() != Some("frame") {
            return Err(qerr(ln, format!("expected frame line, got {line:?}")));
        }
        let poc: u32 = parse_num(ln, "poc", toks.next())?;
        let key: u8 = parse_kv(ln, "key", toks.next())?;
        let qp: i32 = parse_kv(ln, "qp", toks.next())?;
        if key > 1 {
            return Err(qerr(ln, format!("key flag must be 0 or 1, got {key}")));
        }
        check_qp(qp).map_err(|e| qerr(ln, e.to_string()))?;
        let mut values = Vec::with_capacity(cols * rows);
        for _ in 0..rows {
            let (ln, row) = lines.next().ok_or_else(|| qerr(ln, format!("frame {poc}: expected {rows} grid rows")))?;
            let before = values.len();
            for tok in row.split_whitespace() {
                let q: i32 = tok.parse().map_err(|_| qerr(ln, format!("bad qp {tok:?}")))?;
                check_qp(q).map_err(|e| qerr(ln, e.to_string()))?;
                values.push(q);
            }
            if values.len() - before != cols {
                return Err(qerr(ln, format!("expected {cols} values, got {}", values.len() - before)));
            }
        }
        frames.push(FrameQp { poc, is_key: key == 1, qp, ctu_qps: CtuGrid { cols, rows, values } });
    }
    let keyframe_qp = frames.iter().find(|f| f.is_key).map(|f| f.qp);
    let base_qp = frames.iter().find(|f| !f.is_key).map(|f| f.qp).or(keyframe_qp).unwrap_or(0);
    Ok(QpPlan { base_qp, keyframe_qp: keyframe_qp.unwrap_or(base_qp), width, height, ctu_size, frames })
}
