//! The analysis chain: classify → key-frame offset → perceptual → BIM → QP plan.

use serde::{Deserialize, Serialize};

use crate::bim::{bim_sequence, is_gated, BimFrame, CtuImportance};
use crate::ctu::{check_ctu_size, CtuGrid};
use crate::error::{Error, Result};
use crate::qp_adapt::{classify_sequence, compose_qp_plan, keyframe_offset, perceptual_ctu_delta, AdaptConfig, QpPlan, SequenceClass};
use crate::video_io::Frame420;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeConfig {
    pub base_qp: i32,
    pub ctu_size: usize,
    pub enable_bim: bool,
    pub enable_perceptual: bool,
    /// Also supplies the motion search range used by BIM.
    pub adapt: AdaptConfig,
}

impl Default for AnalyzeConfig {
    fn default() -> Self {
        AnalyzeConfig { base_qp: 32, ctu_size: 128, enable_bim: true, enable_perceptual: false, adapt: AdaptConfig::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl Summary {
    fn of(values: impl Iterator<Item = f64>) -> Option<Self> {
        let v: Vec<f64> = values.collect();
        if v.is_empty() {
            return None;
        }
        Some(Summary {
            mean: v.iter().sum::<f64>() / v.len() as f64,
            min: v.iter().copied().fold(f64::INFINITY, f64::min),
            max: v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameAnalysis {
    pub poc: u32,
    pub gated: bool,
    pub e1: Option<Summary>,
    pub e2: Option<Summary>,
    pub e3: Option<Summary>,
    /// BIM delta per CTU, present on gated frames when BIM is enabled.
    pub bim_deltas: Option<CtuGrid<i32>>,
    /// Per-CTU E1/E2/E3 and delta, present when both neighbours could be analysed.
    pub importance: Option<Vec<CtuImportance>>,
    pub perceptual_deltas: Option<CtuGrid<i32>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeReport {
    pub config: AnalyzeConfig,
    pub width: usize,
    pub height: usize,
    pub frame_count: usize,
    pub class: SequenceClass,
    pub keyframe_offset: i32,
    pub keyframe_qp: i32,
    pub frames: Vec<FrameAnalysis>,
}

pub struct Analysis {
    pub plan: QpPlan,
    pub report: AnalyzeReport,
    pub bim: Option<Vec<Option<BimFrame>>>,
}

pub fn analyze(frames: &[Frame420], cfg: &AnalyzeConfig) -> Result<Analysis> {
    check_ctu_size(cfg.ctu_size)?;
    if frames.len() < 2 {
        return Err(Error::arg(format!("analysis needs at least 2 frames, got {}", frames.len())));
    }
    let a = &cfg.adapt;
    let class = classify_sequence(frames, a.probe_count, a.activity_threshold, a.search_range)?;
    let offset = keyframe_offset(&class, a);
    let perceptual = if cfg.enable_perceptual {
        Some(frames.iter().map(|f| perceptual_ctu_delta(f, cfg.ctu_size)).collect::<Result<Vec<_>>>()?)
    } else {
        None
    };
    let bim = if cfg.enable_bim { Some(bim_sequence(frames, cfg.ctu_size, a.search_range)?) } else { None };
    let plan = compose_qp_plan(cfg.base_qp, frames, bim.as_deref(), perceptual.as_deref(), &class, a, cfg.ctu_size)?;

    let per_frame = frames
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let b = bim.as_ref().and_then(|b| b[i].as_ref());
            let imp = b.and_then(|b| b.importance.as_ref());
            let summary = |pick: fn(&CtuImportance) -> f64| imp.and_then(|g| Summary::of(g.values.iter().map(pick)));
            FrameAnalysis {
                poc: f.poc,
                gated: is_gated(f.poc),
                e1: summary(|c| c.e1),
                e2: summary(|c| c.e2),
                e3: summary(|c| c.e3),
                bim_deltas: b.map(|b| b.deltas.clone()),
                importance: imp.map(|g| g.values.clone()),
                perceptual_deltas: perceptual.as_ref().map(|p| p[i].clone()),
            }
        })
        .collect();
    let report = AnalyzeReport {
        config: cfg.clone(),
        width: frames[0].width(),
        height: frames[0].height(),
        frame_count: frames.len(),
        class,
        keyframe_offset: offset,
        keyframe_qp: plan.keyframe_qp,
        frames: per_frame,
    };
    Ok(Analysis { plan, report, bim })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qp_adapt::MotionClass;
    use crate::synth::{noise_clip, static_clip};

    #[test]
    fn static_clip_is_slow_with_minus_two_everywhere() {
        let frames = static_clip(256, 128, 9);
        let cfg = AnalyzeConfig { ctu_size: 64, ..Default::default() };
        let a = analyze(&frames, &cfg).unwrap();
        assert_eq!(a.report.class.class, MotionClass::Slow);
        assert!(a.report.keyframe_offset <= -4);
        for f in &a.report.frames {
            assert_eq!(f.gated, f.poc % 8 == 0);
            match &f.bim_deltas {
                Some(d) => assert!(f.gated && d.values.iter().all(|&v| v == -2)),
                None => assert!(!f.gated),
            }
        }
        // gated CTU qp = frame qp - 2
        let f8 = a.plan.frame(8).unwrap();
        assert!(f8.ctu_qps.values.iter().all(|&q| q == f8.qp - 2));
        let f3 = a.plan.frame(3).unwrap();
        assert!(f3.ctu_qps.values.iter().all(|&q| q == 32));
    }

    #[test]
    fn noise_clip_is_fast() {
        let frames = noise_clip(64, 64, 4, 1);
        let a = analyze(&frames, &AnalyzeConfig { ctu_size: 32, ..Default::default() }).unwrap();
        assert_eq!(a.report.class.class, MotionClass::Fast);
        assert_eq!(a.report.keyframe_offset, -3);
        assert_eq!(a.plan.keyframe_qp, 29);
    }

    #[test]
    fn toggles_and_errors() {
        let frames = static_clip(64, 64, 9);
        let cfg = AnalyzeConfig { ctu_size: 32, enable_bim: false, enable_perceptual: true, ..Default::default() };
        let a = analyze(&frames, &cfg).unwrap();
        assert!(a.bim.is_none());
        assert!(a.report.frames.iter().all(|f| f.bim_deltas.is_none() && f.perceptual_deltas.is_some()));
        assert!(analyze(&frames[..1], &cfg).is_err());
        assert!(analyze(&frames, &AnalyzeConfig { ctu_size: 24, ..cfg }).is_err());
    }
}
