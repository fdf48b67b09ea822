//! Deterministic synthetic clips used by tests, the acceptance suite and demos.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::motion::downsample2x;
use crate::video_io::{Frame420, Plane};

/// Smooth multi-frequency texture sampled at (x + ox, y + oy).
pub fn texture_sample(x: f64, y: f64) -> u8 {
    let v = 128.0
        + 45.0 * (x * 0.23).sin() * (y * 0.19).cos()
        + 30.0 * ((x + 1.7 * y) * 0.09).sin()
        + 15.0 * ((x - y) * 0.41).cos();
    v.round().clamp(0.0, 255.0) as u8
}

pub fn texture_plane(width: usize, height: usize, ox: f64, oy: f64) -> Plane {
    Plane::from_fn(width, height, |x, y| texture_sample(x as f64 + ox, y as f64 + oy))
}

/// Builds a frame whose chroma is a shifted, attenuated copy of the downsampled luma.
pub fn frame_from_luma(y: Plane, poc: u32) -> Frame420 {
    let small = downsample2x(&y);
    let cb = Plane::from_fn(small.width(), small.height(), |x, yy| (small.get(x, yy) as u16 / 2 + 64) as u8);
    let cr = Plane::from_fn(small.width(), small.height(), |x, yy| (192 - small.get(x, yy) as u16 / 2) as u8);
    Frame420 { y, cb, cr, poc }
}

pub fn static_clip(width: usize, height: usize, frames: usize) -> Vec<Frame420> {
    let y = texture_plane(width, height, 0.0, 0.0);
    (0..frames).map(|i| frame_from_luma(y.clone(), i as u32)).collect()
}

pub fn noise_plane(width: usize, height: usize, rng: &mut impl Rng) -> Plane {
    Plane::from_fn(width, height, |_, _| rng.gen())
}

/// Independent uniform noise in every frame.
pub fn noise_clip(width: usize, height: usize, frames: usize, seed: u64) -> Vec<Frame420> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..frames)
        .map(|i| {
            let y = noise_plane(width, height, &mut rng);
            let cb = noise_plane(width / 2, height / 2, &mut rng);
            let cr = noise_plane(width / 2, height / 2, &mut rng);
            Frame420 { y, cb, cr, poc: i as u32 }
        })
        .collect()
}

/// Texture panning by (vx, vy) samples per frame.
pub fn panning_clip(width: usize, height: usize, frames: usize, vx: f64, vy: f64) -> Vec<Frame420> {
    (0..frames)
        .map(|i| frame_from_luma(texture_plane(width, height, vx * i as f64, vy * i as f64), i as u32))
        .collect()
}

/// Rectangle in luma samples.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl Rect {
    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x && x < self.x + self.w && y >= self.y && y < self.y + self.h
    }
}

/// Flat background with a fixed noise patch that is visible only in the frames
/// listed in `visible`.
pub fn transient_patch_clip(
    width: usize,
    height: usize,
    frames: usize,
    background: u8,
    patch: Rect,
    visible: &[u32],
    seed: u64,
) -> Vec<Frame420> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pattern: Vec<u8> = (0..patch.w * patch.h).map(|_| rng.gen()).collect();
    (0..frames as u32)
        .map(|poc| {
            let show = visible.contains(&poc);
            let y = Plane::from_fn(width, height, |x, yy| {
                if show && patch.contains(x, yy) {
                    pattern[(yy - patch.y) * patch.w + (x - patch.x)]
                } else {
                    background
                }
            });
            Frame420::from_luma(y, poc)
        })
        .collect()
}

/// Static textured scene with one region that is refreshed with new content
/// every frame. The persistent part keeps its texture for the whole clip.
pub fn persistent_transient_clip(width: usize, height: usize, frames: usize, transient: Rect, seed: u64) -> Vec<Frame420> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = texture_plane(width, height, 0.0, 0.0);
    (0..frames as u32)
        .map(|poc| {
            let ox: f64 = rng.gen_range(0.0..500.0);
            let oy: f64 = rng.gen_range(0.0..500.0);
            let y = Plane::from_fn(width, height, |x, yy| {
                if transient.contains(x, yy) {
                    texture_sample(x as f64 * 1.7 + ox, yy as f64 * 1.3 + oy)
                } else {
                    base.get(x, yy)
                }
            });
            frame_from_luma(y, poc)
        })
        .collect()
}
