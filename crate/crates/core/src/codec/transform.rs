//! 8x8 orthonormal DCT-II, zigzag scan and the exponential quantizer.

use std::sync::OnceLock;

use crate::error::{Error, Result};

pub type Block8 = [f64; 64];

fn basis() -> &'static [[f64; 8]; 8] {
    static BASIS: OnceLock<[[f64; 8]; 8]> = OnceLock::new();
    BASIS.get_or_init(|| {
        let mut m = [[0.0; 8]; 8];
        for (k, row) in m.iter_mut().enumerate() {
            let a = if k == 0 { (1.0f64 / 8.0).sqrt() } else { (2.0f64 / 8.0).sqrt() };
            for (n, v) in row.iter_mut().enumerate() {
                *v = a * (((2 * n + 1) * k) as f64 * std::f64::consts::PI / 16.0).cos();
            }
        }
        m
    })
}

pub fn dct8(block: &Block8) -> Block8 {
    let c = basis();
    let mut tmp = [0.0; 64];
    // rows
    for y in 0..8 {
        for k in 0..8 {
            let mut acc = 0.0;
            for n in 0..8 {
                acc += c[k][n] * block[y * 8 + n];
            }
            tmp[y * 8 + k] = acc;
        }
    }
    let mut out = [0.0; 64];
    for x in 0..8 {
        for k in 0..8 {
            let mut acc = 0.0;
            for n in 0..8 {
                acc += c[k][n] * tmp[n * 8 + x];
            }
            out[k * 8 + x] = acc;
        }
    }
    out
}

pub fn idct8(coefs: &Block8) -> Block8 {
    let c = basis();
    let mut tmp = [0.0; 64];
    for x in 0..8 {
        for n in 0..8 {
            let mut acc = 0.0;
            for k in 0..8 {
                acc += c[k][n] * coefs[k * 8 + x];
            }
            tmp[n * 8 + x] = acc;
        }
    }
    let mut out = [0.0; 64];
    for y in 0..8 {
        for n in 0..8 {
            let mut acc = 0.0;
            for k in 0..8 {
                acc += c[k][n] * tmp[y * 8 + k];
            }
            out[y * 8 + n] = acc;
        }
    }
    out
}

/// Raster index of the i-th coefficient in zigzag order.
pub const ZIGZAG: [usize; 64] = [
    0, 1, 8, 16, 9, 2, 3, 10, 17, 24, 32, 25, 18, 11, 4, 5, 12, 19, 26, 33, 40, 48, 41, 34, 27, 20, 13, 6, 7, 14, 21, 28, 35, 42,
    49, 56, 57, 50, 43, 36, 29, 22, 15, 23, 30, 37, 44, 51, 58, 59, 52, 45, 38, 31, 39, 46, 53, 60, 61, 54, 47, 55, 62, 63,
];

/// `2^((qp - 4) / 6)`
pub fn qstep(qp: i32) -> Result<f64> {
    if !(0..=63).contains(&qp) {
        return Err(Error::arg(format!("qp must be in [0, 63], got {qp}")));
    }
    Ok(2f64.powf((qp - 4) as f64 / 6.0))
}

/// Rounds `coef / qstep` half away from zero.
pub fn quantize(coef: f64, qstep: f64) -> i32 {
    (coef / qstep).round() as i32
}

pub fn dequantize(level: i32, qstep: f64) -> f64 {
    level as f64 * qstep
}

/// Forward transform and quantization, levels returned in zigzag order.
pub fn quantize_block(residual: &Block8, qstep: f64) -> [i32; 64] {
    let coefs = dct8(residual);
    let mut levels = [0; 64];
    for (i, &r) in ZIGZAG.iter().enumerate() {
        levels[i] = quantize(coefs[r], qstep);
    }
    levels
}

/// Inverse of [`quantize_block`] up to quantization error.
pub fn dequantize_block(levels: &[i32; 64], qstep: f64) -> Block8 {
    if levels.iter().all(|&l| l == 0) {
        return [0.0; 64];
    }
    let mut coefs = [0.0; 64];
    for (i, &r) in ZIGZAG.iter().enumerate() {
        coefs[r] = dequantize(levels[i], qstep);
    }
    idct8(&coefs)
}
