//! Raw planar 4:2:0 video (I420 byte order, 8-bit, headerless) and PSNR.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// One 8-bit sample plane, row-major.
#[derive(Clone, PartialEq, Eq)]
pub struct Plane {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl fmt::Debug for Plane {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Plane")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

impl Plane {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::dims(format!(
                "plane {}x{} needs {} samples, got {}",
                width,
                height,
                width * height,
                data.len()
            )));
        }
        Ok(Plane { width, height, data })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Plane { width, height, data: vec![value; width * height] }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Plane { width, height, data }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.data[y * self.width + x] = v;
    }

    /// Sample fetch with out-of-picture coordinates clamped to the nearest edge.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> u8 {
        let cx = x.clamp(0, self.width as isize - 1) as usize;
        let cy = y.clamp(0, self.height as isize - 1) as usize;
        self.data[cy * self.width + cx]
    }

    pub fn same_dims(&self, other: &Plane) -> bool {
        self.width == other.width && self.height == other.height
    }
}

/// One 4:2:0 picture.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame420 {
    pub y: Plane,
    pub cb: Plane,
    pub cr: Plane,
    pub poc: u32,
}

impl Frame420 {
    pub fn new(y: Plane, cb: Plane, cr: Plane, poc: u32) -> Result<Self> {
        let (cw, ch) = chroma_dims(y.width(), y.height());
        if cb.width() != cw || cb.height() != ch || !cb.same_dims(&cr) {
            return Err(Error::dims(format!(
                "chroma planes must be {}x{} for a {}x{} luma plane",
                cw,
                ch,
                y.width(),
                y.height()
            )));
        }
        Ok(Frame420 { y, cb, cr, poc })
    }

    /// Luma plane with neutral (128) chroma.
    pub fn from_luma(y: Plane, poc: u32) -> Self {
        let (cw, ch) = chroma_dims(y.width(), y.height());
        Frame420 { y, cb: Plane::filled(cw, ch, 128), cr: Plane::filled(cw, ch, 128), poc }
    }

    pub fn width(&self) -> usize {
        self.y.width()
    }

    pub fn height(&self) -> usize {
        self.y.height()
    }

    pub fn planes(&self) -> [&Plane; 3] {
        [&self.y, &self.cb, &self.cr]
    }

    pub fn planes_mut(&mut self) -> [&mut Plane; 3] {
        [&mut self.y, &mut self.cb, &mut self.cr]
    }
}

pub fn chroma_dims(width: usize, height: usize) -> (usize, usize) {
    (width.div_ceil(2), height.div_ceil(2))
}

fn frame_bytes(width: usize, height: usize) -> usize {
    width * height * 3 / 2
}

fn check_even(width: usize, height: usize) -> Result<()> {
    if width == 0 || height == 0 || !width.is_multiple_of(2) || !height.is_multiple_of(2) {
        return Err(Error::dims(format!("width and height must be even and nonzero, got {width}x{height}")));
    }
    Ok(())
}

/// Splits an I420 byte stream into frames, numbering them from POC 0.
pub fn read_yuv420(source: &[u8], width: usize, height: usize) -> Result<Vec<Frame420>> {
    check_even(width, height)?;
    let luma = width * height;
    let chroma = luma / 4;
    let size = frame_bytes(width, height);
    let whole = source.len() / size;
    if !source.len().is_multiple_of(size) {
        return Err(Error::TruncatedStream { offset: whole * size });
    }
    let (cw, ch) = (width / 2, height / 2);
    source
        .chunks_exact(size)
        .enumerate()
        .map(|(i, chunk)| {
            let y = Plane { width, height, data: chunk[..luma].to_vec() };
            let cb = Plane { width: cw, height: ch, data: chunk[luma..luma + chroma].to_vec() };
            let cr = Plane { width: cw, height: ch, data: chunk[luma + chroma..].to_vec() };
            Ok(Frame420 { y, cb, cr, poc: i as u32 })
        })
        .collect()
}

pub fn write_yuv420(frames: &[Frame420]) -> Result<Vec<u8>> {
    let Some(first) = frames.first() else {
        return Ok(Vec::new());
    };
    let (w, h) = (first.width(), first.height());
    check_even(w, h)?;
    let mut out = Vec::with_capacity(frames.len() * frame_bytes(w, h));
    for f in frames {
        if f.width() != w || f.height() != h {
            return Err(Error::dims(format!(
                "frame poc {} is {}x{}, expected {}x{}",
                f.poc,
                f.width(),
                f.height(),
                w,
                h
            )));
        }
        for p in f.planes() {
            out.extend_from_slice(p.data());
        }
    }
    Ok(out)
}

/// PSNR in dB; `f64::INFINITY` when the planes are identical.
///
/// Serialized as a JSON number, or the string `"inf"` for the infinite case.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Psnr(pub f64);

impl Psnr {
    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }

    pub fn db(self) -> f64 {
        self.0
    }
}

impl fmt::Display for Psnr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{:.4}", self.0)
        }
    }
}

impl Serialize for Psnr {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Psnr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(Psnr(v)),
            Repr::Str(s) if s == "inf" => Ok(Psnr(f64::INFINITY)),
            Repr::Str(s) => Err(serde::de::Error::custom(format!("bad psnr value {s:?}"))),
        }
    }
}

pub fn sse(reference: &Plane, test: &Plane) -> Result<u64> {
    if !reference.same_dims(test) {
        return Err(Error::dims(format!(
            "plane {}x{} vs {}x{}",
            reference.width(),
            reference.height(),
            test.width(),
            test.height()
        )));
    }
    Ok(reference
        .data()
        .iter()
        .zip(test.data())
        .map(|(&a, &b)| {
            let d = a as i64 - b as i64;
            (d * d) as u64
        })
        .sum())
}

pub fn psnr_from_sse(sse: u64, samples: usize) -> Psnr {
    if sse == 0 {
        return Psnr(f64::INFINITY);
    }
    let mse = sse as f64 / samples as f64;
    Psnr(10.0 * (255.0f64 * 255.0 / mse).log10())
}

pub fn psnr(reference: &Plane, test: &Plane) -> Result<Psnr> {
    let e = sse(reference, test)?;
    Ok(psnr_from_sse(e, reference.data().len()))
}

/// Per-plane PSNR of one frame pair.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct FramePsnr {
    pub y: Psnr,
    pub cb: Psnr,
    pub cr: Psnr,
}

pub fn frame_psnr(reference: &Frame420, test: &Frame420) -> Result<FramePsnr> {
    Ok(FramePsnr {
        y: psnr(&reference.y, &test.y)?,
        cb: psnr(&reference.cb, &test.cb)?,
        cr: psnr(&reference.cr, &test.cr)?,
    })
}

/// Sequence PSNR: arithmetic mean of per-frame luma PSNR.
pub fn sequence_psnr(reference: &[Frame420], test: &[Frame420]) -> Result<Psnr> {
    if reference.len() != test.len() || reference.is_empty() {
        return Err(Error::dims(format!(
            "sequence lengths {} and {} must match and be nonzero",
            reference.len(),
            test.len()
        )));
    }
    let mut total = 0.0;
    for (r, t) in reference.iter().zip(test) {
        total += psnr(&r.y, &t.y)?.0;
    }
    Ok(Psnr(total / reference.len() as f64))
}
