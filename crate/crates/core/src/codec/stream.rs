//! Sequence header and per-frame header syntax.
//!
//! ```text
//! "TVC1" u8 version u16 width u16 height u16 frames u8 log2(ctu_size) u8 flags   (little-endian)
//! per frame, byte aligned:
//!   u16 poc, u8 is_key
//!   ue(frame_qp), se(ctu_qp - frame_qp) per CTU
//!   [cnnlf] u1 frame_on, [frame_on] u1 per CTU
//!   blocks in raster order, zero padding to a byte boundary
//! ```

use serde::{Deserialize, Serialize};

use super::entropy::{BitReader, BitWriter};
use crate::ctu::{check_ctu_size, ctu_dims, CtuGrid};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"TVC1";
pub const VERSION: u8 = 1;
pub const HEADER_BYTES: usize = 13;

const FLAG_CNNLF: u8 = 1;
const FLAG_NN_INTRA: u8 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamHeader {
    pub width: usize,
    pub height: usize,
    pub frame_count: usize,
    pub ctu_size: usize,
    pub cnnlf: bool,
    pub nn_intra: bool,
}

impl StreamHeader {
    pub fn validate(&self) -> Result<()> {
        check_ctu_size(self.ctu_size)?;
        if !self.ctu_size.is_power_of_two() || self.ctu_size > 1 << 15 {
            return Err(Error::arg(format!("coded ctu size must be a power of two, got {}", self.ctu_size)));
        }
        if self.width == 0 || self.height == 0 || !self.width.is_multiple_of(2) || !self.height.is_multiple_of(2) {
            return Err(Error::dims(format!("{}x{} is not a valid 4:2:0 size", self.width, self.height)));
        }
        for (what, v) in [("width", self.width), ("height", self.height), ("frame count", self.frame_count)] {
            if v > u16::MAX as usize {
                return Err(Error::arg(format!("{what} {v} does not fit the stream header")));
            }
        }
        Ok(())
    }

    pub fn write(&self, w: &mut BitWriter) -> Result<()> {
        self.validate()?;
        w.write_bytes(MAGIC);
        w.write_bytes(&[VERSION]);
        for v in [self.width, self.height, self.frame_count] {
            w.write_bytes(&(v as u16).to_le_bytes());
        }
        let flags = if self.cnnlf { FLAG_CNNLF } else { 0 } | if self.nn_intra { FLAG_NN_INTRA } else { 0 };
        w.write_bytes(&[self.ctu_size.trailing_zeros() as u8, flags]);
        Ok(())
    }

    pub fn read(r: &mut BitReader<'_>) -> Result<Self> {
        let mut magic = [0u8; 4];
        for b in magic.iter_mut() {
            *b = r.read_u8()?;
        }
        if &magic != MAGIC {
            return Err(Error::Bitstream { bit: 0, msg: "not a TVC1 stream".into() });
        }
        let version = r.read_u8()?;
        if version != VERSION {
            return Err(Error::Bitstream { bit: 32, msg: format!("unsupported version {version}") });
        }
        let width = r.read_u16_le()? as usize;
        let height = r.read_u16_le()? as usize;
        let frame_count = r.read_u16_le()? as usize;
        let log2 = r.read_u8()?;
        if log2 > 15 {
            return Err(Error::Bitstream { bit: 88, msg: format!("ctu size log2 {log2} out of range") });
        }
        let ctu_size = 1usize << log2;
        let at = r.position();
        let flags = r.read_u8()?;
        if flags & !(FLAG_CNNLF | FLAG_NN_INTRA) != 0 {
            return Err(Error::Bitstream { bit: at, msg: format!("unknown header flags {flags:#04x}") });
        }
        let h = StreamHeader {
            width,
            height,
            frame_count,
            ctu_size,
            cnnlf: flags & FLAG_CNNLF != 0,
            nn_intra: flags & FLAG_NN_INTRA != 0,
        };
        h.validate().map_err(|e| Error::Bitstream { bit: 40, msg: e.to_string() })?;
        Ok(h)
    }

    pub fn ctu_grid(&self) -> (usize, usize) {
        ctu_dims(self.width, self.height, self.ctu_size)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrameHeader {
    pub poc: u32,
    pub is_key: bool,
    pub qp: i32,
    pub ctu_qps: CtuGrid<i32>,
    /// `None` when the stream has no CNNLF; `Some(all false)` when the frame flag is off.
    pub cnnlf_flags: Option<CtuGrid<bool>>,
}

impl FrameHeader {
    pub fn cnnlf_on(&self) -> bool {
        self.cnnlf_flags.as_ref().is_some_and(|f| f.values.iter().any(|&b| b))
    }

    pub fn write(&self, w: &mut BitWriter, stream: &StreamHeader) -> Result<()> {
        let poc = u16::try_from(self.poc).map_err(|_| Error::arg(format!("poc {} does not fit the stream", self.poc)))?;
        let (cols, rows) = stream.ctu_grid();
        if self.ctu_qps.cols != cols || self.ctu_qps.rows != rows {
            return Err(Error::dims("ctu qp grid does not match the stream"));
        }
        if !(0..=63).contains(&self.qp) || self.ctu_qps.values.iter().any(|q| !(0..=63).contains(q)) {
            return Err(Error::arg(format!("frame {} has a qp outside [0, 63]", self.poc)));
        }
        w.write_bytes(&poc.to_le_bytes());
        w.write_bytes(&[self.is_key as u8]);
        w.write_ue(self.qp as u32);
        for &q in &self.ctu_qps.values {
            w.write_se(q - self.qp);
        }
        match (&self.cnnlf_flags, stream.cnnlf) {
            (Some(flags), true) => {
                let on = self.cnnlf_on();
                w.write_bit(on);
                if on {
                    flags.values.iter().for_each(|&f| w.write_bit(f));
                }
            }
            (None, false) => {}
            _ => return Err(Error::arg("cnnlf flags do not match the stream header")),
        }
        Ok(())
    }

    pub fn read(r: &mut BitReader<'_>, stream: &StreamHeader) -> Result<Self> {
        let poc = r.read_u16_le()? as u32;
        let at = r.position();
        let is_key = match r.read_u8()? {
            0 => false,
            1 => true,
            v => return Err(Error::Bitstream { bit: at, msg: format!("invalid key flag {v}") }),
        };
        let at = r.position();
        let qp = r.read_ue()? as i64;
        if qp > 63 {
            return Err(Error::Bitstream { bit: at, msg: format!("frame qp {qp} out of range") });
        }
        let qp = qp as i32;
        let (cols, rows) = stream.ctu_grid();
        let mut ctu_qps = CtuGrid::filled(cols, rows, qp);
        for q in ctu_qps.values.iter_mut() {
            let at = r.position();
            let v = qp as i64 + r.read_se()? as i64;
            if !(0..=63).contains(&v) {
                return Err(Error::Bitstream { bit: at, msg: format!("ctu qp {v} out of range") });
            }
            *q = v as i32;
        }
        let cnnlf_flags = if stream.cnnlf {
            let mut flags = CtuGrid::filled(cols, rows, false);
            if r.read_bit()? {
                for f in flags.values.iter_mut() {
                    *f = r.read_bit()?;
                }
            }
            Some(flags)
        } else {
            None
        };
        Ok(FrameHeader { poc, is_key, qp, ctu_qps, cnnlf_flags })
    }
}
