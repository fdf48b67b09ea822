use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major per-CTU values covering a picture (partial CTUs included).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CtuGrid<T> {
    pub cols: usize,
    pub rows: usize,
    pub values: Vec<T>,
}

impl<T: Clone> CtuGrid<T> {
    pub fn filled(cols: usize, rows: usize, value: T) -> Self {
        CtuGrid { cols, rows, values: vec![value; cols * rows] }
    }

    pub fn for_picture(width: usize, height: usize, ctu_size: usize, value: T) -> Self {
        let (cols, rows) = ctu_dims(width, height, ctu_size);
        Self::filled(cols, rows, value)
    }
}

impl<T> CtuGrid<T> {
    #[inline]
    pub fn get(&self, col: usize, row: usize) -> &T {
        &self.values[row * self.cols + col]
    }

    #[inline]
    pub fn get_mut(&mut self, col: usize, row: usize) -> &mut T {
        &mut self.values[row * self.cols + col]
    }

    pub fn same_shape<U>(&self, other: &CtuGrid<U>) -> bool {
        self.cols == other.cols && self.rows == other.rows
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> CtuGrid<U> {
        CtuGrid { cols: self.cols, rows: self.rows, values: self.values.iter().map(f).collect() }
    }
}

pub fn ctu_dims(width: usize, height: usize, ctu_size: usize) -> (usize, usize) {
    (width.div_ceil(ctu_size), height.div_ceil(ctu_size))
}

/// CTU sizes must be a positive multiple of 16 (the analysis and coding block size).
pub fn check_ctu_size(ctu_size: usize) -> Result<()> {
    if ctu_size == 0 || !ctu_size.is_multiple_of(16) {
        return Err(Error::arg(format!("ctu size must be a positive multiple of 16, got {ctu_size}")));
    }
    Ok(())
}
