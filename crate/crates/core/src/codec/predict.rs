//! DC and Planar intra prediction from reconstructed neighbours.
//!
//! Both predictors see only samples already reconstructed in raster block
//! order: the row directly above the block and the column directly to its left.

use crate::video_io::Plane;

/// Neighbour samples of an `n`x`n` block. `top[n]` is the above-right sample and
/// `left[n]` the below-left one; both are substituted when not reconstructed yet.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Neighbours {
    pub top: Vec<u8>,
    pub left: Vec<u8>,
    /// Number of genuinely available samples in `top[..n]` and `left[..n]`.
    pub top_avail: usize,
    pub left_avail: usize,
}

pub fn neighbours(recon: &Plane, x0: usize, y0: usize, n: usize) -> Neighbours {
    let (w, h) = (recon.width(), recon.height());
    let top_avail = if y0 > 0 { n.min(w.saturating_sub(x0)) } else { 0 };
    let left_avail = if x0 > 0 { n.min(h.saturating_sub(y0)) } else { 0 };
    let top_real: Vec<u8> = (0..top_avail).map(|i| recon.get(x0 + i, y0 - 1)).collect();
    let left_real: Vec<u8> = (0..left_avail).map(|i| recon.get(x0 - 1, y0 + i)).collect();

    let fill = |real: &[u8], other: &[u8]| -> Vec<u8> {
        let pad = real.last().or(other.first()).copied().unwrap_or(128);
        let mut v = real.to_vec();
        v.resize(n + 1, pad);
        v
    };
    let mut top = fill(&top_real, &left_real);
    let left = fill(&left_real, &top_real);
    if top_avail == n && x0 + n < w {
        top[n] = recon.get(x0 + n, y0 - 1);
    }
    Neighbours { top, left, top_avail, left_avail }
}

/// Rounded mean of the available neighbours, 128 when there are none.
pub fn predict_dc(nb: &Neighbours, n: usize) -> Vec<u8> {
    let count = (nb.top_avail + nb.left_avail) as u32;
    let dc = if count == 0 {
        128
    } else {
        let sum: u32 = nb.top[..nb.top_avail].iter().chain(&nb.left[..nb.left_avail]).map(|&v| v as u32).sum();
        ((sum + count / 2) / count) as u8
    };
    vec![dc; n * n]
}

/// Bilinear blend of the left/above-right and top/below-left references.
pub fn predict_planar(nb: &Neighbours, n: usize) -> Vec<u8> {
    let shift = n.trailing_zeros() + 1;
    let (tr, bl) = (nb.top[n] as u32, nb.left[n] as u32);
    let mut out = Vec::with_capacity(n * n);
    for y in 0..n {
        for x in 0..n {
            let v = (n - 1 - x) as u32 * nb.left[y] as u32
                + (x + 1) as u32 * tr
                + (n - 1 - y) as u32 * nb.top[x] as u32
                + (y + 1) as u32 * bl
                + n as u32;
            out.push((v >> shift) as u8);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_neighbours_predict_constant() {
        let p = Plane::filled(64, 64, 100);
        for (x0, y0) in [(16, 16), (0, 16), (16, 0), (48, 48)] {
            let nb = neighbours(&p, x0, y0, 16);
            assert!(predict_planar(&nb, 16).iter().all(|&v| v == 100));
            assert!(predict_dc(&nb, 16).iter().all(|&v| v == 100));
        }
    }

    #[test]
    fn first_block_predicts_mid_grey() {
        let p = Plane::filled(32, 32, 7);
        let nb = neighbours(&p, 0, 0, 16);
        assert_eq!(nb.top_avail + nb.left_avail, 0);
        assert!(predict_dc(&nb, 16).iter().all(|&v| v == 128));
        assert!(predict_planar(&nb, 16).iter().all(|&v| v == 128));
    }

    #[test]
    fn dc_is_rounded_mean_of_available() {
        // top row all 10, left column all 21 -> (16*10 + 16*21 + 16) / 32 = 16 (15.5 rounds up)
        let p = Plane::from_fn(32, 32, |x, y| if y < 16 { 10 } else if x < 16 { 21 } else { 0 });
        let nb = neighbours(&p, 16, 16, 16);
        assert_eq!(predict_dc(&nb, 16)[0], 16);
    }

    #[test]
    fn planar_matches_direct_formula() {
        let p = Plane::from_fn(48, 48, |x, y| ((x * 7 + y * 13) % 251) as u8);
        let n = 16;
        let (x0, y0) = (16, 16);
        let nb = neighbours(&p, x0, y0, n);
        let pred = predict_planar(&nb, n);
        let t = |i: usize| p.get(x0 + i, y0 - 1) as i64;
        let l = |i: usize| p.get(x0 - 1, y0 + i) as i64;
        for y in 0..n {
            for x in 0..n {
                // below-left is not yet reconstructed: it repeats the last left sample
                let v = (15 - x as i64) * l(y) + (x as i64 + 1) * t(16) + (15 - y as i64) * t(x) + (y as i64 + 1) * l(15) + 16;
                assert_eq!(pred[y * n + x] as i64, v >> 5);
            }
        }
    }

    #[test]
    fn partial_edge_block_repeats_last_sample() {
        let p = Plane::from_fn(40, 24, |x, _| x as u8);
        let nb = neighbours(&p, 32, 16, 16);
        assert_eq!(nb.top_avail, 8);
        assert_eq!(nb.left_avail, 8);
        assert_eq!(nb.top[7], 39);
        assert!(nb.top[8..].iter().all(|&v| v == 39));
    }
}
