//! Rank decisions and small dense helpers.

use nalgebra::DMatrix;

/// Relative singular-value threshold for rank decisions.
pub const RANK_THRESHOLD: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct RankInfo {
    pub rank: usize,
    pub nullity: usize,
    pub sigma_max: f64,
    /// Smallest singular value counted in the rank (0 when the rank is 0).
    pub smallest_kept: f64,
    /// Largest singular value counted as zero (0 when none).
    pub largest_dropped: f64,
}

impl RankInfo {
    /// True when the decision sits within a factor 10 of the threshold on either side.
    pub fn ambiguous(&self) -> bool {
        let cut = RANK_THRESHOLD * self.sigma_max;
        (self.smallest_kept > 0.0 && self.smallest_kept < 10.0 * cut)
            || (self.largest_dropped > 0.0 && self.largest_dropped > 0.1 * cut)
    }
}

/// Numerical rank with threshold `RANK_THRESHOLD · σ_max`; nullity counts columns.
pub fn rank_info(m: &DMatrix<f64>) -> RankInfo {
    let cols = m.ncols();
    if m.nrows() == 0 || cols == 0 {
        return RankInfo { rank: 0, nullity: cols, sigma_max: 0.0, smallest_kept: 0.0, largest_dropped: 0.0 };
    }
    let sv = m.singular_values();
    let sigma_max = sv.max();
    let cut = RANK_THRESHOLD * sigma_max;
    let mut rank = 0;
    let mut smallest_kept = 0.0f64;
    let mut largest_dropped = 0.0f64;
    for &s in sv.iter() {
        if sigma_max > 0.0 && s > cut {
            rank += 1;
            smallest_kept = if smallest_kept == 0.0 { s } else { smallest_kept.min(s) };
        } else {
            largest_dropped = largest_dropped.max(s);
        }
    }
    RankInfo { rank, nullity: cols - rank, sigma_max, smallest_kept, largest_dropped }
}

pub fn rank(m: &DMatrix<f64>) -> usize {
    rank_info(m).rank
}

/// Largest entry strictly above the diagonal blocks defined by `offsets`
/// (block `b` spans rows/columns `offsets[b]..offsets[b+1]`).
pub fn strict_upper_block_max(m: &DMatrix<f64>, offsets: &[usize]) -> f64 {
    let mut worst: f64 = 0.0;
    for b in 0..offsets.len().saturating_sub(1) {
        for i in offsets[b]..offsets[b + 1] {
            for j in offsets[b + 1]..m.ncols() {
                worst = worst.max(m[(i, j)].abs());
            }
        }
    }
    worst
}

/// Largest off-diagonal entry.
pub fn off_diagonal_max(m: &DMatrix<f64>) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if i != j {
                worst = worst.max(m[(i, j)].abs());
            }
        }
    }
    worst
}

/// Ratio of extreme singular values; infinite for singular input.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.singular_values();
    if sv.is_empty() {
        return 1.0;
    }
    sv.max() / sv.min()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_examples() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0, 0.0, 1.0, 1.0]);
        let info = rank_info(&m);
        assert_eq!((info.rank, info.nullity), (2, 1));
        assert_eq!(rank_info(&DMatrix::zeros(0, 4)).nullity, 4);
        assert_eq!(rank(&DMatrix::zeros(3, 3)), 0);
    }

    #[test]
    fn block_helpers() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 5.0, 1.0, 0.5, 1.0, 1.0, 1.0]);
        assert_eq!(strict_upper_block_max(&m, &[0, 1, 3]), 0.0);
        assert_eq!(strict_upper_block_max(&m, &[0, 1, 2, 3]), 0.5);
        assert_eq!(off_diagonal_max(&m), 5.0);
    }
}
