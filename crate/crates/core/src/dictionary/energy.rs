use faer::ColRef;

use crate::c64;

/// `ceil(sqrt(n))`.
pub fn default_block_size(n: usize) -> usize {
    let mut b = (n as f64).sqrt().floor() as usize;
    while b * b < n {
        b += 1;
    }
    b.max(1)
}

/// Energy of consecutive length-`block` slices of `x`; the last block may be
/// shorter.
pub fn block_energies(x: ColRef<'_, c64>, block: usize) -> Vec<f64> {
    assert!(block >= 1);
    let n = x.nrows();
    (0..n.div_ceil(block))
        .map(|b| (b * block..((b + 1) * block).min(n)).map(|i| x[i].norm_sqr()).sum())
        .collect()
}

/// Smallest number of blocks whose combined energy reaches `fraction` of the
/// total. Zero for an all-zero input.
pub fn blocks_for_fraction(energies: &[f64], fraction: f64) -> usize {
    let total: f64 = energies.iter().sum();
    if total <= 0.0 {
        return 0;
    }
    let mut sorted = energies.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let target = fraction * total;
    let mut acc = 0.0;
    for (i, e) in sorted.iter().enumerate() {
        acc += e;
        if acc >= target {
            return i + 1;
        }
    }
    sorted.len()
}

/// Index of the most energetic block, lowest index on ties.
pub fn peak_block(energies: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &e) in energies.iter().enumerate() {
        if best.is_none_or(|(_, b)| e > b) {
            best = Some((i, e));
        }
    }
    best.map(|(i, _)| i)
}
