//! The Qn scale estimator.

use crate::error::{Error, Result};

pub const QN_CONSISTENCY: f64 = 2.2219;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QnConfig {
    pub consistency_c: f64,
    pub apply_consistency: bool,
    /// Multiply by the small-sample factor `d_N` of [`qn_finite_factor`].
    pub finite_sample_correction: bool,
}

impl Default for QnConfig {
    fn default() -> Self {
        QnConfig { consistency_c: QN_CONSISTENCY, apply_consistency: true, finite_sample_correction: false }
    }
}

/// Croux and Rousseeuw's small-sample factor `d_N` for Qn at the normal:
/// tabulated for `N <= 9`, else `N/(N+1.4)` for odd and `N/(N+3.8)` for even `N`.
pub fn qn_finite_factor(n: usize) -> f64 {
    const SMALL: [f64; 8] = [0.399, 0.994, 0.512, 0.844, 0.611, 0.857, 0.669, 0.872];
    match n {
        0 | 1 => 1.0,
        2..=9 => SMALL[n - 2],
        _ if n % 2 == 1 => n as f64 / (n as f64 + 1.4),
        _ => n as f64 / (n as f64 + 3.8),
    }
}

/// Order statistic used by Qn for a sample of size `n`: `C(⌊n/2⌋ + 1, 2)` (one-based).
pub fn qn_order(n: usize) -> usize {
    let h = n / 2 + 1;
    h * (h - 1) / 2
}

/// Reference Qn: enumerates all pairwise differences, then selects.
pub fn qn_raw_naive(sample: &[f64]) -> Result<f64> {
    let n = sample.len();
    if n < 2 {
        return Err(Error::SampleTooSmall { n, min: 2 });
    }
    let mut diffs = Vec::with_capacity(n * (n - 1) / 2);
    for (i, &a) in sample.iter().enumerate() {
        for &b in &sample[i + 1..] {
            diffs.push((a - b).abs());
        }
    }
    let k = qn_order(n);
    let (_, kth, _) = diffs.select_nth_unstable_by(k - 1, f64::total_cmp);
    Ok(*kth)
}

/// The `k`-th smallest pairwise absolute difference, `k = C(⌊N/2⌋+1, 2)`.
///
/// Large finite samples use randomized selection over the implicitly sorted
/// difference matrix (`O(N log N)` expected); the result is bit-identical to
/// [`qn_raw_naive`].
pub fn qn_raw(sample: &[f64]) -> Result<f64> {
    const NAIVE_BELOW: usize = 64;
    if sample.len() < NAIVE_BELOW || !sample.iter().all(|v| v.is_finite()) {
        return qn_raw_naive(sample);
    }
    let mut y = sample.to_vec();
    y.sort_unstable_by(f64::total_cmp);
    Ok(select_pairwise(&y, qn_order(y.len())))
}

/// `k`-th smallest (one-based) of `y[j] - y[i]`, `i < j`, for sorted `y`.
///
/// Row `i` keeps the candidate columns `lo[i]..hi[i]`; each round counts the
/// candidates below a random pivot with a monotone sweep and discards one side.
fn select_pairwise(y: &[f64], mut k: usize) -> f64 {
    let n = y.len();
    let mut lo: Vec<usize> = (1..=n).collect();
    let mut hi = vec![n; n];
    let mut below = vec![0; n];
    let mut upto = vec![0; n];
    // fixed-seed xorshift: the pivot sequence affects speed, never the result
    let mut state = 0x9e37_79b9_7f4a_7c15u64;
    loop {
        let total: usize = (0..n).map(|i| hi[i] - lo[i]).sum();
        if total <= n {
            let mut rest: Vec<f64> = (0..n).flat_map(|i| (lo[i]..hi[i]).map(move |j| y[j] - y[i])).collect();
            let (_, kth, _) = rest.select_nth_unstable_by(k - 1, f64::total_cmp);
            return *kth;
        }
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        let mut r = (state % total as u64) as usize;
        let mut row = 0;
        while r >= hi[row] - lo[row] {
            r -= hi[row] - lo[row];
            row += 1;
        }
        let pivot = y[lo[row] + r] - y[row];

        // first column whose difference is >= pivot (resp. > pivot); both
        // move right as the row index grows
        let (mut a, mut b) = (1, 1);
        let (mut n_lt, mut n_le) = (0, 0);
        for i in 0..n {
            a = a.max(i + 1);
            while a < n && y[a] - y[i] < pivot {
                a += 1;
            }
            b = b.max(a);
            while b < n && y[b] - y[i] <= pivot {
                b += 1;
            }
            below[i] = a.clamp(lo[i], hi[i]);
            upto[i] = b.clamp(lo[i], hi[i]);
            n_lt += below[i] - lo[i];
            n_le += upto[i] - lo[i];
        }
        if k <= n_lt {
            hi.copy_from_slice(&below);
        } else if k <= n_le {
            return pivot;
        } else {
            k -= n_le;
            lo.copy_from_slice(&upto);
        }
    }
}

pub fn qn(sample: &[f64], cfg: &QnConfig) -> Result<f64> {
    if !(cfg.consistency_c > 0.0) {
        return Err(Error::Domain(format!("Qn constant must be positive, got {}", cfg.consistency_c)));
    }
    let raw = qn_raw(sample)?;
    let raw = if cfg.finite_sample_correction { qn_finite_factor(sample.len()) * raw } else { raw };
    Ok(if cfg.apply_consistency { cfg.consistency_c * raw } else { raw })
}
