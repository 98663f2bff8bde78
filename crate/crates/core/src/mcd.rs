//! Minimum Covariance Determinant estimation: exhaustive search for small
//! samples, FAST-MCD with C-steps, and one-step hard-rejection reweighting.
//!
//! Subset fits are computed from a Householder QR factor of the centred
//! subset rather than from the covariance matrix itself. This keeps
//! determinants and distances accurate when a subset mixes far outliers with
//! clean rows, which is exactly the situation a breakdown analysis creates.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::grid::VectorSample;
use crate::numerics::{chisq_cdf, chisq_quantile, mean_and_cov, Cholesky, RngStream, SymMatrix};

/// `|R_jj| <= RANK_TOL * k * max_i |R_ii|` marks a rank-deficient subset of
/// size `k`. Householder QR is backward stable, so a diagonal this close to
/// the rounding level of the largest one carries no information; anything
/// above it is resolved, however large the spread between outliers and clean
/// rows.
const RANK_TOL: f64 = 8.0 * f64::EPSILON;

/// How the reweighted scatter is normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReweightScaling {
    /// `c(δ, p) / (Σw - 1) · Σ wᵢ (xᵢ - μ)(xᵢ - μ)ᵀ`: the sample covariance
    /// of the retained rows times the factor for `α = δ`.
    #[default]
    RetainedDelta,
    /// `c(δ, p) / n · Σ wᵢ (xᵢ - μ)(xᵢ - μ)ᵀ`.
    FullSample,
    /// `c(Σw / n, p) / (Σw - 1) · Σ wᵢ (xᵢ - μ)(xᵢ - μ)ᵀ`.
    Retained,
}

impl std::str::FromStr for ReweightScaling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "retained-delta" => Ok(ReweightScaling::RetainedDelta),
            "full-sample" => Ok(ReweightScaling::FullSample),
            "retained" => Ok(ReweightScaling::Retained),
            _ => Err(Error::Invalid(format!("unknown reweight scaling `{s}` (retained-delta, full-sample, retained)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McdConfig {
    /// Explicit subset size; overrides `alpha`.
    pub k: Option<usize>,
    /// Subset size as a fraction in `[0.5, 1]`; `None` means `⌊(n+p+1)/2⌋`.
    pub alpha: Option<f64>,
    pub n_initial_subsets: usize,
    pub n_best_kept: usize,
    pub max_csteps: usize,
    pub cstep_tol: f64,
    pub apply_consistency: bool,
    pub reweight_delta: f64,
    pub reweight_scaling: ReweightScaling,
    /// Seed FAST-MCD with every `(p+1)`-subset instead of random draws.
    pub full_seed_enumeration: bool,
}

impl Default for McdConfig {
    fn default() -> Self {
        McdConfig {
            k: None,
            alpha: None,
            n_initial_subsets: 500,
            n_best_kept: 10,
            max_csteps: 100,
            cstep_tol: 1e-12,
            apply_consistency: true,
            reweight_delta: 0.975,
            reweight_scaling: ReweightScaling::RetainedDelta,
            full_seed_enumeration: false,
        }
    }
}

impl McdConfig {
    /// Subset size for `n` rows of dimension `p`.
    pub fn subset_size(&self, n: usize, p: usize) -> Result<usize> {
        let lo = (n + p + 1) / 2;
        let k = match (self.k, self.alpha) {
            (Some(k), _) => k,
            (None, None) => lo,
            (None, Some(a)) => {
                if !(0.5..=1.0).contains(&a) {
                    return Err(Error::Domain(format!("alpha must lie in [0.5, 1], got {a}")));
                }
                // interpolates between the maximal-breakdown size and n
                (2.0 * lo as f64 - n as f64 + 2.0 * (n - lo) as f64 * a).floor() as usize
            }
        };
        if k < lo || k > n {
            return Err(Error::Domain(format!("subset size {k} outside [{lo}, {n}]")));
        }
        Ok(k)
    }

    fn validate(&self) -> Result<()> {
        if self.n_initial_subsets == 0 || self.n_best_kept == 0 {
            return Err(Error::Domain("subset counts must be positive".into()));
        }
        if self.n_best_kept > self.n_initial_subsets {
            return Err(Error::Domain("n_best_kept exceeds n_initial_subsets".into()));
        }
        if !(self.reweight_delta > 0.0 && self.reweight_delta < 1.0) {
            return Err(Error::Domain(format!("reweight_delta must lie in (0, 1), got {}", self.reweight_delta)));
        }
        Ok(())
    }
}

/// Scaling constants actually multiplied into a fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AppliedFactors {
    pub c: f64,
    pub c_star: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McdFit {
    pub mu: Vec<f64>,
    pub sigma: SymMatrix,
    /// Sorted row indices of the raw subset.
    pub support: Vec<usize>,
    /// Determinant of the unscaled support covariance.
    pub det: f64,
    pub reweighted: bool,
    /// Hard-rejection weights; empty for raw fits.
    pub weights: Vec<bool>,
    pub factors_applied: AppliedFactors,
    /// Subsets met during the search whose covariance was singular.
    pub singular_subsets: usize,
}

/// `α / F_{χ²_{p+2}}(χ²_{p,α})`.
pub fn mcd_consistency_factor(alpha: f64, p: usize) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) || p == 0 {
        return Err(Error::Domain(format!("consistency factor needs 0 < alpha <= 1 and p >= 1, got ({alpha}, {p})")));
    }
    if alpha == 1.0 {
        return Ok(1.0);
    }
    let q = chisq_quantile(alpha, p as f64)?;
    Ok(alpha / chisq_cdf(q, p as f64 + 2.0)?)
}

/// Location and scatter of one subset, held as a QR factor of the centred rows.
#[derive(Debug, Clone)]
struct SubsetFit {
    support: Vec<usize>,
    mu: Vec<f64>,
    /// Upper-triangular `R` (row-major `p x p`) with `Xcᵀ Xc = Rᵀ R`.
    r: Vec<f64>,
    /// log det of the covariance `Rᵀ R / (k - 1)`; `-inf` if singular.
    log_det: f64,
}

impl SubsetFit {
    fn new(data: &[f64], p: usize, mut support: Vec<usize>) -> Self {
        support.sort_unstable();
        let k = support.len();
        let mut mu = vec![0.0; p];
        for &i in &support {
            for (m, v) in mu.iter_mut().zip(&data[i * p..(i + 1) * p]) {
                *m += v;
            }
        }
        mu.iter_mut().for_each(|m| *m /= k as f64);
        // column-major centred block for the Householder sweep
        let mut a = vec![0.0; k * p];
        for (row, &i) in support.iter().enumerate() {
            for j in 0..p {
                a[j * k + row] = data[i * p + j] - mu[j];
            }
        }
        let r = householder_r(&mut a, k, p);
        let diag_max = (0..p).map(|j| r[j * p + j].abs()).fold(0.0, f64::max);
        let singular = diag_max == 0.0 || (0..p).any(|j| r[j * p + j].abs() <= RANK_TOL * k as f64 * diag_max) || k <= p;
        let log_det = if singular {
            f64::NEG_INFINITY
        } else {
            (0..p).map(|j| 2.0 * r[j * p + j].abs().ln()).sum::<f64>() - p as f64 * ((k - 1) as f64).ln()
        };
        SubsetFit { support, mu, r, log_det }
    }

    fn is_singular(&self) -> bool {
        self.log_det == f64::NEG_INFINITY
    }

    /// Squared Mahalanobis distance of every row under this fit's covariance.
    fn distances(&self, data: &[f64], p: usize) -> Vec<f64> {
        let k1 = (self.support.len() - 1) as f64;
        let mut z = vec![0.0; p];
        data.chunks_exact(p)
            .map(|row| {
                // forward solve Rᵀ z = x - mu
                for i in 0..p {
                    let mut s = row[i] - self.mu[i];
                    for j in 0..i {
                        s -= self.r[j * p + i] * z[j];
                    }
                    z[i] = s / self.r[i * p + i];
                }
                k1 * z.iter().map(|v| v * v).sum::<f64>()
            })
            .collect()
    }

    fn covariance(&self, p: usize) -> SymMatrix {
        let k1 = (self.support.len() - 1) as f64;
        let mut s = SymMatrix::zeros(p);
        for i in 0..p {
            for j in 0..=i {
                let v: f64 = (0..=j).map(|l| self.r[l * p + i] * self.r[l * p + j]).sum();
                s.set(i, j, v / k1);
            }
        }
        s
    }

    fn rank_cmp(&self, other: &Self) -> Ordering {
        self.log_det.total_cmp(&other.log_det).then_with(|| self.support.cmp(&other.support))
    }
}

/// In-place Householder QR of a column-major `m x n` matrix; returns `R`
/// row-major `n x n`.
fn householder_r(a: &mut [f64], m: usize, n: usize) -> Vec<f64> {
    let mut r = vec![0.0; n * n];
    for j in 0..n.min(m) {
        let (done, rest) = a.split_at_mut((j + 1) * m);
        let col = &mut done[j * m..];
        let norm = col[j..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            for (l, c) in rest.chunks_exact(m).enumerate() {
                r[j * n + j + 1 + l] = c[j];
            }
            continue;
        }
        let alpha = if col[j] > 0.0 { -norm } else { norm };
        col[j] -= alpha;
        let vnorm2: f64 = col[j..].iter().map(|v| v * v).sum();
        r[j * n + j] = alpha;
        for (l, c) in rest.chunks_exact_mut(m).enumerate() {
            let dot: f64 = col[j..].iter().zip(&c[j..]).map(|(v, x)| v * x).sum();
            let f = 2.0 * dot / vnorm2;
            for (x, v) in c[j..].iter_mut().zip(&col[j..]) {
                *x -= f * v;
            }
            r[j * n + j + 1 + l] = c[j];
        }
    }
    r
}

/// Rounds a nonnegative distance to 32 mantissa bits so that values equal up
/// to rounding noise compare equal.
fn tie_key(d: f64) -> u64 {
    const DROP: u32 = 20;
    (d.to_bits() + (1 << (DROP - 1))) >> DROP
}

/// Indices of the `k` smallest distances, ties broken by row index.
///
/// Exact ties are routine: every row of a `(p+1)`-point seed has the same
/// distance under the seed's own fit.
fn k_smallest(d: &[f64], k: usize) -> Vec<usize> {
    let keys: Vec<u64> = d.iter().map(|&v| tie_key(v.max(0.0))).collect();
    let mut idx: Vec<usize> = (0..d.len()).collect();
    let cmp = |a: &usize, b: &usize| keys[*a].cmp(&keys[*b]).then(a.cmp(b));
    if k < idx.len() {
        idx.select_nth_unstable_by(k - 1, cmp);
        idx.truncate(k);
    }
    idx
}

fn cstep(data: &[f64], p: usize, k: usize, fit: &SubsetFit) -> SubsetFit {
    let next = SubsetFit::new(data, p, k_smallest(&fit.distances(data, p), k));
    // the C-step theorem compares subsets of equal size, so seeds are exempt
    debug_assert!(
        fit.support.len() != k || next.log_det <= fit.log_det + 1e-8 * fit.log_det.abs().max(1.0),
        "C-step increased the determinant: {} -> {}",
        fit.log_det,
        next.log_det
    );
    next
}

fn checked_subset(data: &VectorSample, subset: &[usize]) -> Result<SubsetFit> {
    let (n, p) = check_shape(data)?;
    if let Some(&i) = subset.iter().find(|&&i| i >= n) {
        return Err(Error::Domain(format!("row index {i} out of range for {n} rows")));
    }
    let mut sorted = subset.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Domain("subset repeats a row".into()));
    }
    Ok(SubsetFit::new(data.data(), p, subset.to_vec()))
}

/// Log-determinant of the sample covariance of the rows in `subset`;
/// `-inf` when singular.
pub fn subset_log_det(data: &VectorSample, subset: &[usize]) -> Result<f64> {
    Ok(checked_subset(data, subset)?.log_det)
}

/// One concentration step: the `subset.len()` rows with the smallest
/// Mahalanobis distances under the subset's mean and covariance, sorted.
pub fn concentration_step(data: &VectorSample, subset: &[usize]) -> Result<Vec<usize>> {
    let fit = checked_subset(data, subset)?;
    if fit.is_singular() {
        return Err(Error::Domain("subset covariance is singular".into()));
    }
    let mut next = k_smallest(&fit.distances(data.data(), data.dim()), subset.len());
    next.sort_unstable();
    Ok(next)
}

fn converge(data: &[f64], p: usize, k: usize, mut fit: SubsetFit, cfg: &McdConfig) -> SubsetFit {
    for _ in 0..cfg.max_csteps {
        if fit.is_singular() {
            break;
        }
        let next = cstep(data, p, k, &fit);
        let unchanged = next.support == fit.support;
        let rel = (next.log_det - fit.log_det).abs();
        // log-determinant difference approximates the relative determinant change
        let small = rel.is_finite() && rel < cfg.cstep_tol;
        fit = next;
        if unchanged || small {
            break;
        }
    }
    fit
}

fn check_shape(data: &VectorSample) -> Result<(usize, usize)> {
    let (n, p) = (data.n(), data.dim());
    if n <= p {
        return Err(Error::DimensionMismatch { expected: p + 1, got: n });
    }
    Ok((n, p))
}

fn finish(fit: SubsetFit, n: usize, p: usize, cfg: &McdConfig, singular_subsets: usize) -> Result<McdFit> {
    let k = fit.support.len();
    let c = if cfg.apply_consistency { mcd_consistency_factor(k as f64 / n as f64, p)? } else { 1.0 };
    let cov = fit.covariance(p);
    let det = fit.log_det.exp();
    Ok(McdFit {
        mu: fit.mu,
        sigma: cov.scaled(c),
        support: fit.support,
        det,
        reweighted: false,
        weights: Vec::new(),
        factors_applied: AppliedFactors { c, c_star: None },
        singular_subsets,
    })
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Calls `f` on every `k`-combination of `0..n` in lexicographic order.
fn for_each_combination(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + n - k) else { return };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Global minimum-determinant subset by exhaustive enumeration.
pub fn exact_mcd(data: &VectorSample, cfg: &McdConfig) -> Result<McdFit> {
    cfg.validate()?;
    let (n, p) = check_shape(data)?;
    let k = cfg.subset_size(n, p)?;
    if n > 25 {
        return Err(Error::TooLarge(binomial(n, k)));
    }
    let count = binomial(n, k);
    if count > 10_000_000 {
        return Err(Error::TooLarge(count));
    }
    let mut best: Option<SubsetFit> = None;
    let mut singular = 0;
    for_each_combination(n, k, |rows| {
        let fit = SubsetFit::new(data.data(), p, rows.to_vec());
        if fit.is_singular() {
            singular += 1;
        }
        if best.as_ref().map_or(true, |b| fit.rank_cmp(b) == Ordering::Less) {
            best = Some(fit);
        }
    });
    finish(best.expect("at least one subset"), n, p, cfg, singular)
}

/// FAST-MCD: random `(p+1)`-seeds, two C-steps each, then the best few
/// iterated to convergence.
pub fn fast_mcd(data: &VectorSample, cfg: &McdConfig, rng: &mut RngStream) -> Result<McdFit> {
    cfg.validate()?;
    let (n, p) = check_shape(data)?;
    let k = cfg.subset_size(n, p)?;
    let x = data.data();
    if k == n {
        let fit = SubsetFit::new(x, p, (0..n).collect());
        let singular = usize::from(fit.is_singular());
        return finish(fit, n, p, cfg, singular);
    }

    let mut singular = 0;
    let mut candidates = Vec::new();
    let mut expand = |seed: Vec<usize>, singular: &mut usize| -> bool {
        let fit = SubsetFit::new(x, p, seed);
        if fit.is_singular() {
            *singular += 1;
            return false;
        }
        let mut fit = fit;
        for _ in 0..2 {
            fit = cstep(x, p, k, &fit);
            if fit.is_singular() {
                break;
            }
        }
        candidates.push(fit);
        true
    };

    if cfg.full_seed_enumeration {
        let count = binomial(n, p + 1);
        if count > 10_000_000 {
            return Err(Error::TooLarge(count));
        }
        for_each_combination(n, p + 1, |rows| {
            expand(rows.to_vec(), &mut singular);
        });
    } else {
        let budget = 100 * cfg.n_initial_subsets;
        let (mut accepted, mut attempts) = (0, 0);
        while accepted < cfg.n_initial_subsets && attempts < budget {
            attempts += 1;
            if expand(rng.sample_indices(n, p + 1), &mut singular) {
                accepted += 1;
            }
        }
    }
    if candidates.is_empty() {
        return Err(Error::AllSubsetsSingular);
    }

    candidates.sort_by(SubsetFit::rank_cmp);
    candidates.dedup_by(|a, b| a.support == b.support);
    candidates.truncate(cfg.n_best_kept);
    let best = candidates
        .into_iter()
        .map(|c| converge(x, p, k, c, cfg))
        .min_by(SubsetFit::rank_cmp)
        .expect("non-empty");
    if best.is_singular() {
        singular += 1;
    }
    finish(best, n, p, cfg, singular)
}

/// One hard-rejection reweighting step on top of a raw fit.
pub fn reweight_mcd(data: &VectorSample, raw: &McdFit, cfg: &McdConfig) -> Result<McdFit> {
    cfg.validate()?;
    let (n, p) = check_shape(data)?;
    if raw.mu.len() != p {
        return Err(Error::DimensionMismatch { expected: p, got: raw.mu.len() });
    }
    let chol = Cholesky::factor_in_place(p, raw.sigma.as_slice().to_vec())?;
    let cutoff = chisq_quantile(cfg.reweight_delta, p as f64)?;
    let weights: Vec<bool> = data.rows().map(|r| chol.mahalanobis_sq(r, &raw.mu) <= cutoff).collect();
    let kept: Vec<usize> = (0..n).filter(|&i| weights[i]).collect();
    if kept.is_empty() {
        return Err(Error::AllWeightsZero);
    }
    let m = kept.len();
    let (mu, cov) = mean_and_cov(data.data(), p, &kept);
    // mean_and_cov divides by m - 1
    let (c_star, divisor) = match cfg.reweight_scaling {
        ReweightScaling::RetainedDelta => (mcd_consistency_factor(cfg.reweight_delta, p)?, (m as f64 - 1.0).max(1.0)),
        ReweightScaling::FullSample => (mcd_consistency_factor(cfg.reweight_delta, p)?, n as f64),
        ReweightScaling::Retained => (mcd_consistency_factor(m as f64 / n as f64, p)?, (m as f64 - 1.0).max(1.0)),
    };
    let c_star = if cfg.apply_consistency { c_star } else { 1.0 };
    let ss_scale = (m as f64 - 1.0).max(1.0) / divisor;
    Ok(McdFit {
        mu,
        sigma: cov.scaled(c_star * ss_scale),
        support: raw.support.clone(),
        det: raw.det,
        reweighted: true,
        weights,
        factors_applied: AppliedFactors { c: raw.factors_applied.c, c_star: Some(c_star) },
        singular_subsets: raw.singular_subsets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample(rows: &[Vec<f64>]) -> VectorSample {
        VectorSample::from_vecs(rows).unwrap()
    }

    fn random_rows(rng: &mut RngStream, n: usize, p: usize) -> Vec<Vec<f64>> {
        (0..n).map(|_| (0..p).map(|_| rng.normal()).collect()).collect()
    }

    fn ten_points() -> Vec<Vec<f64>> {
        let mut rng = RngStream::new(77, 0);
        let mut rows: Vec<Vec<f64>> = (0..9).map(|_| vec![0.1 * rng.normal(), 0.1 * rng.normal()]).collect();
        rows.push(vec![100.0, 100.0]);
        rows
    }

    #[test]
    fn consistency_factor_values() {
        assert_eq!(mcd_consistency_factor(1.0, 3).unwrap(), 1.0);
        let c = mcd_consistency_factor(0.5, 1).unwrap();
        let q = chisq_quantile(0.5, 1.0).unwrap();
        assert!((c - 0.5 / chisq_cdf(q, 3.0).unwrap()).abs() < 1e-12);
        assert!((c - 7.0).abs() < 0.05, "{c}");
        let c = mcd_consistency_factor(0.75, 2).unwrap();
        let back = 0.75 / chisq_cdf(chisq_quantile(0.75, 2.0).unwrap(), 4.0).unwrap();
        assert!((c - back).abs() < 1e-9);
        assert!(mcd_consistency_factor(0.0, 2).is_err());
        let mut prev = f64::INFINITY;
        for a in [0.5, 0.6, 0.7, 0.8, 0.9, 0.99] {
            let c = mcd_consistency_factor(a, 4).unwrap();
            assert!(c >= 1.0 && c < prev);
            prev = c;
        }
    }

    #[test]
    fn subset_sizes() {
        let cfg = McdConfig::default();
        assert_eq!(cfg.subset_size(20, 2).unwrap(), 11);
        assert_eq!(McdConfig { alpha: Some(1.0), ..cfg.clone() }.subset_size(20, 2).unwrap(), 20);
        assert_eq!(McdConfig { alpha: Some(0.75), ..cfg.clone() }.subset_size(100, 4).unwrap(), 76);
        assert!(McdConfig { k: Some(5), ..cfg }.subset_size(20, 2).is_err());
    }

    #[test]
    fn householder_matches_cross_product() {
        let mut rng = RngStream::new(1, 2);
        let (m, n) = (7, 3);
        let a: Vec<f64> = (0..m * n).map(|_| rng.normal()).collect();
        let r = householder_r(&mut a.clone(), m, n);
        for i in 0..n {
            for j in 0..n {
                let ata: f64 = (0..m).map(|l| a[i * m + l] * a[j * m + l]).sum();
                let rtr: f64 = (0..n).map(|l| r[l * n + i] * r[l * n + j]).sum();
                assert!((ata - rtr).abs() < 1e-12 * (1.0 + ata.abs()));
            }
        }
    }

    #[test]
    fn subset_fit_matches_classical_moments() {
        let mut rng = RngStream::new(3, 3);
        let rows = random_rows(&mut rng, 12, 3);
        let s = sample(&rows);
        let idx = vec![0, 2, 3, 5, 7, 8, 11];
        let fit = SubsetFit::new(s.data(), 3, idx.clone());
        let (mu, cov) = mean_and_cov(s.data(), 3, &idx);
        let q = fit.covariance(3);
        for i in 0..3 {
            assert!((fit.mu[i] - mu[i]).abs() < 1e-14);
            for j in 0..3 {
                assert!((q.get(i, j) - cov.get(i, j)).abs() < 1e-12);
            }
        }
        let chol = Cholesky::factor_in_place(3, cov.as_slice().to_vec()).unwrap();
        assert!((fit.log_det - chol.log_det()).abs() < 1e-10);
        let d = fit.distances(s.data(), 3);
        for (i, r) in s.rows().enumerate() {
            assert!((d[i] - chol.mahalanobis_sq(r, &mu)).abs() < 1e-9 * (1.0 + d[i]));
        }
    }

    #[test]
    fn full_subset_is_classical() {
        let mut rng = RngStream::new(5, 0);
        let s = sample(&random_rows(&mut rng, 8, 2));
        let cfg = McdConfig { k: Some(8), ..McdConfig::default() };
        let fit = exact_mcd(&s, &cfg).unwrap();
        let (mu, cov) = mean_and_cov(s.data(), 2, &(0..8).collect::<Vec<_>>());
        assert_eq!(fit.support, (0..8).collect::<Vec<_>>());
        assert_eq!(fit.factors_applied.c, 1.0);
        for i in 0..2 {
            assert!((fit.mu[i] - mu[i]).abs() < 1e-14);
            for j in 0..2 {
                assert!((fit.sigma.get(i, j) - cov.get(i, j)).abs() < 1e-12);
            }
        }
        let fast = fast_mcd(&s, &cfg, &mut rng).unwrap();
        assert_eq!(fast.support, fit.support);
    }

    #[test]
    fn exact_excludes_far_point() {
        let s = sample(&ten_points());
        let cfg = McdConfig { k: Some(6), ..McdConfig::default() };
        let fit = exact_mcd(&s, &cfg).unwrap();
        assert_eq!(fit.support.len(), 6);
        assert!(!fit.support.contains(&9));
        // every subset holding the outlier has a larger determinant
        let mut min_with = f64::INFINITY;
        for_each_combination(10, 6, |rows| {
            if rows.contains(&9) {
                let f = SubsetFit::new(s.data(), 2, rows.to_vec());
                min_with = min_with.min(f.log_det.exp());
            }
        });
        assert!(min_with > fit.det);
        let re = reweight_mcd(&s, &fit, &cfg).unwrap();
        assert!(!re.weights[9]);
        assert!(re.reweighted);
    }

    #[test]
    fn exact_guards() {
        let mut rng = RngStream::new(6, 0);
        let s = sample(&random_rows(&mut rng, 30, 2));
        assert!(matches!(exact_mcd(&s, &McdConfig::default()), Err(Error::TooLarge(_))));
        let s = sample(&random_rows(&mut rng, 2, 2));
        assert!(matches!(exact_mcd(&s, &McdConfig::default()), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn fast_is_deterministic() {
        let mut rng = RngStream::new(8, 0);
        let s = sample(&random_rows(&mut rng, 40, 3));
        let cfg = McdConfig::default();
        let a = fast_mcd(&s, &cfg, &mut RngStream::new(8, 1)).unwrap();
        let b = fast_mcd(&s, &cfg, &mut RngStream::new(8, 1)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn all_singular_seeds() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
        let cfg = McdConfig { n_initial_subsets: 5, n_best_kept: 2, ..McdConfig::default() };
        let r = fast_mcd(&sample(&rows), &cfg, &mut RngStream::new(1, 1));
        assert!(matches!(r, Err(Error::AllSubsetsSingular)));
    }

    #[test]
    fn reweighting_with_all_inliers() {
        // tiny spread keeps every distance under the cutoff when alpha = 1
        let mut rng = RngStream::new(11, 0);
        let s = sample(&random_rows(&mut rng, 30, 2));
        let cfg = McdConfig { k: Some(30), reweight_delta: 0.9999999, ..McdConfig::default() };
        let raw = fast_mcd(&s, &cfg, &mut rng).unwrap();
        let re = reweight_mcd(&s, &raw, &cfg).unwrap();
        assert!(re.weights.iter().all(|&w| w));
        let (_, cov) = mean_and_cov(s.data(), 2, &(0..30).collect::<Vec<_>>());
        let c_star = mcd_consistency_factor(cfg.reweight_delta, 2).unwrap();
        for (scaling, factor) in [(ReweightScaling::RetainedDelta, c_star), (ReweightScaling::FullSample, c_star * 29.0 / 30.0)] {
            let re = reweight_mcd(&s, &raw, &McdConfig { reweight_scaling: scaling, ..cfg.clone() }).unwrap();
            let expect = cov.scaled(factor);
            for i in 0..2 {
                for j in 0..2 {
                    assert!((re.sigma.get(i, j) - expect.get(i, j)).abs() < 1e-12);
                }
            }
        }
        let retained = McdConfig { reweight_scaling: ReweightScaling::Retained, ..cfg };
        let re = reweight_mcd(&s, &raw, &retained).unwrap();
        assert!((re.sigma.get(0, 0) - cov.get(0, 0)).abs() < 1e-9);
    }

    fn affine(rows: &[Vec<f64>], a: &[[f64; 2]; 2], b: [f64; 2]) -> Vec<Vec<f64>> {
        rows.iter()
            .map(|x| (0..2).map(|i| a[i][0] * x[0] + a[i][1] * x[1] + b[i]).collect())
            .collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn affine_equivariance(seed in 0u64..1000, a00 in 0.5f64..3.0, a01 in -1.0f64..1.0, a10 in -1.0f64..1.0, a11 in 0.5f64..3.0, b0 in -5.0f64..5.0, b1 in -5.0f64..5.0) {
            prop_assume!((a00 * a11 - a01 * a10).abs() > 0.1);
            let mut rng = RngStream::new(seed, 0);
            let rows = random_rows(&mut rng, 30, 2);
            let a = [[a00, a01], [a10, a11]];
            let t = affine(&rows, &a, [b0, b1]);
            let cfg = McdConfig { n_initial_subsets: 50, n_best_kept: 5, ..McdConfig::default() };
            let f = fast_mcd(&sample(&rows), &cfg, &mut RngStream::new(seed, 1)).unwrap();
            let g = fast_mcd(&sample(&t), &cfg, &mut RngStream::new(seed, 1)).unwrap();
            prop_assert_eq!(&f.support, &g.support);
            let fr = reweight_mcd(&sample(&rows), &f, &cfg).unwrap();
            let gr = reweight_mcd(&sample(&t), &g, &cfg).unwrap();
            prop_assert_eq!(&fr.weights, &gr.weights);
            for (fit, img) in [(&f, &g), (&fr, &gr)] {
                for i in 0..2 {
                    let mu = a[i][0] * fit.mu[0] + a[i][1] * fit.mu[1] + [b0, b1][i];
                    prop_assert!((img.mu[i] - mu).abs() <= 1e-8 * (1.0 + mu.abs()));
                    for j in 0..2 {
                        let mut s = 0.0;
                        for k in 0..2 {
                            for l in 0..2 {
                                s += a[i][k] * fit.sigma.get(k, l) * a[j][l];
                            }
                        }
                        prop_assert!((img.sigma.get(i, j) - s).abs() <= 1e-8 * (1.0 + s.abs()));
                    }
                }
            }
        }

        #[test]
        fn cstep_never_increases_determinant(seed in 0u64..10_000, n in 8usize..40, p in 1usize..4) {
            prop_assume!(n > 2 * p + 2);
            let mut rng = RngStream::new(seed, 7);
            let s = sample(&random_rows(&mut rng, n, p));
            let k = (n + p + 1) / 2;
            let mut fit = SubsetFit::new(s.data(), p, rng.sample_indices(n, k));
            for _ in 0..10 {
                if fit.is_singular() { break; }
                let next = SubsetFit::new(s.data(), p, k_smallest(&fit.distances(s.data(), p), k));
                prop_assert!(next.log_det <= fit.log_det + 1e-10 * fit.log_det.abs().max(1.0));
                fit = next;
            }
        }

        #[test]
        fn fast_never_beats_exact(seed in 0u64..10_000, n in 6usize..12, p in 1usize..3) {
            let mut rng = RngStream::new(seed, 3);
            let s = sample(&random_rows(&mut rng, n, p));
            let cfg = McdConfig { n_initial_subsets: 20, n_best_kept: 3, ..McdConfig::default() };
            let exact = exact_mcd(&s, &cfg).unwrap();
            let fast = fast_mcd(&s, &cfg, &mut rng).unwrap();
            prop_assert!(fast.det >= exact.det * (1.0 - 1e-10));
        }
    }
}
