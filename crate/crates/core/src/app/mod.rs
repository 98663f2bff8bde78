//! Raster ingestion, quality masking, MAD standardization and the CLI.

pub mod asc;
pub mod cli;

use crate::error::{Error, Result};
use crate::grid::Grid;

pub use asc::{load_asc, save_asc, AscRaster};

/// Normal-consistency factor of the median absolute deviation.
pub const MAD_CONSISTENCY: f64 = 1.4826;

/// Masks every cell whose quality code is not in `clear_codes`. Masked
/// quality cells count as not clear; masked data cells stay masked.
pub fn apply_quality_mask(g: &Grid, q: &Grid, clear_codes: &[i64]) -> Result<Grid> {
    if (g.nx(), g.ny()) != (q.nx(), q.ny()) {
        return Err(Error::DimensionMismatch { expected: g.len(), got: q.len() });
    }
    let mut out = g.clone();
    for i in 0..g.len() {
        let code = q.values()[i];
        let clear = !q.is_masked(i) && code.fract() == 0.0 && clear_codes.contains(&(code as i64));
        if !clear {
            out.set_masked(i, true);
        }
    }
    Ok(out)
}

fn median(v: &mut [f64]) -> f64 {
    let n = v.len();
    let (_, hi, _) = v.select_nth_unstable_by(n / 2, f64::total_cmp);
    let hi = *hi;
    if n % 2 == 1 {
        hi
    } else {
        let lo = v[..n / 2].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lo + hi)
    }
}

/// `1.4826 · median |x - median(x)|` over the observed cells.
pub fn mad_scale(g: &Grid) -> Result<f64> {
    let mut x = g.observed_values();
    if x.len() < 2 {
        return Err(Error::SampleTooSmall { n: x.len(), min: 2 });
    }
    let med = median(&mut x);
    let mut dev: Vec<f64> = x.iter().map(|v| (v - med).abs()).collect();
    let mad = median(&mut dev);
    if !(mad > 0.0) {
        return Err(Error::ZeroSpread);
    }
    Ok(MAD_CONSISTENCY * mad)
}

/// Divides the grid by `scale`.
pub fn standardize_with(g: &Grid, scale: f64) -> Result<Grid> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::Domain(format!("scale must be positive, got {scale}")));
    }
    Ok(g.map_values(|v| v / scale))
}

/// Divides by the consistency-scaled MAD (no centering); returns the scale
/// for back-transformation.
pub fn standardize(g: &Grid) -> Result<(Grid, f64)> {
    let s = mad_scale(g)?;
    Ok((standardize_with(g, s)?, s))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn codes(v: &[f64]) -> Grid {
        Grid::new(3, 3, v.to_vec()).unwrap()
    }

    #[test]
    fn quality_mask() {
        let g = Grid::from_fn(3, 3, |x, y| (x + 3 * y) as f64).unwrap();
        let clear = apply_quality_mask(&g, &codes(&[0.0; 9]), &[0]).unwrap();
        assert_eq!(clear, g);
        let cloud = apply_quality_mask(&g, &codes(&[4.0; 9]), &[0]).unwrap();
        assert_eq!(cloud.n_observed(), 0);
        let mut pre = g.clone();
        pre.set_masked(0, true);
        let q = codes(&[0.0, 0.0, 2.0, 0.0, 1.0, 0.0, 0.0, 2.0, 0.0]);
        let mixed = apply_quality_mask(&pre, &q, &[0]).unwrap();
        assert_eq!(9 - mixed.n_observed(), 3 + 1);
        assert_eq!(apply_quality_mask(&pre, &q, &[0, 1]).unwrap().n_observed(), 9 - 2 - 1);
        let small = Grid::new(2, 2, vec![0.0; 4]).unwrap();
        assert!(matches!(apply_quality_mask(&g, &small, &[0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn mad_example() {
        let g = Grid::new(5, 1, vec![1.0, 2.0, 3.0, 4.0, 100.0]).unwrap();
        assert_eq!(mad_scale(&g).unwrap(), 1.4826);
        let (s, scale) = standardize(&g).unwrap();
        assert_eq!(scale, 1.4826);
        assert_eq!(s.values()[4], 100.0 / 1.4826);
    }

    #[test]
    fn unit_grid_unchanged_and_equivariance() {
        // MAD of {-1, 0, 1} is 1, so dividing by 1.4826 gives unit scale
        let base = Grid::new(3, 1, vec![-1.0 / 1.4826, 0.0, 1.0 / 1.4826]).unwrap();
        let (s, scale) = standardize(&base).unwrap();
        assert!((scale - 1.0).abs() < 1e-12);
        for (a, b) in s.values().iter().zip(base.values()) {
            assert!((a - b).abs() < 1e-12);
        }
        let g = Grid::from_fn(4, 4, |x, y| ((x * 7 + y * 3) % 5) as f64 - 1.3).unwrap();
        let (a, sa) = standardize(&g).unwrap();
        let (b, sb) = standardize(&g.map_values(|v| 7.0 * v)).unwrap();
        assert!((sb - 7.0 * sa).abs() < 1e-12);
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() < 1e-12);
        }
        let (_, s2) = standardize(&a).unwrap();
        assert!((s2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_spread() {
        let g = Grid::new(4, 1, vec![2.0, 2.0, 2.0, 9.0]).unwrap();
        assert!(matches!(standardize(&g), Err(Error::ZeroSpread)));
        let one = Grid::new(1, 1, vec![2.0]).unwrap();
        assert!(standardize(&one).is_err());
    }
}
