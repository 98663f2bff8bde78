//! Raster data model, lag directions and the multivariate vectors fed to the
//! MCD estimators.
//!
//! Coordinates are zero-based internally: `x` runs west to east over
//! `0..nx`, `y` runs south to north over `0..ny`, and cell `(x, y)` lives at
//! index `y * nx + x`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    nx: usize,
    ny: usize,
    values: Vec<f64>,
    mask: Vec<bool>,
}

impl Grid {
    /// Fully observed grid from row-major values (southernmost row first).
    pub fn new(nx: usize, ny: usize, values: Vec<f64>) -> Result<Self> {
        let n = nx * ny;
        Self::with_mask(nx, ny, values, vec![false; n])
    }

    /// Grid with a missing-value mask (`true` = missing).
    pub fn with_mask(nx: usize, ny: usize, values: Vec<f64>, mask: Vec<bool>) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::Domain(format!("grid dimensions must be >= 1, got {nx}x{ny}")));
        }
        if values.len() != nx * ny {
            return Err(Error::DimensionMismatch { expected: nx * ny, got: values.len() });
        }
        if mask.len() != nx * ny {
            return Err(Error::DimensionMismatch { expected: nx * ny, got: mask.len() });
        }
        Ok(Grid { nx, ny, values, mask })
    }

    pub fn from_fn(nx: usize, ny: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(nx * ny);
        for y in 0..ny {
            for x in 0..nx {
                values.push(f(x, y));
            }
        }
        Self::new(nx, ny, values)
    }

    #[inline]
    pub fn nx(&self) -> usize {
        self.nx
    }

    #[inline]
    pub fn ny(&self) -> usize {
        self.ny
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.nx + x
    }

    pub fn coords(&self, index: usize) -> (usize, usize) {
        (index % self.nx, index / self.nx)
    }

    /// Observed value at `(x, y)`, or `None` if masked.
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Option<f64> {
        let i = self.index(x, y);
        if self.mask[i] {
            None
        } else {
            Some(self.values[i])
        }
    }

    /// Observed value at signed coordinates; `None` when off-grid or masked.
    #[inline]
    pub fn get_signed(&self, x: i64, y: i64) -> Option<f64> {
        if x < 0 || y < 0 || x >= self.nx as i64 || y >= self.ny as i64 {
            return None;
        }
        self.get(x as usize, y as usize)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn set_masked(&mut self, index: usize, masked: bool) {
        self.mask[index] = masked;
    }

    pub fn is_masked(&self, index: usize) -> bool {
        self.mask[index]
    }

    pub fn n_observed(&self) -> usize {
        self.mask.iter().filter(|m| !**m).count()
    }

    pub fn observed_values(&self) -> Vec<f64> {
        self.values.iter().zip(&self.mask).filter(|(_, m)| !**m).map(|(v, _)| *v).collect()
    }

    /// Applies `f` to every value, masked or not.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Grid {
        Grid {
            nx: self.nx,
            ny: self.ny,
            values: self.values.iter().map(|v| f(*v)).collect(),
            mask: self.mask.clone(),
        }
    }
}

/// One of the four principal estimation directions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    /// East-west, along the x-axis.
    EW,
    /// South-north, along the y-axis.
    SN,
    /// Southwest-northeast diagonal.
    SWNE,
    /// Southeast-northwest diagonal.
    SENW,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::EW, Direction::SN, Direction::SWNE, Direction::SENW];

    /// Unit step `h_1` of the direction.
    pub fn step(self) -> (i64, i64) {
        match self {
            Direction::EW => (1, 0),
            Direction::SN => (0, 1),
            Direction::SWNE => (1, 1),
            Direction::SENW => (1, -1),
        }
    }

    pub fn is_diagonal(self) -> bool {
        matches!(self, Direction::SWNE | Direction::SENW)
    }

    /// Short identifier used on the command line and in CSV output.
    pub fn id(self) -> &'static str {
        match self {
            Direction::EW => "ew",
            Direction::SN => "sn",
            Direction::SWNE => "swne",
            Direction::SENW => "senw",
        }
    }

    pub fn index(self) -> usize {
        match self {
            Direction::EW => 0,
            Direction::SN => 1,
            Direction::SWNE => 2,
            Direction::SENW => 3,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::EW => "E-W",
            Direction::SN => "S-N",
            Direction::SWNE => "SW-NE",
            Direction::SENW => "SE-NW",
        })
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_lowercase();
        match norm.as_str() {
            "ew" | "we" => Ok(Direction::EW),
            "sn" | "ns" => Ok(Direction::SN),
            "swne" | "nesw" => Ok(Direction::SWNE),
            "senw" | "nwse" => Ok(Direction::SENW),
            _ => Err(Error::Invalid(format!("unknown direction `{s}`"))),
        }
    }
}

/// Direction plus the lag vectors `h_1..h_{h_max}` estimated jointly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LagSet {
    direction: Direction,
    lags: Vec<(i64, i64)>,
}

impl LagSet {
    pub fn new(direction: Direction, h_max: usize) -> Result<Self> {
        if h_max == 0 {
            return Err(Error::Domain("h_max must be >= 1".into()));
        }
        let (dx, dy) = direction.step();
        let lags = (1..=h_max as i64).map(|l| (l * dx, l * dy)).collect();
        Ok(LagSet { direction, lags })
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn h_max(&self) -> usize {
        self.lags.len()
    }

    pub fn lags(&self) -> &[(i64, i64)] {
        &self.lags
    }

    /// Euclidean length of lag `l` (1-based).
    pub fn distance(&self, l: usize) -> f64 {
        let (x, y) = self.lags[l - 1];
        ((x * x + y * y) as f64).sqrt()
    }
}

/// Convenience alias matching the operation name used throughout the docs.
pub fn build_lag_set(direction: Direction, h_max: usize) -> Result<LagSet> {
    LagSet::new(direction, h_max)
}

/// Rows of `dim`-dimensional vectors, flat row-major, with each row's base cell.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorSample {
    dim: usize,
    data: Vec<f64>,
    origins: Vec<(usize, usize)>,
}

impl VectorSample {
    pub fn from_rows(dim: usize, data: Vec<f64>, origins: Vec<(usize, usize)>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("vector dimension must be >= 1".into()));
        }
        if data.len() != dim * origins.len() {
            return Err(Error::DimensionMismatch { expected: dim * origins.len(), got: data.len() });
        }
        Ok(VectorSample { dim, data, origins })
    }

    /// Builds a sample from plain rows without grid origins.
    pub fn from_vecs(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map(|r| r.len()).ok_or(Error::EmptySample)?;
        let mut data = Vec::with_capacity(dim * rows.len());
        for r in rows {
            if r.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: r.len() });
            }
            data.extend_from_slice(r);
        }
        Self::from_rows(dim, data, vec![(0, 0); rows.len()])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.origins.len()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn origins(&self) -> &[(usize, usize)] {
        &self.origins
    }

    /// Applies `f` to every row.
    pub fn map_rows(&self, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> Result<VectorSample> {
        let mut data = Vec::with_capacity(self.data.len());
        let mut dim = self.dim;
        for r in self.rows() {
            let out = f(r);
            dim = out.len();
            data.extend(out);
        }
        Self::from_rows(dim, data, self.origins.clone())
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum VectorKind {
    Org,
    Diff,
}

/// Scan order used for every extraction: `y` outer, `x` inner.
pub fn base_locations(g: &Grid) -> impl Iterator<Item = (usize, usize)> + '_ {
    (0..g.ny()).flat_map(move |y| (0..g.nx()).map(move |x| (x, y)))
}

fn build_vector(g: &Grid, lags: &LagSet, base: (usize, usize), kind: VectorKind, out: &mut Vec<f64>) -> bool {
    let (x, y) = (base.0 as i64, base.1 as i64);
    let Some(z0) = g.get_signed(x, y) else { return false };
    let start = out.len();
    if kind == VectorKind::Org {
        out.push(z0);
    }
    for &(dx, dy) in lags.lags() {
        match g.get_signed(x + dx, y + dy) {
            Some(z) => out.push(match kind {
                VectorKind::Org => z,
                VectorKind::Diff => z0 - z,
            }),
            None => {
                out.truncate(start);
                return false;
            }
        }
    }
    true
}

fn extract_at(
    g: &Grid,
    lags: &LagSet,
    kind: VectorKind,
    bases: impl IntoIterator<Item = (usize, usize)>,
) -> Result<VectorSample> {
    let dim = match kind {
        VectorKind::Org => lags.h_max() + 1,
        VectorKind::Diff => lags.h_max(),
    };
    let mut data = Vec::new();
    let mut origins = Vec::new();
    for base in bases {
        if build_vector(g, lags, base, kind, &mut data) {
            origins.push(base);
        }
    }
    if origins.is_empty() {
        return Err(Error::EmptySample);
    }
    VectorSample::from_rows(dim, data, origins)
}

/// Stacked vectors `(Z(s), Z(s+h_1), ..., Z(s+h_hmax))`; rows touching a masked
/// or off-grid cell are dropped.
pub fn extract_org_vectors(g: &Grid, lags: &LagSet) -> Result<VectorSample> {
    extract_at(g, lags, VectorKind::Org, base_locations(g))
}

/// Difference vectors `(Z(s) - Z(s+h_1), ..., Z(s) - Z(s+h_hmax))`.
pub fn extract_diff_vectors(g: &Grid, lags: &LagSet) -> Result<VectorSample> {
    extract_at(g, lags, VectorKind::Diff, base_locations(g))
}

/// Org vectors restricted to the given base locations.
pub fn extract_org_vectors_at(
    g: &Grid,
    lags: &LagSet,
    bases: impl IntoIterator<Item = (usize, usize)>,
) -> Result<VectorSample> {
    extract_at(g, lags, VectorKind::Org, bases)
}

/// Diff vectors restricted to the given base locations.
pub fn extract_diff_vectors_at(
    g: &Grid,
    lags: &LagSet,
    bases: impl IntoIterator<Item = (usize, usize)>,
) -> Result<VectorSample> {
    extract_at(g, lags, VectorKind::Diff, bases)
}

/// All observed pair differences `Z(s) - Z(s+h)` at exactly lag `h`.
pub fn lag_differences(g: &Grid, h: (i64, i64)) -> Vec<f64> {
    let mut out = Vec::new();
    for (x, y) in base_locations(g) {
        let (xs, ys) = (x as i64, y as i64);
        if let (Some(a), Some(b)) = (g.get(x, y), g.get_signed(xs + h.0, ys + h.1)) {
            out.push(a - b);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(nx: usize, ny: usize) -> Grid {
        Grid::from_fn(nx, ny, |x, y| (x + 10 * y) as f64).unwrap()
    }

    #[test]
    fn lag_sets() {
        assert_eq!(LagSet::new(Direction::EW, 2).unwrap().lags(), &[(1, 0), (2, 0)]);
        assert_eq!(LagSet::new(Direction::SENW, 3).unwrap().lags(), &[(1, -1), (2, -2), (3, -3)]);
        let d = LagSet::new(Direction::SWNE, 5).unwrap().distance(5);
        assert!((d - 7.07).abs() < 0.005);
        assert!(LagSet::new(Direction::EW, 0).is_err());
    }

    #[test]
    fn direction_parse_roundtrip() {
        for d in Direction::ALL {
            assert_eq!(d.id().parse::<Direction>().unwrap(), d);
            assert_eq!(d.to_string().parse::<Direction>().unwrap(), d);
        }
        assert!("up".parse::<Direction>().is_err());
    }

    #[test]
    fn three_by_three_org_rows() {
        let g = ramp(3, 3);
        let s = extract_org_vectors(&g, &LagSet::new(Direction::EW, 1).unwrap()).unwrap();
        assert_eq!(s.n(), 6);
        assert_eq!(s.dim(), 2);
        let rows: Vec<Vec<f64>> = s.rows().map(|r| r.to_vec()).collect();
        assert_eq!(
            rows,
            vec![
                vec![0.0, 1.0],
                vec![1.0, 2.0],
                vec![10.0, 11.0],
                vec![11.0, 12.0],
                vec![20.0, 21.0],
                vec![21.0, 22.0]
            ]
        );
    }

    #[test]
    fn one_row_diff_rows() {
        let g = Grid::new(4, 1, vec![0.0, 1.0, 3.0, 6.0]).unwrap();
        let s = extract_diff_vectors(&g, &LagSet::new(Direction::EW, 2).unwrap()).unwrap();
        let rows: Vec<Vec<f64>> = s.rows().map(|r| r.to_vec()).collect();
        assert_eq!(rows, vec![vec![-1.0, -3.0], vec![-2.0, -5.0]]);
    }

    #[test]
    fn constant_grid_diff_rows_are_zero() {
        let g = Grid::from_fn(6, 6, |_, _| 3.5).unwrap();
        let s = extract_diff_vectors(&g, &LagSet::new(Direction::SWNE, 2).unwrap()).unwrap();
        assert!(s.data().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn counts_per_direction() {
        let g = ramp(15, 15);
        for (dir, h, want) in [
            (Direction::EW, 7, 120),
            (Direction::SN, 7, 120),
            (Direction::SWNE, 5, 100),
            (Direction::SENW, 5, 100),
        ] {
            let lags = LagSet::new(dir, h).unwrap();
            assert_eq!(extract_org_vectors(&g, &lags).unwrap().n(), want, "{dir}");
            assert_eq!(extract_diff_vectors(&g, &lags).unwrap().n(), want, "{dir}");
        }
    }

    #[test]
    fn senw_components_step_south() {
        let g = ramp(3, 3);
        let s = extract_org_vectors(&g, &LagSet::new(Direction::SENW, 1).unwrap()).unwrap();
        // bases on rows y >= 1 so that s + (1, -1) stays in grid
        assert_eq!(s.origins(), &[(0, 1), (1, 1), (0, 2), (1, 2)]);
        assert_eq!(s.row(0), &[10.0, 1.0]);
    }

    #[test]
    fn masked_cell_drops_rows() {
        let mut g = ramp(5, 1);
        g.set_masked(2, true);
        let s = extract_org_vectors(&g, &LagSet::new(Direction::EW, 1).unwrap()).unwrap();
        assert_eq!(s.n(), 2);
    }

    #[test]
    fn empty_sample_error() {
        let g = ramp(3, 3);
        let lags = LagSet::new(Direction::EW, 3).unwrap();
        assert!(matches!(extract_org_vectors(&g, &lags), Err(Error::EmptySample)));
    }

    #[test]
    fn grid_validation() {
        assert!(Grid::new(0, 3, vec![]).is_err());
        assert!(Grid::new(2, 2, vec![1.0; 3]).is_err());
        assert!(Grid::with_mask(2, 1, vec![1.0; 2], vec![false]).is_err());
    }
}
