//! Finite-sample explosion breakdown points of the directional estimators on
//! a single line of `n_x` observations, and a brute-force check of them.

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::estimators::{
    genton, mcd_diff, mcd_mod, mcd_org, non_overlapping_count, ModConfig, VariogramEstimate, VectorKind,
};
use crate::grid::{Direction, Grid, LagSet};
use crate::mcd::McdConfig;
use crate::numerics::RngStream;
use crate::scale::QnConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Block,
    Isolated,
}

impl Scenario {
    pub fn id(self) -> &'static str {
        match self {
            Scenario::Block => "block",
            Scenario::Isolated => "isolated",
        }
    }
}

impl std::str::FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "block" => Ok(Scenario::Block),
            "isolated" => Ok(Scenario::Isolated),
            _ => Err(Error::Invalid(format!("unknown scenario `{s}` (block, isolated)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BreakdownEstimator {
    McdOrg,
    McdDiff,
    McdOrgMod,
    McdDiffMod,
    Genton,
}

impl BreakdownEstimator {
    pub const ALL: [BreakdownEstimator; 5] = [
        BreakdownEstimator::McdOrg,
        BreakdownEstimator::McdDiff,
        BreakdownEstimator::McdOrgMod,
        BreakdownEstimator::McdDiffMod,
        BreakdownEstimator::Genton,
    ];

    pub fn id(self) -> &'static str {
        match self {
            BreakdownEstimator::McdOrg => "mcd.org",
            BreakdownEstimator::McdDiff => "mcd.diff",
            BreakdownEstimator::McdOrgMod => "mcd.org.mod",
            BreakdownEstimator::McdDiffMod => "mcd.diff.mod",
            BreakdownEstimator::Genton => "genton",
        }
    }

    fn is_modified(self) -> bool {
        matches!(self, BreakdownEstimator::McdOrgMod | BreakdownEstimator::McdDiffMod)
    }

    fn kind(self) -> Option<VectorKind> {
        match self {
            BreakdownEstimator::McdOrg | BreakdownEstimator::McdOrgMod => Some(VectorKind::Org),
            BreakdownEstimator::McdDiff | BreakdownEstimator::McdDiffMod => Some(VectorKind::Diff),
            BreakdownEstimator::Genton => None,
        }
    }
}

impl std::str::FromStr for BreakdownEstimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BreakdownEstimator::ALL
            .into_iter()
            .find(|e| e.id() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::UnknownEstimator(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BreakdownQuery {
    pub scenario: Scenario,
    pub estimator: BreakdownEstimator,
    pub n_x: u64,
    /// `h_max`, or the single lag `h` for Genton.
    pub h_max: u64,
    /// Dependence range; used by the modified estimators only.
    pub m: u64,
}

impl BreakdownQuery {
    pub fn new(scenario: Scenario, estimator: BreakdownEstimator, n_x: u64, h_max: u64, m: u64) -> Self {
        BreakdownQuery { scenario, estimator, n_x, h_max, m }
    }

    pub fn validate(&self) -> Result<()> {
        if self.h_max == 0 || self.n_x <= self.h_max {
            return Err(Error::Domain(format!("need n_x > h_max >= 1, got n_x = {}, h_max = {}", self.n_x, self.h_max)));
        }
        Ok(())
    }

    fn dim(&self) -> u64 {
        match self.estimator.kind() {
            Some(VectorKind::Org) => self.h_max + 1,
            _ => self.h_max,
        }
    }

    /// Number of vectors (or differences, for Genton) the estimator sees.
    pub fn n_star(&self) -> u64 {
        if self.estimator.is_modified() {
            non_overlapping_count(self.n_x as usize, self.h_max as usize, self.m as usize) as u64
        } else {
            self.n_x - self.h_max
        }
    }

    /// Disturbed vectors needed to explode the MCD: `n* - ⌊(n*+p+1)/2⌋ + 1`.
    fn critical_vectors(&self) -> Result<u64> {
        let (n, p) = (self.n_star(), self.dim());
        if n <= p {
            return Err(Error::NotUsable(format!(
                "only {n} vectors of dimension {p} can be built (n_x = {}, h_max = {}, m = {})",
                self.n_x, self.h_max, self.m
            )));
        }
        Ok(n - (n + p + 1) / 2 + 1)
    }

    /// `⌈ε_Qn · n*⌉ = ⌊(n*+1)/2⌋` differences for Genton.
    fn critical_differences(&self) -> u64 {
        (self.n_star() + 1) / 2
    }

    /// Shortest block disturbing `l` vectors of one non-overlapping partition.
    fn block_length(&self, l: u64) -> u64 {
        if l <= 1 {
            1
        } else {
            (l - 2) * (self.h_max + 1 + self.m) + self.m + 2
        }
    }

    /// Number of contaminated cells that the closed form calls critical,
    /// as a rational (the plain isolated bounds are not integers).
    pub fn critical_cells(&self) -> Result<Ratio<u64>> {
        self.validate()?;
        let h = self.h_max;
        Ok(match (self.scenario, self.estimator) {
            (Scenario::Block, BreakdownEstimator::Genton) => {
                let c = self.critical_differences();
                Ratio::from_integer(c.saturating_sub(h)).max(Ratio::new(c, 2))
            }
            (Scenario::Isolated, BreakdownEstimator::Genton) => {
                return Err(Error::Domain("no isolated-outlier closed form for genton".into()))
            }
            (Scenario::Block, e) if e.is_modified() => Ratio::from_integer(self.block_length(self.critical_vectors()?)),
            (Scenario::Isolated, e) if e.is_modified() => Ratio::from_integer(self.critical_vectors()?),
            // a block of l cells disturbs l + h_max overlapping vectors
            (Scenario::Block, _) => Ratio::from_integer(self.critical_vectors()?.saturating_sub(h).max(1)),
            // each isolated cell disturbs up to h_max + 1 vectors
            (Scenario::Isolated, _) => Ratio::new(self.critical_vectors()?, h + 1),
        })
    }
}

/// Closed-form explosion breakdown point as an exact fraction of `n_x`.
pub fn breakdown_point(q: &BreakdownQuery) -> Result<Ratio<u64>> {
    Ok(q.critical_cells()? / q.n_x)
}

/// Integer count of outliers planted by [`empirical_breakdown_check`].
pub fn critical_outlier_count(q: &BreakdownQuery) -> Result<usize> {
    Ok(q.critical_cells()?.ceil().to_integer() as usize)
}

fn run_estimator(q: &BreakdownQuery, g: &Grid, mcd_seed: u64, run: u64) -> Result<VariogramEstimate> {
    let lags = LagSet::new(Direction::EW, q.h_max as usize)?;
    let cfg = McdConfig::default();
    let mut rng = RngStream::new(mcd_seed, run);
    match q.estimator {
        BreakdownEstimator::Genton => {
            // only the lag under study matters
            let lag = LagSet::new(Direction::EW, q.h_max as usize)?;
            let full = genton(g, &lag, &QnConfig::default())?;
            Ok(VariogramEstimate {
                values: vec![*full.values.last().expect("h >= 1")],
                counts: vec![*full.counts.last().expect("h >= 1")],
                ..full
            })
        }
        BreakdownEstimator::McdOrg => mcd_org(g, &lags, &cfg, false, &mut rng),
        BreakdownEstimator::McdDiff => mcd_diff(g, &lags, &cfg, false, &mut rng),
        e => {
            // only partitions with the full non-overlapping count, matching
            // the closed form's n*
            let modcfg = ModConfig {
                m_x: q.m as usize,
                m_y: 0,
                average_partitions: true,
                min_vectors: Some(q.n_star() as usize - 1),
            };
            mcd_mod(g, &lags, e.kind().expect("MCD estimator"), &modcfg, &cfg, false, &mut rng)
        }
    }
}

/// Spacing between isolated outliers that makes each one hit fresh vectors.
fn isolated_spacing(q: &BreakdownQuery) -> u64 {
    if q.estimator.is_modified() {
        q.h_max + 1 + q.m
    } else {
        q.h_max + 1
    }
}

/// Candidate outlier placements of `size` cells: every block start, or every
/// offset of the regular isolated pattern.
fn placements(q: &BreakdownQuery, size: usize) -> Vec<Vec<usize>> {
    let n = q.n_x as usize;
    if size == 0 {
        return vec![Vec::new()];
    }
    match q.scenario {
        Scenario::Block => (0..=n.saturating_sub(size)).map(|s| (s..s + size).collect()).collect(),
        Scenario::Isolated => {
            let step = isolated_spacing(q) as usize;
            (0..step)
                .filter(|o| o + (size - 1) * step < n)
                .map(|o| (0..size).map(|i| o + i * step).collect())
                .collect()
        }
    }
}

/// Plants `size` outliers at every candidate placement on a clean
/// `1 x n_x` Gaussian series and reports whether any placement drives some
/// lag estimate above `magnitude² / 100`.
///
/// Outlier `j` is `±magnitude · 2^j` with a random sign, so outlying values
/// and the differences between them are all distinct and of order
/// `magnitude` or larger.
pub fn empirical_breakdown_check_with_size(
    q: &BreakdownQuery,
    size: usize,
    magnitude: f64,
    rng: &mut RngStream,
) -> Result<bool> {
    q.validate()?;
    if size > q.n_x as usize {
        return Err(Error::Domain(format!("cannot plant {size} outliers in {} cells", q.n_x)));
    }
    let n = q.n_x as usize;
    let clean: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
    let outliers: Vec<f64> = (0..size)
        .map(|j| {
            let sign = if rng.uniform() < 0.5 { -1.0 } else { 1.0 };
            sign * magnitude * 2f64.powi(j.min(40) as i32)
        })
        .collect();
    let mcd_seed = rng.next_u64();
    let limit = magnitude * magnitude / 100.0;
    for (run, cells) in placements(q, size).into_iter().enumerate() {
        let mut values = clean.clone();
        for (&c, &v) in cells.iter().zip(&outliers) {
            values[c] = v;
        }
        let g = Grid::new(n, 1, values)?;
        let e = run_estimator(q, &g, mcd_seed, run as u64)?;
        if e.values.iter().any(|&v| !(v <= limit)) {
            return Ok(true);
        }
    }
    Ok(false)
}

/// [`empirical_breakdown_check_with_size`] at the closed form's critical size.
pub fn empirical_breakdown_check(q: &BreakdownQuery, magnitude: f64, rng: &mut RngStream) -> Result<bool> {
    empirical_breakdown_check_with_size(q, critical_outlier_count(q)?, magnitude, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use BreakdownEstimator::*;
    use Scenario::*;

    fn bp(s: Scenario, e: BreakdownEstimator, h: u64, m: u64) -> Ratio<u64> {
        breakdown_point(&BreakdownQuery::new(s, e, 50, h, m)).unwrap()
    }

    fn bp_err(s: Scenario, e: BreakdownEstimator) -> Error {
        breakdown_point(&BreakdownQuery::new(s, e, 50, 4, 0)).unwrap_err()
    }

    #[test]
    fn worked_examples() {
        assert_eq!(bp(Block, McdOrgMod, 4, 1), Ratio::new(3, 50));
        assert_eq!(bp(Block, McdDiffMod, 4, 1), Ratio::new(9, 50));
        assert_eq!(bp(Block, McdOrg, 4, 0), Ratio::new(34, 100));
        assert_eq!(bp(Block, McdDiff, 4, 0), Ratio::new(36, 100));
        assert_eq!(bp(Block, Genton, 4, 0), Ratio::new(38, 100));
        assert_eq!(bp(Isolated, McdOrgMod, 4, 1), Ratio::new(4, 100));
        assert_eq!(bp(Isolated, McdDiffMod, 4, 1), Ratio::new(6, 100));
        assert_eq!(bp(Isolated, McdOrg, 4, 0), Ratio::new(84, 1000));
        assert_eq!(bp(Isolated, McdDiff, 4, 0), Ratio::new(88, 1000));
        let q = BreakdownQuery::new(Block, Genton, 50, 4, 0);
        assert_eq!(q.critical_cells().unwrap(), Ratio::from_integer(19));
    }

    #[test]
    fn unusable_and_invalid() {
        assert!(matches!(bp_err(Isolated, Genton), Error::Domain(_)));
        let q = BreakdownQuery::new(Block, McdOrgMod, 50, 6, 5);
        assert_eq!(q.n_star(), 4);
        assert!(matches!(breakdown_point(&q), Err(Error::NotUsable(_))));
        assert!(breakdown_point(&BreakdownQuery::new(Block, McdOrg, 4, 4, 0)).is_err());
        assert!(breakdown_point(&BreakdownQuery::new(Block, McdOrg, 10, 0, 0)).is_err());
    }

    #[test]
    fn single_disturbed_vector_edge() {
        let q = BreakdownQuery::new(Block, McdDiffMod, 50, 4, 1);
        assert_eq!(q.block_length(1), 1);
        assert_eq!(q.block_length(2), 3);
        assert_eq!(q.block_length(3), 9);
    }

    #[test]
    fn nonincreasing_in_h_max() {
        for n_x in 30..=100 {
            for s in [Block, Isolated] {
                for e in BreakdownEstimator::ALL {
                    for m in [0, 1, 2] {
                        let mut prev: Option<Ratio<u64>> = None;
                        for h in 2..=8 {
                            match breakdown_point(&BreakdownQuery::new(s, e, n_x, h, m)) {
                                Ok(v) => {
                                    if let Some(p) = prev {
                                        assert!(v <= p, "{s:?} {} n_x={n_x} m={m} h={h}: {v} > {p}", e.id());
                                    }
                                    prev = Some(v);
                                }
                                Err(Error::NotUsable(_)) => prev = Some(Ratio::from_integer(0)),
                                Err(Error::Domain(_)) if s == Isolated && e == Genton => {}
                                Err(err) => panic!("{err}"),
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn no_outliers_no_breakdown() {
        let q = BreakdownQuery::new(Block, McdDiffMod, 50, 4, 1);
        assert!(!empirical_breakdown_check_with_size(&q, 0, 1e6, &mut RngStream::new(1, 0)).unwrap());
    }

    #[test]
    fn diff_mod_block_is_exact() {
        let q = BreakdownQuery::new(Block, McdDiffMod, 50, 4, 1);
        let mut rng = RngStream::new(2, 0);
        assert!(empirical_breakdown_check(&q, 1e6, &mut rng).unwrap());
        let size = critical_outlier_count(&q).unwrap();
        assert!(!empirical_breakdown_check_with_size(&q, size - 1, 1e6, &mut rng).unwrap());
    }
}
