//! Directional variogram estimators.
//!
//! Every estimator reports the variogram `2γ̂(h_l)` for `l = 1..h_max`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::{
    extract_diff_vectors, extract_diff_vectors_at, extract_org_vectors, extract_org_vectors_at, lag_differences,
    Direction, Grid, LagSet, VectorSample,
};
use crate::mcd::{fast_mcd, reweight_mcd, AppliedFactors, McdConfig, McdFit};
use crate::numerics::{RngStream, SymMatrix};
use crate::scale::{qn, QnConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VectorKind {
    /// Stacked original values `(Z(s), Z(s+h_1), …)`.
    Org,
    /// Differences `(Z(s) - Z(s+h_1), …)`.
    Diff,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EstimatorId {
    Matheron,
    Genton,
    McdOrg,
    McdOrgRe,
    McdDiff,
    McdDiffRe,
    McdOrgMod,
    McdOrgModRe,
    McdDiffMod,
    McdDiffModRe,
}

impl EstimatorId {
    pub const ALL: [EstimatorId; 10] = [
        EstimatorId::Matheron,
        EstimatorId::Genton,
        EstimatorId::McdOrg,
        EstimatorId::McdOrgRe,
        EstimatorId::McdDiff,
        EstimatorId::McdDiffRe,
        EstimatorId::McdOrgMod,
        EstimatorId::McdOrgModRe,
        EstimatorId::McdDiffMod,
        EstimatorId::McdDiffModRe,
    ];

    /// The six estimators of the main comparison (no averaged modified variants).
    pub const MAIN: [EstimatorId; 6] = [
        EstimatorId::Matheron,
        EstimatorId::Genton,
        EstimatorId::McdDiff,
        EstimatorId::McdDiffRe,
        EstimatorId::McdOrg,
        EstimatorId::McdOrgRe,
    ];

    pub fn id(self) -> &'static str {
        match self {
            EstimatorId::Matheron => "matheron",
            EstimatorId::Genton => "genton",
            EstimatorId::McdOrg => "mcd.org",
            EstimatorId::McdOrgRe => "mcd.org.re",
            EstimatorId::McdDiff => "mcd.diff",
            EstimatorId::McdDiffRe => "mcd.diff.re",
            EstimatorId::McdOrgMod => "mcd.org.mod",
            EstimatorId::McdOrgModRe => "mcd.org.mod.re",
            EstimatorId::McdDiffMod => "mcd.diff.mod",
            EstimatorId::McdDiffModRe => "mcd.diff.mod.re",
        }
    }

    /// Vector kind for the MCD-based estimators.
    pub fn vector_kind(self) -> Option<VectorKind> {
        use EstimatorId::*;
        match self {
            Matheron | Genton => None,
            McdOrg | McdOrgRe | McdOrgMod | McdOrgModRe => Some(VectorKind::Org),
            McdDiff | McdDiffRe | McdDiffMod | McdDiffModRe => Some(VectorKind::Diff),
        }
    }

    pub fn is_reweighted(self) -> bool {
        use EstimatorId::*;
        matches!(self, McdOrgRe | McdDiffRe | McdOrgModRe | McdDiffModRe)
    }

    pub fn is_modified(self) -> bool {
        use EstimatorId::*;
        matches!(self, McdOrgMod | McdOrgModRe | McdDiffMod | McdDiffModRe)
    }

    /// The estimator sharing this one's raw fit with reweighting toggled.
    pub fn reweight_partner(self) -> Option<EstimatorId> {
        use EstimatorId::*;
        Some(match self {
            McdOrg => McdOrgRe,
            McdOrgRe => McdOrg,
            McdDiff => McdDiffRe,
            McdDiffRe => McdDiff,
            McdOrgMod => McdOrgModRe,
            McdOrgModRe => McdOrgMod,
            McdDiffMod => McdDiffModRe,
            McdDiffModRe => McdDiffMod,
            Matheron | Genton => return None,
        })
    }
}

impl fmt::Display for EstimatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for EstimatorId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        EstimatorId::ALL
            .into_iter()
            .find(|e| e.id() == lower)
            .ok_or_else(|| Error::UnknownEstimator(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariogramEstimate {
    pub estimator: EstimatorId,
    pub direction: Direction,
    pub lags: LagSet,
    /// `2γ̂(h_1), …, 2γ̂(h_{h_max})`.
    pub values: Vec<f64>,
    /// Pairs (Matheron, Genton) or vectors (MCD) behind each value.
    pub counts: Vec<usize>,
    pub correction_applied: Option<f64>,
}

impl VariogramEstimate {
    /// Multiplies every value by a finite-sample correction factor.
    pub fn with_correction(mut self, c: f64) -> Self {
        self.values.iter_mut().for_each(|v| *v *= c);
        self.correction_applied = Some(self.correction_applied.unwrap_or(1.0) * c);
        self
    }

    /// The same estimate without its largest lag.
    pub fn drop_largest_lag(mut self) -> Result<Self> {
        let h = self.lags.h_max();
        if h < 2 {
            return Err(Error::Domain("cannot drop the only lag".into()));
        }
        self.lags = LagSet::new(self.direction, h - 1)?;
        self.values.truncate(h - 1);
        self.counts.truncate(h - 1);
        Ok(self)
    }

    /// Semivariogram values `γ̂`.
    pub fn semivariogram(&self) -> Vec<f64> {
        self.values.iter().map(|v| 0.5 * v).collect()
    }
}

/// Dependence ranges and partition rules for the averaged modified estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModConfig {
    pub m_x: usize,
    pub m_y: usize,
    /// Average over every partition; otherwise use only the first one.
    pub average_partitions: bool,
    /// A partition is used only with strictly more vectors than this;
    /// `None` means `2·h_max`.
    pub min_vectors: Option<usize>,
}

impl Default for ModConfig {
    fn default() -> Self {
        ModConfig { m_x: 1, m_y: 1, average_partitions: true, min_vectors: None }
    }
}

impl ModConfig {
    pub fn new(m_x: usize, m_y: usize) -> Self {
        ModConfig { m_x, m_y, ..Default::default() }
    }

    pub fn threshold(&self, h_max: usize) -> usize {
        self.min_vectors.unwrap_or(2 * h_max)
    }

    /// `(along, across)` dependence ranges for lines in `direction`.
    pub fn ranges(&self, direction: Direction) -> (usize, usize) {
        match direction {
            Direction::EW => (self.m_x, self.m_y),
            Direction::SN => (self.m_y, self.m_x),
            Direction::SWNE | Direction::SENW => {
                let m = self.m_x.max(self.m_y);
                (m, m)
            }
        }
    }
}

/// Everything the dispatcher may need.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EstimatorConfig {
    pub qn: QnConfig,
    pub mcd: McdConfig,
    pub modcfg: ModConfig,
}

fn estimate(estimator: EstimatorId, lags: &LagSet, values: Vec<f64>, counts: Vec<usize>) -> VariogramEstimate {
    VariogramEstimate { estimator, direction: lags.direction(), lags: lags.clone(), values, counts, correction_applied: None }
}

/// `(1/|N(h)|) Σ (Z(s) - Z(s+h))²` per lag.
pub fn matheron(g: &Grid, lags: &LagSet) -> Result<VariogramEstimate> {
    let mut values = Vec::with_capacity(lags.h_max());
    let mut counts = Vec::with_capacity(lags.h_max());
    for (l, &h) in lags.lags().iter().enumerate() {
        let d = lag_differences(g, h);
        if d.is_empty() {
            return Err(Error::EmptyLag { lag: l + 1 });
        }
        values.push(d.iter().map(|v| v * v).sum::<f64>() / d.len() as f64);
        counts.push(d.len());
    }
    Ok(estimate(EstimatorId::Matheron, lags, values, counts))
}

/// `(c · Qn(V(h)))²` per lag.
pub fn genton(g: &Grid, lags: &LagSet, cfg: &QnConfig) -> Result<VariogramEstimate> {
    let mut values = Vec::with_capacity(lags.h_max());
    let mut counts = Vec::with_capacity(lags.h_max());
    for (l, &h) in lags.lags().iter().enumerate() {
        let d = lag_differences(g, h);
        if d.is_empty() {
            return Err(Error::EmptyLag { lag: l + 1 });
        }
        values.push(qn(&d, cfg)?.powi(2));
        counts.push(d.len());
    }
    Ok(estimate(EstimatorId::Genton, lags, values, counts))
}

/// Variogram from the scatter of difference vectors: its main diagonal.
pub fn variogram_from_diff_scatter(sigma: &SymMatrix) -> Vec<f64> {
    sigma.diag()
}

/// Variogram from the Toeplitz-averaged scatter of stacked original values:
/// `2(â₀ - â_l)` with `â_l` the mean of the `l`-th off-diagonal.
pub fn variogram_from_org_scatter(sigma: &SymMatrix) -> Vec<f64> {
    let p = sigma.dim();
    let band = |l: usize| (0..p - l).map(|i| sigma.get(i, i + l)).sum::<f64>() / (p - l) as f64;
    let a0 = band(0);
    (1..p).map(|l| 2.0 * (a0 - band(l))).collect()
}

fn from_scatter(kind: VectorKind, sigma: &SymMatrix) -> Vec<f64> {
    match kind {
        VectorKind::Org => variogram_from_org_scatter(sigma),
        VectorKind::Diff => variogram_from_diff_scatter(sigma),
    }
}

fn extract(g: &Grid, lags: &LagSet, kind: VectorKind) -> Result<VectorSample> {
    match kind {
        VectorKind::Org => extract_org_vectors(g, lags),
        VectorKind::Diff => extract_diff_vectors(g, lags),
    }
}

/// A zero-scatter fit for samples whose rows are all identical; the MCD has
/// no nonsingular subset there but the answer is unambiguous.
fn constant_fit(data: &VectorSample) -> Option<McdFit> {
    let first = data.row(0);
    if !data.rows().all(|r| r == first) {
        return None;
    }
    let p = data.dim();
    Some(McdFit {
        mu: first.to_vec(),
        sigma: SymMatrix::zeros(p),
        support: (0..data.n()).collect(),
        det: 0.0,
        reweighted: false,
        weights: Vec::new(),
        factors_applied: AppliedFactors { c: 1.0, c_star: None },
        singular_subsets: 0,
    })
}

/// Raw fit and, when requested, its reweighted refinement.
fn fit_pair(data: &VectorSample, cfg: &McdConfig, reweight: bool, rng: &mut RngStream) -> Result<(McdFit, Option<McdFit>)> {
    if let Some(fit) = constant_fit(data) {
        let re = reweight.then(|| McdFit { reweighted: true, weights: vec![true; data.n()], ..fit.clone() });
        return Ok((fit, re));
    }
    let raw = fast_mcd(data, cfg, rng)?;
    let re = if reweight { Some(reweight_mcd(data, &raw, cfg)?) } else { None };
    Ok((raw, re))
}

fn mcd_id(kind: VectorKind, modified: bool, reweighted: bool) -> EstimatorId {
    use EstimatorId::*;
    match (kind, modified, reweighted) {
        (VectorKind::Org, false, false) => McdOrg,
        (VectorKind::Org, false, true) => McdOrgRe,
        (VectorKind::Diff, false, false) => McdDiff,
        (VectorKind::Diff, false, true) => McdDiffRe,
        (VectorKind::Org, true, false) => McdOrgMod,
        (VectorKind::Org, true, true) => McdOrgModRe,
        (VectorKind::Diff, true, false) => McdDiffMod,
        (VectorKind::Diff, true, true) => McdDiffModRe,
    }
}

/// Raw and reweighted MCD estimates from a single raw fit.
pub fn mcd_pair(
    g: &Grid,
    lags: &LagSet,
    kind: VectorKind,
    cfg: &McdConfig,
    rng: &mut RngStream,
) -> Result<(VariogramEstimate, VariogramEstimate)> {
    let data = extract(g, lags, kind)?;
    let n = data.n();
    let (raw, re) = fit_pair(&data, cfg, true, rng)?;
    let re = re.expect("reweighting requested");
    let counts = vec![n; lags.h_max()];
    Ok((
        estimate(mcd_id(kind, false, false), lags, from_scatter(kind, &raw.sigma), counts.clone()),
        estimate(mcd_id(kind, false, true), lags, from_scatter(kind, &re.sigma), counts),
    ))
}

fn mcd_single(
    g: &Grid,
    lags: &LagSet,
    kind: VectorKind,
    cfg: &McdConfig,
    reweight: bool,
    rng: &mut RngStream,
) -> Result<VariogramEstimate> {
    let data = extract(g, lags, kind)?;
    let (raw, re) = fit_pair(&data, cfg, reweight, rng)?;
    let sigma = re.as_ref().map_or(&raw.sigma, |f| &f.sigma);
    Ok(estimate(mcd_id(kind, false, reweight), lags, from_scatter(kind, sigma), vec![data.n(); lags.h_max()]))
}

/// MCD scatter of difference vectors; the variogram is its diagonal.
pub fn mcd_diff(g: &Grid, lags: &LagSet, cfg: &McdConfig, reweight: bool, rng: &mut RngStream) -> Result<VariogramEstimate> {
    mcd_single(g, lags, VectorKind::Diff, cfg, reweight, rng)
}

/// MCD scatter of stacked original values, Toeplitz-averaged.
pub fn mcd_org(g: &Grid, lags: &LagSet, cfg: &McdConfig, reweight: bool, rng: &mut RngStream) -> Result<VariogramEstimate> {
    mcd_single(g, lags, VectorKind::Org, cfg, reweight, rng)
}

/// Cells of every grid line running in `direction`, each in walking order.
pub fn grid_lines(nx: usize, ny: usize, direction: Direction) -> Vec<Vec<(usize, usize)>> {
    let (sx, sy) = direction.step();
    let starts: Vec<(usize, usize)> = match direction {
        Direction::EW => (0..ny).map(|y| (0, y)).collect(),
        Direction::SN => (0..nx).map(|x| (x, 0)).collect(),
        // x - y = const, from the north-west corner to the south-east corner
        Direction::SWNE => (0..ny).rev().map(|y| (0, y)).chain((1..nx).map(|x| (x, 0))).collect(),
        // x + y = const, from the south-west corner to the north-east corner
        Direction::SENW => (0..ny).map(|y| (0, y)).chain((1..nx).map(|x| (x, ny - 1))).collect(),
    };
    starts
        .into_iter()
        .map(|(x0, y0)| {
            let mut line = Vec::new();
            let (mut x, mut y) = (x0 as i64, y0 as i64);
            while x >= 0 && y >= 0 && (x as usize) < nx && (y as usize) < ny {
                line.push((x as usize, y as usize));
                x += sx;
                y += sy;
            }
            line
        })
        .collect()
}

/// Base cells of the non-overlapping partitions, in deterministic order:
/// line offset outer, start offset inner.
pub fn mod_partitions(nx: usize, ny: usize, lags: &LagSet, modcfg: &ModConfig) -> Vec<Vec<(usize, usize)>> {
    let h = lags.h_max();
    let (along, across) = modcfg.ranges(lags.direction());
    let stride = h + 1 + along;
    let lines = grid_lines(nx, ny, lags.direction());
    let mut parts = Vec::new();
    for r in 0..=across {
        for o in 0..stride {
            let mut bases = Vec::new();
            for line in lines.iter().skip(r).step_by(across + 1) {
                bases.extend((o..line.len().saturating_sub(h)).step_by(stride).map(|t| line[t]));
            }
            parts.push(bases);
            if !modcfg.average_partitions {
                return parts;
            }
        }
    }
    parts
}

/// Non-overlapping vector count on a single line of length `n_x`.
pub fn non_overlapping_count(n_x: usize, h_max: usize, m: usize) -> usize {
    if n_x <= h_max {
        0
    } else {
        (n_x - h_max - 1) / (h_max + 1 + m) + 1
    }
}

/// Averaged modified MCD estimates `(raw, reweighted)` over all qualifying
/// partitions; the reweighted one is `None` unless requested.
pub fn mcd_mod_pair(
    g: &Grid,
    lags: &LagSet,
    kind: VectorKind,
    modcfg: &ModConfig,
    cfg: &McdConfig,
    reweight: bool,
    rng: &mut RngStream,
) -> Result<(VariogramEstimate, Option<VariogramEstimate>)> {
    let h = lags.h_max();
    let p = match kind {
        VectorKind::Org => h + 1,
        VectorKind::Diff => h,
    };
    let min = modcfg.threshold(h).max(p);
    let mut raw_sum = vec![0.0; h];
    let mut re_sum = vec![0.0; h];
    let (mut used, mut vectors) = (0usize, 0usize);
    for bases in mod_partitions(g.nx(), g.ny(), lags, modcfg) {
        let data = match kind {
            VectorKind::Org => extract_org_vectors_at(g, lags, bases),
            VectorKind::Diff => extract_diff_vectors_at(g, lags, bases),
        };
        let data = match data {
            Ok(d) if d.n() > min => d,
            Ok(_) | Err(Error::EmptySample) => continue,
            Err(e) => return Err(e),
        };
        let (raw, re) = fit_pair(&data, cfg, reweight, rng)?;
        for (acc, v) in raw_sum.iter_mut().zip(from_scatter(kind, &raw.sigma)) {
            *acc += v;
        }
        if let Some(re) = re {
            for (acc, v) in re_sum.iter_mut().zip(from_scatter(kind, &re.sigma)) {
                *acc += v;
            }
        }
        used += 1;
        vectors += data.n();
    }
    if used == 0 {
        return Err(Error::NoValidPartition { min });
    }
    let mean = |s: Vec<f64>| s.into_iter().map(|v| v / used as f64).collect::<Vec<_>>();
    let counts = vec![vectors; h];
    let raw = estimate(mcd_id(kind, true, false), lags, mean(raw_sum), counts.clone());
    let re = reweight.then(|| estimate(mcd_id(kind, true, true), lags, mean(re_sum), counts));
    Ok((raw, re))
}

/// Averaged modified MCD estimator.
pub fn mcd_mod(
    g: &Grid,
    lags: &LagSet,
    kind: VectorKind,
    modcfg: &ModConfig,
    cfg: &McdConfig,
    reweight: bool,
    rng: &mut RngStream,
) -> Result<VariogramEstimate> {
    let (raw, re) = mcd_mod_pair(g, lags, kind, modcfg, cfg, reweight, rng)?;
    Ok(re.unwrap_or(raw))
}

/// Runs any estimator by identifier.
pub fn estimate_variogram(
    g: &Grid,
    lags: &LagSet,
    id: EstimatorId,
    cfg: &EstimatorConfig,
    rng: &mut RngStream,
) -> Result<VariogramEstimate> {
    match (id, id.vector_kind()) {
        (EstimatorId::Matheron, _) => matheron(g, lags),
        (EstimatorId::Genton, _) => genton(g, lags, &cfg.qn),
        (_, Some(kind)) if id.is_modified() => mcd_mod(g, lags, kind, &cfg.modcfg, &cfg.mcd, id.is_reweighted(), rng),
        (_, Some(kind)) => mcd_single(g, lags, kind, &cfg.mcd, id.is_reweighted(), rng),
        (_, None) => unreachable!("only Matheron and Genton lack a vector kind"),
    }
}

/// Runs several estimators on one grid, fitting each MCD raw/reweighted pair
/// once. MCD fits draw from `rng` in the order the ids are given.
pub fn estimate_many(
    g: &Grid,
    lags: &LagSet,
    ids: &[EstimatorId],
    cfg: &EstimatorConfig,
    rng: &mut RngStream,
) -> Result<Vec<VariogramEstimate>> {
    let mut out: Vec<Option<VariogramEstimate>> = vec![None; ids.len()];
    for (i, &id) in ids.iter().enumerate() {
        if out[i].is_some() {
            continue;
        }
        let partner = id.reweight_partner().and_then(|p| ids.iter().position(|&x| x == p));
        match (id.vector_kind(), partner) {
            (Some(kind), Some(j)) => {
                let (raw, re) = if id.is_modified() {
                    let (raw, re) = mcd_mod_pair(g, lags, kind, &cfg.modcfg, &cfg.mcd, true, rng)?;
                    (raw, re.expect("reweighting requested"))
                } else {
                    mcd_pair(g, lags, kind, &cfg.mcd, rng)?
                };
                let (a, b) = if id.is_reweighted() { (re, raw) } else { (raw, re) };
                out[i] = Some(a);
                out[j] = Some(b);
            }
            _ => out[i] = Some(estimate_variogram(g, lags, id, cfg, rng)?),
        }
    }
    Ok(out.into_iter().map(|e| e.expect("filled")).collect())
}
