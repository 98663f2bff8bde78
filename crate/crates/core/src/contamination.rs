//! Outlier injection: one spatially aggregated block or isolated cells.

use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::numerics::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContaminationKind {
    Block,
    Isolated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ContaminationMode {
    /// Contaminated cells are replaced by the outlier draw.
    #[default]
    Substitutive,
    /// The outlier draw is added to the cell.
    Additive,
}

/// Shape of a contiguous outlier block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BlockShape {
    /// The cells nearest to the centre of `s₀` or to its north-east corner,
    /// whichever needs fewer cells from an incomplete distance ring.
    #[default]
    Rounded,
    /// A `⌈√m⌉`-wide rectangle filled row by row.
    Rectangle,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContaminationSpec {
    pub kind: ContaminationKind,
    pub epsilon: f64,
    pub mu0: f64,
    pub sigma0: f64,
    pub mode: ContaminationMode,
    pub shape: BlockShape,
}

impl ContaminationSpec {
    pub fn block(epsilon: f64, mu0: f64, sigma0: f64) -> Self {
        ContaminationSpec {
            kind: ContaminationKind::Block,
            epsilon,
            mu0,
            sigma0,
            mode: ContaminationMode::Substitutive,
            shape: BlockShape::Rounded,
        }
    }

    pub fn isolated(epsilon: f64, mu0: f64, sigma0: f64) -> Self {
        ContaminationSpec { kind: ContaminationKind::Isolated, ..Self::block(epsilon, mu0, sigma0) }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.epsilon) {
            return Err(Error::Domain(format!("epsilon must lie in [0, 1), got {}", self.epsilon)));
        }
        if !(self.sigma0 > 0.0) {
            return Err(Error::Domain(format!("sigma0 must be positive, got {}", self.sigma0)));
        }
        Ok(())
    }

    /// `⌈ε n⌉`, robust to representation error in `ε`.
    pub fn count(&self, n: usize) -> usize {
        let raw = self.epsilon * n as f64;
        let c = (raw - 1e-9).ceil().max(0.0) as usize;
        c.min(n)
    }
}

/// Parses `kind=block,eps=0.05,mu0=3,sigma0=1[,mode=additive][,shape=rectangle]`.
impl FromStr for ContaminationSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut spec = ContaminationSpec::block(0.0, 0.0, 1.0);
        for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::Invalid(format!("expected key=value, got `{item}`")))?;
            let num = || v.parse::<f64>().map_err(|_| Error::Invalid(format!("not a number: `{v}`")));
            match k.trim() {
                "kind" => {
                    spec.kind = match v {
                        "block" => ContaminationKind::Block,
                        "isolated" => ContaminationKind::Isolated,
                        _ => return Err(Error::Invalid(format!("unknown contamination kind `{v}`"))),
                    }
                }
                "eps" | "epsilon" => spec.epsilon = num()?,
                "mu0" => spec.mu0 = num()?,
                "sigma0" => spec.sigma0 = num()?,
                "mode" => {
                    spec.mode = match v {
                        "substitutive" => ContaminationMode::Substitutive,
                        "additive" => ContaminationMode::Additive,
                        _ => return Err(Error::Invalid(format!("unknown contamination mode `{v}`"))),
                    }
                }
                "shape" => {
                    spec.shape = match v {
                        "rounded" => BlockShape::Rounded,
                        "rectangle" => BlockShape::Rectangle,
                        _ => return Err(Error::Invalid(format!("unknown block shape `{v}`"))),
                    }
                }
                other => return Err(Error::Invalid(format!("unknown contamination key `{other}`"))),
            }
        }
        spec.validate()?;
        Ok(spec)
    }
}

/// Rectangular block of `m` cells around `center`.
///
/// The block is `w = ⌈√m⌉` columns wide (widened to `⌈m / n_y⌉` on short
/// grids, capped at the grid width) and
/// `⌈m / w⌉` rows high, filled row by row from its south-west corner with the
/// surplus dropped from the end of the northernmost row. The centre sits at
/// block position `(⌈w/2⌉, ⌈r/2⌉)` and the block is shifted minimally to stay
/// inside the grid.
pub fn rectangle_block_cells(nx: usize, ny: usize, center: (usize, usize), m: usize) -> Vec<usize> {
    if m == 0 {
        return Vec::new();
    }
    let w = ((m as f64).sqrt().ceil() as usize).max(1);
    let w = if w * w < m { w + 1 } else { w };
    // widen on grids too short for a square
    let w = w.max(m.div_ceil(ny)).min(nx);
    let r = m.div_ceil(w);
    let anchor = (w.div_ceil(2) - 1, r.div_ceil(2) - 1);
    let x0 = (center.0 as i64 - anchor.0 as i64).clamp(0, (nx - w) as i64) as usize;
    let y0 = (center.1 as i64 - anchor.1 as i64).clamp(0, (ny - r) as i64) as usize;
    (0..m).map(|k| (y0 + k / w) * nx + x0 + k % w).collect()
}

/// Offsets (in half cells, so corner centres stay integral) of the `m` cells
/// nearest to a centre, and how many of them come from an incomplete ring.
fn nearest_offsets(m: usize, corner: bool) -> (Vec<(i64, i64)>, usize) {
    let reach = (m as f64).sqrt().ceil() as i64 + 2;
    let shift = i64::from(corner);
    // cell (dx, dy) centre relative to the centre point, doubled
    let mut cells: Vec<(i64, f64, i64, i64)> = Vec::new();
    for dy in -reach..=reach {
        for dx in -reach..=reach {
            let (u, v) = (2 * dx - shift, 2 * dy - shift);
            let angle = (v as f64).atan2(u as f64).rem_euclid(std::f64::consts::TAU);
            cells.push((u * u + v * v, angle, dx, dy));
        }
    }
    cells.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let cut = cells[m - 1].0;
    let ring_total = cells.iter().filter(|c| c.0 == cut).count();
    let ring_used = cells[..m].iter().filter(|c| c.0 == cut).count();
    let partial = if ring_used == ring_total { 0 } else { ring_used };
    (cells[..m].iter().map(|c| (c.2, c.3)).collect(), partial)
}

/// Cell indices of the block of `m` cells around `center` (zero-based
/// coordinates) for the given shape.
///
/// The rounded block is the set of `m` cells nearest to the centre of
/// `center` or to its north-east corner, choosing whichever leaves fewer
/// cells in an incomplete distance ring (ties go to the cell centre);
/// within a ring cells are taken counterclockwise from east. It is shifted
/// minimally to stay inside the grid, and falls back to the rectangle when
/// its bounding box does not fit.
pub fn block_cells_shaped(nx: usize, ny: usize, center: (usize, usize), m: usize, shape: BlockShape) -> Vec<usize> {
    if m == 0 {
        return Vec::new();
    }
    if shape == BlockShape::Rectangle {
        return rectangle_block_cells(nx, ny, center, m);
    }
    let (a, pa) = nearest_offsets(m, false);
    let (b, pb) = nearest_offsets(m, true);
    let offsets = if pb < pa { b } else { a };
    let (x_lo, x_hi) = offsets.iter().fold((i64::MAX, i64::MIN), |(lo, hi), o| (lo.min(o.0), hi.max(o.0)));
    let (y_lo, y_hi) = offsets.iter().fold((i64::MAX, i64::MIN), |(lo, hi), o| (lo.min(o.1), hi.max(o.1)));
    let (w, h) = (x_hi - x_lo + 1, y_hi - y_lo + 1);
    if w > nx as i64 || h > ny as i64 {
        return rectangle_block_cells(nx, ny, center, m);
    }
    let x0 = (center.0 as i64 + x_lo).clamp(0, nx as i64 - w) - x_lo;
    let y0 = (center.1 as i64 + y_lo).clamp(0, ny as i64 - h) - y_lo;
    let mut cells: Vec<usize> = offsets.iter().map(|o| ((y0 + o.1) as usize) * nx + (x0 + o.0) as usize).collect();
    cells.sort_unstable();
    cells
}

/// [`block_cells_shaped`] with the default rounded shape.
pub fn block_cells(nx: usize, ny: usize, center: (usize, usize), m: usize) -> Vec<usize> {
    block_cells_shaped(nx, ny, center, m, BlockShape::Rounded)
}

fn apply(g: &Grid, cells: &[usize], spec: &ContaminationSpec, rng: &mut RngStream) -> Grid {
    let mut out = g.clone();
    let values = out.values_mut();
    for &c in cells {
        let w = spec.mu0 + spec.sigma0 * rng.normal();
        values[c] = match spec.mode {
            ContaminationMode::Substitutive => w,
            ContaminationMode::Additive => values[c] + w,
        };
    }
    out
}

/// Replaces a block of `⌈ε n⌉` cells centred at a uniformly drawn cell.
pub fn contaminate_block(g: &Grid, spec: &ContaminationSpec, rng: &mut RngStream) -> Result<(Grid, Vec<usize>)> {
    spec.validate()?;
    let m = spec.count(g.len());
    if m == 0 {
        return Ok((g.clone(), Vec::new()));
    }
    let center = g.coords(rng.below(g.len()));
    let cells = block_cells_shaped(g.nx(), g.ny(), center, m, spec.shape);
    let out = apply(g, &cells, spec, rng);
    Ok((out, cells))
}

/// Replaces `⌈ε n⌉` distinct uniformly chosen cells.
pub fn contaminate_isolated(g: &Grid, spec: &ContaminationSpec, rng: &mut RngStream) -> Result<(Grid, Vec<usize>)> {
    spec.validate()?;
    let m = spec.count(g.len());
    if m == 0 {
        return Ok((g.clone(), Vec::new()));
    }
    let mut cells = rng.sample_indices(g.len(), m);
    cells.sort_unstable();
    let out = apply(g, &cells, spec, rng);
    Ok((out, cells))
}

/// Dispatches on `spec.kind`.
pub fn contaminate(g: &Grid, spec: &ContaminationSpec, rng: &mut RngStream) -> Result<(Grid, Vec<usize>)> {
    match spec.kind {
        ContaminationKind::Block => contaminate_block(g, spec, rng),
        ContaminationKind::Isolated => contaminate_isolated(g, spec, rng),
    }
}
