//! Monte-Carlo studies: finite-sample correction factors and bias/rMSE
//! tables for clean and contaminated fields.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::Write;

use rayon::prelude::*;

use crate::contamination::{contaminate, ContaminationSpec};
use crate::error::{Error, Result};
use crate::estimators::{estimate_many, EstimatorConfig, EstimatorId, VariogramEstimate};
use crate::grid::{Direction, Grid, LagSet};
use crate::numerics::RngStream;
use crate::simfield::{FieldSimulator, FieldSpec};
use crate::variomodel::aniso_variogram;

const STREAM_BLOCK: u64 = 1 << 32;

/// Divisor of the lag-averaged ratio in the correction-factor formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CorrfacDivisor {
    /// `h_max`, as in the displayed formula.
    HMax,
    /// `h_max - 1`: a plain mean over the lags kept.
    #[default]
    HMaxMinus1,
}

impl std::str::FromStr for CorrfacDivisor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "h_max" | "hmax" => Ok(CorrfacDivisor::HMax),
            "h_max_minus_1" | "hmax-1" => Ok(CorrfacDivisor::HMaxMinus1),
            _ => Err(Error::Invalid(format!("unknown divisor `{s}` (h_max or h_max_minus_1)"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct StudySpec {
    pub field: FieldSpec,
    pub lag_sets: Vec<LagSet>,
    pub estimators: Vec<EstimatorId>,
    pub contamination: Option<ContaminationSpec>,
    pub replications: usize,
    pub base_seed: u64,
    pub corrfac_divisor: CorrfacDivisor,
    /// Multipliers applied to `γ̂` in bias/rMSE studies.
    pub correction_factors: HashMap<(EstimatorId, Direction), f64>,
    pub estimator_config: EstimatorConfig,
    /// Largest tolerated share of failed replications per estimator/direction.
    pub max_failure_rate: f64,
}

/// `h_max = 7` along the axes and `5` along the diagonals.
pub fn reference_lag_sets() -> Vec<LagSet> {
    Direction::ALL
        .iter()
        .map(|&d| LagSet::new(d, if d.is_diagonal() { 5 } else { 7 }).expect("positive h_max"))
        .collect()
}

impl StudySpec {
    pub fn new(field: FieldSpec, lag_sets: Vec<LagSet>, estimators: Vec<EstimatorId>) -> Self {
        StudySpec {
            field,
            lag_sets,
            estimators,
            contamination: None,
            replications: 1000,
            base_seed: 1,
            corrfac_divisor: CorrfacDivisor::default(),
            correction_factors: HashMap::new(),
            estimator_config: EstimatorConfig::default(),
            max_failure_rate: 0.01,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications < 2 {
            return Err(Error::Domain(format!("need at least 2 replications, got {}", self.replications)));
        }
        if self.estimators.is_empty() || self.lag_sets.is_empty() {
            return Err(Error::Domain("study needs at least one estimator and one direction".into()));
        }
        if let Some(c) = &self.contamination {
            c.validate()?;
        }
        Ok(())
    }
}

/// Bias and rMSE of `γ̂` at one lag.
#[derive(Debug, Clone, PartialEq)]
pub struct CellStats {
    pub estimator: EstimatorId,
    pub direction: Direction,
    pub lag: usize,
    /// True semivariogram `γ(h)`.
    pub truth: f64,
    pub bias: f64,
    pub rmse: f64,
    pub se_bias: f64,
    pub se_rmse: f64,
    pub n_ok: usize,
    pub n_fail: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrectionFactor {
    pub estimator: EstimatorId,
    pub direction: Direction,
    pub c_opt: f64,
    /// Delta-method standard error of `c_opt`.
    pub se: f64,
    pub n_ok: usize,
    pub n_fail: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct StudyResult {
    pub cells: Vec<CellStats>,
}

impl StudyResult {
    pub fn cell(&self, estimator: EstimatorId, direction: Direction, lag: usize) -> Option<&CellStats> {
        self.cells.iter().find(|c| c.estimator == estimator && c.direction == direction && c.lag == lag)
    }
}

/// Estimators whose MCD raw/reweighted fits are shared, each group drawing
/// from its own stream.
fn fit_groups(ids: &[EstimatorId]) -> Vec<Vec<EstimatorId>> {
    let mut groups: Vec<Vec<EstimatorId>> = Vec::new();
    for &id in ids {
        if let Some(g) = groups.iter_mut().find(|g| id.reweight_partner() == Some(g[0])) {
            g.push(id);
        } else if !groups.iter().any(|g| g.contains(&id)) {
            groups.push(vec![id]);
        }
    }
    groups
}

type Estimates = Vec<Vec<Option<Vec<f64>>>>;

/// One replication: `γ̂` per direction and estimator, `None` on failure.
fn replicate<F>(spec: &StudySpec, sim: &FieldSimulator, r: u64, run: &F) -> Result<Estimates>
where
    F: Fn(&Grid, &LagSet, &[EstimatorId], &EstimatorConfig, &mut RngStream) -> Result<Vec<VariogramEstimate>>,
{
    let field = sim.simulate(&mut RngStream::new(spec.base_seed, r));
    let g = match &spec.contamination {
        Some(c) => contaminate(&field, c, &mut RngStream::new(spec.base_seed, r + STREAM_BLOCK))?.0,
        None => field,
    };
    let groups = fit_groups(&spec.estimators);
    let mut out = Vec::with_capacity(spec.lag_sets.len());
    for (d, lags) in spec.lag_sets.iter().enumerate() {
        let mut row: Vec<Option<Vec<f64>>> = vec![None; spec.estimators.len()];
        for (k, group) in groups.iter().enumerate() {
            let slot = (d * groups.len() + k) as u64;
            let mut rng = RngStream::new(spec.base_seed, r + STREAM_BLOCK * (2 + slot));
            if let Ok(estimates) = run(&g, lags, group, &spec.estimator_config, &mut rng) {
                for e in estimates {
                    let i = spec.estimators.iter().position(|&x| x == e.estimator).expect("requested");
                    let c = spec.correction_factors.get(&(e.estimator, lags.direction())).copied();
                    let e = match c {
                        Some(c) => e.with_correction(c),
                        None => e,
                    };
                    row[i] = Some(e.semivariogram());
                }
            }
        }
        out.push(row);
    }
    Ok(out)
}

fn run_replications<F>(spec: &StudySpec, run: &F) -> Result<Vec<Estimates>>
where
    F: Fn(&Grid, &LagSet, &[EstimatorId], &EstimatorConfig, &mut RngStream) -> Result<Vec<VariogramEstimate>> + Sync,
{
    spec.validate()?;
    let sim = FieldSimulator::new(spec.field.clone())?;
    // collected in replication order, so reductions are order independent
    let reps: Vec<Result<Estimates>> =
        (0..spec.replications as u64).into_par_iter().map(|r| replicate(spec, &sim, r, run)).collect();
    let reps = reps.into_iter().collect::<Result<Vec<_>>>()?;
    for (d, lags) in spec.lag_sets.iter().enumerate() {
        for (i, id) in spec.estimators.iter().enumerate() {
            let failed = reps.iter().filter(|rep| rep[d][i].is_none()).count();
            if failed as f64 > spec.max_failure_rate * spec.replications as f64 {
                return Err(Error::StudyAborted {
                    what: format!("{id} {}", lags.direction()),
                    failed,
                    total: spec.replications,
                });
            }
        }
    }
    Ok(reps)
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample standard deviation (divisor `n - 1`).
fn sd(x: &[f64]) -> f64 {
    let m = mean(x);
    (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() as f64 - 1.0)).sqrt()
}

fn collect(reps: &[Estimates], d: usize, i: usize) -> Vec<&Vec<f64>> {
    reps.iter().filter_map(|rep| rep[d][i].as_ref()).collect()
}

fn true_semivariogram(spec: &StudySpec, lags: &LagSet) -> Vec<f64> {
    lags.lags().iter().map(|&h| 0.5 * aniso_variogram(&spec.field.model, h)).collect()
}

/// Inverse of the replication- and lag-averaged ratio `γ̂/γ`, leaving out
/// the largest lag. Requires a clean scenario.
pub fn run_correction_factor_study(spec: &StudySpec) -> Result<Vec<CorrectionFactor>> {
    correction_factor_study_with(spec, &estimate_many)
}

fn correction_factor_study_with<F>(spec: &StudySpec, run: &F) -> Result<Vec<CorrectionFactor>>
where
    F: Fn(&Grid, &LagSet, &[EstimatorId], &EstimatorConfig, &mut RngStream) -> Result<Vec<VariogramEstimate>> + Sync,
{
    if spec.contamination.is_some() {
        return Err(Error::Invalid("correction factors are defined for clean fields only".into()));
    }
    if let Some(l) = spec.lag_sets.iter().find(|l| l.h_max() < 2) {
        return Err(Error::Domain(format!("{} needs h_max >= 2 to leave out the largest lag", l.direction())));
    }
    let reps = run_replications(spec, run)?;
    let mut out = Vec::new();
    for (d, lags) in spec.lag_sets.iter().enumerate() {
        let truth = true_semivariogram(spec, lags);
        let h = lags.h_max();
        let divisor = match spec.corrfac_divisor {
            CorrfacDivisor::HMax => h,
            CorrfacDivisor::HMaxMinus1 => h - 1,
        } as f64;
        for (i, &id) in spec.estimators.iter().enumerate() {
            let per_rep: Vec<f64> = collect(&reps, d, i)
                .into_iter()
                .map(|g| g[..h - 1].iter().zip(&truth).map(|(e, t)| e / t).sum::<f64>() / divisor)
                .collect();
            let m = mean(&per_rep);
            out.push(CorrectionFactor {
                estimator: id,
                direction: lags.direction(),
                c_opt: 1.0 / m,
                se: sd(&per_rep) / (per_rep.len() as f64).sqrt() / (m * m),
                n_ok: per_rep.len(),
                n_fail: spec.replications - per_rep.len(),
            });
        }
    }
    Ok(out)
}

/// Bias and rMSE of the (optionally corrected) semivariogram estimates.
pub fn run_bias_rmse_study(spec: &StudySpec) -> Result<StudyResult> {
    bias_rmse_study_with(spec, &estimate_many)
}

fn bias_rmse_study_with<F>(spec: &StudySpec, run: &F) -> Result<StudyResult>
where
    F: Fn(&Grid, &LagSet, &[EstimatorId], &EstimatorConfig, &mut RngStream) -> Result<Vec<VariogramEstimate>> + Sync,
{
    let reps = run_replications(spec, run)?;
    let mut cells = Vec::new();
    for (i, &id) in spec.estimators.iter().enumerate() {
        for (d, lags) in spec.lag_sets.iter().enumerate() {
            let truth = true_semivariogram(spec, lags);
            let ok = collect(&reps, d, i);
            let n = ok.len() as f64;
            for (l, &t) in truth.iter().enumerate() {
                let err: Vec<f64> = ok.iter().map(|g| g[l] - t).collect();
                let sq: Vec<f64> = err.iter().map(|e| e * e).collect();
                let bias = mean(&err);
                let mse = mean(&sq);
                let rmse = mse.sqrt();
                debug_assert!({
                    let var = err.iter().map(|e| (e - bias) * (e - bias)).sum::<f64>() / n;
                    (mse - bias * bias - var).abs() <= 1e-10 * (1.0 + mse)
                });
                cells.push(CellStats {
                    estimator: id,
                    direction: lags.direction(),
                    lag: l + 1,
                    truth: t,
                    bias,
                    rmse,
                    se_bias: sd(&err) / n.sqrt(),
                    se_rmse: if rmse > 0.0 { sd(&sq) / n.sqrt() / (2.0 * rmse) } else { 0.0 },
                    n_ok: ok.len(),
                    n_fail: spec.replications - ok.len(),
                });
            }
        }
    }
    Ok(StudyResult { cells })
}

pub fn write_bias_rmse_csv(result: &StudyResult, mut w: impl Write) -> Result<()> {
    writeln!(w, "estimator,direction,lag,bias,rmse,se_bias,se_rmse,n_ok,n_fail")?;
    for c in &result.cells {
        writeln!(
            w,
            "{},{},{},{:.16e},{:.16e},{:.16e},{:.16e},{},{}",
            c.estimator, c.direction, c.lag, c.bias, c.rmse, c.se_bias, c.se_rmse, c.n_ok, c.n_fail
        )?;
    }
    Ok(())
}

pub fn write_corrfac_csv(factors: &[CorrectionFactor], mut w: impl Write) -> Result<()> {
    writeln!(w, "estimator,direction,c_opt,se")?;
    for f in factors {
        writeln!(w, "{},{},{:.16e},{:.16e}", f.estimator, f.direction, f.c_opt, f.se)?;
    }
    Ok(())
}

/// Plain-text table of `|bias|` and rMSE, both multiplied by `scale`, for
/// the selected lags.
pub fn format_bias_rmse_table(result: &StudyResult, lags: &[usize], scale: f64) -> String {
    let mut s = String::new();
    let mut keys: Vec<(EstimatorId, Direction)> = Vec::new();
    for c in &result.cells {
        if !keys.contains(&(c.estimator, c.direction)) {
            keys.push((c.estimator, c.direction));
        }
    }
    let _ = write!(s, "{:<14} {:<5}", "estimator", "dir");
    for l in lags {
        let _ = write!(s, " {:>8} {:>8}", format!("|bias|{l}"), format!("rmse{l}"));
    }
    s.push('\n');
    for (e, d) in keys {
        let _ = write!(s, "{:<14} {:<5}", e.id(), d.id());
        for &l in lags {
            match result.cell(e, d, l) {
                Some(c) => {
                    let _ = write!(s, " {:>8.2} {:>8.2}", c.bias.abs() * scale, c.rmse * scale);
                }
                None => {
                    let _ = write!(s, " {:>8} {:>8}", "-", "-");
                }
            }
        }
        s.push('\n');
    }
    s
}
