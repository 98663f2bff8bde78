//! Command-line front end. Exit codes: 0 success, 2 bad input, 3 numerical
//! failure.

use std::collections::HashMap;
use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::app::asc::{load_asc, save_asc, AscRaster, DEFAULT_NODATA};
use crate::app::{apply_quality_mask, standardize};
use crate::breakdown::{breakdown_point, BreakdownEstimator, BreakdownQuery, Scenario};
use crate::contamination::{contaminate, ContaminationSpec};
use crate::error::{Error, Result};
use crate::estimators::{estimate_many, EstimatorConfig, EstimatorId, ModConfig, VariogramEstimate};
use crate::grid::{Direction, Grid, LagSet};
use crate::mcd::ReweightScaling;
use crate::numerics::RngStream;
use crate::simfield::{simulate_field, FieldSpec};
use crate::study::{
    format_bias_rmse_table, run_bias_rmse_study, run_correction_factor_study, write_bias_rmse_csv,
    write_corrfac_csv, CorrfacDivisor, StudySpec,
};
use crate::variomodel::AnisoModel;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

const REFERENCE_MODEL: &str = "spherical:5:2:3pi/8:2";

#[derive(Parser, Debug)]
#[command(name = "robvario", version, about = "Robust directional variogram estimation on regular grids")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate a Gaussian field and write it as an ASCII grid.
    Simulate(SimulateArgs),
    /// Estimate directional variograms of an ASCII grid.
    Estimate(EstimateArgs),
    /// Replace cells of a grid with outliers.
    Contaminate(ContaminateArgs),
    /// Monte Carlo finite-sample correction factors.
    StudyCorrfac(CorrfacArgs),
    /// Monte Carlo bias and rMSE per estimator, direction and lag.
    StudyBiasrmse(BiasRmseArgs),
    /// Closed-form breakdown points on a single line.
    Breakdown(BreakdownArgs),
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// `family:range:sill[:theta:ratio]`, e.g. `spherical:5:2:3pi/8:2`.
    #[arg(long, default_value = REFERENCE_MODEL)]
    model: String,
    #[arg(long, default_value_t = 15)]
    nx: usize,
    #[arg(long, default_value_t = 15)]
    ny: usize,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    mean: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output raster; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct McdArgs {
    /// MCD subset fraction in [0.5, 1]; default `(n+p+1)/2`.
    #[arg(long)]
    alpha: Option<f64>,
    /// Covariance scaling after reweighting: retained-delta, full-sample, retained.
    #[arg(long, default_value = "retained-delta")]
    reweight_scaling: String,
    /// Apply the small-sample Qn factor d_N.
    #[arg(long)]
    qn_finite_correction: bool,
    /// Spacing between retained vectors for the modified estimators.
    #[arg(long, default_value_t = 1)]
    m_x: usize,
    #[arg(long, default_value_t = 1)]
    m_y: usize,
}

impl McdArgs {
    fn config(&self) -> Result<EstimatorConfig> {
        let mut cfg = EstimatorConfig::default();
        cfg.mcd.alpha = self.alpha;
        cfg.mcd.reweight_scaling = self.reweight_scaling.parse::<ReweightScaling>()?;
        cfg.qn.finite_sample_correction = self.qn_finite_correction;
        cfg.modcfg = ModConfig::new(self.m_x, self.m_y);
        Ok(cfg)
    }
}

#[derive(Args, Debug)]
struct EstimateArgs {
    /// Input ASCII grid.
    input: PathBuf,
    /// Quality raster of the same shape; cells whose code is not clear are masked.
    #[arg(long)]
    quality: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "0")]
    clear_codes: Vec<i64>,
    #[arg(long, default_value_t = 4)]
    hmax: usize,
    /// Largest lag on the diagonals; defaults to `hmax - 1`.
    #[arg(long)]
    hmax_diag: Option<usize>,
    #[arg(long, value_delimiter = ',', default_value = "ew,sn,swne,senw")]
    directions: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "matheron,genton,mcd.diff,mcd.diff.re,mcd.org,mcd.org.re")]
    estimators: Vec<String>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Divide by the consistency-scaled MAD before estimating.
    #[arg(long)]
    standardize: bool,
    #[command(flatten)]
    mcd: McdArgs,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ContaminateArgs {
    input: PathBuf,
    /// `kind=block|isolated,eps=..,mu0=..,sigma0=..[,mode=additive][,shape=rectangle]`.
    #[arg(long)]
    contam: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// CSV of replaced cells (`x,y`, zero-based, `y` northward).
    #[arg(long)]
    cells: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct StudyArgs {
    #[arg(long, default_value = REFERENCE_MODEL)]
    model: String,
    #[arg(long, default_value_t = 15)]
    nx: usize,
    #[arg(long, default_value_t = 15)]
    ny: usize,
    #[arg(long, default_value_t = 7)]
    hmax: usize,
    #[arg(long, default_value_t = 5)]
    hmax_diag: usize,
    #[arg(long, value_delimiter = ',', default_value = "ew,sn,swne,senw")]
    directions: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "matheron,genton,mcd.diff,mcd.diff.re,mcd.org,mcd.org.re")]
    estimators: Vec<String>,
    #[arg(long, default_value_t = 1000)]
    reps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    mcd: McdArgs,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl StudyArgs {
    fn spec(&self) -> Result<StudySpec> {
        let model: AnisoModel = self.model.parse()?;
        let mut lag_sets = Vec::new();
        for d in parse_list::<Direction>(&self.directions)? {
            lag_sets.push(LagSet::new(d, if d.is_diagonal() { self.hmax_diag } else { self.hmax })?);
        }
        let mut spec = StudySpec::new(FieldSpec::new(model, self.nx, self.ny), lag_sets, parse_list(&self.estimators)?);
        spec.replications = self.reps;
        spec.base_seed = self.seed;
        spec.estimator_config = self.mcd.config()?;
        Ok(spec)
    }
}

#[derive(Args, Debug)]
struct CorrfacArgs {
    #[command(flatten)]
    study: StudyArgs,
    /// Divisor of the per-replication ratio sum: h_max or h_max_minus_1.
    #[arg(long, default_value = "h_max_minus_1")]
    divisor: String,
}

#[derive(Args, Debug)]
struct BiasRmseArgs {
    #[command(flatten)]
    study: StudyArgs,
    #[arg(long)]
    contam: Option<String>,
    /// Correction factors as written by `study-corrfac`.
    #[arg(long)]
    corrfac_csv: Option<PathBuf>,
    /// Extra factor `estimator:direction=value`; overrides the CSV.
    #[arg(long = "correction")]
    corrections: Vec<String>,
    /// Also print a table of |bias| and rMSE on the 2γ scale times 10.
    #[arg(long)]
    table: bool,
    #[arg(long, value_delimiter = ',', default_value = "1,4,7")]
    table_lags: Vec<usize>,
}

#[derive(Args, Debug)]
struct BreakdownArgs {
    #[arg(long, value_delimiter = ',', default_value = "block,isolated")]
    scenario: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "mcd.org,mcd.diff,mcd.org.mod,mcd.diff.mod,genton")]
    estimators: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "50")]
    nx: Vec<u64>,
    #[arg(long, value_delimiter = ',', default_value = "4")]
    hmax: Vec<u64>,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    m: Vec<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_list<T: std::str::FromStr<Err = Error>>(items: &[String]) -> Result<Vec<T>> {
    items.iter().map(|s| s.trim().parse()).collect()
}

fn open_out<'a>(path: Option<&Path>, stdout: &'a mut dyn Write) -> Result<Box<dyn Write + 'a>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(stdout),
    })
}

fn write_grid(g: &Grid, path: Option<&Path>, stdout: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => save_asc(p, g),
        None => Ok(stdout.write_all(AscRaster::from_grid(g, DEFAULT_NODATA)?.to_text().as_bytes())?),
    }
}

fn simulate(a: &SimulateArgs, stdout: &mut dyn Write) -> Result<()> {
    let spec = FieldSpec::new(a.model.parse()?, a.nx, a.ny).with_mean(a.mean);
    let g = simulate_field(&spec, &mut RngStream::new(a.seed, 0))?;
    write_grid(&g, a.out.as_deref(), stdout)
}

pub fn write_estimates_csv(estimates: &[VariogramEstimate], mut w: impl Write) -> Result<()> {
    writeln!(w, "estimator,direction,lag,dx,dy,distance,gamma2,count")?;
    for e in estimates {
        for (i, (&(dx, dy), v)) in e.lags.lags().iter().zip(&e.values).enumerate() {
            let dist = ((dx * dx + dy * dy) as f64).sqrt();
            writeln!(
                w,
                "{},{},{},{},{},{:.16e},{:.16e},{}",
                e.estimator,
                e.direction.id(),
                i + 1,
                dx,
                dy,
                dist,
                v,
                e.counts[i]
            )?;
        }
    }
    Ok(())
}

fn estimate(a: &EstimateArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let mut g = load_asc(&a.input)?;
    if let Some(q) = &a.quality {
        g = apply_quality_mask(&g, &load_asc(q)?, &a.clear_codes)?;
    }
    if a.standardize {
        let (s, scale) = standardize(&g)?;
        writeln!(stderr, "standardized by MAD scale {scale:.16e}")?;
        g = s;
    }
    let cfg = a.mcd.config()?;
    let ids: Vec<EstimatorId> = parse_list(&a.estimators)?;
    let hmax_diag = a.hmax_diag.unwrap_or(a.hmax.saturating_sub(1));
    let mut all = Vec::new();
    for d in parse_list::<Direction>(&a.directions)? {
        let lags = LagSet::new(d, if d.is_diagonal() { hmax_diag } else { a.hmax })?;
        let stream = Direction::ALL.iter().position(|&x| x == d).expect("known direction") as u64;
        let mut rng = RngStream::new(a.seed, stream);
        all.extend(estimate_many(&g, &lags, &ids, &cfg, &mut rng)?);
    }
    let mut w = open_out(a.out.as_deref(), stdout)?;
    write_estimates_csv(&all, &mut w)?;
    Ok(w.flush()?)
}

fn contaminate_cmd(a: &ContaminateArgs, stdout: &mut dyn Write) -> Result<()> {
    let g = load_asc(&a.input)?;
    let spec: ContaminationSpec = a.contam.parse()?;
    let (out, cells) = contaminate(&g, &spec, &mut RngStream::new(a.seed, 0))?;
    if let Some(p) = &a.cells {
        let mut w = BufWriter::new(File::create(p)?);
        writeln!(w, "x,y")?;
        for &i in &cells {
            let (x, y) = out.coords(i);
            writeln!(w, "{x},{y}")?;
        }
        w.flush()?;
    }
    write_grid(&out, a.out.as_deref(), stdout)
}

fn study_corrfac(a: &CorrfacArgs, stdout: &mut dyn Write) -> Result<()> {
    let mut spec = a.study.spec()?;
    spec.corrfac_divisor = a.divisor.parse::<CorrfacDivisor>()?;
    let factors = run_correction_factor_study(&spec)?;
    let mut w = open_out(a.study.out.as_deref(), stdout)?;
    write_corrfac_csv(&factors, &mut w)?;
    Ok(w.flush()?)
}

/// Reads `estimator,direction,c_opt[,...]` rows with a header line.
pub fn read_corrfac_csv(text: &str) -> Result<HashMap<(EstimatorId, Direction), f64>> {
    let mut out = HashMap::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() < 3 {
            return Err(Error::Parse { line: i + 1, column: 1, msg: "expected estimator,direction,c_opt".into() });
        }
        let c: f64 = f[2]
            .trim()
            .parse()
            .map_err(|_| Error::Parse { line: i + 1, column: 3, msg: format!("bad factor `{}`", f[2]) })?;
        out.insert((f[0].trim().parse()?, f[1].trim().parse()?), c);
    }
    Ok(out)
}

fn parse_correction(s: &str) -> Result<((EstimatorId, Direction), f64)> {
    let bad = || Error::Invalid(format!("correction `{s}` is not estimator:direction=value"));
    let (key, value) = s.split_once('=').ok_or_else(bad)?;
    let (est, dir) = key.split_once(':').ok_or_else(bad)?;
    let c: f64 = value.trim().parse().map_err(|_| bad())?;
    Ok(((est.trim().parse()?, dir.trim().parse()?), c))
}

fn study_biasrmse(a: &BiasRmseArgs, stdout: &mut dyn Write) -> Result<()> {
    let mut spec = a.study.spec()?;
    spec.contamination = a.contam.as_deref().map(str::parse).transpose()?;
    if let Some(p) = &a.corrfac_csv {
        spec.correction_factors = read_corrfac_csv(&std::fs::read_to_string(p)?)?;
    }
    for c in &a.corrections {
        let (k, v) = parse_correction(c)?;
        spec.correction_factors.insert(k, v);
    }
    let result = run_bias_rmse_study(&spec)?;
    if a.table {
        stdout.write_all(format_bias_rmse_table(&result, &a.table_lags, 20.0).as_bytes())?;
        if a.study.out.is_none() {
            return Ok(());
        }
    }
    let mut w = open_out(a.study.out.as_deref(), stdout)?;
    write_bias_rmse_csv(&result, &mut w)?;
    Ok(w.flush()?)
}

fn breakdown_cmd(a: &BreakdownArgs, stdout: &mut dyn Write) -> Result<()> {
    let scenarios: Vec<Scenario> = parse_list(&a.scenario)?;
    let estimators: Vec<BreakdownEstimator> = parse_list(&a.estimators)?;
    let mut w = open_out(a.out.as_deref(), stdout)?;
    writeln!(w, "scenario,estimator,n_x,h_max,m,numerator,denominator,value")?;
    for &s in &scenarios {
        for &e in &estimators {
            for &n_x in &a.nx {
                for &h in &a.hmax {
                    for &m in &a.m {
                        let q = BreakdownQuery::new(s, e, n_x, h, m);
                        q.validate()?;
                        let prefix = format!("{},{},{n_x},{h},{m}", s.id(), e.id());
                        match breakdown_point(&q) {
                            Ok(r) => {
                                let v = *r.numer() as f64 / *r.denom() as f64;
                                writeln!(w, "{prefix},{},{},{v:.16e}", r.numer(), r.denom())?
                            }
                            // no closed form or too few vectors: reported, not fatal
                            Err(Error::NotUsable(_) | Error::Domain(_)) => writeln!(w, "{prefix},,,NA")?,
                            Err(err) => return Err(err),
                        }
                    }
                }
            }
        }
    }
    Ok(w.flush()?)
}

fn dispatch(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Simulate(a) => simulate(a, stdout),
        Command::Estimate(a) => estimate(a, stdout, stderr),
        Command::Contaminate(a) => contaminate_cmd(a, stdout),
        Command::StudyCorrfac(a) => study_corrfac(a, stdout),
        Command::StudyBiasrmse(a) => study_biasrmse(a, stdout),
        Command::Breakdown(a) => breakdown_cmd(a, stdout),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { stderr.write_all(text.as_bytes()) } else { stdout.write_all(text.as_bytes()) };
            return code;
        }
    };
    match dispatch(&cli, stdout, stderr) {
        Ok(()) => EXIT_OK,
        // a closed downstream pipe (`| head`) is not a failure
        Err(Error::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            if e.is_input_error() {
                EXIT_INPUT
            } else {
                EXIT_NUMERICAL
            }
        }
    }
}

pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run(args, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}
