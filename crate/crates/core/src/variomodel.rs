//! Parametric variogram families with geometric anisotropy.
//!
//! All functions return the variogram `2γ`, and the sill `β` is the sill of
//! `2γ`; the process variance is therefore `β / 2`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Spherical,
    /// `β (1 - exp(-3 d / R))`, practical range `R`.
    Exponential,
    /// `β (1 - exp(-3 d² / R²))`, practical range `R`.
    Gaussian,
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sph" | "spherical" => Ok(Family::Spherical),
            "exp" | "exponential" => Ok(Family::Exponential),
            "gau" | "gauss" | "gaussian" => Ok(Family::Gaussian),
            _ => Err(Error::Invalid(format!("unknown variogram family `{s}`"))),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Spherical => "spherical",
            Family::Exponential => "exponential",
            Family::Gaussian => "gaussian",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsoModel {
    pub family: Family,
    pub range: f64,
    pub sill: f64,
}

impl IsoModel {
    pub fn new(family: Family, range: f64, sill: f64) -> Result<Self> {
        if !(range > 0.0 && range.is_finite()) {
            return Err(Error::Domain(format!("range must be positive, got {range}")));
        }
        if !(sill > 0.0 && sill.is_finite()) {
            return Err(Error::Domain(format!("sill must be positive, got {sill}")));
        }
        Ok(IsoModel { family, range, sill })
    }

    /// `2γ₀(d)`.
    pub fn variogram(&self, d: f64) -> f64 {
        iso_variogram(self, d)
    }
}

/// Isotropic variogram `2γ₀(d)` at distance `d >= 0`.
pub fn iso_variogram(m: &IsoModel, d: f64) -> f64 {
    if d <= 0.0 {
        return 0.0;
    }
    let (r, b) = (m.range, m.sill);
    match m.family {
        Family::Spherical => {
            if d >= r {
                b
            } else {
                b * (1.5 * d / r - 0.5 * (d / r).powi(3))
            }
        }
        Family::Exponential => b * (1.0 - (-3.0 * d / r).exp()),
        Family::Gaussian => b * (1.0 - (-3.0 * (d / r).powi(2)).exp()),
    }
}

/// Isotropic model behind a rotation by `theta` and an axis rescaling `T = diag(1, b^{-1/2})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnisoModel {
    pub iso: IsoModel,
    pub theta: f64,
    pub ratio: f64,
}

impl AnisoModel {
    pub fn new(iso: IsoModel, theta: f64, ratio: f64) -> Result<Self> {
        if !(ratio > 0.0 && ratio.is_finite()) {
            return Err(Error::Domain(format!("anisotropy ratio must be positive, got {ratio}")));
        }
        if !theta.is_finite() {
            return Err(Error::Domain("rotation angle must be finite".into()));
        }
        Ok(AnisoModel { iso, theta, ratio })
    }

    pub fn isotropic(iso: IsoModel) -> Self {
        AnisoModel { iso, theta: 0.0, ratio: 1.0 }
    }

    /// Spherical, range 5, sill 2, rotated by 3π/8 with ratio 2: the
    /// simulation model of the reference study.
    pub fn reference() -> Self {
        AnisoModel {
            iso: IsoModel { family: Family::Spherical, range: 5.0, sill: 2.0 },
            theta: 3.0 * std::f64::consts::PI / 8.0,
            ratio: 2.0,
        }
    }

    /// `‖T R h‖`.
    pub fn transformed_norm(&self, h: (f64, f64)) -> f64 {
        let (s, c) = self.theta.sin_cos();
        let u = c * h.0 + s * h.1;
        let v = (-s * h.0 + c * h.1) / self.ratio.sqrt();
        (u * u + v * v).sqrt()
    }

    /// `2γ(h)`.
    pub fn variogram(&self, h: (f64, f64)) -> f64 {
        iso_variogram(&self.iso, self.transformed_norm(h))
    }

    /// `C(h) = β/2 - γ(h)`.
    pub fn covariance(&self, h: (f64, f64)) -> f64 {
        0.5 * self.iso.sill - 0.5 * self.variogram(h)
    }

    pub fn variance(&self) -> f64 {
        0.5 * self.iso.sill
    }
}

pub fn aniso_variogram(m: &AnisoModel, h: (i64, i64)) -> f64 {
    m.variogram((h.0 as f64, h.1 as f64))
}

pub fn model_covariance(m: &AnisoModel, h: (i64, i64)) -> f64 {
    m.covariance((h.0 as f64, h.1 as f64))
}

/// Parses `family:R:beta[:theta:b]` (theta in radians; `pi` fractions such as
/// `3pi/8` are accepted).
impl FromStr for AnisoModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        if parts.len() != 3 && parts.len() != 5 {
            return Err(Error::Invalid(format!(
                "model must look like family:R:beta[:theta:b], got `{s}`"
            )));
        }
        let family: Family = parts[0].parse()?;
        let range = parse_real(parts[1])?;
        let sill = parse_real(parts[2])?;
        let iso = IsoModel::new(family, range, sill)?;
        if parts.len() == 3 {
            return Ok(AnisoModel::isotropic(iso));
        }
        AnisoModel::new(iso, parse_angle(parts[3])?, parse_real(parts[4])?)
    }
}

impl fmt::Display for AnisoModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}:{}:{}", self.iso.family, self.iso.range, self.iso.sill, self.theta, self.ratio)
    }
}

fn parse_real(s: &str) -> Result<f64> {
    s.parse::<f64>().map_err(|_| Error::Invalid(format!("not a number: `{s}`")))
}

fn parse_angle(s: &str) -> Result<f64> {
    let lower = s.to_ascii_lowercase();
    let Some(pos) = lower.find("pi") else { return parse_real(s) };
    let coef = match lower[..pos].trim_end_matches('*') {
        "" => 1.0,
        "-" => -1.0,
        c => parse_real(c)?,
    };
    let rest = &lower[pos + 2..];
    let div = match rest.strip_prefix('/') {
        Some(d) => parse_real(d)?,
        None if rest.is_empty() => 1.0,
        None => return Err(Error::Invalid(format!("bad angle `{s}`"))),
    };
    Ok(coef * std::f64::consts::PI / div)
}
