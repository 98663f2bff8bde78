//! ESRI ASCII grid rasters.
//!
//! The first data row in the file is the northernmost one; [`Grid`] stores
//! the southernmost row first, so rows are reversed on the way in and out.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::Grid;

pub const DEFAULT_NODATA: f64 = -9999.0;

#[derive(Debug, Clone, PartialEq)]
pub struct AscRaster {
    pub ncols: usize,
    pub nrows: usize,
    pub xllcorner: f64,
    pub yllcorner: f64,
    pub cellsize: f64,
    pub nodata_value: Option<f64>,
    /// File order: northernmost row first.
    pub cells: Vec<f64>,
}

const KEYS: [&str; 6] = ["ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "nodata_value"];

fn parse_num(tok: &str, line: usize, column: usize) -> Result<f64> {
    tok.parse::<f64>().map_err(|_| Error::Parse { line, column, msg: format!("not a number: `{tok}`") })
}

fn parse_count(key: &str, v: f64) -> Result<usize> {
    if v >= 1.0 && v.fract() == 0.0 && v < u32::MAX as f64 {
        Ok(v as usize)
    } else {
        Err(Error::MalformedHeader(format!("{key} must be a positive integer, got {v}")))
    }
}

impl AscRaster {
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()).peekable();
        let mut header = [None; 6];
        for (slot, key) in KEYS.iter().enumerate() {
            let Some(&(i, line)) = lines.peek() else {
                if slot == 5 {
                    break;
                }
                return Err(Error::MalformedHeader(format!("missing `{key}`")));
            };
            let mut parts = line.split_whitespace();
            let name = parts.next().unwrap_or_default();
            if !name.eq_ignore_ascii_case(key) {
                // NODATA_value is optional
                if slot == 5 && parse_num(name, i + 1, 1).is_ok() {
                    break;
                }
                return Err(Error::MalformedHeader(format!("line {}: expected `{key}`, found `{name}`", i + 1)));
            }
            let value = parts
                .next()
                .ok_or_else(|| Error::MalformedHeader(format!("line {}: `{key}` has no value", i + 1)))?;
            if parts.next().is_some() {
                return Err(Error::MalformedHeader(format!("line {}: trailing text after `{key}`", i + 1)));
            }
            let col = line.find(value).unwrap_or(0) + 1;
            header[slot] = Some(parse_num(value, i + 1, col)?);
            lines.next();
        }
        let ncols = parse_count("ncols", header[0].expect("parsed"))?;
        let nrows = parse_count("nrows", header[1].expect("parsed"))?;
        let cellsize = header[4].expect("parsed");
        if !(cellsize > 0.0) {
            return Err(Error::MalformedHeader(format!("cellsize must be positive, got {cellsize}")));
        }
        let mut cells = Vec::with_capacity(ncols * nrows);
        for (i, line) in lines {
            let mut offset = 0;
            for tok in line.split_whitespace() {
                let col = line[offset..].find(tok).map_or(0, |p| p + offset);
                offset = col + tok.len();
                cells.push(parse_num(tok, i + 1, col + 1)?);
            }
        }
        if cells.len() != ncols * nrows {
            return Err(Error::CellCountMismatch { expected: ncols * nrows, got: cells.len() });
        }
        Ok(AscRaster {
            ncols,
            nrows,
            xllcorner: header[2].expect("parsed"),
            yllcorner: header[3].expect("parsed"),
            cellsize,
            nodata_value: header[5],
            cells,
        })
    }

    /// Serializes with shortest round-trip float formatting.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "ncols {}", self.ncols);
        let _ = writeln!(s, "nrows {}", self.nrows);
        let _ = writeln!(s, "xllcorner {:?}", self.xllcorner);
        let _ = writeln!(s, "yllcorner {:?}", self.yllcorner);
        let _ = writeln!(s, "cellsize {:?}", self.cellsize);
        if let Some(nd) = self.nodata_value {
            let _ = writeln!(s, "NODATA_value {nd:?}");
        }
        for row in self.cells.chunks(self.ncols) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
        s
    }

    /// Grid with `y` increasing northward and nodata cells masked.
    pub fn to_grid(&self) -> Result<Grid> {
        let (nx, ny) = (self.ncols, self.nrows);
        let mut values = Vec::with_capacity(nx * ny);
        let mut mask = Vec::with_capacity(nx * ny);
        for row in self.cells.chunks(nx).rev() {
            for &v in row {
                let missing = self.nodata_value == Some(v) || v.is_nan();
                values.push(if missing { 0.0 } else { v });
                mask.push(missing);
            }
        }
        Grid::with_mask(nx, ny, values, mask)
    }

    /// Raster of `g` with a unit-cell header at the origin; masked cells are
    /// written as `nodata`.
    pub fn from_grid(g: &Grid, nodata: f64) -> Result<Self> {
        let observed = g.observed_values();
        if observed.contains(&nodata) {
            return Err(Error::Invalid(format!("an observed cell equals the nodata value {nodata}")));
        }
        let mut cells = Vec::with_capacity(g.len());
        for y in (0..g.ny()).rev() {
            for x in 0..g.nx() {
                cells.push(g.get(x, y).unwrap_or(nodata));
            }
        }
        Ok(AscRaster {
            ncols: g.nx(),
            nrows: g.ny(),
            xllcorner: 0.0,
            yllcorner: 0.0,
            cellsize: 1.0,
            nodata_value: Some(nodata),
            cells,
        })
    }
}

pub fn load_asc(path: impl AsRef<Path>) -> Result<Grid> {
    AscRaster::parse(&std::fs::read_to_string(path)?)?.to_grid()
}

pub fn save_asc(path: impl AsRef<Path>, g: &Grid) -> Result<()> {
    std::fs::write(path, AscRaster::from_grid(g, DEFAULT_NODATA)?.to_text())?;
    Ok(())
}
