//! Property suites shared by `properties` and `acceptance`. Each returns the
//! minimal failing case as an error string.
#![allow(dead_code)]

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

use robvario::app::{load_asc, save_asc, standardize};
use robvario::estimators::{estimate_variogram, EstimatorConfig, EstimatorId};
use robvario::grid::{Direction, Grid, LagSet, VectorSample};
use robvario::mcd::{concentration_step, fast_mcd, reweight_mcd, subset_log_det, McdConfig};
use robvario::numerics::{chisq_cdf, chisq_quantile, RngStream};
use robvario::scale::{qn_raw, qn_raw_naive};

pub type PropResult = Result<(), String>;

fn runner(cases: u32) -> TestRunner {
    TestRunner::new(Config { cases, failure_persistence: None, ..Config::default() })
}

pub fn normal_grid(nx: usize, ny: usize, seed: u64) -> Grid {
    let mut rng = RngStream::new(seed, 0);
    Grid::from_fn(nx, ny, |_, _| rng.normal()).unwrap()
}

fn rows(seed: u64, n: usize, p: usize) -> Vec<Vec<f64>> {
    let mut rng = RngStream::new(seed, 5);
    (0..n).map(|_| (0..p).map(|_| rng.normal()).collect()).collect()
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn direction() -> impl Strategy<Value = Direction> {
    prop::sample::select(Direction::ALL.to_vec())
}

/// Adding a constant leaves every estimate unchanged; multiplying by `c`
/// multiplies it by `c²`.
pub fn translation_and_scale(cases: u32) -> PropResult {
    let s = (0u64..10_000, direction(), -100.0f64..100.0, 0.1f64..10.0);
    runner(cases)
        .run(&s, |(seed, dir, shift, c)| {
            let g = normal_grid(9, 9, seed);
            let lags = LagSet::new(dir, 2).unwrap();
            let cfg = EstimatorConfig::default();
            for id in EstimatorId::MAIN {
                let est = |h: &Grid| estimate_variogram(h, &lags, id, &cfg, &mut RngStream::new(seed, 1)).unwrap().values;
                let (base, t, sc) = (est(&g), est(&g.map_values(|v| v + shift)), est(&g.map_values(|v| c * v)));
                for l in 0..2 {
                    prop_assert!((t[l] - base[l]).abs() <= 1e-9 * (1.0 + shift.abs()).powi(2), "{} translation", id);
                    prop_assert!(close(sc[l], c * c * base[l], 1e-9), "{} scale", id);
                }
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

/// Estimating on the MAD-standardized grid and multiplying by `scale²`
/// reproduces the estimate on the original grid.
pub fn standardized_estimates(cases: u32) -> PropResult {
    let s = (0u64..10_000, direction(), 0.001f64..1000.0);
    runner(cases)
        .run(&s, |(seed, dir, c)| {
            let g = normal_grid(10, 10, seed).map_values(|v| c * v + 3.0);
            let (z, scale) = standardize(&g).unwrap();
            let lags = LagSet::new(dir, 2).unwrap();
            let cfg = EstimatorConfig::default();
            for id in EstimatorId::MAIN {
                let est = |h: &Grid| estimate_variogram(h, &lags, id, &cfg, &mut RngStream::new(seed, 2)).unwrap().values;
                let (raw, std) = (est(&g), est(&z));
                for l in 0..2 {
                    prop_assert!(close(raw[l], std[l] * scale * scale, 1e-8), "{}: {} vs {}", id, raw[l], std[l] * scale * scale);
                }
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

/// MCD location and scatter transform with `x -> A x + b`.
pub fn mcd_affine_equivariance(cases: u32) -> PropResult {
    let s = (0u64..10_000, prop::array::uniform4(-2.0f64..2.0), -10.0f64..10.0, -10.0f64..10.0);
    runner(cases)
        .run(&s, |(seed, a, b0, b1)| {
            let a = [[a[0] + 2.5, a[1]], [a[2], a[3] + 2.5]];
            prop_assume!((a[0][0] * a[1][1] - a[0][1] * a[1][0]).abs() > 0.5);
            let x = rows(seed, 30, 2);
            let y: Vec<Vec<f64>> = x
                .iter()
                .map(|r| vec![a[0][0] * r[0] + a[0][1] * r[1] + b0, a[1][0] * r[0] + a[1][1] * r[1] + b1])
                .collect();
            let (sx, sy) = (VectorSample::from_vecs(&x).unwrap(), VectorSample::from_vecs(&y).unwrap());
            let cfg = McdConfig { n_initial_subsets: 100, ..McdConfig::default() };
            let fx = fast_mcd(&sx, &cfg, &mut RngStream::new(seed, 1)).unwrap();
            let fy = fast_mcd(&sy, &cfg, &mut RngStream::new(seed, 1)).unwrap();
            prop_assert_eq!(&fx.support, &fy.support);
            let (rx, ry) = (reweight_mcd(&sx, &fx, &cfg).unwrap(), reweight_mcd(&sy, &fy, &cfg).unwrap());
            for (f, g) in [(&fx, &fy), (&rx, &ry)] {
                let b = [b0, b1];
                for i in 0..2 {
                    let mu = a[i][0] * f.mu[0] + a[i][1] * f.mu[1] + b[i];
                    prop_assert!((g.mu[i] - mu).abs() <= 1e-8 * (1.0 + mu.abs()));
                    for j in 0..2 {
                        let mut s = 0.0;
                        for k in 0..2 {
                            for l in 0..2 {
                                s += a[i][k] * f.sigma.get(k, l) * a[j][l];
                            }
                        }
                        prop_assert!((g.sigma.get(i, j) - s).abs() <= 1e-8 * (1.0 + s.abs()));
                    }
                }
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

/// A concentration step never increases the subset covariance determinant.
pub fn cstep_monotonicity(cases: u32) -> PropResult {
    let s = (0u64..100_000, 8usize..60, 1usize..5);
    runner(cases)
        .run(&s, |(seed, n, p)| {
            prop_assume!(n > 2 * p + 2);
            let data = VectorSample::from_vecs(&rows(seed, n, p)).unwrap();
            let k = (n + p + 1) / 2;
            let mut subset = RngStream::new(seed, 9).sample_indices(n, k);
            let mut det = subset_log_det(&data, &subset).unwrap();
            for _ in 0..8 {
                subset = concentration_step(&data, &subset).unwrap();
                let next = subset_log_det(&data, &subset).unwrap();
                prop_assert!(next <= det + 1e-10 * det.abs().max(1.0), "{} -> {}", det, next);
                det = next;
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

pub fn chisq_round_trip(cases: u32) -> PropResult {
    let s = (1e-6f64..(1.0 - 1e-6), 0.5f64..60.0);
    runner(cases)
        .run(&s, |(p, df)| {
            let q = chisq_quantile(p, df).unwrap();
            let back = chisq_cdf(q, df).unwrap();
            prop_assert!((back - p).abs() <= 1e-10, "p = {}, df = {}: {}", p, df, back);
            Ok(())
        })
        .map_err(|e| e.to_string())
}

/// `load_asc(save_asc(g)) == g` including the mask.
pub fn asc_round_trip(cases: u32) -> PropResult {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("g.asc");
    let cell = prop_oneof![Just(None), any::<f64>().prop_filter("finite, not nodata", |v| v.is_finite() && *v != -9999.0).prop_map(Some)];
    let s = (1usize..12, 1usize..12).prop_flat_map(move |(nx, ny)| (Just(nx), Just(ny), prop::collection::vec(cell.clone(), nx * ny)));
    runner(cases)
        .run(&s, |(nx, ny, cells)| {
            let values = cells.iter().map(|c| c.unwrap_or(0.0)).collect();
            let mask = cells.iter().map(Option::is_none).collect();
            let g = Grid::with_mask(nx, ny, values, mask).unwrap();
            save_asc(&path, &g).map_err(|e| TestCaseError::fail(e.to_string()))?;
            let back = load_asc(&path).map_err(|e| TestCaseError::fail(e.to_string()))?;
            prop_assert_eq!(back, g);
            Ok(())
        })
        .map_err(|e| e.to_string())
}

/// Qn is invariant under sign flips and shifts, and the selection path agrees
/// with full enumeration.
pub fn qn_invariance(cases: u32) -> PropResult {
    let s = (prop::collection::vec(-1e3f64..1e3, 2..300), -1e3f64..1e3);
    runner(cases)
        .run(&s, |(x, c)| {
            let q = qn_raw(&x).unwrap();
            prop_assert_eq!(q, qn_raw_naive(&x).unwrap());
            let neg: Vec<f64> = x.iter().map(|v| -v).collect();
            prop_assert_eq!(qn_raw(&neg).unwrap(), q);
            let shifted: Vec<f64> = x.iter().map(|v| v + c).collect();
            prop_assert!((qn_raw(&shifted).unwrap() - q).abs() <= 1e-9 * (1.0 + c.abs()));
            Ok(())
        })
        .map_err(|e| e.to_string())
}

pub const SUITES: [(&str, fn(u32) -> PropResult); 7] = [
    ("translation and scale", translation_and_scale),
    ("standardized estimates", standardized_estimates),
    ("MCD affine equivariance", mcd_affine_equivariance),
    ("C-step monotonicity", cstep_monotonicity),
    ("chi-square round trip", chisq_round_trip),
    ("ASC round trip", asc_round_trip),
    ("Qn invariance", qn_invariance),
];

pub fn fixture_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data")
}
