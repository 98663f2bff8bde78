//! Writes the synthetic 60x60 scene used by the workflow tests: a smooth
//! reflectance-like field with two bright cloud blocks, and a quality raster
//! coding clear cells 0, cloud 4 and the one-cell cloud margin 2.
//!
//! Usage: `cargo run --example cloud_fixture -- [out_dir]`

use std::path::PathBuf;

use robvario::app::save_asc;
use robvario::grid::Grid;
use robvario::numerics::RngStream;
use robvario::simfield::{simulate_field, FieldSpec};

const N: usize = 60;
// (x0, y0, width, height)
const CLOUDS: [(usize, usize, usize, usize); 2] = [(8, 36, 10, 9), (38, 10, 8, 11)];

fn main() -> robvario::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "crates/core/tests/data".into()));
    let model = "spherical:12:2:pi/4:1.5".parse()?;
    let field = simulate_field(&FieldSpec::new(model, N, N), &mut RngStream::new(20_24, 0))?;
    let mut rng = RngStream::new(20_24, 1);

    let mut scene = field.map_values(|v| 0.12 + 0.01 * v);
    let mut quality = Grid::new(N, N, vec![0.0; N * N])?;
    for &(x0, y0, w, h) in &CLOUDS {
        for y in y0.saturating_sub(1)..(y0 + h + 1).min(N) {
            for x in x0.saturating_sub(1)..(x0 + w + 1).min(N) {
                let inside = (x0..x0 + w).contains(&x) && (y0..y0 + h).contains(&y);
                let i = scene.index(x, y);
                if inside {
                    scene.values_mut()[i] = 0.42 + 0.03 * rng.normal();
                    quality.values_mut()[i] = 4.0;
                } else if quality.values()[i] == 0.0 {
                    quality.values_mut()[i] = 2.0;
                }
            }
        }
    }
    std::fs::create_dir_all(&dir)?;
    save_asc(dir.join("cloud_scene.asc"), &scene)?;
    save_asc(dir.join("cloud_quality.asc"), &quality)?;
    println!("wrote {}", dir.display());
    Ok(())
}
