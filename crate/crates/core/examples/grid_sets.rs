//! Box-counting numbers, neighborhoods and Lipschitz images of a discretized set.
//!
//! ```bash
//! cargo run --release --example grid_sets
//! ```

use sumprodlab::grid::{covering_number, map_image, neighborhood, GridSet, LipschitzMapSpec};

fn main() -> sumprodlab::Result<()> {
    let m = 10;
    let unit = GridSet::half_open_box(2, m, &[0.5, 0.5], &[1.0, 1.0])?;
    println!("cells of [1/2,1)^2 at m={m}: {}", unit.len());
    for j in 2..=6 {
        let rho = 2f64.powi(-j);
        println!("  N_rho at rho=2^-{j}: {}", covering_number(&unit, rho)?);
    }

    let diag: Vec<[f64; 2]> = (0..512).map(|i| [0.5 + i as f64 / 1024.0; 2]).collect();
    let line = GridSet::from_points(2, m, &diag)?;
    let thick = neighborhood(&line, 0.01)?;
    println!("diagonal segment: {} cells, 0.01-neighborhood volume {:.5}", line.len(), thick.volume());

    let shear = LipschitzMapSpec::affine(vec![vec![1.0, 0.5], vec![0.0, 1.0]], vec![0.0, 0.0])?;
    let img = map_image(&unit, &shear)?;
    println!(
        "shear image: {} cells, N_1/16 {} vs {} before (Lipschitz {:.3})",
        img.len(),
        covering_number(&img, 1.0 / 16.0)?,
        covering_number(&unit, 1.0 / 16.0)?,
        shear.lip()
    );
    Ok(())
}
