//! Monte Carlo flattening integral for a symmetrized Cantor measure and a point mass.
//!
//! ```bash
//! cargo run --release --example flattening
//! ```

use sumprodlab::lab::{synth_measure, Family, MeasureSpec};
use sumprodlab::measure::{flattening_integral_with, FlatteningOptions, GridMeasure};

fn main() -> sumprodlab::Result<()> {
    let opts = FlatteningOptions { sample_count: 32, seed: 2024, frequency_check: false };
    println!("{:>4} {:>12} {:>12} {:>10} {:>10}", "m", "lhs", "rhs", "eps_hat", "eps_norm");
    for m in [6u32, 8, 10] {
        let grid_m = m + 4;
        let delta1 = 2f64.powi(-(m as i32));
        let nu = synth_measure(&MeasureSpec::new(1, grid_m, Family::Cantor { ratio: 1.0 / 3.0, depth: 8 }))?
            .symmetric_part();
        let r = flattening_integral_with(&nu, delta1, &opts)?;
        println!("{m:>4} {:>12.5e} {:>12.5e} {:>10.4} {:>10.4}", r.lhs, r.rhs, r.eps_hat, r.eps_hat_normalized);
    }
    let atom = GridMeasure::point_mass(1, 14, &[1.0])?;
    let r = flattening_integral_with(&atom, 2f64.powi(-10), &opts)?;
    println!("point mass: ratio {:.4} (single-atom baseline {:.4})", r.ratio, r.atom_ratio);
    Ok(())
}
