//! Annulus suprema of the Fourier transform of multiplicative powers.
//!
//! ```bash
//! cargo run --release --example fourier_decay
//! ```

use sumprodlab::fourier::{decay_sup, plancherel_gap, DecayReport};
use sumprodlab::lab::{synth_measure, Family, MeasureSpec};
use sumprodlab::measure::GridMeasure;

fn main() -> sumprodlab::Result<()> {
    let delta_m = 8;
    let mu = synth_measure(&MeasureSpec::new(1, delta_m + 4, Family::Cantor { ratio: 1.0 / 3.0, depth: 8 }))?;
    println!("Plancherel gap of mu: {:.2e}", plancherel_gap(&mu)?);
    let delta = 2f64.powi(-(delta_m as i32));
    println!("{}", DecayReport::csv_header());
    for k in 1..=4 {
        println!("{}", decay_sup(&mu, k, delta, true)?.csv_row());
    }
    let atom = GridMeasure::point_mass(1, delta_m + 4, &[1.0])?;
    println!("point mass, k=3: sup {:.6}", decay_sup(&atom, 3, delta, true)?.sup);
    Ok(())
}
