//! Multiplicative convolution by exact pair binning and by the log-domain FFT.
//!
//! ```bash
//! cargo run --release --example mult_convolution
//! ```

use sumprodlab::lab::{synth_measure, Family, MeasureSpec};
use sumprodlab::measure::{multiplicative_convolve_with, total_variation, MultMode};

fn main() -> sumprodlab::Result<()> {
    let m = 10;
    let mu = synth_measure(&MeasureSpec::new(1, m, Family::Cantor { ratio: 1.0 / 3.0, depth: 8 }))?;
    let exact = multiplicative_convolve_with(&mu, &mu, MultMode::Pairwise)?;
    println!("mu*mu: {} cells, mass {:.12}", exact.len(), exact.mass());
    for shift in [2, 6, m + 2] {
        let fast = multiplicative_convolve_with(&mu, &mu, MultMode::LogFft { oversample: 1 << shift })?;
        println!(
            "log-domain, oversample 2^{shift:<2}: TV gap {:.3e} (bound 4*delta*diam = {:.3e})",
            total_variation(&exact, &fast)?,
            4.0 * mu.delta() * exact.diameter()
        );
    }
    Ok(())
}
