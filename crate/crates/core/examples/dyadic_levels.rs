//! Dyadic level sets of a measure and the pointwise sandwich constants.
//!
//! ```bash
//! cargo run --release --example dyadic_levels
//! ```

use sumprodlab::lab::{synth_measure, Family, MeasureSpec};
use sumprodlab::measure::{dyadic_decompose, sandwich_constants};

fn main() -> sumprodlab::Result<()> {
    let m = 9;
    let mu = synth_measure(&MeasureSpec::new(2, m, Family::Random { kappa: 1.2, seed: 11, depth: None }))?;
    for step in [1.0, 4.0] {
        let delta = step * mu.delta();
        let lv = dyadic_decompose(&mu, delta)?;
        let c = sandwich_constants(&mu, &lv)?;
        println!("delta = {delta:.5}: level bound {}, max overlap {}", lv.level_bound, lv.max_overlap);
        for l in &lv.levels {
            println!("  level {:>2}: {:>5} centers, {:>6} cells", l.index, l.center_count, l.cell_count);
        }
        println!("  sandwich constants: lower {:.3}, upper {:.3}", c.lower, c.upper);
    }
    Ok(())
}
