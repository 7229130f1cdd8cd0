//! Sumsets, product sets and growth of discretized sets.
//!
//! ```bash
//! cargo run --release --example set_calculus
//! ```

use sumprodlab::calculus::{additive_energy_grid, doubling_constant, growth_statistic, ring_growth};
use sumprodlab::lab::{synth_measure, Family, MeasureSpec};

fn main() -> sumprodlab::Result<()> {
    let m = 9;
    let cantor = synth_measure(&MeasureSpec::new(1, m, Family::Cantor { ratio: 1.0 / 3.0, depth: 6 }))?.support();
    let interval = synth_measure(&MeasureSpec::new(1, m, Family::Uniform))?.support();

    for (name, x) in [("cantor", &cantor), ("interval", &interval)] {
        let e = additive_energy_grid(x, x)?;
        println!(
            "{name:>8}: N={} doubling={:.3} energy l2={:.4e} pairs={:?}",
            x.len(),
            doubling_constant(x)?,
            e.l2,
            e.pair_count
        );
    }

    let g = growth_statistic(&cantor, &cantor, 16, 7)?;
    println!("growth of the Cantor set: ratio {:.3}, best a = {:?}", g.ratio, g.witness_a);

    let rg = ring_growth(&cantor, 2)?;
    println!("ring growth K = {:.3}, <A>_s ratios {:?}", rg.k, rg.ratios);
    Ok(())
}
