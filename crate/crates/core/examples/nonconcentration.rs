//! Projective non-concentration tables and the fitted exponent.
//!
//! The middle-thirds Cantor measure should give an exponent near
//! `log 2 / log 3 ≈ 0.631`; Lebesgue measure on an interval gives 1.
//!
//! ```bash
//! cargo run --release --example nonconcentration
//! ```

use sumprodlab::lab::{synth_measure, Family, MeasureSpec};
use sumprodlab::measure::projective_nonconcentration;

fn main() -> sumprodlab::Result<()> {
    let m = 12;
    let rhos: Vec<f64> = (3..=9).map(|j| 2f64.powi(-j)).collect();
    let families = [
        ("cantor", MeasureSpec::new(1, m, Family::Cantor { ratio: 1.0 / 3.0, depth: 9 })),
        ("uniform", MeasureSpec::new(1, m, Family::Uniform)),
        ("plane-cantor", MeasureSpec::new(2, 9, Family::Cantor { ratio: 1.0 / 3.0, depth: 6 })),
    ];
    for (name, spec) in families {
        let mu = synth_measure(&spec)?;
        let rep = projective_nonconcentration(&mu, &rhos[..rhos.len() - 2 * (spec.n - 1)], 32)?;
        println!("{name}: kappa_hat {:.4}, eps_hat {:.4}", rep.kappa_hat, rep.eps_hat);
        for row in rep.csv_rows() {
            println!("  {row}");
        }
    }
    Ok(())
}
