//! Measures on the complex plane: products, rotations and Fourier decay.
//!
//! ```bash
//! cargo run --release --example complex_plane
//! ```

use num_complex::Complex64;
use sumprodlab::complex::{
    complex_decay_sup, complex_mult_convolve, complex_mult_convolve_with, rotational_nonconcentration,
    ComplexGridMeasure, ComplexMultMode,
};
use sumprodlab::lab::{synth_complex, Family, MeasureSpec};
use sumprodlab::measure::total_variation;

fn main() -> sumprodlab::Result<()> {
    let m = 7;
    let mu = synth_complex(&MeasureSpec::new(2, m, Family::ComplexCantor { ratio: 1.0 / 3.0, depth: 4 }))?;
    let i = ComplexGridMeasure::point_mass(m, Complex64::new(0.0, 1.0))?;
    let turned = complex_mult_convolve(&mu, &i)?;
    println!("i * mu: {} cells, mass {:.12}", turned.measure().len(), turned.measure().mass());

    let exact = complex_mult_convolve(&mu, &mu)?;
    let polar = complex_mult_convolve_with(&mu, &mu, ComplexMultMode::LogPolar { oversample: 4.0 })?;
    println!("mu*mu log-polar TV gap: {:.4}", total_variation(exact.measure(), polar.measure())?);

    let rhos: Vec<f64> = (2..=5).map(|j| 2f64.powi(-j)).collect();
    let rot = rotational_nonconcentration(&mu, &rhos, 32)?;
    println!("rotational kappa_hat {:.3}", rot.kappa_hat);

    let delta = 2f64.powi(-(m as i32 - 2));
    for k in 1..=3 {
        let r = complex_decay_sup(&mu, k, delta)?;
        println!("k={k}: sup {:.4} at {:?}", r.sup, r.argmax);
    }
    Ok(())
}
