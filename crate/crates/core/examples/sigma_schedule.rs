//! L^{2r} exponents of the transform and the exact exponent schedule.
//!
//! ```bash
//! cargo run --release --example sigma_schedule
//! ```

use num_rational::Ratio;
use sumprodlab::fourier::{schedule_exponents, sigma_decrement_experiment, sigma_table, ScheduleInput};
use sumprodlab::lab::{synth_measure, Family, MeasureSpec};

fn main() -> sumprodlab::Result<()> {
    let delta_m = 7;
    let delta = 2f64.powi(-delta_m);
    let mu = synth_measure(&MeasureSpec::new(1, delta_m as u32 + 4, Family::Cantor { ratio: 1.0 / 3.0, depth: 8 }))?;
    print!("{}", sigma_table(&mu, &[1, 2], &[1, 2, 4], delta)?.csv());
    let d = sigma_decrement_experiment(&mu, 1, 1, delta)?;
    println!(
        "sigma_(k,2r) = {:.4} -> sigma_(2k,r') = {:.4} with r' = {}: decrement {:.4}",
        d.sigma_before, d.sigma_after, d.r_prime, d.decrement
    );

    let s = schedule_exponents(&ScheduleInput {
        kappa0: Ratio::new(2, 5),
        n: 1,
        r: 1,
        eps_measured: Ratio::new(1, 10),
        eps2: Ratio::new(1, 10),
        k: 1,
        chain_len: 4,
    })?;
    println!("kappa1 = {}, eps = {}, eps1 = {}, eps3 = {}", s.kappa1, s.eps, s.eps1, s.eps3);
    println!("r chain: {:?}", s.r_chain);
    Ok(())
}
