//! Exact additive energy and the discrete inequalities on small integer sets.
//!
//! ```bash
//! cargo run --release --example discrete_oracles
//! ```

use sumprodlab::lab::{oracle_suite, OracleConfig};
use sumprodlab::lattice::{bsg_search, energy_by_enumeration, exact_energy, plunnecke_check, ruzsa_triangle_check, LatticeSet};

fn main() -> sumprodlab::Result<()> {
    let a = LatticeSet::interval(0, 9);
    let evens = LatticeSet::from_ints(&(0..10).map(|k| 2 * k).collect::<Vec<_>>());
    let sidon = LatticeSet::from_ints(&[0, 1, 3, 7, 12, 20]);

    for (name, s) in [("interval", &a), ("evens", &evens), ("sidon", &sidon)] {
        let e = exact_energy(s, s)?;
        assert_eq!(e, energy_by_enumeration(s, s)?);
        println!("E({name}) = {e}");
    }

    let p = plunnecke_check(&a, &a, 2, 1)?;
    println!("|2A-A| = {} <= K^3|A| = {} : {}", p.lhs, p.rhs, p.pass);
    let r = ruzsa_triangle_check(&a, &evens, &sidon)?;
    println!("|B||A-C| = {} <= |A-B||B-C| = {} : {}", r.lhs, r.rhs, r.pass);

    let mut mixed: Vec<i64> = (0..6).collect();
    mixed.extend([40, 57, 91]);
    let m = LatticeSet::from_ints(&mixed);
    let cert = bsg_search(&m, &m, 1.5)?;
    println!(
        "BSG: A' = {:?} with |A'+B'| = {} (doubling {:.3})",
        cert.a_prime.iter().map(|c| c[0]).collect::<Vec<_>>(),
        cert.sumset_size,
        cert.doubling
    );

    for t in oracle_suite(&OracleConfig { instances: 40, max_size: 24, spread: 30 }, 1)? {
        println!("{:>16}: {} failures in {}", t.check, t.failures, t.instances);
    }
    Ok(())
}
