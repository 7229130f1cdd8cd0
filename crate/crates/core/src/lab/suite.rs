//! Discrete inequality suite over random lattice instances.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::OracleConfig;
use crate::error::Result;
use crate::grid::{Coord, MAX_DIM};
use crate::lattice::{
    bsg_search, energy_by_enumeration, exact_energy, exact_sumset, plunnecke_check, ruzsa_triangle_check,
    LatticeSet, Sign,
};
use crate::rng::stream_rng;

/// Largest side of a BSG instance; the exhaustive search is exponential.
const BSG_SIZE: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckTally {
    pub check: &'static str,
    pub instances: usize,
    pub failures: usize,
}

impl CheckTally {
    pub fn pass(&self) -> bool {
        self.failures == 0
    }
}

pub(crate) fn random_lattice(rng: &mut ChaCha8Rng, n: usize, size: usize, spread: i64) -> Result<LatticeSet> {
    let pts: Vec<Coord> = (0..size)
        .map(|_| {
            let mut c = [0i64; MAX_DIM];
            for x in c.iter_mut().take(n) {
                *x = rng.gen_range(-spread..=spread);
            }
            c
        })
        .collect();
    LatticeSet::new(n, pts)
}

/// Every instance `i` draws from stream `(seed, i)`; odd instances are planar.
pub fn oracle_suite(cfg: &OracleConfig, seed: u64) -> Result<Vec<CheckTally>> {
    let names = ["energy-oracle", "energy-upper", "energy-lower", "ruzsa-triangle", "plunnecke-2-1", "bsg-certificate"];
    let mut fails = [0usize; 6];
    let max = cfg.max_size.max(1);
    for i in 0..cfg.instances {
        let mut rng = stream_rng(seed, i as u64);
        let n = 1 + i % 2;
        let mut draw = |cap: usize| {
            let size = rng.gen_range(1..=cap);
            random_lattice(&mut rng, n, size, cfg.spread)
        };
        let a = draw(max)?;
        let b = draw(max)?;
        let c = draw(max)?;
        let (sa, sb) = (a.len() as u128, b.len() as u128);

        let w = exact_energy(&a, &b)?;
        fails[0] += (w != energy_by_enumeration(&a, &b)?) as usize;
        // ω² ≤ (|A||B|)³
        fails[1] += (w * w > (sa * sb).pow(3)) as usize;
        let sum = exact_sumset(&a, &b, Sign::Plus)?.len() as u128;
        fails[2] += (w * sum < sa * sa * sb * sb) as usize;
        fails[3] += !ruzsa_triangle_check(&a, &b, &c)?.pass as usize;
        fails[4] += !plunnecke_check(&a, &b, 2, 1)?.pass as usize;

        let a = draw(BSG_SIZE)?;
        let b = draw(BSG_SIZE)?;
        let w = exact_energy(&a, &b)? as f64;
        let k = (((a.len() * b.len()) as f64).powf(1.5) / w).max(1.0);
        let cert = bsg_search(&a, &b, k)?;
        let bound = k.powi(3) * ((cert.a_prime.len() * cert.b_prime.len()) as f64).sqrt();
        fails[5] += (cert.a_prime.is_empty() || cert.sumset_size as f64 > bound * (1.0 + 1e-12)) as usize;
    }
    Ok(names
        .iter()
        .zip(fails)
        .map(|(&check, failures)| CheckTally { check, instances: cfg.instances, failures })
        .collect())
}
