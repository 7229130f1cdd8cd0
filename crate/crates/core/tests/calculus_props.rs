use proptest::prelude::*;
use sumprodlab::calculus::{additive_energy_grid, fiber_bound, ring_growth, sumset};
use sumprodlab::grid::{Coord, GridSet};
use sumprodlab::lattice::{exact_energy, LatticeSet, Sign};

fn coords(n: usize, lo: i64, hi: i64, max: usize) -> impl Strategy<Value = Vec<Coord>> {
    prop::collection::vec(prop::collection::vec(lo..hi, n), 1..max).prop_map(|pts| {
        pts.iter()
            .map(|p| {
                let mut c = [0i64; 4];
                c[..p.len()].copy_from_slice(p);
                c
            })
            .collect()
    })
}

fn scaled(n: usize, m: u32, pts: &[Coord], s: i64) -> GridSet {
    GridSet::from_coords(n, m, pts.iter().map(|p| [p[0] * s, p[1] * s, p[2] * s, p[3] * s]).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn sumset_dominates_projection_times_fiber(n in 1usize..=2, pts in coords(2, 0, 256, 120)) {
        let x = GridSet::from_coords(n, 8, pts.iter().map(|p| { let mut c = *p; c[n..].fill(0); c }).collect()).unwrap();
        for j in 0..n {
            for k in 1..=8 {
                let fb = fiber_bound(&x, j, 2f64.powi(-k)).unwrap();
                prop_assert!(
                    fb.n_sum as f64 * 12f64.powi(n as i32) >= (fb.n_proj * fb.max_fiber) as f64,
                    "j {} k {} {} {} {}", j, k, fb.n_sum, fb.n_proj, fb.max_fiber
                );
            }
        }
    }

    // Cauchy-Schwarz: the pair count includes every exact coincidence a+b = a'+b'.
    #[test]
    fn pair_count_energy_controls_doubling(n in 1usize..=2, a in coords(2, 0, 64, 40), b in coords(2, 0, 64, 40)) {
        let clip = |v: &Vec<Coord>| GridSet::from_coords(n, 6, v.iter().map(|p| { let mut c = *p; c[n..].fill(0); c }).collect()).unwrap();
        let (a, b) = (clip(&a), clip(&b));
        let w = additive_energy_grid(&a, &b).unwrap().pair_count.unwrap() as f64;
        let sum = sumset(&a, &b, Sign::Plus).unwrap().len() as f64;
        let (na, nb) = (a.len() as f64, b.len() as f64);
        prop_assert!(w * sum >= na * na * nb * nb);
    }

    // Spacing 8δ exceeds the (1+2√2)δ matching radius, so only exact coincidences count.
    #[test]
    fn isolated_lattice_sets_match_the_exact_energy(n in 1usize..=2, a in coords(2, 0, 12, 10), b in coords(2, 0, 12, 10)) {
        let la = LatticeSet::new(n, a.clone()).unwrap();
        let lb = LatticeSet::new(n, b.clone()).unwrap();
        let ga = scaled(n, 10, la.points(), 8);
        let gb = scaled(n, 10, lb.points(), 8);
        let e = additive_energy_grid(&ga, &gb).unwrap();
        prop_assert_eq!(e.pair_count, Some(exact_energy(&la, &lb).unwrap() as u64));
    }

    #[test]
    fn ring_growth_exponents_are_monotone(pts in prop::collection::vec(32i64..=64, 2..6)) {
        let a = GridSet::from_coords(1, 6, pts.iter().map(|&v| [v, 0, 0, 0]).collect()).unwrap();
        prop_assume!(a.len() >= 2);
        let r = ring_growth(&a, 3).unwrap();
        prop_assert!(r.k > 1.0);
        for w in r.c_s.windows(2) {
            prop_assert!(w[1] >= w[0], "{:?}", r.c_s);
        }
    }
}

#[test]
fn isolated_three_term_progression() {
    let ap = GridSet::from_coords(1, 10, vec![[0, 0, 0, 0], [40, 0, 0, 0], [80, 0, 0, 0]]).unwrap();
    let e = additive_energy_grid(&ap, &ap).unwrap();
    assert_eq!(e.pair_count, Some(19));
    assert_eq!(exact_energy(&LatticeSet::from_ints(&[0, 1, 2]), &LatticeSet::from_ints(&[0, 1, 2])).unwrap(), 19);
}
