use proptest::prelude::*;
use sumprodlab::grid::{covering_number, map_image, neighborhood, separated_subset, GridSet, LipschitzMapSpec};

const M: u32 = 8;

fn points(n: usize, max: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(0.0..1.0f64, n), 1..max)
}

fn set(n: usize, pts: &[Vec<f64>]) -> GridSet {
    GridSet::from_points(n, M, pts).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn covering_is_monotone(n in 1usize..=2, a in points(2, 60), b in points(2, 60), k in 1u32..=M) {
        let a: Vec<Vec<f64>> = a.into_iter().map(|p| p[..n].to_vec()).collect();
        let b: Vec<Vec<f64>> = b.into_iter().map(|p| p[..n].to_vec()).collect();
        let s = set(n, &a);
        let t = s.union(&set(n, &b)).unwrap();
        let rho = 2f64.powi(-(k as i32));
        prop_assert!(covering_number(&s, rho).unwrap() <= covering_number(&t, rho).unwrap());
    }

    #[test]
    fn doubling_the_scale_loses_at_most_4_to_the_n(n in 1usize..=2, a in points(2, 150), k in 2u32..=M) {
        let a: Vec<Vec<f64>> = a.into_iter().map(|p| p[..n].to_vec()).collect();
        let s = set(n, &a);
        let rho = 2f64.powi(-(k as i32));
        let fine = covering_number(&s, rho).unwrap() as f64;
        let coarse = covering_number(&s, 2.0 * rho).unwrap() as f64;
        prop_assert!(coarse >= fine * 4f64.powi(-(n as i32)));
        prop_assert!(coarse <= fine);
    }

    // Separated count, box count and neighborhood volume agree up to 6^n.
    #[test]
    fn three_counts_are_comparable(n in 1usize..=2, a in points(2, 200), k in 2u32..=5) {
        let a: Vec<Vec<f64>> = a.into_iter().map(|p| p[..n].to_vec()).collect();
        let s = set(n, &a);
        let rho = 2f64.powi(-(k as i32));
        let sep = separated_subset(&s, rho).unwrap().len() as f64;
        let cov = covering_number(&s, rho).unwrap() as f64;
        let vol = neighborhood(&s, rho).unwrap().volume() / rho.powi(n as i32);
        let three = 3f64.powi(n as i32);
        prop_assert!(sep <= three * cov && cov <= three * sep, "sep {} cov {}", sep, cov);
        let c = 6f64.powi(n as i32);
        for (x, y) in [(sep, cov), (sep, vol), (cov, vol)] {
            prop_assert!(x <= c * y && y <= c * x, "sep {} cov {} vol {}", sep, cov, vol);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn affine_images_obey_the_lipschitz_bound(
        n in 1usize..=2,
        a in points(2, 120),
        entries in prop::collection::vec(-3.0..3.0f64, 4),
        shift in prop::collection::vec(-1.0..1.0f64, 2),
    ) {
        let a: Vec<Vec<f64>> = a.into_iter().map(|p| p[..n].to_vec()).collect();
        let s = set(n, &a);
        let matrix: Vec<Vec<f64>> = (0..n).map(|r| entries[r * 2..r * 2 + n].to_vec()).collect();
        let f = LipschitzMapSpec::affine(matrix, shift[..n].to_vec()).unwrap();
        let image = map_image(&s, &f).unwrap();
        let k = f.lip().max(1.0);
        let bound = (4.0 * k).powi(n as i32) * s.len() as f64;
        prop_assert!(image.len() as f64 <= bound, "{} > {}", image.len(), bound);
    }
}
