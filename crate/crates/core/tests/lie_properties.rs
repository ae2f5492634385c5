use groupoid_lab_core::lie::{CompactGroup, GroupElement};
use groupoid_lab_core::rng::stream_rng;
use proptest::prelude::*;

fn groups() -> Vec<CompactGroup> {
    vec![
        CompactGroup::su(2),
        CompactGroup::su(3),
        CompactGroup::so(3),
        CompactGroup::so(4),
        CompactGroup::torus(2),
    ]
}

fn elements(g: &CompactGroup, seed: u64, n: usize) -> Vec<GroupElement> {
    let mut rng = stream_rng(seed, 0);
    (0..n).map(|_| g.random_element(&mut rng)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exp_inverts_log(seed in any::<u64>(), radius in 0.01f64..3.0) {
        for g in groups() {
            let mut rng = stream_rng(seed, 1);
            let x = g.random_near_identity(&mut rng, radius);
            // Only far elements may sit on the cut locus.
            let Ok(v) = g.log(&x) else {
                prop_assert!(radius > 1.0);
                continue;
            };
            prop_assert!(g.dist(&g.exp(&v), &x) < 1e-9);
            // exp then log returns the short vector.
            let w = g.log(&g.exp(&v)).unwrap();
            prop_assert!(g.norm(&w.add(&v.neg())) < 1e-8);
        }
    }

    #[test]
    fn distance_is_bi_invariant(seed in any::<u64>()) {
        for g in groups() {
            let e = elements(&g, seed, 4);
            let (x, y, a, b) = (&e[0], &e[1], &e[2], &e[3]);
            let moved = g.dist(&g.mul3(a, x, b), &g.mul3(a, y, b));
            prop_assert!((moved - g.dist(x, y)).abs() < 1e-9);
            prop_assert!((g.dist(&g.inv(x), &g.inv(y)) - g.dist(x, y)).abs() < 1e-9);
        }
    }

    #[test]
    fn distance_is_a_metric(seed in any::<u64>()) {
        for g in groups() {
            let e = elements(&g, seed, 3);
            let (x, y, z) = (&e[0], &e[1], &e[2]);
            prop_assert!(g.dist(x, x) < 1e-9);
            prop_assert!((g.dist(x, y) - g.dist(y, x)).abs() < 1e-9);
            prop_assert!(g.dist(x, z) <= g.dist(x, y) + g.dist(y, z) + 1e-9);
        }
    }

    #[test]
    fn elements_stay_on_the_group(seed in any::<u64>()) {
        for g in groups() {
            let e = elements(&g, seed, 2);
            prop_assert!(g.validate_element(&g.mul(&e[0], &g.inv(&e[1]))).is_ok());
            prop_assert!(g.dist_to_identity(&g.mul(&e[0], &g.inv(&e[0]))) < 1e-9);
        }
    }
}
