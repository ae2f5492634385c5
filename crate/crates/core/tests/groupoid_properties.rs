use groupoid_lab_core::groupoid::{
    identity_restriction_check, ActionGroupoid, ActionSpec, Arrow, GroupoidMap, LinearRep,
    PerturbedMap, Twist,
};
use groupoid_lab_core::lie::{haar_nodes, CompactGroup};
use groupoid_lab_core::rng::stream_rng;
use proptest::prelude::*;

fn groupoids() -> Vec<ActionGroupoid> {
    let twist = Twist {
        plane: [0, 1],
        strength: 0.6,
        direction: vec![0.0, 0.0, 1.0],
    };
    vec![
        ActionGroupoid::new(
            CompactGroup::su(2),
            ActionSpec::linear(LinearRep::Adjoint),
            0.5,
        )
        .unwrap(),
        ActionGroupoid::new(
            CompactGroup::so(3),
            ActionSpec {
                linear: LinearRep::Standard,
                twist: Some(twist),
            },
            0.5,
        )
        .unwrap(),
        ActionGroupoid::new(
            CompactGroup::torus(2),
            ActionSpec::linear(LinearRep::TorusCharges(vec![vec![1, 0], vec![1, 1]])),
            0.8,
        )
        .unwrap(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn action_groupoids_satisfy_the_axioms(seed in any::<u64>()) {
        for g in groupoids() {
            let rep = g.axiom_deviation(&mut stream_rng(seed, 0), 20);
            prop_assert!(rep.holds(), "{rep:?}");
        }
    }

    #[test]
    fn composition_respects_source_and_target(seed in any::<u64>()) {
        for g in groupoids() {
            let mut rng = stream_rng(seed, 1);
            let x = g.sample_base(&mut rng);
            let q = Arrow { g: g.group().random_element(&mut rng), x: x.clone() };
            let p = Arrow { g: g.group().random_element(&mut rng), x: g.target(&q) };
            let pq = g.compose(&p, &q).unwrap();
            prop_assert_eq!(g.source(&pq), g.source(&q));
            let (t1, t2) = (g.target(&pq), g.target(&p));
            prop_assert!(t1.iter().zip(&t2).all(|(a, b)| (a - b).abs() < 1e-9));
            let round = g.compose(&g.inverse(&q), &q).unwrap();
            prop_assert!(g.group().dist_to_identity(&round.g) < 1e-9);
            // Target fibers end where they are asked to.
            let h = g.group().random_element(&mut rng);
            let f = g.fiber_arrow(&h, &x);
            prop_assert!(g.target(&f).iter().zip(&x).all(|(a, b)| (a - b).abs() < 1e-9));
        }
    }

    #[test]
    fn perturbations_keep_the_fixed_point_fiber(seed in any::<u64>(), amplitude in 0.0f64..0.2) {
        for g in groupoids() {
            let rule = haar_nodes(g.group(), 4, seed).unwrap();
            let phi = PerturbedMap::seeded(g, amplitude, seed);
            prop_assert!(phi.restricts_to_identity());
            prop_assert!(identity_restriction_check(&phi, &rule).unwrap().passed());
        }
    }
}
