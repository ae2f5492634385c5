use groupoid_lab_core::lie::CompactGroup;
use groupoid_lab_core::linalg::{CMat, RMat, C64};
use groupoid_lab_core::momentum::{
    action_integral, random_symplectic, symplectic_spectrum, weyl_project, ActionIntegralProblem,
    ActionSettings, CoadjointElement, FrequencyTuple, QuadraticHamiltonian, QuarticWell,
};
use groupoid_lab_core::planar::{convex_hull, coverage_2d};
use groupoid_lab_core::rng::stream_rng;
use proptest::prelude::*;
use rand::Rng;

fn hermitian(n: usize, seed: u64) -> CMat {
    let mut rng = stream_rng(seed, 0);
    let a = CMat::from_fn(n, n, |_, _| {
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    let h = a.add(&a.adjoint());
    let shift = h.trace() / C64::new(n as f64, 0.0);
    h.sub(&CMat::identity(n).scale(shift))
}

fn antisymmetric(n: usize, seed: u64) -> RMat {
    let mut rng = stream_rng(seed, 0);
    let a = RMat::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    a.sub(&a.transpose())
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn weyl_projection_is_conjugation_invariant(seed in any::<u64>()) {
        let su3 = CompactGroup::su(3);
        let h = hermitian(3, seed);
        let u = su3.random_element(&mut stream_rng(seed, 1));
        let u = u.as_unitary().unwrap();
        let conj = u.matmul(&h).matmul(&u.adjoint());
        let a = weyl_project(&su3, &CoadjointElement::Hermitian(h)).unwrap();
        let b = weyl_project(&su3, &CoadjointElement::Hermitian(conj)).unwrap();
        prop_assert!(close(&a, &b, 1e-9) && a[0] >= a[1]);

        let so4 = CompactGroup::so(4);
        let x = antisymmetric(4, seed);
        let r = so4.random_element(&mut stream_rng(seed, 2));
        let r = r.as_orthogonal().unwrap();
        let a = weyl_project(&so4, &CoadjointElement::Antisymmetric(x.clone())).unwrap();
        let b = weyl_project(&so4, &CoadjointElement::Antisymmetric(r.matmul(&x).matmul(&r.transpose()))).unwrap();
        prop_assert!(close(&a, &b, 1e-9) && a[0] >= a[1].abs());
    }

    #[test]
    fn symplectic_spectrum_is_congruence_invariant(seed in any::<u64>(), k in 1usize..4) {
        let mut rng = stream_rng(seed, 0);
        let freq: Vec<f64> = (0..k).map(|_| rng.gen_range(0.2..3.0)).collect();
        let d = QuadraticHamiltonian::diagonal(&FrequencyTuple::sorted(freq.clone()).unwrap());
        let m = random_symplectic(k, 0.5, &mut rng);
        let spec = symplectic_spectrum(&d.congruent(&m).unwrap());
        let mut expect = freq;
        expect.sort_by(f64::total_cmp);
        let mut got = spec.values().to_vec();
        got.sort_by(f64::total_cmp);
        prop_assert!(close(&got, &expect, 1e-7), "{got:?} vs {expect:?}");
    }

    #[test]
    fn extra_samples_never_widen_coverage_gaps(seed in any::<u64>(), r in 0.05f64..0.2) {
        let mut rng = stream_rng(seed, 0);
        let pts: Vec<[f64; 2]> = (0..400).map(|_| [rng.gen::<f64>(), rng.gen::<f64>()]).collect();
        let hull = convex_hull(&pts);
        let (few, more) = (&pts[..200], &pts[..]);
        let a = coverage_2d(&hull, few, r);
        let b = coverage_2d(&hull, more, r);
        prop_assert_eq!(a.grid_points, b.grid_points);
        prop_assert!(b.max_gap <= a.max_gap + 1e-15);
        prop_assert!(!a.passed || b.passed);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn quartic_action_grows_with_energy(e in 0.05f64..2.0, step in 0.01f64..0.5) {
        let prob = ActionIntegralProblem { hamiltonian: QuarticWell, center: [0.0, 0.0], energy_range: (0.0, f64::INFINITY) };
        let s = ActionSettings::default();
        let lo = action_integral(&prob, e, &s).unwrap();
        let hi = action_integral(&prob, e + step, &s).unwrap();
        prop_assert!(hi.value > lo.value);
        prop_assert!(lo.period > 0.0);
    }
}
