//! Comparisons against values computed independently of the library.

use std::f64::consts::PI;

use approx::assert_relative_eq;

use groupoid_lab_core::affine::{certify, corpus, Certification, ConvexitySettings};
use groupoid_lab_core::momentum::{
    action_integral, cylinder_period, ActionIntegralProblem, ActionSettings, CotangentTorus,
    CylinderSettings, OrbitPath, Oscillator, QuarticWell,
};

/// `int_0^1 sqrt(1 - u^4) du = Gamma(1/4)^2 / (6 sqrt(2 pi))`.
const QUARTIC_SHAPE: f64 = 0.874_019_184_764_131_2;

#[test]
fn quartic_well_encloses_its_closed_form_area() {
    // The level p^2 + q^4 = 2E bounds 4 sqrt(2E) (2E)^(1/4) times the shape constant.
    let prob = ActionIntegralProblem {
        hamiltonian: QuarticWell,
        center: [0.0, 0.0],
        energy_range: (0.0, f64::INFINITY),
    };
    for e in [0.1f64, 1.0, 3.0] {
        let area = 4.0 * (2.0 * e).sqrt() * (2.0 * e).powf(0.25) * QUARTIC_SHAPE;
        let v = action_integral(&prob, e, &ActionSettings::default()).unwrap();
        assert_relative_eq!(v.value, area, max_relative = 1e-6);
    }
}

#[test]
fn oscillator_action_and_period() {
    let prob = ActionIntegralProblem {
        hamiltonian: Oscillator,
        center: [0.0, 0.0],
        energy_range: (0.0, f64::INFINITY),
    };
    for e in [0.1, 0.5, 1.0] {
        let v = action_integral(&prob, e, &ActionSettings::default()).unwrap();
        assert_relative_eq!(v.value, 2.0 * PI * e, epsilon = 1e-6);
        assert_relative_eq!(v.period, 2.0 * PI, epsilon = 1e-6);
    }
}

#[test]
fn cylinder_period_equals_change_of_action() {
    for wobble in [0.0, 0.4] {
        let path = OrbitPath {
            a0: 0.3,
            a1: 1.1,
            wobble,
        };
        let c = cylinder_period(&path, &CotangentTorus, &CylinderSettings::default()).unwrap();
        assert!((c.value - 2.0 * PI * 0.8).abs() < 1e-8, "{c:?}");
        assert!((c.endpoint_difference() - c.value).abs() < 1e-8);
    }
}

#[test]
fn every_counterexample_carries_a_checkable_witness() {
    let settings = ConvexitySettings::default();
    for x in corpus::negative() {
        match certify(&x, &settings).unwrap() {
            Certification::Accepted(_) => panic!("{} accepted", x.name),
            Certification::Rejected(r) => assert!(r.verify(&x), "{}: {r:?}", x.name),
        }
    }
    for x in corpus::positive() {
        assert!(certify(&x, &settings).unwrap().accepted(), "{}", x.name);
    }
}
