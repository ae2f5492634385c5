use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_traits::Float;

use super::MomentumError;
use crate::quadrature::gauss_legendre_interval;

/// A symplectic manifold in coordinates, with a primitive `alpha` of `omega`.
pub trait SymplecticModel {
    fn dim(&self) -> usize;
    fn omega(&self, x: &[f64], u: &[f64], v: &[f64]) -> f64;
    fn alpha(&self, x: &[f64], u: &[f64]) -> f64;
}

/// A one-parameter family of closed curves `C(s, .)`, `s, t in [0, 1]`,
/// given on the universal cover: `C(s, 1) = C(s, 0) + cycle_shift()`.
pub trait CylinderFamily {
    fn point(&self, s: f64, t: f64) -> Vec<f64>;

    fn cycle_shift(&self) -> Vec<f64>;

    /// `(dC/ds, dC/dt)` by central differences unless overridden.
    fn tangents(&self, s: f64, t: f64) -> (Vec<f64>, Vec<f64>) {
        let h = 1e-5;
        let diff = |a: Vec<f64>, b: Vec<f64>, w: f64| {
            a.iter()
                .zip(&b)
                .map(|(x, y)| (x - y) / w)
                .collect::<Vec<f64>>()
        };
        let (s0, s1) = ((s - h).max(0.0), (s + h).min(1.0));
        let ds = diff(self.point(s1, t), self.point(s0, t), s1 - s0);
        let dt = diff(self.point(s, t + h), self.point(s, t - h), 2.0 * h);
        (ds, dt)
    }
}

/// `T^* T^1` with coordinates `(theta, a)`, `omega = da ^ dtheta` and
/// `alpha = a dtheta`, so that the torus orbit at height `a` has action
/// `2 pi a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CotangentTorus;

impl SymplecticModel for CotangentTorus {
    fn dim(&self) -> usize {
        2
    }
    fn omega(&self, _x: &[f64], u: &[f64], v: &[f64]) -> f64 {
        u[1] * v[0] - u[0] * v[1]
    }
    fn alpha(&self, x: &[f64], u: &[f64]) -> f64 {
        x[1] * u[0]
    }
}

/// Orbits of `T^* T^1` from height `a0` to `a1`, deformed in between by
/// `wobble` so the cylinder is not a product.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitPath {
    pub a0: f64,
    pub a1: f64,
    pub wobble: f64,
}

impl CylinderFamily for OrbitPath {
    fn point(&self, s: f64, t: f64) -> Vec<f64> {
        let bump = self.wobble * s * (1.0 - s);
        let theta = 2.0 * PI * t + bump * Float::sin(2.0 * PI * t);
        let a = self.a0 + (self.a1 - self.a0) * s + bump * Float::cos(2.0 * PI * t);
        alloc::vec![theta, a]
    }
    fn cycle_shift(&self) -> Vec<f64> {
        alloc::vec![2.0 * PI, 0.0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct CylinderSettings {
    /// Gauss-Legendre nodes across the family.
    pub s_nodes: usize,
    /// Trapezoid nodes around each cycle.
    pub t_nodes: usize,
}

impl Default for CylinderSettings {
    fn default() -> Self {
        Self {
            s_nodes: 24,
            t_nodes: 96,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CylinderIntegral {
    /// `int_C omega`.
    pub value: f64,
    /// `oint alpha` over the first and last cycles.
    pub endpoint_actions: (f64, f64),
    /// Change of `value` against a half-resolution mesh.
    pub error_estimate: f64,
}

impl CylinderIntegral {
    pub fn endpoint_difference(&self) -> f64 {
        self.endpoint_actions.1 - self.endpoint_actions.0
    }
}

fn surface<F: CylinderFamily + ?Sized, M: SymplecticModel + ?Sized>(
    family: &F,
    model: &M,
    ns: usize,
    nt: usize,
) -> Result<f64, MomentumError> {
    let (sn, sw) = gauss_legendre_interval(ns, 0.0, 1.0);
    let mut total = 0.0;
    for (s, w) in sn.iter().zip(&sw) {
        let mut ring = 0.0;
        for j in 0..nt {
            let t = j as f64 / nt as f64;
            let x = family.point(*s, t);
            let (ds, dt) = family.tangents(*s, t);
            let v = model.omega(&x, &ds, &dt);
            if !v.is_finite() {
                return Err(MomentumError::SurfaceMeshFailure(format!(
                    "non-finite integrand at s = {s}, t = {t}"
                )));
            }
            ring += v;
        }
        total += w * ring / nt as f64;
    }
    Ok(total)
}

fn cycle_action<F: CylinderFamily + ?Sized, M: SymplecticModel + ?Sized>(
    family: &F,
    model: &M,
    s: f64,
    nt: usize,
) -> f64 {
    (0..nt)
        .map(|j| {
            let t = j as f64 / nt as f64;
            model.alpha(&family.point(s, t), &family.tangents(s, t).1)
        })
        .sum::<f64>()
        / nt as f64
}

/// `int_C omega` over the cylinder swept by `family`, with the endpoint
/// actions `oint alpha` for comparison.
pub fn cylinder_period<F: CylinderFamily + ?Sized, M: SymplecticModel + ?Sized>(
    family: &F,
    model: &M,
    settings: &CylinderSettings,
) -> Result<CylinderIntegral, MomentumError> {
    if settings.s_nodes < 2 || settings.t_nodes < 4 {
        return Err(MomentumError::SurfaceMeshFailure(
            "mesh is too coarse".into(),
        ));
    }
    let shift = family.cycle_shift();
    for i in 0..=8 {
        let s = i as f64 / 8.0;
        let a = family.point(s, 0.0);
        let b = family.point(s, 1.0);
        if a.len() != model.dim() || b.len() != a.len() || shift.len() != a.len() {
            return Err(MomentumError::SurfaceMeshFailure(
                "family and model dimensions differ".into(),
            ));
        }
        let gap = a
            .iter()
            .zip(&b)
            .zip(&shift)
            .map(|((x, y), d)| Float::abs(y - x - d))
            .fold(0.0, f64::max);
        if !(gap <= 1e-9) {
            return Err(MomentumError::SurfaceMeshFailure(format!(
                "cycle at s = {s} does not close (gap {gap:e})"
            )));
        }
    }
    let fine = surface(family, model, settings.s_nodes, settings.t_nodes)?;
    let coarse = surface(
        family,
        model,
        settings.s_nodes.div_ceil(2).max(2),
        settings.t_nodes / 2,
    )?;
    let endpoint_actions = (
        cycle_action(family, model, 0.0, settings.t_nodes),
        cycle_action(family, model, 1.0, settings.t_nodes),
    );
    Ok(CylinderIntegral {
        value: fine,
        endpoint_actions,
        error_estimate: Float::abs(fine - coarse),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Reversed(OrbitPath);

    impl CylinderFamily for Reversed {
        fn point(&self, s: f64, t: f64) -> Vec<f64> {
            self.0.point(1.0 - s, t)
        }
        fn cycle_shift(&self) -> Vec<f64> {
            self.0.cycle_shift()
        }
    }

    #[test]
    fn constant_family_has_no_area() {
        let f = OrbitPath {
            a0: 0.4,
            a1: 0.4,
            wobble: 0.0,
        };
        let c = cylinder_period(&f, &CotangentTorus, &CylinderSettings::default()).unwrap();
        assert!(c.value.abs() < 1e-12);
    }

    #[test]
    fn reversing_the_path_negates() {
        let f = OrbitPath {
            a0: 0.2,
            a1: 0.7,
            wobble: 0.3,
        };
        let a = cylinder_period(&f, &CotangentTorus, &CylinderSettings::default()).unwrap();
        let b =
            cylinder_period(&Reversed(f), &CotangentTorus, &CylinderSettings::default()).unwrap();
        assert!((a.value + b.value).abs() < 1e-9);
    }

    #[test]
    fn open_cycles_are_refused() {
        struct Open;
        impl CylinderFamily for Open {
            fn point(&self, s: f64, t: f64) -> Vec<f64> {
                alloc::vec![t, s]
            }
            fn cycle_shift(&self) -> Vec<f64> {
                alloc::vec![2.0 * PI, 0.0]
            }
        }
        assert!(matches!(
            cylinder_period(&Open, &CotangentTorus, &CylinderSettings::default()),
            Err(MomentumError::SurfaceMeshFailure(_))
        ));
    }
}
