use alloc::format;

use num_traits::Float;
use rand::Rng;

use crate::groupoid::{
    lattice_in_ball, point_dist, point_norm, ActionGroupoid, Arrow, GroupoidMap, LinearRep, Point,
};
use crate::lie::{GroupElement, GroupKind, LieError};
use crate::linalg::RMat;
use crate::rng::{gaussian, stream_rng};

use super::AveragingError;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct ExtractionSettings {
    /// Stop the inversion once `dist(phi(k, x), g)` is below this.
    pub solve_tolerance: f64,
    pub max_steps: usize,
    /// Lattice resolution of the base grid used for the invertibility check.
    pub grid_resolution: usize,
    /// Group elements tried at each grid point.
    pub grid_elements: usize,
    pub seed: u64,
}

impl Default for ExtractionSettings {
    fn default() -> Self {
        Self {
            solve_tolerance: 1e-13,
            max_steps: 200,
            grid_resolution: 3,
            grid_elements: 4,
            seed: 0,
        }
    }
}

/// The action `g . x = t(theta(g, x))`, where `theta` inverts the pairing
/// `p -> (phi(p), s(p))` of a groupoid homomorphism `phi`.
#[derive(Debug, Clone)]
pub struct ExtractedAction<M> {
    map: M,
    settings: ExtractionSettings,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AxiomDeviation {
    /// `max |1 . x - x|`.
    pub unit: f64,
    /// `max |g . (h . x) - (gh) . x|`.
    pub composition: f64,
    /// `max |g . x0 - x0|`.
    pub fixed_point: f64,
    pub samples: usize,
}

impl AxiomDeviation {
    pub fn within(&self, tol: f64) -> bool {
        self.unit <= tol && self.composition <= tol && self.fixed_point <= tol
    }
}

/// Two-sided comparison of extracted orbits with the spheres of the linear
/// model, on sampled points.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OrbitComparison {
    /// `max ||g . x| - |x||` over sampled `g`: extracted points lie on the sphere.
    pub radial: f64,
    /// Largest miss when asking the extracted action to reach sampled sphere points.
    pub coverage: f64,
    pub samples: usize,
}

impl OrbitComparison {
    pub fn hausdorff(&self) -> f64 {
        self.radial.max(self.coverage)
    }
}

/// Checks that `(phi, s)` inverts on a base grid and wraps `phi` as an
/// action.
pub fn extract_action<M: GroupoidMap>(
    phi: M,
    settings: ExtractionSettings,
) -> Result<ExtractedAction<M>, AveragingError> {
    let out = ExtractedAction { map: phi, settings };
    out.check_grid()?;
    Ok(out)
}

impl<M: GroupoidMap> ExtractedAction<M> {
    pub fn groupoid(&self) -> &ActionGroupoid {
        self.map.groupoid()
    }

    pub fn map(&self) -> &M {
        &self.map
    }

    /// The `k` with `phi(k, x) = g`.
    pub fn solve(&self, g: &GroupElement, x: &[f64]) -> Result<GroupElement, AveragingError> {
        self.solve_from(g, x, g.clone())
    }

    fn solve_from(
        &self,
        g: &GroupElement,
        x: &[f64],
        start: GroupElement,
    ) -> Result<GroupElement, AveragingError> {
        let group = self.groupoid().group();
        let x: Point = x.iter().copied().collect();
        let mut k = start;
        let mut last = f64::INFINITY;
        for _ in 0..self.settings.max_steps {
            let v = self.map.eval(&Arrow {
                g: k.clone(),
                x: x.clone(),
            })?;
            let r = group.dist(&v, g);
            if r <= self.settings.solve_tolerance {
                return Ok(k);
            }
            last = r;
            // If phi(k, x) = k e(k) then this is k <- g e(k)^-1, a contraction.
            k = group.mul3(g, &group.inv(&v), &k);
        }
        Err(AveragingError::NotInvertible(format!(
            "no arrow from {x:?} maps to the requested element (residual {last:e})"
        )))
    }

    /// `g . x`.
    pub fn act(&self, g: &GroupElement, x: &[f64]) -> Result<Point, AveragingError> {
        let k = self.solve(g, x)?;
        Ok(self.groupoid().action(&k, x))
    }

    fn check_grid(&self) -> Result<(), AveragingError> {
        let groupoid = self.groupoid();
        let group = groupoid.group();
        let mut rng = stream_rng(self.settings.seed, 0x6772_6964);
        let points = lattice_in_ball(
            groupoid.base_dim(),
            self.settings.grid_resolution,
            groupoid.radius(),
        );
        for x in &points {
            for _ in 0..self.settings.grid_elements {
                let g = group.random_element(&mut rng);
                let a = self.solve(&g, x)?;
                let shifted = group.mul(&g, &group.random_near_identity(&mut rng, 0.05));
                let b = self.solve_from(&g, x, shifted)?;
                let gap = group.dist(&a, &b);
                if gap > 1e3 * self.settings.solve_tolerance {
                    return Err(AveragingError::NotInvertible(format!(
                        "two arrows from {x:?} map to the same element (separation {gap:e})"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn axiom_deviation<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        samples: usize,
    ) -> Result<AxiomDeviation, AveragingError> {
        let groupoid = self.groupoid();
        let group = groupoid.group();
        let id = group.identity();
        let x0 = groupoid.fixed_point().clone();
        let mut d = AxiomDeviation {
            unit: 0.0,
            composition: 0.0,
            fixed_point: 0.0,
            samples,
        };
        for _ in 0..samples {
            let g = group.random_element(rng);
            let h = group.random_element(rng);
            let x = groupoid.sample_base(rng);
            d.unit = d.unit.max(point_dist(&self.act(&id, &x)?, &x));
            let hx = self.act(&h, &x)?;
            let lhs = self.act(&g, &hx)?;
            let rhs = self.act(&group.mul(&g, &h), &x)?;
            d.composition = d.composition.max(point_dist(&lhs, &rhs));
            d.fixed_point = d.fixed_point.max(point_dist(&self.act(&g, &x0)?, &x0));
        }
        Ok(d)
    }

    /// Samples `base_points` points `x`, and `per_point` group elements and
    /// sphere points for each. Needs SO(3) acting through its defining
    /// representation, possibly twisted; the linear model's orbit through
    /// `x` is the sphere of radius `|x|`.
    pub fn compare_with_linear_orbits(
        &self,
        base_points: usize,
        per_point: usize,
        seed: u64,
    ) -> Result<OrbitComparison, AveragingError> {
        let groupoid = self.groupoid();
        let group = groupoid.group();
        if group.kind != GroupKind::SpecialOrthogonal(3)
            || groupoid.spec().linear != LinearRep::Standard
        {
            return Err(AveragingError::Lie(LieError::UnsupportedGroup(
                "orbit comparison needs SO(3) acting on R^3".into(),
            )));
        }
        let mut rng = stream_rng(seed, 0x006f_7262_6974);
        let mut out = OrbitComparison {
            radial: 0.0,
            coverage: 0.0,
            samples: 0,
        };
        for _ in 0..base_points {
            let x = groupoid.sample_base(&mut rng);
            let radius = point_norm(&x);
            let u = groupoid.to_linear_chart(&x);
            for _ in 0..per_point {
                let g = group.random_element(&mut rng);
                let y = self.act(&g, &x)?;
                out.radial = out.radial.max(Float::abs(point_norm(&y) - radius));

                let dir: [f64; 3] = core::array::from_fn(|_| gaussian(&mut rng));
                let n = Float::sqrt(dir.iter().map(|v| v * v).sum::<f64>());
                let z: Point = dir.iter().map(|v| v * radius / n).collect();
                let k =
                    GroupElement::Orthogonal(rotation_between(&u, &groupoid.to_linear_chart(&z)));
                let target = self.map.eval(&Arrow { g: k, x: x.clone() })?;
                let reached = self.act(&target, &x)?;
                out.coverage = out.coverage.max(point_dist(&reached, &z));
                out.samples += 1;
            }
        }
        Ok(out)
    }
}

/// A rotation taking `u` to `v`; the vectors must have equal length.
fn rotation_between(u: &[f64], v: &[f64]) -> RMat {
    let nu = point_norm(u);
    if nu < 1e-300 {
        return RMat::identity(3);
    }
    let a: [f64; 3] = core::array::from_fn(|i| u[i] / nu);
    let b: [f64; 3] = core::array::from_fn(|i| v[i] / point_norm(v));
    let mut axis = [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ];
    let s = Float::sqrt(axis.iter().map(|c| c * c).sum::<f64>());
    let c = a.iter().zip(&b).map(|(p, q)| p * q).sum::<f64>();
    if s < 1e-12 {
        if c > 0.0 {
            return RMat::identity(3);
        }
        // Half turn about any axis orthogonal to a.
        let e = if Float::abs(a[0]) < 0.9 {
            [1.0, 0.0, 0.0]
        } else {
            [0.0, 1.0, 0.0]
        };
        axis = [
            a[1] * e[2] - a[2] * e[1],
            a[2] * e[0] - a[0] * e[2],
            a[0] * e[1] - a[1] * e[0],
        ];
    }
    let n = Float::sqrt(axis.iter().map(|c| c * c).sum::<f64>());
    let w = axis.map(|c| c / n);
    let angle = Float::atan2(s, c);
    let k = RMat::from_row_major(
        3,
        3,
        &[0.0, -w[2], w[1], w[2], 0.0, -w[0], -w[1], w[0], 0.0],
    );
    RMat::identity(3)
        .add(&k.scale(Float::sin(angle)))
        .add(&k.matmul(&k).scale(1.0 - Float::cos(angle)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groupoid::{ActionSpec, ProjectionMap, Twist};
    use crate::lie::CompactGroup;
    use alloc::vec::Vec;

    #[test]
    fn rotation_between_maps_u_to_v() {
        let cases: [([f64; 3], [f64; 3]); 3] = [
            ([0.3, 0.1, -0.2], [-0.1, 0.2, 0.3]),
            ([0.0, 0.0, 1.0], [0.0, 0.0, -1.0]),
            ([0.2, 0.0, 0.0], [0.2, 0.0, 0.0]),
        ];
        for (u, v) in cases {
            let v: Vec<f64> = v
                .iter()
                .map(|c| c * point_norm(&u) / point_norm(&v))
                .collect();
            let r = rotation_between(&u, &v);
            assert!(point_dist(&r.mat_vec(&u), &v) < 1e-14);
            assert!(r.matmul(&r.transpose()).max_abs_diff(&RMat::identity(3)) < 1e-14);
            assert!((r.determinant() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn projection_recovers_the_action() {
        let spec = ActionSpec {
            linear: LinearRep::Standard,
            twist: Some(Twist {
                plane: [0, 1],
                strength: 0.6,
                direction: vec![0.0, 0.0, 1.0],
            }),
        };
        let g = ActionGroupoid::new(CompactGroup::so(3), spec, 0.5).unwrap();
        let ex =
            extract_action(ProjectionMap::new(g.clone()), ExtractionSettings::default()).unwrap();
        let mut rng = stream_rng(3, 0);
        for _ in 0..10 {
            let h = g.group().random_element(&mut rng);
            let x = g.sample_base(&mut rng);
            assert!(point_dist(&ex.act(&h, &x).unwrap(), &g.action(&h, &x)) < 1e-10);
            assert!(point_dist(&ex.act(&h, g.fixed_point()).unwrap(), g.fixed_point()) < 1e-15);
        }
        let cmp = ex.compare_with_linear_orbits(3, 10, 4).unwrap();
        assert!(cmp.hausdorff() < 1e-12, "{cmp:?}");
        assert!(ex.axiom_deviation(&mut rng, 5).unwrap().within(1e-12));
    }
}
