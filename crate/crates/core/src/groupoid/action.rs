use alloc::format;
use alloc::vec::Vec;

use num_traits::Float;
use rand::Rng;

use super::{Arrow, GroupoidError, Point};
use crate::lie::{quaternion, CompactGroup, GroupElement, GroupKind, HaarQuadrature};
use crate::linalg::RMat;
use crate::rng::ball_point;

/// Composition tolerance on `s(p) = t(q)`.
pub const COMPOSE_TOLERANCE: f64 = 1e-10;

/// Orbits must stay inside this multiple of the base radius.
pub const ORBIT_CONTAINMENT_FACTOR: f64 = 1.1;

/// Linear representation on the base.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum LinearRep {
    /// Base is a point.
    Trivial,
    /// Adjoint action on the Lie algebra in orthonormal coordinates.
    Adjoint,
    /// Defining representation (`C^n` as `R^{2n}` for SU(n)).
    Standard,
    /// Torus acting on `R^{2m}`: plane `j` turns by `sum_i charges[j][i] theta_i`.
    TorusCharges(Vec<Vec<i32>>),
    /// Block-diagonal action of a product group, one block per factor.
    Blocks(Vec<LinearRep>),
}

/// Sphere-preserving twist `F(x) = R_{ab}(strength * <direction, x>) x`,
/// a rotation in the `(e_a, e_b)` plane by an angle depending on `x`.
/// The twisted action `F rho(g) F^-1` is nonlinear but has the same
/// orbits as `rho` on every invariant sphere.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Twist {
    pub plane: [usize; 2],
    pub strength: f64,
    pub direction: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ActionSpec {
    pub linear: LinearRep,
    #[cfg_attr(feature = "serde", serde(default))]
    pub twist: Option<Twist>,
}

impl ActionSpec {
    pub fn linear(rep: LinearRep) -> Self {
        Self {
            linear: rep,
            twist: None,
        }
    }
}

/// The action groupoid `G x| B` over the ball of radius `radius` around
/// the fixed point 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionGroupoid {
    group: CompactGroup,
    spec: ActionSpec,
    base_dim: usize,
    radius: f64,
    fixed_point: Point,
}

impl ActionGroupoid {
    pub fn new(group: CompactGroup, spec: ActionSpec, radius: f64) -> Result<Self, GroupoidError> {
        group.validate()?;
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(GroupoidError::InvalidSpec(format!(
                "base radius must be positive, got {radius}"
            )));
        }
        let base_dim = rep_dim(&group, &spec.linear)?;
        if let Some(t) = &spec.twist {
            if t.plane[0] >= base_dim || t.plane[1] >= base_dim || t.plane[0] == t.plane[1] {
                return Err(GroupoidError::InvalidSpec(
                    "twist plane out of range".into(),
                ));
            }
            if t.direction.len() != base_dim {
                return Err(GroupoidError::InvalidSpec(
                    "twist direction has the wrong length".into(),
                ));
            }
            let n = Float::sqrt(t.direction.iter().map(|v| v * v).sum::<f64>());
            if Float::abs(t.strength) * n * radius * ORBIT_CONTAINMENT_FACTOR >= 0.5 {
                return Err(GroupoidError::InvalidSpec(
                    "twist too strong to invert on the ball".into(),
                ));
            }
        }
        Ok(Self {
            group,
            spec,
            base_dim,
            radius,
            fixed_point: core::iter::repeat_n(0.0, base_dim).collect(),
        })
    }

    pub fn group(&self) -> &CompactGroup {
        &self.group
    }

    pub fn spec(&self) -> &ActionSpec {
        &self.spec
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn fixed_point(&self) -> &Point {
        &self.fixed_point
    }

    pub fn is_linear(&self) -> bool {
        self.spec.twist.is_none()
    }

    /// Matrix of the linear part `rho(g)`.
    pub fn linear_matrix(&self, g: &GroupElement) -> RMat {
        rep_matrix(&self.group, &self.spec.linear, g)
    }

    /// `g . x`.
    pub fn action(&self, g: &GroupElement, x: &[f64]) -> Point {
        let rho = self.linear_matrix(g);
        match &self.spec.twist {
            None => rho.mat_vec(x).into_iter().collect(),
            Some(t) => {
                let y = twist_inverse(t, x);
                let z: Point = rho.mat_vec(&y).into_iter().collect();
                twist_apply(t, &z)
            }
        }
    }

    /// `F^-1(x)`: coordinates in which the action is linear.
    pub fn to_linear_chart(&self, x: &[f64]) -> Point {
        match &self.spec.twist {
            None => x.iter().copied().collect(),
            Some(t) => twist_inverse(t, x),
        }
    }

    /// `F(y)`, inverse of [`Self::to_linear_chart`].
    pub fn from_linear_chart(&self, y: &[f64]) -> Point {
        match &self.spec.twist {
            None => y.iter().copied().collect(),
            Some(t) => twist_apply(t, y),
        }
    }

    pub fn in_ball(&self, x: &[f64], factor: f64) -> bool {
        norm(x) <= factor * self.radius + 1e-12
    }

    /// Uniform point of the base ball.
    pub fn sample_base<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        ball_point(rng, &self.fixed_point, self.radius)
    }

    pub fn source<'a>(&self, p: &'a Arrow) -> &'a Point {
        &p.x
    }

    pub fn target(&self, p: &Arrow) -> Point {
        self.action(&p.g, &p.x)
    }

    pub fn identity_arrow(&self, x: &[f64]) -> Arrow {
        Arrow {
            g: self.group.identity(),
            x: x.iter().copied().collect(),
        }
    }

    /// `p . q`, defined when `s(p) = t(q)`.
    pub fn compose(&self, p: &Arrow, q: &Arrow) -> Result<Arrow, GroupoidError> {
        let tq = self.target(q);
        let gap = dist(&p.x, &tq);
        if gap > COMPOSE_TOLERANCE {
            return Err(GroupoidError::NotComposable { gap });
        }
        Ok(Arrow {
            g: self.group.mul(&p.g, &q.g),
            x: q.x.clone(),
        })
    }

    pub fn inverse(&self, p: &Arrow) -> Arrow {
        Arrow {
            g: self.group.inv(&p.g),
            x: self.target(p),
        }
    }

    /// Arrow `(h, h^-1 . x)` of the target fiber over `x`.
    pub fn fiber_arrow(&self, h: &GroupElement, x: &[f64]) -> Arrow {
        Arrow {
            g: h.clone(),
            x: self.action(&self.group.inv(h), x),
        }
    }

    /// The rule transported to `t^-1(x)`: arrows `(h, h^-1 . x)` with the rule's weights.
    pub fn t_fiber_rule(
        &self,
        x: &[f64],
        rule: &HaarQuadrature,
    ) -> Result<Vec<(Arrow, f64)>, GroupoidError> {
        if !self.in_ball(x, 1.0) {
            return Err(GroupoidError::ActionNotInvertible(format!(
                "base point of norm {} is outside the ball",
                norm(x)
            )));
        }
        rule.nodes
            .iter()
            .zip(&rule.weights)
            .map(|(h, w)| {
                let q = self.fiber_arrow(h, x);
                if self.in_ball(&q.x, ORBIT_CONTAINMENT_FACTOR) {
                    Ok((q, *w))
                } else {
                    Err(GroupoidError::ActionNotInvertible(
                        "fiber arrow leaves the sampled domain".into(),
                    ))
                }
            })
            .collect()
    }

    /// Largest deviation from the unit, associativity, fixed-point and
    /// orbit-containment axioms over `samples` random triples.
    pub fn axiom_deviation<R: Rng + ?Sized>(&self, rng: &mut R, samples: usize) -> AxiomReport {
        let mut rep = AxiomReport::default();
        let id = self.group.identity();
        for _ in 0..samples {
            let x = self.sample_base(rng);
            let g = self.group.random_element(rng);
            let h = self.group.random_element(rng);
            rep.unit = rep.unit.max(dist(&self.action(&id, &x), &x));
            let lhs = self.action(&self.group.mul(&g, &h), &x);
            let rhs = self.action(&g, &self.action(&h, &x));
            rep.associativity = rep.associativity.max(dist(&lhs, &rhs));
            rep.fixed_point = rep
                .fixed_point
                .max(norm(&self.action(&g, &self.fixed_point)));
            rep.max_orbit_radius = rep.max_orbit_radius.max(norm(&lhs) / self.radius);
        }
        rep
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AxiomReport {
    pub unit: f64,
    pub associativity: f64,
    pub fixed_point: f64,
    /// Largest orbit norm seen, in units of the base radius.
    pub max_orbit_radius: f64,
}

impl AxiomReport {
    pub fn holds(&self) -> bool {
        self.unit <= 1e-12
            && self.associativity <= 1e-10
            && self.fixed_point <= 1e-12
            && self.max_orbit_radius <= ORBIT_CONTAINMENT_FACTOR
    }
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    Float::sqrt(x.iter().map(|v| v * v).sum::<f64>())
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    Float::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>())
}

fn rep_dim(group: &CompactGroup, rep: &LinearRep) -> Result<usize, GroupoidError> {
    match (rep, &group.kind) {
        (LinearRep::Trivial, _) => Ok(0),
        (LinearRep::Adjoint, _) => Ok(group.dimension()),
        (LinearRep::Standard, GroupKind::SpecialOrthogonal(n)) => Ok(*n),
        (LinearRep::Standard, GroupKind::SpecialUnitary(n)) => Ok(2 * n),
        (LinearRep::TorusCharges(rows), GroupKind::Torus(n)) => {
            if rows.iter().any(|r| r.len() != *n) {
                return Err(GroupoidError::InvalidSpec(format!(
                    "each charge row needs {n} entries"
                )));
            }
            Ok(2 * rows.len())
        }
        (LinearRep::Blocks(reps), GroupKind::Product(fs)) if reps.len() == fs.len() => {
            fs.iter().zip(reps).map(|(f, r)| rep_dim(f, r)).sum()
        }
        _ => Err(GroupoidError::InvalidSpec(format!(
            "{rep:?} is not a representation of {:?}",
            group.kind
        ))),
    }
}

fn rep_matrix(group: &CompactGroup, rep: &LinearRep, g: &GroupElement) -> RMat {
    match (rep, &group.kind, g) {
        (LinearRep::Trivial, _, _) => RMat::zeros(0, 0),
        (LinearRep::Adjoint, GroupKind::SpecialUnitary(2), GroupElement::Unitary(u)) => {
            // The su(2) basis is ordered as the quaternion units j, k, i.
            let r = quaternion::to_so3(&quaternion::from_su2(u));
            let p = [1usize, 2, 0];
            RMat::from_fn(3, 3, |a, b| r[(p[a], p[b])])
        }
        (LinearRep::Adjoint, GroupKind::SpecialOrthogonal(3), GroupElement::Orthogonal(r)) => {
            // so(3) basis element (i, j) ordered (0,1), (0,2), (1,2) is dual to
            // the axis e_2, -e_1, e_0, so Ad is r conjugated by that signed permutation.
            let p = [2usize, 1, 0];
            let s = [1.0, -1.0, 1.0];
            RMat::from_fn(3, 3, |a, b| s[a] * s[b] * r[(p[a], p[b])])
        }
        (LinearRep::Adjoint, _, _) => {
            let basis = group.algebra_basis();
            let cols: Vec<Vec<f64>> = basis
                .iter()
                .map(|e| group.coords(&group.ad(g, e)))
                .collect();
            RMat::from_fn(basis.len(), basis.len(), |i, j| cols[j][i])
        }
        (LinearRep::Standard, _, GroupElement::Orthogonal(r)) => r.clone(),
        (LinearRep::Standard, _, GroupElement::Unitary(u)) => u.real_embedding(),
        (LinearRep::TorusCharges(rows), _, GroupElement::Torus(theta)) => {
            let m = rows.len();
            let mut out = RMat::zeros(2 * m, 2 * m);
            for (j, row) in rows.iter().enumerate() {
                let a: f64 = row
                    .iter()
                    .zip(theta.iter())
                    .map(|(c, t)| *c as f64 * t)
                    .sum();
                let (s, c) = (Float::sin(a), Float::cos(a));
                out[(2 * j, 2 * j)] = c;
                out[(2 * j, 2 * j + 1)] = -s;
                out[(2 * j + 1, 2 * j)] = s;
                out[(2 * j + 1, 2 * j + 1)] = c;
            }
            out
        }
        (LinearRep::Blocks(reps), GroupKind::Product(fs), GroupElement::Product(gs)) => {
            let blocks: Vec<RMat> = fs
                .iter()
                .zip(reps)
                .zip(gs)
                .map(|((f, r), h)| rep_matrix(f, r, h))
                .collect();
            let n: usize = blocks.iter().map(|b| b.rows()).sum();
            let mut out = RMat::zeros(n, n);
            let mut off = 0;
            for b in &blocks {
                for i in 0..b.rows() {
                    for j in 0..b.cols() {
                        out[(off + i, off + j)] = b[(i, j)];
                    }
                }
                off += b.rows();
            }
            out
        }
        _ => panic!("group element does not match the representation"),
    }
}

fn twist_angle(t: &Twist, x: &[f64]) -> f64 {
    t.strength * t.direction.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
}

fn rotate_plane(t: &Twist, x: &[f64], angle: f64) -> Point {
    let mut y: Point = x.iter().copied().collect();
    let [a, b] = t.plane;
    let (s, c) = (Float::sin(angle), Float::cos(angle));
    y[a] = c * x[a] - s * x[b];
    y[b] = s * x[a] + c * x[b];
    y
}

fn twist_apply(t: &Twist, x: &[f64]) -> Point {
    rotate_plane(t, x, twist_angle(t, x))
}

/// Solves `F(y) = x` by the contraction `y <- R(-angle(y)) x`.
fn twist_inverse(t: &Twist, x: &[f64]) -> Point {
    let mut y: Point = x.iter().copied().collect();
    for _ in 0..200 {
        let next = rotate_plane(t, x, -twist_angle(t, &y));
        let step = dist(&next, &y);
        y = next;
        if step <= 1e-17 * (1.0 + norm(x)) {
            break;
        }
    }
    y
}
