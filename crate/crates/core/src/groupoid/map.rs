use alloc::vec::Vec;

use num_traits::Float;
use rand::Rng;

use super::{ActionGroupoid, Arrow, GroupoidError};
use crate::lie::{AlgebraVector, CompactGroup, GroupElement, GroupKind, HaarQuadrature};
use crate::rng::stream_rng;

/// A map `phi` from the arrows of an action groupoid to its group.
pub trait GroupoidMap {
    fn groupoid(&self) -> &ActionGroupoid;

    fn eval(&self, p: &Arrow) -> Result<GroupElement, GroupoidError>;

    /// True when `phi(g, x0) = g` holds structurally, not just numerically.
    fn restricts_to_identity(&self) -> bool {
        false
    }
}

impl<M: GroupoidMap + ?Sized> GroupoidMap for &M {
    fn groupoid(&self) -> &ActionGroupoid {
        (**self).groupoid()
    }

    fn eval(&self, p: &Arrow) -> Result<GroupElement, GroupoidError> {
        (**self).eval(p)
    }

    fn restricts_to_identity(&self) -> bool {
        (**self).restricts_to_identity()
    }
}

impl<M: GroupoidMap + ?Sized> GroupoidMap for alloc::boxed::Box<M> {
    fn groupoid(&self) -> &ActionGroupoid {
        (**self).groupoid()
    }

    fn eval(&self, p: &Arrow) -> Result<GroupElement, GroupoidError> {
        (**self).eval(p)
    }

    fn restricts_to_identity(&self) -> bool {
        (**self).restricts_to_identity()
    }
}

/// The exact homomorphism `(g, x) -> g`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionMap {
    groupoid: ActionGroupoid,
}

impl ProjectionMap {
    pub fn new(groupoid: ActionGroupoid) -> Self {
        Self { groupoid }
    }
}

impl GroupoidMap for ProjectionMap {
    fn groupoid(&self) -> &ActionGroupoid {
        &self.groupoid
    }

    fn eval(&self, p: &Arrow) -> Result<GroupElement, GroupoidError> {
        Ok(p.g.clone())
    }

    fn restricts_to_identity(&self) -> bool {
        true
    }
}

/// Bounded functions on the group: the constant and the matrix entries
/// (real and imaginary parts), or the first Fourier modes on a torus.
pub fn group_features(group: &CompactGroup, g: &GroupElement) -> Vec<f64> {
    let mut out = alloc::vec![1.0];
    push_features(group, g, &mut out);
    out
}

fn push_features(group: &CompactGroup, g: &GroupElement, out: &mut Vec<f64>) {
    match (&group.kind, g) {
        (GroupKind::Torus(_), GroupElement::Torus(a)) => {
            for t in a {
                out.push(Float::cos(*t));
                out.push(Float::sin(*t));
            }
        }
        (GroupKind::SpecialUnitary(_), GroupElement::Unitary(u)) => {
            out.extend(u.as_slice().iter().flat_map(|z| [z.re, z.im]));
        }
        (GroupKind::SpecialOrthogonal(_), GroupElement::Orthogonal(r)) => {
            out.extend_from_slice(r.as_slice())
        }
        (GroupKind::Product(fs), GroupElement::Product(gs)) => {
            for (f, h) in fs.iter().zip(gs) {
                push_features(f, h, out);
            }
        }
        _ => panic!("group element does not match the group"),
    }
}

pub fn feature_count(group: &CompactGroup) -> usize {
    group_features(group, &group.identity()).len()
}

/// Monomials in `u` of degree one up to `degree` (at most two); all vanish
/// at `u = 0`.
pub fn base_monomials(u: &[f64], degree: usize) -> Vec<f64> {
    let d = u.len();
    let mut out = Vec::with_capacity(monomial_count(d, degree));
    out.extend_from_slice(u);
    if degree >= 2 {
        for i in 0..d {
            for j in i..d {
                out.push(u[i] * u[j]);
            }
        }
    }
    out
}

pub fn monomial_count(base_dim: usize, degree: usize) -> usize {
    if degree >= 2 {
        base_dim + base_dim * (base_dim + 1) / 2
    } else {
        base_dim
    }
}

/// Highest base degree a perturbation field may use.
pub const MAX_BASE_DEGREE: usize = 2;

/// Algebra-valued field `amplitude * sum c[l][f][m] feat_f(g) mono_m E_l`
/// over an orthonormal algebra basis `E_l`, with seeded coefficients
/// normalized so that the field norm stays below `amplitude / 3` when the
/// features and monomials are bounded by one.
#[derive(Debug, Clone, PartialEq)]
pub struct BandLimitedField {
    group: CompactGroup,
    basis: Vec<AlgebraVector>,
    n_feat: usize,
    n_mono: usize,
    pub amplitude: f64,
    pub coefficients: Vec<f64>,
    pub seed: u64,
}

impl BandLimitedField {
    pub fn seeded(group: &CompactGroup, n_mono: usize, amplitude: f64, seed: u64) -> Self {
        let basis = group.algebra_basis();
        let n_feat = feature_count(group);
        let block = n_feat * n_mono;
        let mut rng = stream_rng(seed, 0x0066_6965_6c64);
        let mut coefficients: Vec<f64> = (0..basis.len() * block)
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        let target = 1.0 / (3.0 * Float::sqrt(basis.len() as f64));
        for chunk in coefficients.chunks_mut(block.max(1)) {
            let l1: f64 = chunk.iter().map(|c| Float::abs(*c)).sum();
            if l1 > 0.0 {
                chunk.iter_mut().for_each(|c| *c *= target / l1);
            }
        }
        Self {
            group: group.clone(),
            basis,
            n_feat,
            n_mono,
            amplitude,
            coefficients,
            seed,
        }
    }

    /// Field with explicit coefficients, laid out `[l][f][m]`.
    pub fn from_coefficients(
        group: &CompactGroup,
        n_mono: usize,
        amplitude: f64,
        coefficients: Vec<f64>,
    ) -> Result<Self, GroupoidError> {
        let basis = group.algebra_basis();
        let n_feat = feature_count(group);
        if coefficients.len() != basis.len() * n_feat * n_mono {
            return Err(GroupoidError::InvalidSpec(alloc::format!(
                "expected {} coefficients, got {}",
                basis.len() * n_feat * n_mono,
                coefficients.len()
            )));
        }
        Ok(Self {
            group: group.clone(),
            basis,
            n_feat,
            n_mono,
            amplitude,
            coefficients,
            seed: 0,
        })
    }

    pub fn monomial_slots(&self) -> usize {
        self.n_mono
    }

    pub fn eval(&self, g: &GroupElement, mono: &[f64]) -> AlgebraVector {
        debug_assert_eq!(mono.len(), self.n_mono);
        let feat = group_features(&self.group, g);
        let block = self.n_feat * self.n_mono;
        let mut coords = Vec::with_capacity(self.basis.len());
        for l in 0..self.basis.len() {
            let c = &self.coefficients[l * block..(l + 1) * block];
            let mut s = 0.0;
            for (f, fv) in feat.iter().enumerate() {
                let row = &c[f * self.n_mono..(f + 1) * self.n_mono];
                let inner: f64 = row.iter().zip(mono).map(|(a, b)| a * b).sum();
                s += fv * inner;
            }
            coords.push(self.amplitude * s);
        }
        self.basis
            .iter()
            .zip(&coords)
            .fold(self.group.zero_algebra(), |acc, (e, c)| {
                acc.add(&e.scale(*c))
            })
    }
}

/// `phi(g, x) = g * exp(eps(g, x))` with `eps` a band-limited field in
/// `(g, (F^-1(x) - x0) / r)` vanishing at the fixed point, where `F^-1`
/// is the chart in which the action is linear (the identity for linear
/// actions), plus an optional
/// constant offset (which breaks the identity restriction on purpose).
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbedMap {
    groupoid: ActionGroupoid,
    pub field: BandLimitedField,
    degree: usize,
    pub offset: Option<AlgebraVector>,
}

impl PerturbedMap {
    pub fn seeded(groupoid: ActionGroupoid, amplitude: f64, seed: u64) -> Self {
        Self::seeded_with_degree(groupoid, amplitude, seed, MAX_BASE_DEGREE)
    }

    /// Seeded field using base monomials up to `degree` (clamped to `1..=2`).
    pub fn seeded_with_degree(
        groupoid: ActionGroupoid,
        amplitude: f64,
        seed: u64,
        degree: usize,
    ) -> Self {
        let degree = degree.clamp(1, MAX_BASE_DEGREE);
        let n_mono = monomial_count(groupoid.base_dim(), degree);
        let field = BandLimitedField::seeded(groupoid.group(), n_mono, amplitude, seed);
        Self {
            groupoid,
            field,
            degree,
            offset: None,
        }
    }

    pub fn with_field(
        groupoid: ActionGroupoid,
        field: BandLimitedField,
    ) -> Result<Self, GroupoidError> {
        let d = groupoid.base_dim();
        let degree = (1..=MAX_BASE_DEGREE)
            .find(|k| monomial_count(d, *k) == field.monomial_slots())
            .ok_or_else(|| {
                GroupoidError::InvalidSpec("field does not match the base dimension".into())
            })?;
        Ok(Self {
            groupoid,
            field,
            degree,
            offset: None,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn with_offset(mut self, offset: AlgebraVector) -> Self {
        self.offset = Some(offset);
        self
    }

    pub fn perturbation(&self, p: &Arrow) -> AlgebraVector {
        let r = self.groupoid.radius();
        let y = self.groupoid.to_linear_chart(&p.x);
        let u: Vec<f64> = y
            .iter()
            .zip(self.groupoid.fixed_point())
            .map(|(a, b)| (a - b) / r)
            .collect();
        let v = self.field.eval(&p.g, &base_monomials(&u, self.degree));
        match &self.offset {
            Some(o) => v.add(o),
            None => v,
        }
    }
}

impl GroupoidMap for PerturbedMap {
    fn groupoid(&self) -> &ActionGroupoid {
        &self.groupoid
    }

    fn eval(&self, p: &Arrow) -> Result<GroupElement, GroupoidError> {
        let group = self.groupoid.group();
        Ok(group.mul(&p.g, &group.exp(&self.perturbation(p))))
    }

    fn restricts_to_identity(&self) -> bool {
        self.offset.is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RestrictionReport {
    pub max_deviation: f64,
    pub tolerance: f64,
}

impl RestrictionReport {
    pub fn passed(&self) -> bool {
        self.max_deviation <= self.tolerance
    }
}

/// `sup_h dist(phi(h, x0), h)` over the rule's nodes.
pub fn identity_restriction_check<M: GroupoidMap + ?Sized>(
    phi: &M,
    rule: &HaarQuadrature,
) -> Result<RestrictionReport, GroupoidError> {
    let g = phi.groupoid();
    let mut worst: f64 = 0.0;
    for h in &rule.nodes {
        let p = Arrow {
            g: h.clone(),
            x: g.fixed_point().clone(),
        };
        worst = worst.max(g.group().dist(&phi.eval(&p)?, h));
    }
    Ok(RestrictionReport {
        max_deviation: worst,
        tolerance: 1e-12,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groupoid::{ActionSpec, LinearRep};
    use crate::lie::{haar_nodes, subgroup_rule, SubgroupSpec};

    fn su2_groupoid() -> ActionGroupoid {
        ActionGroupoid::new(
            CompactGroup::su(2),
            ActionSpec::linear(LinearRep::Adjoint),
            0.5,
        )
        .unwrap()
    }

    #[test]
    fn monomials_vanish_at_origin() {
        assert!(base_monomials(&[0.0, 0.0, 0.0], 2)
            .iter()
            .all(|v| *v == 0.0));
        assert_eq!(
            base_monomials(&[1.0, 2.0], 2),
            vec![1.0, 2.0, 1.0, 2.0, 4.0]
        );
        assert_eq!(base_monomials(&[1.0, 2.0], 1), vec![1.0, 2.0]);
        assert_eq!(monomial_count(3, 2), 9);
        assert_eq!(monomial_count(3, 1), 3);
    }

    #[test]
    fn perturbed_maps_restrict_to_identity() {
        let g = su2_groupoid();
        let rule = subgroup_rule(g.group(), SubgroupSpec::BinaryIcosahedral, None).unwrap();
        let phi = PerturbedMap::seeded(g.clone(), 0.1, 5);
        let rep = identity_restriction_check(&phi, &rule).unwrap();
        assert_eq!(rep.max_deviation, 0.0);
        let exact = ProjectionMap::new(g);
        assert_eq!(
            identity_restriction_check(&exact, &rule)
                .unwrap()
                .max_deviation,
            0.0
        );
    }

    #[test]
    fn corrupted_coefficients_are_detected() {
        let g = su2_groupoid();
        let rule = haar_nodes(g.group(), 4, 0).unwrap();
        let delta = 0.03;
        let grp = g.group().clone();
        let dir = grp.from_coords(&[delta, 0.0, 0.0]);
        let phi = PerturbedMap::seeded(g, 0.1, 5).with_offset(dir);
        let rep = identity_restriction_check(&phi, &rule).unwrap();
        assert!(
            (rep.max_deviation - delta).abs() < 1e-12,
            "{}",
            rep.max_deviation
        );
        assert!(!rep.passed());
    }

    #[test]
    fn field_norm_is_bounded_by_a_third_of_the_amplitude() {
        let g = su2_groupoid();
        let phi = PerturbedMap::seeded(g.clone(), 0.3, 9);
        let mut rng = stream_rng(3, 0);
        for _ in 0..200 {
            let p = Arrow {
                g: g.group().random_element(&mut rng),
                x: g.sample_base(&mut rng),
            };
            let n = g.group().norm(&phi.perturbation(&p));
            assert!(n <= 0.1 + 1e-12);
        }
    }

    #[test]
    fn evaluation_is_deterministic() {
        let g = su2_groupoid();
        let a = PerturbedMap::seeded(g.clone(), 0.1, 77);
        let b = PerturbedMap::seeded(g.clone(), 0.1, 77);
        assert_eq!(a, b);
        let mut rng = stream_rng(4, 0);
        let p = Arrow {
            g: g.group().random_element(&mut rng),
            x: g.sample_base(&mut rng),
        };
        assert_eq!(a.eval(&p).unwrap(), b.eval(&p).unwrap());
    }
}
