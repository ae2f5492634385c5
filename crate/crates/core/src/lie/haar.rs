use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use num_traits::Float;

use super::quaternion::{self, Quat};
use super::{CompactGroup, GroupElement, GroupKind, LieError};
use crate::linalg::{pairwise_sum, RMat};
use crate::quadrature::gauss_legendre_interval;
use crate::rng::stream_rng;

/// A finite Haar probability rule on a compact group.
#[derive(Debug, Clone, PartialEq)]
pub struct HaarQuadrature {
    pub group: CompactGroup,
    pub nodes: Vec<GroupElement>,
    pub weights: Vec<f64>,
    pub exactness_class: String,
    pub seed: Option<u64>,
    /// Bound on the integration error for unit-size test functions in the
    /// exactness class.
    pub error_bound: f64,
    /// Multiplication table when the nodes form a finite subgroup.
    pub subgroup: Option<SubgroupTable>,
}

/// Multiplication structure of a finite subgroup; node 0 is the identity.
#[derive(Debug, Clone, PartialEq)]
pub enum SubgroupTable {
    Dense {
        order: usize,
        mul: Vec<u32>,
        inv: Vec<u32>,
    },
    /// `Z_{d_1} x ... x Z_{d_m}`, mixed radix with the first factor most significant.
    Grid {
        dims: Vec<usize>,
    },
    Product {
        factors: Vec<SubgroupTable>,
    },
}

/// Named finite subgroups usable as exact quadrature rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SubgroupSpec {
    /// Equispaced grid `Z_r^n` on a torus.
    TorusGrid(usize),
    /// Binary tetrahedral group (24 elements in SU(2), 12 in SO(3)).
    BinaryTetrahedral,
    /// Binary octahedral group (48 in SU(2), 24 in SO(3)).
    BinaryOctahedral,
    /// Binary icosahedral group (120 in SU(2), 60 in SO(3)).
    BinaryIcosahedral,
}

impl SubgroupSpec {
    /// Largest degree `d` such that the group orbit is a spherical `d`-design on S^3.
    pub fn quaternion_design_degree(self) -> Option<usize> {
        match self {
            Self::TorusGrid(_) => None,
            Self::BinaryTetrahedral => Some(5),
            Self::BinaryOctahedral => Some(7),
            Self::BinaryIcosahedral => Some(11),
        }
    }
}

impl SubgroupTable {
    pub fn order(&self) -> usize {
        match self {
            Self::Dense { order, .. } => *order,
            Self::Grid { dims } => dims.iter().product(),
            Self::Product { factors } => factors.iter().map(|f| f.order()).product(),
        }
    }

    pub fn identity(&self) -> usize {
        0
    }

    pub fn mul(&self, i: usize, j: usize) -> usize {
        match self {
            Self::Dense { order, mul, .. } => mul[i * order + j] as usize,
            Self::Grid { dims } => {
                Self::mixed_radix_map(dims.iter().copied(), i, j, |d, a, b| (a + b) % d)
            }
            Self::Product { factors } => {
                let mut out = 0;
                let mut stride = self.order();
                let (mut ri, mut rj) = (i, j);
                for f in factors {
                    stride /= f.order();
                    let (a, b) = (ri / stride, rj / stride);
                    ri %= stride;
                    rj %= stride;
                    out += f.mul(a, b) * stride;
                }
                out
            }
        }
    }

    pub fn inv(&self, i: usize) -> usize {
        match self {
            Self::Dense { inv, .. } => inv[i] as usize,
            Self::Grid { dims } => {
                Self::mixed_radix_map(dims.iter().copied(), i, 0, |d, a, _| (d - a) % d)
            }
            Self::Product { factors } => {
                let mut out = 0;
                let mut stride = self.order();
                let mut r = i;
                for f in factors {
                    stride /= f.order();
                    out += f.inv(r / stride) * stride;
                    r %= stride;
                }
                out
            }
        }
    }

    fn mixed_radix_map(
        dims: impl DoubleEndedIterator<Item = usize>,
        i: usize,
        j: usize,
        f: impl Fn(usize, usize, usize) -> usize,
    ) -> usize {
        let (mut ri, mut rj) = (i, j);
        let mut out = 0;
        let mut stride = 1;
        for d in dims.rev() {
            out += f(d, ri % d, rj % d) * stride;
            ri /= d;
            rj /= d;
            stride *= d;
        }
        out
    }
}

impl HaarQuadrature {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `sum_k w_k f(h_k)` with a fixed-order pairwise reduction.
    pub fn integrate(&self, f: impl Fn(&GroupElement) -> f64) -> f64 {
        let terms: Vec<f64> = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(h, w)| w * f(h))
            .collect();
        pairwise_sum(&terms)
    }

    /// `|int f(g h) dh - int f(h) dh|` under the rule.
    pub fn translation_error(&self, f: impl Fn(&GroupElement) -> f64, g: &GroupElement) -> f64 {
        let a = self.integrate(|h| f(&self.group.mul(g, h)));
        let b = self.integrate(&f);
        Float::abs(a - b)
    }

    /// Checks weight normalization and node validity.
    pub fn validate(&self) -> Result<(), LieError> {
        if self.nodes.len() != self.weights.len() || self.nodes.is_empty() {
            return Err(LieError::InvalidParameter(
                "node and weight counts differ".into(),
            ));
        }
        if self.weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(LieError::InvalidParameter("negative weight".into()));
        }
        let s = pairwise_sum(&self.weights);
        if Float::abs(s - 1.0) > 1e-14 {
            return Err(LieError::InvalidParameter(format!("weights sum to {s}")));
        }
        self.nodes
            .iter()
            .try_for_each(|h| self.group.validate_element(h))
    }
}

const MAX_RESOLUTION: usize = 256;

/// Deterministic product rule of the given resolution.
///
/// * torus(n): the equispaced grid `Z_r^n`, exact on trigonometric
///   polynomials of degree below `r` in each angle. The seed is ignored.
/// * SU(2): Hopf-coordinate product rule with `r^3` nodes, left-translated
///   by a seeded element; exact on polynomials of degree below `r` in the
///   quaternion coordinates.
/// * SO(3): image of the SU(2) rule under the double cover.
/// * products: cartesian product of the factor rules.
pub fn haar_nodes(
    group: &CompactGroup,
    resolution: usize,
    seed: u64,
) -> Result<HaarQuadrature, LieError> {
    group.validate()?;
    if resolution == 0 || resolution > MAX_RESOLUTION {
        return Err(LieError::InvalidParameter(format!(
            "resolution must be in 1..={MAX_RESOLUTION}"
        )));
    }
    match &group.kind {
        GroupKind::Torus(n) => {
            let dims: Vec<usize> = (0..*n).map(|_| resolution).collect();
            let table = SubgroupTable::Grid { dims };
            let count = table.order();
            let nodes = (0..count)
                .map(|i| torus_grid_node(*n, resolution, i))
                .collect();
            Ok(HaarQuadrature {
                group: group.clone(),
                nodes,
                weights: uniform(count),
                exactness_class: format!("trigonometric degree < {resolution} per angle"),
                seed: None,
                error_bound: 1e-14,
                subgroup: Some(table),
            })
        }
        GroupKind::SpecialUnitary(2) | GroupKind::SpecialOrthogonal(3) => {
            let (quats, weights) = hopf_rule(resolution, seed);
            let is_su2 = matches!(group.kind, GroupKind::SpecialUnitary(2));
            let nodes = quats
                .iter()
                .map(|q| {
                    if is_su2 {
                        GroupElement::Unitary(quaternion::to_su2(q))
                    } else {
                        GroupElement::Orthogonal(quaternion::to_so3(q))
                    }
                })
                .collect();
            let class = if is_su2 {
                format!("quaternion polynomial degree <= {}", resolution - 1)
            } else {
                format!("matrix-entry polynomial degree <= {}", (resolution - 1) / 2)
            };
            Ok(HaarQuadrature {
                group: group.clone(),
                nodes,
                weights,
                exactness_class: class,
                seed: Some(seed),
                error_bound: 1e-13,
                subgroup: None,
            })
        }
        GroupKind::Product(fs) => {
            let rules = fs
                .iter()
                .enumerate()
                .map(|(i, f)| haar_nodes(f, resolution, seed.wrapping_add(i as u64)))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(product_rule(group, rules, Some(seed)))
        }
        _ => Err(LieError::UnsupportedGroup(format!(
            "no deterministic rule for {:?}; use a Monte Carlo rule",
            group.kind
        ))),
    }
}

/// Finite-subgroup rule: the nodes are closed under multiplication, so the
/// rule is exactly left- and right-invariant on its own node set.
/// An optional seed conjugates the subgroup by a random element.
pub fn subgroup_rule(
    group: &CompactGroup,
    spec: SubgroupSpec,
    seed: Option<u64>,
) -> Result<HaarQuadrature, LieError> {
    group.validate()?;
    match (&group.kind, spec) {
        (GroupKind::Torus(_), SubgroupSpec::TorusGrid(r)) => {
            let mut rule = haar_nodes(group, r, 0)?;
            rule.exactness_class = format!("finite subgroup Z_{r}^n; {}", rule.exactness_class);
            Ok(rule)
        }
        (
            GroupKind::SpecialUnitary(2) | GroupKind::SpecialOrthogonal(3),
            SubgroupSpec::TorusGrid(_),
        ) => Err(LieError::UnsupportedGroup(
            "torus grids are only defined on tori".into(),
        )),
        (GroupKind::SpecialUnitary(2) | GroupKind::SpecialOrthogonal(3), _) => {
            let mut quats = binary_polyhedral(spec);
            if let Some(s) = seed {
                let mut rng = stream_rng(s, 0);
                let c = CompactGroup::su(2).random_element(&mut rng);
                let cq = quaternion::from_su2(c.as_unitary().expect("SU(2) element"));
                let ci = [cq[0], -cq[1], -cq[2], -cq[3]];
                for q in quats.iter_mut() {
                    *q = quaternion::mul(&quaternion::mul(&cq, q), &ci);
                }
            }
            let is_su2 = matches!(group.kind, GroupKind::SpecialUnitary(2));
            let degree = spec.quaternion_design_degree().unwrap_or(0);
            let (nodes, class): (Vec<GroupElement>, String) = if is_su2 {
                (
                    quats
                        .iter()
                        .map(|q| GroupElement::Unitary(quaternion::to_su2(q)))
                        .collect(),
                    format!("{spec:?} subgroup; quaternion polynomial degree <= {degree}"),
                )
            } else {
                let mut mats: Vec<RMat> = Vec::new();
                for q in &quats {
                    let r = quaternion::to_so3(q);
                    if !mats.iter().any(|m| m.max_abs_diff(&r) < 1e-9) {
                        mats.push(r);
                    }
                }
                (
                    mats.into_iter().map(GroupElement::Orthogonal).collect(),
                    format!(
                        "{spec:?} rotation subgroup; matrix-entry polynomial degree <= {}",
                        degree / 2
                    ),
                )
            };
            let table = dense_table(group, &nodes)?;
            let count = nodes.len();
            Ok(HaarQuadrature {
                group: group.clone(),
                nodes,
                weights: uniform(count),
                exactness_class: class,
                seed,
                error_bound: 1e-13,
                subgroup: Some(table),
            })
        }
        (GroupKind::Product(fs), _) => {
            let rules = fs
                .iter()
                .map(|f| subgroup_rule(f, spec, seed))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(product_rule(group, rules, seed))
        }
        _ => Err(LieError::UnsupportedGroup(format!(
            "{spec:?} is not a subgroup of {:?}",
            group.kind
        ))),
    }
}

/// `n` seeded Haar-random nodes with equal weights. The error bound is the
/// three-sigma value for test functions bounded by one.
pub fn monte_carlo_rule(
    group: &CompactGroup,
    n: usize,
    seed: u64,
) -> Result<HaarQuadrature, LieError> {
    group.validate()?;
    if n == 0 {
        return Err(LieError::InvalidParameter("empty Monte Carlo rule".into()));
    }
    let nodes = (0..n)
        .map(|i| group.random_element(&mut stream_rng(seed, i as u64)))
        .collect();
    Ok(HaarQuadrature {
        group: group.clone(),
        nodes,
        weights: uniform(n),
        exactness_class: format!("Monte Carlo N={n}, seed {seed}"),
        seed: Some(seed),
        error_bound: 3.0 / Float::sqrt(n as f64),
        subgroup: None,
    })
}

fn uniform(n: usize) -> Vec<f64> {
    let w = 1.0 / n as f64;
    alloc::vec![w; n]
}

fn torus_grid_node(n: usize, r: usize, mut index: usize) -> GroupElement {
    let mut angles = smallvec::SmallVec::<[f64; 4]>::from_elem(0.0, n);
    for slot in (0..n).rev() {
        let m = index % r;
        index /= r;
        let a = TAU * m as f64 / r as f64;
        angles[slot] = if a > PI { a - TAU } else { a };
    }
    GroupElement::Torus(angles)
}

fn product_rule(
    group: &CompactGroup,
    rules: Vec<HaarQuadrature>,
    seed: Option<u64>,
) -> HaarQuadrature {
    let mut nodes: Vec<Vec<GroupElement>> = alloc::vec![Vec::new()];
    let mut weights = alloc::vec![1.0];
    for r in &rules {
        let mut next_nodes = Vec::with_capacity(nodes.len() * r.len());
        let mut next_weights = Vec::with_capacity(nodes.len() * r.len());
        for (prefix, w) in nodes.iter().zip(&weights) {
            for (h, v) in r.nodes.iter().zip(&r.weights) {
                let mut p = prefix.clone();
                p.push(h.clone());
                next_nodes.push(p);
                next_weights.push(w * v);
            }
        }
        nodes = next_nodes;
        weights = next_weights;
    }
    let subgroup = rules
        .iter()
        .map(|r| r.subgroup.clone())
        .collect::<Option<Vec<_>>>()
        .map(|factors| SubgroupTable::Product { factors });
    let class = rules
        .iter()
        .map(|r| r.exactness_class.as_str())
        .collect::<Vec<_>>()
        .join(" x ");
    HaarQuadrature {
        group: group.clone(),
        nodes: nodes.into_iter().map(GroupElement::Product).collect(),
        weights,
        exactness_class: format!("product of [{class}]"),
        seed,
        error_bound: rules.iter().map(|r| r.error_bound).sum(),
        subgroup,
    }
}

/// Hopf coordinates `q = (sqrt(t) cos a, sqrt(t) sin a, sqrt(1-t) cos b, sqrt(1-t) sin b)`
/// push the uniform measure on `[0,1] x [0,2pi)^2` to Haar measure on S^3.
fn hopf_rule(r: usize, seed: u64) -> (Vec<Quat>, Vec<f64>) {
    let (ts, tw) = gauss_legendre_interval(r, 0.0, 1.0);
    let mut rng = stream_rng(seed, 0);
    let shift = CompactGroup::su(2).random_element(&mut rng);
    let sq = quaternion::from_su2(shift.as_unitary().expect("SU(2) element"));
    let mut quats = Vec::with_capacity(r * r * r);
    let mut weights = Vec::with_capacity(r * r * r);
    let ang = |k: usize| TAU * (k as f64 + 0.5) / r as f64;
    for (t, w) in ts.iter().zip(&tw) {
        let (a_t, b_t) = (Float::sqrt(*t), Float::sqrt(1.0 - t));
        for i in 0..r {
            for j in 0..r {
                let (a, b) = (ang(i), ang(j));
                let q = [
                    a_t * Float::cos(a),
                    a_t * Float::sin(a),
                    b_t * Float::cos(b),
                    b_t * Float::sin(b),
                ];
                quats.push(quaternion::mul(&sq, &q));
                weights.push(w / (r * r) as f64);
            }
        }
    }
    // Renormalize to cancel the roundoff in the Gauss weights.
    let s = pairwise_sum(&weights);
    weights.iter_mut().for_each(|w| *w /= s);
    (quats, weights)
}

/// Closure of the standard generators under quaternion multiplication.
fn binary_polyhedral(spec: SubgroupSpec) -> Vec<Quat> {
    let phi = 0.5 * (1.0 + Float::sqrt(5.0));
    let s = [0.5, 0.5, 0.5, 0.5];
    let i = [0.0, 1.0, 0.0, 0.0];
    let j = [0.0, 0.0, 1.0, 0.0];
    let gens: Vec<Quat> = match spec {
        SubgroupSpec::BinaryTetrahedral => alloc::vec![s, i, j],
        SubgroupSpec::BinaryOctahedral => {
            let r = 1.0 / Float::sqrt(2.0);
            alloc::vec![s, i, j, [r, r, 0.0, 0.0]]
        }
        SubgroupSpec::BinaryIcosahedral => {
            alloc::vec![
                s,
                i,
                j,
                quaternion::normalize(&[0.5 * phi, 0.5 / phi, 0.5, 0.0])
            ]
        }
        SubgroupSpec::TorusGrid(_) => unreachable!("not a quaternion group"),
    };
    let mut elems: Vec<Quat> = alloc::vec![[1.0, 0.0, 0.0, 0.0]];
    let close = |a: &Quat, b: &Quat| a.iter().zip(b).all(|(x, y)| Float::abs(x - y) < 1e-9);
    let mut frontier = 0;
    while frontier < elems.len() {
        let e = elems[frontier];
        frontier += 1;
        for g in &gens {
            let p = quaternion::normalize(&quaternion::mul(&e, g));
            if !elems.iter().any(|x| close(x, &p)) {
                elems.push(p);
            }
        }
    }
    elems
}

fn dense_table(group: &CompactGroup, nodes: &[GroupElement]) -> Result<SubgroupTable, LieError> {
    let n = nodes.len();
    let find = |g: &GroupElement| nodes.iter().position(|h| group.dist(g, h) < 1e-8);
    if find(&group.identity()) != Some(0) {
        return Err(LieError::InvalidParameter(
            "subgroup must list the identity first".into(),
        ));
    }
    let mut mul = Vec::with_capacity(n * n);
    for a in nodes {
        for b in nodes {
            let k = find(&group.mul(a, b))
                .ok_or_else(|| LieError::InvalidParameter("node set is not closed".into()))?;
            mul.push(k as u32);
        }
    }
    let inv = (0..n)
        .map(|a| (0..n).find(|&b| mul[a * n + b] == 0).map(|b| b as u32))
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| LieError::InvalidParameter("missing inverse".into()))?;
    Ok(SubgroupTable::Dense { order: n, mul, inv })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quat_of(g: &GroupElement) -> Quat {
        quaternion::from_su2(g.as_unitary().unwrap())
    }

    fn monomial(q: &Quat, e: [u32; 4]) -> f64 {
        q.iter().zip(e).map(|(x, k)| x.powi(k as i32)).product()
    }

    fn exponents(deg: u32) -> Vec<[u32; 4]> {
        let mut out = Vec::new();
        for a in 0..=deg {
            for b in 0..=deg - a {
                for c in 0..=deg - a - b {
                    out.push([a, b, c, deg - a - b - c]);
                }
            }
        }
        out
    }

    #[test]
    fn torus_grid_moments() {
        let t = CompactGroup::torus(1);
        let rule = haar_nodes(&t, 8, 0).unwrap();
        rule.validate().unwrap();
        assert_eq!(rule.len(), 8);
        let re = rule.integrate(|g| g.as_angles().unwrap()[0].cos());
        let im = rule.integrate(|g| g.as_angles().unwrap()[0].sin());
        assert!(re.abs() < 1e-15 && im.abs() < 1e-15);
        assert!((rule.integrate(|_| 1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn grid_table_matches_group_law() {
        let t = CompactGroup::torus(2);
        let rule = haar_nodes(&t, 5, 0).unwrap();
        let tab = rule.subgroup.as_ref().unwrap();
        for i in 0..rule.len() {
            assert!(t.dist(&rule.nodes[tab.inv(i)], &t.inv(&rule.nodes[i])) < 1e-14);
            for j in 0..rule.len() {
                let k = tab.mul(i, j);
                assert!(t.dist(&rule.nodes[k], &t.mul(&rule.nodes[i], &rule.nodes[j])) < 1e-14);
            }
        }
    }

    #[test]
    fn su2_trace_character_vanishes() {
        let g = CompactGroup::su(2);
        let rule = haar_nodes(&g, 12, 3).unwrap();
        rule.validate().unwrap();
        assert_eq!(rule.len(), 1728);
        let chi = rule.integrate(|h| h.as_unitary().unwrap().trace().re);
        assert!(chi.abs() <= rule.error_bound, "{chi}");
        // |chi|^2 integrates to 1 (Schur orthogonality).
        let chi2 = rule.integrate(|h| h.as_unitary().unwrap().trace().norm_sqr());
        assert!((chi2 - 1.0).abs() <= rule.error_bound);
    }

    #[test]
    fn hopf_rule_is_exact_below_resolution() {
        let g = CompactGroup::su(2);
        let rule = haar_nodes(&g, 7, 9).unwrap();
        let fine = haar_nodes(&g, 24, 1).unwrap();
        for deg in 0..=6 {
            for e in exponents(deg) {
                let a = rule.integrate(|h| monomial(&quat_of(h), e));
                let b = fine.integrate(|h| monomial(&quat_of(h), e));
                assert!((a - b).abs() < 1e-13, "{e:?}");
            }
        }
    }

    #[test]
    fn binary_polyhedral_orders() {
        let su2 = CompactGroup::su(2);
        let so3 = CompactGroup::so(3);
        for (spec, n) in [
            (SubgroupSpec::BinaryTetrahedral, 24),
            (SubgroupSpec::BinaryOctahedral, 48),
            (SubgroupSpec::BinaryIcosahedral, 120),
        ] {
            let r = subgroup_rule(&su2, spec, None).unwrap();
            r.validate().unwrap();
            assert_eq!(r.len(), n);
            let s = subgroup_rule(&so3, spec, Some(4)).unwrap();
            s.validate().unwrap();
            assert_eq!(s.len(), n / 2);
        }
    }

    #[test]
    fn subgroup_designs_match_fine_rule() {
        let su2 = CompactGroup::su(2);
        let fine = haar_nodes(&su2, 16, 2).unwrap();
        for spec in [
            SubgroupSpec::BinaryTetrahedral,
            SubgroupSpec::BinaryOctahedral,
            SubgroupSpec::BinaryIcosahedral,
        ] {
            let rule = subgroup_rule(&su2, spec, Some(17)).unwrap();
            let d = spec.quaternion_design_degree().unwrap() as u32;
            for deg in 0..=d {
                for e in exponents(deg) {
                    let a = rule.integrate(|h| monomial(&quat_of(h), e));
                    let b = fine.integrate(|h| monomial(&quat_of(h), e));
                    assert!((a - b).abs() < 1e-12, "{spec:?} {e:?} {a} {b}");
                }
            }
            // One degree higher is no longer integrated exactly.
            let worst = exponents(d + 1)
                .into_iter()
                .map(|e| {
                    let a = rule.integrate(|h| monomial(&quat_of(h), e));
                    let b = fine.integrate(|h| monomial(&quat_of(h), e));
                    (a - b).abs()
                })
                .fold(0.0, f64::max);
            assert!(worst > 1e-6, "{spec:?}");
        }
    }

    #[test]
    fn subgroup_tables_are_group_laws() {
        let g = CompactGroup::so(3);
        let r = subgroup_rule(&g, SubgroupSpec::BinaryOctahedral, Some(5)).unwrap();
        let t = r.subgroup.as_ref().unwrap();
        for a in 0..r.len() {
            assert_eq!(t.mul(a, t.inv(a)), t.identity());
            for b in 0..r.len() {
                let want = g.mul(&r.nodes[a], &r.nodes[b]);
                assert!(g.dist(&r.nodes[t.mul(a, b)], &want) < 1e-12);
            }
        }
    }

    #[test]
    fn product_rules() {
        let g = CompactGroup::product(alloc::vec![CompactGroup::torus(1), CompactGroup::torus(1)]);
        let r = haar_nodes(&g, 4, 0).unwrap();
        r.validate().unwrap();
        assert_eq!(r.len(), 16);
        let t = r.subgroup.as_ref().unwrap();
        for a in 0..16 {
            for b in 0..16 {
                let want = g.mul(&r.nodes[a], &r.nodes[b]);
                assert!(g.dist(&r.nodes[t.mul(a, b)], &want) < 1e-14);
            }
            assert_eq!(t.mul(a, t.inv(a)), 0);
        }
    }

    #[test]
    fn monte_carlo_and_unsupported() {
        let g = CompactGroup::su(3);
        assert!(matches!(
            haar_nodes(&g, 4, 0),
            Err(LieError::UnsupportedGroup(_))
        ));
        let r = monte_carlo_rule(&g, 2000, 7).unwrap();
        r.validate().unwrap();
        let chi = r.integrate(|h| h.as_unitary().unwrap().trace().re / 3.0);
        assert!(chi.abs() < r.error_bound);
        assert_eq!(r, monte_carlo_rule(&g, 2000, 7).unwrap());
    }

    #[test]
    fn translation_invariance_on_nodes() {
        let g = CompactGroup::su(2);
        let r = subgroup_rule(&g, SubgroupSpec::BinaryIcosahedral, None).unwrap();
        let f = |h: &GroupElement| {
            let q = quat_of(h);
            q[0].powi(3) * q[1] + q[2] * q[2] * q[3].powi(4)
        };
        for n in r.nodes.iter().step_by(7) {
            assert!(r.translation_error(f, n) < 1e-14);
        }
        let rot = g.random_element(&mut stream_rng(3, 0));
        assert!(r.translation_error(f, &rot) < r.error_bound);
    }
}
