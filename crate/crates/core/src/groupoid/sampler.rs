use alloc::vec::Vec;
use core::f64::consts::TAU;

use num_traits::Float;
use rand::Rng;

use super::{ActionGroupoid, Arrow, GroupoidError, Point};
use crate::lie::{haar_nodes, quaternion, CompactGroup, GroupElement, GroupKind};
use crate::rng::{radical_inverse, stream_rng, HALTON_BASES};

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SamplingStrategy {
    /// Independent seeded stream per pair index.
    Random,
    /// Halton points for the base and (on tori and SU(2)/SO(3)) the group.
    LowDiscrepancy,
    /// Every combination of `k`, `g` from a product Haar rule and `x` from
    /// a cubic lattice in the ball. `count` is ignored.
    Grid {
        group_resolution: usize,
        base_resolution: usize,
    },
}

/// Emits composable pairs `(p, q)`: `q = (k, x)` first, then `p = (g, k.x)`,
/// so `s(p) = t(q)` holds by construction. Pairs depend only on
/// `(seed, index)`, so a larger count extends a smaller one.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ComposablePairSampler {
    pub seed: u64,
    pub count: usize,
    pub strategy: SamplingStrategy,
}

impl ComposablePairSampler {
    pub fn random(seed: u64, count: usize) -> Self {
        Self {
            seed,
            count,
            strategy: SamplingStrategy::Random,
        }
    }

    pub fn low_discrepancy(seed: u64, count: usize) -> Self {
        Self {
            seed,
            count,
            strategy: SamplingStrategy::LowDiscrepancy,
        }
    }

    pub fn with_count(&self, count: usize) -> Self {
        Self {
            count,
            ..self.clone()
        }
    }

    /// A sampler whose pairs are disjoint from this one's.
    pub fn held_out(&self) -> Self {
        Self {
            seed: self.seed ^ 0x5eed_0ff5_e7ed_a7a5,
            ..self.clone()
        }
    }

    pub fn pairs(&self, g: &ActionGroupoid) -> Result<Vec<(Arrow, Arrow)>, GroupoidError> {
        match &self.strategy {
            SamplingStrategy::Grid {
                group_resolution,
                base_resolution,
            } => grid_pairs(g, *group_resolution, *base_resolution, self.seed),
            _ => Ok((0..self.count).map(|i| self.pair(g, i)).collect()),
        }
    }

    /// Pair number `index` of the random and low-discrepancy strategies.
    ///
    /// # Panics
    /// For the grid strategy, which has no per-index form.
    pub fn pair(&self, g: &ActionGroupoid, index: usize) -> (Arrow, Arrow) {
        let (x, k, h) = match &self.strategy {
            SamplingStrategy::Random => {
                let mut rng = stream_rng(self.seed, index as u64);
                let x = g.sample_base(&mut rng);
                let k = g.group().random_element(&mut rng);
                let h = g.group().random_element(&mut rng);
                (x, k, h)
            }
            SamplingStrategy::LowDiscrepancy => {
                let i = index as u64 + 1 + (self.seed % 1024);
                let mut rng = stream_rng(self.seed, index as u64);
                let d = g.base_dim();
                let halton =
                    |slot: usize| radical_inverse(i, HALTON_BASES[slot % HALTON_BASES.len()]);
                let x = cube_to_ball(
                    &(0..d).map(|s| 2.0 * halton(s) - 1.0).collect::<Vec<_>>(),
                    g.radius(),
                );
                let k = halton_element(g.group(), d, &halton, &mut rng);
                let h = halton_element(g.group(), d + 4, &halton, &mut rng);
                (x, k, h)
            }
            SamplingStrategy::Grid { .. } => panic!("grid samplers have no per-index pairs"),
        };
        let q = Arrow { g: k, x };
        let p = Arrow {
            g: h,
            x: g.target(&q),
        };
        (p, q)
    }
}

/// Radial map of the cube `[-1,1]^d` onto the ball of radius `r`.
fn cube_to_ball(c: &[f64], r: f64) -> Point {
    let inf = c.iter().fold(0.0, |m: f64, v| m.max(Float::abs(*v)));
    let two = Float::sqrt(c.iter().map(|v| v * v).sum::<f64>());
    if two == 0.0 {
        return c.iter().copied().collect();
    }
    c.iter().map(|v| r * v * inf / two).collect()
}

fn halton_element<R: Rng + ?Sized>(
    group: &CompactGroup,
    offset: usize,
    halton: &impl Fn(usize) -> f64,
    rng: &mut R,
) -> GroupElement {
    match &group.kind {
        GroupKind::Torus(n) => GroupElement::Torus(
            (0..*n)
                .map(|s| {
                    let a = TAU * halton(offset + s);
                    if a > core::f64::consts::PI {
                        a - TAU
                    } else {
                        a
                    }
                })
                .collect(),
        ),
        GroupKind::SpecialUnitary(2) | GroupKind::SpecialOrthogonal(3) => {
            let (t, a, b) = (
                halton(offset),
                TAU * halton(offset + 1),
                TAU * halton(offset + 2),
            );
            let (st, ct) = (Float::sqrt(t), Float::sqrt(1.0 - t));
            let q = [
                st * Float::cos(a),
                st * Float::sin(a),
                ct * Float::cos(b),
                ct * Float::sin(b),
            ];
            if matches!(group.kind, GroupKind::SpecialUnitary(2)) {
                GroupElement::Unitary(quaternion::to_su2(&q))
            } else {
                GroupElement::Orthogonal(quaternion::to_so3(&q))
            }
        }
        _ => group.random_element(rng),
    }
}

fn grid_pairs(
    g: &ActionGroupoid,
    group_resolution: usize,
    base_resolution: usize,
    seed: u64,
) -> Result<Vec<(Arrow, Arrow)>, GroupoidError> {
    let rule = haar_nodes(g.group(), group_resolution, seed)?;
    let points = lattice_in_ball(g.base_dim(), base_resolution, g.radius());
    let mut out = Vec::with_capacity(rule.len() * rule.len() * points.len());
    for x in &points {
        for k in &rule.nodes {
            let q = Arrow {
                g: k.clone(),
                x: x.clone(),
            };
            let tq = g.target(&q);
            for h in &rule.nodes {
                out.push((
                    Arrow {
                        g: h.clone(),
                        x: tq.clone(),
                    },
                    q.clone(),
                ));
            }
        }
    }
    Ok(out)
}

/// Points of the cubic lattice with `resolution` points per axis on
/// `[-r, r]` that fall inside the ball of radius `r`.
pub fn lattice_in_ball(dim: usize, resolution: usize, r: f64) -> Vec<Point> {
    if dim == 0 {
        return alloc::vec![Point::new()];
    }
    let n = resolution.max(1);
    let coord = |i: usize| {
        if n == 1 {
            0.0
        } else {
            -r + 2.0 * r * i as f64 / (n - 1) as f64
        }
    };
    let total = n.pow(dim as u32);
    let mut out = Vec::new();
    for mut idx in 0..total {
        let mut p = Point::new();
        for _ in 0..dim {
            p.push(coord(idx % n));
            idx /= n;
        }
        if Float::sqrt(p.iter().map(|v| v * v).sum::<f64>()) <= r * (1.0 + 1e-12) {
            out.push(p);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groupoid::{ActionSpec, LinearRep};

    fn groupoid() -> ActionGroupoid {
        ActionGroupoid::new(
            CompactGroup::su(2),
            ActionSpec::linear(LinearRep::Adjoint),
            0.5,
        )
        .unwrap()
    }

    #[test]
    fn pairs_are_composable_by_construction() {
        let g = groupoid();
        for s in [
            ComposablePairSampler::random(3, 50),
            ComposablePairSampler::low_discrepancy(3, 50),
        ] {
            for (p, q) in s.pairs(&g).unwrap() {
                assert_eq!(p.x, g.target(&q));
                assert!(g.compose(&p, &q).is_ok());
                assert!(g.in_ball(&q.x, 1.0));
            }
        }
    }

    #[test]
    fn nested_prefixes_and_determinism() {
        let g = groupoid();
        let s = ComposablePairSampler::random(9, 40);
        let small = s.with_count(20).pairs(&g).unwrap();
        let large = s.pairs(&g).unwrap();
        assert_eq!(&large[..20], &small[..]);
        assert_eq!(large, s.pairs(&g).unwrap());
        assert_ne!(s.held_out().pairs(&g).unwrap()[0], large[0]);
    }

    #[test]
    fn grid_enumerates_everything() {
        let g = ActionGroupoid::new(
            CompactGroup::torus(1),
            ActionSpec::linear(LinearRep::TorusCharges(vec![vec![1]])),
            1.0,
        )
        .unwrap();
        let s = ComposablePairSampler {
            seed: 0,
            count: 0,
            strategy: SamplingStrategy::Grid {
                group_resolution: 4,
                base_resolution: 3,
            },
        };
        let pairs = s.pairs(&g).unwrap();
        // 5 lattice points of the 3x3 grid lie in the unit disk.
        assert_eq!(pairs.len(), 4 * 4 * 5);
    }

    #[test]
    fn cube_map_stays_in_ball() {
        for c in [[1.0, 1.0], [-1.0, 0.3], [0.2, -0.1]] {
            let p = cube_to_ball(&c, 0.5);
            assert!(p.iter().map(|v| v * v).sum::<f64>().sqrt() <= 0.5 + 1e-15);
        }
    }
}
