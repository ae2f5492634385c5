//! Group arithmetic used inside the averaging tables: a quaternion fast
//! path for SU(2) and a generic path through [`CompactGroup`].

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::f64::consts::SQRT_2;

use num_traits::Float;

use crate::lie::{
    quaternion, AlgebraVector, CompactGroup, GroupElement, GroupKind, CUT_LOCUS_TOLERANCE,
    SATURATED_DISTANCE,
};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Elem {
    Quat([f64; 4]),
    General(Box<GroupElement>),
}

#[derive(Debug, Clone)]
pub(crate) enum Engine {
    /// Unit quaternions; coordinates are the pure part of the logarithm.
    Su2 { scale: f64 },
    /// Unit quaternions modulo sign; coordinates are the rotation vector.
    So3 { scale: f64 },
    General {
        group: CompactGroup,
        basis: Vec<AlgebraVector>,
    },
}

impl Engine {
    pub fn new(group: &CompactGroup) -> Self {
        match group.kind {
            GroupKind::SpecialUnitary(2) => Self::Su2 {
                scale: group.metric_scale,
            },
            GroupKind::SpecialOrthogonal(3) => Self::So3 {
                scale: group.metric_scale,
            },
            _ => Self::General {
                group: group.clone(),
                basis: group.algebra_basis(),
            },
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Su2 { .. } | Self::So3 { .. } => 3,
            Self::General { basis, .. } => basis.len(),
        }
    }

    pub fn lift(&self, g: &GroupElement) -> Elem {
        match self {
            Self::Su2 { .. } => {
                let u = g.as_unitary().expect("SU(2) element");
                Elem::Quat(quaternion::normalize(&quaternion::from_su2(u)))
            }
            Self::So3 { .. } => Elem::Quat(quaternion::from_so3(
                g.as_orthogonal().expect("SO(3) element"),
            )),
            Self::General { .. } => Elem::General(Box::new(g.clone())),
        }
    }

    pub fn lower(&self, e: &Elem) -> GroupElement {
        match (self, e) {
            (Self::So3 { .. }, Elem::Quat(q)) => GroupElement::Orthogonal(quaternion::to_so3(q)),
            (_, Elem::Quat(q)) => GroupElement::Unitary(quaternion::to_su2(q)),
            (_, Elem::General(g)) => (**g).clone(),
        }
    }

    #[inline]
    pub fn mul(&self, a: &Elem, b: &Elem) -> Elem {
        match (self, a, b) {
            (Self::Su2 { .. } | Self::So3 { .. }, Elem::Quat(x), Elem::Quat(y)) => {
                Elem::Quat(quaternion::mul(x, y))
            }
            (Self::General { group, .. }, Elem::General(x), Elem::General(y)) => {
                Elem::General(Box::new(group.mul(x, y)))
            }
            _ => unreachable!("mixed element representations"),
        }
    }

    #[inline]
    pub fn inv(&self, a: &Elem) -> Elem {
        match (self, a) {
            (Self::Su2 { .. } | Self::So3 { .. }, Elem::Quat(q)) => {
                Elem::Quat([q[0], -q[1], -q[2], -q[3]])
            }
            (Self::General { group, .. }, Elem::General(g)) => {
                Elem::General(Box::new(group.inv(g)))
            }
            _ => unreachable!("mixed element representations"),
        }
    }

    /// Writes the logarithm coordinates of `e` into `out`; `Err` carries the
    /// distance to the cut locus when `e` is outside the chart.
    #[inline]
    pub fn log_into(&self, e: &Elem, out: &mut [f64]) -> Result<(), f64> {
        match (self, e) {
            (Self::Su2 { .. }, Elem::Quat(q)) => {
                let s = Float::sqrt(q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
                let theta = Float::atan2(s, q[0]);
                let distance = 2.0 * Float::abs(Float::cos(0.5 * theta));
                if distance < CUT_LOCUS_TOLERANCE {
                    return Err(distance);
                }
                let f = if s < 1e-300 { 1.0 } else { theta / s };
                out[0] = f * q[1];
                out[1] = f * q[2];
                out[2] = f * q[3];
                Ok(())
            }
            (Self::So3 { .. }, Elem::Quat(q)) => {
                let (alpha, axis) = rotation(q);
                let distance = 2.0 * Float::abs(Float::cos(0.5 * alpha));
                if distance < CUT_LOCUS_TOLERANCE {
                    return Err(distance);
                }
                out[..3].copy_from_slice(&[alpha * axis[0], alpha * axis[1], alpha * axis[2]]);
                Ok(())
            }
            (Self::General { group, basis }, Elem::General(g)) => {
                let v = group.log(g).map_err(|e| match e {
                    crate::lie::LieError::CutLocus { distance } => distance,
                    _ => 0.0,
                })?;
                for (o, b) in out.iter_mut().zip(basis) {
                    *o = group.inner(b, &v);
                }
                Ok(())
            }
            _ => unreachable!("mixed element representations"),
        }
    }

    pub fn exp_of(&self, c: &[f64]) -> Elem {
        match self {
            Self::Su2 { .. } => {
                let t = Float::sqrt(c[0] * c[0] + c[1] * c[1] + c[2] * c[2]);
                let f = if t < 1e-4 {
                    1.0 - t * t / 6.0
                } else {
                    Float::sin(t) / t
                };
                Elem::Quat([Float::cos(t), f * c[0], f * c[1], f * c[2]])
            }
            Self::So3 { .. } => {
                let t = 0.5 * Float::sqrt(c[0] * c[0] + c[1] * c[1] + c[2] * c[2]);
                let f = 0.5
                    * if t < 1e-4 {
                        1.0 - t * t / 6.0
                    } else {
                        Float::sin(t) / t
                    };
                Elem::Quat([Float::cos(t), f * c[0], f * c[1], f * c[2]])
            }
            Self::General { group, basis } => {
                let v = basis
                    .iter()
                    .zip(c)
                    .fold(group.zero_algebra(), |acc, (b, x)| acc.add(&b.scale(*x)));
                Elem::General(Box::new(group.exp(&v)))
            }
        }
    }

    /// Bi-invariant distance of `e` to the identity.
    pub fn dist_id(&self, e: &Elem) -> f64 {
        match (self, e) {
            (Self::Su2 { scale }, Elem::Quat(q)) => {
                // |X|_F = sqrt(2) * theta for the SU(2) logarithm.
                let s = Float::sqrt(q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
                let theta = Float::atan2(s, q[0]);
                let distance = 2.0 * Float::abs(Float::cos(0.5 * theta));
                if distance < CUT_LOCUS_TOLERANCE {
                    SATURATED_DISTANCE
                } else {
                    scale * SQRT_2 * theta
                }
            }
            (Self::So3 { scale }, Elem::Quat(q)) => {
                let (alpha, _) = rotation(q);
                if 2.0 * Float::abs(Float::cos(0.5 * alpha)) < CUT_LOCUS_TOLERANCE {
                    SATURATED_DISTANCE
                } else {
                    scale * SQRT_2 * alpha
                }
            }
            (Self::General { group, .. }, Elem::General(g)) => group.dist_to_identity(g),
            _ => unreachable!("mixed element representations"),
        }
    }

    pub fn dist(&self, a: &Elem, b: &Elem) -> f64 {
        self.dist_id(&self.mul(&self.inv(a), b))
    }

    /// One averaging update `exp(sum_k w_k c_k) * cur`, where `terms`
    /// holds the coordinates `c_k` row by row. Returns the correction and
    /// the new value.
    pub fn average_update(&self, terms: &mut [f64], weights: &[f64], cur: &Elem) -> (Elem, Elem) {
        let d = self.dim();
        for (row, w) in terms.chunks_mut(d).zip(weights) {
            row.iter_mut().for_each(|v| *v *= w);
        }
        let mut acc = [0.0f64; 16];
        let mut heap;
        let sum: &mut [f64] = if d <= 16 {
            &mut acc[..d]
        } else {
            heap = alloc::vec![0.0; d];
            &mut heap
        };
        pairwise_rows(terms, d, sum);
        let psi = self.exp_of(sum);
        let next = self.mul(&psi, cur);
        (psi, next)
    }
}

/// Rotation angle in `[0, pi]` and unit axis of the rotation `q` represents.
fn rotation(q: &[f64; 4]) -> (f64, [f64; 3]) {
    let sign = if q[0] < 0.0 { -1.0 } else { 1.0 };
    let s = Float::sqrt(q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
    let alpha = 2.0 * Float::atan2(s, sign * q[0]);
    if s < 1e-300 {
        return (0.0, [0.0; 3]);
    }
    let f = sign / s;
    (alpha, [f * q[1], f * q[2], f * q[3]])
}

/// Column sums of a row-major `n x d` block by pairwise halving.
pub(crate) fn pairwise_rows(rows: &[f64], d: usize, out: &mut [f64]) {
    let n = rows.len() / d;
    if n <= 8 {
        out.iter_mut().for_each(|v| *v = 0.0);
        for row in rows.chunks(d) {
            for (o, v) in out.iter_mut().zip(row) {
                *o += v;
            }
        }
        return;
    }
    let half = n / 2;
    let mut right = [0.0f64; 16];
    let mut heap;
    let r: &mut [f64] = if d <= 16 {
        &mut right[..d]
    } else {
        heap = alloc::vec![0.0; d];
        &mut heap
    };
    pairwise_rows(&rows[..half * d], d, out);
    pairwise_rows(&rows[half * d..], d, r);
    for (o, v) in out.iter_mut().zip(r.iter()) {
        *o += v;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    #[test]
    fn quaternion_engine_agrees_with_matrices() {
        let g = CompactGroup::su(2);
        let fast = Engine::new(&g);
        let slow = Engine::General {
            group: g.clone(),
            basis: g.algebra_basis(),
        };
        let mut rng = stream_rng(31, 0);
        for _ in 0..50 {
            let a = g.random_element(&mut rng);
            let b = g.random_near_identity(&mut rng, 0.9);
            let (fa, fb) = (fast.lift(&a), fast.lift(&b));
            let prod = fast.lower(&fast.mul(&fa, &fb));
            assert!(g.dist(&prod, &g.mul(&a, &b)) < 1e-13);
            assert!((fast.dist_id(&fb) - g.dist_to_identity(&b)).abs() < 1e-12);
            let mut c = [0.0; 3];
            fast.log_into(&fb, &mut c).unwrap();
            let back = fast.lower(&fast.exp_of(&c));
            assert!(g.dist(&back, &b) < 1e-12);
            let mut s = [0.0; 3];
            slow.log_into(&slow.lift(&b), &mut s).unwrap();
            let back2 = slow.lower(&slow.exp_of(&s));
            assert!(g.dist(&back2, &b) < 1e-12);
            // Both coordinate systems are isometric to the scaled norm up to a common factor.
            let nf = c.iter().map(|v| v * v).sum::<f64>().sqrt() * SQRT_2 * g.metric_scale;
            let ns = s.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((nf - ns).abs() < 1e-12);
        }
        let minus = fast.lift(&GroupElement::Unitary(
            crate::linalg::CMat::identity(2).scale(crate::linalg::C64::new(-1.0, 0.0)),
        ));
        assert_eq!(fast.dist_id(&minus), SATURATED_DISTANCE);
        assert!(fast.log_into(&minus, &mut [0.0; 3]).is_err());
    }

    #[test]
    fn so3_engine_agrees_with_matrices() {
        let g = CompactGroup::so(3);
        let fast = Engine::new(&g);
        let mut rng = stream_rng(32, 0);
        for _ in 0..50 {
            let a = g.random_element(&mut rng);
            let b = g.random_near_identity(&mut rng, 0.9);
            let (fa, fb) = (fast.lift(&a), fast.lift(&b));
            assert!(g.dist(&fast.lower(&fa), &a) < 1e-13);
            let prod = fast.lower(&fast.mul(&fa, &fb));
            assert!(g.dist(&prod, &g.mul(&a, &b)) < 1e-13);
            let ab = fast.mul(&fa, &fb);
            assert!((fast.dist_id(&ab) - g.dist_to_identity(&g.mul(&a, &b))).abs() < 1e-12);
            let mut c = [0.0; 3];
            fast.log_into(&fb, &mut c).unwrap();
            assert!(g.dist(&fast.lower(&fast.exp_of(&c)), &b) < 1e-12);
            let inv = fast.lower(&fast.inv(&fa));
            assert!(g.dist(&inv, &g.inv(&a)) < 1e-13);
        }
    }

    #[test]
    fn pairwise_rows_sums_columns() {
        let rows: Vec<f64> = (0..40).map(|i| i as f64).collect();
        let mut out = [0.0; 2];
        pairwise_rows(&rows, 2, &mut out);
        assert_eq!(out, [380.0, 400.0]);
    }
}
