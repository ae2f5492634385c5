use alloc::vec::Vec;

use num_traits::Float;

use super::MomentumError;
use crate::lie::{CompactGroup, GroupKind};
use crate::linalg::{herm_eigenvalues, sym_eigen, CMat, RMat};

/// An element of the dual of the Lie algebra in the matrix model of its group.
#[derive(Debug, Clone, PartialEq)]
pub enum CoadjointElement {
    /// Hermitian traceless, for `SU(n)`.
    Hermitian(CMat),
    /// Antisymmetric, for `SO(n)`.
    Antisymmetric(RMat),
    /// For tori.
    Vector(Vec<f64>),
}

/// Pfaffian of an antisymmetric matrix by pivoted elimination.
pub fn pfaffian(a: &RMat) -> f64 {
    let n = a.rows();
    if n % 2 == 1 {
        return 0.0;
    }
    let mut m = a.clone();
    let mut pf = 1.0;
    let mut k = 0;
    while k + 1 < n {
        let piv = (k + 1..n)
            .max_by(|&i, &j| Float::abs(m[(k, i)]).total_cmp(&Float::abs(m[(k, j)])))
            .expect("nonempty");
        if piv != k + 1 {
            for c in 0..n {
                let t = m[(k + 1, c)];
                m[(k + 1, c)] = m[(piv, c)];
                m[(piv, c)] = t;
            }
            for r in 0..n {
                let t = m[(r, k + 1)];
                m[(r, k + 1)] = m[(r, piv)];
                m[(r, piv)] = t;
            }
            pf = -pf;
        }
        let p = m[(k, k + 1)];
        if p == 0.0 {
            return 0.0;
        }
        pf *= p;
        // Eliminate row/column k + 1 from the trailing block.
        for i in k + 2..n {
            let tau = m[(k, i)] / p;
            for j in k + 2..n {
                let d = m[(k + 1, i)] * m[(k, j)] / p - tau * m[(k + 1, j)];
                m[(i, j)] += d;
            }
        }
        k += 2;
    }
    pf
}

/// The representative of the coadjoint orbit of `xi` in the closed positive
/// Weyl chamber: the top `n - 1` eigenvalues of `xi` for `SU(n)` in
/// decreasing order, the rotation rates `a_1 >= ... >= a_m` for `SO(n)` (the
/// last one signed by the Pfaffian when `n` is even), and `xi` itself for tori.
pub fn weyl_project(
    group: &CompactGroup,
    xi: &CoadjointElement,
) -> Result<Vec<f64>, MomentumError> {
    let wrong = |m: &str| Err(MomentumError::WrongShape(m.into()));
    match (&group.kind, xi) {
        (GroupKind::SpecialUnitary(n), CoadjointElement::Hermitian(h)) => {
            let n = *n;
            if h.rows() != n || h.cols() != n {
                return wrong("matrix size does not match SU(n)");
            }
            let scale = 1.0 + h.max_abs();
            if h.max_abs_diff(&h.adjoint()) > 1e-9 * scale
                || Float::abs(h.trace().re) > 1e-9 * scale
                || Float::abs(h.trace().im) > 1e-9 * scale
            {
                return wrong("SU(n) needs a Hermitian traceless matrix");
            }
            let mut w = herm_eigenvalues(h);
            w.reverse();
            w.truncate(n.saturating_sub(1));
            Ok(w)
        }
        (GroupKind::SpecialOrthogonal(n), CoadjointElement::Antisymmetric(x)) => {
            let n = *n;
            if x.rows() != n || x.cols() != n {
                return wrong("matrix size does not match SO(n)");
            }
            if x.max_abs_diff(&x.transpose().scale(-1.0)) > 1e-9 * (1.0 + x.max_abs()) {
                return wrong("SO(n) needs an antisymmetric matrix");
            }
            let (w, _) = sym_eigen(&x.transpose().matmul(x));
            let w: Vec<f64> = w.into_iter().rev().collect();
            let m = n / 2;
            let mut a: Vec<f64> = (0..m)
                .map(|j| Float::sqrt(0.5 * (w[2 * j] + w[2 * j + 1]).max(0.0)))
                .collect();
            if n % 2 == 0 && m > 0 && pfaffian(x) < 0.0 {
                a[m - 1] = -a[m - 1];
            }
            Ok(a)
        }
        (GroupKind::Torus(n), CoadjointElement::Vector(v)) => {
            if v.len() != *n {
                return wrong("vector length does not match the torus");
            }
            Ok(v.clone())
        }
        _ => wrong("element does not belong to the dual of this group's algebra"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::C64;

    #[test]
    fn pfaffian_of_four_by_four() {
        let (a12, a13, a14, a23, a24, a34) = (1.0, 2.0, -0.5, 0.3, 1.7, -2.2);
        let m = RMat::from_row_major(
            4,
            4,
            &[
                0.0, a12, a13, a14, -a12, 0.0, a23, a24, -a13, -a23, 0.0, a34, -a14, -a24, -a34,
                0.0,
            ],
        );
        let expect = a12 * a34 - a13 * a24 + a14 * a23;
        assert!((pfaffian(&m) - expect).abs() < 1e-14);
        assert!((pfaffian(&m).powi(2) - m.determinant()).abs() < 1e-12);
    }

    #[test]
    fn su2_spectrum_is_sorted() {
        let h = CMat::from_row_major(
            2,
            2,
            &[
                C64::new(0.0, 0.0),
                C64::new(0.7, 0.0),
                C64::new(0.7, 0.0),
                C64::new(0.0, 0.0),
            ],
        );
        let w = weyl_project(&CompactGroup::su(2), &CoadjointElement::Hermitian(h)).unwrap();
        assert!((w[0] - 0.7).abs() < 1e-14);
    }

    #[test]
    fn shapes_are_checked() {
        let t = CompactGroup::torus(2);
        assert_eq!(
            weyl_project(&t, &CoadjointElement::Vector(vec![1.0, -2.0])).unwrap(),
            vec![1.0, -2.0]
        );
        assert!(weyl_project(&t, &CoadjointElement::Vector(vec![1.0])).is_err());
        let sym = RMat::from_row_major(3, 3, &[0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(weyl_project(&CompactGroup::so(3), &CoadjointElement::Antisymmetric(sym)).is_err());
        let h = CMat::identity(3);
        assert!(weyl_project(&CompactGroup::su(3), &CoadjointElement::Hermitian(h)).is_err());
    }

    #[test]
    fn so4_keeps_the_pfaffian_sign() {
        let x = |s: f64| {
            RMat::from_row_major(
                4,
                4,
                &[
                    0.0, 2.0, 0.0, 0.0, -2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, s, 0.0, 0.0, -s, 0.0,
                ],
            )
        };
        let g = CompactGroup::so(4);
        let a = weyl_project(&g, &CoadjointElement::Antisymmetric(x(0.5))).unwrap();
        let b = weyl_project(&g, &CoadjointElement::Antisymmetric(x(-0.5))).unwrap();
        assert!((a[0] - 2.0).abs() < 1e-14 && (a[1] - 0.5).abs() < 1e-14);
        assert!((b[1] + 0.5).abs() < 1e-14);
    }
}
