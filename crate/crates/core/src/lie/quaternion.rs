//! Unit quaternions as coordinates on SU(2) and, through the double cover,
//! on SO(3).

use num_traits::Float;

use crate::linalg::{CMat, RMat, C64};

/// `w + x i + y j + z k`, stored as `[w, x, y, z]`.
pub type Quat = [f64; 4];

pub fn mul(a: &Quat, b: &Quat) -> Quat {
    [
        a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
        a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
        a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
        a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0],
    ]
}

pub fn normalize(q: &Quat) -> Quat {
    let n = Float::sqrt(q.iter().map(|x| x * x).sum::<f64>());
    [q[0] / n, q[1] / n, q[2] / n, q[3] / n]
}

/// `a + b i + c j + d k` maps to `[[a + b i, c + d i], [-c + d i, a - b i]]`,
/// a group isomorphism onto SU(2).
pub fn to_su2(q: &Quat) -> CMat {
    CMat::from_row_major(
        2,
        2,
        &[
            C64::new(q[0], q[1]),
            C64::new(q[2], q[3]),
            C64::new(-q[2], q[3]),
            C64::new(q[0], -q[1]),
        ],
    )
}

/// Inverse of [`to_su2`] on SU(2) matrices.
pub fn from_su2(u: &CMat) -> Quat {
    let a = u[(0, 0)];
    let b = u[(0, 1)];
    [a.re, a.im, b.re, b.im]
}

/// Rotation matrix of the adjoint action of `q` on pure quaternions.
pub fn to_so3(q: &Quat) -> RMat {
    let [w, x, y, z] = *q;
    RMat::from_row_major(
        3,
        3,
        &[
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        ],
    )
}

/// A unit quaternion with [`to_so3`]`(q) = r`, chosen with `w >= 0`.
pub fn from_so3(r: &RMat) -> Quat {
    let m = |i: usize, j: usize| r[(i, j)];
    let tr = m(0, 0) + m(1, 1) + m(2, 2);
    // Pivot on the largest diagonal entry of the 4x4 symmetric form.
    let q = if tr >= m(0, 0) && tr >= m(1, 1) && tr >= m(2, 2) {
        let s = 2.0 * Float::sqrt(1.0 + tr);
        [
            0.25 * s,
            (m(2, 1) - m(1, 2)) / s,
            (m(0, 2) - m(2, 0)) / s,
            (m(1, 0) - m(0, 1)) / s,
        ]
    } else if m(0, 0) >= m(1, 1) && m(0, 0) >= m(2, 2) {
        let s = 2.0 * Float::sqrt(1.0 + m(0, 0) - m(1, 1) - m(2, 2));
        [
            (m(2, 1) - m(1, 2)) / s,
            0.25 * s,
            (m(0, 1) + m(1, 0)) / s,
            (m(0, 2) + m(2, 0)) / s,
        ]
    } else if m(1, 1) >= m(2, 2) {
        let s = 2.0 * Float::sqrt(1.0 + m(1, 1) - m(0, 0) - m(2, 2));
        [
            (m(0, 2) - m(2, 0)) / s,
            (m(0, 1) + m(1, 0)) / s,
            0.25 * s,
            (m(1, 2) + m(2, 1)) / s,
        ]
    } else {
        let s = 2.0 * Float::sqrt(1.0 + m(2, 2) - m(0, 0) - m(1, 1));
        [
            (m(1, 0) - m(0, 1)) / s,
            (m(0, 2) + m(2, 0)) / s,
            (m(1, 2) + m(2, 1)) / s,
            0.25 * s,
        ]
    };
    let q = normalize(&q);
    if q[0] < 0.0 {
        [-q[0], -q[1], -q[2], -q[3]]
    } else {
        q
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn su2_map_is_multiplicative() {
        let a = normalize(&[0.3, -0.2, 0.9, 0.1]);
        let b = normalize(&[-0.5, 0.4, 0.1, 0.7]);
        let lhs = to_su2(&mul(&a, &b));
        let rhs = to_su2(&a).matmul(&to_su2(&b));
        assert!(lhs.max_abs_diff(&rhs) < 1e-15);
        assert_eq!(from_su2(&to_su2(&a)), a);
    }

    #[test]
    fn so3_map_is_multiplicative_and_even() {
        let a = normalize(&[0.3, -0.2, 0.9, 0.1]);
        let b = normalize(&[-0.5, 0.4, 0.1, 0.7]);
        let lhs = to_so3(&mul(&a, &b));
        let rhs = to_so3(&a).matmul(&to_so3(&b));
        assert!(lhs.max_abs_diff(&rhs) < 1e-15);
        let neg = [-a[0], -a[1], -a[2], -a[3]];
        assert_eq!(to_so3(&a), to_so3(&neg));
    }

    #[test]
    fn so3_round_trip() {
        for q in [
            [0.3, -0.2, 0.9, 0.1],
            [0.01, 0.7, -0.7, 0.1],
            [0.0, 0.0, 1.0, 0.0],
            [0.2, 0.1, -0.3, -0.9],
        ] {
            let q = normalize(&q);
            let r = to_so3(&q);
            let back = from_so3(&r);
            assert!(to_so3(&back).max_abs_diff(&r) < 1e-14);
            assert!(back[0] >= 0.0);
        }
    }
}
