use alloc::vec::Vec;

use num_traits::Float;
use rand::Rng;

use super::MomentumError;
use crate::linalg::{sym_eigen, sym_fn, RMat};

/// `J = [[0, I], [-I, 0]]` on `R^{2k}` with coordinates `(x_1..x_k, y_1..y_k)`.
pub fn symplectic_form(k: usize) -> RMat {
    RMat::from_fn(2 * k, 2 * k, |i, j| {
        if j == i + k {
            1.0
        } else if i == j + k {
            -1.0
        } else {
            0.0
        }
    })
}

/// `H(z) = z^T S z / 2` with `S` symmetric positive definite.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticHamiltonian {
    s: RMat,
}

impl QuadraticHamiltonian {
    pub fn new(s: RMat) -> Result<Self, MomentumError> {
        if !s.is_square() || s.rows() % 2 == 1 || s.rows() == 0 {
            return Err(MomentumError::WrongShape("S must be 2k x 2k".into()));
        }
        if !s.is_symmetric(1e-12 * (1.0 + s.max_abs())) {
            return Err(MomentumError::WrongShape("S must be symmetric".into()));
        }
        let (w, _) = sym_eigen(&s);
        if !(w[0] > 0.0) {
            return Err(MomentumError::NotPositiveDefinite {
                min_eigenvalue: w[0],
            });
        }
        Ok(Self { s })
    }

    /// `diag(l_1..l_k, l_1..l_k)`, the normal form with frequencies `l`.
    pub fn diagonal(freq: &FrequencyTuple) -> Self {
        let l = freq.values();
        let k = l.len();
        Self {
            s: RMat::diag(&(0..2 * k).map(|i| l[i % k]).collect::<Vec<_>>()),
        }
    }

    pub fn matrix(&self) -> &RMat {
        &self.s
    }

    pub fn degrees_of_freedom(&self) -> usize {
        self.s.rows() / 2
    }

    /// `M^T S M`.
    pub fn congruent(&self, m: &RMat) -> Result<Self, MomentumError> {
        let t = m.transpose().matmul(&self.s).matmul(m);
        let sym = t.add(&t.transpose()).scale(0.5);
        Self::new(sym)
    }

    pub fn sum(&self, other: &Self) -> Result<Self, MomentumError> {
        if self.s.rows() != other.s.rows() {
            return Err(MomentumError::WrongShape(
                "Hamiltonians of different size".into(),
            ));
        }
        Self::new(self.s.add(&other.s))
    }
}

/// Positive frequencies in nondecreasing order; ties are kept.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "Vec<f64>", into = "Vec<f64>"))]
pub struct FrequencyTuple(Vec<f64>);

impl FrequencyTuple {
    pub fn new(values: Vec<f64>) -> Result<Self, MomentumError> {
        if values.is_empty() {
            return Err(MomentumError::InvalidTuple("empty".into()));
        }
        if values.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(MomentumError::InvalidTuple(
                "frequencies must be positive".into(),
            ));
        }
        if values.windows(2).any(|w| w[1] < w[0]) {
            return Err(MomentumError::InvalidTuple(
                "frequencies must be sorted".into(),
            ));
        }
        Ok(Self(values))
    }

    pub fn sorted(mut values: Vec<f64>) -> Result<Self, MomentumError> {
        values.sort_by(f64::total_cmp);
        Self::new(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<f64>> for FrequencyTuple {
    type Error = MomentumError;
    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<FrequencyTuple> for Vec<f64> {
    fn from(f: FrequencyTuple) -> Self {
        f.0
    }
}

/// Symplectic eigenvalues of `S`: the moduli of the eigenvalues `+-i l_j`
/// of `J S`. They are read off `A = S^{1/2} J S^{1/2}`, which is
/// antisymmetric with the same spectrum, through the doubled spectrum of
/// the symmetric matrix `A^T A`.
pub fn symplectic_spectrum(h: &QuadraticHamiltonian) -> FrequencyTuple {
    let k = h.degrees_of_freedom();
    let root = sym_fn(&h.s, |v| Float::sqrt(v.max(0.0)));
    let a = root.matmul(&symplectic_form(k)).matmul(&root);
    let (w, _) = sym_eigen(&a.transpose().matmul(&a));
    let freq = w
        .chunks(2)
        .map(|p| Float::sqrt((0.5 * (p[0] + p[1])).max(0.0)))
        .collect();
    FrequencyTuple::sorted(freq).expect("positive definite input has positive frequencies")
}

/// `exp(J R)` with `R` symmetric, entries uniform in `[-c, c]`.
pub fn random_symplectic<R: Rng + ?Sized>(k: usize, c: f64, rng: &mut R) -> RMat {
    let n = 2 * k;
    let mut r = RMat::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = c * (2.0 * rng.gen::<f64>() - 1.0);
            r[(i, j)] = v;
            r[(j, i)] = v;
        }
    }
    symplectic_form(k).matmul(&r).expm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    #[test]
    fn identity_has_unit_frequencies() {
        let f = symplectic_spectrum(&QuadraticHamiltonian::new(RMat::identity(6)).unwrap());
        assert!(f.values().iter().all(|v| (v - 1.0).abs() < 1e-14));
    }

    #[test]
    fn diag_one_four_has_frequency_two() {
        let f = symplectic_spectrum(&QuadraticHamiltonian::new(RMat::diag(&[1.0, 4.0])).unwrap());
        assert!((f.values()[0] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn random_symplectic_preserves_j() {
        let mut rng = stream_rng(4, 0);
        let m = random_symplectic(3, 1.0, &mut rng);
        let j = symplectic_form(3);
        assert!(m.transpose().matmul(&j).matmul(&m).max_abs_diff(&j) < 1e-12);
    }

    #[test]
    fn validation() {
        assert!(matches!(
            QuadraticHamiltonian::new(RMat::diag(&[1.0, -1.0])),
            Err(MomentumError::NotPositiveDefinite { .. })
        ));
        assert!(QuadraticHamiltonian::new(RMat::identity(3)).is_err());
        assert!(
            QuadraticHamiltonian::new(RMat::from_row_major(2, 2, &[1.0, 0.5, 0.4, 1.0])).is_err()
        );
        assert!(FrequencyTuple::new(vec![2.0, 1.0]).is_err());
        assert!(FrequencyTuple::new(vec![0.0]).is_err());
        assert_eq!(
            FrequencyTuple::sorted(vec![2.0, 1.0, 2.0])
                .unwrap()
                .values(),
            &[1.0, 2.0, 2.0]
        );
    }
}
