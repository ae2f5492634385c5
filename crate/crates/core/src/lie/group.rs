use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use num_traits::Float;
use rand::Rng;
use smallvec::SmallVec;

use super::{quaternion, LieError, CUT_LOCUS_TOLERANCE, INVARIANT_TOLERANCE, SATURATED_DISTANCE};
use crate::linalg::{herm_eigenvalues, herm_fn, CMat, RMat, C64};
use crate::rng::gaussian;

/// Default `kappa`: puts the cut locus of every supported factor at scaled
/// radius one or more.
pub const DEFAULT_METRIC_SCALE: f64 = 1.0 / PI;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum GroupKind {
    Torus(usize),
    SpecialUnitary(usize),
    SpecialOrthogonal(usize),
    Product(Vec<CompactGroup>),
}

/// A compact group together with the scale of its Ad-invariant norm.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CompactGroup {
    pub kind: GroupKind,
    pub metric_scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GroupElement {
    /// Angles in `(-pi, pi]`.
    Torus(SmallVec<[f64; 4]>),
    Unitary(CMat),
    Orthogonal(RMat),
    Product(Vec<GroupElement>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum AlgebraVector {
    Torus(SmallVec<[f64; 4]>),
    /// Skew-Hermitian, traceless.
    Unitary(CMat),
    /// Skew-symmetric.
    Orthogonal(RMat),
    Product(Vec<AlgebraVector>),
}

fn wrap_angle(a: f64) -> f64 {
    let w = a - TAU * Float::round(a / TAU);
    if w <= -PI {
        w + TAU
    } else {
        w
    }
}

fn shape_panic(op: &str) -> ! {
    panic!("{op}: element does not belong to this group")
}

impl AlgebraVector {
    pub fn add(&self, other: &Self) -> Self {
        match (self, other) {
            (Self::Torus(a), Self::Torus(b)) => {
                Self::Torus(a.iter().zip(b).map(|(x, y)| x + y).collect())
            }
            (Self::Unitary(a), Self::Unitary(b)) => Self::Unitary(a.add(b)),
            (Self::Orthogonal(a), Self::Orthogonal(b)) => Self::Orthogonal(a.add(b)),
            (Self::Product(a), Self::Product(b)) => {
                Self::Product(a.iter().zip(b).map(|(x, y)| x.add(y)).collect())
            }
            _ => shape_panic("algebra add"),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        match self {
            Self::Torus(a) => Self::Torus(a.iter().map(|x| x * s).collect()),
            Self::Unitary(a) => Self::Unitary(a.scale(C64::new(s, 0.0))),
            Self::Orthogonal(a) => Self::Orthogonal(a.scale(s)),
            Self::Product(a) => Self::Product(a.iter().map(|x| x.scale(s)).collect()),
        }
    }

    pub fn neg(&self) -> Self {
        self.scale(-1.0)
    }

    /// Largest absolute entry; unscaled.
    pub fn max_abs(&self) -> f64 {
        match self {
            Self::Torus(a) => a.iter().fold(0.0, |m, x| Float::max(m, Float::abs(*x))),
            Self::Unitary(a) => a.max_abs(),
            Self::Orthogonal(a) => a.max_abs(),
            Self::Product(a) => a.iter().fold(0.0, |m, x| Float::max(m, x.max_abs())),
        }
    }
}

impl CompactGroup {
    pub fn new(kind: GroupKind, metric_scale: f64) -> Result<Self, LieError> {
        let g = Self { kind, metric_scale };
        g.validate()?;
        Ok(g)
    }

    pub fn torus(n: usize) -> Self {
        Self {
            kind: GroupKind::Torus(n),
            metric_scale: DEFAULT_METRIC_SCALE,
        }
    }

    pub fn su(n: usize) -> Self {
        Self {
            kind: GroupKind::SpecialUnitary(n),
            metric_scale: DEFAULT_METRIC_SCALE,
        }
    }

    pub fn so(n: usize) -> Self {
        Self {
            kind: GroupKind::SpecialOrthogonal(n),
            metric_scale: DEFAULT_METRIC_SCALE,
        }
    }

    /// Product group. The factors keep their own metric scales, which fix
    /// the relative weighting; the product's own scale multiplies the total.
    pub fn product(factors: Vec<CompactGroup>) -> Self {
        Self {
            kind: GroupKind::Product(factors),
            metric_scale: 1.0,
        }
    }

    pub fn with_metric_scale(mut self, kappa: f64) -> Self {
        self.metric_scale = kappa;
        self
    }

    pub fn validate(&self) -> Result<(), LieError> {
        if !(self.metric_scale > 0.0 && self.metric_scale.is_finite()) {
            return Err(LieError::InvalidParameter(format!(
                "metric scale must be positive, got {}",
                self.metric_scale
            )));
        }
        match &self.kind {
            GroupKind::Torus(n) if *n == 0 => Err(LieError::InvalidParameter("torus(0)".into())),
            GroupKind::SpecialUnitary(n) if *n < 2 => {
                Err(LieError::InvalidParameter("SU(n) needs n >= 2".into()))
            }
            GroupKind::SpecialOrthogonal(n) if *n < 2 => {
                Err(LieError::InvalidParameter("SO(n) needs n >= 2".into()))
            }
            GroupKind::Product(fs) => {
                if fs.is_empty() {
                    return Err(LieError::InvalidParameter("empty product".into()));
                }
                fs.iter().try_for_each(|f| f.validate())
            }
            _ => Ok(()),
        }
    }

    /// Size of the defining matrices (the number of angles for a torus,
    /// the block-diagonal size for products).
    pub fn matrix_size(&self) -> usize {
        match &self.kind {
            GroupKind::Torus(n)
            | GroupKind::SpecialUnitary(n)
            | GroupKind::SpecialOrthogonal(n) => *n,
            GroupKind::Product(fs) => fs.iter().map(|f| f.matrix_size()).sum(),
        }
    }

    /// Dimension of a maximal torus.
    pub fn rank(&self) -> usize {
        match &self.kind {
            GroupKind::Torus(n) => *n,
            GroupKind::SpecialUnitary(n) => n - 1,
            GroupKind::SpecialOrthogonal(n) => n / 2,
            GroupKind::Product(fs) => fs.iter().map(|f| f.rank()).sum(),
        }
    }

    pub fn dimension(&self) -> usize {
        match &self.kind {
            GroupKind::Torus(n) => *n,
            GroupKind::SpecialUnitary(n) => n * n - 1,
            GroupKind::SpecialOrthogonal(n) => n * (n - 1) / 2,
            GroupKind::Product(fs) => fs.iter().map(|f| f.dimension()).sum(),
        }
    }

    pub fn is_abelian(&self) -> bool {
        match &self.kind {
            GroupKind::Torus(_) => true,
            GroupKind::SpecialOrthogonal(2) => true,
            GroupKind::SpecialUnitary(_) | GroupKind::SpecialOrthogonal(_) => false,
            GroupKind::Product(fs) => fs.iter().all(|f| f.is_abelian()),
        }
    }

    pub fn factors(&self) -> Option<&[CompactGroup]> {
        match &self.kind {
            GroupKind::Product(fs) => Some(fs),
            _ => None,
        }
    }

    pub fn identity(&self) -> GroupElement {
        match &self.kind {
            GroupKind::Torus(n) => GroupElement::Torus(core::iter::repeat_n(0.0, *n).collect()),
            GroupKind::SpecialUnitary(n) => GroupElement::Unitary(CMat::identity(*n)),
            GroupKind::SpecialOrthogonal(n) => GroupElement::Orthogonal(RMat::identity(*n)),
            GroupKind::Product(fs) => {
                GroupElement::Product(fs.iter().map(|f| f.identity()).collect())
            }
        }
    }

    pub fn zero_algebra(&self) -> AlgebraVector {
        match &self.kind {
            GroupKind::Torus(n) => AlgebraVector::Torus(core::iter::repeat_n(0.0, *n).collect()),
            GroupKind::SpecialUnitary(n) => AlgebraVector::Unitary(CMat::zeros(*n, *n)),
            GroupKind::SpecialOrthogonal(n) => AlgebraVector::Orthogonal(RMat::zeros(*n, *n)),
            GroupKind::Product(fs) => {
                AlgebraVector::Product(fs.iter().map(|f| f.zero_algebra()).collect())
            }
        }
    }

    pub fn mul(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        match (&self.kind, a, b) {
            (GroupKind::Torus(_), GroupElement::Torus(x), GroupElement::Torus(y)) => {
                GroupElement::Torus(x.iter().zip(y).map(|(p, q)| wrap_angle(p + q)).collect())
            }
            (GroupKind::SpecialUnitary(_), GroupElement::Unitary(x), GroupElement::Unitary(y)) => {
                GroupElement::Unitary(x.matmul(y))
            }
            (
                GroupKind::SpecialOrthogonal(_),
                GroupElement::Orthogonal(x),
                GroupElement::Orthogonal(y),
            ) => GroupElement::Orthogonal(x.matmul(y)),
            (GroupKind::Product(fs), GroupElement::Product(x), GroupElement::Product(y)) => {
                GroupElement::Product(
                    fs.iter()
                        .zip(x.iter().zip(y))
                        .map(|(f, (p, q))| f.mul(p, q))
                        .collect(),
                )
            }
            _ => shape_panic("mul"),
        }
    }

    pub fn inv(&self, g: &GroupElement) -> GroupElement {
        match (&self.kind, g) {
            (GroupKind::Torus(_), GroupElement::Torus(x)) => {
                GroupElement::Torus(x.iter().map(|p| wrap_angle(-p)).collect())
            }
            (GroupKind::SpecialUnitary(_), GroupElement::Unitary(x)) => {
                GroupElement::Unitary(x.adjoint())
            }
            (GroupKind::SpecialOrthogonal(_), GroupElement::Orthogonal(x)) => {
                GroupElement::Orthogonal(x.transpose())
            }
            (GroupKind::Product(fs), GroupElement::Product(x)) => {
                GroupElement::Product(fs.iter().zip(x).map(|(f, p)| f.inv(p)).collect())
            }
            _ => shape_panic("inv"),
        }
    }

    /// `a * b * c`.
    pub fn mul3(&self, a: &GroupElement, b: &GroupElement, c: &GroupElement) -> GroupElement {
        self.mul(&self.mul(a, b), c)
    }

    /// Scaled Ad-invariant norm.
    pub fn norm(&self, v: &AlgebraVector) -> f64 {
        self.metric_scale * self.raw_norm(v)
    }

    fn raw_norm(&self, v: &AlgebraVector) -> f64 {
        match (&self.kind, v) {
            (GroupKind::Torus(_), AlgebraVector::Torus(x)) => {
                Float::sqrt(x.iter().map(|p| p * p).sum::<f64>())
            }
            (GroupKind::SpecialUnitary(_), AlgebraVector::Unitary(x)) => x.frobenius_norm(),
            (GroupKind::SpecialOrthogonal(_), AlgebraVector::Orthogonal(x)) => x.frobenius_norm(),
            (GroupKind::Product(fs), AlgebraVector::Product(x)) => Float::sqrt(
                fs.iter()
                    .zip(x)
                    .map(|(f, p)| {
                        let n = f.norm(p);
                        n * n
                    })
                    .sum::<f64>(),
            ),
            _ => shape_panic("norm"),
        }
    }

    /// Checks the algebra invariants: skew-Hermitian (and traceless for su(n)).
    pub fn validate_algebra(&self, v: &AlgebraVector) -> Result<(), LieError> {
        match (&self.kind, v) {
            (GroupKind::Torus(n), AlgebraVector::Torus(x)) if x.len() == *n => {
                if x.iter().all(|p| p.is_finite()) {
                    Ok(())
                } else {
                    Err(LieError::MalformedAlgebraVector(
                        "non-finite angle rate".into(),
                    ))
                }
            }
            (GroupKind::SpecialUnitary(n), AlgebraVector::Unitary(x))
                if x.rows() == *n && x.cols() == *n =>
            {
                let skew = x.add(&x.adjoint()).frobenius_norm();
                let tr = x.trace();
                if skew > INVARIANT_TOLERANCE {
                    Err(LieError::MalformedAlgebraVector(format!(
                        "not skew-Hermitian (|X + X^H| = {skew:e})"
                    )))
                } else if Float::hypot(tr.re, tr.im) > INVARIANT_TOLERANCE {
                    Err(LieError::MalformedAlgebraVector(format!(
                        "not traceless (trace = {tr})"
                    )))
                } else {
                    Ok(())
                }
            }
            (GroupKind::SpecialOrthogonal(n), AlgebraVector::Orthogonal(x))
                if x.rows() == *n && x.cols() == *n =>
            {
                let skew = x.add(&x.transpose()).frobenius_norm();
                if skew > INVARIANT_TOLERANCE {
                    Err(LieError::MalformedAlgebraVector(format!(
                        "not skew-symmetric (|X + X^T| = {skew:e})"
                    )))
                } else {
                    Ok(())
                }
            }
            (GroupKind::Product(fs), AlgebraVector::Product(x)) if fs.len() == x.len() => fs
                .iter()
                .zip(x)
                .try_for_each(|(f, p)| f.validate_algebra(p)),
            _ => Err(LieError::MalformedAlgebraVector(
                "shape does not match the group".into(),
            )),
        }
    }

    /// Checks unitarity/orthogonality and unit determinant.
    pub fn validate_element(&self, g: &GroupElement) -> Result<(), LieError> {
        match (&self.kind, g) {
            (GroupKind::Torus(n), GroupElement::Torus(x)) if x.len() == *n => {
                if x.iter().all(|p| p.is_finite()) {
                    Ok(())
                } else {
                    Err(LieError::MalformedGroupElement("non-finite angle".into()))
                }
            }
            (GroupKind::SpecialUnitary(n), GroupElement::Unitary(u))
                if u.rows() == *n && u.cols() == *n =>
            {
                let dev = u
                    .adjoint()
                    .matmul(u)
                    .sub(&CMat::identity(*n))
                    .frobenius_norm();
                let det = u.determinant() - C64::new(1.0, 0.0);
                if dev > INVARIANT_TOLERANCE {
                    Err(LieError::MalformedGroupElement(format!(
                        "not unitary (|U^H U - I| = {dev:e})"
                    )))
                } else if Float::hypot(det.re, det.im) > INVARIANT_TOLERANCE {
                    Err(LieError::MalformedGroupElement(
                        "determinant is not one".into(),
                    ))
                } else {
                    Ok(())
                }
            }
            (GroupKind::SpecialOrthogonal(n), GroupElement::Orthogonal(r))
                if r.rows() == *n && r.cols() == *n =>
            {
                let dev = r
                    .transpose()
                    .matmul(r)
                    .sub(&RMat::identity(*n))
                    .frobenius_norm();
                if dev > INVARIANT_TOLERANCE {
                    Err(LieError::MalformedGroupElement(format!(
                        "not orthogonal (|R^T R - I| = {dev:e})"
                    )))
                } else if Float::abs(r.determinant() - 1.0) > INVARIANT_TOLERANCE {
                    Err(LieError::MalformedGroupElement(
                        "determinant is not one".into(),
                    ))
                } else {
                    Ok(())
                }
            }
            (GroupKind::Product(fs), GroupElement::Product(x)) if fs.len() == x.len() => fs
                .iter()
                .zip(x)
                .try_for_each(|(f, p)| f.validate_element(p)),
            _ => Err(LieError::MalformedGroupElement(
                "shape does not match the group".into(),
            )),
        }
    }

    /// Exponential map, after validating the input.
    pub fn group_exp(&self, v: &AlgebraVector) -> Result<GroupElement, LieError> {
        self.validate_algebra(v)?;
        Ok(self.exp(v))
    }

    /// Exponential map without input validation.
    pub fn exp(&self, v: &AlgebraVector) -> GroupElement {
        match (&self.kind, v) {
            (GroupKind::Torus(_), AlgebraVector::Torus(x)) => {
                GroupElement::Torus(x.iter().map(|p| wrap_angle(*p)).collect())
            }
            (GroupKind::SpecialUnitary(2), AlgebraVector::Unitary(x)) => {
                GroupElement::Unitary(su2_exp(x))
            }
            (GroupKind::SpecialUnitary(_), AlgebraVector::Unitary(x)) => {
                GroupElement::Unitary(x.expm())
            }
            (GroupKind::SpecialOrthogonal(3), AlgebraVector::Orthogonal(x)) => {
                GroupElement::Orthogonal(so3_exp(x))
            }
            (GroupKind::SpecialOrthogonal(_), AlgebraVector::Orthogonal(x)) => {
                GroupElement::Orthogonal(x.expm())
            }
            (GroupKind::Product(fs), AlgebraVector::Product(x)) => {
                GroupElement::Product(fs.iter().zip(x).map(|(f, p)| f.exp(p)).collect())
            }
            _ => shape_panic("exp"),
        }
    }

    /// Principal logarithm inside the injectivity chart.
    pub fn log(&self, g: &GroupElement) -> Result<AlgebraVector, LieError> {
        match (&self.kind, g) {
            (GroupKind::Torus(_), GroupElement::Torus(x)) => {
                let mut out = SmallVec::with_capacity(x.len());
                for &a in x {
                    let a = wrap_angle(a);
                    let distance = 2.0 * Float::abs(Float::cos(0.5 * a));
                    if distance < CUT_LOCUS_TOLERANCE {
                        return Err(LieError::CutLocus { distance });
                    }
                    out.push(a);
                }
                Ok(AlgebraVector::Torus(out))
            }
            (GroupKind::SpecialUnitary(2), GroupElement::Unitary(u)) => {
                su2_log(u).map(AlgebraVector::Unitary)
            }
            (GroupKind::SpecialUnitary(_), GroupElement::Unitary(u)) => {
                let x = special_unitary_log(u)?;
                let tr = x.trace();
                if Float::hypot(tr.re, tr.im) > 1e-8 {
                    return Err(LieError::LogBranch {
                        trace: Float::hypot(tr.re, tr.im),
                    });
                }
                Ok(AlgebraVector::Unitary(remove_trace(&x)))
            }
            (GroupKind::SpecialOrthogonal(3), GroupElement::Orthogonal(r)) => {
                so3_log(r).map(AlgebraVector::Orthogonal)
            }
            (GroupKind::SpecialOrthogonal(_), GroupElement::Orthogonal(r)) => {
                let x = unitary_log(&r.to_complex())?.real_part();
                Ok(AlgebraVector::Orthogonal(x.sub(&x.transpose()).scale(0.5)))
            }
            (GroupKind::Product(fs), GroupElement::Product(x)) => Ok(AlgebraVector::Product(
                fs.iter()
                    .zip(x)
                    .map(|(f, p)| f.log(p))
                    .collect::<Result<_, _>>()?,
            )),
            _ => shape_panic("log"),
        }
    }

    /// Logarithm after validating the input element.
    pub fn group_log(&self, g: &GroupElement) -> Result<AlgebraVector, LieError> {
        self.validate_element(g)?;
        self.log(g)
    }

    /// Bi-invariant distance `|log(g^-1 h)|`, saturated at 2 outside the chart.
    pub fn dist(&self, g: &GroupElement, h: &GroupElement) -> f64 {
        self.dist_to_identity(&self.mul(&self.inv(g), h))
    }

    pub fn dist_to_identity(&self, g: &GroupElement) -> f64 {
        match self.log(g) {
            Ok(v) => self.norm(&v),
            Err(_) => SATURATED_DISTANCE,
        }
    }

    /// `Ad_g v = g v g^-1`.
    pub fn ad(&self, g: &GroupElement, v: &AlgebraVector) -> AlgebraVector {
        match (&self.kind, g, v) {
            (GroupKind::Torus(_), GroupElement::Torus(_), AlgebraVector::Torus(_)) => v.clone(),
            (GroupKind::SpecialUnitary(_), GroupElement::Unitary(u), AlgebraVector::Unitary(x)) => {
                AlgebraVector::Unitary(u.matmul(x).matmul(&u.adjoint()))
            }
            (
                GroupKind::SpecialOrthogonal(_),
                GroupElement::Orthogonal(r),
                AlgebraVector::Orthogonal(x),
            ) => AlgebraVector::Orthogonal(r.matmul(x).matmul(&r.transpose())),
            (GroupKind::Product(fs), GroupElement::Product(gs), AlgebraVector::Product(xs)) => {
                AlgebraVector::Product(
                    fs.iter()
                        .zip(gs.iter().zip(xs))
                        .map(|(f, (g, x))| f.ad(g, x))
                        .collect(),
                )
            }
            _ => shape_panic("ad"),
        }
    }

    /// Basis of the Lie algebra, orthonormal for the scaled inner product.
    pub fn algebra_basis(&self) -> Vec<AlgebraVector> {
        let k = self.metric_scale;
        match &self.kind {
            GroupKind::Torus(n) => (0..*n)
                .map(|i| {
                    AlgebraVector::Torus(
                        (0..*n)
                            .map(|j| if i == j { 1.0 / k } else { 0.0 })
                            .collect(),
                    )
                })
                .collect(),
            GroupKind::SpecialUnitary(n) => {
                let n = *n;
                let mut out = Vec::with_capacity(n * n - 1);
                let s = 1.0 / (k * Float::sqrt(2.0));
                for i in 0..n {
                    for j in (i + 1)..n {
                        let mut a = CMat::zeros(n, n);
                        a[(i, j)] = C64::new(s, 0.0);
                        a[(j, i)] = C64::new(-s, 0.0);
                        out.push(AlgebraVector::Unitary(a));
                        let mut b = CMat::zeros(n, n);
                        b[(i, j)] = C64::new(0.0, s);
                        b[(j, i)] = C64::new(0.0, s);
                        out.push(AlgebraVector::Unitary(b));
                    }
                }
                for m in 1..n {
                    let norm = Float::sqrt((m * (m + 1)) as f64);
                    let mut d = CMat::zeros(n, n);
                    for i in 0..m {
                        d[(i, i)] = C64::new(0.0, 1.0 / (k * norm));
                    }
                    d[(m, m)] = C64::new(0.0, -(m as f64) / (k * norm));
                    out.push(AlgebraVector::Unitary(d));
                }
                out
            }
            GroupKind::SpecialOrthogonal(n) => {
                let n = *n;
                let s = 1.0 / (k * Float::sqrt(2.0));
                let mut out = Vec::with_capacity(n * (n - 1) / 2);
                for i in 0..n {
                    for j in (i + 1)..n {
                        let mut a = RMat::zeros(n, n);
                        a[(i, j)] = -s;
                        a[(j, i)] = s;
                        out.push(AlgebraVector::Orthogonal(a));
                    }
                }
                out
            }
            GroupKind::Product(fs) => {
                let s = 1.0 / k;
                let mut out = Vec::new();
                for (idx, f) in fs.iter().enumerate() {
                    for b in f.algebra_basis() {
                        let parts = fs
                            .iter()
                            .enumerate()
                            .map(|(j, g)| {
                                if j == idx {
                                    b.scale(s)
                                } else {
                                    g.zero_algebra()
                                }
                            })
                            .collect();
                        out.push(AlgebraVector::Product(parts));
                    }
                }
                out
            }
        }
    }

    /// Scaled inner product.
    pub fn inner(&self, a: &AlgebraVector, b: &AlgebraVector) -> f64 {
        let k2 = self.metric_scale * self.metric_scale;
        match (&self.kind, a, b) {
            (GroupKind::Torus(_), AlgebraVector::Torus(x), AlgebraVector::Torus(y)) => {
                k2 * x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>()
            }
            (
                GroupKind::SpecialUnitary(_),
                AlgebraVector::Unitary(x),
                AlgebraVector::Unitary(y),
            ) => {
                k2 * x
                    .as_slice()
                    .iter()
                    .zip(y.as_slice())
                    .map(|(p, q)| (p.conj() * q).re)
                    .sum::<f64>()
            }
            (
                GroupKind::SpecialOrthogonal(_),
                AlgebraVector::Orthogonal(x),
                AlgebraVector::Orthogonal(y),
            ) => {
                k2 * x
                    .as_slice()
                    .iter()
                    .zip(y.as_slice())
                    .map(|(p, q)| p * q)
                    .sum::<f64>()
            }
            (GroupKind::Product(fs), AlgebraVector::Product(x), AlgebraVector::Product(y)) => {
                k2 * fs
                    .iter()
                    .zip(x.iter().zip(y))
                    .map(|(f, (p, q))| f.inner(p, q))
                    .sum::<f64>()
            }
            _ => shape_panic("inner"),
        }
    }

    /// Coordinates in [`CompactGroup::algebra_basis`].
    pub fn coords(&self, v: &AlgebraVector) -> Vec<f64> {
        self.algebra_basis()
            .iter()
            .map(|b| self.inner(b, v))
            .collect()
    }

    pub fn from_coords(&self, c: &[f64]) -> AlgebraVector {
        let basis = self.algebra_basis();
        assert_eq!(
            basis.len(),
            c.len(),
            "coordinate count does not match the algebra dimension"
        );
        basis
            .iter()
            .zip(c)
            .fold(self.zero_algebra(), |acc, (b, &x)| acc.add(&b.scale(x)))
    }

    /// Haar-random element.
    pub fn random_element<R: Rng + ?Sized>(&self, rng: &mut R) -> GroupElement {
        match &self.kind {
            GroupKind::Torus(n) => GroupElement::Torus(
                (0..*n)
                    .map(|_| wrap_angle(rng.gen_range(-PI..PI)))
                    .collect(),
            ),
            GroupKind::SpecialUnitary(2) => {
                let q = quaternion::normalize(&[
                    gaussian(rng),
                    gaussian(rng),
                    gaussian(rng),
                    gaussian(rng),
                ]);
                GroupElement::Unitary(quaternion::to_su2(&q))
            }
            GroupKind::SpecialOrthogonal(3) => {
                let q = quaternion::normalize(&[
                    gaussian(rng),
                    gaussian(rng),
                    gaussian(rng),
                    gaussian(rng),
                ]);
                GroupElement::Orthogonal(quaternion::to_so3(&q))
            }
            GroupKind::SpecialUnitary(n) => GroupElement::Unitary(haar_special_unitary(*n, rng)),
            GroupKind::SpecialOrthogonal(n) => {
                GroupElement::Orthogonal(haar_special_orthogonal(*n, rng))
            }
            GroupKind::Product(fs) => {
                GroupElement::Product(fs.iter().map(|f| f.random_element(rng)).collect())
            }
        }
    }

    /// Element at scaled distance `radius` or less from the identity,
    /// uniform in direction.
    pub fn random_near_identity<R: Rng + ?Sized>(&self, rng: &mut R, radius: f64) -> GroupElement {
        let d = self.dimension();
        let mut c: Vec<f64> = (0..d).map(|_| gaussian(rng)).collect();
        let n = Float::sqrt(c.iter().map(|x| x * x).sum::<f64>()).max(f64::MIN_POSITIVE);
        let r: f64 = radius * rng.gen::<f64>();
        for x in c.iter_mut() {
            *x *= r / n;
        }
        self.exp(&self.from_coords(&c))
    }
}

fn remove_trace(x: &CMat) -> CMat {
    let n = x.rows();
    let t = x.trace() / C64::new(n as f64, 0.0);
    let mut out = x.clone();
    for i in 0..n {
        out[(i, i)] -= t;
    }
    out
}

// Closed forms. For X in su(2), X^2 = -theta^2 I with theta = |X|_F / sqrt(2).
fn su2_exp(x: &CMat) -> CMat {
    let theta = x.frobenius_norm() / Float::sqrt(2.0);
    let (c, s) = (Float::cos(theta), sinc(theta));
    let mut out = x.scale(C64::new(s, 0.0));
    out[(0, 0)] += C64::new(c, 0.0);
    out[(1, 1)] += C64::new(c, 0.0);
    out
}

fn su2_log(u: &CMat) -> Result<CMat, LieError> {
    let cos_t = 0.5 * (u[(0, 0)].re + u[(1, 1)].re);
    let skew = u.sub(&u.adjoint()).scale(C64::new(0.5, 0.0));
    let skew = remove_trace(&skew);
    let sin_t = skew.frobenius_norm() / Float::sqrt(2.0);
    let theta = Float::atan2(sin_t, cos_t);
    let distance = 2.0 * Float::abs(Float::cos(0.5 * theta));
    if distance < CUT_LOCUS_TOLERANCE {
        return Err(LieError::CutLocus { distance });
    }
    let f = if sin_t < 1e-300 { 1.0 } else { theta / sin_t };
    Ok(skew.scale(C64::new(f, 0.0)))
}

// Rodrigues: exp X = I + sinc(t) X + (1 - cos t)/t^2 X^2, t = |X|_F / sqrt(2).
fn so3_exp(x: &RMat) -> RMat {
    let theta = x.frobenius_norm() / Float::sqrt(2.0);
    let a = sinc(theta);
    let b = if theta < 1e-4 {
        0.5 - theta * theta / 24.0
    } else {
        (1.0 - Float::cos(theta)) / (theta * theta)
    };
    RMat::identity(3)
        .add(&x.scale(a))
        .add(&x.matmul(x).scale(b))
}

fn so3_log(r: &RMat) -> Result<RMat, LieError> {
    let cos_t = (0.5 * (r.trace() - 1.0)).clamp(-1.0, 1.0);
    let skew = r.sub(&r.transpose()).scale(0.5);
    let sin_t = skew.frobenius_norm() / Float::sqrt(2.0);
    let theta = Float::atan2(sin_t, cos_t);
    let distance = 2.0 * Float::abs(Float::cos(0.5 * theta));
    if distance < CUT_LOCUS_TOLERANCE {
        return Err(LieError::CutLocus { distance });
    }
    let f = if sin_t < 1e-300 { 1.0 } else { theta / sin_t };
    Ok(skew.scale(f))
}

fn sinc(t: f64) -> f64 {
    if Float::abs(t) < 1e-4 {
        1.0 - t * t / 6.0
    } else {
        Float::sin(t) / t
    }
}

/// Principal logarithm of a unitary matrix through the Cayley transform:
/// `A = i (I - U)(I + U)^-1` is Hermitian with eigenvalues `tan(theta/2)`,
/// so `log U = 2i atan(A)`.
fn unitary_log(u: &CMat) -> Result<CMat, LieError> {
    let n = u.rows();
    let herm_part = u.add(&u.adjoint()).scale(C64::new(0.5, 0.0));
    let min_cos = herm_eigenvalues(&herm_part).first().copied().unwrap_or(1.0);
    let distance = Float::sqrt(Float::max(0.0, 2.0 + 2.0 * min_cos));
    if distance < CUT_LOCUS_TOLERANCE {
        return Err(LieError::CutLocus { distance });
    }
    let id = CMat::identity(n);
    let plus = id.add(u);
    let minus = id.sub(u);
    // I - U and I + U commute, so the order of the solve is immaterial.
    let a = plus
        .lu()
        .ok_or(LieError::CutLocus { distance })?
        .solve_mat(&minus);
    let h = a.scale(C64::new(0.0, 1.0));
    let h = h.add(&h.adjoint()).scale(C64::new(0.5, 0.0));
    Ok(herm_fn(&h, |lam| C64::new(0.0, 2.0 * Float::atan(lam))))
}

/// Shortest traceless logarithm: when the principal eigen-angles sum to
/// `2 pi k`, the `k` largest (or `-k` smallest) move down (up) by `2 pi`.
fn special_unitary_log(u: &CMat) -> Result<CMat, LieError> {
    let principal = unitary_log(u)?;
    let turns = principal.trace().im / (2.0 * PI);
    let k = Float::round(turns) as i64;
    if k == 0 || Float::abs(turns - k as f64) > 1e-6 {
        return Ok(principal);
    }
    let h = principal.scale(C64::new(0.0, -1.0));
    let h = h.add(&h.adjoint()).scale(C64::new(0.5, 0.0));
    let angles = herm_eigenvalues(&h);
    let n = angles.len();
    let m = k.unsigned_abs() as usize;
    if m >= n {
        return Err(LieError::LogBranch {
            trace: Float::abs(turns) * 2.0 * PI,
        });
    }
    // Split between the shifted and the kept angles; a tie is the cut locus.
    let (below, above) = if k > 0 {
        (angles[n - m - 1], angles[n - m])
    } else {
        (angles[m - 1], angles[m])
    };
    if above - below < CUT_LOCUS_TOLERANCE {
        return Err(LieError::CutLocus {
            distance: above - below,
        });
    }
    let split = 0.5 * (below + above);
    Ok(herm_fn(&h, |a| {
        let shifted = match (k > 0, a > split) {
            (true, true) => a - 2.0 * PI,
            (false, false) => a + 2.0 * PI,
            _ => a,
        };
        C64::new(0.0, shifted)
    }))
}

fn haar_special_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
    let z = CMat::from_fn(n, n, |_, _| C64::new(gaussian(rng), gaussian(rng)));
    let q = gram_schmidt_columns(&z);
    let det = q.determinant();
    let arg = Float::atan2(det.im, det.re) / n as f64;
    q.scale(C64::new(Float::cos(-arg), Float::sin(-arg)))
}

fn haar_special_orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> RMat {
    let z = CMat::from_fn(n, n, |_, _| C64::new(gaussian(rng), 0.0));
    let mut q = gram_schmidt_columns(&z).real_part();
    if q.determinant() < 0.0 {
        for i in 0..n {
            q[(i, 0)] = -q[(i, 0)];
        }
    }
    q
}

/// Modified Gram-Schmidt on columns; the phase convention (positive real
/// diagonal of R) makes Gaussian input Haar-distributed.
fn gram_schmidt_columns(z: &CMat) -> CMat {
    let n = z.rows();
    let mut cols: Vec<Vec<C64>> = (0..n)
        .map(|j| (0..n).map(|i| z[(i, j)]).collect())
        .collect();
    for j in 0..n {
        for k in 0..j {
            let proj: C64 = (0..n)
                .map(|i| cols[k][i].conj() * cols[j][i])
                .fold(C64::new(0.0, 0.0), |a, b| a + b);
            for i in 0..n {
                let v = cols[k][i];
                cols[j][i] -= proj * v;
            }
        }
        let norm = Float::sqrt(cols[j].iter().map(|c| c.norm_sqr()).sum::<f64>());
        for c in cols[j].iter_mut() {
            *c /= C64::new(norm, 0.0);
        }
    }
    CMat::from_fn(n, n, |i, j| cols[j][i])
}

impl GroupElement {
    pub fn as_unitary(&self) -> Option<&CMat> {
        match self {
            Self::Unitary(u) => Some(u),
            _ => None,
        }
    }

    pub fn as_orthogonal(&self) -> Option<&RMat> {
        match self {
            Self::Orthogonal(r) => Some(r),
            _ => None,
        }
    }

    pub fn as_angles(&self) -> Option<&[f64]> {
        match self {
            Self::Torus(a) => Some(a),
            _ => None,
        }
    }

    /// Deterministic total order key for equality tests on node sets.
    pub fn flat_entries(&self) -> Vec<f64> {
        match self {
            Self::Torus(a) => a.to_vec(),
            Self::Unitary(u) => u.as_slice().iter().flat_map(|z| [z.re, z.im]).collect(),
            Self::Orthogonal(r) => r.as_slice().to_vec(),
            Self::Product(ps) => ps.iter().flat_map(|p| p.flat_entries()).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    #[test]
    fn su3_log_takes_the_traceless_branch() {
        // Principal angles 2.6, 2.4 and 1.28 sum to 2 pi.
        let phase = |a: f64| C64::new(Float::cos(a), Float::sin(a));
        let u = CMat::diag(&[phase(2.6), phase(2.4), phase(-5.0)]);
        let g = CompactGroup::su(3);
        let v = g.log(&GroupElement::Unitary(u.clone())).unwrap();
        let AlgebraVector::Unitary(x) = &v else {
            panic!()
        };
        assert!(Float::hypot(x.trace().re, x.trace().im) < 1e-12);
        assert!(x[(0, 0)].im < -3.6);
        assert!(g.exp(&v).as_unitary().unwrap().max_abs_diff(&u) < 1e-12);
    }

    fn groups() -> Vec<CompactGroup> {
        vec![
            CompactGroup::torus(2),
            CompactGroup::su(2),
            CompactGroup::su(3),
            CompactGroup::so(3),
            CompactGroup::so(4),
            CompactGroup::product(vec![CompactGroup::su(2), CompactGroup::torus(1)]),
        ]
    }

    #[test]
    fn ranks_and_dimensions() {
        assert_eq!(CompactGroup::torus(3).rank(), 3);
        assert_eq!(CompactGroup::su(4).rank(), 3);
        assert_eq!(CompactGroup::so(5).rank(), 2);
        assert_eq!(CompactGroup::so(6).rank(), 3);
        assert_eq!(CompactGroup::su(3).dimension(), 8);
        assert_eq!(CompactGroup::so(4).dimension(), 6);
    }

    #[test]
    fn exp_of_zero_is_identity() {
        let t = CompactGroup::torus(2);
        assert_eq!(t.exp(&t.zero_algebra()), t.identity());
        for g in groups() {
            assert!(g.dist_to_identity(&g.exp(&g.zero_algebra())) < 1e-15);
        }
    }

    #[test]
    fn basis_is_orthonormal_and_valid() {
        for g in groups() {
            let b = g.algebra_basis();
            assert_eq!(b.len(), g.dimension());
            for (i, x) in b.iter().enumerate() {
                g.validate_algebra(x).unwrap();
                for (j, y) in b.iter().enumerate() {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((g.inner(x, y) - want).abs() < 1e-14, "{:?} {i} {j}", g.kind);
                }
            }
        }
    }

    #[test]
    fn exp_log_round_trip() {
        let mut rng = stream_rng(11, 0);
        for g in groups() {
            let d = g.dimension();
            for _ in 0..50 {
                let mut c: Vec<f64> = (0..d).map(|_| gaussian(&mut rng)).collect();
                let n = c.iter().map(|x| x * x).sum::<f64>().sqrt();
                let r = 0.9 * rng.gen::<f64>();
                c.iter_mut().for_each(|x| *x *= r / n);
                let v = g.from_coords(&c);
                let e = g.group_exp(&v).unwrap();
                g.validate_element(&e).unwrap();
                let back = g.group_log(&e).unwrap();
                assert!(v.add(&back.neg()).max_abs() < 1e-10, "{:?}", g.kind);
                assert!((g.dist_to_identity(&e) - g.norm(&v)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn closed_forms_agree_with_pade() {
        let mut rng = stream_rng(12, 0);
        let su2 = CompactGroup::su(2);
        let so3 = CompactGroup::so(3);
        for _ in 0..50 {
            let v = su2.from_coords(&[gaussian(&mut rng), gaussian(&mut rng), gaussian(&mut rng)]);
            let AlgebraVector::Unitary(x) = &v else {
                unreachable!()
            };
            assert!(su2_exp(x).max_abs_diff(&x.expm()) < 1e-13);
            let u = x.expm();
            if let (Ok(a), Ok(b)) = (su2_log(&u), unitary_log(&u)) {
                assert!(a.max_abs_diff(&b) < 1e-10);
            }
            let w = so3.from_coords(&[gaussian(&mut rng), gaussian(&mut rng), gaussian(&mut rng)]);
            let AlgebraVector::Orthogonal(y) = &w else {
                unreachable!()
            };
            assert!(so3_exp(y).max_abs_diff(&y.expm()) < 1e-13);
            let r = y.expm();
            if let (Ok(a), Ok(b)) = (so3_log(&r), unitary_log(&r.to_complex())) {
                assert!(a.max_abs_diff(&b.real_part()) < 1e-9);
            }
        }
    }

    #[test]
    fn so3_exp_matches_rodrigues_rotation() {
        let so3 = CompactGroup::so(3);
        // X = a (e1 ^ e2) generator: rotation about e3 by angle a.
        let a = 0.3;
        let x = RMat::from_row_major(3, 3, &[0.0, -a, 0.0, a, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let g = so3
            .group_exp(&AlgebraVector::Orthogonal(x.clone()))
            .unwrap();
        let want = RMat::from_row_major(
            3,
            3,
            &[a.cos(), -a.sin(), 0.0, a.sin(), a.cos(), 0.0, 0.0, 0.0, 1.0],
        );
        assert!(g.as_orthogonal().unwrap().max_abs_diff(&want) < 1e-15);
        let v = AlgebraVector::Orthogonal(x);
        assert!((so3.dist_to_identity(&g) - so3.norm(&v)).abs() < 1e-15);
        assert!((so3.norm(&v) - a * 2f64.sqrt() / PI).abs() < 1e-15);
    }

    #[test]
    fn su2_geodesic_distance() {
        let g = CompactGroup::su(2);
        let mut rng = stream_rng(13, 0);
        for _ in 0..20 {
            let dir: Vec<f64> = (0..3).map(|_| gaussian(&mut rng)).collect();
            let n = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
            let c: Vec<f64> = dir.iter().map(|x| 0.5 * x / n).collect();
            let e = g.exp(&g.from_coords(&c));
            assert!((g.dist_to_identity(&e) - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn minus_identity_is_on_cut_locus() {
        let g = CompactGroup::su(2);
        let m = GroupElement::Unitary(CMat::identity(2).scale(C64::new(-1.0, 0.0)));
        assert!(matches!(g.group_log(&m), Err(LieError::CutLocus { .. })));
        assert_eq!(g.dist_to_identity(&m), SATURATED_DISTANCE);
        let r = RMat::diag(&[-1.0, -1.0, 1.0]);
        assert!(matches!(
            CompactGroup::so(3).log(&GroupElement::Orthogonal(r)),
            Err(LieError::CutLocus { .. })
        ));
        let t = CompactGroup::torus(1);
        assert!(matches!(
            t.log(&GroupElement::Torus([PI].into_iter().collect())),
            Err(LieError::CutLocus { .. })
        ));
        let u3 = CMat::diag(&[C64::new(-1.0, 0.0), C64::new(-1.0, 0.0), C64::new(1.0, 0.0)]);
        assert!(matches!(
            CompactGroup::su(3).log(&GroupElement::Unitary(u3)),
            Err(LieError::CutLocus { .. })
        ));
    }

    #[test]
    fn malformed_inputs_are_rejected() {
        let g = CompactGroup::su(2);
        let bad = AlgebraVector::Unitary(CMat::identity(2));
        assert!(matches!(
            g.group_exp(&bad),
            Err(LieError::MalformedAlgebraVector(_))
        ));
        let not_unitary = GroupElement::Unitary(CMat::identity(2).scale(C64::new(2.0, 0.0)));
        assert!(matches!(
            g.group_log(&not_unitary),
            Err(LieError::MalformedGroupElement(_))
        ));
        assert!(CompactGroup::new(GroupKind::Torus(1), -1.0).is_err());
    }

    #[test]
    fn bi_invariance_and_ad() {
        let mut rng = stream_rng(14, 0);
        for g in groups() {
            for _ in 0..30 {
                let a = g.random_element(&mut rng);
                let b = g.random_near_identity(&mut rng, 0.8);
                let b = g.mul(&a, &b);
                let k = g.random_element(&mut rng);
                let d = g.dist(&a, &b);
                assert!((g.dist(&g.mul(&k, &a), &g.mul(&k, &b)) - d).abs() < 1e-12);
                assert!((g.dist(&g.mul(&a, &k), &g.mul(&b, &k)) - d).abs() < 1e-12);
                let v = g.log(&g.random_near_identity(&mut rng, 0.9)).unwrap();
                let w = g.ad(&k, &v);
                assert!((g.norm(&w) - g.norm(&v)).abs() < 1e-12);
                let lhs = g.exp(&w);
                let rhs = g.mul3(&k, &g.exp(&v), &g.inv(&k));
                assert!(g.dist(&lhs, &rhs) < 1e-10);
            }
        }
    }

    #[test]
    fn random_elements_are_valid() {
        let mut rng = stream_rng(15, 0);
        for g in groups()
            .into_iter()
            .chain([CompactGroup::su(4), CompactGroup::so(5)])
        {
            for _ in 0..10 {
                g.validate_element(&g.random_element(&mut rng)).unwrap();
            }
        }
    }
}
