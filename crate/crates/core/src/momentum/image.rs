use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_traits::Float;
use rand::Rng;

use super::MomentumError;
use crate::planar::{convex_hull, coverage_1d, coverage_2d, hausdorff, CoverageCertificate, P2};
use crate::rng::{gaussian, stream_rng, LabRng};

/// A Hamiltonian torus action with a seeded sampler on phase space.
pub trait ToricHamiltonianSystem {
    fn name(&self) -> String;
    /// Rank of the torus, the dimension of the momentum image.
    fn rank(&self) -> usize;
    fn sample(&self, rng: &mut LabRng) -> Vec<f64>;
    fn momentum(&self, z: &[f64]) -> Vec<f64>;
    /// The torus action, when available.
    fn act(&self, _angles: &[f64], _z: &[f64]) -> Option<Vec<f64>> {
        None
    }
    /// Vertices of the exact image, when known.
    fn known_polytope(&self) -> Option<Vec<Vec<f64>>> {
        None
    }
}

/// `CP^n` with the standard `T^n` action rotating the last `n` homogeneous
/// coordinates; `mu_i = |z_i|^2 / |z|^2`. Points are stored as `2(n + 1)`
/// real coordinates of a unit vector in `C^{n+1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexProjectiveSpace {
    pub n: usize,
}

impl ToricHamiltonianSystem for ComplexProjectiveSpace {
    fn name(&self) -> String {
        alloc::format!("CP{}", self.n)
    }
    fn rank(&self) -> usize {
        self.n
    }
    fn sample(&self, rng: &mut LabRng) -> Vec<f64> {
        // Uniform on the unit sphere of C^{n+1}, whose image is the Liouville measure.
        let mut z: Vec<f64> = (0..2 * (self.n + 1)).map(|_| gaussian(rng)).collect();
        let r = Float::sqrt(z.iter().map(|x| x * x).sum::<f64>());
        z.iter_mut().for_each(|x| *x /= r);
        z
    }
    fn momentum(&self, z: &[f64]) -> Vec<f64> {
        let norm: f64 = z.iter().map(|x| x * x).sum();
        (1..=self.n)
            .map(|i| (z[2 * i] * z[2 * i] + z[2 * i + 1] * z[2 * i + 1]) / norm)
            .collect()
    }
    fn act(&self, angles: &[f64], z: &[f64]) -> Option<Vec<f64>> {
        let mut out = z.to_vec();
        for (i, a) in angles.iter().enumerate().take(self.n) {
            let (re, im) = (z[2 * i + 2], z[2 * i + 3]);
            let (c, s) = (Float::cos(*a), Float::sin(*a));
            out[2 * i + 2] = c * re - s * im;
            out[2 * i + 3] = s * re + c * im;
        }
        Some(out)
    }
    fn known_polytope(&self) -> Option<Vec<Vec<f64>>> {
        // Images of the fixed points [e_0], ..., [e_n].
        let fixed = (0..=self.n).map(|j| {
            let mut z = vec![0.0; 2 * (self.n + 1)];
            z[2 * j] = 1.0;
            z
        });
        Some(fixed.map(|z| self.momentum(&z)).collect())
    }
}

/// The unit sphere rotating about the `z`-axis; the momentum is the height.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Sphere;

impl ToricHamiltonianSystem for Sphere {
    fn name(&self) -> String {
        "S2".into()
    }
    fn rank(&self) -> usize {
        1
    }
    fn sample(&self, rng: &mut LabRng) -> Vec<f64> {
        let z: f64 = 2.0 * rng.gen::<f64>() - 1.0;
        let a: f64 = 2.0 * PI * rng.gen::<f64>();
        let r = Float::sqrt(1.0 - z * z);
        vec![r * Float::cos(a), r * Float::sin(a), z]
    }
    fn momentum(&self, z: &[f64]) -> Vec<f64> {
        vec![z[2]]
    }
    fn act(&self, angles: &[f64], z: &[f64]) -> Option<Vec<f64>> {
        let (c, s) = (Float::cos(angles[0]), Float::sin(angles[0]));
        Some(vec![c * z[0] - s * z[1], s * z[0] + c * z[1], z[2]])
    }
    fn known_polytope(&self) -> Option<Vec<Vec<f64>>> {
        Some(vec![vec![-1.0], vec![1.0]])
    }
}

/// `M_1 x M_2` with the product torus; the momentum map splits.
pub struct ProductSystem {
    pub first: Box<dyn ToricHamiltonianSystem>,
    pub second: Box<dyn ToricHamiltonianSystem>,
    /// Phase-space dimension of `first`, to split stored points.
    pub split: usize,
}

impl ProductSystem {
    pub fn new(
        first: Box<dyn ToricHamiltonianSystem>,
        second: Box<dyn ToricHamiltonianSystem>,
    ) -> Self {
        let split = first.sample(&mut stream_rng(0, 0)).len();
        Self {
            first,
            second,
            split,
        }
    }
}

impl ToricHamiltonianSystem for ProductSystem {
    fn name(&self) -> String {
        alloc::format!("{}x{}", self.first.name(), self.second.name())
    }
    fn rank(&self) -> usize {
        self.first.rank() + self.second.rank()
    }
    fn sample(&self, rng: &mut LabRng) -> Vec<f64> {
        let mut a = self.first.sample(rng);
        a.extend(self.second.sample(rng));
        a
    }
    fn momentum(&self, z: &[f64]) -> Vec<f64> {
        let mut m = self.first.momentum(&z[..self.split]);
        m.extend(self.second.momentum(&z[self.split..]));
        m
    }
    fn act(&self, angles: &[f64], z: &[f64]) -> Option<Vec<f64>> {
        let r = self.first.rank();
        let mut a = self.first.act(&angles[..r], &z[..self.split])?;
        a.extend(self.second.act(&angles[r..], &z[self.split..])?);
        Some(a)
    }
    fn known_polytope(&self) -> Option<Vec<Vec<f64>>> {
        let a = self.first.known_polytope()?;
        let b = self.second.known_polytope()?;
        Some(
            a.iter()
                .flat_map(|p| b.iter().map(move |q| p.iter().chain(q).copied().collect()))
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MomentumImage {
    pub system: String,
    pub samples: Vec<Vec<f64>>,
    /// Hull vertices: `[min, max]` for rank one, counterclockwise for rank two.
    pub hull: Vec<Vec<f64>>,
    pub certificate: CoverageCertificate,
    /// Hausdorff distance between the sampled hull and the known polytope.
    pub hausdorff: Option<f64>,
    /// Largest change of `mu` along sampled torus orbits.
    pub invariance_error: Option<f64>,
}

fn hull_of(rank: usize, pts: &[Vec<f64>]) -> Vec<Vec<f64>> {
    if rank == 1 {
        let lo = pts.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
        let hi = pts.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
        vec![vec![lo], vec![hi]]
    } else {
        let p2: Vec<P2> = pts.iter().map(|p| [p[0], p[1]]).collect();
        convex_hull(&p2).into_iter().map(|q| q.to_vec()).collect()
    }
}

fn hull_distance(rank: usize, a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    if rank == 1 {
        Float::abs(a[0][0] - b[0][0]).max(Float::abs(a[1][0] - b[1][0]))
    } else {
        let to2 = |v: &[Vec<f64>]| v.iter().map(|p| [p[0], p[1]]).collect::<Vec<P2>>();
        hausdorff(&to2(a), &to2(b))
    }
}

/// Certifies that a point cloud fills its hull at resolution `r`.
pub(crate) fn certify_cloud(
    rank: usize,
    pts: &[Vec<f64>],
    hull: &[Vec<f64>],
    r: f64,
) -> CoverageCertificate {
    if rank == 1 {
        let v: Vec<f64> = pts.iter().map(|p| p[0]).collect();
        coverage_1d(hull[0][0], hull[1][0], &v, r)
    } else {
        let p2: Vec<P2> = pts.iter().map(|p| [p[0], p[1]]).collect();
        let h2: Vec<P2> = hull.iter().map(|p| [p[0], p[1]]).collect();
        coverage_2d(&h2, &p2, r)
    }
}

/// Samples `mu` on `n` seeded points (sample `i` uses its own stream) and
/// certifies the cloud's hull at `resolution`. Ranks one and two.
pub fn momentum_image(
    sys: &dyn ToricHamiltonianSystem,
    n: usize,
    seed: u64,
    resolution: f64,
) -> Result<MomentumImage, MomentumError> {
    let rank = sys.rank();
    if !(1..=2).contains(&rank) {
        return Err(MomentumError::Unsupported(alloc::format!(
            "momentum images of rank {rank}"
        )));
    }
    if n == 0 {
        return Err(MomentumError::WrongShape("no samples requested".into()));
    }
    let mut samples = Vec::with_capacity(n);
    let mut invariance: Option<f64> = None;
    for i in 0..n {
        let mut rng = stream_rng(seed, i as u64);
        let z = sys.sample(&mut rng);
        let m = sys.momentum(&z);
        if i < 256 {
            let angles: Vec<f64> = (0..rank).map(|_| 2.0 * PI * rng.gen::<f64>()).collect();
            if let Some(w) = sys.act(&angles, &z) {
                let d = sys
                    .momentum(&w)
                    .iter()
                    .zip(&m)
                    .map(|(a, b)| Float::abs(a - b))
                    .fold(0.0, f64::max);
                invariance = Some(invariance.unwrap_or(0.0).max(d));
            }
        }
        samples.push(m);
    }
    let hull = hull_of(rank, &samples);
    let certificate = certify_cloud(rank, &samples, &hull, resolution);
    let hausdorff = sys
        .known_polytope()
        .map(|k| hull_distance(rank, &hull, &hull_of(rank, &k)));
    Ok(MomentumImage {
        system: sys.name(),
        samples,
        hull,
        certificate,
        hausdorff,
        invariance_error: invariance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_image_is_the_unit_interval() {
        let m = momentum_image(&Sphere, 4000, 3, 0.01).unwrap();
        assert!(m.hausdorff.unwrap() < 0.01);
        assert!(m.certificate.passed);
        assert!(m.invariance_error.unwrap() < 1e-12);
    }

    #[test]
    fn cp1_times_sphere_is_a_rectangle() {
        let p = ProductSystem::new(Box::new(ComplexProjectiveSpace { n: 1 }), Box::new(Sphere));
        let m = momentum_image(&p, 20000, 1, 0.05).unwrap();
        assert_eq!(p.known_polytope().unwrap().len(), 4);
        assert!(m.hausdorff.unwrap() < 0.02, "{:?}", m.hausdorff);
        assert!(m.certificate.passed);
    }

    #[test]
    fn fixed_points_of_cp2_give_the_simplex() {
        let k = ComplexProjectiveSpace { n: 2 }.known_polytope().unwrap();
        assert_eq!(k, vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]);
    }

    #[test]
    fn rank_three_is_unsupported() {
        assert!(momentum_image(&ComplexProjectiveSpace { n: 3 }, 10, 0, 0.1).is_err());
    }
}
