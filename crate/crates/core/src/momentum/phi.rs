use alloc::vec::Vec;

use num_traits::Float;

use super::image::certify_cloud;
use super::williamson::{
    random_symplectic, symplectic_spectrum, FrequencyTuple, QuadraticHamiltonian,
};
use super::MomentumError;
use crate::planar::{convex_hull, CoverageCertificate, P2};
use crate::rng::stream_rng;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PhiSettings {
    pub samples: usize,
    pub seed: u64,
    /// Entries of the symmetric generators are uniform in `[-scale, scale]`.
    pub scale: f64,
    /// Box `[lo_i, hi_i]` inside which convexity is certified.
    pub window: Vec<(f64, f64)>,
    pub resolution: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SliceGap {
    /// Center of the slice in the first coordinate.
    pub position: f64,
    pub count: usize,
    /// Largest gap between consecutive samples along the second coordinate.
    pub max_gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PhiSetReport {
    pub lambda: Vec<f64>,
    pub gamma: Vec<f64>,
    pub samples: Vec<Vec<f64>>,
    /// Spectrum of `D_lambda + D_gamma`, the simultaneously diagonal case.
    pub commuting_point: Vec<f64>,
    /// Componentwise minimum of the random samples.
    pub min_point: Vec<f64>,
    pub windowed: usize,
    /// Hull of the windowed cloud (`[min, max]` for `k = 1`).
    pub hull: Vec<Vec<f64>>,
    /// Hull-coverage certificate of the windowed cloud; for `k = 1` it runs
    /// over the whole window, so it also detects a missing end of the interval.
    pub coverage: CoverageCertificate,
    pub slices: Vec<SliceGap>,
    /// Windowed samples within one resolution step of the window boundary.
    pub boundary_samples: usize,
}

fn inside(window: &[(f64, f64)], p: &[f64]) -> bool {
    window
        .iter()
        .zip(p)
        .all(|((lo, hi), v)| *v >= *lo && *v <= *hi)
}

/// Samples `{ spectrum(M_1^T D_lambda M_1 + M_2^T D_gamma M_2) }` over random
/// symplectic `M_1, M_2`, then certifies the part of the cloud inside
/// `settings.window`. Sample `i` uses its own random stream.
pub fn phi_set(
    lambda: &FrequencyTuple,
    gamma: &FrequencyTuple,
    settings: &PhiSettings,
) -> Result<PhiSetReport, MomentumError> {
    let k = lambda.len();
    if gamma.len() != k {
        return Err(MomentumError::InvalidTuple(
            "tuples of different length".into(),
        ));
    }
    if settings.window.len() != k || settings.window.iter().any(|(lo, hi)| !(lo < hi)) {
        return Err(MomentumError::WrongShape(
            "window must be a nonempty box in R^k".into(),
        ));
    }
    if !(1..=2).contains(&k) {
        return Err(MomentumError::Unsupported(alloc::format!(
            "certifying frequency sets with k = {k}"
        )));
    }
    if settings.samples == 0 || !(settings.resolution > 0.0) {
        return Err(MomentumError::WrongShape(
            "need samples and a positive resolution".into(),
        ));
    }
    let d1 = QuadraticHamiltonian::diagonal(lambda);
    let d2 = QuadraticHamiltonian::diagonal(gamma);
    let commuting_point = symplectic_spectrum(&d1.sum(&d2)?).values().to_vec();
    let mut samples = Vec::with_capacity(settings.samples);
    for i in 0..settings.samples {
        let mut rng = stream_rng(settings.seed, i as u64);
        let m1 = random_symplectic(k, settings.scale, &mut rng);
        let m2 = random_symplectic(k, settings.scale, &mut rng);
        let h = d1.congruent(&m1)?.sum(&d2.congruent(&m2)?)?;
        samples.push(symplectic_spectrum(&h).values().to_vec());
    }
    let min_point: Vec<f64> = (0..k)
        .map(|j| samples.iter().map(|s| s[j]).fold(f64::INFINITY, f64::min))
        .collect();
    let win: Vec<Vec<f64>> = samples
        .iter()
        .filter(|p| inside(&settings.window, p))
        .cloned()
        .collect();
    let r = settings.resolution;
    let boundary_samples = win
        .iter()
        .filter(|p| {
            settings
                .window
                .iter()
                .zip(p.iter())
                .any(|((lo, hi), v)| v - lo < r || hi - v < r)
        })
        .count();
    let (hull, coverage, slices) = if k == 1 {
        let (lo, hi) = settings.window[0];
        let hull = if win.is_empty() {
            Vec::new()
        } else {
            let a = win.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
            let b = win.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
            alloc::vec![alloc::vec![a], alloc::vec![b]]
        };
        let box_hull = alloc::vec![alloc::vec![lo], alloc::vec![hi]];
        (hull, certify_cloud(1, &win, &box_hull, r), Vec::new())
    } else {
        let p2: Vec<P2> = win.iter().map(|p| [p[0], p[1]]).collect();
        let hull: Vec<Vec<f64>> = convex_hull(&p2).into_iter().map(|q| q.to_vec()).collect();
        let cert = if hull.len() >= 3 {
            certify_cloud(2, &win, &hull, r)
        } else {
            CoverageCertificate {
                resolution: r,
                grid_points: 0,
                max_gap: f64::INFINITY,
                worst_point: None,
                passed: false,
            }
        };
        (hull, cert, slice_gaps(&win, settings.window[0], r))
    };
    Ok(PhiSetReport {
        lambda: lambda.values().to_vec(),
        gamma: gamma.values().to_vec(),
        samples,
        commuting_point,
        min_point,
        windowed: win.len(),
        hull,
        coverage,
        slices,
        boundary_samples,
    })
}

fn slice_gaps(win: &[Vec<f64>], (lo, hi): (f64, f64), r: f64) -> Vec<SliceGap> {
    let n = Float::ceil((hi - lo) / r) as usize;
    let mut bins: Vec<Vec<f64>> = alloc::vec![Vec::new(); n.max(1)];
    for p in win {
        let b = (Float::floor((p[0] - lo) / r) as usize).min(n.max(1) - 1);
        bins[b].push(p[1]);
    }
    bins.into_iter()
        .enumerate()
        .filter(|(_, v)| !v.is_empty())
        .map(|(i, mut v)| {
            v.sort_by(f64::total_cmp);
            let max_gap = v.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
            SliceGap {
                position: lo + (i as f64 + 0.5) * r,
                count: v.len(),
                max_gap,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn commuting_case_adds_tuples() {
        let l = FrequencyTuple::new(alloc::vec![1.0, 2.0]).unwrap();
        let g = FrequencyTuple::new(alloc::vec![1.0, 3.0]).unwrap();
        let s = PhiSettings {
            samples: 10,
            seed: 0,
            scale: 1.0,
            window: alloc::vec![(2.0, 4.0), (5.0, 7.0)],
            resolution: 0.5,
        };
        let r = phi_set(&l, &g, &s).unwrap();
        assert!(
            (r.commuting_point[0] - 2.0).abs() < 1e-13
                && (r.commuting_point[1] - 5.0).abs() < 1e-13
        );
    }

    #[test]
    fn zero_scale_samples_the_commuting_point() {
        let l = FrequencyTuple::new(alloc::vec![1.0]).unwrap();
        let s = PhiSettings {
            samples: 5,
            seed: 0,
            scale: 0.0,
            window: alloc::vec![(1.0, 3.0)],
            resolution: 0.05,
        };
        let r = phi_set(&l, &l, &s).unwrap();
        for p in &r.samples {
            assert!((p[0] - 2.0).abs() < 1e-13);
        }
        assert!(!r.coverage.passed);
    }

    #[test]
    fn mismatched_inputs_are_refused() {
        let a = FrequencyTuple::new(alloc::vec![1.0]).unwrap();
        let b = FrequencyTuple::new(alloc::vec![1.0, 2.0]).unwrap();
        let s = PhiSettings {
            samples: 5,
            seed: 0,
            scale: 1.0,
            window: alloc::vec![(1.0, 3.0)],
            resolution: 0.05,
        };
        assert!(phi_set(&a, &b, &s).is_err());
    }
}
