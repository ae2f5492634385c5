//! Planar convex hulls, distances to convex polygons and grid-coverage
//! certificates for point clouds in one and two dimensions.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;

pub type P2 = [f64; 2];

fn cross(o: P2, a: P2, b: P2) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn d2(a: P2, b: P2) -> f64 {
    (a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1])
}

/// Counterclockwise hull vertices without collinear points (monotone chain).
pub fn convex_hull(points: &[P2]) -> Vec<P2> {
    let mut p: Vec<P2> = points
        .iter()
        .copied()
        .filter(|q| q[0].is_finite() && q[1].is_finite())
        .collect();
    p.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    p.dedup();
    if p.len() < 3 {
        return p;
    }
    let mut h: Vec<P2> = Vec::with_capacity(2 * p.len());
    for pass in 0..2 {
        let start = h.len();
        let iter: Vec<P2> = if pass == 0 {
            p.clone()
        } else {
            p.iter().rev().copied().collect()
        };
        for q in iter {
            while h.len() >= start + 2 && cross(h[h.len() - 2], h[h.len() - 1], q) <= 0.0 {
                h.pop();
            }
            h.push(q);
        }
        h.pop();
    }
    h
}

/// `true` if `p` is inside the counterclockwise convex polygon, up to `tol`.
pub fn polygon_contains(hull: &[P2], p: P2, tol: f64) -> bool {
    match hull.len() {
        0 => false,
        1 => d2(hull[0], p) <= tol * tol,
        2 => segment_distance(hull[0], hull[1], p) <= tol,
        n => (0..n).all(|i| {
            let (a, b) = (hull[i], hull[(i + 1) % n]);
            let len = Float::sqrt(d2(a, b));
            cross(a, b, p) >= -tol * len
        }),
    }
}

fn segment_distance(a: P2, b: P2, p: P2) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let l2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if l2 > 0.0 {
        (((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / l2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    Float::sqrt(d2(p, [a[0] + t * ab[0], a[1] + t * ab[1]]))
}

/// Distance from `p` to a convex polygon (zero inside).
pub fn polygon_distance(hull: &[P2], p: P2) -> f64 {
    if hull.len() >= 3 && polygon_contains(hull, p, 0.0) {
        return 0.0;
    }
    let n = hull.len();
    match n {
        0 => f64::INFINITY,
        1 => Float::sqrt(d2(hull[0], p)),
        _ => (0..n)
            .map(|i| segment_distance(hull[i], hull[(i + 1) % n], p))
            .fold(f64::INFINITY, f64::min),
    }
}

/// Two-sided Hausdorff distance of two convex polygons. Distance to a
/// convex set is convex, so the sup over each polygon sits at a vertex.
pub fn hausdorff(a: &[P2], b: &[P2]) -> f64 {
    let one = |x: &[P2], y: &[P2]| {
        x.iter()
            .map(|p| polygon_distance(y, *p))
            .fold(0.0, f64::max)
    };
    one(a, b).max(one(b, a))
}

/// Bucketed nearest-neighbour queries in the plane.
pub struct PointBuckets<'a> {
    points: &'a [P2],
    cell: f64,
    map: BTreeMap<(i64, i64), Vec<usize>>,
}

impl<'a> PointBuckets<'a> {
    pub fn new(points: &'a [P2], cell: f64) -> Self {
        let mut map: BTreeMap<(i64, i64), Vec<usize>> = BTreeMap::new();
        for (i, p) in points.iter().enumerate() {
            map.entry(Self::key(p, cell)).or_default().push(i);
        }
        Self { points, cell, map }
    }

    fn key(p: &P2, cell: f64) -> (i64, i64) {
        (
            Float::floor(p[0] / cell) as i64,
            Float::floor(p[1] / cell) as i64,
        )
    }

    /// Distance to the nearest stored point, searching at most `max_rings`
    /// rings of buckets; `INFINITY` if none was found.
    pub fn nearest(&self, p: P2, max_rings: i64) -> f64 {
        let (cx, cy) = Self::key(&p, self.cell);
        let mut best = f64::INFINITY;
        for r in 0..=max_rings {
            for dx in -r..=r {
                for dy in -r..=r {
                    if dx.abs() != r && dy.abs() != r {
                        continue;
                    }
                    if let Some(v) = self.map.get(&(cx + dx, cy + dy)) {
                        for &i in v {
                            best = best.min(d2(self.points[i], p));
                        }
                    }
                }
            }
            // Every point in ring r + 1 is at least r * cell away.
            if best.is_finite() && Float::sqrt(best) <= r as f64 * self.cell {
                break;
            }
        }
        Float::sqrt(best)
    }
}

/// Outcome of checking that every grid point of a hull lies within the
/// grid resolution of some sample.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CoverageCertificate {
    pub resolution: f64,
    pub grid_points: usize,
    /// Largest distance from a hull grid point to its nearest sample.
    pub max_gap: f64,
    pub worst_point: Option<Vec<f64>>,
    pub passed: bool,
}

/// Grid points at spacing `r` anchored at the lower corner of the
/// bounding box, restricted to the closed hull.
fn grid_2d(hull: &[P2], r: f64) -> Vec<P2> {
    if hull.is_empty() || !(r > 0.0) {
        return Vec::new();
    }
    let lo = [
        hull.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min),
        hull.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min),
    ];
    let hi = [
        hull.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max),
        hull.iter().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max),
    ];
    let nx = Float::floor((hi[0] - lo[0]) / r + 1e-9) as usize + 1;
    let ny = Float::floor((hi[1] - lo[1]) / r + 1e-9) as usize + 1;
    let mut out = Vec::new();
    for i in 0..nx {
        for j in 0..ny {
            let p = [lo[0] + i as f64 * r, lo[1] + j as f64 * r];
            if polygon_contains(hull, p, 1e-12) {
                out.push(p);
            }
        }
    }
    out
}

pub fn coverage_2d(hull: &[P2], samples: &[P2], r: f64) -> CoverageCertificate {
    let grid = grid_2d(hull, r);
    let buckets = PointBuckets::new(samples, r);
    let mut max_gap: f64 = 0.0;
    let mut worst = None;
    for p in &grid {
        let d = buckets.nearest(*p, 64);
        if d > max_gap {
            max_gap = d;
            worst = Some(vec![p[0], p[1]]);
        }
    }
    CoverageCertificate {
        resolution: r,
        grid_points: grid.len(),
        max_gap,
        worst_point: worst,
        passed: max_gap <= r,
    }
}

/// The one-dimensional certificate on `[lo, hi]`.
pub fn coverage_1d(lo: f64, hi: f64, samples: &[f64], r: f64) -> CoverageCertificate {
    let mut s: Vec<f64> = samples.iter().copied().filter(|v| v.is_finite()).collect();
    s.sort_by(f64::total_cmp);
    let n = if hi >= lo && r > 0.0 {
        Float::floor((hi - lo) / r + 1e-9) as usize + 1
    } else {
        0
    };
    let mut max_gap: f64 = 0.0;
    let mut worst = None;
    for i in 0..n {
        let g = lo + i as f64 * r;
        let k = s.partition_point(|v| *v < g);
        let mut d = f64::INFINITY;
        if k < s.len() {
            d = d.min(s[k] - g);
        }
        if k > 0 {
            d = d.min(g - s[k - 1]);
        }
        if d > max_gap {
            max_gap = d;
            worst = Some(vec![g]);
        }
    }
    CoverageCertificate {
        resolution: r,
        grid_points: n,
        max_gap,
        worst_point: worst,
        passed: max_gap <= r,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hull_of_square_with_interior_points() {
        let pts = [
            [0.0, 0.0],
            [1.0, 0.0],
            [1.0, 1.0],
            [0.0, 1.0],
            [0.5, 0.5],
            [0.5, 0.0],
        ];
        let h = convex_hull(&pts);
        assert_eq!(h, vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]);
        assert!(polygon_contains(&h, [0.2, 0.9], 0.0));
        assert!(!polygon_contains(&h, [1.2, 0.9], 1e-9));
        assert!((polygon_distance(&h, [2.0, 0.5]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn hausdorff_of_nested_squares() {
        let a = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let b = [[0.0, 0.0], [2.0, 0.0], [2.0, 2.0], [0.0, 2.0]];
        assert!((hausdorff(&a, &b) - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(hausdorff(&a, &a), 0.0);
    }

    #[test]
    fn buckets_match_brute_force() {
        let pts: Vec<P2> = (0..200)
            .map(|i| {
                [
                    ((i * 37) % 101) as f64 / 50.0,
                    ((i * 53) % 89) as f64 / 40.0,
                ]
            })
            .collect();
        let b = PointBuckets::new(&pts, 0.1);
        for q in [[0.3, 0.7], [1.9, 0.1], [5.0, 5.0]] {
            let brute = pts
                .iter()
                .map(|p| d2(*p, q))
                .fold(f64::INFINITY, f64::min)
                .sqrt();
            assert!((b.nearest(q, 200) - brute).abs() < 1e-15);
        }
    }

    #[test]
    fn interval_coverage_finds_the_gap() {
        let s: Vec<f64> = (0..=20)
            .map(|i| i as f64 * 0.05)
            .filter(|v| !(0.4..0.6).contains(v))
            .collect();
        let c = coverage_1d(0.0, 1.0, &s, 0.05);
        assert!(!c.passed);
        assert!((c.max_gap - 0.1).abs() < 1e-12);
        let full: Vec<f64> = (0..=100).map(|i| i as f64 * 0.01).collect();
        assert!(coverage_1d(0.0, 1.0, &full, 0.05).passed);
    }
}
