use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;

use super::AffineError;
use crate::linalg::RMat;

/// Default geometric tolerance.
pub const GEOMETRY_TOLERANCE: f64 = 1e-9;

/// A convex polytope given by its vertices.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Cell {
    pub vertices: Vec<Vec<f64>>,
}

/// `x -> A x + b` with `A` integral and unimodular.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Transition {
    pub linear: Vec<Vec<i64>>,
    pub translation: Vec<f64>,
}

/// Identifies `face_a` of `cell_a` with `face_b` of `cell_b`; points of
/// `cell_a` map to `cell_b` coordinates by `transition`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Gluing {
    pub cell_a: usize,
    pub face_a: Vec<usize>,
    pub cell_b: usize,
    pub face_b: Vec<usize>,
    pub transition: Transition,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AffineComplex {
    #[cfg_attr(feature = "serde", serde(default))]
    pub name: String,
    pub dim: usize,
    pub cells: Vec<Cell>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub gluings: Vec<Gluing>,
    /// Geometric tolerance declared by the input.
    #[cfg_attr(feature = "serde", serde(default = "default_precision"))]
    pub precision: f64,
}

#[cfg(feature = "serde")]
fn default_precision() -> f64 {
    GEOMETRY_TOLERANCE
}

impl Transition {
    pub fn identity(k: usize) -> Self {
        Self::translation(vec![0.0; k])
    }

    pub fn translation(t: Vec<f64>) -> Self {
        let k = t.len();
        Self {
            linear: (0..k)
                .map(|i| (0..k).map(|j| i64::from(i == j)).collect())
                .collect(),
            translation: t,
        }
    }

    pub fn new(linear: Vec<Vec<i64>>, translation: Vec<f64>) -> Self {
        Self {
            linear,
            translation,
        }
    }

    pub fn dim(&self) -> usize {
        self.translation.len()
    }

    pub fn matrix(&self) -> RMat {
        let k = self.dim();
        RMat::from_fn(k, k, |i, j| self.linear[i][j] as f64)
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.apply_linear(x);
        y.iter_mut()
            .zip(&self.translation)
            .for_each(|(a, b)| *a += b);
        y
    }

    pub fn apply_linear(&self, x: &[f64]) -> Vec<f64> {
        self.linear
            .iter()
            .map(|row| row.iter().zip(x).map(|(a, b)| *a as f64 * b).sum())
            .collect()
    }

    /// Determinant, computed exactly by fraction-free elimination.
    pub fn determinant(&self) -> i128 {
        let k = self.dim();
        let mut m: Vec<Vec<i128>> = self
            .linear
            .iter()
            .map(|r| r.iter().map(|v| *v as i128).collect())
            .collect();
        let mut sign = 1i128;
        let mut prev = 1i128;
        for c in 0..k {
            let Some(p) = (c..k).find(|&r| m[r][c] != 0) else {
                return 0;
            };
            if p != c {
                m.swap(p, c);
                sign = -sign;
            }
            for r in c + 1..k {
                for j in c + 1..k {
                    m[r][j] = (m[r][j] * m[c][c] - m[r][c] * m[c][j]) / prev;
                }
                m[r][c] = 0;
            }
            prev = m[c][c];
        }
        if k == 0 {
            1
        } else {
            sign * m[k - 1][k - 1]
        }
    }
}

/// A facet `normal . x <= offset` of a polytope and the vertices on it.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Facet {
    pub normal: Vec<f64>,
    pub offset: f64,
    pub vertices: Vec<usize>,
}

fn det(rows: &[Vec<f64>]) -> f64 {
    let n = rows.len();
    if n == 0 {
        return 1.0;
    }
    RMat::from_fn(n, n, |i, j| rows[i][j]).determinant()
}

/// Facets of the convex hull of `points` in `R^k`, by testing every
/// affinely independent `k`-subset as a supporting hyperplane.
pub(crate) fn facets(points: &[Vec<f64>], k: usize, tol: f64) -> Vec<Facet> {
    let scale = points
        .iter()
        .flatten()
        .fold(1.0f64, |m, v| m.max(Float::abs(*v)));
    let eps = tol * scale;
    let mut out: Vec<Facet> = Vec::new();
    let n = points.len();
    if n < k {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        let p0 = &points[idx[0]];
        let diffs: Vec<Vec<f64>> = idx[1..]
            .iter()
            .map(|&i| points[i].iter().zip(p0).map(|(a, b)| a - b).collect())
            .collect();
        let mut normal: Vec<f64> = (0..k)
            .map(|j| {
                let minor: Vec<Vec<f64>> = diffs
                    .iter()
                    .map(|r| {
                        r.iter()
                            .enumerate()
                            .filter(|(c, _)| *c != j)
                            .map(|(_, v)| *v)
                            .collect()
                    })
                    .collect();
                let s = if j % 2 == 0 { 1.0 } else { -1.0 };
                s * det(&minor)
            })
            .collect();
        let nn = Float::sqrt(normal.iter().map(|v| v * v).sum::<f64>());
        if nn > eps {
            normal.iter_mut().for_each(|v| *v /= nn);
            let offset: f64 = normal.iter().zip(p0).map(|(a, b)| a * b).sum();
            let side: Vec<f64> = points
                .iter()
                .map(|p| normal.iter().zip(p).map(|(a, b)| a * b).sum::<f64>() - offset)
                .collect();
            let flip = if side.iter().all(|s| *s <= eps) {
                Some(false)
            } else if side.iter().all(|s| *s >= -eps) {
                Some(true)
            } else {
                None
            };
            if let Some(flip) = flip {
                let on: Vec<usize> = (0..n).filter(|&i| Float::abs(side[i]) <= eps).collect();
                if !out.iter().any(|f| f.vertices == on) {
                    let (normal, offset) = if flip {
                        (normal.iter().map(|v| -v).collect(), -offset)
                    } else {
                        (normal, offset)
                    };
                    out.push(Facet {
                        normal,
                        offset,
                        vertices: on,
                    });
                }
            }
        }
        // Next k-subset in lexicographic order.
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] < n - k + i {
                idx[i] += 1;
                for j in i + 1..k {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
        if k == 0 {
            return out;
        }
    }
}

/// Affine rank of a point set.
pub(crate) fn affine_rank(points: &[Vec<f64>], tol: f64) -> usize {
    let Some(p0) = points.first() else { return 0 };
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for p in &points[1..] {
        let mut v: Vec<f64> = p.iter().zip(p0).map(|(a, b)| a - b).collect();
        for b in &basis {
            let c: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
        }
        let n = Float::sqrt(v.iter().map(|x| x * x).sum::<f64>());
        if n > tol {
            v.iter_mut().for_each(|x| *x /= n);
            basis.push(v);
        }
    }
    basis.len()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    Float::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>())
}

/// Which gluing a facet belongs to, and on which side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct FacetLink {
    pub gluing: usize,
    /// The facet's cell is `cell_a` of the gluing.
    pub forward: bool,
}

/// A validated complex with facets and gluing links precomputed.
#[derive(Debug, Clone)]
pub(crate) struct Geometry<'a> {
    pub complex: &'a AffineComplex,
    pub facets: Vec<Vec<Facet>>,
    pub links: Vec<Vec<Option<FacetLink>>>,
    pub tol: f64,
}

impl<'a> Geometry<'a> {
    pub fn new(x: &'a AffineComplex) -> Result<Self, AffineError> {
        let k = x.dim;
        let bad = |m: String| Err(AffineError::MalformedComplex(m));
        if k == 0 {
            return bad("dimension must be positive".into());
        }
        if x.cells.is_empty() {
            return bad("complex has no cells".into());
        }
        let tol = if x.precision > 0.0 {
            x.precision
        } else {
            GEOMETRY_TOLERANCE
        };
        let mut all_facets = Vec::with_capacity(x.cells.len());
        for (c, cell) in x.cells.iter().enumerate() {
            if cell
                .vertices
                .iter()
                .any(|v| v.len() != k || v.iter().any(|c| !c.is_finite()))
            {
                return bad(format!("cell {c} has a vertex of the wrong dimension"));
            }
            if affine_rank(&cell.vertices, tol) < k {
                return bad(format!("cell {c} has empty interior"));
            }
            all_facets.push(facets(&cell.vertices, k, tol));
        }
        let mut links: Vec<Vec<Option<FacetLink>>> =
            all_facets.iter().map(|f| vec![None; f.len()]).collect();
        for (gi, g) in x.gluings.iter().enumerate() {
            if g.cell_a >= x.cells.len() || g.cell_b >= x.cells.len() {
                return bad(format!("gluing {gi} refers to a missing cell"));
            }
            let t = &g.transition;
            if t.translation.len() != k
                || t.linear.len() != k
                || t.linear.iter().any(|r| r.len() != k)
            {
                return bad(format!("gluing {gi} has a transition of the wrong size"));
            }
            let d = t.determinant();
            if d != 1 && d != -1 {
                return bad(format!("gluing {gi} has a transition of determinant {d}"));
            }
            if g.cell_a == g.cell_b && sorted(&g.face_a) == sorted(&g.face_b) {
                return bad(format!("gluing {gi} glues a face to itself"));
            }
            let fa = find_facet(&all_facets[g.cell_a], &g.face_a).ok_or_else(|| {
                AffineError::MalformedComplex(format!(
                    "gluing {gi}: face_a is not a facet of cell {}",
                    g.cell_a
                ))
            })?;
            let fb = find_facet(&all_facets[g.cell_b], &g.face_b).ok_or_else(|| {
                AffineError::MalformedComplex(format!(
                    "gluing {gi}: face_b is not a facet of cell {}",
                    g.cell_b
                ))
            })?;
            let va = &x.cells[g.cell_a].vertices;
            let vb = &x.cells[g.cell_b].vertices;
            let mapped: Vec<Vec<f64>> = g.face_a.iter().map(|&i| t.apply(&va[i])).collect();
            let matched = mapped
                .iter()
                .all(|m| g.face_b.iter().any(|&j| dist(m, &vb[j]) <= tol))
                && g.face_b
                    .iter()
                    .all(|&j| mapped.iter().any(|m| dist(m, &vb[j]) <= tol));
            if !matched {
                return bad(format!(
                    "gluing {gi}: transition does not map face_a onto face_b"
                ));
            }
            for (cell, f, forward) in [(g.cell_a, fa, true), (g.cell_b, fb, false)] {
                if links[cell][f].is_some() {
                    return bad(format!("facet {f} of cell {cell} is glued twice"));
                }
                links[cell][f] = Some(FacetLink {
                    gluing: gi,
                    forward,
                });
            }
        }
        Ok(Self {
            complex: x,
            facets: all_facets,
            links,
            tol,
        })
    }

    pub fn dim(&self) -> usize {
        self.complex.dim
    }

    pub fn vertices(&self, cell: usize) -> &[Vec<f64>] {
        &self.complex.cells[cell].vertices
    }

    pub fn is_boundary(&self, cell: usize, facet: usize) -> bool {
        self.links[cell][facet].is_none()
    }

    /// Signed slack `offset - normal . x` of every facet; nonnegative inside.
    pub fn slack(&self, cell: usize, x: &[f64]) -> Vec<f64> {
        self.facets[cell]
            .iter()
            .map(|f| f.offset - dot(&f.normal, x))
            .collect()
    }

    pub fn contains(&self, cell: usize, x: &[f64], tol: f64) -> bool {
        self.slack(cell, x).iter().all(|s| *s >= -tol)
    }

    /// Crosses the gluing behind `link`: the neighbor cell, and maps for
    /// points and directions into its coordinates.
    pub fn cross(&self, link: FacetLink, x: &[f64], w: &[f64]) -> (usize, Vec<f64>, Vec<f64>) {
        let g = &self.complex.gluings[link.gluing];
        if link.forward {
            (
                g.cell_b,
                g.transition.apply(x),
                g.transition.apply_linear(w),
            )
        } else {
            let a = g.transition.matrix().inverse().expect("unimodular");
            let shifted: Vec<f64> = x
                .iter()
                .zip(&g.transition.translation)
                .map(|(p, t)| p - t)
                .collect();
            (g.cell_a, a.mat_vec(&shifted), a.mat_vec(w))
        }
    }

    pub fn barycenter(&self, cell: usize) -> Vec<f64> {
        let v = self.vertices(cell);
        let n = v.len() as f64;
        (0..self.dim())
            .map(|i| v.iter().map(|p| p[i]).sum::<f64>() / n)
            .collect()
    }
}

fn sorted(v: &[usize]) -> Vec<usize> {
    let mut s = v.to_vec();
    s.sort_unstable();
    s
}

fn find_facet(fs: &[Facet], face: &[usize]) -> Option<usize> {
    let want = sorted(face);
    fs.iter().position(|f| f.vertices == want)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_has_four_facets() {
        let sq = vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
            vec![0.0, 1.0],
        ];
        let f = facets(&sq, 2, 1e-9);
        assert_eq!(f.len(), 4);
        for facet in &f {
            assert_eq!(facet.vertices.len(), 2);
            for p in &sq {
                assert!(dot(&facet.normal, p) <= facet.offset + 1e-12);
            }
        }
    }

    #[test]
    fn cube_has_six_facets_and_interval_two() {
        let cube: Vec<Vec<f64>> = (0..8)
            .map(|i| vec![(i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64])
            .collect();
        assert_eq!(facets(&cube, 3, 1e-9).len(), 6);
        let seg = vec![vec![0.0], vec![2.0], vec![1.0]];
        let f = facets(&seg, 1, 1e-9);
        assert_eq!(f.len(), 2);
    }

    #[test]
    fn exact_determinants() {
        assert_eq!(Transition::identity(3).determinant(), 1);
        assert_eq!(
            Transition::new(vec![vec![0, 1], vec![1, 0]], vec![0.0, 0.0]).determinant(),
            -1
        );
        assert_eq!(
            Transition::new(vec![vec![2, 1], vec![1, 1]], vec![0.0, 0.0]).determinant(),
            1
        );
        assert_eq!(
            Transition::new(vec![vec![2, 0], vec![0, 1]], vec![0.0, 0.0]).determinant(),
            2
        );
        assert_eq!(
            Transition::new(
                vec![vec![1, 2, 3], vec![0, 1, 4], vec![5, 6, 0]],
                vec![0.0; 3]
            )
            .determinant(),
            1
        );
    }

    #[test]
    fn rejects_bad_gluings() {
        let sq = Cell {
            vertices: vec![
                vec![0.0, 0.0],
                vec![1.0, 0.0],
                vec![1.0, 1.0],
                vec![0.0, 1.0],
            ],
        };
        let mut x = AffineComplex {
            name: String::new(),
            dim: 2,
            cells: vec![sq.clone(), sq],
            gluings: vec![Gluing {
                cell_a: 0,
                face_a: vec![1, 2],
                cell_b: 1,
                face_b: vec![0, 3],
                transition: Transition::translation(vec![-1.0, 0.0]),
            }],
            precision: GEOMETRY_TOLERANCE,
        };
        assert!(Geometry::new(&x).is_ok());
        x.gluings[0].transition = Transition::new(vec![vec![2, 0], vec![0, 1]], vec![-1.0, 0.0]);
        assert!(matches!(
            Geometry::new(&x),
            Err(AffineError::MalformedComplex(_))
        ));
        x.gluings[0].transition = Transition::translation(vec![-0.5, 0.0]);
        assert!(Geometry::new(&x).is_err());
        x.gluings[0].transition = Transition::translation(vec![-1.0, 0.0]);
        x.gluings[0].face_a = vec![0, 2];
        assert!(Geometry::new(&x).is_err());
    }
}
