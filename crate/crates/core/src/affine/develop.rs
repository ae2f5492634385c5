use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;

use super::complex::{dist, Geometry};
use super::{AffineComplex, AffineError};
use crate::linalg::RMat;

/// Affine chart `y = linear x + offset` of one cell into `R^k`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Chart {
    pub linear: Vec<Vec<f64>>,
    pub offset: Vec<f64>,
}

/// Affine map collected around a loop of cells, as `x -> linear x + translation`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Holonomy {
    /// The non-tree gluing that closes the loop.
    pub gluing: usize,
    pub linear: Vec<Vec<f64>>,
    pub translation: Vec<f64>,
    /// `max(|linear - I|, |translation|)`.
    pub deviation: f64,
}

/// The developing map of a simply connected complex: one chart per cell,
/// compatible across every gluing.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DevelopingMap {
    pub base_cell: usize,
    pub charts: Vec<Chart>,
    /// One entry per non-tree gluing; all are the identity within tolerance.
    pub holonomies: Vec<Holonomy>,
}

fn to_rows(m: &RMat) -> Vec<Vec<f64>> {
    (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| m[(i, j)]).collect())
        .collect()
}

impl Chart {
    pub fn identity(k: usize) -> Self {
        Self {
            linear: to_rows(&RMat::identity(k)),
            offset: vec![0.0; k],
        }
    }

    pub fn matrix(&self) -> RMat {
        let k = self.offset.len();
        RMat::from_fn(k, k, |i, j| self.linear[i][j])
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.linear
            .iter()
            .zip(&self.offset)
            .map(|(r, c)| c + r.iter().zip(x).map(|(a, b)| a * b).sum::<f64>())
            .collect()
    }

    pub fn apply_linear(&self, w: &[f64]) -> Vec<f64> {
        self.linear
            .iter()
            .map(|r| r.iter().zip(w).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Preimage of `y`; `None` if the linear part is singular.
    pub fn invert(&self, y: &[f64]) -> Option<Vec<f64>> {
        let shifted: Vec<f64> = y.iter().zip(&self.offset).map(|(a, b)| a - b).collect();
        Some(self.matrix().lu()?.solve(&shifted))
    }

    pub fn invert_linear(&self, d: &[f64]) -> Option<Vec<f64>> {
        Some(self.matrix().lu()?.solve(d))
    }

    fn from_parts(m: &RMat, offset: Vec<f64>) -> Self {
        Self {
            linear: to_rows(m),
            offset,
        }
    }
}

/// Chart of the far cell of a gluing, given the chart of the near one.
pub(crate) fn propagate(geom: &Geometry<'_>, gluing: usize, forward: bool, near: &Chart) -> Chart {
    let t = &geom.complex.gluings[gluing].transition;
    let a = t.matrix();
    let m = near.matrix();
    if forward {
        // chart_b = chart_a o T^-1
        let mb = m.matmul(&a.inverse().expect("unimodular"));
        let shift = mb.mat_vec(&t.translation);
        Chart::from_parts(
            &mb,
            near.offset.iter().zip(&shift).map(|(c, s)| c - s).collect(),
        )
    } else {
        // chart_a = chart_b o T
        let ma = m.matmul(&a);
        let shift = m.mat_vec(&t.translation);
        Chart::from_parts(
            &ma,
            near.offset.iter().zip(&shift).map(|(c, s)| c + s).collect(),
        )
    }
}

fn holonomy(gluing: usize, existing: &Chart, arriving: &Chart) -> Holonomy {
    let inv = existing.matrix().inverse().expect("charts are unimodular");
    let l = inv.matmul(&arriving.matrix());
    let dc: Vec<f64> = arriving
        .offset
        .iter()
        .zip(&existing.offset)
        .map(|(a, b)| a - b)
        .collect();
    let v = inv.mat_vec(&dc);
    let k = v.len();
    let dev = l
        .max_abs_diff(&RMat::identity(k))
        .max(v.iter().fold(0.0f64, |m, x| m.max(Float::abs(*x))));
    Holonomy {
        gluing,
        linear: to_rows(&l),
        translation: v,
        deviation: dev,
    }
}

/// Develops `x` into `R^k` along a breadth-first spanning tree rooted at
/// `base_cell`. Each non-tree gluing contributes the holonomy of the loop it
/// closes; any nontrivial holonomy is an error.
pub fn develop(x: &AffineComplex, base_cell: usize) -> Result<DevelopingMap, AffineError> {
    let geom = Geometry::new(x)?;
    develop_checked(&geom, base_cell)
}

pub(crate) fn develop_checked(
    geom: &Geometry<'_>,
    base_cell: usize,
) -> Result<DevelopingMap, AffineError> {
    let x = geom.complex;
    if base_cell >= x.cells.len() {
        return Err(AffineError::MalformedComplex(alloc::format!(
            "base cell {base_cell} does not exist"
        )));
    }
    let mut adj: Vec<Vec<(usize, bool)>> = vec![Vec::new(); x.cells.len()];
    for (gi, g) in x.gluings.iter().enumerate() {
        adj[g.cell_a].push((gi, true));
        adj[g.cell_b].push((gi, false));
    }
    let mut charts: Vec<Option<Chart>> = vec![None; x.cells.len()];
    let mut tree = vec![false; x.gluings.len()];
    charts[base_cell] = Some(Chart::identity(x.dim));
    let mut queue = VecDeque::from([base_cell]);
    while let Some(c) = queue.pop_front() {
        let near = charts[c].clone().expect("queued cells have charts");
        for &(gi, forward) in &adj[c] {
            let g = &x.gluings[gi];
            let far = if forward { g.cell_b } else { g.cell_a };
            if charts[far].is_none() {
                charts[far] = Some(propagate(geom, gi, forward, &near));
                tree[gi] = true;
                queue.push_back(far);
            }
        }
    }
    let charts: Vec<Chart> = charts
        .into_iter()
        .enumerate()
        .map(|(i, c)| {
            c.ok_or_else(|| {
                AffineError::MalformedComplex(alloc::format!(
                    "cell {i} is not connected to the base cell"
                ))
            })
        })
        .collect::<Result<_, _>>()?;
    let mut holonomies = Vec::new();
    for (gi, g) in x.gluings.iter().enumerate() {
        if tree[gi] {
            continue;
        }
        let arriving = propagate(geom, gi, true, &charts[g.cell_a]);
        let h = holonomy(gi, &charts[g.cell_b], &arriving);
        if h.deviation > geom.tol {
            return Err(AffineError::Monodromy(h));
        }
        holonomies.push(h);
    }
    Ok(DevelopingMap {
        base_cell,
        charts,
        holonomies,
    })
}

/// `[[A, t], [0, 1]]`.
fn homogeneous(linear: &RMat, translation: &[f64]) -> RMat {
    let k = translation.len();
    RMat::from_fn(k + 1, k + 1, |i, j| match (i < k, j < k) {
        (true, true) => linear[(i, j)],
        (true, false) => translation[i],
        (false, l) => f64::from(u8::from(!l)),
    })
}

impl Holonomy {
    /// Re-derives the loop from the raw gluing data: walks from `cell_b` back
    /// to `cell_a` without the closing gluing, composes the transitions met on
    /// the way with the closing one, and checks that the loop map is
    /// nontrivial and equals this holonomy or its inverse.
    pub fn verify(&self, x: &AffineComplex) -> bool {
        let Some(close) = x.gluings.get(self.gluing) else {
            return false;
        };
        let k = x.dim;
        if self.linear.len() != k
            || self.translation.len() != k
            || close.cell_a >= x.cells.len()
            || close.cell_b >= x.cells.len()
        {
            return false;
        }
        // maps[c]: coordinates of cell_b -> coordinates of cell c.
        let mut maps: Vec<Option<RMat>> = vec![None; x.cells.len()];
        maps[close.cell_b] = Some(RMat::identity(k + 1));
        let mut queue = VecDeque::from([close.cell_b]);
        while let Some(c) = queue.pop_front() {
            let here = maps[c].clone().expect("queued cells have maps");
            for (gi, g) in x.gluings.iter().enumerate() {
                if gi == self.gluing {
                    continue;
                }
                let t = homogeneous(&g.transition.matrix(), &g.transition.translation);
                let step = if g.cell_a == c && maps[g.cell_b].is_none() {
                    Some((g.cell_b, t))
                } else if g.cell_b == c && maps[g.cell_a].is_none() {
                    t.inverse().map(|ti| (g.cell_a, ti))
                } else {
                    None
                };
                if let Some((far, m)) = step {
                    maps[far] = Some(m.matmul(&here));
                    queue.push_back(far);
                }
            }
        }
        let Some(path) = maps[close.cell_a].clone() else {
            return false;
        };
        let closing = homogeneous(&close.transition.matrix(), &close.transition.translation);
        let loop_map = closing.matmul(&path);
        let id = RMat::identity(k + 1);
        if loop_map.max_abs_diff(&id) <= x.precision {
            return false;
        }
        let mut rows = self.linear.iter().flatten().copied().collect::<Vec<f64>>();
        rows.truncate(k * k);
        let stored = homogeneous(&RMat::from_row_major(k, k, &rows), &self.translation);
        let tol = 1e-9 * (1.0 + stored.max_abs());
        loop_map.max_abs_diff(&stored) <= tol
            || loop_map
                .inverse()
                .is_some_and(|inv| inv.max_abs_diff(&stored) <= tol)
    }
}

impl DevelopingMap {
    /// Developed vertices of `cell`.
    pub fn developed_cell(&self, x: &AffineComplex, cell: usize) -> Vec<Vec<f64>> {
        x.cells[cell]
            .vertices
            .iter()
            .map(|v| self.charts[cell].apply(v))
            .collect()
    }

    /// Worst disagreement of the two charts on glued face vertices.
    pub fn compatibility_error(&self, x: &AffineComplex) -> f64 {
        let mut worst: f64 = 0.0;
        for g in &x.gluings {
            for &i in &g.face_a {
                let v = &x.cells[g.cell_a].vertices[i];
                let ya = self.charts[g.cell_a].apply(v);
                let yb = self.charts[g.cell_b].apply(&g.transition.apply(v));
                worst = worst.max(dist(&ya, &yb));
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::super::corpus;
    use super::*;

    #[test]
    fn rectangle_develops_without_loops() {
        let x = corpus::glued_rectangle(3, 2);
        let d = develop(&x, 0).unwrap();
        assert!(d.compatibility_error(&x) < 1e-12);
        for h in &d.holonomies {
            assert!(h.deviation < 1e-12);
        }
        // Four interior loops in a 3x2 grid of squares.
        assert_eq!(d.holonomies.len(), x.gluings.len() - (x.cells.len() - 1));
    }

    #[test]
    fn cylinder_has_translation_monodromy() {
        let x = corpus::cylinder();
        match develop(&x, 0) {
            Err(AffineError::Monodromy(h)) => {
                assert!(Float::abs(Float::abs(h.translation[0]) - 1.0) < 1e-12);
                assert!(Float::abs(h.translation[1]) < 1e-12);
                assert!(h.linear[0][0] == 1.0 && h.linear[1][1] == 1.0);
            }
            other => panic!("expected monodromy, got {other:?}"),
        }
    }

    #[test]
    fn holonomy_witness_reverifies() {
        let x = corpus::cylinder();
        let Err(AffineError::Monodromy(h)) = develop(&x, 0) else {
            panic!("expected monodromy")
        };
        assert!(h.verify(&x));
        let mut fake = h.clone();
        fake.translation[0] = 3.0;
        assert!(!fake.verify(&x));
        let trivial = Holonomy {
            gluing: 0,
            linear: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            translation: vec![0.0, 0.0],
            deviation: 0.0,
        };
        assert!(!trivial.verify(&corpus::glued_rectangle(1, 2)));
    }

    #[test]
    fn twisted_gluing_composes_charts() {
        let x = corpus::sheared_pair();
        let d = develop(&x, 0).unwrap();
        assert!(d.compatibility_error(&x) < 1e-12);
        let d1 = develop(&x, 1).unwrap();
        assert!(d1.compatibility_error(&x) < 1e-12);
    }
}
