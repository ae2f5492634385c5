//! Small named complexes: convex ones that must be accepted and
//! counterexamples that must be rejected.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::complex::{dist, facets, GEOMETRY_TOLERANCE};
use super::{AffineComplex, Cell, Gluing, Transition};

fn square(x: f64, y: f64) -> Cell {
    Cell {
        vertices: vec![
            vec![x, y],
            vec![x + 1.0, y],
            vec![x + 1.0, y + 1.0],
            vec![x, y + 1.0],
        ],
    }
}

/// Cells given in one global chart, glued by the identity along every
/// facet two cells share.
pub fn from_global_cells(name: &str, dim: usize, cells: Vec<Cell>) -> AffineComplex {
    let fs: Vec<_> = cells
        .iter()
        .map(|c| facets(&c.vertices, dim, GEOMETRY_TOLERANCE))
        .collect();
    let mut gluings = Vec::new();
    for a in 0..cells.len() {
        for b in a + 1..cells.len() {
            for fa in &fs[a] {
                for fb in &fs[b] {
                    let same = fa.vertices.len() == fb.vertices.len()
                        && fa.vertices.iter().all(|&i| {
                            fb.vertices.iter().any(|&j| {
                                dist(&cells[a].vertices[i], &cells[b].vertices[j]) < 1e-12
                            })
                        });
                    if same {
                        gluings.push(Gluing {
                            cell_a: a,
                            face_a: fa.vertices.clone(),
                            cell_b: b,
                            face_b: fb.vertices.clone(),
                            transition: Transition::identity(dim),
                        });
                    }
                }
            }
        }
    }
    AffineComplex {
        name: String::from(name),
        dim,
        cells,
        gluings,
        precision: GEOMETRY_TOLERANCE,
    }
}

/// `m x n` unit squares.
pub fn glued_rectangle(m: usize, n: usize) -> AffineComplex {
    let cells = (0..m)
        .flat_map(|i| (0..n).map(move |j| square(i as f64, j as f64)))
        .collect();
    from_global_cells("rectangle", 2, cells)
}

/// Three unit squares around the reflex corner `(1, 1)`.
pub fn l_shape() -> AffineComplex {
    from_global_cells(
        "l-shape",
        2,
        vec![square(0.0, 0.0), square(1.0, 0.0), square(0.0, 1.0)],
    )
}

/// The 3x3 grid of squares without its center.
pub fn frame() -> AffineComplex {
    let cells = (0..3)
        .flat_map(|i| (0..3).map(move |j| (i, j)))
        .filter(|&(i, j)| (i, j) != (1, 1))
        .map(|(i, j)| square(i as f64, j as f64))
        .collect();
    from_global_cells("frame", 2, cells)
}

/// `n` unit squares stacked into `[0, 1] x [0, n]`.
pub fn half_strip(n: usize) -> AffineComplex {
    from_global_cells(
        "half-strip",
        2,
        (0..n).map(|j| square(0.0, j as f64)).collect(),
    )
}

pub fn hexagon() -> AffineComplex {
    let v = [
        (0.0, 0.0),
        (2.0, 0.0),
        (3.0, 1.0),
        (3.0, 2.0),
        (1.0, 2.0),
        (0.0, 1.0),
    ];
    from_global_cells(
        "hexagon",
        2,
        vec![Cell {
            vertices: v.iter().map(|&(a, b)| vec![a, b]).collect(),
        }],
    )
}

/// The standard simplex in `R^k`.
pub fn simplex(k: usize) -> AffineComplex {
    let mut v = vec![vec![0.0; k]];
    v.extend((0..k).map(|i| (0..k).map(|j| if i == j { 1.0 } else { 0.0 }).collect()));
    from_global_cells("simplex", k, vec![Cell { vertices: v }])
}

/// Truncated Weyl chamber of `SU(3)` in fundamental-weight coordinates,
/// `{a, b >= 0, a, b <= extent}`, cut into two triangles along the diagonal.
pub fn weyl_chamber_su3(extent: f64) -> AffineComplex {
    let l = extent;
    let t1 = Cell {
        vertices: vec![vec![0.0, 0.0], vec![l, 0.0], vec![l, l]],
    };
    let t2 = Cell {
        vertices: vec![vec![0.0, 0.0], vec![l, l], vec![0.0, l]],
    };
    from_global_cells("weyl-su3", 2, vec![t1, t2])
}

/// Truncated Weyl chamber of `SU(2)`: `[0, n]` as `n` unit intervals.
pub fn weyl_chamber_su2(n: usize) -> AffineComplex {
    from_global_cells(
        "weyl-su2",
        1,
        (0..n)
            .map(|i| Cell {
                vertices: vec![vec![i as f64], vec![i as f64 + 1.0]],
            })
            .collect(),
    )
}

/// The unit cube cut into two triangular prisms along `x = y`.
pub fn cube_prisms() -> AffineComplex {
    let p = |pts: &[[f64; 3]]| Cell {
        vertices: pts.iter().map(|q| q.to_vec()).collect(),
    };
    let a = p(&[
        [0.0, 0.0, 0.0],
        [1.0, 0.0, 0.0],
        [1.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [1.0, 0.0, 1.0],
        [1.0, 1.0, 1.0],
    ]);
    let b = p(&[
        [0.0, 0.0, 0.0],
        [1.0, 1.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [1.0, 1.0, 1.0],
        [0.0, 1.0, 1.0],
    ]);
    from_global_cells("cube-prisms", 3, vec![a, b])
}

/// Two unit squares side by side; the second cell is stored in sheared
/// coordinates `(x, x + y)`, so the gluing has a nontrivial linear part.
pub fn sheared_pair() -> AffineComplex {
    let s = Transition::new(vec![vec![1, 0], vec![1, 1]], vec![0.0, 0.0]);
    let b = Cell {
        vertices: square(1.0, 0.0)
            .vertices
            .iter()
            .map(|v| s.apply(v))
            .collect(),
    };
    AffineComplex {
        name: "sheared-pair".into(),
        dim: 2,
        cells: vec![square(0.0, 0.0), b],
        // Right edge of the first square onto the left edge of the second.
        gluings: vec![Gluing {
            cell_a: 0,
            face_a: vec![1, 2],
            cell_b: 1,
            face_b: vec![0, 3],
            transition: s,
        }],
        precision: GEOMETRY_TOLERANCE,
    }
}

/// Two unit squares glued along an edge by a reflection, so the second
/// develops on top of the first.
pub fn folded_pair() -> AffineComplex {
    AffineComplex {
        name: "folded-pair".into(),
        dim: 2,
        cells: vec![square(0.0, 0.0), square(0.0, 0.0)],
        gluings: vec![Gluing {
            cell_a: 0,
            face_a: vec![1, 2],
            cell_b: 1,
            face_b: vec![0, 3],
            transition: Transition::new(vec![vec![-1, 0], vec![0, 1]], vec![1.0, 0.0]),
        }],
        precision: GEOMETRY_TOLERANCE,
    }
}

/// A unit square with its left and right edges identified by translation.
pub fn cylinder() -> AffineComplex {
    AffineComplex {
        name: "cylinder".into(),
        dim: 2,
        cells: vec![square(0.0, 0.0)],
        gluings: vec![Gluing {
            cell_a: 0,
            face_a: vec![1, 2],
            cell_b: 0,
            face_b: vec![0, 3],
            transition: Transition::translation(vec![-1.0, 0.0]),
        }],
        precision: GEOMETRY_TOLERANCE,
    }
}

/// Complexes whose developing map is injective with convex image.
pub fn positive() -> Vec<AffineComplex> {
    vec![
        simplex(2),
        simplex(3),
        hexagon(),
        glued_rectangle(1, 2),
        glued_rectangle(3, 2),
        weyl_chamber_su3(2.0),
        weyl_chamber_su2(3),
        cube_prisms(),
        sheared_pair(),
    ]
}

pub fn negative() -> Vec<AffineComplex> {
    vec![l_shape(), frame(), folded_pair(), cylinder()]
}
