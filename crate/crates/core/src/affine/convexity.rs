use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_traits::Float;
use rand::Rng;

use super::complex::{affine_rank, dist, dot, facets, Facet, FacetLink, Geometry};
use super::develop::{develop, develop_checked, propagate, Chart, DevelopingMap};
use super::{AffineComplex, AffineError};
use crate::rng::{gaussian, stream_rng};

/// Coverage tolerance for image and star checks.
pub const COVERAGE_TOLERANCE: f64 = 1e-6;

/// A boundary vertex whose tangent cone is not convex: `d1` and `d2` lie in
/// the cone but `exit = (1 - t) d1 + t d2` does not.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConeWitness {
    pub cell: usize,
    pub vertex: usize,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
    pub t: f64,
    pub exit: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LocalConvexityReport {
    pub vertices: usize,
    pub boundary_vertices: usize,
    pub witness: Option<ConeWitness>,
}

impl LocalConvexityReport {
    pub fn is_convex(&self) -> bool {
        self.witness.is_none()
    }
}

/// One developed corner of the star of a vertex.
struct Corner {
    cell: usize,
    vertex: usize,
    chart: Chart,
}

/// Pairs of corresponding vertex indices across each gluing.
fn vertex_matches(geom: &Geometry<'_>) -> Vec<Vec<(usize, usize)>> {
    let x = geom.complex;
    x.gluings
        .iter()
        .map(|g| {
            let vb = geom.vertices(g.cell_b);
            g.face_a
                .iter()
                .filter_map(|&i| {
                    let m = g.transition.apply(&geom.vertices(g.cell_a)[i]);
                    g.face_b
                        .iter()
                        .find(|&&j| dist(&m, &vb[j]) <= geom.tol)
                        .map(|&j| (i, j))
                })
                .collect()
        })
        .collect()
}

fn facets_at<'g>(
    geom: &'g Geometry<'_>,
    cell: usize,
    vertex: usize,
) -> impl Iterator<Item = (usize, &'g Facet)> + 'g {
    geom.facets[cell]
        .iter()
        .enumerate()
        .filter(move |(_, f)| f.vertices.contains(&vertex))
}

/// Develops the star of vertex `(cell, vertex)` with that vertex at the origin.
fn star(
    geom: &Geometry<'_>,
    matches: &[Vec<(usize, usize)>],
    cell: usize,
    vertex: usize,
) -> Result<Vec<Corner>, AffineError> {
    let k = geom.dim();
    let v = &geom.vertices(cell)[vertex];
    let mut root = Chart::identity(k);
    root.offset = v.iter().map(|c| -c).collect();
    let mut corners = vec![Corner {
        cell,
        vertex,
        chart: root,
    }];
    let mut queue = VecDeque::from([0usize]);
    while let Some(ci) = queue.pop_front() {
        let (c, i) = (corners[ci].cell, corners[ci].vertex);
        let near = corners[ci].chart.clone();
        for (f, _) in facets_at(geom, c, i) {
            let Some(link) = geom.links[c][f] else {
                continue;
            };
            let g = &geom.complex.gluings[link.gluing];
            let pair =
                matches[link.gluing]
                    .iter()
                    .find(|(a, b)| if link.forward { *a == i } else { *b == i });
            let Some(&(a, b)) = pair else { continue };
            let (far_cell, far_vertex) = if link.forward {
                (g.cell_b, b)
            } else {
                (g.cell_a, a)
            };
            let chart = propagate(geom, link.gluing, link.forward, &near);
            match corners
                .iter()
                .find(|q| q.cell == far_cell && q.vertex == far_vertex)
            {
                Some(q) => {
                    if q.chart.matrix().max_abs_diff(&chart.matrix()) > geom.tol
                        || dist(&q.chart.offset, &chart.offset) > geom.tol
                    {
                        return Err(AffineError::MalformedComplex(alloc::format!(
                            "the star of vertex {vertex} of cell {cell} has holonomy"
                        )));
                    }
                }
                None => {
                    corners.push(Corner {
                        cell: far_cell,
                        vertex: far_vertex,
                        chart,
                    });
                    queue.push_back(corners.len() - 1);
                }
            }
        }
    }
    Ok(corners)
}

fn in_corner_cone(geom: &Geometry<'_>, corner: &Corner, d: &[f64]) -> bool {
    let Some(w) = corner.chart.invert_linear(d) else {
        return false;
    };
    let scale = Float::sqrt(dot(&w, &w));
    facets_at(geom, corner.cell, corner.vertex).all(|(_, f)| dot(&f.normal, &w) <= 1e-9 * scale)
}

fn in_union(geom: &Geometry<'_>, corners: &[Corner], d: &[f64]) -> bool {
    corners.iter().any(|c| in_corner_cone(geom, c, d))
}

fn unit(v: Vec<f64>) -> Vec<f64> {
    let n = Float::sqrt(dot(&v, &v));
    v.into_iter().map(|x| x / n).collect()
}

const CONE_SAMPLES: usize = 16;

fn cone_witness(geom: &Geometry<'_>, corners: &[Corner]) -> Option<ConeWitness> {
    let mut rays: Vec<Vec<f64>> = Vec::new();
    for c in corners {
        let v = &geom.vertices(c.cell)[c.vertex];
        for (j, u) in geom.vertices(c.cell).iter().enumerate() {
            if j != c.vertex {
                let e: Vec<f64> = u.iter().zip(v).map(|(a, b)| a - b).collect();
                rays.push(unit(c.chart.apply_linear(&e)));
            }
        }
    }
    for (a, d1) in rays.iter().enumerate() {
        for d2 in &rays[a + 1..] {
            for s in 1..CONE_SAMPLES {
                let t = s as f64 / CONE_SAMPLES as f64;
                let exit: Vec<f64> = d1
                    .iter()
                    .zip(d2)
                    .map(|(p, q)| (1.0 - t) * p + t * q)
                    .collect();
                if Float::sqrt(dot(&exit, &exit)) < 1e-9 {
                    continue;
                }
                if !in_union(geom, corners, &exit) {
                    let root = &corners[0];
                    return Some(ConeWitness {
                        cell: root.cell,
                        vertex: root.vertex,
                        d1: d1.clone(),
                        d2: d2.clone(),
                        t,
                        exit,
                    });
                }
            }
        }
    }
    None
}

/// Checks that the developed tangent cone at every boundary vertex is convex.
pub fn check_local_convexity(x: &AffineComplex) -> Result<LocalConvexityReport, AffineError> {
    let geom = Geometry::new(x)?;
    local_convexity(&geom)
}

fn local_convexity(geom: &Geometry<'_>) -> Result<LocalConvexityReport, AffineError> {
    let matches = vertex_matches(geom);
    let n_cells = geom.complex.cells.len();
    let mut seen: Vec<Vec<bool>> = (0..n_cells)
        .map(|c| vec![false; geom.vertices(c).len()])
        .collect();
    let mut report = LocalConvexityReport {
        vertices: 0,
        boundary_vertices: 0,
        witness: None,
    };
    for c in 0..n_cells {
        for i in 0..geom.vertices(c).len() {
            if seen[c][i] {
                continue;
            }
            let corners = star(geom, &matches, c, i)?;
            for q in &corners {
                seen[q.cell][q.vertex] = true;
            }
            report.vertices += 1;
            let boundary = corners.iter().any(|q| {
                facets_at(geom, q.cell, q.vertex).any(|(f, _)| geom.is_boundary(q.cell, f))
            });
            if !boundary {
                continue;
            }
            report.boundary_vertices += 1;
            if report.witness.is_none() {
                report.witness = cone_witness(geom, &corners);
            }
        }
    }
    Ok(report)
}

impl ConeWitness {
    /// Rebuilds the star of the vertex and re-tests the three directions.
    pub fn verify(&self, x: &AffineComplex) -> bool {
        let Ok(geom) = Geometry::new(x) else {
            return false;
        };
        if self.cell >= x.cells.len() || self.vertex >= geom.vertices(self.cell).len() {
            return false;
        }
        let Ok(corners) = star(&geom, &vertex_matches(&geom), self.cell, self.vertex) else {
            return false;
        };
        let exit: Vec<f64> = self
            .d1
            .iter()
            .zip(&self.d2)
            .map(|(p, q)| (1.0 - self.t) * p + self.t * q)
            .collect();
        dist(&exit, &self.exit) < 1e-12
            && in_union(&geom, &corners, &self.d1)
            && in_union(&geom, &corners, &self.d2)
            && !in_union(&geom, &corners, &exit)
    }
}

/// Evenly spread unit directions in `R^k`: equal angles for `k = 2`, a
/// Fibonacci lattice for `k = 3`, seeded Gaussian directions beyond.
pub fn fibonacci_directions(k: usize, n: usize) -> Vec<Vec<f64>> {
    match k {
        0 => Vec::new(),
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..n)
            .map(|i| {
                let a = 2.0 * PI * (i as f64 + 0.5) / n as f64;
                vec![Float::cos(a), Float::sin(a)]
            })
            .collect(),
        3 => {
            let golden = PI * (3.0 - Float::sqrt(5.0));
            (0..n)
                .map(|i| {
                    let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
                    let r = Float::sqrt(1.0 - z * z);
                    let a = golden * i as f64;
                    vec![r * Float::cos(a), r * Float::sin(a), z]
                })
                .collect()
        }
        _ => {
            let mut rng = stream_rng(0, k as u64);
            (0..n)
                .map(|_| unit((0..k).map(|_| gaussian(&mut rng)).collect()))
                .collect()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct StarSettings {
    pub directions: usize,
    pub samples_per_cell: usize,
    pub seed: u64,
    pub max_crossings: usize,
}

impl Default for StarSettings {
    fn default() -> Self {
        Self {
            directions: 64,
            samples_per_cell: 48,
            seed: 0,
            max_crossings: 10_000,
        }
    }
}

/// The developed segment `l_v` from the base point along `direction`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Segment {
    pub direction: Vec<f64>,
    pub length: f64,
    pub end_cell: usize,
    pub end: Vec<f64>,
    pub crossings: usize,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StarReport {
    pub base_cell: usize,
    pub base_point: Vec<f64>,
    pub segments: Vec<Segment>,
    pub samples: usize,
    pub covered: usize,
    /// A sampled point no straight segment from the base point reaches.
    pub uncovered: Option<(usize, Vec<f64>)>,
}

impl StarReport {
    pub fn coverage(&self) -> f64 {
        if self.samples == 0 {
            1.0
        } else {
            self.covered as f64 / self.samples as f64
        }
    }
}

struct WalkEnd {
    length: f64,
    cell: usize,
    point: Vec<f64>,
    crossings: usize,
}

fn entry_facet(
    geom: &Geometry<'_>,
    cell: usize,
    gluing: usize,
    came_forward: bool,
) -> Option<usize> {
    geom.links[cell].iter().position(|l| matches!(l, Some(FacetLink { gluing: g, forward }) if *g == gluing && *forward != came_forward))
}

/// Walks the straight developed segment from `x` in `cell` along unit
/// developed direction `d` for at most `max_len`, crossing gluings.
fn walk(
    geom: &Geometry<'_>,
    dev: &DevelopingMap,
    mut cell: usize,
    mut x: Vec<f64>,
    d: &[f64],
    max_len: f64,
    max_crossings: usize,
) -> Result<WalkEnd, AffineError> {
    let tiny = 1e-12;
    let mut length = 0.0;
    let mut crossings = 0;
    loop {
        let w = dev.charts[cell]
            .invert_linear(d)
            .ok_or(AffineError::NotLocallyInjective { cell, gluing: None })?;
        let exit_time = |c: usize, p: &[f64], w: &[f64]| -> f64 {
            geom.facets[c]
                .iter()
                .filter_map(|f| {
                    let r = dot(&f.normal, w);
                    (r > tiny).then(|| (f.offset - dot(&f.normal, p)).max(0.0) / r)
                })
                .fold(f64::INFINITY, f64::min)
        };
        let t = exit_time(cell, &x, &w);
        if length + t >= max_len {
            let s = max_len - length;
            let point = x.iter().zip(&w).map(|(p, q)| p + s * q).collect();
            return Ok(WalkEnd {
                length: max_len,
                cell,
                point,
                crossings,
            });
        }
        x.iter_mut().zip(&w).for_each(|(p, q)| *p += t * q);
        length += t;
        let exiting: Vec<usize> = geom.facets[cell]
            .iter()
            .enumerate()
            .filter(|(_, f)| {
                dot(&f.normal, &w) > tiny && f.offset - dot(&f.normal, &x) <= 1e-10 * (1.0 + t)
            })
            .map(|(i, _)| i)
            .collect();
        if exiting.is_empty() || exiting.iter().any(|&f| geom.is_boundary(cell, f)) {
            return Ok(WalkEnd {
                length,
                cell,
                point: x,
                crossings,
            });
        }
        let mut best: Option<(f64, usize, Vec<f64>)> = None;
        for &f in &exiting {
            let link = geom.links[cell][f].expect("checked above");
            let (next, y, _) = geom.cross(link, &x, &w);
            let w2 = dev.charts[next]
                .invert_linear(d)
                .ok_or(AffineError::NotLocallyInjective {
                    cell: next,
                    gluing: Some(link.gluing),
                })?;
            let entry = entry_facet(geom, next, link.gluing, link.forward)
                .expect("gluings link both sides");
            if dot(&geom.facets[next][entry].normal, &w2) >= -tiny {
                // The neighbor develops onto the same side of the shared facet.
                return Err(AffineError::NotLocallyInjective {
                    cell: next,
                    gluing: Some(link.gluing),
                });
            }
            let t2 = exit_time(next, &y, &w2);
            if best.as_ref().is_none_or(|b| t2 > b.0) {
                best = Some((t2, next, y));
            }
        }
        let (_, next, y) = best.expect("at least one glued facet");
        cell = next;
        x = y;
        crossings += 1;
        if crossings > max_crossings {
            return Err(AffineError::OpenEscape {
                direction: d.to_vec(),
            });
        }
    }
}

/// Seeded points of a cell: the barycenter and Dirichlet combinations of vertices.
pub(crate) fn cell_samples(
    geom: &Geometry<'_>,
    cell: usize,
    count: usize,
    seed: u64,
) -> Vec<Vec<f64>> {
    let verts = geom.vertices(cell);
    let mut rng = stream_rng(seed, 1000 + cell as u64);
    let mut out = vec![geom.barycenter(cell)];
    for _ in 1..count {
        let w: Vec<f64> = verts
            .iter()
            .map(|_| -Float::ln(1.0 - rng.gen::<f64>()))
            .collect();
        let s: f64 = w.iter().sum();
        out.push(
            (0..geom.dim())
                .map(|i| verts.iter().zip(&w).map(|(v, a)| v[i] * a).sum::<f64>() / s)
                .collect(),
        );
    }
    out
}

fn developed_diameter_bound(geom: &Geometry<'_>, dev: &DevelopingMap) -> f64 {
    let mut total = 1.0;
    for c in 0..geom.complex.cells.len() {
        let d = dev.developed_cell(geom.complex, c);
        let diam = d
            .iter()
            .flat_map(|p| d.iter().map(move |q| dist(p, q)))
            .fold(0.0, f64::max);
        total += diam;
    }
    total
}

/// Propagates straight developed segments from `base_point` (coordinates of
/// `base_cell`) in evenly spread directions until they leave the complex,
/// then checks that every sampled point of the complex is reached by the
/// straight segment aimed at it.
pub fn star_propagate(
    x: &AffineComplex,
    dev: &DevelopingMap,
    base_cell: usize,
    base_point: &[f64],
    settings: &StarSettings,
) -> Result<StarReport, AffineError> {
    let geom = Geometry::new(x)?;
    star_checked(&geom, dev, base_cell, base_point, settings)
}

pub(crate) fn star_checked(
    geom: &Geometry<'_>,
    dev: &DevelopingMap,
    base_cell: usize,
    base_point: &[f64],
    settings: &StarSettings,
) -> Result<StarReport, AffineError> {
    let x = geom.complex;
    if base_cell >= x.cells.len()
        || base_point.len() != x.dim
        || !geom.contains(base_cell, base_point, geom.tol)
    {
        return Err(AffineError::MalformedComplex(
            "base point is not in the base cell".into(),
        ));
    }
    for (c, chart) in dev.charts.iter().enumerate() {
        if Float::abs(chart.matrix().determinant()) < 0.5 {
            return Err(AffineError::NotLocallyInjective {
                cell: c,
                gluing: None,
            });
        }
    }
    let reach = developed_diameter_bound(geom, dev);
    let y0 = dev.charts[base_cell].apply(base_point);
    let mut segments = Vec::new();
    for d in fibonacci_directions(x.dim, settings.directions) {
        let end = walk(
            geom,
            dev,
            base_cell,
            base_point.to_vec(),
            &d,
            reach,
            settings.max_crossings,
        )?;
        if end.length >= reach {
            return Err(AffineError::OpenEscape { direction: d });
        }
        let e = dev.charts[end.cell].apply(&end.point);
        segments.push(Segment {
            direction: d,
            length: end.length,
            end_cell: end.cell,
            end: e,
            crossings: end.crossings,
        });
    }
    let mut samples = 0;
    let mut covered = 0;
    let mut uncovered = None;
    for c in 0..x.cells.len() {
        for p in cell_samples(geom, c, settings.samples_per_cell, settings.seed) {
            samples += 1;
            let y = dev.charts[c].apply(&p);
            let len = dist(&y, &y0);
            let hit = if len < COVERAGE_TOLERANCE {
                true
            } else {
                let d: Vec<f64> = y.iter().zip(&y0).map(|(a, b)| (a - b) / len).collect();
                let end = walk(
                    geom,
                    dev,
                    base_cell,
                    base_point.to_vec(),
                    &d,
                    len,
                    settings.max_crossings,
                )?;
                end.length >= len - COVERAGE_TOLERANCE
                    && (end.cell == c && dist(&end.point, &p) <= COVERAGE_TOLERANCE
                        || dist(&dev.charts[end.cell].apply(&end.point), &y) <= COVERAGE_TOLERANCE
                            && geom.contains(end.cell, &end.point, COVERAGE_TOLERANCE)
                            && on_shared_face(geom, dev, end.cell, &end.point, c))
            };
            if hit {
                covered += 1;
            } else if uncovered.is_none() {
                uncovered = Some((c, p));
            }
        }
    }
    Ok(StarReport {
        base_cell,
        base_point: base_point.to_vec(),
        segments,
        samples,
        covered,
        uncovered,
    })
}

/// The walk ended in a different cell than the sample; accept it only when
/// the end point sits on a facet glued towards the sample's cell.
fn on_shared_face(
    geom: &Geometry<'_>,
    _dev: &DevelopingMap,
    cell: usize,
    p: &[f64],
    target: usize,
) -> bool {
    geom.facets[cell].iter().enumerate().any(|(f, facet)| {
        Float::abs(facet.offset - dot(&facet.normal, p)) <= COVERAGE_TOLERANCE
            && geom.links[cell][f].is_some_and(|l| {
                let g = &geom.complex.gluings[l.gluing];
                (if l.forward { g.cell_b } else { g.cell_a }) == target
            })
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case", tag = "kind"))]
pub enum ConvexityMode {
    Compact,
    /// Checks `X_n`, the component of the preimage of `B_n` around the base
    /// point, for `n = step, 2 step, ...` up to `max_radius`.
    ProperExhaustion {
        max_radius: f64,
        step: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct ConvexitySettings {
    pub mode: ConvexityMode,
    /// Hull grid spacing as a fraction of the image's bounding box.
    pub resolution: f64,
    pub coverage_tolerance: f64,
    pub star: StarSettings,
}

impl Default for ConvexitySettings {
    fn default() -> Self {
        Self {
            mode: ConvexityMode::Compact,
            resolution: 0.05,
            coverage_tolerance: COVERAGE_TOLERANCE,
            star: StarSettings::default(),
        }
    }
}

/// Interior points of two different cells with the same developed image.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CollisionWitness {
    pub cell_a: usize,
    pub point_a: Vec<f64>,
    pub cell_b: usize,
    pub point_b: Vec<f64>,
}

impl CollisionWitness {
    pub fn verify(&self, x: &AffineComplex, dev: &DevelopingMap) -> bool {
        let Ok(geom) = Geometry::new(x) else {
            return false;
        };
        let inside =
            |c: usize, p: &[f64]| c < x.cells.len() && geom.slack(c, p).iter().all(|s| *s > 1e-9);
        self.cell_a != self.cell_b
            && inside(self.cell_a, &self.point_a)
            && inside(self.cell_b, &self.point_b)
            && dist(
                &dev.charts[self.cell_a].apply(&self.point_a),
                &dev.charts[self.cell_b].apply(&self.point_b),
            ) < 1e-9
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExhaustionLevel {
    pub radius: f64,
    pub cells: Vec<usize>,
    pub nested: bool,
    pub convex: bool,
    /// Endpoints of a sampled chord that leaves the image.
    pub chord: Option<(Vec<f64>, Vec<f64>)>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConvexityVerdict {
    pub local: LocalConvexityReport,
    pub collision: Option<CollisionWitness>,
    /// Vertices of the convex hull of the image (counterclockwise for `k = 2`).
    pub hull: Vec<Vec<f64>>,
    pub hull_points: usize,
    /// A hull point outside every developed cell.
    pub hole: Option<Vec<f64>>,
    pub star: Option<StarReport>,
    pub exhaustion: Vec<ExhaustionLevel>,
}

impl ConvexityVerdict {
    pub fn injective(&self) -> bool {
        self.collision.is_none()
    }

    pub fn image_convex(&self) -> bool {
        self.hole.is_none() && self.exhaustion.iter().all(|l| l.convex && l.nested)
    }

    pub fn accepted(&self) -> bool {
        self.local.is_convex() && self.injective() && self.image_convex()
    }
}

fn developed_facets(geom: &Geometry<'_>, dev: &DevelopingMap) -> Vec<(Vec<Vec<f64>>, Vec<Facet>)> {
    (0..geom.complex.cells.len())
        .map(|c| {
            let v = dev.developed_cell(geom.complex, c);
            let f = facets(&v, geom.dim(), geom.tol);
            (v, f)
        })
        .collect()
}

fn min_slack(fs: &[Facet], y: &[f64]) -> f64 {
    fs.iter()
        .map(|f| f.offset - dot(&f.normal, y))
        .fold(f64::INFINITY, f64::min)
}

fn separating_axes(
    k: usize,
    a: &(Vec<Vec<f64>>, Vec<Facet>),
    b: &(Vec<Vec<f64>>, Vec<Facet>),
) -> Vec<Vec<f64>> {
    let mut axes: Vec<Vec<f64>> = a.1.iter().chain(&b.1).map(|f| f.normal.clone()).collect();
    if k == 3 {
        let edges = |p: &(Vec<Vec<f64>>, Vec<Facet>)| -> Vec<Vec<f64>> {
            let n = p.0.len();
            let mut out = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    if p.1
                        .iter()
                        .filter(|f| f.vertices.contains(&i) && f.vertices.contains(&j))
                        .count()
                        >= 2
                    {
                        out.push(p.0[j].iter().zip(&p.0[i]).map(|(x, y)| x - y).collect());
                    }
                }
            }
            out
        };
        for e in edges(a) {
            for f in edges(b) {
                let c = vec![
                    e[1] * f[2] - e[2] * f[1],
                    e[2] * f[0] - e[0] * f[2],
                    e[0] * f[1] - e[1] * f[0],
                ];
                if dot(&c, &c) > 1e-18 {
                    axes.push(c);
                }
            }
        }
    }
    axes
}

fn collision(
    geom: &Geometry<'_>,
    dev: &DevelopingMap,
    polys: &[(Vec<Vec<f64>>, Vec<Facet>)],
    seed: u64,
) -> Option<CollisionWitness> {
    let n = polys.len();
    let margin = 1e-7;
    for a in 0..n {
        for b in a + 1..n {
            let separated = separating_axes(geom.dim(), &polys[a], &polys[b])
                .iter()
                .any(|ax| {
                    let pa = polys[a].0.iter().map(|p| dot(ax, p));
                    let pb = polys[b].0.iter().map(|p| dot(ax, p));
                    let (lo_a, hi_a) = pa.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| {
                        (l.min(v), h.max(v))
                    });
                    let (lo_b, hi_b) = pb.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| {
                        (l.min(v), h.max(v))
                    });
                    let scale = Float::sqrt(dot(ax, ax)) * margin;
                    hi_a <= lo_b + scale || hi_b <= lo_a + scale
                });
            if separated {
                continue;
            }
            let mut candidates: Vec<Vec<f64>> = Vec::new();
            for c in [a, b] {
                candidates.extend(
                    cell_samples(geom, c, 64, seed)
                        .into_iter()
                        .map(|p| dev.charts[c].apply(&p)),
                );
            }
            for p in &polys[a].0 {
                for q in &polys[b].0 {
                    candidates.push(p.iter().zip(q).map(|(u, v)| 0.5 * (u + v)).collect());
                }
            }
            let best = candidates
                .into_iter()
                .map(|y| {
                    (
                        min_slack(&polys[a].1, &y).min(min_slack(&polys[b].1, &y)),
                        y,
                    )
                })
                .max_by(|p, q| p.0.total_cmp(&q.0));
            if let Some((s, y)) = best {
                if s > margin {
                    let point_a = dev.charts[a].invert(&y).expect("unimodular");
                    let point_b = dev.charts[b].invert(&y).expect("unimodular");
                    return Some(CollisionWitness {
                        cell_a: a,
                        point_a,
                        cell_b: b,
                        point_b,
                    });
                }
            }
        }
    }
    None
}

fn hull_vertices(points: &[Vec<f64>], k: usize, fs: &[Facet]) -> Vec<Vec<f64>> {
    if k == 2 {
        let p: Vec<[f64; 2]> = points.iter().map(|v| [v[0], v[1]]).collect();
        return crate::planar::convex_hull(&p)
            .into_iter()
            .map(|q| q.to_vec())
            .collect();
    }
    let mut out: Vec<Vec<f64>> = Vec::new();
    for (i, p) in points.iter().enumerate() {
        let on: Vec<&Facet> = fs.iter().filter(|f| f.vertices.contains(&i)).collect();
        let normals: Vec<Vec<f64>> = on.iter().map(|f| f.normal.clone()).collect();
        let mut pts = vec![vec![0.0; k]];
        pts.extend(normals);
        if affine_rank(&pts, 1e-9) >= k && !out.iter().any(|q| dist(p, q) < 1e-12) {
            out.push(p.clone());
        }
    }
    out
}

const MAX_HULL_POINTS: usize = 250_000;

fn hull_hole(
    polys: &[(Vec<Vec<f64>>, Vec<Facet>)],
    k: usize,
    settings: &ConvexitySettings,
) -> (Vec<Vec<f64>>, usize, Option<Vec<f64>>) {
    let all: Vec<Vec<f64>> = polys.iter().flat_map(|p| p.0.iter().cloned()).collect();
    let hull_f = facets(&all, k, 1e-9);
    let hull = hull_vertices(&all, k, &hull_f);
    let lo: Vec<f64> = (0..k)
        .map(|i| all.iter().map(|p| p[i]).fold(f64::INFINITY, f64::min))
        .collect();
    let hi: Vec<f64> = (0..k)
        .map(|i| all.iter().map(|p| p[i]).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let extent = lo.iter().zip(&hi).map(|(a, b)| b - a).fold(0.0, f64::max);
    let mut h = settings.resolution.max(1e-6) * extent;
    let count = |h: f64| {
        lo.iter()
            .zip(&hi)
            .map(|(a, b)| (Float::floor((b - a) / h) as usize) + 1)
            .product::<usize>()
    };
    while count(h) > MAX_HULL_POINTS {
        h *= 1.25;
    }
    let dims: Vec<usize> = lo
        .iter()
        .zip(&hi)
        .map(|(a, b)| (Float::floor((b - a) / h) as usize) + 1)
        .collect();
    let total: usize = dims.iter().product();
    let mut checked = 0;
    for idx in 0..total {
        let mut r = idx;
        let y: Vec<f64> = (0..k)
            .map(|i| {
                let j = r % dims[i];
                r /= dims[i];
                lo[i] + j as f64 * h
            })
            .collect();
        if min_slack(&hull_f, &y) <= 1e-9 * (1.0 + extent) {
            continue;
        }
        checked += 1;
        if !polys
            .iter()
            .any(|p| min_slack(&p.1, &y) >= -settings.coverage_tolerance)
        {
            return (hull, checked, Some(y));
        }
    }
    (hull, checked, None)
}

fn exhaustion(
    geom: &Geometry<'_>,
    dev: &DevelopingMap,
    polys: &[(Vec<Vec<f64>>, Vec<Facet>)],
    max_radius: f64,
    step: f64,
    settings: &ConvexitySettings,
) -> Vec<ExhaustionLevel> {
    let x = geom.complex;
    let n = x.cells.len();
    let y0 = dev.charts[dev.base_cell].apply(&geom.barycenter(dev.base_cell));
    let samples: Vec<Vec<Vec<f64>>> = (0..n)
        .map(|c| {
            let mut s: Vec<Vec<f64>> = cell_samples(geom, c, 24, settings.star.seed)
                .into_iter()
                .map(|p| dev.charts[c].apply(&p))
                .collect();
            s.extend(polys[c].0.iter().cloned());
            s
        })
        .collect();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for g in &x.gluings {
        adj[g.cell_a].push(g.cell_b);
        adj[g.cell_b].push(g.cell_a);
    }
    let mut levels: Vec<ExhaustionLevel> = Vec::new();
    let steps = Float::floor(max_radius / step.max(1e-9)) as usize;
    for s in 1..=steps {
        let radius = s as f64 * step;
        let meets: Vec<bool> = samples
            .iter()
            .map(|ss| ss.iter().any(|y| dist(y, &y0) <= radius))
            .collect();
        let mut inside = vec![false; n];
        let mut queue = VecDeque::new();
        if meets[dev.base_cell] {
            inside[dev.base_cell] = true;
            queue.push_back(dev.base_cell);
        }
        while let Some(c) = queue.pop_front() {
            for &m in &adj[c] {
                if meets[m] && !inside[m] {
                    inside[m] = true;
                    queue.push_back(m);
                }
            }
        }
        let cells: Vec<usize> = (0..n).filter(|&c| inside[c]).collect();
        let nested = levels
            .last()
            .is_none_or(|prev| prev.cells.iter().all(|c| inside[*c]));
        let pts: Vec<&Vec<f64>> = cells
            .iter()
            .flat_map(|&c| samples[c].iter())
            .filter(|y| dist(y, &y0) <= radius)
            .collect();
        let stride = (pts.len() / 120).max(1);
        let pts: Vec<&Vec<f64>> = pts.into_iter().step_by(stride).collect();
        let mut chord = None;
        'outer: for (i, p) in pts.iter().enumerate() {
            for q in &pts[i + 1..] {
                for t in [0.25, 0.5, 0.75] {
                    let z: Vec<f64> = p
                        .iter()
                        .zip(q.iter())
                        .map(|(a, b)| (1.0 - t) * a + t * b)
                        .collect();
                    if !cells
                        .iter()
                        .any(|&c| min_slack(&polys[c].1, &z) >= -settings.coverage_tolerance)
                    {
                        chord = Some(((*p).clone(), (*q).clone()));
                        break 'outer;
                    }
                }
            }
        }
        levels.push(ExhaustionLevel {
            radius,
            cells,
            nested,
            convex: chord.is_none(),
            chord,
        });
    }
    levels
}

/// Decides whether the developing map is injective with convex image, and
/// reports the tangent-cone check, the star of the base cell's barycenter
/// and, in exhaustion mode, every level `X_n`.
pub fn global_convexity(
    x: &AffineComplex,
    dev: &DevelopingMap,
    settings: &ConvexitySettings,
) -> Result<ConvexityVerdict, AffineError> {
    let geom = Geometry::new(x)?;
    let local = local_convexity(&geom)?;
    let polys = developed_facets(&geom, dev);
    let collision = collision(&geom, dev, &polys, settings.star.seed);
    let (hull, hull_points, hole) = match settings.mode {
        ConvexityMode::Compact => hull_hole(&polys, x.dim, settings),
        ConvexityMode::ProperExhaustion { .. } => (Vec::new(), 0, None),
    };
    let exhaustion = match settings.mode {
        ConvexityMode::Compact => Vec::new(),
        ConvexityMode::ProperExhaustion { max_radius, step } => {
            exhaustion(&geom, dev, &polys, max_radius, step, settings)
        }
    };
    let star = if collision.is_none() {
        Some(star_checked(
            &geom,
            dev,
            dev.base_cell,
            &geom.barycenter(dev.base_cell),
            &settings.star,
        )?)
    } else {
        None
    };
    Ok(ConvexityVerdict {
        local,
        collision,
        hull,
        hull_points,
        hole,
        star,
        exhaustion,
    })
}

/// Outcome of the full pipeline on one complex.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Certification {
    Accepted(ConvexityVerdict),
    Rejected(Rejection),
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Rejection {
    Monodromy(super::Holonomy),
    NotLocallyConvex(ConeWitness),
    NotInjective(CollisionWitness),
    NotConvex(ConvexityVerdict),
    Walk(AffineError),
}

impl Certification {
    pub fn accepted(&self) -> bool {
        matches!(self, Certification::Accepted(_))
    }
}

fn in_developed_cell(geom: &Geometry<'_>, dev: &DevelopingMap, cells: &[usize], y: &[f64]) -> bool {
    cells.iter().any(|&c| {
        dev.charts[c]
            .invert(y)
            .is_some_and(|p| geom.contains(c, &p, geom.tol))
    })
}

impl Rejection {
    /// Re-checks the witness against `x` from scratch. Walk failures carry
    /// no witness and never verify.
    pub fn verify(&self, x: &AffineComplex) -> bool {
        match self {
            Rejection::Monodromy(h) => h.verify(x),
            Rejection::NotLocallyConvex(w) => w.verify(x),
            Rejection::NotInjective(c) => develop(x, 0).is_ok_and(|dev| c.verify(x, &dev)),
            Rejection::NotConvex(v) => {
                let (Ok(geom), Ok(dev)) = (Geometry::new(x), develop(x, 0)) else {
                    return false;
                };
                let all: Vec<usize> = (0..x.cells.len()).collect();
                if let Some(p) = &v.hole {
                    return !in_developed_cell(&geom, &dev, &all, p);
                }
                v.exhaustion.iter().filter(|l| !l.convex).any(|l| {
                    l.chord.as_ref().is_some_and(|(a, b)| {
                        (1..64).any(|i| {
                            let t = i as f64 / 64.0;
                            let y: Vec<f64> =
                                a.iter().zip(b).map(|(p, q)| p + t * (q - p)).collect();
                            !in_developed_cell(&geom, &dev, &l.cells, &y)
                        })
                    })
                })
            }
            Rejection::Walk(_) => false,
        }
    }
}

/// Develops, then runs the local and global checks.
pub fn certify(
    x: &AffineComplex,
    settings: &ConvexitySettings,
) -> Result<Certification, AffineError> {
    let geom = Geometry::new(x)?;
    let dev = match develop_checked(&geom, 0) {
        Ok(d) => d,
        Err(AffineError::Monodromy(h)) => {
            return Ok(Certification::Rejected(Rejection::Monodromy(h)))
        }
        Err(e) => return Err(e),
    };
    let verdict = match global_convexity(x, &dev, settings) {
        Ok(v) => v,
        Err(e @ (AffineError::NotLocallyInjective { .. } | AffineError::OpenEscape { .. })) => {
            return Ok(Certification::Rejected(Rejection::Walk(e)))
        }
        Err(e) => return Err(e),
    };
    Ok(if let Some(w) = &verdict.local.witness {
        Certification::Rejected(Rejection::NotLocallyConvex(w.clone()))
    } else if let Some(c) = &verdict.collision {
        Certification::Rejected(Rejection::NotInjective(c.clone()))
    } else if !verdict.image_convex() {
        Certification::Rejected(Rejection::NotConvex(verdict))
    } else {
        Certification::Accepted(verdict)
    })
}

#[cfg(test)]
mod tests {
    use super::super::corpus;
    use super::super::develop;
    use super::*;

    #[test]
    fn l_shape_fails_at_its_reflex_vertex() {
        let x = corpus::l_shape();
        let r = check_local_convexity(&x).unwrap();
        let w = r.witness.clone().expect("reflex vertex");
        assert!(w.verify(&x));
        let v = &x.cells[w.cell].vertices[w.vertex];
        let dev = develop(&x, 0).unwrap();
        let y = dev.charts[w.cell].apply(v);
        assert!(dist(&y, &[1.0, 1.0]) < 1e-12, "{y:?}");
    }

    #[test]
    fn l_shape_star_misses_points() {
        let x = corpus::l_shape();
        let dev = develop(&x, 0).unwrap();
        let s = star_propagate(&x, &dev, 1, &[1.8, 0.2], &StarSettings::default()).unwrap();
        assert!(s.coverage() < 1.0);
        assert!(s.uncovered.is_some());
        let s = star_propagate(&x, &dev, 0, &[0.5, 0.5], &StarSettings::default()).unwrap();
        assert_eq!(s.coverage(), 1.0);
    }

    #[test]
    fn square_rays_hit_the_boundary() {
        let x = corpus::glued_rectangle(2, 2);
        let dev = develop(&x, 0).unwrap();
        let s = star_propagate(&x, &dev, 0, &[0.5, 0.5], &StarSettings::default()).unwrap();
        assert_eq!(s.coverage(), 1.0);
        for seg in &s.segments {
            let e = &seg.end;
            let on_edge = e
                .iter()
                .any(|c| Float::abs(*c) < 1e-9 || Float::abs(*c - 2.0) < 1e-9);
            assert!(on_edge, "{e:?}");
        }
    }

    #[test]
    fn folded_pair_collides() {
        let x = corpus::folded_pair();
        let dev = develop(&x, 0).unwrap();
        let v = global_convexity(&x, &dev, &ConvexitySettings::default()).unwrap();
        assert!(v.local.is_convex());
        let c = v.collision.expect("overlap");
        assert!(c.verify(&x, &dev));
    }

    #[test]
    fn hull_of_l_has_a_hole() {
        let x = corpus::l_shape();
        let dev = develop(&x, 0).unwrap();
        let v = global_convexity(&x, &dev, &ConvexitySettings::default()).unwrap();
        let hole = v.hole.expect("the corner triangle is outside");
        assert!(hole[0] > 1.0 && hole[1] > 1.0);
        assert_eq!(v.hull.len(), 5);
    }

    #[test]
    fn corpora_are_classified() {
        let s = ConvexitySettings::default();
        for x in corpus::positive() {
            let c = certify(&x, &s).unwrap();
            assert!(c.accepted(), "{}: {c:?}", x.name);
        }
        for x in corpus::negative() {
            let c = certify(&x, &s).unwrap();
            let Certification::Rejected(r) = c else {
                panic!("{} accepted", x.name)
            };
            assert!(r.verify(&x), "{}: {r:?}", x.name);
        }
    }

    #[test]
    fn half_strip_exhaustion_is_nested_and_convex() {
        let x = corpus::half_strip(8);
        let dev = develop(&x, 0).unwrap();
        let s = ConvexitySettings {
            mode: ConvexityMode::ProperExhaustion {
                max_radius: 6.0,
                step: 1.0,
            },
            ..Default::default()
        };
        let v = global_convexity(&x, &dev, &s).unwrap();
        assert_eq!(v.exhaustion.len(), 6);
        assert!(v.accepted());
        for w in v.exhaustion.windows(2) {
            assert!(w[0].cells.len() <= w[1].cells.len());
        }
    }

    #[test]
    fn fibonacci_directions_are_unit() {
        for k in 1..=4 {
            for d in fibonacci_directions(k, 50) {
                assert!(Float::abs(dot(&d, &d) - 1.0) < 1e-12);
            }
        }
    }
}
