//! Convex-hull compression: the compression keeps the hull vertices, the
//! learner returns the hull itself and a point is inappropriate when it lies
//! outside.

use serde::{Deserialize, Serialize};

use super::Point;
use crate::compression::{Compressor, Learner, Multiset, SchemeError};

/// Absolute tolerance for every geometric predicate.
pub const HULL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Facet {
    /// Outward unit normal.
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Facet {
    fn distance(&self, y: &[f64]) -> f64 {
        dot(&self.normal, y) - self.offset
    }
}

/// The hull of a finite point set, stored as halfspaces in the coordinates of its affine span.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HullModel {
    pub dim: usize,
    /// Dimension of the affine span of the training points.
    pub span: usize,
    pub vertices: Vec<Point>,
    /// Origin of the affine span; `None` for an empty input.
    pub origin: Option<Vec<f64>>,
    /// Orthonormal basis of the span; empty when the span is the whole space (identity coordinates).
    pub basis: Vec<Vec<f64>>,
    pub facets: Vec<Facet>,
}

impl HullModel {
    fn local(&self, x: &[f64]) -> Option<Vec<f64>> {
        let origin = self.origin.as_ref()?;
        if self.span == self.dim {
            return Some(x.to_vec());
        }
        let diff: Vec<f64> = x.iter().zip(origin).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = self.basis.iter().map(|e| dot(e, &diff)).collect();
        let mut resid = diff;
        for (e, c) in self.basis.iter().zip(&y) {
            for (r, v) in resid.iter_mut().zip(e) {
                *r -= c * v;
            }
        }
        (norm(&resid) <= HULL_TOL).then_some(y)
    }

    /// Membership up to the facet tolerance.
    pub fn contains(&self, x: &[f64]) -> bool {
        match self.local(x) {
            Some(y) => self.facets.iter().all(|f| f.distance(&y) <= HULL_TOL),
            None => false,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn cross3(a: &[f64], b: &[f64]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn cross2(o: &[f64], a: &[f64], b: &[f64]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Orthonormal basis of the affine span of `pts` around `pts[0]`, greedily picking the farthest residual.
fn affine_basis(pts: &[&[f64]], dim: usize) -> Vec<Vec<f64>> {
    let origin = pts[0];
    let mut basis: Vec<Vec<f64>> = Vec::new();
    while basis.len() < dim {
        let mut best: Option<(f64, Vec<f64>)> = None;
        for p in pts {
            let mut r = sub(p, origin);
            for e in &basis {
                let c = dot(e, &r);
                for (ri, ei) in r.iter_mut().zip(e) {
                    *ri -= c * ei;
                }
            }
            let n = norm(&r);
            if best.as_ref().is_none_or(|(bn, _)| n > *bn) {
                best = Some((n, r));
            }
        }
        match best {
            Some((n, r)) if n > HULL_TOL => basis.push(r.into_iter().map(|v| v / n).collect()),
            _ => break,
        }
    }
    basis
}

/// Hull of points on a line, given their scalar coordinates.
fn hull_1d(ys: &[Vec<f64>]) -> (Vec<usize>, Vec<Facet>) {
    let lo = (0..ys.len()).min_by(|&a, &b| ys[a][0].total_cmp(&ys[b][0])).unwrap();
    let hi = (0..ys.len()).min_by(|&a, &b| ys[b][0].total_cmp(&ys[a][0])).unwrap();
    let facets = vec![
        Facet {
            normal: vec![-1.0],
            offset: -ys[lo][0],
        },
        Facet {
            normal: vec![1.0],
            offset: ys[hi][0],
        },
    ];
    let mut v = vec![lo, hi];
    v.sort_unstable();
    (v, facets)
}

/// Andrew's monotone chain; returns vertex indices counterclockwise and the edge halfspaces.
pub(crate) fn hull_2d(ys: &[Vec<f64>]) -> (Vec<usize>, Vec<Facet>) {
    let mut order: Vec<usize> = (0..ys.len()).collect();
    order.sort_by(|&a, &b| ys[a][0].total_cmp(&ys[b][0]).then(ys[a][1].total_cmp(&ys[b][1])));
    let keeps_turn = |chain: &[usize], b: usize| {
        let (o, a) = (&ys[chain[chain.len() - 2]], &ys[chain[chain.len() - 1]]);
        let len = norm(&sub(&ys[b], o));
        cross2(o, a, &ys[b]) > HULL_TOL * len
    };
    let mut lower: Vec<usize> = Vec::new();
    for &i in &order {
        while lower.len() >= 2 && !keeps_turn(&lower, i) {
            lower.pop();
        }
        lower.push(i);
    }
    let mut upper: Vec<usize> = Vec::new();
    for &i in order.iter().rev() {
        while upper.len() >= 2 && !keeps_turn(&upper, i) {
            upper.pop();
        }
        upper.push(i);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    let ring = lower;
    let facets = (0..ring.len())
        .map(|i| {
            let (p, q) = (&ys[ring[i]], &ys[ring[(i + 1) % ring.len()]]);
            let (dx, dy) = (q[0] - p[0], q[1] - p[1]);
            let len = dx.hypot(dy);
            let normal = vec![dy / len, -dx / len];
            let offset = dot(&normal, p);
            Facet { normal, offset }
        })
        .collect();
    (ring, facets)
}

type V3 = [f64; 3];

fn v3(p: &[f64]) -> V3 {
    [p[0], p[1], p[2]]
}

fn sub3(a: V3, b: V3) -> V3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot3(a: V3, b: V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm3(a: V3) -> f64 {
    dot3(a, a).sqrt()
}

struct Face {
    v: [usize; 3],
    /// `nb[i]` is the face across the edge `v[i] → v[(i+1) % 3]`.
    nb: [usize; 3],
    normal: V3,
    offset: f64,
    outside: Vec<usize>,
    alive: bool,
}

impl Face {
    fn new(v: [usize; 3], ys: &[V3]) -> Self {
        let n = cross3(&sub3(ys[v[1]], ys[v[0]]), &sub3(ys[v[2]], ys[v[0]]));
        let len = norm3(n);
        let normal = [n[0] / len, n[1] / len, n[2] / len];
        let offset = dot3(normal, ys[v[0]]);
        Face {
            v,
            nb: [usize::MAX; 3],
            normal,
            offset,
            outside: Vec::new(),
            alive: true,
        }
    }

    fn distance(&self, y: V3) -> f64 {
        dot3(self.normal, y) - self.offset
    }

    fn edge(&self, i: usize) -> (usize, usize) {
        (self.v[i], self.v[(i + 1) % 3])
    }

    fn edge_index(&self, u: usize, v: usize) -> usize {
        (0..3).find(|&i| self.edge(i) == (u, v)).expect("adjacent faces share the edge")
    }
}

/// Quickhull for points spanning ℝ³; returns sorted vertex indices and the face halfspaces.
pub(crate) fn hull_3d(points: &[Vec<f64>]) -> (Vec<usize>, Vec<Facet>) {
    let ys: Vec<V3> = points.iter().map(|p| v3(p)).collect();
    let n = ys.len();
    let a = 0;
    let b = (0..n).max_by(|&i, &j| norm3(sub3(ys[i], ys[a])).total_cmp(&norm3(sub3(ys[j], ys[a])))).unwrap();
    let ab = sub3(ys[b], ys[a]);
    let line_dist = |i: usize| norm3(cross3(&ab, &sub3(ys[i], ys[a])));
    let c = (0..n).max_by(|&i, &j| line_dist(i).total_cmp(&line_dist(j))).unwrap();
    let nrm = cross3(&ab, &sub3(ys[c], ys[a]));
    let plane_dist = |i: usize| dot3(nrm, sub3(ys[i], ys[a]));
    let d = (0..n).max_by(|&i, &j| plane_dist(i).abs().total_cmp(&plane_dist(j).abs())).unwrap();
    let (b, c) = if plane_dist(d) > 0.0 { (c, b) } else { (b, c) };

    let mut faces: Vec<Face> = [[a, b, c], [a, d, b], [b, d, c], [c, d, a]]
        .into_iter()
        .map(|v| Face::new(v, &ys))
        .collect();
    for f in 0..4 {
        for i in 0..3 {
            let (u, v) = faces[f].edge(i);
            faces[f].nb[i] = (0..4).find(|&g| (0..3).any(|j| faces[g].edge(j) == (v, u))).expect("closed tetrahedron");
        }
    }
    for i in 0..n {
        if [a, b, c, d].contains(&i) {
            continue;
        }
        if let Some(f) = faces.iter_mut().find(|f| f.distance(ys[i]) > HULL_TOL) {
            f.outside.push(i);
        }
    }

    // 0 = unvisited, 1 = visible, 2 = hidden; reset after each step
    let mut state: Vec<u8> = vec![0; faces.len()];
    let mut pending: Vec<usize> = (0..faces.len()).rev().collect();
    while let Some(fi) = pending.pop() {
        if !faces[fi].alive || faces[fi].outside.is_empty() {
            continue;
        }
        let apex = *faces[fi]
            .outside
            .iter()
            .max_by(|&&i, &&j| faces[fi].distance(ys[i]).total_cmp(&faces[fi].distance(ys[j])).then(j.cmp(&i)))
            .unwrap();
        let p = ys[apex];

        let mut visible = vec![fi];
        let mut touched = vec![fi];
        state[fi] = 1;
        let mut cursor = 0;
        while cursor < visible.len() {
            let f = visible[cursor];
            cursor += 1;
            for g in faces[f].nb {
                if state[g] != 0 {
                    continue;
                }
                touched.push(g);
                if faces[g].distance(p) > HULL_TOL {
                    state[g] = 1;
                    visible.push(g);
                } else {
                    state[g] = 2;
                }
            }
        }

        // (u, v, face beyond the edge)
        let mut horizon = Vec::new();
        let mut orphans = Vec::new();
        for &f in &visible {
            for i in 0..3 {
                let g = faces[f].nb[i];
                if state[g] == 2 {
                    let (u, v) = faces[f].edge(i);
                    horizon.push((u, v, g));
                }
            }
            faces[f].alive = false;
            orphans.append(&mut faces[f].outside);
        }
        for f in touched {
            state[f] = 0;
        }

        let first_new = faces.len();
        for &(u, v, g) in &horizon {
            let id = faces.len();
            let mut face = Face::new([u, v, apex], &ys);
            face.nb[0] = g;
            let j = faces[g].edge_index(v, u);
            faces[g].nb[j] = id;
            faces.push(face);
            state.push(0);
        }
        for (k, &(u, v, _)) in horizon.iter().enumerate() {
            let id = first_new + k;
            let next = horizon.iter().position(|h| h.0 == v).expect("horizon is a cycle");
            let prev = horizon.iter().position(|h| h.1 == u).expect("horizon is a cycle");
            faces[id].nb[1] = first_new + next;
            faces[id].nb[2] = first_new + prev;
        }
        for i in orphans {
            if i == apex {
                continue;
            }
            if let Some(f) = faces[first_new..].iter_mut().find(|f| f.distance(ys[i]) > HULL_TOL) {
                f.outside.push(i);
            }
        }
        pending.extend((first_new..faces.len()).rev());
    }

    let alive: Vec<&Face> = faces.iter().filter(|f| f.alive).collect();
    let mut verts: Vec<usize> = alive.iter().flat_map(|f| f.v).collect();
    verts.sort_unstable();
    verts.dedup();
    let facets = alive
        .iter()
        .map(|f| Facet {
            normal: f.normal.to_vec(),
            offset: f.offset,
        })
        .collect();
    (verts, facets)
}

/// Builds the hull of distinct points sorted ascending; the vertex list is ascending too.
pub fn convex_hull(points: &[&Point], dim: usize) -> HullModel {
    if points.is_empty() {
        return HullModel {
            dim,
            span: 0,
            vertices: Vec::new(),
            origin: None,
            basis: Vec::new(),
            facets: Vec::new(),
        };
    }
    let raw: Vec<&[f64]> = points.iter().map(|p| p.coords()).collect();
    let basis = affine_basis(&raw, dim);
    let m = basis.len();
    let full = m == dim;
    let ys: Vec<Vec<f64>> = if full {
        raw.iter().map(|p| p.to_vec()).collect()
    } else {
        raw.iter().map(|p| basis.iter().map(|e| dot(e, &sub(p, raw[0]))).collect()).collect()
    };
    let (vidx, facets) = match m {
        0 => (vec![0], Vec::new()),
        1 => hull_1d(&ys),
        2 => hull_2d(&ys),
        _ => hull_3d(&ys),
    };
    let mut vidx = vidx;
    vidx.sort_unstable();
    HullModel {
        dim,
        span: m,
        vertices: vidx.into_iter().map(|i| points[i].clone()).collect(),
        origin: Some(if full { vec![0.0; dim] } else { raw[0].to_vec() }),
        basis: if full { Vec::new() } else { basis },
        facets,
    }
}

/// Convex-hull compression scheme in the plane or in space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HullScheme {
    dim: usize,
}

impl HullScheme {
    pub fn new(dim: usize) -> Result<Self, SchemeError> {
        if dim == 2 || dim == 3 {
            Ok(Self { dim })
        } else {
            Err(SchemeError::Config(format!("hull dimension must be 2 or 3, got {dim}")))
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn fit(&self, u: &Multiset<Point>) -> Result<HullModel, SchemeError> {
        if let Some(p) = u.distinct().find(|p| p.dim() != self.dim || !p.is_finite()) {
            return Err(SchemeError::Data(format!("point {:?} is not a finite {}-vector", p.coords(), self.dim)));
        }
        let pts: Vec<&Point> = u.distinct().collect();
        Ok(convex_hull(&pts, self.dim))
    }
}

impl Compressor for HullScheme {
    type Example = Point;

    fn compress(&self, u: &Multiset<Point>) -> Result<Multiset<Point>, SchemeError> {
        Ok(self.fit(u)?.vertices.into_iter().collect())
    }
}

impl Learner for HullScheme {
    type Hypothesis = HullModel;

    fn learn(&self, u: &Multiset<Point>) -> Result<HullModel, SchemeError> {
        self.fit(u)
    }

    fn loss(&self, h: &HullModel, z: &Point) -> bool {
        !h.contains(z.coords())
    }

    fn reconstruct(&self, c: &Multiset<Point>) -> Option<Result<HullModel, SchemeError>> {
        Some(self.fit(c))
    }
}
