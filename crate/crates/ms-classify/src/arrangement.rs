//! Arrangements of essential curves on a flat torus.
//!
//! A class `(a, w)` is drawn as the closed geodesic of direction `(a, w)` in
//! `R^2 / Z^2`, i.e. the level set `w x - a y = c (mod 1)`. Parallel curves
//! are spread evenly in the order of their ranks; each parallel family gets a
//! small rational shift, chosen so that no three curves meet in a point. All
//! arithmetic is exact.

use std::collections::{BTreeMap, HashSet};

use num_integer::Integer;
use num_rational::Ratio;
use thiserror::Error;

use crate::core_model::{CurveClass, DecomposedScheme, Id};

type Q = Ratio<i64>;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ArrangementError {
    #[error("curves {0:?} and {1:?} coincide")]
    CoincidentCurves(CurveClass, CurveClass),
    #[error("no generic position found for the curves on this torus")]
    Degenerate,
    #[error("level {level}: frame {frame} (on {component}) misses every projected knot of the level above")]
    IntersectionMissing { level: usize, frame: Id, component: Id },
    #[error("level {level}: triangular face on {component} bounded by {sides:?}")]
    TriangleFound { level: usize, component: Id, sides: Vec<(Id, usize)> },
    #[error("level {0} does not exist")]
    NoSuchLevel(usize),
}

/// Minimal geometric intersection number of two curves.
pub fn crossings(c1: &CurveClass, c2: &CurveClass) -> Result<u64, ArrangementError> {
    let (a1, w1) = c1.direction();
    let (a2, w2) = c2.direction();
    if (a1, w1) == (a2, w2) && c1.offset_rank == c2.offset_rank {
        return Err(ArrangementError::CoincidentCurves(c1.clone(), c2.clone()));
    }
    Ok((a1 * w2 - a2 * w1).unsigned_abs())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vertex {
    pub curves: (usize, usize),
    pub point: (Q, Q),
}

/// One side of an arc between consecutive crossings, oriented away from
/// `origin`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dart {
    pub curve: usize,
    pub origin: usize,
    pub forward: bool,
    pub twin: usize,
    /// Next dart counter-clockwise around `origin`.
    pub rot_next: usize,
}

#[derive(Clone, Debug)]
pub struct CombinatorialMap {
    pub curves: Vec<CurveClass>,
    pub vertices: Vec<Vertex>,
    pub darts: Vec<Dart>,
    /// Dart cycles of the face permutation.
    pub faces: Vec<Vec<usize>>,
    /// Annular faces when no two curves cross (one per curve).
    pub annuli: usize,
    /// Curve `i` is the level set `w x - a y = offsets[i] (mod 1)`.
    pub offsets: Vec<Q>,
}

impl CombinatorialMap {
    pub fn edge_count(&self) -> usize {
        self.darts.len() / 2
    }

    pub fn face_count(&self) -> usize {
        self.faces.len() + self.annuli
    }

    /// `V - E + F`, counting only cellular faces.
    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edge_count() as i64 + self.faces.len() as i64
    }

    pub fn face_sizes(&self) -> Vec<usize> {
        self.faces.iter().map(|f| f.len()).collect()
    }

    /// Faces with exactly three sides, as the curves bounding them.
    pub fn triangles(&self) -> Vec<[usize; 3]> {
        self.faces
            .iter()
            .filter(|f| f.len() == 3)
            .map(|f| [self.darts[f[0]].curve, self.darts[f[1]].curve, self.darts[f[2]].curve])
            .collect()
    }

    /// Face permutation: next dart along the face to the left.
    pub fn face_next(&self, d: usize) -> usize {
        self.darts[self.darts[d].twin].rot_next
    }
}

struct Line {
    dir: (i64, i64),
    c: Q,
    /// `ell(u) = 1`
    u: (i64, i64),
    /// `mu(dir) = 1`
    mu: (i64, i64),
}

impl Line {
    fn new(dir: (i64, i64), c: Q) -> Self {
        let (a, w) = dir;
        // w x - a y = 1
        let e = w.extended_gcd(&(-a));
        let s = e.gcd;
        let u = (e.x * s, e.y * s);
        // alpha a + beta w = 1
        let e2 = a.extended_gcd(&w);
        let mu = (e2.x * e2.gcd, e2.y * e2.gcd);
        Line { dir, c, u, mu }
    }

    fn ell(&self, p: (Q, Q)) -> Q {
        p.0 * self.dir.1 - p.1 * self.dir.0
    }

    fn base(&self) -> (Q, Q) {
        (self.c * self.u.0, self.c * self.u.1)
    }

    fn param(&self, p: (Q, Q)) -> Q {
        let b = self.base();
        let t = (p.0 - b.0) * self.mu.0 + (p.1 - b.1) * self.mu.1;
        t - t.floor()
    }
}

fn frac(q: Q) -> Q {
    q - q.floor()
}

fn place(curves: &[CurveClass], attempt: i64) -> Vec<Line> {
    let mut groups: BTreeMap<(i64, i64), Vec<(i64, usize)>> = BTreeMap::new();
    for (i, c) in curves.iter().enumerate() {
        groups.entry(c.direction()).or_default().push((c.offset_rank, i));
    }
    // Families are indexed in slope order, which twists preserve, so a twisted
    // system is drawn as the linear image of the original one.
    let mut order: Vec<(i64, i64)> = groups.keys().copied().collect();
    order.sort_by_key(|&(a, w)| if w == 0 { (1, Q::from_integer(0)) } else { (0, Q::new(a, w)) });
    let mut offsets = vec![Q::from_integer(0); curves.len()];
    for (g, dir) in order.iter().enumerate() {
        let members = groups.get_mut(dir).unwrap();
        members.sort();
        let q = members.len() as i64;
        let g = g as i64;
        let h = ((g + 1) * 37 + attempt * 53 + g * g * 11) % 97 + 1;
        let shift = Q::new(h, 101 * q);
        for (pos, &(_, i)) in members.iter().enumerate() {
            offsets[i] = Q::new(2 * pos as i64 + 1, 2 * q) + shift;
        }
    }
    curves.iter().zip(offsets).map(|(c, o)| Line::new(c.direction(), o)).collect()
}

/// Builds the arrangement of the given curves on one torus.
pub fn build_arrangement(curves: &[CurveClass]) -> Result<CombinatorialMap, ArrangementError> {
    for i in 0..curves.len() {
        for j in i + 1..curves.len() {
            crossings(&curves[i], &curves[j])?;
        }
    }
    for attempt in 0..64 {
        if let Some(map) = try_build(curves, &place(curves, attempt)) {
            return Ok(map);
        }
    }
    Err(ArrangementError::Degenerate)
}

fn try_build(curves: &[CurveClass], lines: &[Line]) -> Option<CombinatorialMap> {
    let n = curves.len();
    let mut vertices = Vec::new();
    let mut events: Vec<Vec<(Q, usize)>> = vec![Vec::new(); n];
    let mut seen = HashSet::new();
    for i in 0..n {
        for j in i + 1..n {
            let li = &lines[i];
            let lj = &lines[j];
            let d = li.dir.0 * lj.dir.1 - lj.dir.0 * li.dir.1;
            if d == 0 {
                continue;
            }
            // ell_j(p0_i + s v_i) = c_j (mod 1) with ell_j(v_i) = d
            let p0 = li.base();
            let start = lj.c - lj.ell(p0);
            for t in 0..d.abs() {
                let s = frac((start + t) / d);
                let p = (frac(p0.0 + s * li.dir.0), frac(p0.1 + s * li.dir.1));
                if !seen.insert(p) {
                    return None;
                }
                let v = vertices.len();
                vertices.push(Vertex { curves: (i, j), point: p });
                events[i].push((s, v));
                events[j].push((lj.param(p), v));
            }
        }
    }
    if vertices.is_empty() {
        let offsets = lines.iter().map(|l| l.c).collect();
        return Some(CombinatorialMap { curves: curves.to_vec(), vertices, darts: Vec::new(), faces: Vec::new(), annuli: n, offsets });
    }

    // out[v] holds the darts leaving v along (+i, -i, +j, -j)
    let mut out = vec![[usize::MAX; 4]; vertices.len()];
    let mut darts: Vec<Dart> = Vec::new();
    for (ci, ev) in events.iter_mut().enumerate() {
        ev.sort();
        for k in 0..ev.len() {
            let (u, v) = (ev[k].1, ev[(k + 1) % ev.len()].1);
            let f = darts.len();
            darts.push(Dart { curve: ci, origin: u, forward: true, twin: f + 1, rot_next: 0 });
            darts.push(Dart { curve: ci, origin: v, forward: false, twin: f, rot_next: 0 });
            let slot = |x: usize, fwd: bool| {
                let first = vertices[x].curves.0 == ci;
                match (first, fwd) {
                    (true, true) => 0,
                    (true, false) => 1,
                    (false, true) => 2,
                    (false, false) => 3,
                }
            };
            out[u][slot(u, true)] = f;
            out[v][slot(v, false)] = f + 1;
        }
    }
    for (v, vx) in vertices.iter().enumerate() {
        let (i, j) = vx.curves;
        let d = lines[i].dir.0 * lines[j].dir.1 - lines[j].dir.0 * lines[i].dir.1;
        let o = out[v];
        let ring = if d > 0 { [o[0], o[2], o[1], o[3]] } else { [o[0], o[3], o[1], o[2]] };
        for k in 0..4 {
            darts[ring[k]].rot_next = ring[(k + 1) % 4];
        }
    }

    let offsets = lines.iter().map(|l| l.c).collect();
    let mut map = CombinatorialMap { curves: curves.to_vec(), vertices, darts, faces: Vec::new(), annuli: 0, offsets };
    let mut done = vec![false; map.darts.len()];
    for d0 in 0..map.darts.len() {
        if done[d0] {
            continue;
        }
        let mut face = Vec::new();
        let mut d = d0;
        while !done[d] {
            done[d] = true;
            face.push(d);
            d = map.face_next(d);
        }
        map.faces.push(face);
    }
    assert_eq!(map.euler_characteristic(), 0, "arrangement on a torus must have V - E + F = 0");
    Some(map)
}

/// Conditions 2 and 3 for the level-`(i-1)` tori: every frame there has a
/// knot meeting a projected knot of level `i`, and the full arrangement of
/// curves on each torus has no triangular face.
pub fn check_level_conditions(scheme: &DecomposedScheme, i: usize) -> Result<(), ArrangementError> {
    if i == 0 || i >= scheme.levels.len() {
        return Err(ArrangementError::NoSuchLevel(i));
    }
    let lower_index = i - 1;
    let lower = &scheme.levels[lower_index];
    for frame in &lower.frames {
        let mut hit = false;
        let mut host = None;
        for comp in &lower.components {
            let curves = lower.curves_on(&comp.id);
            for knot in curves.iter().filter(|c| c.level_tag == lower_index && c.label == frame.id) {
                host.get_or_insert(comp.id.clone());
                for other in curves.iter().filter(|c| c.level_tag == i) {
                    hit |= crossings(knot, other)? > 0;
                }
            }
        }
        if !hit {
            return Err(ArrangementError::IntersectionMissing {
                level: i,
                frame: frame.id.clone(),
                component: host.unwrap_or_else(|| frame.families[0].host.clone()),
            });
        }
    }
    if lower_index == 0 {
        return Ok(());
    }
    for comp in &lower.components {
        let map = build_arrangement(lower.curves_on(&comp.id))?;
        if let Some(t) = map.triangles().first() {
            let sides = t.iter().map(|&c| (map.curves[c].label.clone(), map.curves[c].level_tag)).collect();
            return Err(ArrangementError::TriangleFound { level: i, component: comp.id.clone(), sides });
        }
    }
    Ok(())
}
