//! Gradient-like diffeomorphisms given by their phase portraits, and the
//! graph invariants built from them.
//!
//! A portrait lists the periodic points, the separatrices of the saddles, the
//! counter-clockwise fan of separatrices at every point and the action of `f`
//! on points and separatrices. Fans make the separatrix graph a ribbon graph;
//! its faces are the cells of the surface. Every cell has one source corner,
//! one sink corner and two saddle corners, so a `t`-curve from the source to
//! the sink splits it into two triangular domains, one per saddle corner.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::core_model::{
    CurveClass, CurveSystem, DecomposedScheme, FrameKind, Id, Level, ModelFrame, Orientation, RayFamily,
    TorusComponent,
};
use crate::regluing::reglue_level;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointKind {
    Sink,
    Saddle,
    Source,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stability {
    S,
    U,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Point {
    pub id: Id,
    pub kind: PointKind,
    /// Checked against the orbit of `f` when given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<u64>,
    /// Orientation type of a saddle; checked against the fans when given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<Orientation>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Separatrix {
    pub id: Id,
    pub saddle: Id,
    pub stability: Stability,
    /// The sink (unstable) or source (stable) in its closure.
    pub end: Id,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PortraitMap {
    pub points: BTreeMap<Id, Id>,
    pub separatrices: BTreeMap<Id, Id>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhasePortrait {
    pub points: Vec<Point>,
    pub separatrices: Vec<Separatrix>,
    /// Separatrices around each point in counter-clockwise order.
    pub fans: BTreeMap<Id, Vec<Id>>,
    pub map: PortraitMap,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum GradientError {
    #[error("the portrait has no saddle")]
    NoSaddle,
    #[error("separatrix {separatrix} ends at a saddle; heteroclinic portraits need the decomposed scheme format")]
    HeteroclinicDataPresent { separatrix: Id },
    #[error("invalid portrait: {0}")]
    InvalidPortrait(String),
    #[error("internal inconsistency: {0}")]
    Internal(String),
}

fn invalid(msg: impl Into<String>) -> GradientError {
    GradientError::InvalidPortrait(msg.into())
}

/// Corner of a fan: between `fans[point][pos]` and the next separatrix.
type Corner = (usize, usize);

/// A cell: the four corners met by its boundary walk.
#[derive(Clone, Debug)]
struct Cell {
    sink: Corner,
    saddles: [Corner; 2],
}

/// A portrait with every reference resolved and every invariant checked.
#[derive(Clone, Debug)]
pub struct Checked {
    ids: Vec<Id>,
    sep_ids: Vec<Id>,
    kind: Vec<PointKind>,
    stab: Vec<Stability>,
    saddle_of: Vec<usize>,
    end_of: Vec<usize>,
    fans: Vec<Vec<usize>>,
    fp: Vec<usize>,
    fs: Vec<usize>,
    period: Vec<u64>,
    nu: Vec<Option<Orientation>>,
    cells: Vec<Cell>,
    /// Cell containing each corner.
    cell_of: BTreeMap<Corner, usize>,
}

fn orbit_len(map: &[usize], x: usize) -> u64 {
    let mut n = 1;
    let mut y = map[x];
    while y != x {
        y = map[y];
        n += 1;
    }
    n
}

fn index_of<'a>(ids: &BTreeMap<&'a str, usize>, id: &str, what: &str) -> Result<usize, GradientError> {
    ids.get(id).copied().ok_or_else(|| invalid(format!("unknown {what} {id}")))
}

/// Position of `b` in `a` when `b` is a cyclic rotation of `a`.
fn rotation_of(a: &[usize], b: &[usize]) -> Option<usize> {
    if a.len() != b.len() {
        return None;
    }
    if a.is_empty() {
        return Some(0);
    }
    let n = a.len();
    (0..n).find(|&r| (0..n).all(|i| a[i] == b[(i + r) % n]))
}

impl Checked {
    pub fn new(p: &PhasePortrait) -> Result<Self, GradientError> {
        let mut pt: BTreeMap<&str, usize> = BTreeMap::new();
        for (i, q) in p.points.iter().enumerate() {
            if pt.insert(&q.id, i).is_some() {
                return Err(invalid(format!("duplicate point {}", q.id)));
            }
        }
        let mut sp: BTreeMap<&str, usize> = BTreeMap::new();
        for (i, s) in p.separatrices.iter().enumerate() {
            if sp.insert(&s.id, i).is_some() {
                return Err(invalid(format!("duplicate separatrix {}", s.id)));
            }
        }
        let kind: Vec<PointKind> = p.points.iter().map(|q| q.kind).collect();
        let mut saddle_of = Vec::new();
        let mut end_of = Vec::new();
        for s in &p.separatrices {
            let sad = index_of(&pt, &s.saddle, "point")?;
            let end = index_of(&pt, &s.end, "point")?;
            if kind[sad] != PointKind::Saddle {
                return Err(invalid(format!("separatrix {} starts at {}, which is not a saddle", s.id, s.saddle)));
            }
            match (s.stability, kind[end]) {
                (_, PointKind::Saddle) => return Err(GradientError::HeteroclinicDataPresent { separatrix: s.id.clone() }),
                (Stability::S, PointKind::Source) | (Stability::U, PointKind::Sink) => {}
                _ => return Err(invalid(format!("separatrix {} ends at a point of the wrong kind", s.id))),
            }
            saddle_of.push(sad);
            end_of.push(end);
        }
        let stab: Vec<Stability> = p.separatrices.iter().map(|s| s.stability).collect();

        let mut fans = vec![Vec::new(); p.points.len()];
        for (id, fan) in &p.fans {
            let v = index_of(&pt, id, "point")?;
            fans[v] = fan.iter().map(|s| index_of(&sp, s, "separatrix")).collect::<Result<_, _>>()?;
        }
        for v in 0..p.points.len() {
            let mut want: Vec<usize> = (0..p.separatrices.len())
                .filter(|&e| if kind[v] == PointKind::Saddle { saddle_of[e] == v } else { end_of[e] == v })
                .collect();
            let mut have = fans[v].clone();
            want.sort_unstable();
            have.sort_unstable();
            if want != have {
                return Err(invalid(format!("fan of {} does not list exactly its separatrices", p.points[v].id)));
            }
            if kind[v] == PointKind::Saddle {
                let f = &fans[v];
                if f.len() != 4 || (0..4).any(|i| stab[f[i]] == stab[f[(i + 1) % 4]]) {
                    return Err(invalid(format!(
                        "saddle {} needs two stable and two unstable separatrices in alternating order",
                        p.points[v].id
                    )));
                }
            }
        }

        let mut fp = vec![usize::MAX; p.points.len()];
        for (a, b) in &p.map.points {
            fp[index_of(&pt, a, "point")?] = index_of(&pt, b, "point")?;
        }
        let mut fs = vec![usize::MAX; p.separatrices.len()];
        for (a, b) in &p.map.separatrices {
            fs[index_of(&sp, a, "separatrix")?] = index_of(&sp, b, "separatrix")?;
        }
        let bijective = |m: &[usize]| {
            let set: BTreeSet<usize> = m.iter().copied().collect();
            !m.contains(&usize::MAX) && set.len() == m.len()
        };
        if !bijective(&fp) || !bijective(&fs) {
            return Err(invalid("the map must permute all points and all separatrices"));
        }
        for v in 0..fp.len() {
            if kind[fp[v]] != kind[v] {
                return Err(invalid(format!("f changes the kind of {}", p.points[v].id)));
            }
        }
        for e in 0..fs.len() {
            let g = fs[e];
            if stab[g] != stab[e] || saddle_of[g] != fp[saddle_of[e]] || end_of[g] != fp[end_of[e]] {
                return Err(invalid(format!("f is not compatible with separatrix {}", p.separatrices[e].id)));
            }
        }
        for v in 0..fp.len() {
            let image: Vec<usize> = fans[v].iter().map(|&e| fs[e]).collect();
            if rotation_of(&fans[fp[v]], &image).is_none() {
                return Err(invalid(format!("f does not carry the fan of {} onto a rotation of the next fan", p.points[v].id)));
            }
        }

        let period: Vec<u64> = (0..fp.len()).map(|v| orbit_len(&fp, v)).collect();
        let mut nu = vec![None; fp.len()];
        for (v, q) in p.points.iter().enumerate() {
            if let Some(given) = q.period {
                if given != period[v] {
                    return Err(invalid(format!("{} has period {}, not {given}", q.id, period[v])));
                }
            }
            if kind[v] == PointKind::Saddle {
                let mut e = fans[v][0];
                for _ in 0..period[v] {
                    e = fs[e];
                }
                let o = if e == fans[v][0] { Orientation::Plus } else { Orientation::Minus };
                if q.nu.is_some_and(|g| g != o) {
                    return Err(invalid(format!("orientation type of {} does not match the fans", q.id)));
                }
                nu[v] = Some(o);
            }
        }

        let mut c = Checked {
            ids: p.points.iter().map(|q| q.id.clone()).collect(),
            sep_ids: p.separatrices.iter().map(|s| s.id.clone()).collect(),
            kind,
            stab,
            saddle_of,
            end_of,
            fans,
            fp,
            fs,
            period,
            nu,
            cells: Vec::new(),
            cell_of: BTreeMap::new(),
        };
        c.trace_cells()?;
        c.check_surface()?;
        Ok(c)
    }

    fn pos(&self, v: usize, e: usize) -> usize {
        self.fans[v].iter().position(|&x| x == e).unwrap()
    }

    /// Dart `2e` runs from the saddle of `e` to its end, `2e + 1` back.
    fn origin(&self, d: usize) -> usize {
        if d % 2 == 0 {
            self.saddle_of[d / 2]
        } else {
            self.end_of[d / 2]
        }
    }

    fn dart_from(&self, v: usize, e: usize) -> usize {
        if self.saddle_of[e] == v {
            2 * e
        } else {
            2 * e + 1
        }
    }

    fn trace_cells(&mut self) -> Result<(), GradientError> {
        let darts = 2 * self.stab.len();
        let mut seen = vec![false; darts];
        for d0 in 0..darts {
            if seen[d0] {
                continue;
            }
            let mut corners = Vec::new();
            let mut d = d0;
            loop {
                seen[d] = true;
                let t = d ^ 1;
                let v = self.origin(t);
                let p = self.pos(v, d / 2);
                corners.push((v, p));
                let e = self.fans[v][(p + 1) % self.fans[v].len()];
                d = self.dart_from(v, e);
                if d == d0 {
                    break;
                }
            }
            let of = |k: PointKind| corners.iter().copied().filter(|c| self.kind[c.0] == k).collect::<Vec<_>>();
            let (src, snk, sad) = (of(PointKind::Source), of(PointKind::Sink), of(PointKind::Saddle));
            if corners.len() != 4 || src.len() != 1 || snk.len() != 1 || sad.len() != 2 {
                let names: Vec<&str> = corners.iter().map(|c| self.ids[c.0].as_str()).collect();
                return Err(invalid(format!("cell bounded by {names:?} is not a source-saddle-sink-saddle quadrilateral")));
            }
            let idx = self.cells.len();
            for &c in &corners {
                self.cell_of.insert(c, idx);
            }
            self.cells.push(Cell { sink: snk[0], saddles: [sad[0], sad[1]] });
        }
        Ok(())
    }

    fn check_surface(&self) -> Result<(), GradientError> {
        let n = self.ids.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            p[x] = r;
            r
        }
        for e in 0..self.stab.len() {
            let (a, b) = (find(&mut parent, self.saddle_of[e]), find(&mut parent, self.end_of[e]));
            parent[a] = b;
        }
        let roots: BTreeSet<usize> = (0..n).map(|v| find(&mut parent, v)).collect();
        if self.stab.is_empty() {
            let sinks = self.kind.iter().filter(|&&k| k == PointKind::Sink).count();
            if n != 2 || sinks != 1 {
                return Err(invalid("without saddles the surface is a sphere with one sink and one source"));
            }
        } else if roots.len() != 1 {
            return Err(invalid("the separatrix graph is not connected"));
        }
        if self.euler_characteristic() > 2 || self.euler_characteristic() % 2 != 0 {
            return Err(invalid(format!("Euler characteristic {} is impossible", self.euler_characteristic())));
        }
        Ok(())
    }

    pub fn euler_characteristic(&self) -> i64 {
        if self.stab.is_empty() {
            return 2;
        }
        self.ids.len() as i64 - self.stab.len() as i64 + self.cells.len() as i64
    }

    pub fn genus(&self) -> u64 {
        ((2 - self.euler_characteristic()) / 2) as u64
    }

    /// Number of points of each kind.
    pub fn counts(&self) -> (u64, u64, u64) {
        let c = |k| self.kind.iter().filter(|&&x| x == k).count() as u64;
        (c(PointKind::Sink), c(PointKind::Saddle), c(PointKind::Source))
    }

    fn power(&self, e: usize, n: u64) -> usize {
        (0..n).fold(e, |x, _| self.fs[x])
    }

    /// The other stable (unstable) separatrix of the same saddle.
    fn opposite(&self, e: usize) -> usize {
        let v = self.saddle_of[e];
        self.fans[v][(self.pos(v, e) + 2) % 4]
    }
}

/// The portrait of `f^{-1}`: sinks and sources swap, and so do stable and
/// unstable separatrices.
pub fn reverse_time(p: &PhasePortrait) -> PhasePortrait {
    let mut q = p.clone();
    for pt in &mut q.points {
        pt.kind = match pt.kind {
            PointKind::Sink => PointKind::Source,
            PointKind::Source => PointKind::Sink,
            PointKind::Saddle => PointKind::Saddle,
        };
    }
    for s in &mut q.separatrices {
        s.stability = match s.stability {
            Stability::S => Stability::U,
            Stability::U => Stability::S,
        };
    }
    q.map.points = p.map.points.iter().map(|(a, b)| (b.clone(), a.clone())).collect();
    q.map.separatrices = p.map.separatrices.iter().map(|(a, b)| (b.clone(), a.clone())).collect();
    q
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Colour {
    S,
    T,
    U,
}

impl Colour {
    pub fn name(self) -> &'static str {
        match self {
            Colour::S => "s",
            Colour::T => "t",
            Colour::U => "u",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphVertex {
    pub id: Id,
    pub label: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphEdge {
    pub id: Id,
    pub from: usize,
    pub to: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub colour: Option<Colour>,
}

/// A labelled graph with the automorphism induced by `f`. Directed graphs
/// have uncoloured edges; three-colour graphs have undirected coloured ones.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColoredGraph {
    pub directed: bool,
    pub vertices: Vec<GraphVertex>,
    pub edges: Vec<GraphEdge>,
    pub vertex_map: Vec<usize>,
    pub edge_map: Vec<usize>,
    /// Equipped graphs: the incoming edges of every sink in counter-clockwise
    /// order. Empty otherwise.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub fans: BTreeMap<usize, Vec<usize>>,
}

impl ColoredGraph {
    /// Whether the stored maps form an automorphism.
    pub fn automorphism_ok(&self) -> bool {
        let vm = &self.vertex_map;
        let em = &self.edge_map;
        let perm = |m: &[usize], n: usize| m.len() == n && m.iter().copied().collect::<BTreeSet<_>>().len() == n && m.iter().all(|&x| x < n);
        if !perm(vm, self.vertices.len()) || !perm(em, self.edges.len()) {
            return false;
        }
        let vertices_ok = (0..vm.len()).all(|v| self.vertices[vm[v]].label == self.vertices[v].label);
        let edges_ok = self.edges.iter().enumerate().all(|(i, e)| {
            let g = &self.edges[em[i]];
            let ends = (g.from, g.to) == (vm[e.from], vm[e.to]) || (!self.directed && (g.to, g.from) == (vm[e.from], vm[e.to]));
            ends && g.colour == e.colour
        });
        let fans_ok = self.fans.iter().all(|(&w, fan)| {
            let image: Vec<usize> = fan.iter().map(|&e| em[e]).collect();
            self.fans.get(&vm[w]).is_some_and(|other| rotation_of(other, &image).is_some())
        });
        vertices_ok && edges_ok && fans_ok
    }
}

fn point_label(c: &Checked, v: usize) -> String {
    let kind = match c.kind[v] {
        PointKind::Sink => "sink",
        PointKind::Saddle => "saddle",
        PointKind::Source => "source",
    };
    match c.nu[v] {
        Some(Orientation::Plus) => format!("{kind} m={} nu=+", c.period[v]),
        Some(Orientation::Minus) => format!("{kind} m={} nu=-", c.period[v]),
        None => format!("{kind} m={}", c.period[v]),
    }
}

fn directed_from(c: &Checked) -> ColoredGraph {
    let vertices = (0..c.ids.len()).map(|v| GraphVertex { id: c.ids[v].clone(), label: point_label(c, v) }).collect();
    let edges = (0..c.stab.len())
        .map(|e| {
            let (from, to) = match c.stab[e] {
                Stability::S => (c.end_of[e], c.saddle_of[e]),
                Stability::U => (c.saddle_of[e], c.end_of[e]),
            };
            GraphEdge { id: c.sep_ids[e].clone(), from, to, colour: None }
        })
        .collect();
    ColoredGraph { directed: true, vertices, edges, vertex_map: c.fp.clone(), edge_map: c.fs.clone(), fans: BTreeMap::new() }
}

/// Vertices are the periodic points, edges the separatrices directed by the
/// flow, with the automorphism induced by `f`.
pub fn build_directed_graph(p: &PhasePortrait) -> Result<ColoredGraph, GradientError> {
    Ok(directed_from(&Checked::new(p)?))
}

/// The directed graph together with the cyclic enumeration of the edges
/// arriving at every sink.
pub fn build_equipped_graph(p: &PhasePortrait) -> Result<ColoredGraph, GradientError> {
    let c = Checked::new(p)?;
    let mut g = directed_from(&c);
    for v in 0..c.ids.len() {
        if c.kind[v] == PointKind::Sink {
            g.fans.insert(v, c.fans[v].clone());
        }
    }
    Ok(g)
}

/// Triangular domains, glued along `s`, `u` and `t` sides.
pub fn build_three_colour(p: &PhasePortrait) -> Result<ColoredGraph, GradientError> {
    let c = Checked::new(p)?;
    if !c.kind.contains(&PointKind::Saddle) {
        return Err(GradientError::NoSaddle);
    }
    let mut index: BTreeMap<Corner, usize> = BTreeMap::new();
    let mut vertices = Vec::new();
    for v in 0..c.ids.len() {
        if c.kind[v] == PointKind::Saddle {
            for i in 0..4 {
                index.insert((v, i), vertices.len());
                vertices.push(GraphVertex { id: format!("{}:{i}", c.ids[v]), label: String::new() });
            }
        }
    }
    let mut edges = Vec::new();
    // s- and u-sides: the two triangles on either side of a separatrix
    let mut side_edge = vec![0; c.stab.len()];
    for e in 0..c.stab.len() {
        let v = c.saddle_of[e];
        let i = c.pos(v, e);
        side_edge[e] = edges.len();
        edges.push(GraphEdge {
            id: c.sep_ids[e].clone(),
            from: index[&(v, (i + 3) % 4)],
            to: index[&(v, i)],
            colour: Some(if c.stab[e] == Stability::S { Colour::S } else { Colour::U }),
        });
    }
    // t-sides: the two triangles of one cell
    let mut t_edge = vec![0; c.cells.len()];
    for (k, cell) in c.cells.iter().enumerate() {
        t_edge[k] = edges.len();
        edges.push(GraphEdge {
            id: format!("t{k}"),
            from: index[&cell.saddles[0]],
            to: index[&cell.saddles[1]],
            colour: Some(Colour::T),
        });
    }
    let corner_image = |(v, i): Corner| -> Corner {
        let e = c.fs[c.fans[v][i]];
        (c.fp[v], c.pos(c.fp[v], e))
    };
    let mut vertex_map = vec![0; vertices.len()];
    for (&corner, &x) in &index {
        vertex_map[x] = index[&corner_image(corner)];
    }
    let mut edge_map = vec![0; edges.len()];
    for e in 0..c.stab.len() {
        edge_map[side_edge[e]] = side_edge[c.fs[e]];
    }
    for (k, cell) in c.cells.iter().enumerate() {
        edge_map[t_edge[k]] = t_edge[c.cell_of[&corner_image(cell.saddles[0])]];
    }
    let g = ColoredGraph { directed: false, vertices, edges, vertex_map, edge_map, fans: BTreeMap::new() };
    if !g.automorphism_ok() {
        return Err(GradientError::Internal("f does not induce an automorphism of the three-colour graph".into()));
    }
    Ok(g)
}

/// Whether `theta` (a permutation of `0..n`) is `i -> i + p mod n` for some `p`.
pub fn is_power_of_cycle(theta: &[usize]) -> bool {
    let n = theta.len();
    n == 0 || (0..n).all(|i| theta[i] == (i + theta[0]) % n)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Isomorphism {
    pub vertices: Vec<usize>,
    pub edges: Vec<usize>,
}

#[derive(Clone)]
struct Partial {
    v: Vec<usize>,
    vi: Vec<usize>,
    e: Vec<usize>,
    ei: Vec<usize>,
}

enum Pair {
    V(usize, usize),
    E(usize, usize),
}

struct Matcher<'a> {
    a: &'a ColoredGraph,
    b: &'a ColoredGraph,
    equipped: bool,
}

impl Matcher<'_> {
    fn close(&self, st: &mut Partial, seed: Pair) -> bool {
        let (a, b) = (self.a, self.b);
        let mut work = vec![seed];
        while let Some(p) = work.pop() {
            match p {
                Pair::V(x, y) => {
                    if st.v[x] != usize::MAX || st.vi[y] != usize::MAX {
                        if st.v[x] != y {
                            return false;
                        }
                        continue;
                    }
                    if a.vertices[x].label != b.vertices[y].label || a.fans.contains_key(&x) != b.fans.contains_key(&y) {
                        return false;
                    }
                    st.v[x] = y;
                    st.vi[y] = x;
                    work.push(Pair::V(a.vertex_map[x], b.vertex_map[y]));
                }
                Pair::E(x, y) => {
                    if st.e[x] != usize::MAX || st.ei[y] != usize::MAX {
                        if st.e[x] != y {
                            return false;
                        }
                        continue;
                    }
                    let (ex, ey) = (&a.edges[x], &b.edges[y]);
                    if ex.colour != ey.colour {
                        return false;
                    }
                    st.e[x] = y;
                    st.ei[y] = x;
                    if a.directed {
                        work.push(Pair::V(ex.from, ey.from));
                        work.push(Pair::V(ex.to, ey.to));
                    }
                    work.push(Pair::E(a.edge_map[x], b.edge_map[y]));
                    if self.equipped {
                        if let (Some(fa), Some(fb)) = (a.fans.get(&ex.to), b.fans.get(&ey.to)) {
                            if fa.len() != fb.len() {
                                return false;
                            }
                            let (i, j) = (fa.iter().position(|&z| z == x).unwrap(), fb.iter().position(|&z| z == y).unwrap());
                            for r in 1..fa.len() {
                                work.push(Pair::E(fa[(i + r) % fa.len()], fb[(j + r) % fb.len()]));
                            }
                        }
                    }
                }
            }
        }
        true
    }

    fn search(&self, st: Partial) -> Option<Partial> {
        if let Some(x) = st.e.iter().position(|&y| y == usize::MAX) {
            for y in 0..self.b.edges.len() {
                if st.ei[y] != usize::MAX {
                    continue;
                }
                let mut next = st.clone();
                if self.close(&mut next, Pair::E(x, y)) {
                    if let Some(done) = self.search(next) {
                        return Some(done);
                    }
                }
            }
            return None;
        }
        if let Some(x) = st.v.iter().position(|&y| y == usize::MAX) {
            for y in 0..self.b.vertices.len() {
                if st.vi[y] != usize::MAX {
                    continue;
                }
                let mut next = st.clone();
                if self.close(&mut next, Pair::V(x, y)) {
                    if let Some(done) = self.search(next) {
                        return Some(done);
                    }
                }
            }
            return None;
        }
        Some(st)
    }

    fn run(&self) -> Option<Isomorphism> {
        let (a, b) = (self.a, self.b);
        if a.vertices.len() != b.vertices.len() || a.edges.len() != b.edges.len() || a.directed != b.directed {
            return None;
        }
        let labels = |g: &ColoredGraph| {
            let mut v: Vec<String> = g.vertices.iter().map(|x| x.label.clone()).collect();
            v.sort_unstable();
            v
        };
        if labels(a) != labels(b) {
            return None;
        }
        let st = Partial {
            v: vec![usize::MAX; a.vertices.len()],
            vi: vec![usize::MAX; a.vertices.len()],
            e: vec![usize::MAX; a.edges.len()],
            ei: vec![usize::MAX; a.edges.len()],
        };
        let done = self.search(st)?;
        let iso = Isomorphism { vertices: done.v, edges: done.e };
        // undirected edges are only matched by colour above; check incidence
        let incident = a.edges.iter().enumerate().all(|(i, e)| {
            let g = &b.edges[iso.edges[i]];
            let (x, y) = (iso.vertices[e.from], iso.vertices[e.to]);
            (g.from, g.to) == (x, y) || (!a.directed && (g.to, g.from) == (x, y))
        });
        incident.then_some(iso)
    }
}

/// Isomorphism of directed graphs conjugating the automorphisms.
pub fn directed_iso(g1: &ColoredGraph, g2: &ColoredGraph) -> Option<Isomorphism> {
    Matcher { a: g1, b: g2, equipped: false }.run()
}

/// Isomorphism of equipped graphs: a directed isomorphism whose permutation
/// of the edges at every sink is a power of the cyclic rotation.
pub fn equipped_iso(g1: &ColoredGraph, g2: &ColoredGraph) -> Option<Isomorphism> {
    let iso = Matcher { a: g1, b: g2, equipped: true }.run()?;
    for (w, fan) in &g1.fans {
        let other = &g2.fans[&iso.vertices[*w]];
        let theta: Vec<usize> = fan.iter().map(|e| other.iter().position(|&x| x == iso.edges[*e]).unwrap()).collect();
        if !is_power_of_cycle(&theta) {
            return None;
        }
    }
    Some(iso)
}

/// Colour and automorphism preserving isomorphism of three-colour graphs.
/// Every vertex meets one edge of each colour, so the image of one vertex per
/// connected component fixes the whole map.
pub fn three_colour_iso(t1: &ColoredGraph, t2: &ColoredGraph) -> Option<Isomorphism> {
    fn neighbours(g: &ColoredGraph) -> Vec<BTreeMap<Colour, (usize, usize)>> {
        let mut out = vec![BTreeMap::new(); g.vertices.len()];
        for (i, e) in g.edges.iter().enumerate() {
            let c = e.colour.unwrap_or(Colour::T);
            out[e.from].insert(c, (i, e.to));
            out[e.to].insert(c, (i, e.from));
        }
        out
    }
    if t1.vertices.len() != t2.vertices.len() || t1.edges.len() != t2.edges.len() {
        return None;
    }
    let (na, nb) = (neighbours(t1), neighbours(t2));
    let n = t1.vertices.len();
    let mut v = vec![usize::MAX; n];
    let mut vi = vec![usize::MAX; n];
    let mut e = vec![usize::MAX; t1.edges.len()];
    let close = |seed: (usize, usize), v: &mut Vec<usize>, vi: &mut Vec<usize>, e: &mut Vec<usize>| -> bool {
        let mut work = vec![seed];
        while let Some((x, y)) = work.pop() {
            if v[x] != usize::MAX || vi[y] != usize::MAX {
                if v[x] != y {
                    return false;
                }
                continue;
            }
            if na[x].keys().ne(nb[y].keys()) {
                return false;
            }
            v[x] = y;
            vi[y] = x;
            for (c, &(ex, xn)) in &na[x] {
                let (ey, yn) = nb[y][c];
                e[ex] = ey;
                work.push((xn, yn));
            }
            work.push((t1.vertex_map[x], t2.vertex_map[y]));
        }
        true
    };
    while let Some(x) = v.iter().position(|&y| y == usize::MAX) {
        let found = (0..n).filter(|&y| vi[y] == usize::MAX).find_map(|y| {
            let (mut v2, mut vi2, mut e2) = (v.clone(), vi.clone(), e.clone());
            close((x, y), &mut v2, &mut vi2, &mut e2).then_some((v2, vi2, e2))
        });
        // components are matched greedily: a component that admits an image
        // admits it in every completion, since components are independent
        let (v2, vi2, e2) = found?;
        v = v2;
        vi = vi2;
        e = e2;
    }
    let ok = (0..t1.edges.len()).all(|i| t2.edge_map[e[i]] == e[t1.edge_map[i]]);
    ok.then_some(Isomorphism { vertices: v, edges: e })
}

/// Base separatrix of a ray family and its host.
struct FamilyBase {
    host: usize,
    base: usize,
}

/// The decomposed scheme of a gradient-like diffeomorphism: the source tori
/// with the frames of all saddle orbits on top, the sink tori below.
pub fn scheme_from_gradient(p: &PhasePortrait) -> Result<DecomposedScheme, GradientError> {
    let c = Checked::new(p)?;
    if !c.kind.contains(&PointKind::Saddle) {
        return Err(GradientError::NoSaddle);
    }
    let n = c.ids.len();
    let rep: Vec<usize> = (0..n)
        .map(|v| {
            let mut best = v;
            let mut y = c.fp[v];
            while y != v {
                best = best.min(y);
                y = c.fp[y];
            }
            best
        })
        .collect();
    let sep_orbit = |e: usize| -> BTreeSet<usize> {
        let mut s = BTreeSet::from([e]);
        let mut x = c.fs[e];
        while x != e {
            s.insert(x);
            x = c.fs[x];
        }
        s
    };

    // families of stable rays, grouped by saddle orbit
    let mut frames: Vec<(usize, FrameKind, Vec<usize>)> = Vec::new();
    for v in 0..n {
        if c.kind[v] != PointKind::Saddle || rep[v] != v {
            continue;
        }
        let stable: Vec<usize> = c.fans[v].iter().copied().filter(|&e| c.stab[e] == Stability::S).collect();
        let (sa, sb) = (stable[0], stable[1]);
        if c.nu[v] == Some(Orientation::Minus) {
            frames.push((v, FrameKind::Type1, vec![sa]));
        } else {
            let same = rep[c.end_of[sa]] == rep[c.end_of[sb]];
            frames.push((v, if same { FrameKind::Type2 } else { FrameKind::Type3 }, vec![sa, sb]));
        }
    }

    // per source orbit: ranks, k and rotation read off the fan of its representative
    let mut family_of: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for (fi, (_, _, seeds)) in frames.iter().enumerate() {
        for (ai, &s) in seeds.iter().enumerate() {
            for e in sep_orbit(s) {
                family_of.insert(e, (fi, ai));
            }
        }
    }
    let mut bases: Vec<Vec<FamilyBase>> = frames.iter().map(|_| Vec::new()).collect();
    let mut params: BTreeMap<(usize, usize), (u64, u64, u32)> = BTreeMap::new();
    for a in 0..n {
        if c.kind[a] != PointKind::Source || rep[a] != a {
            continue;
        }
        let fan = &c.fans[a];
        let m = c.period[a];
        let fams: BTreeSet<(usize, usize)> = fan.iter().map(|e| family_of[e]).collect();
        let nf = fams.len();
        let k = (fan.len() / nf) as u64;
        let r = rotation_of(fan, &fan.iter().map(|&e| c.power(e, m)).collect::<Vec<_>>())
            .map(|r| (fan.len() - r) % fan.len())
            .unwrap();
        if fan.len() % nf != 0 || r % nf != 0 {
            return Err(GradientError::Internal(format!("fan of source {} is not a union of rotation orbits", c.ids[a])));
        }
        let ns = (r / nf) as u64 % k;
        for (pos, &e) in fan.iter().enumerate().take(nf) {
            let (fi, ai) = family_of[&e];
            params.insert((fi, ai), (k, ns, pos as u32));
            if bases[fi].len() <= ai {
                bases[fi].resize_with(ai + 1, || FamilyBase { host: 0, base: 0 });
            }
            bases[fi][ai] = FamilyBase { host: a, base: e };
        }
        for (pos, &e) in fan.iter().enumerate() {
            if params[&family_of[&e]].2 as usize != pos % nf {
                return Err(GradientError::Internal(format!("families interleave irregularly at {}", c.ids[a])));
            }
        }
    }

    let mut level1 = Level::default();
    for a in 0..n {
        if c.kind[a] == PointKind::Source && rep[a] == a {
            level1.components.push(TorusComponent { id: c.ids[a].clone(), period: c.period[a], level: 1 });
        }
    }
    for (fi, (v, kind, _)) in frames.iter().enumerate() {
        let mut families = Vec::new();
        for (ai, b) in bases[fi].iter().enumerate() {
            let (k, ns, rank) = params[&(fi, ai)];
            let n = if *kind == FrameKind::Type3 && ai == 1 && k > 1 { k - ns } else { ns };
            families.push(RayFamily { host: c.ids[b.host].clone(), k, n, rank });
            level1.curves.entry(c.ids[b.host].clone()).or_insert_with(CurveSystem::default).curves.push(CurveClass::new(
                ns as i64,
                k,
                rank as i64,
                &c.ids[*v],
                1,
            ));
        }
        let mk = c.period[bases[fi][0].host] * families[0].k;
        let e0 = bases[fi][0].base;
        let tau = match kind {
            FrameKind::Type1 => mk / 2,
            _ => {
                let e1 = bases[fi][1].base;
                (0..mk).find(|&t| c.power(e1, t) == c.opposite(e0)).ok_or_else(|| {
                    GradientError::Internal(format!("no shift carries the second family of {} to the first", c.ids[*v]))
                })?
            }
        };
        if *kind == FrameKind::Type1 && c.power(e0, tau) != c.opposite(e0) {
            return Err(GradientError::Internal(format!("half turn of {} misses the opposite separatrix", c.ids[*v])));
        }
        level1.frames.push(ModelFrame { id: c.ids[*v].clone(), kind: *kind, families, tau });
    }

    let result = reglue_level(&level1).map_err(|e| GradientError::Internal(e.to_string()))?;
    let cx = &result.complex;
    let physical = |x: usize| -> usize {
        let ray = &cx.rays[x];
        c.power(bases[ray.frame][ray.family].base, ray.j)
    };
    let cell_of_sector = |x: usize| -> usize {
        let e = physical(x);
        let a = c.end_of[e];
        c.cell_of[&(a, c.pos(a, e))]
    };
    for x in 0..cx.rays.len() {
        let (e, a) = (physical(x), c.end_of[physical(x)]);
        if physical(cx.next[x]) != c.fans[a][(c.pos(a, e) + 1) % c.fans[a].len()] {
            return Err(GradientError::Internal("sector order disagrees with the fans".into()));
        }
        // the annulus walk turns clockwise around the sink
        let cell = &c.cells[cell_of_sector(x)];
        let (w, i) = cell.sink;
        let before = c.cell_of[&(w, (i + c.fans[w].len() - 1) % c.fans[w].len())];
        if cell_of_sector(cx.partner[cx.next[x]]) != before {
            return Err(GradientError::Internal("sector gluing disagrees with the cells".into()));
        }
    }

    let mut level0 = Level::default();
    let mut used = BTreeSet::new();
    for nc in &result.components {
        let sink = rep[c.cells[cell_of_sector(nc.boundary[0])].sink.0];
        if c.period[sink] != nc.period || !used.insert(sink) {
            return Err(GradientError::Internal(format!("regluing does not reproduce the basin of {}", c.ids[sink])));
        }
        level0.components.push(TorusComponent { id: c.ids[sink].clone(), period: nc.period, level: 0 });
        let curves = nc.knots.iter().map(|k| CurveClass::new(k.eq_coeff, k.winding, k.rank, &k.frame, 1)).collect();
        level0.curves.insert(c.ids[sink].clone(), CurveSystem { curves });
    }
    let sinks = (0..n).filter(|&v| c.kind[v] == PointKind::Sink && rep[v] == v).count();
    if used.len() != sinks || !result.untouched.is_empty() {
        return Err(GradientError::Internal("sink basins and reglued tori do not correspond".into()));
    }
    let mut s = DecomposedScheme { levels: vec![level0, level1] };
    s.stamp_levels();
    Ok(s)
}
