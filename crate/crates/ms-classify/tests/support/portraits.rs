//! Random gradient-like portraits read off ribbon graphs.
//!
//! The sinks are the vertices of a connected ribbon graph, the saddles its
//! edges and the sources its faces. The diffeomorphism permutes `k` copies of
//! a random graph wedged at one vertex, so points away from that vertex have
//! period `k`.

use std::collections::BTreeMap;

use ms_classify::gradient::{PhasePortrait, Point, PointKind, PortraitMap, Separatrix, Stability};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Half-edges `2e` and `2e + 1` form edge `e`; `rot[v]` lists the half-edges
/// leaving `v` counter-clockwise; `g` is the half-edge permutation of `f`.
pub struct Ribbon {
    pub vert: Vec<usize>,
    pub rot: Vec<Vec<usize>>,
    pub g: Vec<usize>,
}

impl Ribbon {
    fn sigma(&self, h: usize) -> usize {
        let r = &self.rot[self.vert[h]];
        let i = r.iter().position(|&x| x == h).unwrap();
        r[(i + 1) % r.len()]
    }

    /// Orbits of `h -> sigma(alpha(h))`; each face lies to the right of its
    /// half-edges.
    pub fn faces(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.vert.len()];
        let mut out = Vec::new();
        for h in 0..self.vert.len() {
            let mut orbit = Vec::new();
            let mut x = h;
            while !seen[x] {
                seen[x] = true;
                orbit.push(x);
                x = self.sigma(x ^ 1);
            }
            if !orbit.is_empty() {
                out.push(orbit);
            }
        }
        out
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.rot.len() as i64 - (self.vert.len() / 2) as i64 + self.faces().len() as i64
    }

    pub fn portrait(&self) -> PhasePortrait {
        let faces = self.faces();
        let mut face_of = vec![0; self.vert.len()];
        for (i, f) in faces.iter().enumerate() {
            for &h in f {
                face_of[h] = i;
            }
        }
        let point = |id: String, kind| Point { id, kind, period: None, nu: None };
        let mut points = Vec::new();
        let mut separatrices = Vec::new();
        let mut fans = BTreeMap::new();
        let mut pm = BTreeMap::new();
        let mut sm = BTreeMap::new();
        for (v, r) in self.rot.iter().enumerate() {
            points.push(point(format!("w{v}"), PointKind::Sink));
            fans.insert(format!("w{v}"), r.iter().map(|h| format!("u{h}")).collect());
            pm.insert(format!("w{v}"), format!("w{}", self.vert[self.g[r[0]]]));
        }
        for e in 0..self.vert.len() / 2 {
            let (h, k) = (2 * e, 2 * e + 1);
            points.push(point(format!("x{e}"), PointKind::Saddle));
            fans.insert(format!("x{e}"), vec![format!("u{k}"), format!("s{k}"), format!("u{h}"), format!("s{h}")]);
            pm.insert(format!("x{e}"), format!("x{}", self.g[h] / 2));
        }
        for (i, f) in faces.iter().enumerate() {
            points.push(point(format!("a{i}"), PointKind::Source));
            fans.insert(format!("a{i}"), f.iter().rev().map(|h| format!("s{h}")).collect());
            pm.insert(format!("a{i}"), format!("a{}", face_of[self.g[f[0]]]));
        }
        for h in 0..self.vert.len() {
            let saddle = format!("x{}", h / 2);
            separatrices.push(Separatrix { id: format!("u{h}"), saddle: saddle.clone(), stability: Stability::U, end: format!("w{}", self.vert[h]) });
            separatrices.push(Separatrix { id: format!("s{h}"), saddle, stability: Stability::S, end: format!("a{}", face_of[h]) });
            sm.insert(format!("u{h}"), format!("u{}", self.g[h]));
            sm.insert(format!("s{h}"), format!("s{}", self.g[h]));
        }
        PhasePortrait { points, separatrices, fans, map: PortraitMap { points: pm, separatrices: sm } }
    }
}

/// A connected ribbon graph with at most `max_v` vertices and at least one edge.
fn random_graph(rng: &mut ChaCha8Rng, max_v: usize) -> (usize, Vec<(usize, usize)>, Vec<Vec<usize>>) {
    let nv = rng.gen_range(1..=max_v);
    let mut ends: Vec<(usize, usize)> = (1..nv).map(|v| (rng.gen_range(0..v), v)).collect();
    let extra = rng.gen_range(usize::from(nv == 1)..=2);
    for _ in 0..extra {
        ends.push((rng.gen_range(0..nv), rng.gen_range(0..nv)));
    }
    let mut rot = vec![Vec::new(); nv];
    for (e, &(a, b)) in ends.iter().enumerate() {
        rot[a].push(2 * e);
        rot[b].push(2 * e + 1);
    }
    for r in &mut rot {
        r.shuffle(rng);
    }
    (nv, ends, rot)
}

/// `k` copies of a random ribbon graph wedged at its vertex 0 and rotated
/// by `f`.
pub fn random_ribbon(rng: &mut ChaCha8Rng, max_v: usize, k: usize) -> Ribbon {
    let (nv, ends, rot) = random_graph(rng, max_v);
    let ne = ends.len();
    let vmap = |i: usize, v: usize| if v == 0 { 0 } else { 1 + i * (nv - 1) + v - 1 };
    let hmap = |i: usize, h: usize| 2 * (i * ne + h / 2) + h % 2;
    let mut vert = vec![0; 2 * ne * k];
    let mut new_rot = vec![Vec::new(); 1 + k * (nv - 1)];
    for i in 0..k {
        for (e, &(a, b)) in ends.iter().enumerate() {
            vert[hmap(i, 2 * e)] = vmap(i, a);
            vert[hmap(i, 2 * e + 1)] = vmap(i, b);
        }
        for (v, r) in rot.iter().enumerate() {
            new_rot[vmap(i, v)].extend(r.iter().map(|&h| hmap(i, h)));
        }
    }
    let g = (0..vert.len()).map(|h| (h + 2 * ne) % vert.len()).collect();
    Ribbon { vert, rot: new_rot, g }
}
