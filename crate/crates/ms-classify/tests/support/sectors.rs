//! Brute-force regluing oracle.
//!
//! It places every ray at an exact rational angle on its sheet, cuts
//! each sheet into sectors between angularly consecutive rays, unions sectors
//! across glued ray sides and counts deck orbits of the resulting annuli. It
//! reads the second family of a two-host frame in its own chart and glues it
//! side to like side, without going through `surface_n`.

use std::collections::{BTreeMap, HashMap};

use ms_classify::core_model::{FrameKind, ModelFrame, RayFamily};
use ms_classify::regluing::reglue;
use num_integer::Integer;
use num_rational::Ratio;

type Q = Ratio<i64>;

struct Uf(Vec<usize>);

impl Uf {
    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut y = x;
        while self.0[y] != r {
            let n = self.0[y];
            self.0[y] = r;
            y = n;
        }
        r
    }
    fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        self.0[a] = b;
    }
}

/// (period, sectors per annulus) of each new torus and the knot winding of
/// each family.
pub fn oracle(kind: FrameKind, fams: &[(u64, u64, u64)], tau: u64) -> (Vec<(u64, u64)>, Vec<u64>) {
    // ray id -> (family, j); sheets keyed by (host, sheet)
    let mut rays = Vec::new();
    let mut sheets: BTreeMap<(usize, u64), Vec<(Q, usize)>> = BTreeMap::new();
    let host_of = |f: usize| if kind == FrameKind::Type3 { f } else { 0 };
    let per_host = if kind == FrameKind::Type2 { 2 } else { 1 };
    let mut id = HashMap::new();
    for (f, &(m, k, n)) in fams.iter().enumerate() {
        let mk = m * k;
        let rank = if kind == FrameKind::Type2 { f as i64 } else { 0 };
        let base = Q::new(rank + 1, k as i64 * (per_host + 1));
        for j in 0..mk {
            let ang = Q::new((j * n) as i64, mk as i64) + base;
            let ang = ang - ang.floor();
            id.insert((f, j), rays.len());
            sheets.entry((host_of(f), j % m)).or_default().push((ang, rays.len()));
            rays.push((f, j));
        }
    }
    // sector x lies counter-clockwise of ray x; ending[x] is the sector whose
    // counter-clockwise side is x
    let mut ending = vec![0; rays.len()];
    for list in sheets.values_mut() {
        list.sort();
        for i in 0..list.len() {
            ending[list[(i + 1) % list.len()].1] = list[i].1;
        }
    }
    let plus = |x: usize| x;
    let minus = |x: usize| ending[x];
    let mut uf = Uf((0..rays.len()).collect());
    let mk = fams[0].0 * fams[0].1;
    for j in 0..mk {
        match kind {
            FrameKind::Type1 => {
                let (a, b) = (id[&(0, j)], id[&(0, (j + tau) % mk)]);
                uf.union(plus(a), minus(b));
            }
            FrameKind::Type2 => {
                let (a, b) = (id[&(0, j)], id[&(1, (j + tau) % mk)]);
                uf.union(plus(a), minus(b));
                uf.union(plus(b), minus(a));
            }
            FrameKind::Type3 => {
                let (a, b) = (id[&(0, j)], id[&(1, (j + tau) % mk)]);
                uf.union(plus(a), plus(b));
                uf.union(minus(a), minus(b));
            }
        }
    }
    let phi = |x: usize| {
        let (f, j) = rays[x];
        let (m, k, _) = fams[f];
        id[&(f, (j + 1) % (m * k))]
    };
    let roots: Vec<usize> = (0..rays.len()).map(|x| uf.find(x)).collect();
    let mut size: HashMap<usize, u64> = HashMap::new();
    for &r in &roots {
        *size.entry(r).or_default() += 1;
    }
    // deck orbit length of each annulus
    let mut period_of = HashMap::new();
    for x in 0..rays.len() {
        let r = roots[x];
        if period_of.contains_key(&r) {
            continue;
        }
        let mut y = phi(x);
        let mut p = 1;
        while roots[y] != r {
            y = phi(y);
            p += 1;
        }
        period_of.insert(r, p);
    }
    let mut seen = std::collections::HashSet::new();
    let mut comps = Vec::new();
    for x in 0..rays.len() {
        let r = roots[x];
        if seen.contains(&r) {
            continue;
        }
        let p = period_of[&r];
        let mut y = x;
        for _ in 0..p {
            seen.insert(roots[y]);
            y = phi(y);
        }
        comps.push((p, size[&r]));
    }
    comps.sort();
    let mut windings: Vec<u64> = (0..fams.len())
        .map(|f| {
            let (m, k, _) = fams[f];
            m * k / period_of[&roots[id[&(f, 0)]]]
        })
        .collect();
    windings.sort();
    (comps, windings)
}

pub fn admissible(m: u64, k: u64) -> Vec<u64> {
    if k == 1 {
        vec![0]
    } else {
        (1..k).filter(|n| n.gcd(&(m * k)) == 1).collect()
    }
}

pub fn engine(frame: &ModelFrame, periods: &[(&str, u64)]) -> (Vec<(u64, u64)>, Vec<u64>) {
    let lookup = |h: &str| periods.iter().find(|p| p.0 == h).map(|p| p.1);
    let r = reglue(frame, &lookup).expect("admissible frame");
    let mut comps: Vec<(u64, u64)> = r.components.iter().map(|c| (c.period, c.length)).collect();
    comps.sort();
    let mut windings: Vec<u64> = r.components.iter().flat_map(|c| c.knots.iter().map(|k| k.winding)).collect();
    windings.sort();
    (comps, windings)
}

pub fn fam(host: &str, k: u64, n: u64, rank: u32) -> RayFamily {
    RayFamily { host: host.into(), k, n, rank }
}

/// A frame, the periods of its hosts and its family parameters `(m, k, n)`.
pub struct Case {
    pub frame: ModelFrame,
    pub periods: Vec<(&'static str, u64)>,
    pub fams: Vec<(u64, u64, u64)>,
}

/// Every admissible frame with host periods and ray counts up to 4.
pub fn small_cases() -> Vec<Case> {
    let mut out = Vec::new();
    let frame = |kind, families, tau| ModelFrame { id: "s".into(), kind, families, tau };
    for m in 1..=4u64 {
        for k in 1..=4u64 {
            let mk = m * k;
            for n in admissible(m, k) {
                if mk % 2 == 0 {
                    out.push(Case {
                        frame: frame(FrameKind::Type1, vec![fam("a", k, n, 0)], mk / 2),
                        periods: vec![("a", m)],
                        fams: vec![(m, k, n)],
                    });
                }
                for tau in 0..mk {
                    out.push(Case {
                        frame: frame(FrameKind::Type2, vec![fam("a", k, n, 0), fam("a", k, n, 1)], tau),
                        periods: vec![("a", m)],
                        fams: vec![(m, k, n), (m, k, n)],
                    });
                }
                for m2 in 1..=4u64 {
                    if mk % m2 != 0 || mk / m2 > 4 {
                        continue;
                    }
                    let k2 = mk / m2;
                    for n2 in admissible(m2, k2) {
                        for tau in 0..mk {
                            out.push(Case {
                                frame: frame(FrameKind::Type3, vec![fam("a", k, n, 0), fam("b", k2, n2, 0)], tau),
                                periods: vec![("a", m), ("b", m2)],
                                fams: vec![(m, k, n), (m2, k2, n2)],
                            });
                        }
                    }
                }
            }
        }
    }
    out
}
