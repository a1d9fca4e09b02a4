//! Equivalence of decomposed schemes.
//!
//! Levels are matched from the sources down. On each level an equivalence is
//! a bijection of frame rays commuting with the angular successor, the frame
//! gluing and the deck map `phi`; such a bijection is the combinatorial lift
//! of an orientation preserving, eta preserving homeomorphism that carries
//! frames to frames. It is fixed by the image of one ray per connected
//! cluster, so the search only ranges over anchor images. The ray bijection
//! induces the component bijection of the level below. On every component the
//! declared curves must then agree up to an equator twist, with the frame
//! labels translated and the cyclic order of each parallel family rotated.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::core_model::{CurveClass, DecomposedScheme, FrameKind, Id};
use crate::regluing::{check_level_match, same_cycle, Origin, RegluingResult};

/// Representative of a class under the equator twists `(a, w) -> (a + t w, w)`.
pub fn canonical_curve_class(c: &CurveClass) -> CurveClass {
    let mut out = c.clone();
    if c.winding == 0 {
        out.eq_coeff = 1;
    } else {
        out.eq_coeff = c.eq_coeff.rem_euclid(c.winding as i64);
    }
    out
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    /// Component bijection of every level, `levels[0]` first.
    pub components: Vec<BTreeMap<Id, Id>>,
    pub frames: BTreeMap<Id, Id>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub equivalent: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub obstruction: Option<String>,
}

impl Verdict {
    fn no(reason: String) -> Self {
        Verdict { equivalent: false, witness: None, obstruction: Some(reason) }
    }
}

struct LevelData {
    result: RegluingResult,
    /// Declared level-`(i-1)` id to origin.
    origin: BTreeMap<Id, Origin>,
    clusters: Vec<Vec<usize>>,
    frame_ids: Vec<Id>,
    frame_kinds: Vec<FrameKind>,
}

struct Side<'a> {
    scheme: &'a DecomposedScheme,
    /// Indexed by level; `None` for level 0.
    levels: Vec<Option<LevelData>>,
}

impl<'a> Side<'a> {
    fn new(scheme: &'a DecomposedScheme) -> Result<Self, String> {
        scheme.check_structure().map_err(|e| e.to_string())?;
        let mut levels = vec![None];
        for i in 1..scheme.levels.len() {
            let lm = check_level_match(scheme, i).map_err(|e| e.to_string())?;
            let result = lm.result;
            let cx = &result.complex;
            let n = cx.rays.len();
            let mut seen = vec![false; n];
            let mut clusters = Vec::new();
            for s in 0..n {
                if seen[s] {
                    continue;
                }
                let mut stack = vec![s];
                let mut cl = Vec::new();
                seen[s] = true;
                while let Some(x) = stack.pop() {
                    cl.push(x);
                    for y in [cx.next[x], cx.prev[x], cx.partner[x], cx.phi[x]] {
                        if !seen[y] {
                            seen[y] = true;
                            stack.push(y);
                        }
                    }
                }
                cl.sort_unstable();
                clusters.push(cl);
            }
            let level = &scheme.levels[i];
            levels.push(Some(LevelData {
                result,
                origin: lm.origin,
                clusters,
                frame_ids: level.frames.iter().map(|f| f.id.clone()).collect(),
                frame_kinds: level.frames.iter().map(|f| f.kind).collect(),
            }));
        }
        Ok(Side { scheme, levels })
    }
}

#[derive(Clone, Default)]
struct State {
    comps: Vec<BTreeMap<Id, Id>>,
    frames: BTreeMap<Id, Id>,
    /// Ray bijection of every level.
    rays: Vec<Vec<usize>>,
}

struct Search<'a> {
    a: Side<'a>,
    b: Side<'a>,
    failure: RefCell<Option<String>>,
}

impl Search<'_> {
    fn fail(&self, why: String) -> bool {
        let mut f = self.failure.borrow_mut();
        if f.is_none() {
            *f = Some(why);
        }
        false
    }

    /// Matches level `i` and everything below it.
    fn level(&self, i: usize, st: &mut State) -> bool {
        if i == 0 {
            return self.curves(0, st);
        }
        let na = self.a.levels[i].as_ref().unwrap().clusters.len();
        let mut psi = vec![usize::MAX; self.a.levels[i].as_ref().unwrap().result.complex.rays.len()];
        let mut used = vec![false; self.b.levels[i].as_ref().unwrap().clusters.len()];
        if na != used.len() {
            return self.fail(format!("level {i}: different numbers of frame clusters"));
        }
        self.cluster(i, 0, &mut psi, &mut used, st)
    }

    fn cluster(&self, i: usize, c: usize, psi: &mut Vec<usize>, used: &mut Vec<bool>, st: &mut State) -> bool {
        let la = self.a.levels[i].as_ref().unwrap();
        if c == la.clusters.len() {
            return self.rayless(i, psi, st);
        }
        let lb = self.b.levels[i].as_ref().unwrap();
        let anchor = la.clusters[c][0];
        for t in 0..lb.clusters.len() {
            if used[t] || lb.clusters[t].len() != la.clusters[c].len() {
                continue;
            }
            for &y0 in &lb.clusters[t] {
                let mut p2 = psi.clone();
                let mut st2 = st.clone();
                if self.propagate(i, anchor, y0, &mut p2, &mut st2) {
                    used[t] = true;
                    if self.cluster(i, c + 1, &mut p2, used, &mut st2) {
                        *psi = p2;
                        *st = st2;
                        return true;
                    }
                    used[t] = false;
                }
            }
        }
        false
    }

    fn propagate(&self, i: usize, x0: usize, y0: usize, psi: &mut [usize], st: &mut State) -> bool {
        let la = self.a.levels[i].as_ref().unwrap();
        let lb = self.b.levels[i].as_ref().unwrap();
        let (ca, cb) = (&la.result.complex, &lb.result.complex);
        let mut stack = vec![(x0, y0)];
        let mut image: BTreeSet<usize> = psi.iter().copied().filter(|&y| y != usize::MAX).collect();
        let comps = st.comps.get_mut(i).unwrap();
        while let Some((x, y)) = stack.pop() {
            if psi[x] != usize::MAX {
                if psi[x] != y {
                    return false;
                }
                continue;
            }
            if !image.insert(y) {
                return false;
            }
            psi[x] = y;
            let (fa, fb) = (ca.rays[x].frame, cb.rays[y].frame);
            if la.frame_kinds[fa] != lb.frame_kinds[fb] {
                return false;
            }
            let (ida, idb) = (&la.frame_ids[fa], &lb.frame_ids[fb]);
            match st.frames.get(ida) {
                Some(m) if m != idb => return false,
                Some(_) => {}
                None => {
                    if st.frames.values().any(|v| v == idb) {
                        return false;
                    }
                    st.frames.insert(ida.clone(), idb.clone());
                }
            }
            let (ha, hb) = (&ca.hosts[ca.rays[x].host], &cb.hosts[cb.rays[y].host]);
            match comps.get(ha) {
                Some(m) if m != hb => return false,
                Some(_) => {}
                None => {
                    let pa = self.a.scheme.levels[i].period_of(ha);
                    let pb = self.b.scheme.levels[i].period_of(hb);
                    if pa != pb || comps.values().any(|v| v == hb) {
                        return false;
                    }
                    comps.insert(ha.clone(), hb.clone());
                }
            }
            stack.push((ca.next[x], cb.next[y]));
            stack.push((ca.partner[x], cb.partner[y]));
            stack.push((ca.phi[x], cb.phi[y]));
        }
        true
    }

    /// Components without frames; only the top level leaves a choice.
    fn rayless(&self, i: usize, psi: &[usize], st: &mut State) -> bool {
        let la = &self.a.scheme.levels[i];
        let lb = &self.b.scheme.levels[i];
        let free_a: Vec<&Id> = la.components.iter().map(|c| &c.id).filter(|id| !st.comps[i].contains_key(*id)).collect();
        let taken: BTreeSet<&Id> = st.comps[i].values().collect();
        let free_b: Vec<&Id> = lb.components.iter().map(|c| &c.id).filter(|id| !taken.contains(id)).collect();
        if free_a.len() != free_b.len() {
            return self.fail(format!("level {i}: component counts differ"));
        }
        self.assign_free(i, &free_a, &free_b, 0, &mut vec![false; free_b.len()], psi, st)
    }

    #[allow(clippy::too_many_arguments)]
    fn assign_free(
        &self,
        i: usize,
        fa: &[&Id],
        fb: &[&Id],
        k: usize,
        used: &mut Vec<bool>,
        psi: &[usize],
        st: &mut State,
    ) -> bool {
        if k == fa.len() {
            return self.descend(i, psi, st);
        }
        let pa = self.a.scheme.levels[i].period_of(fa[k]);
        for t in 0..fb.len() {
            if used[t] || self.b.scheme.levels[i].period_of(fb[t]) != pa {
                continue;
            }
            let mut st2 = st.clone();
            st2.comps[i].insert(fa[k].clone(), fb[t].clone());
            used[t] = true;
            if self.assign_free(i, fa, fb, k + 1, used, psi, &mut st2) {
                *st = st2;
                return true;
            }
            used[t] = false;
        }
        self.fail(format!("level {i}: no period preserving matching of the remaining components"))
    }

    /// Checks curves on level `i`, then builds the component bijection of
    /// level `i - 1` from the ray bijection and continues there.
    fn descend(&self, i: usize, psi: &[usize], st: &mut State) -> bool {
        if !self.curves(i, st) {
            return false;
        }
        let la = self.a.levels[i].as_ref().unwrap();
        let lb = self.b.levels[i].as_ref().unwrap();
        let by_origin_b: BTreeMap<&Origin, &Id> = lb.origin.iter().map(|(id, o)| (o, id)).collect();
        let mut below = BTreeMap::new();
        for (id, o) in &la.origin {
            let image = match o {
                Origin::Untouched(up) => Origin::Untouched(st.comps[i][up].clone()),
                Origin::Reglued(ci) => {
                    let s = la.result.components[*ci].boundary[0];
                    Origin::Reglued(lb.result.sector_component[psi[s]])
                }
            };
            match by_origin_b.get(&image) {
                Some(idb) => {
                    below.insert(id.clone(), (*idb).clone());
                }
                None => return self.fail(format!("level {}: component {id} has no counterpart", i - 1)),
            }
        }
        let mut st2 = st.clone();
        st2.comps[i - 1] = below;
        st2.rays[i] = psi.to_vec();
        if self.level(i - 1, &mut st2) {
            *st = st2;
            return true;
        }
        false
    }

    fn curves(&self, i: usize, st: &State) -> bool {
        let la = &self.a.scheme.levels[i];
        let lb = &self.b.scheme.levels[i];
        for (ida, idb) in &st.comps[i] {
            let ca = la.curves_on(ida);
            let cb = lb.curves_on(idb);
            let translated: Option<Vec<CurveClass>> = ca
                .iter()
                .map(|c| {
                    st.frames.get(&c.label).map(|l| CurveClass { label: l.clone(), ..c.clone() })
                })
                .collect();
            let Some(translated) = translated else {
                return self.fail(format!("level {i}: curves on {ida} name unmatched frames"));
            };
            if !curves_match(&translated, cb) {
                return self.fail(format!("level {i}: curves on {ida} and {idb} are arranged differently"));
            }
        }
        true
    }
}

fn twist(c: &CurveClass, t: i64) -> (i64, i64) {
    let (a, w) = c.direction();
    (a + t * w, w)
}

/// Parallel families keyed by direction, each listed by rank.
fn families(curves: &[CurveClass], t: i64) -> BTreeMap<(i64, i64), Vec<(Id, usize)>> {
    let mut by: BTreeMap<(i64, i64), Vec<(i64, Id, usize)>> = BTreeMap::new();
    for c in curves {
        by.entry(twist(c, t)).or_default().push((c.offset_rank, c.label.clone(), c.level_tag));
    }
    by.into_iter()
        .map(|(k, mut v)| {
            v.sort();
            (k, v.into_iter().map(|(_, l, t)| (l, t)).collect())
        })
        .collect()
}

/// Whether some equator twist carries the first arrangement to the second,
/// with every parallel family keeping its cyclic order of labels.
pub fn curves_match(a: &[CurveClass], b: &[CurveClass]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let fb = families(b, 0);
    let mut twists = BTreeSet::new();
    match a.iter().find(|c| c.winding > 0) {
        None => {
            twists.insert(0);
        }
        Some(r) => {
            let (ra, rw) = r.direction();
            for &(ba, bw) in fb.keys() {
                if bw == rw && (ba - ra) % rw == 0 {
                    twists.insert((ba - ra) / rw);
                }
            }
        }
    }
    twists.into_iter().any(|t| {
        let fa = families(a, t);
        fa.len() == fb.len()
            && fa.iter().all(|(k, seq)| fb.get(k).is_some_and(|other| same_cycle(seq, other)))
    })
}

fn multiset<T: Ord>(it: impl IntoIterator<Item = T>) -> Vec<T> {
    let mut v: Vec<T> = it.into_iter().collect();
    v.sort();
    v
}

/// Cheap invariants whose difference already rules out equivalence.
fn quick_obstruction(a: &DecomposedScheme, b: &DecomposedScheme) -> Option<String> {
    if a.levels.len() != b.levels.len() {
        return Some(format!("{} levels against {}", a.levels.len(), b.levels.len()));
    }
    for (i, (la, lb)) in a.levels.iter().zip(&b.levels).enumerate() {
        let pa = multiset(la.components.iter().map(|c| c.period));
        let pb = multiset(lb.components.iter().map(|c| c.period));
        if pa != pb {
            return Some(format!("level {i}: periods {pa:?} against {pb:?}"));
        }
        let fa = multiset(la.frames.iter().map(|f| (f.kind, f.saddle_count(|h| la.period_of(h).unwrap_or(0)))));
        let fb = multiset(lb.frames.iter().map(|f| (f.kind, f.saddle_count(|h| lb.period_of(h).unwrap_or(0)))));
        if fa != fb {
            return Some(format!("level {i}: saddle orbits {fa:?} against {fb:?}"));
        }
        let ca = multiset(la.components.iter().map(|c| multiset(la.curves_on(&c.id).iter().map(|v| (v.winding, v.level_tag)))));
        let cb = multiset(lb.components.iter().map(|c| multiset(lb.curves_on(&c.id).iter().map(|v| (v.winding, v.level_tag)))));
        if ca != cb {
            return Some(format!("level {i}: curve windings differ"));
        }
    }
    None
}

/// Decides whether two valid decomposed schemes are equivalent.
pub fn are_equivalent(s1: &DecomposedScheme, s2: &DecomposedScheme) -> Verdict {
    if let Some(why) = quick_obstruction(s1, s2) {
        return Verdict::no(why);
    }
    let a = match Side::new(s1) {
        Ok(s) => s,
        Err(e) => return Verdict::no(format!("first scheme is invalid: {e}")),
    };
    let b = match Side::new(s2) {
        Ok(s) => s,
        Err(e) => return Verdict::no(format!("second scheme is invalid: {e}")),
    };
    let top = s1.top();
    let search = Search { a, b, failure: RefCell::new(None) };
    let mut st = State { comps: vec![BTreeMap::new(); top + 1], frames: BTreeMap::new(), rays: vec![Vec::new(); top + 1] };
    let found = if top == 0 {
        // no frames anywhere: match sink tori by period
        let la = &s1.levels[0];
        let lb = &s2.levels[0];
        let mut ids_b: Vec<&Id> = lb.components.iter().map(|c| &c.id).collect();
        let mut ok = true;
        for c in &la.components {
            match ids_b.iter().position(|id| lb.period_of(id) == Some(c.period)) {
                Some(p) => {
                    st.comps[0].insert(c.id.clone(), ids_b.remove(p).clone());
                }
                None => ok = false,
            }
        }
        ok && search.curves(0, &st)
    } else {
        search.level(top, &mut st)
    };
    if found {
        Verdict { equivalent: true, witness: Some(Witness { components: st.comps, frames: st.frames }), obstruction: None }
    } else {
        Verdict::no(search.failure.into_inner().unwrap_or_else(|| "no level-compatible matching of frame rays exists".into()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConjugacyVerdict {
    pub conjugate: bool,
    pub explanation: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

/// The same decision phrased for the diffeomorphisms the schemes describe.
pub fn conjugacy_verdict(s1: &DecomposedScheme, s2: &DecomposedScheme) -> ConjugacyVerdict {
    let v = are_equivalent(s1, s2);
    let explanation = if v.equivalent {
        "the decomposed schemes are equivalent, so the diffeomorphisms are topologically conjugate".to_string()
    } else {
        format!(
            "the decomposed schemes are not equivalent ({}), so the diffeomorphisms are not topologically conjugate",
            v.obstruction.as_deref().unwrap_or("no matching")
        )
    };
    ConjugacyVerdict { conjugate: v.equivalent, explanation, witness: v.witness }
}
