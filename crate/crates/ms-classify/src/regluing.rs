//! Cut-and-paste along frames on the finite sector complex.
//!
//! Every host torus is modelled by its `m` sheets, each cut by the rays of the
//! frames it carries into sectors. A frame glues the `+` side of a ray to the
//! `-` side of its partner. The sectors then chain into annuli, `phi` permutes
//! the annuli, and every `phi`-orbit of annuli is one new torus whose period is
//! the orbit length. The rays glued inside an annulus (the seams) project to
//! the frame knots on the new torus.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_integer::Integer;
use thiserror::Error;

use crate::core_model::{
    validate_frame_params, validate_host_families, CurveClass, DecomposedScheme, FrameError, FrameKind, Id, Level,
    ModelFrame, TorusComponent,
};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum RegluingError {
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),
    #[error("level {level}: regluing does not produce the declared level below: {detail}")]
    LevelMismatch { level: usize, detail: String },
    #[error("level {level}, frame {frame}: {detail}")]
    PushforwardMismatch { level: usize, frame: Id, detail: String },
    #[error("level {0} does not exist")]
    NoSuchLevel(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ray {
    pub frame: usize,
    pub family: usize,
    pub j: u64,
    pub host: usize,
}

/// Rays, their angular successor on each sheet, the frame gluing and the
/// deck map `phi`. Sectors are named by the ray on their clockwise side.
#[derive(Clone, Debug)]
pub struct SectorComplex {
    pub rays: Vec<Ray>,
    /// Counter-clockwise successor on the same sheet.
    pub next: Vec<usize>,
    pub prev: Vec<usize>,
    /// Side `+` of ray `x` is glued to side `-` of `partner[x]`.
    pub partner: Vec<usize>,
    pub phi: Vec<usize>,
    pub hosts: Vec<Id>,
}

impl SectorComplex {
    /// Builds the complex for all frames of a level. Frames must already have
    /// passed [`validate_frame_params`] and [`validate_host_families`].
    pub fn build(frames: &[&ModelFrame], host_period: &dyn Fn(&str) -> Option<u64>) -> Result<Self, RegluingError> {
        let mut hosts: Vec<Id> = Vec::new();
        let mut per_host: Vec<Vec<(usize, usize)>> = Vec::new();
        for (fi, frame) in frames.iter().enumerate() {
            for (ai, fam) in frame.families.iter().enumerate() {
                let h = match hosts.iter().position(|h| *h == fam.host) {
                    Some(h) => h,
                    None => {
                        hosts.push(fam.host.clone());
                        per_host.push(Vec::new());
                        hosts.len() - 1
                    }
                };
                per_host[h].push((fi, ai));
            }
        }

        let mut rays = Vec::new();
        let mut index: HashMap<(usize, usize, u64), usize> = HashMap::new();
        let mut next = Vec::new();
        for (h, fams) in per_host.iter().enumerate() {
            let m = host_period(&hosts[h]).ok_or_else(|| {
                RegluingError::InternalInconsistency(format!("host {} has no period", hosts[h]))
            })?;
            let mut keyed = Vec::new();
            for &(fi, ai) in fams {
                let fam = &frames[fi].families[ai];
                let mk = m * fam.k;
                let ns = frames[fi].surface_n(ai);
                for j in 0..mk {
                    let id = rays.len();
                    rays.push(Ray { frame: fi, family: ai, j, host: h });
                    index.insert((fi, ai, j), id);
                    keyed.push((j % m, (j * ns) % mk, fam.rank, id));
                }
            }
            keyed.sort();
            next.resize(rays.len(), usize::MAX);
            for sheet in keyed.chunk_by(|a, b| a.0 == b.0) {
                for (i, e) in sheet.iter().enumerate() {
                    next[e.3] = sheet[(i + 1) % sheet.len()].3;
                }
            }
        }

        let mut prev = vec![0; rays.len()];
        for (x, &y) in next.iter().enumerate() {
            prev[y] = x;
        }
        let mut partner = vec![0; rays.len()];
        let mut phi = vec![0; rays.len()];
        for (x, ray) in rays.iter().enumerate() {
            let frame = frames[ray.frame];
            let mk = host_period(&frame.families[ray.family].host).unwrap() * frame.families[ray.family].k;
            phi[x] = index[&(ray.frame, ray.family, (ray.j + 1) % mk)];
            partner[x] = match (frame.kind, ray.family) {
                (FrameKind::Type1, _) => index[&(ray.frame, 0, (ray.j + frame.tau) % mk)],
                (_, 0) => index[&(ray.frame, 1, (ray.j + frame.tau) % mk)],
                (_, _) => index[&(ray.frame, 0, (ray.j + mk - frame.tau % mk) % mk)],
            };
        }
        Ok(SectorComplex { rays, next, prev, partner, phi, hosts })
    }

    /// The annulus through sector `s`, listed counter-clockwise from `s`.
    pub fn annulus(&self, s: usize) -> Vec<usize> {
        let mut out = vec![s];
        let mut cur = self.partner[self.next[s]];
        while cur != s {
            out.push(cur);
            cur = self.partner[self.next[cur]];
        }
        out
    }
}

/// A frame knot on a reglued torus.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Knot {
    pub frame: Id,
    pub eq_coeff: i64,
    pub winding: u64,
    pub rank: i64,
}

/// One torus produced by regluing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NewComponent {
    pub period: u64,
    /// Number of sectors around one annulus; the number of frame ray
    /// segments met in one fundamental loop.
    pub length: u64,
    /// `phi^period` rotates the annulus by this many sectors.
    pub shift: u64,
    pub knots: Vec<Knot>,
    /// Hosts whose sectors end up on this torus.
    pub hosts: BTreeSet<Id>,
    /// Sectors (ray indices into the complex) of the base annulus.
    pub boundary: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct RegluingResult {
    pub components: Vec<NewComponent>,
    /// Components of the level that carry no frame, passed through as is.
    pub untouched: Vec<TorusComponent>,
    pub complex: SectorComplex,
    /// New torus (index into `components`) containing each sector.
    pub sector_component: Vec<usize>,
}

impl RegluingResult {
    pub fn periods(&self) -> Vec<u64> {
        self.components.iter().map(|c| c.period).collect()
    }

    /// Ray segments per fundamental loop of each new torus.
    pub fn knot_windings(&self) -> Vec<u64> {
        self.components.iter().map(|c| c.length).collect()
    }

    /// Periods of every torus of the next level, sorted.
    pub fn all_periods(&self) -> Vec<u64> {
        let mut v: Vec<u64> = self.periods();
        v.extend(self.untouched.iter().map(|c| c.period));
        v.sort_unstable();
        v
    }
}

/// Reglues a single frame.
pub fn reglue(frame: &ModelFrame, host_periods: &dyn Fn(&str) -> Option<u64>) -> Result<RegluingResult, RegluingError> {
    validate_frame_params(frame, host_periods)?;
    let level = Level {
        components: frame
            .hosts()
            .into_iter()
            .map(|h| TorusComponent { id: h.to_string(), period: host_periods(h).unwrap(), level: 0 })
            .collect(),
        frames: vec![frame.clone()],
        curves: BTreeMap::new(),
    };
    reglue_level(&level)
}

/// Reglues a level along all of its frames at once.
pub fn reglue_level(level: &Level) -> Result<RegluingResult, RegluingError> {
    let period = |h: &str| level.period_of(h);
    for f in &level.frames {
        validate_frame_params(f, period)?;
    }
    validate_host_families(level)?;
    let frames: Vec<&ModelFrame> = level.frames.iter().collect();
    let cx = SectorComplex::build(&frames, &period)?;
    let n = cx.rays.len();

    let mut done = vec![false; n];
    let mut sector_component = vec![usize::MAX; n];
    let mut components = Vec::new();
    for s0 in 0..n {
        if done[s0] {
            continue;
        }
        let cycle = cx.annulus(s0);
        let pos: HashMap<usize, usize> = cycle.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        let len = cycle.len() as u64;
        let mut p = 1u64;
        let mut x = cx.phi[s0];
        while !pos.contains_key(&x) {
            x = cx.phi[x];
            p += 1;
            if p > n as u64 {
                return Err(RegluingError::InternalInconsistency("phi orbit of annuli does not close".into()));
            }
        }
        let r = pos[&x] as u64;
        let mut y = s0;
        for _ in 0..p {
            for s in cx.annulus(y) {
                done[s] = true;
                sector_component[s] = components.len();
            }
            y = cx.phi[y];
        }
        // The deck map must rotate the annulus rigidly.
        for (i, &s) in cycle.iter().enumerate() {
            let mut z = s;
            for _ in 0..p {
                z = cx.phi[z];
            }
            if z != cycle[(i + r as usize) % cycle.len()] {
                return Err(RegluingError::InternalInconsistency("deck map does not rotate annulus".into()));
            }
        }

        let g = r.gcd(&len);
        let w = len / g;
        let a = ((r / g) % w) as i64;
        let mut knots = Vec::new();
        for rho in 0..g {
            let seam = cx.next[cycle[rho as usize]];
            let label = &frames[cx.rays[seam].frame].id;
            for t in (rho..len).step_by(g as usize) {
                let other = cx.next[cycle[t as usize]];
                if frames[cx.rays[other].frame].id != *label {
                    return Err(RegluingError::InternalInconsistency(format!("knot {rho} mixes frames")));
                }
            }
            knots.push(Knot { frame: label.clone(), eq_coeff: a, winding: w, rank: rho as i64 });
        }
        let hosts = cycle.iter().map(|&s| cx.hosts[cx.rays[s].host].clone()).collect();
        components.push(NewComponent { period: p, length: len, shift: r, knots, hosts, boundary: cycle });
    }

    let total: u64 = components.iter().map(|c| c.period * c.length).sum();
    if total != n as u64 {
        return Err(RegluingError::InternalInconsistency(format!(
            "sector conservation: {total} sectors placed, {n} exist"
        )));
    }
    let families: usize = frames.iter().map(|f| f.families.len()).sum();
    let knot_orbits: usize = components.iter().map(|c| c.knots.len()).sum();
    if families != knot_orbits {
        return Err(RegluingError::InternalInconsistency(format!(
            "{knot_orbits} knots for {families} ray families"
        )));
    }

    let untouched = level
        .components
        .iter()
        .filter(|c| !cx.hosts.contains(&c.id))
        .cloned()
        .collect();
    Ok(RegluingResult { components, untouched, complex: cx, sector_component })
}

fn multiset<T: Ord>(it: impl IntoIterator<Item = T>) -> Vec<T> {
    let mut v: Vec<T> = it.into_iter().collect();
    v.sort();
    v
}

/// Where each torus of level `i - 1` comes from.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Origin {
    /// Index into [`RegluingResult::components`].
    Reglued(usize),
    /// Id of the unchanged level-`i` component.
    Untouched(Id),
}

/// Result of checking condition 1 at level `i`.
#[derive(Clone, Debug)]
pub struct LevelMatch {
    pub result: RegluingResult,
    /// Declared level-`(i-1)` component id to its origin.
    pub origin: BTreeMap<Id, Origin>,
}

/// Knot slope modulo equator twists.
fn slope(a: i64, w: u64) -> i64 {
    if w == 0 {
        0
    } else {
        a.rem_euclid(w as i64)
    }
}

fn direct_signature(curves: &[CurveClass], i: usize) -> Vec<(Id, u64, i64)> {
    multiset(curves.iter().filter(|c| c.level_tag == i).map(|c| (c.label.clone(), c.winding, slope(c.eq_coeff, c.winding))))
}

fn deeper_signature(curves: &[CurveClass], i: usize) -> Vec<(Id, usize, u64)> {
    multiset(curves.iter().filter(|c| c.level_tag > i).map(|c| (c.label.clone(), c.level_tag, c.winding)))
}

/// Kuhn's augmenting-path matching; `ok(l, r)` tells whether left `l` may
/// be assigned to right `r`. Returns `match_of_right`.
fn bipartite(nl: usize, nr: usize, ok: &dyn Fn(usize, usize) -> bool) -> Option<Vec<usize>> {
    fn augment(l: usize, nr: usize, ok: &dyn Fn(usize, usize) -> bool, seen: &mut [bool], mr: &mut [Option<usize>]) -> bool {
        for r in 0..nr {
            if !seen[r] && ok(l, r) {
                seen[r] = true;
                if mr[r].is_none() || augment(mr[r].unwrap(), nr, ok, seen, mr) {
                    mr[r] = Some(l);
                    return true;
                }
            }
        }
        false
    }
    if nl != nr {
        return None;
    }
    let mut mr = vec![None; nr];
    for l in 0..nl {
        let mut seen = vec![false; nr];
        if !augment(l, nr, ok, &mut seen, &mut mr) {
            return None;
        }
    }
    Some(mr.into_iter().map(|x| x.unwrap()).collect())
}

/// Condition 1 at level `i >= 1`: regluing level `i` reproduces the tori of
/// level `i - 1`, and the knots declared there are the ones regluing projects.
pub fn check_level_match(scheme: &DecomposedScheme, i: usize) -> Result<LevelMatch, RegluingError> {
    if i == 0 || i >= scheme.levels.len() {
        return Err(RegluingError::NoSuchLevel(i));
    }
    let upper = &scheme.levels[i];
    let lower = &scheme.levels[i - 1];
    let result = reglue_level(upper)?;

    let declared = multiset(lower.components.iter().map(|c| c.period));
    let computed = result.all_periods();
    if declared != computed {
        return Err(RegluingError::LevelMismatch {
            level: i,
            detail: format!("computed periods {computed:?}, declared {declared:?}"),
        });
    }

    let mut origins: Vec<Origin> = (0..result.components.len()).map(Origin::Reglued).collect();
    origins.extend(result.untouched.iter().map(|c| Origin::Untouched(c.id.clone())));
    let compatible = |l: usize, r: usize| -> bool {
        let d = &lower.components[r];
        let curves = lower.curves_on(&d.id);
        match &origins[l] {
            Origin::Reglued(ci) => {
                let c = &result.components[*ci];
                c.period == d.period
                    && direct_signature(curves, i) == multiset(c.knots.iter().map(|k| (k.frame.clone(), k.winding, slope(k.eq_coeff, k.winding))))
            }
            Origin::Untouched(id) => {
                let u = upper.component(id).unwrap();
                u.period == d.period
                    && direct_signature(curves, i).is_empty()
                    && deeper_signature(curves, i) == deeper_signature(upper.curves_on(id), i)
            }
        }
    };
    let matching = match bipartite(origins.len(), lower.components.len(), &compatible) {
        Some(m) => m,
        None => return Err(blame_unmatched(scheme, i, &result)),
    };
    let origin = matching
        .iter()
        .enumerate()
        .map(|(r, &l)| (lower.components[r].id.clone(), origins[l].clone()))
        .collect();
    Ok(LevelMatch { result, origin })
}

fn blame_unmatched(scheme: &DecomposedScheme, i: usize, result: &RegluingResult) -> RegluingError {
    let lower = &scheme.levels[i - 1];
    for f in &scheme.levels[i].frames {
        let declared = multiset(
            lower
                .curves
                .values()
                .flat_map(|s| s.curves.iter())
                .filter(|c| c.level_tag == i && c.label == f.id)
                .map(|c| c.winding),
        );
        let computed = multiset(
            result.components.iter().flat_map(|c| c.knots.iter()).filter(|k| k.frame == f.id).map(|k| k.winding),
        );
        if declared != computed {
            return RegluingError::PushforwardMismatch {
                level: i,
                frame: f.id.clone(),
                detail: format!("declared knot windings {declared:?}, regluing gives {computed:?}"),
            };
        }
    }
    let frame = scheme.levels[i].frames.first().map(|f| f.id.clone()).unwrap_or_default();
    RegluingError::PushforwardMismatch {
        level: i,
        frame,
        detail: "no assignment of declared tori to reglued tori matches knots and periods".into(),
    }
}

/// Frame knots declared on the hosts of level `i` must be the projections of
/// the ray families: one per family, winding `k`, slope `n` modulo `k`, and
/// in the cyclic order of the family ranks.
pub fn check_frame_knots(level: &Level, i: usize) -> Result<(), RegluingError> {
    let mut per_host: BTreeMap<&str, Vec<(u32, &ModelFrame, usize)>> = BTreeMap::new();
    for f in &level.frames {
        for (ai, fam) in f.families.iter().enumerate() {
            per_host.entry(&fam.host).or_default().push((fam.rank, f, ai));
        }
    }
    for (host, mut fams) in per_host {
        fams.sort_by_key(|x| x.0);
        let mut knots: Vec<&CurveClass> = level.curves_on(host).iter().filter(|c| c.level_tag == i).collect();
        knots.sort_by_key(|c| c.offset_rank);
        for &(_, f, ai) in &fams {
            let fam = &f.families[ai];
            let mine: Vec<&&CurveClass> = knots.iter().filter(|c| c.label == f.id).collect();
            let expected = fams.iter().filter(|x| x.1.id == f.id).count();
            let mismatch = |detail: String| RegluingError::PushforwardMismatch { level: i, frame: f.id.clone(), detail };
            if mine.len() != expected {
                return Err(mismatch(format!("{} knots on {host}, expected {expected}", mine.len())));
            }
            let ns = f.surface_n(ai) as i64;
            for c in mine {
                if c.winding != fam.k || (c.eq_coeff - ns).rem_euclid(fam.k as i64) != 0 {
                    return Err(mismatch(format!(
                        "knot ({}, {}) on {host} is not a projection of a (k={}, n={ns}) family",
                        c.eq_coeff, c.winding, fam.k
                    )));
                }
            }
        }
        if knots.len() != fams.len() {
            return Err(RegluingError::PushforwardMismatch {
                level: i,
                frame: fams[0].1.id.clone(),
                detail: format!("{host} carries {} frame knots for {} ray families", knots.len(), fams.len()),
            });
        }
        // frames of one level are disjoint, so their knots are parallel
        if let Some(bad) = knots.iter().find(|c| c.direction() != knots[0].direction()) {
            return Err(RegluingError::PushforwardMismatch {
                level: i,
                frame: bad.label.clone(),
                detail: format!("frame knots on {host} cross each other"),
            });
        }
        let declared: Vec<&str> = knots.iter().map(|c| c.label.as_str()).collect();
        let expected: Vec<&str> = fams.iter().map(|x| x.1.id.as_str()).collect();
        if !same_cycle(&declared, &expected) {
            return Err(RegluingError::PushforwardMismatch {
                level: i,
                frame: fams[0].1.id.clone(),
                detail: format!("knot order {declared:?} on {host} differs from family order {expected:?}"),
            });
        }
    }
    Ok(())
}

/// Equal up to rotation.
pub fn same_cycle<T: PartialEq>(a: &[T], b: &[T]) -> bool {
    a.len() == b.len() && (a.is_empty() || (0..a.len()).any(|s| (0..a.len()).all(|t| a[(s + t) % a.len()] == b[t])))
}

/// Equal up to rotation and reflection.
pub fn same_dihedral<T: PartialEq + Clone>(a: &[T], b: &[T]) -> bool {
    let rev: Vec<T> = b.iter().rev().cloned().collect();
    same_cycle(a, b) || same_cycle(a, &rev)
}

/// Checks that the curves declared on level `i - 1` are the pushforwards
/// regluing of level `i` predicts.
pub fn pushforward_consistency(scheme: &DecomposedScheme, i: usize) -> Result<LevelMatch, RegluingError> {
    check_frame_knots(&scheme.levels[i], i)?;
    let lm = check_level_match(scheme, i)?;
    let lower = &scheme.levels[i - 1];
    for (id, origin) in &lm.origin {
        let Origin::Reglued(ci) = origin else { continue };
        let comp = &lm.result.components[*ci];
        let mut seams: Vec<&CurveClass> = lower.curves_on(id).iter().filter(|c| c.level_tag == i).collect();
        seams.sort_by_key(|c| c.offset_rank);
        let Some(first) = seams.first() else { continue };
        if let Some(bad) = seams.iter().find(|c| c.direction() != first.direction()) {
            return Err(RegluingError::PushforwardMismatch {
                level: i,
                frame: bad.label.clone(),
                detail: format!("projected knots on {id} are not parallel"),
            });
        }
        let declared: Vec<&str> = seams.iter().map(|c| c.label.as_str()).collect();
        let computed: Vec<&str> = comp.knots.iter().map(|k| k.frame.as_str()).collect();
        if !same_dihedral(&declared, &computed) {
            return Err(RegluingError::PushforwardMismatch {
                level: i,
                frame: first.label.clone(),
                detail: format!("knot order {declared:?} on {id}, regluing gives {computed:?}"),
            });
        }
    }

    // Curves coming from higher levels keep their eta under regluing.
    let upper = &scheme.levels[i];
    let eta_by_label = |level: &Level| {
        let mut out: BTreeMap<Id, Vec<u64>> = BTreeMap::new();
        for c in &level.components {
            for cv in level.curves_on(&c.id).iter().filter(|cv| cv.level_tag > i) {
                out.entry(cv.label.clone()).or_default().push(cv.winding * c.period);
            }
        }
        out.values_mut().for_each(|v| v.sort_unstable());
        out
    };
    let (above, below) = (eta_by_label(upper), eta_by_label(lower));
    let labels: BTreeSet<&Id> = above.keys().chain(below.keys()).collect();
    for label in labels {
        if above.get(label) != below.get(label) {
            return Err(RegluingError::PushforwardMismatch {
                level: i,
                frame: label.clone(),
                detail: format!("eta values {:?} above, {:?} below", above.get(label), below.get(label)),
            });
        }
    }
    Ok(lm)
}
