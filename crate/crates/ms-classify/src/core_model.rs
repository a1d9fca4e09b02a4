//! Base types of schemes and decomposed schemes.
//!
//! A decomposed scheme is a list of levels. Level 0 holds the orbit-space tori
//! of the sink basins and carries no frames; level `i >= 1` holds tori together
//! with the frames of the saddle orbits whose stable separatrices live there.
//! Regluing level `i` along its frames must reproduce level `i - 1`.
//!
//! Curve classes are written in the (equator, meridian) basis of a torus, so a
//! class `(a, w)` has eta-value `w * period`.

use std::collections::{BTreeMap, BTreeSet};

use num_integer::Integer;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Id = String;

/// One torus of an orbit space.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TorusComponent {
    pub id: Id,
    pub period: u64,
    /// Filled from the position of the enclosing level.
    #[serde(skip)]
    pub level: usize,
}

/// An essential simple closed curve on a torus together with its position
/// among the curves parallel to it.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CurveClass {
    #[serde(rename = "eq")]
    pub eq_coeff: i64,
    pub winding: u64,
    #[serde(rename = "rank")]
    pub offset_rank: i64,
    /// Id of the frame this curve comes from.
    pub label: Id,
    /// Level of that frame.
    #[serde(rename = "level")]
    pub level_tag: usize,
}

impl CurveClass {
    pub fn new(eq_coeff: i64, winding: u64, offset_rank: i64, label: &str, level_tag: usize) -> Self {
        CurveClass { eq_coeff, winding, offset_rank, label: label.to_string(), level_tag }
    }

    /// Primitive direction `(a, w)` with the sign fixed so that `w > 0`, or
    /// `(1, 0)` for an equator.
    pub fn direction(&self) -> (i64, i64) {
        if self.winding == 0 {
            (1, 0)
        } else {
            (self.eq_coeff, self.winding as i64)
        }
    }

    pub fn is_simple(&self) -> bool {
        if self.winding == 0 {
            self.eq_coeff.abs() == 1
        } else {
            self.eq_coeff.gcd(&(self.winding as i64)) == 1
        }
    }
}

/// The curves drawn on one component.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CurveSystem {
    pub curves: Vec<CurveClass>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FrameKind {
    #[serde(rename = "type1")]
    Type1,
    #[serde(rename = "type2")]
    Type2,
    #[serde(rename = "type3")]
    Type3,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Orientation {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

/// One invariant family of rays `gamma^0, ..., gamma^{mk-1}` on a host torus.
///
/// `rank` is the angular rank of the base ray among all ray families on the
/// same host: families are interleaved on every sheet in increasing rank.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RayFamily {
    pub host: Id,
    pub k: u64,
    pub n: u64,
    #[serde(default)]
    pub rank: u32,
}

/// The separatrix frame of one saddle orbit.
///
/// Type1 has one family, Type2 two families on the same host and Type3 one
/// family on each of two hosts. The gluing identifies `gamma_1^j` with
/// `gamma_2^{j+tau}` (Type1: `gamma^j` with `gamma^{j+tau}`).
///
/// For Type3 the rotation numerator of the second family is read in the
/// mirrored chart of its host, the one in which the identified rays are glued
/// side `+` to side `+`. [`ModelFrame::surface_n`] converts it to the common
/// orientation used everywhere else.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelFrame {
    pub id: Id,
    pub kind: FrameKind,
    pub families: Vec<RayFamily>,
    pub tau: u64,
}

impl ModelFrame {
    pub fn nu(&self) -> Orientation {
        match self.kind {
            FrameKind::Type1 => Orientation::Minus,
            _ => Orientation::Plus,
        }
    }

    /// Rotation numerator of family `f` in the orientation shared by all
    /// families of its host.
    pub fn surface_n(&self, f: usize) -> u64 {
        let fam = &self.families[f];
        if self.kind == FrameKind::Type3 && f == 1 && fam.k > 1 {
            fam.k - fam.n
        } else {
            fam.n
        }
    }

    pub fn hosts(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for fam in &self.families {
            if !out.contains(&fam.host.as_str()) {
                out.push(&fam.host);
            }
        }
        out
    }

    /// Number of saddle points in the orbit modelled by this frame.
    pub fn saddle_count(&self, host_period: impl Fn(&str) -> u64) -> u64 {
        let f = &self.families[0];
        let mk = host_period(&f.host) * f.k;
        match self.kind {
            FrameKind::Type1 => mk / 2,
            _ => mk,
        }
    }
}

/// One level of a decomposed scheme.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Level {
    pub components: Vec<TorusComponent>,
    #[serde(default)]
    pub frames: Vec<ModelFrame>,
    /// Curve systems keyed by component id.
    #[serde(default)]
    pub curves: BTreeMap<Id, CurveSystem>,
}

impl Level {
    pub fn component(&self, id: &str) -> Option<&TorusComponent> {
        self.components.iter().find(|c| c.id == id)
    }

    pub fn period_of(&self, id: &str) -> Option<u64> {
        self.component(id).map(|c| c.period)
    }

    pub fn curves_on(&self, id: &str) -> &[CurveClass] {
        self.curves.get(id).map(|s| s.curves.as_slice()).unwrap_or(&[])
    }

    pub fn frame(&self, id: &str) -> Option<&ModelFrame> {
        self.frames.iter().find(|f| f.id == id)
    }
}

/// Levels `0..=n`; `levels[0]` are the sink tori.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecomposedScheme {
    pub levels: Vec<Level>,
}

impl DecomposedScheme {
    pub fn top(&self) -> usize {
        self.levels.len().saturating_sub(1)
    }

    /// `(level, frame)` for a frame id.
    pub fn find_frame(&self, id: &str) -> Option<(usize, &ModelFrame)> {
        self.levels
            .iter()
            .enumerate()
            .find_map(|(i, l)| l.frame(id).map(|f| (i, f)))
    }

    /// Sets the `level` field of every component from its position.
    pub fn stamp_levels(&mut self) {
        for (i, l) in self.levels.iter_mut().enumerate() {
            for c in &mut l.components {
                c.level = i;
            }
        }
    }

    /// Checks ids, frame shapes and curve well-formedness; does not run
    /// regluing or arrangement checks.
    pub fn check_structure(&self) -> Result<(), ModelError> {
        if self.levels.is_empty() {
            return Err(ModelError::Empty);
        }
        if !self.levels[0].frames.is_empty() {
            return Err(ModelError::FramesAtLevelZero);
        }
        let mut frame_ids = BTreeSet::new();
        for (i, level) in self.levels.iter().enumerate() {
            let mut ids = BTreeSet::new();
            for c in &level.components {
                if c.period == 0 {
                    return Err(ModelError::ZeroPeriod(c.id.clone()));
                }
                if !ids.insert(c.id.as_str()) {
                    return Err(ModelError::DuplicateComponent { level: i, id: c.id.clone() });
                }
            }
            for f in &level.frames {
                if !frame_ids.insert(f.id.as_str()) {
                    return Err(ModelError::DuplicateFrame(f.id.clone()));
                }
            }
            for key in level.curves.keys() {
                if !ids.contains(key.as_str()) {
                    return Err(ModelError::UnknownComponent { level: i, id: key.clone() });
                }
            }
        }
        for (i, level) in self.levels.iter().enumerate() {
            for (cid, sys) in &level.curves {
                let mut seen = BTreeSet::new();
                for c in &sys.curves {
                    if !c.is_simple() {
                        return Err(ModelError::NotSimple { component: cid.clone(), curve: c.clone() });
                    }
                    match self.find_frame(&c.label) {
                        Some((lvl, _)) if lvl == c.level_tag && lvl >= i => {}
                        _ => {
                            return Err(ModelError::BadLabel { component: cid.clone(), label: c.label.clone() })
                        }
                    }
                    if !seen.insert((c.direction(), c.offset_rank)) {
                        return Err(ModelError::Coincident { component: cid.clone(), label: c.label.clone() });
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("scheme has no levels")]
    Empty,
    #[error("level 0 must not carry frames")]
    FramesAtLevelZero,
    #[error("component {0} has period 0")]
    ZeroPeriod(Id),
    #[error("duplicate component {id} at level {level}")]
    DuplicateComponent { level: usize, id: Id },
    #[error("duplicate frame id {0}")]
    DuplicateFrame(Id),
    #[error("curves given for unknown component {id} at level {level}")]
    UnknownComponent { level: usize, id: Id },
    #[error("curve {curve:?} on {component} is not a simple closed curve")]
    NotSimple { component: Id, curve: CurveClass },
    #[error("curve label {label} on {component} does not name a frame at its level tag")]
    BadLabel { component: Id, label: Id },
    #[error("two curves labelled {label} on {component} share class and rank")]
    Coincident { component: Id, label: Id },
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum FrameError {
    #[error("frame {frame}: n={n} is not coprime to mk={mk} (or out of range for k={k})")]
    CoprimalityViolation { frame: Id, n: u64, k: u64, mk: u64 },
    #[error("frame {frame}: Type1 needs mk even, got {mk}")]
    ParityViolation { frame: Id, mk: u64 },
    #[error("frame {frame}: tau={tau} out of range (expected {expected})")]
    TauOutOfRange { frame: Id, tau: u64, expected: String },
    #[error("frame {frame}: m1*k1={left} differs from m2*k2={right}")]
    PeriodMismatch { frame: Id, left: u64, right: u64 },
    #[error("frame {frame}: host {host} not found")]
    UnknownHost { frame: Id, host: Id },
    #[error("frame {frame}: {detail}")]
    Shape { frame: Id, detail: String },
    #[error("component {host}: families disagree on (k, n): {detail}")]
    RotationMismatch { host: Id, detail: String },
}

/// Checks the invariants of a single frame against its host periods.
pub fn validate_frame_params(frame: &ModelFrame, host_period: impl Fn(&str) -> Option<u64>) -> Result<(), FrameError> {
    let id = frame.id.clone();
    let shape = |detail: &str| FrameError::Shape { frame: id.clone(), detail: detail.to_string() };
    let expected_families = match frame.kind {
        FrameKind::Type1 => 1,
        _ => 2,
    };
    if frame.families.len() != expected_families {
        return Err(shape(&format!("expected {expected_families} ray families, got {}", frame.families.len())));
    }
    let mut mks = Vec::new();
    for fam in &frame.families {
        let m = host_period(&fam.host).ok_or_else(|| FrameError::UnknownHost { frame: id.clone(), host: fam.host.clone() })?;
        if fam.k == 0 {
            return Err(shape("k must be positive"));
        }
        let mk = m * fam.k;
        let ok = if fam.k == 1 { fam.n == 0 } else { fam.n >= 1 && fam.n < fam.k && fam.n.gcd(&mk) == 1 };
        if !ok {
            return Err(FrameError::CoprimalityViolation { frame: id.clone(), n: fam.n, k: fam.k, mk });
        }
        mks.push(mk);
    }
    match frame.kind {
        FrameKind::Type1 => {
            let mk = mks[0];
            if mk % 2 == 1 {
                return Err(FrameError::ParityViolation { frame: id, mk });
            }
            if frame.tau != mk / 2 {
                return Err(FrameError::TauOutOfRange { frame: id, tau: frame.tau, expected: format!("{}", mk / 2) });
            }
        }
        FrameKind::Type2 => {
            let (a, b) = (&frame.families[0], &frame.families[1]);
            if a.host != b.host || a.k != b.k || a.n != b.n {
                return Err(shape("Type2 families must share host, k and n"));
            }
            if a.rank == b.rank {
                return Err(shape("Type2 families need distinct ranks"));
            }
            if frame.tau >= mks[0] {
                return Err(FrameError::TauOutOfRange { frame: id, tau: frame.tau, expected: format!("0..{}", mks[0]) });
            }
        }
        FrameKind::Type3 => {
            if frame.families[0].host == frame.families[1].host {
                return Err(shape("Type3 families must lie on different hosts"));
            }
            if mks[0] != mks[1] {
                return Err(FrameError::PeriodMismatch { frame: id, left: mks[0], right: mks[1] });
            }
            if frame.tau >= mks[0] {
                return Err(FrameError::TauOutOfRange { frame: id, tau: frame.tau, expected: format!("0..{}", mks[0]) });
            }
        }
    }
    Ok(())
}

/// All families hosted by one component must share `k` and the rotation
/// numerator (there is one model contraction per torus), and their ranks must
/// be distinct.
pub fn validate_host_families(level: &Level) -> Result<(), FrameError> {
    let mut per_host: BTreeMap<&str, Vec<(u64, u64, u32, &str)>> = BTreeMap::new();
    for frame in &level.frames {
        for (i, fam) in frame.families.iter().enumerate() {
            per_host.entry(&fam.host).or_default().push((fam.k, frame.surface_n(i), fam.rank, &frame.id));
        }
    }
    for (host, fams) in per_host {
        let (k0, n0, _, f0) = fams[0];
        for &(k, n, _, f) in &fams[1..] {
            if (k, n) != (k0, n0) {
                return Err(FrameError::RotationMismatch {
                    host: host.to_string(),
                    detail: format!("{f0} has (k={k0}, n={n0}), {f} has (k={k}, n={n})"),
                });
            }
        }
        let ranks: BTreeSet<u32> = fams.iter().map(|f| f.2).collect();
        if ranks.len() != fams.len() {
            return Err(FrameError::RotationMismatch { host: host.to_string(), detail: "repeated family rank".into() });
        }
    }
    Ok(())
}

/// `eta` of a curve on a torus of the given period.
pub fn eta_value(c: &CurveClass, comp: &TorusComponent) -> u64 {
    c.winding * comp.period
}
