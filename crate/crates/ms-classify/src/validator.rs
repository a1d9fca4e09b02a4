//! Full validation of decomposed schemes and realization certificates.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arrangement::{check_level_conditions, ArrangementError};
use crate::core_model::{validate_frame_params, validate_host_families, DecomposedScheme, Id, Orientation};
use crate::regluing::{pushforward_consistency, reglue_level, RegluingError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Structure,
    FrameParameters,
    /// Condition 1: regluing reproduces the level below.
    Regluing,
    /// Condition 2: frame knots meet the projected knots of the level above.
    Intersection,
    /// Condition 3: no triangular faces.
    Triangle,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Condition::Structure => "structure",
            Condition::FrameParameters => "frame parameters",
            Condition::Regluing => "condition 1 (regluing)",
            Condition::Intersection => "condition 2 (intersection)",
            Condition::Triangle => "condition 3 (no triangles)",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub level: usize,
    pub frame: Option<Id>,
    pub condition: Condition,
    pub kind: String,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub failures: Vec<Failure>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn conditions(&self) -> Vec<Condition> {
        let mut v: Vec<Condition> = self.failures.iter().map(|f| f.condition).collect();
        v.dedup();
        v
    }

    fn push(&mut self, level: usize, frame: Option<Id>, condition: Condition, kind: &str, message: String) {
        self.failures.push(Failure { level, frame, condition, kind: kind.to_string(), message });
    }
}

fn regluing_failure(report: &mut ValidationReport, level: usize, e: RegluingError) {
    let (frame, condition, kind) = match &e {
        RegluingError::Frame(fe) => (frame_of(fe), Condition::FrameParameters, "FrameError"),
        RegluingError::LevelMismatch { .. } => (None, Condition::Regluing, "LevelMismatch"),
        RegluingError::PushforwardMismatch { frame, .. } => (Some(frame.clone()), Condition::Regluing, "PushforwardMismatch"),
        RegluingError::InternalInconsistency(_) => (None, Condition::Regluing, "InternalInconsistency"),
        RegluingError::NoSuchLevel(_) => (None, Condition::Structure, "NoSuchLevel"),
    };
    report.push(level, frame, condition, kind, e.to_string());
}

fn frame_of(e: &crate::core_model::FrameError) -> Option<Id> {
    use crate::core_model::FrameError::*;
    match e {
        CoprimalityViolation { frame, .. }
        | ParityViolation { frame, .. }
        | TauOutOfRange { frame, .. }
        | PeriodMismatch { frame, .. }
        | UnknownHost { frame, .. }
        | Shape { frame, .. } => Some(frame.clone()),
        RotationMismatch { .. } => None,
    }
}

/// Runs every check of an abstract decomposed scheme and lists all failures.
pub fn validate_decomposed(scheme: &DecomposedScheme) -> ValidationReport {
    let mut report = ValidationReport::default();
    if let Err(e) = scheme.check_structure() {
        report.push(0, None, Condition::Structure, "ModelError", e.to_string());
        return report;
    }
    for i in (1..scheme.levels.len()).rev() {
        let level = &scheme.levels[i];
        let mut frames_ok = true;
        for f in &level.frames {
            if let Err(e) = validate_frame_params(f, |h| level.period_of(h)) {
                frames_ok = false;
                report.push(i, Some(f.id.clone()), Condition::FrameParameters, "FrameError", e.to_string());
            }
        }
        if frames_ok {
            if let Err(e) = validate_host_families(level) {
                frames_ok = false;
                report.push(i, None, Condition::FrameParameters, "FrameError", e.to_string());
            }
        }
        if frames_ok {
            if let Err(e) = pushforward_consistency(scheme, i) {
                regluing_failure(&mut report, i, e);
            }
        }
        match check_level_conditions(scheme, i) {
            Ok(()) => {}
            Err(e @ ArrangementError::IntersectionMissing { .. }) => {
                let ArrangementError::IntersectionMissing { frame, .. } = &e else { unreachable!() };
                report.push(i, Some(frame.clone()), Condition::Intersection, "IntersectionMissing", e.to_string());
            }
            Err(e @ ArrangementError::TriangleFound { .. }) => {
                report.push(i, None, Condition::Triangle, "TriangleFound", e.to_string());
            }
            Err(e) => report.push(i, None, Condition::Structure, "ArrangementError", e.to_string()),
        }
    }
    report
}

/// `(lambda0, lambda1, lambda2)`: sinks, saddles and sources.
pub fn lambdas(scheme: &DecomposedScheme) -> (u64, u64, u64) {
    let l0 = scheme.levels.first().map(|l| l.components.iter().map(|c| c.period).sum()).unwrap_or(0);
    let l1 = scheme
        .levels
        .iter()
        .flat_map(|l| l.frames.iter().map(move |f| f.saddle_count(|h| l.period_of(h).unwrap_or(0))))
        .sum();
    let l2 = scheme.levels.last().map(|l| l.components.iter().map(|c| c.period).sum()).unwrap_or(0);
    (l0, l1, l2)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodicOrbit {
    pub id: Id,
    pub period: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu: Option<Orientation>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrbitTable {
    pub sinks: Vec<PeriodicOrbit>,
    pub saddles: Vec<PeriodicOrbit>,
    pub sources: Vec<PeriodicOrbit>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RealizationCertificate {
    pub lambda0: u64,
    pub lambda1: u64,
    pub lambda2: u64,
    pub euler_characteristic: i64,
    pub genus: u64,
    pub orbit_table: OrbitTable,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum RealizationError {
    #[error("lambda0 - lambda1 + lambda2 = {0} is odd")]
    OddCharacteristic(i64),
    #[error("lambda0 - lambda1 + lambda2 = {0} exceeds 2")]
    CharacteristicTooLarge(i64),
    #[error("annuli of frame {frame} on the sink tori do not thicken its projection: {detail}")]
    TubularMismatch { frame: Id, detail: String },
    #[error(transparent)]
    Regluing(#[from] RegluingError),
}

/// Checks the realizability conditions and reports the surface and the
/// periodic data of a diffeomorphism realizing the scheme.
pub fn check_realizable(scheme: &DecomposedScheme) -> Result<RealizationCertificate, RealizationError> {
    let (l0, l1, l2) = lambdas(scheme);
    let chi = l0 as i64 - l1 as i64 + l2 as i64;
    if chi.rem_euclid(2) != 0 {
        return Err(RealizationError::OddCharacteristic(chi));
    }
    if chi > 2 {
        return Err(RealizationError::CharacteristicTooLarge(chi));
    }

    // Every frame's annuli on the sink tori carry the eta values its knots
    // receive when its level is reglued.
    for i in 1..scheme.levels.len() {
        let r = reglue_level(&scheme.levels[i])?;
        let mut expected: BTreeMap<&str, Vec<u64>> = BTreeMap::new();
        for c in &r.components {
            for k in &c.knots {
                expected.entry(&k.frame).or_default().push(k.winding * c.period);
            }
        }
        for f in &scheme.levels[i].frames {
            let mut want = expected.remove(f.id.as_str()).unwrap_or_default();
            want.sort_unstable();
            let sinks = &scheme.levels[0];
            let mut have: Vec<u64> = sinks
                .components
                .iter()
                .flat_map(|c| sinks.curves_on(&c.id).iter().filter(|cv| cv.label == f.id).map(move |cv| cv.winding * c.period))
                .collect();
            have.sort_unstable();
            if have != want {
                return Err(RealizationError::TubularMismatch {
                    frame: f.id.clone(),
                    detail: format!("eta values {have:?} on the sink tori, {want:?} expected"),
                });
            }
        }
    }

    let orbit = |id: &str, period, nu| PeriodicOrbit { id: id.to_string(), period, nu };
    let sinks = scheme.levels.first().map(|l| l.components.iter().map(|c| orbit(&c.id, c.period, None)).collect()).unwrap_or_default();
    let sources = scheme.levels.last().map(|l| l.components.iter().map(|c| orbit(&c.id, c.period, None)).collect()).unwrap_or_default();
    let saddles = scheme
        .levels
        .iter()
        .flat_map(|l| l.frames.iter().map(move |f| orbit(&f.id, f.saddle_count(|h| l.period_of(h).unwrap_or(0)), Some(f.nu()))))
        .collect();
    Ok(RealizationCertificate {
        lambda0: l0,
        lambda1: l1,
        lambda2: l2,
        euler_characteristic: chi,
        genus: ((2 - chi) / 2) as u64,
        orbit_table: OrbitTable { sinks, saddles, sources },
    })
}
