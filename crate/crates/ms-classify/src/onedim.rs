//! Morse-Smale maps of the interval, given as continuous piecewise linear maps.
//!
//! Conjugacy is decided on a finite set: the first `N` points of every
//! critical orbit together with the periodic attractors. An order preserving
//! bijection between two finite subsets of the line is unique when it exists,
//! so the decision reduces to comparing two sorted lists and the action of the
//! maps on them.
//!
//! Everything is computed in floating point with the fixed tolerances below.
//! A question that cannot be settled within the budgets gets an inconclusive
//! error instead of a guess.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// `|λ|` must stay at least this far from 0 and from 1.
pub const MULTIPLIER_TOL: f64 = 1e-6;
/// Iterates spent following a single orbit.
pub const ITERATE_BUDGET: usize = 10_000;
/// Points closer than this are the same point.
pub const CONVERGENCE_TOL: f64 = 1e-9;
/// Largest accepted period. Orbits are searched up to twice this, and finding
/// one above it makes the answer inconclusive.
pub const MAX_PERIOD: usize = 16;
const PIECE_BUDGET: usize = 5000;
/// Matching tolerance for fixed points of different iterates.
const MATCH_TOL: f64 = 1e-8;
/// Orbit points of the oracle closer than this are one point. Only rounding
/// may be absorbed here: conjugacy can shrink any positive gap.
const TIE_TOL: f64 = 1e-12;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum OneDimError {
    #[error("invalid map: {0}")]
    InvalidMap(String),
    #[error("periodic point {point} of period {period} has multiplier {multiplier}")]
    MultiplierDegenerate { point: f64, period: usize, multiplier: f64 },
    #[error("iterate {iterate} of turning point c{turning} lands on {target}")]
    CriticalRelation { turning: usize, iterate: usize, target: String },
    #[error("inconclusive: {0}")]
    PeriodBudgetExceeded(String),
    #[error("the orbit of {point} reaches no attractor within {ITERATE_BUDGET} iterates")]
    BasinNotFound { point: f64 },
    #[error("iterate {iterate} of turning point c{turning} is a turning point")]
    SymbolAmbiguous { turning: usize, iterate: usize },
    #[error("inconclusive: {0}")]
    NumericalFailure(String),
}

impl OneDimError {
    /// True when the map may still be Morse-Smale and only a budget ran out.
    pub fn is_inconclusive(&self) -> bool {
        matches!(self, OneDimError::PeriodBudgetExceeded(_) | OneDimError::NumericalFailure(_))
    }
}

/// A continuous map of `[0,1]` that is affine between consecutive breakpoints.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMap", into = "RawMap")]
pub struct PLMap {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMap {
    breakpoints: Vec<(f64, f64)>,
}

impl TryFrom<RawMap> for PLMap {
    type Error = OneDimError;
    fn try_from(raw: RawMap) -> Result<Self, Self::Error> {
        PLMap::new(raw.breakpoints)
    }
}

impl From<PLMap> for RawMap {
    fn from(m: PLMap) -> Self {
        RawMap { breakpoints: m.breakpoints() }
    }
}

#[derive(Clone, Copy, Debug)]
struct Piece {
    a: f64,
    b: f64,
    ya: f64,
    yb: f64,
    slope: f64,
}

enum Fixed {
    None,
    At(f64),
    All,
}

impl Piece {
    fn fixed_point(&self) -> Fixed {
        let (ga, gb) = (self.ya - self.a, self.yb - self.b);
        if ga.abs() < 1e-13 && gb.abs() < 1e-13 {
            return Fixed::All;
        }
        if ga.abs() < 1e-13 {
            Fixed::At(self.a)
        } else if gb.abs() < 1e-13 {
            Fixed::At(self.b)
        } else if (ga > 0.0) != (gb > 0.0) {
            Fixed::At(self.a + ga / (ga - gb) * (self.b - self.a))
        } else {
            Fixed::None
        }
    }

    fn preimage(&self, y: f64) -> Option<f64> {
        let (lo, hi) = (self.ya.min(self.yb), self.ya.max(self.yb));
        (lo <= y && y <= hi).then(|| self.a + (y - self.ya) / (self.yb - self.ya) * (self.b - self.a))
    }
}

impl PLMap {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self, OneDimError> {
        let bad = |s: String| Err(OneDimError::InvalidMap(s));
        if points.len() < 2 {
            return bad("at least two breakpoints are needed".into());
        }
        if points[0].0 != 0.0 || points[points.len() - 1].0 != 1.0 {
            return bad("abscissae must run from 0 to 1".into());
        }
        for &(x, y) in &points {
            if !x.is_finite() || !(0.0..=1.0).contains(&y) {
                return bad(format!("value {y} at {x} lies outside [0,1]"));
            }
        }
        for w in points.windows(2) {
            if w[1].0 <= w[0].0 {
                return bad(format!("abscissae must increase strictly, got {} after {}", w[1].0, w[0].0));
            }
            if w[1].1 == w[0].1 {
                return bad(format!("zero slope on [{}, {}]", w[0].0, w[1].0));
            }
        }
        let (xs, ys) = points.into_iter().unzip();
        Ok(PLMap { xs, ys })
    }

    pub fn breakpoints(&self) -> Vec<(f64, f64)> {
        self.xs.iter().copied().zip(self.ys.iter().copied()).collect()
    }

    fn segment(&self, x: f64) -> usize {
        self.xs.partition_point(|&b| b <= x).saturating_sub(1).min(self.xs.len() - 2)
    }

    fn slope(&self, i: usize) -> f64 {
        (self.ys[i + 1] - self.ys[i]) / (self.xs[i + 1] - self.xs[i])
    }

    fn on_segment(&self, i: usize, x: f64) -> f64 {
        self.ys[i] + self.slope(i) * (x - self.xs[i])
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.on_segment(self.segment(x), x).clamp(0.0, 1.0)
    }

    /// One sided slope at `x`, to the right when `side > 0`.
    fn side_slope(&self, x: f64, side: f64) -> f64 {
        let i = if side > 0.0 {
            self.xs.partition_point(|&b| b <= x + 1e-12)
        } else {
            self.xs.partition_point(|&b| b < x - 1e-12)
        };
        self.slope(i.saturating_sub(1).min(self.xs.len() - 2))
    }

    /// The turning points `c_1 < ... < c_d`.
    pub fn turning_points(&self) -> Vec<f64> {
        (1..self.xs.len() - 1)
            .filter(|&i| (self.slope(i - 1) > 0.0) != (self.slope(i) > 0.0))
            .map(|i| self.xs[i])
            .collect()
    }

    /// Whether the lap `I_0` is increasing.
    pub fn increasing_first_lap(&self) -> bool {
        self.slope(0) > 0.0
    }

    /// Index of the lap containing `x`, or `None` on a turning point.
    pub fn lap_of(&self, x: f64) -> Option<usize> {
        let t = self.turning_points();
        if t.iter().any(|c| (x - c).abs() < CONVERGENCE_TOL) {
            return None;
        }
        Some(t.iter().filter(|&&c| c < x).count())
    }

    /// The image of `[a, b]`.
    fn image(&self, a: f64, b: f64) -> (f64, f64) {
        let inner = self.xs.iter().zip(&self.ys).filter(|(x, _)| **x > a && **x < b).map(|(_, y)| *y);
        [self.eval(a), self.eval(b)].into_iter().chain(inner).fold((f64::MAX, f64::MIN), |(lo, hi), y| (lo.min(y), hi.max(y)))
    }

    fn first_pieces(&self) -> Vec<Piece> {
        (0..self.xs.len() - 1)
            .map(|i| Piece { a: self.xs[i], b: self.xs[i + 1], ya: self.ys[i], yb: self.ys[i + 1], slope: self.slope(i) })
            .collect()
    }

    /// Monotone pieces of `f ∘ g` from those of `g`.
    fn compose(&self, pieces: &[Piece]) -> Vec<Piece> {
        let mut out = Vec::with_capacity(pieces.len());
        for p in pieces {
            let (lo, hi) = (p.ya.min(p.yb), p.ya.max(p.yb));
            let mut cuts = vec![(p.a, p.ya), (p.b, p.yb)];
            for &v in self.xs.iter().filter(|&&v| v > lo && v < hi) {
                let x = p.a + (v - p.ya) / (p.yb - p.ya) * (p.b - p.a);
                cuts.push((x.clamp(p.a, p.b), v));
            }
            cuts.sort_by(|u, v| u.0.total_cmp(&v.0));
            for w in cuts.windows(2) {
                if w[1].0 <= w[0].0 {
                    continue;
                }
                let i = self.segment((w[0].1 + w[1].1) / 2.0);
                out.push(Piece {
                    a: w[0].0,
                    b: w[1].0,
                    ya: self.on_segment(i, w[0].1),
                    yb: self.on_segment(i, w[1].1),
                    slope: self.slope(i) * p.slope,
                });
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PeriodicOrbit {
    /// In orbit order, starting from the leftmost point.
    pub points: Vec<f64>,
    pub period: usize,
    pub multiplier: f64,
    pub attracting: bool,
    /// For an attractor, the largest interval around each point on which
    /// `f^{2m}` is increasing and contracting. Empty for repellers.
    pub basins: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MsReport {
    pub turning_points: Vec<f64>,
    pub orbits: Vec<PeriodicOrbit>,
}

impl MsReport {
    pub fn periods(&self) -> Vec<usize> {
        self.orbits.iter().map(|o| o.period).collect()
    }

    pub fn attractors(&self) -> impl Iterator<Item = &PeriodicOrbit> {
        self.orbits.iter().filter(|o| o.attracting)
    }

    fn periodic_near(&self, x: f64) -> Option<(usize, usize)> {
        self.orbits.iter().enumerate().find_map(|(o, orbit)| {
            orbit.points.iter().position(|q| (q - x).abs() < CONVERGENCE_TOL).map(|j| (o, j))
        })
    }

    fn basin_of(&self, x: f64) -> Option<(usize, usize)> {
        self.orbits.iter().enumerate().find_map(|(o, orbit)| {
            orbit.basins.iter().position(|&(lo, hi)| lo <= x && x <= hi).map(|j| (o, j))
        })
    }
}

struct RawOrbit {
    points: Vec<f64>,
    period: usize,
    slopes: Vec<f64>,
}

fn find_point(orbits: &[RawOrbit], x: f64) -> Option<usize> {
    orbits.iter().position(|o| o.points.iter().any(|q| (q - x).abs() < MATCH_TOL))
}

/// All periodic orbits up to period `2 * MAX_PERIOD`, with the monotone pieces
/// of the iterates used to find them.
fn search_periodic(map: &PLMap) -> Result<(Vec<RawOrbit>, Vec<Vec<Piece>>), OneDimError> {
    let mut powers = vec![map.first_pieces()];
    let mut orbits: Vec<RawOrbit> = Vec::new();
    for p in 1..=2 * MAX_PERIOD {
        if p > 1 {
            let next = map.compose(&powers[p - 2]);
            if next.len() > PIECE_BUDGET {
                return Err(OneDimError::PeriodBudgetExceeded(format!(
                    "iterate {p} has more than {PIECE_BUDGET} monotone pieces"
                )));
            }
            powers.push(next);
        }
        let mut roots = Vec::new();
        for pc in &powers[p - 1] {
            match pc.fixed_point() {
                Fixed::None => {}
                Fixed::At(x) => roots.push((x, pc.slope)),
                Fixed::All => {
                    return Err(OneDimError::MultiplierDegenerate { point: pc.a, period: p, multiplier: pc.slope })
                }
            }
        }
        roots.sort_by(|u, v| u.0.total_cmp(&v.0));
        for &(x, s) in &roots {
            if let Some(o) = find_point(&orbits, x) {
                if orbits[o].period == p {
                    orbits[o].slopes.push(s);
                }
                continue;
            }
            if p > MAX_PERIOD {
                return Err(OneDimError::PeriodBudgetExceeded(format!("periodic orbit of period {p} through {x}")));
            }
            let mut points = vec![x];
            for _ in 1..p {
                let y = map.eval(points[points.len() - 1]);
                let snapped = roots.iter().map(|r| r.0).min_by(|u, v| (u - y).abs().total_cmp(&(v - y).abs()));
                points.push(snapped.filter(|r| (r - y).abs() < 1e-7).unwrap_or(y));
            }
            if (map.eval(points[p - 1]) - x).abs() > 1e-6 {
                return Err(OneDimError::NumericalFailure(format!("orbit of period {p} through {x} does not close")));
            }
            let lead = (0..p).min_by(|&i, &j| points[i].total_cmp(&points[j])).unwrap();
            points.rotate_left(lead);
            orbits.push(RawOrbit { points, period: p, slopes: vec![s] });
        }
    }
    Ok((orbits, powers))
}

/// The largest interval around `q` made of consecutive pieces of `f^{2m}`
/// that are increasing and contracting.
fn contracting_interval(pieces: &[Piece], q: f64) -> (f64, f64) {
    let good = |pc: &Piece| pc.slope > 0.0 && pc.slope < 1.0;
    let holding: Vec<usize> =
        (0..pieces.len()).filter(|&i| pieces[i].a - 1e-12 <= q && q <= pieces[i].b + 1e-12).collect();
    let (Some(&first), Some(&last)) = (holding.first(), holding.last()) else {
        return (q, q);
    };
    let (mut lo, mut hi) = (q, q);
    let mut i = first as isize;
    while i >= 0 && good(&pieces[i as usize]) {
        lo = pieces[i as usize].a;
        i -= 1;
    }
    let mut i = last;
    while i < pieces.len() && good(&pieces[i]) {
        hi = pieces[i].b;
        i += 1;
    }
    (lo, hi)
}

/// Checks the Morse-Smale conditions and returns the periodic orbits.
pub fn validate_ms(map: &PLMap) -> Result<MsReport, OneDimError> {
    let (raw, powers) = search_periodic(map)?;
    let turning = map.turning_points();
    for o in &raw {
        for q in &o.points {
            if let Some(i) = turning.iter().position(|c| (c - q).abs() < CONVERGENCE_TOL) {
                return Err(OneDimError::CriticalRelation {
                    turning: i + 1,
                    iterate: o.period,
                    target: "itself".into(),
                });
            }
        }
    }
    let mut orbits = Vec::new();
    for o in raw {
        let attracting = o.slopes.iter().all(|s| s.abs() < 1.0 - MULTIPLIER_TOL);
        let repelling = o.slopes.iter().all(|s| s.abs() > 1.0 + MULTIPLIER_TOL);
        let flat = o.slopes.iter().any(|s| s.abs() < MULTIPLIER_TOL);
        if flat || !(attracting || repelling) {
            let worst = o.slopes.iter().copied().min_by(|u, v| (u.abs() - 1.0).abs().total_cmp(&(v.abs() - 1.0).abs()));
            return Err(OneDimError::MultiplierDegenerate {
                point: o.points[0],
                period: o.period,
                multiplier: worst.unwrap_or(0.0),
            });
        }
        let basins = if attracting {
            o.points.iter().map(|&q| contracting_interval(&powers[2 * o.period - 1], q)).collect()
        } else {
            Vec::new()
        };
        orbits.push(PeriodicOrbit { multiplier: o.slopes[0], points: o.points, period: o.period, attracting, basins });
    }
    let report = MsReport { turning_points: turning, orbits };
    for (i, &c) in report.turning_points.iter().enumerate() {
        let mut x = c;
        for k in 1..=ITERATE_BUDGET {
            x = map.eval(x);
            let relation = |target: String| OneDimError::CriticalRelation { turning: i + 1, iterate: k, target };
            if let Some(j) = report.turning_points.iter().position(|t| (t - x).abs() < CONVERGENCE_TOL) {
                return Err(relation(format!("turning point c{}", j + 1)));
            }
            if let Some((o, j)) = report.periodic_near(x) {
                let orbit = &report.orbits[o];
                return Err(relation(format!("periodic point {} of period {}", orbit.points[j], orbit.period)));
            }
            if report.basin_of(x).is_some() {
                break;
            }
        }
    }
    Ok(report)
}

/// Which marked kinds of point a member of `P` is.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct PointMark {
    pub turning: bool,
    pub endpoint: bool,
    pub attracting: bool,
}

impl PointMark {
    fn union(self, o: PointMark) -> PointMark {
        PointMark {
            turning: self.turning || o.turning,
            endpoint: self.endpoint || o.endpoint,
            attracting: self.attracting || o.attracting,
        }
    }
}

/// The set `P^N`, sorted, with the action of the map on `P^{N-1}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PData {
    pub n: usize,
    pub points: Vec<f64>,
    pub marks: Vec<PointMark>,
    /// `action[i] = Some(j)` when point `i` lies in `P^{N-1}` and maps to point `j`.
    pub action: Vec<Option<usize>>,
    pub attractors: Vec<PeriodicOrbit>,
}

enum Fate {
    Lands { step: usize, orbit: usize },
    Enters { step: usize, orbit: usize, point: usize },
}

fn fate(map: &PLMap, report: &MsReport, x0: f64) -> Result<Fate, OneDimError> {
    let mut x = x0;
    for step in 0..=ITERATE_BUDGET {
        if let Some((orbit, _)) = report.periodic_near(x) {
            return Ok(Fate::Lands { step, orbit });
        }
        if let Some((orbit, point)) = report.basin_of(x) {
            return Ok(Fate::Enters { step, orbit, point });
        }
        x = map.eval(x);
    }
    Err(OneDimError::BasinNotFound { point: x0 })
}

fn slow(x0: f64) -> OneDimError {
    OneDimError::NumericalFailure(format!("the orbit of {x0} approaches its attractor too slowly for {ITERATE_BUDGET} iterates"))
}

struct Walk<'a> {
    map: &'a PLMap,
    path: Vec<f64>,
}

impl Walk<'_> {
    fn at(&mut self, t: usize) -> f64 {
        while self.path.len() <= t {
            let last = self.path[self.path.len() - 1];
            self.path.push(self.map.eval(last));
        }
        self.path[t]
    }
}

/// The smallest `N` produced by the fundamental domain construction: every
/// source orbit enters the contracting interval `J` of its attractor, and
/// for any two orbits at the same point and side, one of them has a point in
/// a fundamental domain `[f^n(c), f^{n+2m}(c)]` of the other, all within
/// `N - 2m` steps.
fn auto_n(map: &PLMap, report: &MsReport, sources: &[f64]) -> Result<usize, OneDimError> {
    let mut n = 0;
    let mut walks: Vec<Walk> = sources.iter().map(|&x| Walk { map, path: vec![x] }).collect();
    let mut classes: BTreeMap<(usize, usize, bool), Vec<(usize, usize)>> = BTreeMap::new();
    for (s, &x0) in sources.iter().enumerate() {
        match fate(map, report, x0)? {
            Fate::Lands { step, orbit } => n = n.max(step + report.orbits[orbit].period),
            Fate::Enters { step, orbit, point } => {
                let o = &report.orbits[orbit];
                let (m, w) = (o.period, 2 * o.period);
                for j in 0..w {
                    let target = (point + j) % m;
                    let (lo, hi) = o.basins[target];
                    let mut t = step + j;
                    loop {
                        let x = walks[s].at(t);
                        if lo <= x && x <= hi {
                            classes.entry((orbit, target, x > o.points[target])).or_default().push((s, t));
                            break;
                        }
                        t += w;
                        if t > step + ITERATE_BUDGET {
                            return Err(slow(x0));
                        }
                    }
                }
            }
        }
    }
    for (&(orbit, target, _), list) in &classes {
        let w = 2 * report.orbits[orbit].period;
        let q = report.orbits[orbit].points[target];
        for &(sa, ta) in list {
            for &(sb, tb) in list {
                let a0 = (walks[sa].at(ta) - q).abs();
                let mut u = 0;
                while (walks[sb].at(tb + w * u) - q).abs() > a0 {
                    u += 1;
                    if u > ITERATE_BUDGET {
                        return Err(slow(sources[sb]));
                    }
                }
                let b = (walks[sb].at(tb + w * u) - q).abs();
                let mut t = 0;
                while (walks[sa].at(ta + w * (t + 1)) - q).abs() >= b {
                    t += 1;
                    if t > ITERATE_BUDGET {
                        return Err(slow(sources[sa]));
                    }
                }
                n = n.max(ta + w * t + w).max(tb + w * u + w);
            }
        }
    }
    Ok(n)
}

fn build_pdata(map: &PLMap, report: &MsReport, n: usize, sources: &[(f64, PointMark)]) -> Result<PData, OneDimError> {
    let chart = Chart::new(map, report);
    let mut raw: Vec<(Pos, PointMark, Option<usize>)> = Vec::new();
    for &(x0, mark) in sources {
        let base = raw.len();
        for (k, p) in chart.walk(x0, n + 1).into_iter().enumerate() {
            let m = if k == 0 { mark } else { PointMark::default() };
            raw.push((p, m, (k < n).then_some(base + k + 1)));
        }
    }
    let attractors: Vec<PeriodicOrbit> = report.attractors().cloned().collect();
    for i in 0..chart.points.len() {
        if chart.attracting[i] {
            let mark = PointMark { attracting: true, ..Default::default() };
            raw.push((Pos::At(i), mark, None));
        }
    }
    let mut order: Vec<usize> = (0..raw.len()).collect();
    order.sort_by(|&i, &j| chart.cmp(raw[i].0, raw[j].0));
    let mut merged = vec![0; raw.len()];
    let mut reps: Vec<usize> = Vec::new();
    let mut marks: Vec<PointMark> = Vec::new();
    for &i in &order {
        match reps.last() {
            Some(&r) if chart.cmp(raw[r].0, raw[i].0) == Ordering::Equal => {
                let k = marks.len() - 1;
                marks[k] = marks[k].union(raw[i].1);
            }
            _ => {
                reps.push(i);
                marks.push(raw[i].1);
            }
        }
        merged[i] = reps.len() - 1;
    }
    let mut action = vec![None; reps.len()];
    let mut link = |from: usize, to: usize| match action[from] {
        Some(j) if j != to => Err(OneDimError::NumericalFailure(format!(
            "points of P^N closer than {CONVERGENCE_TOL} have different images"
        ))),
        _ => {
            action[from] = Some(to);
            Ok(())
        }
    };
    for (i, r) in raw.iter().enumerate() {
        match (r.0, r.2) {
            (_, Some(img)) => link(merged[i], merged[img])?,
            (Pos::At(q), None) => {
                let img = raw.iter().position(|s| matches!(s.0, Pos::At(t) if t == chart.next[q])).unwrap();
                link(merged[i], merged[img])?
            }
            _ => {}
        }
    }
    let points = reps.iter().map(|&r| chart.value(raw[r].0)).collect();
    Ok(PData { n, points, marks, action, attractors })
}

fn turning_sources(map: &PLMap) -> Vec<(f64, PointMark)> {
    let mark = PointMark { turning: true, ..Default::default() };
    map.turning_points().into_iter().map(|c| (c, mark)).collect()
}

fn endpoint_sources(map: &PLMap) -> Vec<(f64, PointMark)> {
    let end = PointMark { endpoint: true, ..Default::default() };
    let mut s = vec![(0.0, end)];
    s.extend(turning_sources(map));
    s.push((1.0, end));
    s
}

fn p_data(map: &PLMap, n: Option<usize>, sources: &[(f64, PointMark)]) -> Result<PData, OneDimError> {
    let report = validate_ms(map)?;
    let xs: Vec<f64> = sources.iter().map(|s| s.0).collect();
    let n = match n {
        Some(n) => n,
        None => auto_n(map, &report, &xs)?,
    };
    build_pdata(map, &report, n, sources)
}

/// `P^N` built from the turning points; `None` selects `N` automatically.
pub fn p_set(map: &PLMap, n: Option<usize>) -> Result<PData, OneDimError> {
    p_data(map, n, &turning_sources(map))
}

/// As [`p_set`], with the endpoints 0 and 1 counted among the critical points.
pub fn p_set_with_endpoints(map: &PLMap, n: Option<usize>) -> Result<PData, OneDimError> {
    p_data(map, n, &endpoint_sources(map))
}

/// An itinerary `preperiod (period)^∞` of lap indices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Itinerary {
    pub preperiod: Vec<usize>,
    pub period: Vec<usize>,
}

impl Itinerary {
    /// The `k`-th symbol, counting from 1.
    pub fn symbol(&self, k: usize) -> usize {
        let i = k - 1;
        if i < self.preperiod.len() {
            self.preperiod[i]
        } else {
            self.period[(i - self.preperiod.len()) % self.period.len()]
        }
    }
}

/// The lap itineraries `K(c_1), ..., K(c_d)` of the turning points, starting
/// from their first image.
pub fn kneading(map: &PLMap) -> Result<Vec<Itinerary>, OneDimError> {
    let report = validate_ms(map)?;
    let mut out = Vec::new();
    for (i, &c) in report.turning_points.iter().enumerate() {
        let x1 = map.eval(c);
        let (step, orbit) = match fate(map, &report, x1)? {
            Fate::Enters { step, orbit, .. } => (step, orbit),
            Fate::Lands { step, .. } => {
                return Err(OneDimError::CriticalRelation {
                    turning: i + 1,
                    iterate: step + 1,
                    target: "a periodic point".into(),
                })
            }
        };
        let w = 2 * report.orbits[orbit].period;
        let mut symbols = Vec::with_capacity(step + w);
        let mut x = x1;
        for k in 1..=step + w {
            symbols.push(map.lap_of(x).ok_or(OneDimError::SymbolAmbiguous { turning: i + 1, iterate: k })?);
            x = map.eval(x);
        }
        let mut period = symbols.split_off(step);
        let q = (1..=w).find(|q| w % q == 0 && (0..w).all(|j| period[j] == period[j % q])).unwrap_or(w);
        period.truncate(q);
        while symbols.last().is_some_and(|s| *s == period[q - 1]) {
            symbols.pop();
            period.rotate_right(1);
        }
        out.push(Itinerary { preperiod: symbols, period });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict1D {
    pub conjugate: bool,
    /// The common `N` used for both maps.
    pub n: usize,
    pub sizes: (usize, usize),
    pub reason: Option<String>,
}

fn describe(m: PointMark) -> String {
    let mut parts = Vec::new();
    if m.endpoint {
        parts.push("an endpoint");
    }
    if m.turning {
        parts.push("a turning point");
    }
    if m.attracting {
        parts.push("attracting periodic");
    }
    if parts.is_empty() {
        "an orbit point".into()
    } else {
        parts.join(" and ")
    }
}

fn compare_pdata(f: &PData, g: &PData) -> Option<String> {
    if f.points.len() != g.points.len() {
        return Some(format!("|P_f| = {} but |P_g| = {}", f.points.len(), g.points.len()));
    }
    for (i, (a, b)) in f.marks.iter().zip(&g.marks).enumerate() {
        if a != b {
            return Some(format!("point {i} in order is {} for f but {} for g", describe(*a), describe(*b)));
        }
    }
    for (i, (a, b)) in f.action.iter().zip(&g.action).enumerate() {
        if a != b {
            return Some(format!("the order preserving bijection does not commute with the maps at point {i}"));
        }
    }
    None
}

/// Decides conjugacy by an increasing homeomorphism.
pub fn conjugate_1d(f: &PLMap, g: &PLMap) -> Result<Verdict1D, OneDimError> {
    let (rf, rg) = (validate_ms(f)?, validate_ms(g)?);
    let (sf, sg) = (endpoint_sources(f), endpoint_sources(g));
    let xs = |s: &[(f64, PointMark)]| s.iter().map(|p| p.0).collect::<Vec<_>>();
    let n = auto_n(f, &rf, &xs(&sf))?.max(auto_n(g, &rg, &xs(&sg))?);
    let (pf, pg) = (build_pdata(f, &rf, n, &sf)?, build_pdata(g, &rg, n, &sg)?);
    let sizes = (pf.points.len(), pg.points.len());
    let reason = if f.increasing_first_lap() != g.increasing_first_lap() {
        Some("the first laps have opposite orientation".into())
    } else {
        compare_pdata(&pf, &pg)
    };
    Ok(Verdict1D { conjugate: reason.is_none(), n, sizes, reason })
}

/// Intervals `K` with `f(K)` and `K` of disjoint interiors, `f²(K) ⊆ K` and
/// `f²(∂K) ⊆ ∂K`. One maximal interval is returned per renormalization.
pub fn detect_renormalization(map: &PLMap) -> Result<Vec<(f64, f64)>, OneDimError> {
    let report = validate_ms(map)?;
    let fixed2: Vec<f64> =
        report.orbits.iter().filter(|o| o.period <= 2).flat_map(|o| o.points.iter().copied()).collect();
    let mut cand = fixed2.clone();
    cand.extend(report.orbits.iter().filter(|o| o.period == 4).flat_map(|o| o.points.iter().copied()));
    let f2 = map.compose(&map.first_pieces());
    for &q in &fixed2 {
        cand.extend(f2.iter().filter_map(|pc| pc.preimage(q)));
    }
    cand.sort_by(f64::total_cmp);
    cand.dedup_by(|u, v| (*u - *v).abs() < CONVERGENCE_TOL);
    let tol = 1e-8;
    let mut found: Vec<(f64, f64)> = Vec::new();
    for (i, &a) in cand.iter().enumerate() {
        for &b in &cand[i + 1..] {
            let ends = |y: f64| (y - a).abs() < tol || (y - b).abs() < tol;
            if !ends(map.eval(map.eval(a))) || !ends(map.eval(map.eval(b))) {
                continue;
            }
            let (lo1, hi1) = map.image(a, b);
            let (lo2, hi2) = map.image(lo1, hi1);
            if lo2 < a - tol || hi2 > b + tol || hi1.min(b) - lo1.max(a) > tol {
                continue;
            }
            found.push((a, b));
        }
    }
    let inside = |k: (f64, f64), l: (f64, f64)| l.0 <= k.0 + tol && k.1 <= l.1 + tol;
    let all = found.clone();
    found.retain(|&k| !all.iter().any(|&l| k != l && inside(k, l)));
    // K and a second interval containing f(K) describe the same renormalization;
    // keep the one around a turning point, else the leftmost
    let critical = |k: (f64, f64)| report.turning_points.iter().any(|&c| k.0 < c && c < k.1);
    let mut out: Vec<(f64, f64)> = Vec::new();
    for &k in &found {
        let fk = map.image(k.0, k.1);
        let twin = found.iter().copied().find(|&l| l != k && inside(fk, l));
        match twin {
            Some(l) if critical(l) && !critical(k) => {}
            Some(l) if critical(l) == critical(k) && l.0 < k.0 => {}
            _ => out.push(k),
        }
    }
    Ok(out)
}

/// A point of an orbit as seen by the oracle: a periodic point, a plain
/// number, or a point so close to an attracting periodic point that it is
/// stored as a side and a log distance.
#[derive(Clone, Copy, Debug)]
enum Pos {
    At(usize),
    Num(f64),
    Near { at: usize, side: f64, log: f64 },
}

struct Chart<'a> {
    map: &'a PLMap,
    points: Vec<f64>,
    next: Vec<usize>,
    attracting: Vec<bool>,
    /// Distance within which the map is affine on either side and no other
    /// periodic point lies.
    radius: Vec<f64>,
    /// Distance below which a numeric point switches to the log form.
    switch: Vec<f64>,
}

impl<'a> Chart<'a> {
    fn new(map: &'a PLMap, report: &MsReport) -> Self {
        let mut all: Vec<(f64, usize, usize)> = Vec::new();
        for (o, orbit) in report.orbits.iter().enumerate() {
            for (j, &q) in orbit.points.iter().enumerate() {
                all.push((q, o, j));
            }
        }
        all.sort_by(|u, v| u.0.total_cmp(&v.0));
        let index: BTreeMap<(usize, usize), usize> = all.iter().enumerate().map(|(i, &(_, o, j))| ((o, j), i)).collect();
        let points: Vec<f64> = all.iter().map(|p| p.0).collect();
        let next = all.iter().map(|&(_, o, j)| index[&(o, (j + 1) % report.orbits[o].period)]).collect();
        let attracting = all.iter().map(|&(_, o, _)| report.orbits[o].attracting).collect();
        let radius: Vec<f64> = points
            .iter()
            .map(|&q| {
                let bp = map.xs.iter().map(|x| (x - q).abs()).filter(|&d| d > 1e-12).fold(f64::MAX, f64::min);
                let pp = points.iter().map(|x| (x - q).abs() / 2.0).filter(|&d| d > 0.0).fold(f64::MAX, f64::min);
                bp.min(pp).min(1.0)
            })
            .collect();
        let switch = all
            .iter()
            .map(|&(_, o, _)| {
                (0..report.orbits[o].period).map(|j| radius[index[&(o, j)]]).fold(f64::MAX, f64::min)
            })
            .collect();
        Chart { map, points, next, attracting, radius, switch }
    }

    fn classify(&self, x: f64) -> Pos {
        for (i, &q) in self.points.iter().enumerate() {
            let d = x - q;
            let tol = if self.attracting[i] { TIE_TOL } else { CONVERGENCE_TOL };
            if d.abs() < tol {
                return Pos::At(i);
            }
            if self.attracting[i] && d.abs() < self.switch[i] {
                return Pos::Near { at: i, side: d.signum(), log: d.abs().ln() };
            }
        }
        Pos::Num(x)
    }

    fn step(&self, p: Pos) -> Pos {
        match p {
            Pos::At(i) => Pos::At(self.next[i]),
            Pos::Num(x) => self.classify(self.map.eval(x)),
            Pos::Near { at, side, log } => {
                let s = self.map.side_slope(self.points[at], side);
                let (at, side, log) = (self.next[at], side * s.signum(), log + s.abs().ln());
                if log.exp() < self.radius[at] {
                    Pos::Near { at, side, log }
                } else {
                    self.classify(self.points[at] + side * log.exp())
                }
            }
        }
    }

    fn value(&self, p: Pos) -> f64 {
        match p {
            Pos::At(i) => self.points[i],
            Pos::Num(x) => x,
            Pos::Near { at, side, log } => self.points[at] + side * log.exp(),
        }
    }

    fn coarse(&self, p: Pos) -> f64 {
        match p {
            Pos::At(i) | Pos::Near { at: i, .. } => self.points[i],
            Pos::Num(x) => x,
        }
    }

    fn cmp(&self, a: Pos, b: Pos) -> Ordering {
        let num = |x: f64, y: f64| if (x - y).abs() < TIE_TOL { Ordering::Equal } else { x.total_cmp(&y) };
        let by_side = |side: f64| if side > 0.0 { Ordering::Greater } else { Ordering::Less };
        match (a, b) {
            (Pos::At(i), Pos::At(j)) => i.cmp(&j),
            (Pos::Near { at, side, .. }, Pos::At(j)) if at == j => by_side(side),
            (Pos::At(j), Pos::Near { at, side, .. }) if at == j => by_side(side).reverse(),
            (Pos::Near { at: i, side: s, log: l }, Pos::Near { at: j, side: t, log: m }) if i == j => {
                if s != t {
                    by_side(s)
                } else if (l - m).abs() < CONVERGENCE_TOL {
                    Ordering::Equal
                } else if s > 0.0 {
                    l.total_cmp(&m)
                } else {
                    m.total_cmp(&l)
                }
            }
            (Pos::Near { at, side, log }, Pos::Num(y)) => num(self.points[at] + side * log.exp(), y),
            (Pos::Num(x), Pos::Near { at, side, log }) => num(x, self.points[at] + side * log.exp()),
            _ => num(self.coarse(a), self.coarse(b)),
        }
    }

    /// The orbit of `x0` until it stops being a plain number.
    fn settle(&self, x0: f64) -> Result<usize, OneDimError> {
        let mut p = self.classify(x0);
        for t in 0..ITERATE_BUDGET {
            if !matches!(p, Pos::Num(_)) {
                return Ok(t);
            }
            p = self.step(p);
        }
        Err(OneDimError::NumericalFailure(format!("the orbit of {x0} does not settle near a periodic orbit")))
    }

    fn walk(&self, x0: f64, len: usize) -> Vec<Pos> {
        let mut out = vec![self.classify(x0)];
        while out.len() < len {
            out.push(self.step(out[out.len() - 1]));
        }
        out
    }
}

/// An independent check of [`conjugate_1d`]: matches all periodic points in
/// order, follows the orbits of the endpoints and turning points far past
/// their arrival near an attractor, and compares the order of every pair of
/// orbit points. Near an attractor points are compared in logarithmic
/// coordinates, so arbitrarily late iterates keep their order.
pub fn oracle_conjugate(f: &PLMap, g: &PLMap) -> Result<bool, OneDimError> {
    let (rf, rg) = (validate_ms(f)?, validate_ms(g)?);
    let (tf, tg) = (f.turning_points(), g.turning_points());
    if tf.len() != tg.len() || f.increasing_first_lap() != g.increasing_first_lap() {
        return Ok(false);
    }
    let (ff, fg) = (Chart::new(f, &rf), Chart::new(g, &rg));
    if ff.points.len() != fg.points.len() || ff.next != fg.next || ff.attracting != fg.attracting {
        return Ok(false);
    }
    let sources = |t: &[f64]| {
        let mut s = vec![0.0];
        s.extend_from_slice(t);
        s.push(1.0);
        s
    };
    let (sf, sg) = (sources(&tf), sources(&tg));
    let mut settle = 0;
    for &x in &sf {
        settle = settle.max(ff.settle(x)?);
    }
    for &x in &sg {
        settle = settle.max(fg.settle(x)?);
    }
    let longest = rf.orbits.iter().chain(&rg.orbits).map(|o| o.period).max().unwrap_or(1);
    let len = settle + 8 * longest + 8;
    let items = |fr: &Chart, s: &[f64]| {
        let mut v: Vec<Pos> = (0..fr.points.len()).map(Pos::At).collect();
        for &x in s {
            v.extend(fr.walk(x, len));
        }
        v
    };
    let (a, b) = (items(&ff, &sf), items(&fg, &sg));
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            if ff.cmp(a[i], a[j]) != fg.cmp(b[i], b[j]) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(points: &[(f64, f64)]) -> PLMap {
        PLMap::new(points.to_vec()).unwrap()
    }

    #[test]
    fn pieces_of_an_iterate_agree_with_direct_evaluation() {
        let f = map(&[(0.0, 0.1), (0.3, 0.9), (0.7, 0.2), (1.0, 0.6)]);
        let mut pieces = f.first_pieces();
        for p in 2..=5 {
            pieces = f.compose(&pieces);
            for pc in &pieces {
                let x = (pc.a + pc.b) / 2.0;
                let direct = (0..p).fold(x, |y, _| f.eval(y));
                let linear = pc.ya + (x - pc.a) / (pc.b - pc.a) * (pc.yb - pc.ya);
                assert!((direct - linear).abs() < 1e-12, "iterate {p} at {x}");
            }
        }
    }

    #[test]
    fn rejects_malformed_maps() {
        assert!(PLMap::new(vec![(0.0, 0.2)]).is_err());
        assert!(PLMap::new(vec![(0.0, 0.2), (0.5, 0.2), (1.0, 0.3)]).is_err());
        assert!(PLMap::new(vec![(0.0, 0.2), (1.0, 1.3)]).is_err());
        assert!(PLMap::new(vec![(0.1, 0.2), (1.0, 0.3)]).is_err());
    }
}
