//! Face structure of curve arrangements checked against a raster drawing.
//!
//! The oracle draws the same geodesics as thick lines on a fine pixel grid of
//! the torus, flood-fills the complement and counts, for every region, the
//! corners at which it touches a crossing. That count is the number of sides
//! of the face.

use std::collections::VecDeque;

use ms_classify::arrangement::{build_arrangement, crossings};
use ms_classify::core_model::CurveClass;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const N: usize = 1200;

fn to_f(q: num_rational::Ratio<i64>) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

fn torus_dist(a: f64) -> f64 {
    let f = a - a.floor();
    f.min(1.0 - f)
}

struct Raster {
    region: Vec<i32>,
}

impl Raster {
    fn new(lines: &[(f64, f64, f64)]) -> Self {
        let h = 1.0 / N as f64;
        let mut region = vec![-1; N * N];
        for y in 0..N {
            for x in 0..N {
                let (px, py) = ((x as f64 + 0.5) * h, (y as f64 + 0.5) * h);
                for &(a, w, c) in lines {
                    let d = torus_dist(w * px - a * py - c) / (a * a + w * w).sqrt();
                    if d < 1.2 * h {
                        region[y * N + x] = -2;
                        break;
                    }
                }
            }
        }
        let mut next = 0;
        for start in 0..N * N {
            if region[start] != -1 {
                continue;
            }
            region[start] = next;
            let mut queue = VecDeque::from([start]);
            while let Some(p) = queue.pop_front() {
                let (x, y) = (p % N, p / N);
                for (dx, dy) in [(1, 0), (N - 1, 0), (0, 1), (0, N - 1)] {
                    let q = (y + dy) % N * N + (x + dx) % N;
                    if region[q] == -1 {
                        region[q] = next;
                        queue.push_back(q);
                    }
                }
            }
            next += 1;
        }
        Raster { region }
    }

    fn at(&self, x: f64, y: f64) -> i32 {
        let fx = ((x - x.floor()) * N as f64) as usize % N;
        let fy = ((y - y.floor()) * N as f64) as usize % N;
        self.region[fy * N + fx]
    }
}

/// Sorted side counts of the faces, or `None` when the raster is too coarse.
fn raster_faces(curves: &[CurveClass]) -> Option<Vec<usize>> {
    let map = build_arrangement(curves).unwrap();
    let lines: Vec<(f64, f64, f64)> = curves
        .iter()
        .zip(&map.offsets)
        .map(|(c, &o)| {
            let (a, w) = c.direction();
            (a as f64, w as f64, to_f(o))
        })
        .collect();
    let raster = Raster::new(&lines);
    let regions = *raster.region.iter().max().unwrap() + 1;
    let mut corners = vec![0usize; regions as usize];
    for v in &map.vertices {
        let (px, py) = (to_f(v.point.0), to_f(v.point.1));
        let (i, j) = v.curves;
        let unit = |k: usize| {
            let (a, w) = curves[k].direction();
            let n = ((a * a + w * w) as f64).sqrt();
            (a as f64 / n, w as f64 / n)
        };
        let (u, w) = (unit(i), unit(j));
        for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
            let b = (si * u.0 + sj * w.0, si * u.1 + sj * w.1);
            let bn = (b.0 * b.0 + b.1 * b.1).sqrt();
            let (bx, by) = (b.0 / bn, b.1 / bn);
            let sin_half = (bx * u.1 - by * u.0).abs().min((bx * w.1 - by * w.0).abs());
            let r = 5.0 / N as f64 / sin_half;
            let reg = raster.at(px + r * bx, py + r * by);
            if reg < 0 {
                return None;
            }
            corners[reg as usize] += 1;
        }
    }
    // pixel slivers between thick lines touch no crossing
    corners.retain(|&c| c > 0);
    corners.sort_unstable();
    Some(corners)
}

fn curve(a: i64, w: u64, rank: i64) -> CurveClass {
    CurveClass::new(a, w, rank, "c", 0)
}

fn random_system(rng: &mut ChaCha8Rng) -> Vec<CurveClass> {
    let classes = [(1, 0), (0, 1), (1, 1), (-1, 1), (1, 2), (-1, 2), (2, 1)];
    loop {
        let n = rng.gen_range(2..=4);
        let mut out: Vec<CurveClass> = Vec::new();
        for _ in 0..n {
            let (a, w) = classes[rng.gen_range(0..classes.len())];
            let rank = out.iter().filter(|c| c.direction() == curve(a, w, 0).direction()).count() as i64;
            out.push(curve(a, w, rank));
        }
        let dirs: std::collections::BTreeSet<_> = out.iter().map(|c| c.direction()).collect();
        if dirs.len() >= 2 {
            return out;
        }
    }
}

#[test]
fn face_sizes_agree_with_raster() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut checked = 0;
    for _ in 0..12 {
        let curves = random_system(&mut rng);
        let map = build_arrangement(&curves).unwrap();
        let mut sizes = map.face_sizes();
        sizes.sort_unstable();
        if let Some(raster) = raster_faces(&curves) {
            assert_eq!(sizes, raster, "{curves:?}");
            checked += 1;
        }
    }
    assert!(checked >= 8, "raster inconclusive too often ({checked} checked)");
}

#[test]
fn triangle_configuration_agrees_with_raster() {
    let curves = [curve(0, 1, 0), curve(1, 1, 0), curve(-1, 1, 0)];
    let raster = raster_faces(&curves).expect("resolution suffices");
    assert!(raster.contains(&3));
    assert!(!build_arrangement(&curves).unwrap().triangles().is_empty());
}

fn class() -> impl Strategy<Value = (i64, u64)> {
    (-4i64..=4, 0u64..=4).prop_filter_map("simple class", |(a, w)| {
        let c = curve(a, w, 0);
        c.is_simple().then_some((a, w))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn crossings_symmetric_and_twist_invariant((a1, w1) in class(), (a2, w2) in class(), t in -3i64..=3) {
        let (c1, c2) = (curve(a1, w1, 0), curve(a2, w2, 1));
        prop_assert_eq!(crossings(&c1, &c2), crossings(&c2, &c1));
        let tw = |a: i64, w: u64| curve(a + t * w as i64, w, 0);
        let (d1, mut d2) = (tw(a1, w1), tw(a2, w2));
        d2.offset_rank = 1;
        prop_assert_eq!(crossings(&c1, &c2), crossings(&d1, &d2));
    }

    #[test]
    fn every_map_is_a_torus(classes in prop::collection::vec(class(), 1..5)) {
        let mut curves: Vec<CurveClass> = Vec::new();
        for (a, w) in classes {
            let rank = curves.iter().filter(|c| c.direction() == curve(a, w, 0).direction()).count() as i64;
            curves.push(curve(a, w, rank));
        }
        let map = build_arrangement(&curves).unwrap();
        let total: usize = map.face_sizes().iter().sum();
        prop_assert_eq!(total, map.darts.len());
        if !map.vertices.is_empty() {
            prop_assert_eq!(map.euler_characteristic(), 0);
            prop_assert_eq!(map.edge_count(), 2 * map.vertices.len());
        } else {
            prop_assert_eq!(map.face_count(), curves.len());
        }
        let mut seen = vec![false; map.darts.len()];
        for f in &map.faces {
            for &d in f {
                prop_assert!(!seen[d]);
                seen[d] = true;
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn face_sizes_are_twist_invariant(classes in prop::collection::vec(class(), 2..5), t in -2i64..=2) {
        let mut curves: Vec<CurveClass> = Vec::new();
        for (a, w) in classes {
            let rank = curves.iter().filter(|c| c.direction() == curve(a, w, 0).direction()).count() as i64;
            curves.push(curve(a, w, rank));
        }
        let twisted: Vec<CurveClass> = curves
            .iter()
            .map(|c| {
                let (a, w) = c.direction();
                curve(a + t * w, w as u64, c.offset_rank)
            })
            .collect();
        let mut s1 = build_arrangement(&curves).unwrap().face_sizes();
        let mut s2 = build_arrangement(&twisted).unwrap().face_sizes();
        s1.sort_unstable();
        s2.sort_unstable();
        prop_assert_eq!(s1, s2);
    }
}
