//! Random piecewise linear interval maps for the property tests.

use ms_classify::onedim::PLMap;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// A random map with `d` turning points, values kept inside a random band so
/// that slopes stay moderate and most samples are Morse-Smale.
pub fn random_map(rng: &mut ChaCha8Rng, d: usize) -> PLMap {
    loop {
        let mut turns: Vec<f64> = (0..d).map(|_| rng.gen_range(0.08..0.92)).collect();
        turns.sort_by(f64::total_cmp);
        if turns.windows(2).any(|w| w[1] - w[0] < 0.06) {
            continue;
        }
        let width = rng.gen_range(0.25..0.9);
        let lo = rng.gen_range(0.0..1.0 - width);
        let mut up = rng.gen_bool(0.5);
        let mut nodes = vec![0.0];
        nodes.extend(&turns);
        nodes.push(1.0);
        // u values alternate around the band so every lap has the chosen direction
        let mut us = vec![if up { rng.gen_range(0.0..0.45) } else { rng.gen_range(0.55..1.0) }];
        for _ in 1..nodes.len() {
            us.push(if up { rng.gen_range(0.55..1.0) } else { rng.gen_range(0.0..0.45) });
            up = !up;
        }
        let mut points = Vec::new();
        for i in 0..nodes.len() {
            points.push((nodes[i], lo + width * us[i]));
            if i + 1 < nodes.len() && rng.gen_bool(0.4) {
                let t = rng.gen_range(0.2..0.8);
                let s = rng.gen_range(0.15..0.85);
                points.push((nodes[i] + t * (nodes[i + 1] - nodes[i]), lo + width * (us[i] + s * (us[i + 1] - us[i]))));
            }
        }
        if let Ok(m) = PLMap::new(points) {
            return m;
        }
    }
}

/// A random increasing piecewise linear homeomorphism of `[0,1]`.
pub fn random_homeo(rng: &mut ChaCha8Rng) -> PLMap {
    let k = rng.gen_range(1..=3);
    let mut xs: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..0.95)).collect();
    let mut ys: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..0.95)).collect();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let mut points = vec![(0.0, 0.0)];
    points.extend(xs.into_iter().zip(ys));
    points.push((1.0, 1.0));
    PLMap::new(points).unwrap_or_else(|_| PLMap::new(vec![(0.0, 0.0), (1.0, 1.0)]).unwrap())
}

fn inverse(h: &PLMap, y: f64) -> f64 {
    let b = h.breakpoints();
    let i = b.partition_point(|p| p.1 <= y).saturating_sub(1).min(b.len() - 2);
    b[i].0 + (y - b[i].1) / (b[i + 1].1 - b[i].1) * (b[i + 1].0 - b[i].0)
}

/// `h ∘ f ∘ h⁻¹`, again piecewise linear.
pub fn conjugate_by(f: &PLMap, h: &PLMap) -> PLMap {
    let fb = f.breakpoints();
    let mut xs: Vec<f64> = fb.iter().map(|p| h.eval(p.0)).collect();
    xs.extend(h.breakpoints().iter().map(|p| p.1));
    for (v, _) in h.breakpoints() {
        for w in fb.windows(2) {
            let (lo, hi) = (w[0].1.min(w[1].1), w[0].1.max(w[1].1));
            if lo < v && v < hi {
                let x = w[0].0 + (v - w[0].1) / (w[1].1 - w[0].1) * (w[1].0 - w[0].0);
                xs.push(h.eval(x));
            }
        }
    }
    xs.retain(|&x| x > 1e-12 && x < 1.0 - 1e-12);
    xs.push(0.0);
    xs.push(1.0);
    xs.sort_by(f64::total_cmp);
    xs.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let points = xs.iter().map(|&x| (x, h.eval(f.eval(inverse(h, x))))).collect();
    PLMap::new(points).expect("conjugate of a valid map")
}

/// Moves every value by at most `eps`, keeping laps and range.
pub fn perturb(f: &PLMap, rng: &mut ChaCha8Rng, eps: f64) -> PLMap {
    loop {
        let points: Vec<(f64, f64)> =
            f.breakpoints().iter().map(|&(x, y)| (x, (y + rng.gen_range(-eps..eps)).clamp(0.0, 1.0))).collect();
        if let Ok(g) = PLMap::new(points) {
            if g.turning_points().len() == f.turning_points().len() {
                return g;
            }
        }
    }
}
