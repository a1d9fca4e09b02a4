//! Fixture loading and the moves that change a scheme without changing the
//! diffeomorphism it describes.

use std::collections::BTreeMap;

use ms_classify::core_model::{CurveClass, DecomposedScheme};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn load(name: &str) -> DecomposedScheme {
    let path = format!("{}/fixtures/{name}.json", env!("CARGO_MANIFEST_DIR"));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    let mut s: DecomposedScheme = serde_json::from_value(v["scheme"].clone()).unwrap();
    s.stamp_levels();
    s
}

/// Renames every component and frame and shuffles all lists.
pub fn relabel(s: &DecomposedScheme, rng: &mut ChaCha8Rng) -> DecomposedScheme {
    let mut out = s.clone();
    let mut frames = BTreeMap::new();
    for (i, l) in s.levels.iter().enumerate() {
        for f in &l.frames {
            frames.insert(f.id.clone(), format!("sad{i}_{}", rng.gen::<u32>()));
        }
    }
    for (i, l) in out.levels.iter_mut().enumerate() {
        let comps: BTreeMap<String, String> =
            l.components.iter().map(|c| (c.id.clone(), format!("T{i}_{}", rng.gen::<u32>()))).collect();
        for c in &mut l.components {
            c.id = comps[&c.id].clone();
        }
        for f in &mut l.frames {
            f.id = frames[&f.id].clone();
            for fam in &mut f.families {
                fam.host = comps[&fam.host].clone();
            }
        }
        l.curves = std::mem::take(&mut l.curves)
            .into_iter()
            .map(|(k, mut sys)| {
                for c in &mut sys.curves {
                    c.label = frames[&c.label].clone();
                }
                sys.curves.shuffle(rng);
                (comps[&k].clone(), sys)
            })
            .collect();
        l.components.shuffle(rng);
        l.frames.shuffle(rng);
    }
    out
}

/// Applies an equator twist to the curves of one component of every level.
pub fn twist(s: &DecomposedScheme, rng: &mut ChaCha8Rng) -> DecomposedScheme {
    let mut out = s.clone();
    for l in &mut out.levels {
        let ids: Vec<String> = l.curves.keys().cloned().collect();
        if let Some(id) = ids.choose(rng) {
            let t = rng.gen_range(-3..=3);
            for c in &mut l.curves.get_mut(id).unwrap().curves {
                c.eq_coeff += t * c.winding as i64;
            }
        }
    }
    out
}

/// Rotates the cyclic order of one parallel family per component.
pub fn rotate_ranks(s: &DecomposedScheme, rng: &mut ChaCha8Rng) -> DecomposedScheme {
    let mut out = s.clone();
    for l in &mut out.levels {
        for sys in l.curves.values_mut() {
            let dirs: Vec<(i64, i64)> = sys.curves.iter().map(CurveClass::direction).collect();
            let d = *dirs.choose(rng).unwrap();
            let lowest = sys.curves.iter().filter(|c| c.direction() == d).map(|c| c.offset_rank).min().unwrap();
            let top = sys.curves.iter().filter(|c| c.direction() == d).map(|c| c.offset_rank).max().unwrap();
            for c in &mut sys.curves {
                if c.direction() == d && c.offset_rank == lowest {
                    c.offset_rank = top + 1;
                }
            }
        }
    }
    out
}

/// The same scheme seen through an orientation reversing homeomorphism.
pub fn mirror(s: &DecomposedScheme) -> DecomposedScheme {
    let mut out = s.clone();
    for l in &mut out.levels {
        for f in &mut l.frames {
            let top = f.families.iter().map(|x| x.rank).max().unwrap_or(0);
            for fam in &mut f.families {
                if fam.k > 1 {
                    fam.n = fam.k - fam.n;
                }
                fam.rank = top - fam.rank;
            }
        }
        for sys in l.curves.values_mut() {
            for c in &mut sys.curves {
                c.eq_coeff = -c.eq_coeff;
                c.offset_rank = -c.offset_rank;
            }
        }
    }
    out
}
