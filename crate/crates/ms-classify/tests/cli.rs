//! The command-line tool, the document format and DOT export.

use std::process::Command;

use ms_classify::dot::{graph_to_dot, scheme_to_dot};
use ms_classify::format::{parse, print, Document, FormatError};
use ms_classify::gradient::{build_directed_graph, build_three_colour};
use proptest::prelude::*;

fn path(name: &str) -> String {
    format!("{}/fixtures/{name}.json", env!("CARGO_MANIFEST_DIR"))
}

fn doc(name: &str) -> Document {
    parse(&std::fs::read_to_string(path(name)).unwrap()).unwrap()
}

fn all_fixtures() -> Vec<String> {
    let dir = format!("{}/fixtures", env!("CARGO_MANIFEST_DIR"));
    let mut v: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path().file_stem().unwrap().to_string_lossy().into_owned())
        .collect();
    v.sort();
    v
}

fn msclass(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_msclass")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap())
}

#[test]
fn every_fixture_round_trips() {
    for name in all_fixtures() {
        let d = doc(&name);
        assert_eq!(parse(&print(&d)).unwrap(), d, "{name}");
    }
}

#[test]
fn parse_errors_carry_a_position() {
    let e = parse("{\"version\": 1,\n \"scheme\": {\"levels\": [}\n}").unwrap_err();
    assert!(matches!(e, FormatError::ParseError { line: Some(2), column: Some(_), .. }), "{e}");
    assert!(matches!(parse(r#"{"version":7,"scheme":{"levels":[]}}"#), Err(FormatError::SchemaVersionUnsupported { found: 7 })));
    assert!(parse(r#"{"version":1,"map":{"breakpoints":[[0,0],[1,0.5]]},"portrait":null}"#).is_ok());
    assert!(parse(r#"{"version":1,"map":{"breakpoints":[[0,0],[1,1.5]]}}"#).is_err());
}

#[test]
fn three_colour_dot_lists_every_side_with_its_colour() {
    let Document::Portrait(p) = doc("saddle_two_sinks") else { panic!() };
    let g = build_three_colour(&p).unwrap();
    let dot = graph_to_dot(&g, "threecolour");
    assert!(dot.starts_with("graph \"threecolour\" {\n") && dot.ends_with("}\n"));
    for c in ["s", "t", "u"] {
        let n = dot.lines().filter(|l| l.contains(&format!("colour={c},"))).count();
        assert_eq!(n, g.edges.iter().filter(|e| e.colour.map(|x| x.name()) == Some(c)).count());
    }
    assert_eq!(dot.lines().filter(|l| l.contains(" -- ")).count(), g.edges.len());
    assert_eq!(dot, graph_to_dot(&g, "threecolour"));
}

#[test]
fn dot_does_not_depend_on_list_order() {
    let Document::Portrait(p) = doc("genus_one_portrait") else { panic!() };
    let mut q = p.clone();
    q.points.reverse();
    q.separatrices.reverse();
    let (g, h) = (build_directed_graph(&p).unwrap(), build_directed_graph(&q).unwrap());
    assert_eq!(graph_to_dot(&g, "d"), graph_to_dot(&h, "d"));

    let Document::Scheme(s) = doc("torus_four_levels") else { panic!() };
    let mut t = s.clone();
    for l in &mut t.levels {
        l.components.reverse();
        l.frames.reverse();
        for c in l.curves.values_mut() {
            c.curves.reverse();
        }
    }
    assert_eq!(scheme_to_dot(&s), scheme_to_dot(&t));
    assert!(scheme_to_dot(&s).contains("cluster_level3"));
}

#[test]
fn exit_codes_follow_the_verdicts() {
    let p = path;
    let cases: [(&[&str], i32, &str); 12] = [
        (&["validate", &p("beh3_sphere")], 0, "valid"),
        (&["validate", &p("missing_intersection")], 1, "invalid"),
        (&["realize", &p("torus_two_saddles")], 0, "realizable"),
        (&["equiv", &p("fifth_turn_sphere"), &p("fifth_turn_sphere")], 0, "equivalent"),
        (&["equiv", &p("fifth_turn_sphere"), &p("two_fifths_genus2")], 1, "not equivalent"),
        (&["graph", "--kind", "equipped", &p("saddle_two_sinks")], 0, "\"directed\": true"),
        (&["graph-iso", "--kind", "directed", &p("four_branch_tree_adjacent"), &p("four_branch_tree_alternating")], 0, "directed graphs isomorphic"),
        (&["graph-iso", "--kind", "threecolour", &p("four_branch_tree_adjacent"), &p("four_branch_tree_alternating")], 1, "not isomorphic"),
        (&["conj1d", &p("contraction_to_zero"), &p("contraction_to_one")], 1, "not conjugate"),
        (&["conj1d", &p("period_doubled"), &p("period_doubled")], 0, "conjugate"),
        (&["conj1d", &p("beh3_sphere"), &p("period_doubled")], 2, ""),
        (&["validate", "/nonexistent/file.json"], 2, ""),
    ];
    for (args, code, head) in cases {
        let (c, out) = msclass(args);
        assert_eq!(c, code, "{args:?}: {out}");
        assert!(out.contains(head), "{args:?}: {out}");
    }
    assert_eq!(msclass(&["graph", "--kind", "bogus", &p("saddle_two_sinks")]).0, 2);
}

#[test]
fn commands_are_deterministic() {
    for args in [
        vec!["export-dot".to_string(), path("two_fifths_genus2")],
        vec!["export-dot".to_string(), "--kind".into(), "equipped".into(), path("chiral_tree_left")],
        vec!["equiv".to_string(), path("torus_four_levels"), path("torus_four_levels")],
    ] {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        assert_eq!(msclass(&args), msclass(&args));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn maps_round_trip(ys in prop::collection::vec(0.0f64..=1.0, 2..8)) {
        let n = ys.len() - 1;
        let pts: Vec<String> = ys.iter().enumerate().map(|(i, y)| format!("[{},{}]", i as f64 / n as f64, y)).collect();
        let text = format!("{{\"version\":1,\"map\":{{\"breakpoints\":[{}]}}}}", pts.join(","));
        if let Ok(d) = parse(&text) {
            prop_assert_eq!(parse(&print(&d)).unwrap(), d);
        }
    }

    #[test]
    fn edited_schemes_round_trip(rank in -50i64..50, eq in -9i64..9, tau in 0u64..20, pick in 0usize..64) {
        let Document::Scheme(mut s) = doc("torus_four_levels") else { panic!() };
        let levels = s.levels.len();
        let l = &mut s.levels[pick % levels];
        if let Some(cs) = l.curves.values_mut().next() {
            if let Some(c) = cs.curves.first_mut() {
                c.offset_rank = rank;
                c.eq_coeff = eq;
            }
        }
        if let Some(f) = l.frames.first_mut() {
            f.tau = tau;
        }
        let d = Document::Scheme(s);
        prop_assert_eq!(parse(&print(&d)).unwrap(), d);
    }
}
