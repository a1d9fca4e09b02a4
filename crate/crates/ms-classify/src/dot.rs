//! Graphviz export. Nodes and edges are written in an order that depends only
//! on the object, never on the order of its input lists, so exporting the
//! same object twice gives identical text.

use std::fmt::Write;

use crate::core_model::{DecomposedScheme, FrameKind, Level};
use crate::equivalence::canonical_curve_class;
use crate::gradient::ColoredGraph;

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\"").replace('\n', "\\n"))
}

/// Writes `g` as a graph called `name`. Edges of a three-colour graph carry
/// `colour=s|t|u`; the fans of an equipped graph are listed on the sinks; every
/// node and edge names its image under `f`.
pub fn graph_to_dot(g: &ColoredGraph, name: &str) -> String {
    let (keyword, arrow) = if g.directed { ("digraph", "->") } else { ("graph", "--") };
    let mut out = format!("{keyword} {} {{\n", quote(name));
    let vid = |v: usize| g.vertices[v].id.as_str();

    let mut vs: Vec<usize> = (0..g.vertices.len()).collect();
    vs.sort_by(|&a, &b| vid(a).cmp(vid(b)));
    for v in vs {
        let mut attrs = vec![format!("f={}", quote(vid(g.vertex_map[v])))];
        if !g.vertices[v].label.is_empty() {
            attrs.push(format!("label={}", quote(&g.vertices[v].label)));
        }
        if let Some(fan) = g.fans.get(&v) {
            let ids: Vec<&str> = fan.iter().map(|&e| g.edges[e].id.as_str()).collect();
            attrs.push(format!("fan={}", quote(&ids.join(" "))));
        }
        let _ = writeln!(out, "  {} [{}];", quote(vid(v)), attrs.join(", "));
    }

    let key = |e: usize| {
        let ed = &g.edges[e];
        let (a, b) = (vid(ed.from), vid(ed.to));
        let (a, b) = if g.directed || a <= b { (a, b) } else { (b, a) };
        (a, b, ed.colour, ed.id.as_str())
    };
    let mut es: Vec<usize> = (0..g.edges.len()).collect();
    es.sort_by_key(|&e| key(e));
    for e in es {
        let (a, b, colour, id) = key(e);
        let mut attrs = vec![format!("id={}", quote(id))];
        if let Some(c) = colour {
            attrs.push(format!("colour={}", c.name()));
            attrs.push(format!("label={}", c.name()));
        }
        attrs.push(format!("f={}", quote(&g.edges[g.edge_map[e]].id)));
        let _ = writeln!(out, "  {} {arrow} {} [{}];", quote(a), quote(b), attrs.join(", "));
    }
    out.push_str("}\n");
    out
}

fn kind_name(k: FrameKind) -> &'static str {
    match k {
        FrameKind::Type1 => "type1",
        FrameKind::Type2 => "type2",
        FrameKind::Type3 => "type3",
    }
}

fn torus_label(level: &Level, id: &str, period: u64) -> String {
    let mut curves = level.curves_on(id).to_vec();
    curves.sort_by(|a, b| (a.offset_rank, &a.label, a.level_tag).cmp(&(b.offset_rank, &b.label, b.level_tag)));
    let mut s = format!("{id}\nperiod {period}");
    for c in curves {
        let k = canonical_curve_class(&c);
        let _ = write!(s, "\n#{} ({},{}) w={} {}@{}", c.offset_rank, k.eq_coeff, k.winding, c.winding, c.label, c.level_tag);
    }
    s
}

/// One cluster per level with a node per torus listing its curves in cyclic
/// order (rank, class, winding, frame), and a node per frame joined to its
/// hosts by edges labelled with `(k, n)`.
pub fn scheme_to_dot(s: &DecomposedScheme) -> String {
    let mut out = String::from("graph \"scheme\" {\n");
    for (i, level) in s.levels.iter().enumerate() {
        let _ = writeln!(out, "  subgraph \"cluster_level{i}\" {{");
        let _ = writeln!(out, "    label=\"level {i}\";");
        let mut comps: Vec<_> = level.components.iter().collect();
        comps.sort_by(|a, b| a.id.cmp(&b.id));
        for c in comps {
            let label = torus_label(level, &c.id, c.period);
            let _ = writeln!(out, "    {} [shape=box, label={}];", quote(&format!("{i}:{}", c.id)), quote(&label));
        }
        let mut frames: Vec<_> = level.frames.iter().collect();
        frames.sort_by(|a, b| a.id.cmp(&b.id));
        for f in &frames {
            let _ = writeln!(
                out,
                "    {} [shape=diamond, label={}];",
                quote(&format!("{i}:frame:{}", f.id)),
                quote(&format!("{} {} tau={}", f.id, kind_name(f.kind), f.tau))
            );
        }
        for f in frames {
            for fam in &f.families {
                let _ = writeln!(
                    out,
                    "    {} -- {} [label={}];",
                    quote(&format!("{i}:frame:{}", f.id)),
                    quote(&format!("{i}:{}", fam.host)),
                    quote(&format!("k={} n={} rank={}", fam.k, fam.n, fam.rank))
                );
            }
        }
        out.push_str("  }\n");
    }
    out.push_str("}\n");
    out
}
