//! Command-line front end.
//!
//! Exit codes: 0 for a positive verdict or a valid input, 1 for a negative
//! verdict or an invalid input, 2 for errors and inconclusive answers.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use ms_classify::core_model::DecomposedScheme;
use ms_classify::dot::{graph_to_dot, scheme_to_dot};
use ms_classify::equivalence::conjugacy_verdict;
use ms_classify::format::{parse, Document};
use ms_classify::gradient::{
    build_directed_graph, build_equipped_graph, build_three_colour, directed_iso, equipped_iso, scheme_from_gradient,
    three_colour_iso, Checked, ColoredGraph, GradientError, PhasePortrait,
};
use ms_classify::onedim::{conjugate_1d, validate_ms, PLMap};
use ms_classify::validator::{check_realizable, validate_decomposed};

#[derive(Parser)]
#[command(name = "msclass", version, about = "Classify Morse-Smale surface diffeomorphisms from combinatorial data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a scheme, a portrait or an interval map.
    Validate { file: PathBuf },
    /// Report the surface and periodic data realizing a scheme or portrait.
    Realize { file: PathBuf },
    /// Decide whether two schemes (or portraits) are equivalent.
    Equiv { a: PathBuf, b: PathBuf },
    /// Build a graph invariant of a portrait.
    Graph {
        #[arg(long, value_enum)]
        kind: GraphKind,
        file: PathBuf,
    },
    /// Decide whether two portraits have isomorphic graphs.
    GraphIso {
        #[arg(long, value_enum)]
        kind: GraphKind,
        a: PathBuf,
        b: PathBuf,
    },
    /// Decide whether two interval maps are topologically conjugate.
    Conj1d { a: PathBuf, b: PathBuf },
    /// Write a scheme, or a graph of a portrait, in DOT.
    ExportDot {
        #[arg(long, value_enum, default_value = "threecolour")]
        kind: GraphKind,
        file: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum GraphKind {
    Directed,
    Equipped,
    Threecolour,
}

impl GraphKind {
    fn name(self) -> &'static str {
        match self {
            GraphKind::Directed => "directed",
            GraphKind::Equipped => "equipped",
            GraphKind::Threecolour => "threecolour",
        }
    }

    fn build(self, p: &PhasePortrait) -> Result<ColoredGraph, GradientError> {
        match self {
            GraphKind::Directed => build_directed_graph(p),
            GraphKind::Equipped => build_equipped_graph(p),
            GraphKind::Threecolour => build_three_colour(p),
        }
    }

    fn isomorphic(self, g1: &ColoredGraph, g2: &ColoredGraph) -> bool {
        match self {
            GraphKind::Directed => directed_iso(g1, g2).is_some(),
            GraphKind::Equipped => equipped_iso(g1, g2).is_some(),
            GraphKind::Threecolour => three_colour_iso(g1, g2).is_some(),
        }
    }
}

enum Outcome {
    Yes,
    No,
    Error,
}

impl Outcome {
    fn of(b: bool) -> Self {
        if b {
            Outcome::Yes
        } else {
            Outcome::No
        }
    }

    fn code(self) -> ExitCode {
        match self {
            Outcome::Yes => ExitCode::SUCCESS,
            Outcome::No => ExitCode::from(1),
            Outcome::Error => ExitCode::from(2),
        }
    }
}

/// An error that ends the command with exit code 2.
struct Fail(String);

impl<E: std::fmt::Display> From<E> for Fail {
    fn from(e: E) -> Self {
        Fail(e.to_string())
    }
}

fn load(path: &Path) -> Result<Document, Fail> {
    let text = std::fs::read_to_string(path).map_err(|e| Fail(format!("{}: {e}", path.display())))?;
    parse(&text).map_err(|e| Fail(format!("{}: {e}", path.display())))
}

fn as_scheme(doc: Document, path: &Path) -> Result<DecomposedScheme, Fail> {
    match doc {
        Document::Scheme(s) => Ok(s),
        Document::Portrait(p) => Ok(scheme_from_gradient(&p)?),
        Document::Map(_) => Err(Fail(format!("{}: expected a scheme or a portrait, found a map", path.display()))),
    }
}

fn as_portrait(doc: Document, path: &Path) -> Result<PhasePortrait, Fail> {
    match doc {
        Document::Portrait(p) => Ok(p),
        d => Err(Fail(format!("{}: expected a portrait, found a {}", path.display(), d.kind()))),
    }
}

fn as_map(doc: Document, path: &Path) -> Result<PLMap, Fail> {
    match doc {
        Document::Map(m) => Ok(m),
        d => Err(Fail(format!("{}: expected a map, found a {}", path.display(), d.kind()))),
    }
}

fn json(v: &impl Serialize) -> String {
    serde_json::to_string_pretty(v).expect("results serialize")
}

fn run(cmd: Command) -> Result<Outcome, Fail> {
    match cmd {
        Command::Validate { file } => match load(&file)? {
            Document::Scheme(s) => {
                let report = validate_decomposed(&s);
                println!("{}", if report.is_valid() { "valid" } else { "invalid" });
                for f in &report.failures {
                    println!("level {}: {}: {}", f.level, f.condition, f.message);
                }
                Ok(Outcome::of(report.is_valid()))
            }
            Document::Portrait(p) => match Checked::new(&p) {
                Ok(c) => {
                    let (sinks, saddles, sources) = c.counts();
                    println!("valid");
                    println!("sinks {sinks}, saddles {saddles}, sources {sources}, genus {}", c.genus());
                    Ok(Outcome::Yes)
                }
                Err(e @ GradientError::Internal(_)) => Err(e.into()),
                Err(e) => {
                    println!("invalid");
                    println!("{e}");
                    Ok(Outcome::No)
                }
            },
            Document::Map(m) => match validate_ms(&m) {
                Ok(r) => {
                    println!("valid");
                    println!("{}", json(&r));
                    Ok(Outcome::Yes)
                }
                Err(e) if e.is_inconclusive() => {
                    println!("inconclusive");
                    println!("{e}");
                    Ok(Outcome::Error)
                }
                Err(e) => {
                    println!("invalid");
                    println!("{e}");
                    Ok(Outcome::No)
                }
            },
        },
        Command::Realize { file } => {
            let s = as_scheme(load(&file)?, &file)?;
            let report = validate_decomposed(&s);
            if !report.is_valid() {
                println!("not realizable");
                for f in &report.failures {
                    println!("level {}: {}: {}", f.level, f.condition, f.message);
                }
                return Ok(Outcome::No);
            }
            match check_realizable(&s) {
                Ok(cert) => {
                    println!("realizable");
                    println!("{}", json(&cert));
                    Ok(Outcome::Yes)
                }
                Err(e) => {
                    println!("not realizable");
                    println!("{e}");
                    Ok(Outcome::No)
                }
            }
        }
        Command::Equiv { a, b } => {
            let s1 = as_scheme(load(&a)?, &a)?;
            let s2 = as_scheme(load(&b)?, &b)?;
            let v = conjugacy_verdict(&s1, &s2);
            println!("{}", if v.conjugate { "equivalent" } else { "not equivalent" });
            println!("{}", json(&v));
            Ok(Outcome::of(v.conjugate))
        }
        Command::Graph { kind, file } => {
            let p = as_portrait(load(&file)?, &file)?;
            println!("{}", json(&kind.build(&p)?));
            Ok(Outcome::Yes)
        }
        Command::GraphIso { kind, a, b } => {
            let g1 = kind.build(&as_portrait(load(&a)?, &a)?)?;
            let g2 = kind.build(&as_portrait(load(&b)?, &b)?)?;
            let iso = kind.isomorphic(&g1, &g2);
            println!("{} graphs {}", kind.name(), if iso { "isomorphic" } else { "not isomorphic" });
            Ok(Outcome::of(iso))
        }
        Command::Conj1d { a, b } => {
            let f = as_map(load(&a)?, &a)?;
            let g = as_map(load(&b)?, &b)?;
            match conjugate_1d(&f, &g) {
                Ok(v) => {
                    println!("{}", if v.conjugate { "conjugate" } else { "not conjugate" });
                    println!("{}", json(&v));
                    Ok(Outcome::of(v.conjugate))
                }
                Err(e) => {
                    println!("{}", if e.is_inconclusive() { "inconclusive" } else { "not decidable" });
                    println!("{e}");
                    Ok(Outcome::Error)
                }
            }
        }
        Command::ExportDot { kind, file } => {
            match load(&file)? {
                Document::Scheme(s) => print!("{}", scheme_to_dot(&s)),
                Document::Portrait(p) => print!("{}", graph_to_dot(&kind.build(&p)?, kind.name())),
                Document::Map(_) => return Err(Fail(format!("{}: maps have no DOT export", file.display()))),
            }
            Ok(Outcome::Yes)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(o) => o.code(),
        Err(Fail(msg)) => {
            eprintln!("error: {msg}");
            Outcome::Error.code()
        }
    }
}
