//! The JSON document format shared by fixtures and the command line.
//!
//! A document is an object with a `version` field and exactly one of
//! `scheme`, `portrait` or `map`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::core_model::DecomposedScheme;
use crate::gradient::PhasePortrait;
use crate::onedim::PLMap;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub enum Document {
    Scheme(DecomposedScheme),
    Portrait(PhasePortrait),
    Map(PLMap),
}

impl Document {
    pub fn kind(&self) -> &'static str {
        match self {
            Document::Scheme(_) => "scheme",
            Document::Portrait(_) => "portrait",
            Document::Map(_) => "map",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum FormatError {
    /// `line` and `column` are 1-based and absent for errors found after the
    /// text was read, which name the offending field instead.
    #[error("parse error{}: {message}", location(*line, *column, field))]
    ParseError { line: Option<usize>, column: Option<usize>, field: Option<String>, message: String },
    #[error("unsupported document version {found}, expected {FORMAT_VERSION}")]
    SchemaVersionUnsupported { found: u64 },
}

fn location(line: Option<usize>, column: Option<usize>, field: &Option<String>) -> String {
    match (line, column, field) {
        (Some(l), Some(c), _) => format!(" at line {l}, column {c}"),
        (_, _, Some(f)) => format!(" in field {f}"),
        _ => String::new(),
    }
}

impl From<serde_json::Error> for FormatError {
    fn from(e: serde_json::Error) -> Self {
        let at = e.line() > 0;
        FormatError::ParseError {
            line: at.then(|| e.line()),
            column: at.then(|| e.column()),
            field: None,
            message: e.to_string(),
        }
    }
}

fn field_error(field: &str, message: &str) -> FormatError {
    FormatError::ParseError { line: None, column: None, field: Some(field.to_string()), message: message.to_string() }
}

#[derive(Deserialize)]
struct VersionOnly {
    version: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDocument {
    version: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    scheme: Option<DecomposedScheme>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    portrait: Option<PhasePortrait>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    map: Option<PLMap>,
}

/// Reads a document. Levels of a scheme are stamped on their components.
pub fn parse(text: &str) -> Result<Document, FormatError> {
    let v: VersionOnly = serde_json::from_str(text)?;
    if v.version != FORMAT_VERSION as u64 {
        return Err(FormatError::SchemaVersionUnsupported { found: v.version });
    }
    let raw: RawDocument = serde_json::from_str(text)?;
    match (raw.scheme, raw.portrait, raw.map) {
        (Some(mut s), None, None) => {
            if s.levels.is_empty() {
                return Err(field_error("scheme.levels", "a scheme needs at least one level"));
            }
            s.stamp_levels();
            Ok(Document::Scheme(s))
        }
        (None, Some(p), None) => Ok(Document::Portrait(p)),
        (None, None, Some(m)) => Ok(Document::Map(m)),
        _ => Err(field_error("", "expected exactly one of scheme, portrait or map")),
    }
}

/// Writes a document in the form [`parse`] reads back.
pub fn print(doc: &Document) -> String {
    let mut raw = RawDocument { version: FORMAT_VERSION as u64, scheme: None, portrait: None, map: None };
    match doc {
        Document::Scheme(s) => raw.scheme = Some(s.clone()),
        Document::Portrait(p) => raw.portrait = Some(p.clone()),
        Document::Map(m) => raw.map = Some(m.clone()),
    }
    let mut out = serde_json::to_string_pretty(&raw).expect("documents serialize");
    out.push('\n');
    out
}
