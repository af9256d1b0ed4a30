//! Explanation file format.
//!
//! UTF-8 CSV preceded by one `#`-prefixed JSON header line:
//!
//! ```text
//! # {"kind":"selection","s":3,"N":2,"metadata":{}}
//! 1,0,1
//! 0,0,1
//! ```
//!
//! Blank lines and further `#` lines after the header are ignored. Floats are
//! written in shortest round-trip form, so write → read is lossless.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::spaces::{ExplanationKind, ExplanationSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileHeader {
    pub kind: String,
    pub s: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(default)]
    pub metadata: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExplanationFile {
    pub set: ExplanationSet,
    pub metadata: Map<String, Value>,
}

fn parse_err(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

pub fn write_explanations(set: &ExplanationSet, metadata: &Map<String, Value>) -> String {
    let header = FileHeader {
        kind: set.kind().name().to_string(),
        s: set.dim(),
        n: set.len(),
        metadata: metadata.clone(),
    };
    let mut out = format!(
        "# {}\n",
        serde_json::to_string(&header).expect("header serializes")
    );
    for row in set.rows() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Parse an explanation file. Syntax and count errors carry 1-based line and
/// column; kind-specific row violations surface as [`Error::Validation`].
pub fn parse_explanations(text: &str) -> Result<ExplanationFile> {
    let mut lines = text.lines().enumerate();
    let (_, first) = lines
        .next()
        .ok_or_else(|| parse_err(1, 1, "empty file; expected a `#` JSON header"))?;
    let first = first.strip_prefix('\u{feff}').unwrap_or(first);
    let json = first
        .strip_prefix('#')
        .ok_or_else(|| parse_err(1, 1, "expected a `#` JSON header line"))?;
    let offset = first.len() - json.len();
    let header: FileHeader = serde_json::from_str(json)
        .map_err(|e| parse_err(1, offset + e.column().max(1), format!("bad header: {e}")))?;
    let kind = ExplanationKind::from_name(&header.kind, header.s)
        .map_err(|e| parse_err(1, offset + 1, e.to_string()))?;
    if header.s == 0 {
        return Err(parse_err(1, offset + 1, "s must be at least 1"));
    }

    let mut data = Vec::with_capacity(header.n * header.s);
    let mut rows = 0;
    for (idx, line) in lines {
        let line_no = idx + 1;
        let trimmed = line.trim_end_matches('\r');
        if trimmed.trim().is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut fields = 0;
        let mut column = 1;
        for cell in trimmed.split(',') {
            let value: f64 = cell.trim().parse().map_err(|_| {
                parse_err(line_no, column, format!("not a number: {:?}", cell.trim()))
            })?;
            data.push(value);
            fields += 1;
            column += cell.chars().count() + 1;
        }
        if fields != header.s {
            return Err(parse_err(
                line_no,
                1,
                format!("expected {} fields, found {fields}", header.s),
            ));
        }
        rows += 1;
    }
    if rows != header.n {
        return Err(parse_err(
            text.lines().count().max(1),
            1,
            format!("header declares N={} rows, body has {rows}", header.n),
        ));
    }
    Ok(ExplanationFile {
        set: ExplanationSet::new(kind, data)?,
        metadata: header.metadata,
    })
}

pub fn read_explanations(path: &std::path::Path) -> Result<ExplanationFile> {
    parse_explanations(&std::fs::read_to_string(path)?)
}
