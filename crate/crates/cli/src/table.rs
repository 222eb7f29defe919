//! The whole-catalog table: one verification report per file.

use std::fmt::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::report::{self, ReportDocument};
use crate::{load_set, Settings};

/// File stems of the shipped catalog, in table order.
pub const CATALOG_ORDER: [&str; 9] = [
    "peres33",
    "penrose33",
    "schuette33",
    "conway-kochen31",
    "peres24",
    "kernaghan20",
    "pavicic20",
    "cabello18",
    "pavicic24",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableDocument {
    pub sets: Vec<ReportDocument>,
    /// Shipped catalog names with no file in the directory.
    pub missing: Vec<String>,
    pub errors: Vec<FileError>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileError {
    pub file: String,
    pub message: String,
}

/// Catalog names first in table order, then any other `.ks` files by name.
fn ordered_files(dir: &Path) -> std::io::Result<Vec<String>> {
    let mut stems: Vec<String> = std::fs::read_dir(dir)?
        .filter_map(|entry| {
            let path = entry.ok()?.path();
            (path.extension()? == "ks" && path.is_file())
                .then(|| path.file_stem()?.to_str().map(str::to_owned))?
        })
        .collect();
    let rank = |s: &str| {
        CATALOG_ORDER
            .iter()
            .position(|&c| c == s)
            .unwrap_or(usize::MAX)
    };
    stems.sort_by(|a, b| rank(a).cmp(&rank(b)).then_with(|| a.cmp(b)));
    Ok(stems)
}

pub fn build(dir: &Path, settings: &Settings) -> std::io::Result<TableDocument> {
    let stems = ordered_files(dir)?;
    let missing = CATALOG_ORDER
        .iter()
        .filter(|c| !stems.iter().any(|s| s == *c))
        .map(|c| (*c).to_owned())
        .collect::<Vec<_>>();
    let mut sets = Vec::new();
    let mut errors = Vec::new();
    for stem in &stems {
        let file = format!("{stem}.ks");
        match load_set(&dir.join(&file)) {
            Ok(set) => sets.push(report::verify(&set, settings)),
            Err(e) => errors.push(FileError {
                file,
                message: e.to_string(),
            }),
        }
    }
    let pass =
        !sets.is_empty() && missing.is_empty() && errors.is_empty() && sets.iter().all(|r| r.pass);
    Ok(TableDocument {
        sets,
        missing,
        errors,
        pass,
    })
}

fn cell<T: PartialEq + ToString>(computed: Option<T>, expected: Option<T>) -> String {
    let shown = computed
        .as_ref()
        .map_or_else(|| "?".to_owned(), T::to_string);
    match expected {
        Some(e) if computed.as_ref() != Some(&e) => format!("{shown} != {}", e.to_string()),
        _ => shown,
    }
}

pub fn render_text(t: &TableDocument) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "{:<18} {:>2} {:>8} {:>14} {:>8} {:>11} {:>14}  result",
        "name", "n", "Vectors", "⊥", "Bases", "Parameters", "Critical"
    )
    .unwrap();
    for r in &t.sets {
        let c = &r.computed;
        let e = &r.expected;
        let ortho = if r.checks.orthogonalities == Some(true) {
            e.orthogonalities
                .map_or_else(String::new, |x| x.to_string())
        } else {
            cell(Some(c.orthogonalities), e.orthogonalities)
        };
        writeln!(
            out,
            "{:<18} {:>2} {:>8} {:>14} {:>8} {:>11} {:>14}  {}",
            r.name,
            r.dim,
            cell(Some(c.vectors), e.vectors),
            ortho,
            cell(Some(c.bases), e.bases),
            cell(c.parameter_count, e.parameters),
            cell(c.critical, e.critical),
            if r.pass { "pass" } else { "FAIL" }
        )
        .unwrap();
    }
    writeln!(out, "a != b: computed a, expected b").unwrap();
    for r in &t.sets {
        if let Some(conv) = &r.checks.orthogonality_convention {
            if conv != "edges" {
                writeln!(out, "{}: ⊥ matches the {conv} count", r.name).unwrap();
            }
        }
    }
    for m in &t.missing {
        writeln!(out, "missing: {m}.ks").unwrap();
    }
    for e in &t.errors {
        writeln!(out, "error: {}", e.message).unwrap();
    }
    out
}
