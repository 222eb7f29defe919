//! Catalog records: the text format, record invariants and metadata validation.
//!
//! A file is UTF-8 text. `#` starts a comment that runs to the end of the line.
//! Header lines have the form `key: value` with keys `name`, `dim`, `vectors`,
//! `orthogonalities`, `bases`, `parameters` and `critical`; every other
//! non-blank line is one ray, written as comma-separated component
//! expressions (see [`crate::expr`]).

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use thiserror::Error;

use crate::expr::{self, ExprError};
use crate::graph::{self, GraphError};
use crate::ray::{self, ComplexScalar, Ray, RayError, Tolerance, C64};

/// Two rays with `|<u,v>|` above this are the same projective point.
pub const DUPLICATE_OVERLAP: f64 = 1.0 - 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CatalogError {
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("line {line}: {source}")]
    Expr {
        line: usize,
        #[source]
        source: ExprError,
    },
    #[error("line {line}: {source}")]
    Ray {
        line: usize,
        #[source]
        source: RayError,
    },
    #[error("missing header `{0}`")]
    MissingHeader(&'static str),
    #[error("rays {first} and {second} are the same projective point")]
    DuplicateRay { first: usize, second: usize },
    #[error("ray {index}: {source}")]
    InvalidRay {
        index: usize,
        #[source]
        source: RayError,
    },
}

/// Reference values a record is expected to reproduce; absent fields are not checked.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Expected {
    pub vectors: Option<usize>,
    pub orthogonalities: Option<usize>,
    pub bases: Option<usize>,
    pub parameters: Option<usize>,
    pub critical: Option<bool>,
}

/// A named ray set. Rays are canonical, pairwise distinct and all of dimension `dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct KsSetRecord {
    name: String,
    dim: usize,
    entries: Vec<Vec<ComplexScalar>>,
    rays: Vec<Ray>,
    expected: Expected,
}

impl KsSetRecord {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        entries: Vec<Vec<ComplexScalar>>,
        expected: Expected,
    ) -> Result<Self, CatalogError> {
        let mut rays = Vec::with_capacity(entries.len());
        for (index, e) in entries.iter().enumerate() {
            if e.len() != dim {
                return Err(CatalogError::InvalidRay {
                    index,
                    source: RayError::DimensionMismatch {
                        left: e.len(),
                        right: dim,
                    },
                });
            }
            rays.push(
                ray::canonicalize(e)
                    .map_err(|source| CatalogError::InvalidRay { index, source })?,
            );
        }
        if let Some((first, second)) = first_duplicate(&rays) {
            return Err(CatalogError::DuplicateRay { first, second });
        }
        Ok(Self {
            name: name.into(),
            dim,
            entries,
            rays,
            expected,
        })
    }

    /// Build from bare values; components carry no source text.
    pub fn from_values(
        name: impl Into<String>,
        dim: usize,
        values: &[Vec<C64>],
        expected: Expected,
    ) -> Result<Self, CatalogError> {
        let entries = values
            .iter()
            .enumerate()
            .map(|(index, v)| {
                v.iter()
                    .map(|&z| ComplexScalar::new(z))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|source| CatalogError::InvalidRay { index, source })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(name, dim, entries, expected)
    }

    pub fn parse(text: &str) -> Result<Self, CatalogError> {
        let mut name = None;
        let mut dim = None;
        let mut expected = Expected::default();
        let mut entries = Vec::new();
        let mut lines = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            if let Some((key, value)) = body.split_once(':') {
                if !entries.is_empty() {
                    return Err(format_error(line, "header after the first ray"));
                }
                let value = value.trim();
                let count = || -> Result<usize, CatalogError> {
                    value
                        .parse()
                        .map_err(|_| format_error(line, "expected a non-negative integer"))
                };
                let slot_taken = match key.trim() {
                    "name" => {
                        if value.is_empty() {
                            return Err(format_error(line, "empty name"));
                        }
                        name.replace(value.to_string()).is_some()
                    }
                    "dim" => dim.replace(count()?).is_some(),
                    "vectors" => expected.vectors.replace(count()?).is_some(),
                    "orthogonalities" => expected.orthogonalities.replace(count()?).is_some(),
                    "bases" => expected.bases.replace(count()?).is_some(),
                    "parameters" => expected.parameters.replace(count()?).is_some(),
                    "critical" => {
                        let flag = match value {
                            "true" | "yes" => true,
                            "false" | "no" => false,
                            _ => return Err(format_error(line, "expected true or false")),
                        };
                        expected.critical.replace(flag).is_some()
                    }
                    other => {
                        return Err(format_error(
                            line,
                            &alloc::format!("unknown header `{other}`"),
                        ))
                    }
                };
                if slot_taken {
                    return Err(format_error(line, "repeated header"));
                }
                continue;
            }
            let Some(n) = dim else {
                return Err(format_error(line, "ray before `dim` header"));
            };
            let components = body
                .split(',')
                .map(|c| {
                    expr::parse_component(c).map_err(|source| CatalogError::Expr { line, source })
                })
                .collect::<Result<Vec<_>, _>>()?;
            if components.len() != n {
                return Err(format_error(
                    line,
                    &alloc::format!("expected {n} components, found {}", components.len()),
                ));
            }
            entries.push(components);
            lines.push(line);
        }
        let name = name.ok_or(CatalogError::MissingHeader("name"))?;
        let dim = dim.ok_or(CatalogError::MissingHeader("dim"))?;
        if dim < 3 {
            return Err(CatalogError::Ray {
                line: 0,
                source: RayError::DimensionTooSmall(dim),
            });
        }
        if let Some(v) = expected.vectors {
            if v != entries.len() {
                return Err(format_error(
                    lines.last().copied().unwrap_or(0),
                    &alloc::format!("header declares {v} vectors, file lists {}", entries.len()),
                ));
            }
        }
        Self::new(name, dim, entries, expected).map_err(|e| match e {
            CatalogError::InvalidRay { index, source } => CatalogError::Ray {
                line: lines[index],
                source,
            },
            other => other,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rays(&self) -> &[Ray] {
        &self.rays
    }

    pub fn entries(&self) -> &[Vec<ComplexScalar>] {
        &self.entries
    }

    pub fn expected(&self) -> &Expected {
        &self.expected
    }

    pub fn len(&self) -> usize {
        self.rays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rays.is_empty()
    }

    /// Same set with ray `v` moved to position `perm[v]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self, GraphError> {
        graph::check_permutation(perm, self.len())?;
        let mut entries = self.entries.clone();
        let mut rays = self.rays.clone();
        for (old, &new) in perm.iter().enumerate() {
            entries[new] = self.entries[old].clone();
            rays[new] = self.rays[old].clone();
        }
        Ok(Self {
            entries,
            rays,
            ..self.clone()
        })
    }

    /// Apply a row-major `dim x dim` matrix to every ray; source text is dropped.
    pub fn transformed(&self, matrix: &[C64]) -> Result<Self, CatalogError> {
        let values: Vec<Vec<C64>> = self
            .rays
            .iter()
            .enumerate()
            .map(|(index, r)| {
                r.transformed(matrix)
                    .map(|t| t.components().to_vec())
                    .map_err(|source| CatalogError::InvalidRay { index, source })
            })
            .collect::<Result<_, _>>()?;
        Self::from_values(self.name.clone(), self.dim, &values, self.expected.clone())
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Render in the catalog format; components print their source text when known.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "name: {}", self.name).unwrap();
        writeln!(out, "dim: {}", self.dim).unwrap();
        let e = &self.expected;
        for (key, value) in [
            ("vectors", e.vectors),
            ("orthogonalities", e.orthogonalities),
            ("bases", e.bases),
            ("parameters", e.parameters),
        ] {
            if let Some(v) = value {
                writeln!(out, "{key}: {v}").unwrap();
            }
        }
        if let Some(c) = e.critical {
            writeln!(out, "critical: {c}").unwrap();
        }
        out.push('\n');
        for row in &self.entries {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c.origin() {
                    Some(t) => t.to_string(),
                    None => expr::format_component(c.value()),
                })
                .collect();
            writeln!(out, "{}", cells.join(", ")).unwrap();
        }
        out
    }
}

fn format_error(line: usize, message: &str) -> CatalogError {
    CatalogError::Format {
        line,
        message: message.to_string(),
    }
}

fn first_duplicate(rays: &[Ray]) -> Option<(usize, usize)> {
    for a in 0..rays.len() {
        for b in a + 1..rays.len() {
            if ray::dot(rays[a].components(), rays[b].components()).norm() > DUPLICATE_OVERLAP {
                return Some((a, b));
            }
        }
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ColumnCheck {
    pub expected: Option<usize>,
    pub actual: usize,
    pub pass: bool,
}

impl ColumnCheck {
    fn new(expected: Option<usize>, actual: usize) -> Self {
        Self {
            expected,
            actual,
            pass: expected.is_none_or(|e| e == actual),
        }
    }
}

/// Which count an orthogonality figure agreed with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrthoConvention {
    /// Orthogonal pairs of rays, i.e. graph edges.
    Edges,
    /// Pairs counted once per basis containing them.
    BasisPairIncidences,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OrthogonalityCheck {
    pub expected: Option<usize>,
    pub edges: usize,
    pub basis_pair_incidences: usize,
    pub matched: Option<OrthoConvention>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub vectors: ColumnCheck,
    pub orthogonalities: OrthogonalityCheck,
    pub bases: ColumnCheck,
    /// Set when a clique failed the resolution-of-identity test.
    pub basis_error: Option<GraphError>,
    pub pass: bool,
}

/// Recount vectors, orthogonalities and bases and compare them with the header.
///
/// The orthogonality figure passes when it equals either the edge count or the
/// number of basis-pair incidences; the report records which.
pub fn validate_metadata(record: &KsSetRecord, tol: &Tolerance) -> ValidationReport {
    let g = graph::build_graph(record, tol);
    let (bases, basis_error) = match graph::verified_bases(record, &g) {
        Ok(b) => (b, None),
        Err(e) => (graph::enumerate_bases(&g), Some(e)),
    };
    let e = record.expected();
    let vectors = ColumnCheck::new(e.vectors, record.len());
    let bases_check = ColumnCheck::new(e.bases, bases.len());
    let edges = g.edge_count();
    let incidences = graph::basis_pair_incidences(&bases);
    let matched = match e.orthogonalities {
        Some(x) if x == edges => Some(OrthoConvention::Edges),
        Some(x) if x == incidences => Some(OrthoConvention::BasisPairIncidences),
        _ => None,
    };
    let orthogonalities = OrthogonalityCheck {
        expected: e.orthogonalities,
        edges,
        basis_pair_incidences: incidences,
        matched,
        pass: e.orthogonalities.is_none() || matched.is_some(),
    };
    let pass = vectors.pass && orthogonalities.pass && bases_check.pass && basis_error.is_none();
    ValidationReport {
        vectors,
        orthogonalities,
        bases: bases_check,
        basis_error,
        pass,
    }
}
