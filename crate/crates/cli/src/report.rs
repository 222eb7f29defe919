//! The per-set verification report and its text rendering.

use std::fmt::Write;
use std::time::Instant;

use ks_core::catalog::OrthoConvention;
use ks_core::rigidity::parameter_count_with_basis;
use ks_core::{
    build_graph, check_critical, find_ks_coloring, graph, validate_metadata, KsSetRecord, Tolerance,
};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub name: String,
    pub dim: usize,
    pub computed: Computed,
    pub expected: ExpectedValues,
    pub checks: Checks,
    /// Every check that has an expectation passed and the set is uncolourable.
    pub pass: bool,
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing_seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Computed {
    pub vectors: usize,
    /// Orthogonal pairs of rays (graph edges).
    pub orthogonalities: usize,
    /// Orthogonal pairs counted once per basis containing them.
    pub basis_pair_incidences: usize,
    pub bases: usize,
    /// `None` when the rank decision is inconclusive or the analysis failed.
    pub parameter_count: Option<usize>,
    pub rigidity: Option<RigiditySummary>,
    /// Why no rigidity analysis was possible.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rigidity_error: Option<String>,
    pub colourable: bool,
    /// `None` when the set is colourable, so criticality is undefined.
    pub critical: Option<bool>,
    pub non_destroying_deletions: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RigiditySummary {
    pub pinned_basis: Vec<usize>,
    pub n_coords: usize,
    pub n_residues: usize,
    pub null_dim: usize,
    pub residual_gauge_dim: usize,
    /// `None` for an infinite gap.
    pub gap_ratio: Option<f64>,
    pub conclusive: bool,
    pub real_restricted_count: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectedValues {
    pub vectors: Option<usize>,
    pub orthogonalities: Option<usize>,
    pub bases: Option<usize>,
    pub parameters: Option<usize>,
    pub critical: Option<bool>,
}

/// `None` where the file states no expectation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checks {
    pub vectors: Option<bool>,
    pub orthogonalities: Option<bool>,
    /// `edges` or `basis-pair-incidences` when the orthogonality figure matched.
    pub orthogonality_convention: Option<String>,
    pub bases: Option<bool>,
    pub parameters: Option<bool>,
    pub critical: Option<bool>,
    pub uncolourable: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub ortho_tol: f64,
    pub rank_tol: f64,
    pub gap_min: f64,
}

impl From<Tolerance> for Tolerances {
    fn from(t: Tolerance) -> Self {
        Self {
            ortho_tol: t.ortho_tol,
            rank_tol: t.rank_tol,
            gap_min: t.gap_min,
        }
    }
}

pub fn convention_name(c: OrthoConvention) -> &'static str {
    match c {
        OrthoConvention::Edges => "edges",
        OrthoConvention::BasisPairIncidences => "basis-pair-incidences",
    }
}

fn check<T: PartialEq>(expected: Option<T>, actual: Option<T>) -> Option<bool> {
    expected.map(|e| actual == Some(e))
}

/// Check one set against every reference value in its header.
pub fn verify(set: &KsSetRecord, settings: &crate::Settings) -> ReportDocument {
    let start = Instant::now();
    let tol = settings.tolerance;
    let validation = validate_metadata(set, &tol);
    let g = build_graph(set, &tol);
    let bases = graph::verified_bases(set, &g).unwrap_or_else(|_| graph::enumerate_bases(&g));
    let (colouring, _) = find_ks_coloring(&g, &bases).expect("enumerated bases are cliques");
    let colourable = colouring.is_some();
    let (critical, non_destroying) = if colourable {
        (None, Vec::new())
    } else {
        let report = check_critical(&g, &bases).expect("uncolourable input");
        (Some(report.critical), report.non_destroying())
    };
    let (rigidity, rigidity_error) =
        match parameter_count_with_basis(set, &tol, settings.basis_index) {
            Ok(r) => (
                Some(RigiditySummary {
                    pinned_basis: r.pinned_basis.vertices().to_vec(),
                    n_coords: r.n_coords,
                    n_residues: r.n_residues,
                    null_dim: r.null_dim,
                    residual_gauge_dim: r.residual_gauge_dim,
                    gap_ratio: r.gap_ratio.is_finite().then_some(r.gap_ratio),
                    conclusive: r.conclusive,
                    real_restricted_count: r.real_restricted_count,
                }),
                None,
            ),
            Err(e) => (None, Some(e.to_string())),
        };
    let parameter_count = rigidity.as_ref().and_then(|r| {
        r.conclusive
            .then(|| r.null_dim.saturating_sub(r.residual_gauge_dim))
    });
    let e = set.expected();
    let checks = Checks {
        vectors: validation.vectors.expected.map(|_| validation.vectors.pass),
        orthogonalities: validation
            .orthogonalities
            .expected
            .map(|_| validation.orthogonalities.pass),
        orthogonality_convention: validation
            .orthogonalities
            .matched
            .map(|c| convention_name(c).to_owned()),
        bases: validation
            .bases
            .expected
            .map(|_| validation.bases.pass && validation.basis_error.is_none()),
        parameters: check(e.parameters, parameter_count),
        critical: check(e.critical, critical),
        uncolourable: !colourable,
    };
    let pass = checks.uncolourable
        && [
            checks.vectors,
            checks.orthogonalities,
            checks.bases,
            checks.parameters,
            checks.critical,
        ]
        .iter()
        .all(|c| c.unwrap_or(true));
    ReportDocument {
        name: set.name().to_owned(),
        dim: set.dim(),
        computed: Computed {
            vectors: validation.vectors.actual,
            orthogonalities: validation.orthogonalities.edges,
            basis_pair_incidences: validation.orthogonalities.basis_pair_incidences,
            bases: validation.bases.actual,
            parameter_count,
            rigidity,
            rigidity_error,
            colourable,
            critical,
            non_destroying_deletions: non_destroying,
        },
        expected: ExpectedValues {
            vectors: e.vectors,
            orthogonalities: e.orthogonalities,
            bases: e.bases,
            parameters: e.parameters,
            critical: e.critical,
        },
        checks,
        pass,
        tolerances: tol.into(),
        timing_seconds: settings.timing.then(|| start.elapsed().as_secs_f64()),
    }
}

fn status(c: Option<bool>) -> &'static str {
    match c {
        Some(true) => "pass",
        Some(false) => "FAIL",
        None => "-",
    }
}

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map_or_else(|| "-".to_owned(), |v| v.to_string())
}

pub fn render_text(r: &ReportDocument) -> String {
    let mut out = String::new();
    let c = &r.computed;
    let e = &r.expected;
    writeln!(out, "{} (dimension {})", r.name, r.dim).unwrap();
    writeln!(
        out,
        "  {:<16} {:>10} {:>10}  status",
        "column", "computed", "expected"
    )
    .unwrap();
    let mut row = |label: &str, computed: String, expected: String, st: Option<bool>| {
        writeln!(
            out,
            "  {label:<16} {computed:>10} {expected:>10}  {}",
            status(st)
        )
        .unwrap();
    };
    row(
        "vectors",
        c.vectors.to_string(),
        opt(e.vectors),
        r.checks.vectors,
    );
    row(
        "orthogonalities",
        format!("{}/{}", c.orthogonalities, c.basis_pair_incidences),
        opt(e.orthogonalities),
        r.checks.orthogonalities,
    );
    row("bases", c.bases.to_string(), opt(e.bases), r.checks.bases);
    row(
        "parameters",
        opt(c.parameter_count),
        opt(e.parameters),
        r.checks.parameters,
    );
    row(
        "critical",
        opt(c.critical),
        opt(e.critical),
        r.checks.critical,
    );
    row(
        "uncolourable",
        (!c.colourable).to_string(),
        "true".into(),
        Some(r.checks.uncolourable),
    );
    writeln!(
        out,
        "  orthogonalities are shown as edges/basis-pair incidences"
    )
    .unwrap();
    if let Some(conv) = &r.checks.orthogonality_convention {
        writeln!(out, "  orthogonality figure matched: {conv}").unwrap();
    }
    if let Some(rg) = &c.rigidity {
        writeln!(
            out,
            "  rigidity: pinned {:?}, {} coordinates, {} residues, null {}, gauge {}, gap {}{}",
            rg.pinned_basis,
            rg.n_coords,
            rg.n_residues,
            rg.null_dim,
            rg.residual_gauge_dim,
            rg.gap_ratio
                .map_or_else(|| "inf".to_owned(), |g| format!("{g:.3e}")),
            if rg.conclusive { "" } else { " (INCONCLUSIVE)" }
        )
        .unwrap();
        if let Some(real) = rg.real_restricted_count {
            writeln!(out, "  real-restricted null dimension: {real}").unwrap();
        }
    }
    if let Some(err) = &c.rigidity_error {
        writeln!(out, "  rigidity: {err}").unwrap();
    }
    if !c.non_destroying_deletions.is_empty() {
        writeln!(
            out,
            "  deletions leaving the set uncolourable: {:?}",
            c.non_destroying_deletions
        )
        .unwrap();
    }
    if let Some(t) = r.timing_seconds {
        writeln!(out, "  time: {t:.3} s").unwrap();
    }
    writeln!(out, "  result: {}", if r.pass { "PASS" } else { "FAIL" }).unwrap();
    out
}
