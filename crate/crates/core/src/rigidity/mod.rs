//! Rigidity analysis: how many continuous parameters survive the orthogonality constraints.
//!
//! One basis is rotated onto the standard basis. Every other ray gets a chart
//! of `2n - 2` real coordinates, and each remaining edge contributes the real
//! and imaginary parts of its inner product as residues. The null space of the
//! Jacobian, minus the diagonal phase rotations that still fix the pinned
//! basis, is the tangent space of the family of sets sharing the graph.

mod constraints;
mod flex;
mod frame;
mod propagate;

use alloc::vec::Vec;

use thiserror::Error;

pub use constraints::{assemble_constraints, residual_gauge_tangents, ConstraintSystem};
pub use flex::{flex, FlexStep};
pub use frame::{gauge_fix, GaugeFrame};
pub use propagate::{propagate_reconstruct, Attempt, Reconstruction, RETRIES};

use crate::catalog::{CatalogError, KsSetRecord};
use crate::graph::{self, Basis, GraphError, OrthoGraph};
use crate::linalg::{self, RealSvd};
use crate::ray::Tolerance;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RigidityError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error("the set has no complete basis to pin")]
    NoBasis,
    #[error("{0:?} is not a basis of the set")]
    InvalidBasis(Vec<usize>),
    #[error("basis index {index} out of range ({count} bases)")]
    BasisIndex { index: usize, count: usize },
    #[error("set is rigid")]
    Rigid,
    #[error("parameter count is inconclusive")]
    Inconclusive,
    #[error("direction {index} out of range ({available} parameter directions)")]
    DirectionOutOfRange { index: usize, available: usize },
    #[error("step size {0} outside (0, 0.1]")]
    InvalidStepSize(f64),
    #[error("continuation stalled at step {step}: residual {residual:e}")]
    ContinuationStall { step: usize, residual: f64 },
    #[error("orthogonality graph changed at step {step}")]
    GraphChanged { step: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RigidityReport {
    pub pinned_basis: Basis,
    pub n_coords: usize,
    pub n_residues: usize,
    /// Descending; one entry per coordinate.
    pub singular_values: Vec<f64>,
    pub null_dim: usize,
    pub residual_gauge_dim: usize,
    pub parameter_count: usize,
    /// Smallest kept over largest discarded singular value; infinite when nothing is discarded
    /// or the discarded values are exactly zero.
    pub gap_ratio: f64,
    pub conclusive: bool,
    /// Null dimension of the real-coordinate restriction, for sets that are real in the pinned frame.
    pub real_restricted_count: Option<usize>,
}

/// Parameter count with the first enumerated basis pinned.
pub fn parameter_count(
    set: &KsSetRecord,
    tol: &Tolerance,
) -> Result<RigidityReport, RigidityError> {
    parameter_count_with_basis(set, tol, 0)
}

pub fn parameter_count_with_basis(
    set: &KsSetRecord,
    tol: &Tolerance,
    basis_index: usize,
) -> Result<RigidityReport, RigidityError> {
    let g = graph::build_graph(set, tol);
    let bases = graph::verified_bases(set, &g)?;
    if bases.is_empty() {
        return Err(RigidityError::NoBasis);
    }
    let basis = bases.get(basis_index).ok_or(RigidityError::BasisIndex {
        index: basis_index,
        count: bases.len(),
    })?;
    let frame = gauge_fix(set, &g, basis)?;
    let system = assemble_constraints(&frame, &g);
    Ok(analyze(&frame, &system, tol))
}

pub(crate) fn analyze(
    frame: &GaugeFrame,
    system: &ConstraintSystem,
    tol: &Tolerance,
) -> RigidityReport {
    let svd = RealSvd::new(system.jacobian());
    let rank = svd.rank(tol.rank_tol);
    let c = frame.n_coords();
    let null_dim = c - rank;
    let gap_ratio = gap(&svd.sigma, rank);
    let null = svd.null_space(tol.rank_tol);
    let gauge = residual_gauge_tangents(frame);
    let residual_gauge_dim = projected_rank(&gauge, &null, tol.rank_tol);
    RigidityReport {
        pinned_basis: frame.pinned_basis().clone(),
        n_coords: c,
        n_residues: system.n_residues(),
        singular_values: svd.sigma,
        null_dim,
        residual_gauge_dim,
        parameter_count: null_dim.saturating_sub(residual_gauge_dim),
        gap_ratio,
        conclusive: gap_ratio >= tol.gap_min,
        real_restricted_count: real_restricted(frame, system, tol),
    }
}

fn gap(sigma: &[f64], rank: usize) -> f64 {
    match (rank.checked_sub(1).map(|k| sigma[k]), sigma.get(rank)) {
        (Some(kept), Some(&dropped)) if dropped > 0.0 => kept / dropped,
        _ => f64::INFINITY,
    }
}

/// Rank of the projections of unit vectors `g` onto span(`basis`), counting
/// singular values above `tol`.
fn projected_rank(g: &[Vec<f64>], basis: &[Vec<f64>], tol: f64) -> usize {
    if g.is_empty() || basis.is_empty() {
        return 0;
    }
    let rows: Vec<Vec<f64>> = g
        .iter()
        .map(|v| {
            basis
                .iter()
                .map(|b| b.iter().zip(v).map(|(x, y)| x * y).sum())
                .collect()
        })
        .collect();
    let m = linalg::real_matrix(&rows, basis.len());
    m.singular_values().iter().filter(|&&s| s > tol).count()
}

/// Null dimension when only real displacements and real residues are allowed.
fn real_restricted(
    frame: &GaugeFrame,
    system: &ConstraintSystem,
    tol: &Tolerance,
) -> Option<usize> {
    const REAL_TOL: f64 = 1e-12;
    let real = frame
        .reference()
        .iter()
        .all(|u| u.iter().all(|z| z.im.abs() <= REAL_TOL));
    if !real {
        return None;
    }
    let cols = frame.n_coords() / 2;
    let j = system.jacobian();
    let rows: Vec<Vec<f64>> = (0..system.n_residues() / 2)
        .map(|e| (0..cols).map(|c| j[(2 * e, 2 * c)]).collect())
        .collect();
    let rank = if rows.is_empty() {
        0
    } else {
        RealSvd::new(&linalg::real_matrix(&rows, cols)).rank(tol.rank_tol)
    };
    Some(cols - rank)
}

/// Null dimension of the Jacobian with the gauge tangents appended as extra rows.
pub fn quotient_nullity(frame: &GaugeFrame, system: &ConstraintSystem, tol: &Tolerance) -> usize {
    let j = system.jacobian();
    let scale = RealSvd::new(j).max().max(1.0);
    let mut rows: Vec<Vec<f64>> = (0..j.nrows())
        .map(|r| j.row(r).iter().copied().collect())
        .collect();
    for g in residual_gauge_tangents(frame) {
        rows.push(g.iter().map(|x| x * scale).collect());
    }
    if rows.is_empty() {
        return frame.n_coords();
    }
    let m = linalg::real_matrix(&rows, frame.n_coords());
    frame.n_coords() - RealSvd::new(&m).rank(tol.rank_tol)
}

/// Pinned-frame graph helper shared by the reconstruction and continuation code.
pub(crate) fn first_basis(set: &KsSetRecord, g: &OrthoGraph) -> Result<Basis, RigidityError> {
    graph::verified_bases(set, g)?
        .into_iter()
        .next()
        .ok_or(RigidityError::NoBasis)
}
