use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use super::constraints::{max_abs, residues_at};
use super::{
    assemble_constraints, first_basis, gauge_fix, parameter_count, residual_gauge_tangents,
    GaugeFrame, RigidityError,
};
use crate::catalog::KsSetRecord;
use crate::expr;
use crate::graph::{self, OrthoGraph};
use crate::linalg::{self, RealSvd};
use crate::ray::{ComplexScalar, Tolerance, C64};

const NEWTON_LIMIT: usize = 50;
const MAX_STEP: f64 = 0.1;

#[derive(Debug, Clone)]
pub struct FlexStep {
    pub record: KsSetRecord,
    /// Largest `|Re|` or `|Im|` of `<u_a, u_b>` over the original edges after correction.
    pub max_residue: f64,
    pub newton_iterations: usize,
}

/// Walk `steps` predictor-corrector steps of length `step_size` along parameter
/// direction `direction_index`, returning each corrected set.
pub fn flex(
    set: &KsSetRecord,
    direction_index: usize,
    steps: usize,
    step_size: f64,
    tol: &Tolerance,
) -> Result<Vec<FlexStep>, RigidityError> {
    let report = parameter_count(set, tol)?;
    if !report.conclusive {
        return Err(RigidityError::Inconclusive);
    }
    if report.parameter_count == 0 {
        return Err(RigidityError::Rigid);
    }
    if direction_index >= report.parameter_count {
        return Err(RigidityError::DirectionOutOfRange {
            index: direction_index,
            available: report.parameter_count,
        });
    }
    if !(step_size > 0.0 && step_size <= MAX_STEP) {
        return Err(RigidityError::InvalidStepSize(step_size));
    }
    let g = graph::build_graph(set, tol);
    let basis = first_basis(set, &g)?;
    let start = gauge_fix(set, &g, &basis)?;
    let unitary = start.unitary().to_vec();
    let mut current = start.reference().to_vec();
    let mut heading: Option<Vec<f64>> = None;
    let mut out = Vec::with_capacity(steps);
    for step in 0..steps {
        let frame =
            GaugeFrame::from_frame_rays(set.dim(), basis.clone(), unitary.clone(), current.clone());
        let dirs = parameter_directions(&frame, &g, tol);
        let d =
            match &heading {
                None => dirs.get(direction_index).cloned().ok_or(
                    RigidityError::DirectionOutOfRange {
                        index: direction_index,
                        available: dirs.len(),
                    },
                )?,
                Some(prev) => {
                    follow(&frame, &dirs, prev).unwrap_or_else(|| dirs[direction_index].clone())
                }
            };
        heading = Some(ambient(&frame, &d));
        let x: Vec<f64> = d.iter().map(|v| v * step_size).collect();
        let (rays, iterations, residual) = correct(&frame, &g, frame.point(&x), tol);
        if residual > tol.ortho_tol {
            return Err(RigidityError::ContinuationStall { step, residual });
        }
        current = rays;
        let record = to_record(set, &frame, &current, step)?;
        let edges = g.edges();
        let check: Vec<Vec<C64>> = record
            .rays()
            .iter()
            .map(|r| r.components().to_vec())
            .collect();
        let max_residue = max_abs(&residues_at(&check, &edges));
        if graph::build_graph(&record, tol) != g {
            return Err(RigidityError::GraphChanged { step });
        }
        out.push(FlexStep {
            record,
            max_residue,
            newton_iterations: iterations,
        });
    }
    Ok(out)
}

/// Orthonormal null directions of the Jacobian with the residual gauge removed,
/// strongest first, each signed so its largest entry is positive.
fn parameter_directions(frame: &GaugeFrame, g: &OrthoGraph, tol: &Tolerance) -> Vec<Vec<f64>> {
    let system = assemble_constraints(frame, g);
    let null = RealSvd::new(system.jacobian()).null_space(tol.rank_tol);
    let gauge = residual_gauge_tangents(frame);
    let c = frame.n_coords();
    let cleaned: Vec<Vec<f64>> = null
        .iter()
        .map(|v| {
            let mut w = v.clone();
            for q in &gauge {
                let p: f64 = q.iter().zip(&w).map(|(a, b)| a * b).sum();
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= p * qi;
                }
            }
            w
        })
        .collect();
    if cleaned.is_empty() {
        return Vec::new();
    }
    let m = DMatrix::from_fn(c, cleaned.len(), |r, k| cleaned[k][r]);
    let svd = m.svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    order
        .into_iter()
        .filter(|&k| svd.singular_values[k] > 0.5)
        .map(|k| {
            let mut d: Vec<f64> = u.column(k).iter().copied().collect();
            let lead = d
                .iter()
                .copied()
                .max_by(|a, b| a.abs().total_cmp(&b.abs()))
                .unwrap_or(0.0);
            if lead < 0.0 {
                d.iter_mut().for_each(|x| *x = -*x);
            }
            d
        })
        .collect()
}

/// Displacement of all rays, as interleaved real/imaginary parts, for chart vector `x`.
fn ambient(frame: &GaugeFrame, x: &[f64]) -> Vec<f64> {
    let n = frame.dim();
    let mut out = vec![0.0; 2 * n * frame.n_rays()];
    for v in frame.free_rays() {
        let off = frame.offset(v).expect("free ray");
        for (k, t) in frame.tangents(v).iter().enumerate() {
            let c = C64::new(x[off + 2 * k], x[off + 2 * k + 1]);
            for (i, ti) in t.iter().enumerate() {
                let z = c * ti;
                out[2 * (v * n + i)] += z.re;
                out[2 * (v * n + i) + 1] += z.im;
            }
        }
    }
    out
}

/// Unit combination of `dirs` closest to the previous heading.
fn follow(frame: &GaugeFrame, dirs: &[Vec<f64>], prev: &[f64]) -> Option<Vec<f64>> {
    let coeffs: Vec<f64> = dirs
        .iter()
        .map(|d| ambient(frame, d).iter().zip(prev).map(|(a, b)| a * b).sum())
        .collect();
    let norm = linalg::rnorm(&coeffs);
    if !(norm > 1e-8) {
        return None;
    }
    let mut d = vec![0.0; frame.n_coords()];
    for (c, dir) in coeffs.iter().zip(dirs) {
        for (di, x) in d.iter_mut().zip(dir) {
            *di += c / norm * x;
        }
    }
    Some(d)
}

/// Minimum-norm Newton iterations, re-centring the chart at every iterate.
fn correct(
    frame: &GaugeFrame,
    g: &OrthoGraph,
    mut rays: Vec<Vec<C64>>,
    tol: &Tolerance,
) -> (Vec<Vec<C64>>, usize, f64) {
    let target = tol.ortho_tol * 1e-4;
    let edges = g.edges();
    let mut residual = max_abs(&residues_at(&rays, &edges));
    let mut iterations = 0;
    while residual > target && iterations < NEWTON_LIMIT {
        let local = GaugeFrame::from_frame_rays(
            frame.dim(),
            frame.pinned_basis().clone(),
            frame.unitary().to_vec(),
            rays,
        );
        let system = assemble_constraints(&local, g);
        let r = system.residues(&local, &vec![0.0; local.n_coords()]);
        let dx: Vec<f64> = linalg::lstsq(system.jacobian(), &r, 1e-10)
            .iter()
            .map(|x| -x)
            .collect();
        rays = local.point(&dx);
        residual = max_abs(&residues_at(&rays, &edges));
        iterations += 1;
    }
    (rays, iterations, residual)
}

fn to_record(
    set: &KsSetRecord,
    frame: &GaugeFrame,
    rays: &[Vec<C64>],
    step: usize,
) -> Result<KsSetRecord, RigidityError> {
    let entries = rays
        .iter()
        .map(|u| {
            let back = frame.to_original(u);
            let canon = crate::ray::canonicalize_values(&back).expect("unit ray");
            canon
                .components()
                .iter()
                .map(|&z| {
                    let z = C64::new(snap(z.re), snap(z.im));
                    ComplexScalar::with_origin(z, expr::format_component(z)).expect("finite")
                })
                .collect()
        })
        .collect();
    let name = format!("{}-flex-{:02}", set.name(), step + 1);
    Ok(KsSetRecord::new(
        name,
        set.dim(),
        entries,
        set.expected().clone(),
    )?)
}

/// Round-off below this is written as an exact zero.
const SNAP: f64 = 1e-15;

fn snap(x: f64) -> f64 {
    if x.abs() < SNAP {
        0.0
    } else {
        x
    }
}
