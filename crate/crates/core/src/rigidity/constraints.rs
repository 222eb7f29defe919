use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use super::GaugeFrame;
use crate::graph::OrthoGraph;
use crate::linalg;
use crate::ray::{self, C64};

/// Real and imaginary parts of `<u_a, u_b>` for every edge outside the pinned
/// basis, with their Jacobian at the frame's reference point.
#[derive(Debug, Clone)]
pub struct ConstraintSystem {
    edges: Vec<(usize, usize)>,
    n_coords: usize,
    jacobian: DMatrix<f64>,
}

impl ConstraintSystem {
    /// Constrained edges; residue rows `2e` and `2e + 1` belong to edge `e`.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn n_residues(&self) -> usize {
        2 * self.edges.len()
    }

    pub fn n_coords(&self) -> usize {
        self.n_coords
    }

    pub fn jacobian(&self) -> &DMatrix<f64> {
        &self.jacobian
    }

    pub fn residues(&self, frame: &GaugeFrame, x: &[f64]) -> Vec<f64> {
        residues_at(&frame.point(x), &self.edges)
    }

    /// Central differences of [`Self::residues`] at the reference.
    pub fn finite_difference_jacobian(&self, frame: &GaugeFrame, h: f64) -> DMatrix<f64> {
        let mut j = DMatrix::zeros(self.n_residues(), self.n_coords);
        let mut x = vec![0.0; self.n_coords];
        for c in 0..self.n_coords {
            x[c] = h;
            let plus = self.residues(frame, &x);
            x[c] = -h;
            let minus = self.residues(frame, &x);
            x[c] = 0.0;
            for r in 0..self.n_residues() {
                j[(r, c)] = (plus[r] - minus[r]) / (2.0 * h);
            }
        }
        j
    }
}

pub(crate) fn residues_at(rays: &[Vec<C64>], edges: &[(usize, usize)]) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * edges.len());
    for &(a, b) in edges {
        let z = ray::dot(&rays[a], &rays[b]);
        out.push(z.re);
        out.push(z.im);
    }
    out
}

/// Largest absolute residue; 0 when there are none.
pub(crate) fn max_abs(r: &[f64]) -> f64 {
    r.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Residues and analytic Jacobian of the bilinear form at the reference point.
pub fn assemble_constraints(frame: &GaugeFrame, graph: &OrthoGraph) -> ConstraintSystem {
    let pinned = frame.pinned_basis();
    let edges: Vec<(usize, usize)> = graph
        .edges()
        .into_iter()
        .filter(|&(a, b)| !(pinned.contains(a) && pinned.contains(b)))
        .collect();
    let mut jacobian = DMatrix::zeros(2 * edges.len(), frame.n_coords());
    let reference = frame.reference();
    let i = C64::new(0.0, 1.0);
    for (e, &(a, b)) in edges.iter().enumerate() {
        // d<u_a, u_b> = <du_a, u_b> + <u_a, du_b>, du = (x_re + i x_im) t_k
        if let Some(off) = frame.offset(a) {
            for (k, t) in frame.tangents(a).iter().enumerate() {
                let g = ray::dot(t, &reference[b]);
                put(&mut jacobian, e, off + 2 * k, g);
                put(&mut jacobian, e, off + 2 * k + 1, -i * g);
            }
        }
        if let Some(off) = frame.offset(b) {
            for (k, t) in frame.tangents(b).iter().enumerate() {
                let g = ray::dot(&reference[a], t);
                put(&mut jacobian, e, off + 2 * k, g);
                put(&mut jacobian, e, off + 2 * k + 1, i * g);
            }
        }
    }
    ConstraintSystem {
        edges,
        n_coords: frame.n_coords(),
        jacobian,
    }
}

fn put(j: &mut DMatrix<f64>, edge: usize, col: usize, z: C64) {
    j[(2 * edge, col)] += z.re;
    j[(2 * edge + 1, col)] += z.im;
}

/// Chart-coordinate tangents of the diagonal phase rotations fixing the pinned
/// basis, orthonormalised, with directions that act trivially dropped.
pub fn residual_gauge_tangents(frame: &GaugeFrame) -> Vec<Vec<f64>> {
    let raw: Vec<Vec<f64>> = (0..frame.dim())
        .map(|m| {
            let mut x = vec![0.0; frame.n_coords()];
            for v in frame.free_rays() {
                let u = &frame.reference()[v];
                let mut du = vec![C64::new(0.0, 0.0); frame.dim()];
                du[m] = C64::new(0.0, 1.0) * u[m];
                let p = ray::dot(u, &du);
                for (d, ui) in du.iter_mut().zip(u) {
                    *d -= p * ui;
                }
                frame.coordinates_of(v, &du, &mut x);
            }
            x
        })
        .collect();
    linalg::orthonormalize(&raw, 1e-10)
}
