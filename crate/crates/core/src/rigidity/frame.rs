use alloc::vec;
use alloc::vec::Vec;

use super::RigidityError;
use crate::catalog::KsSetRecord;
use crate::graph::{self, Basis, OrthoGraph};
use crate::linalg;
use crate::ray::{self, C64};

/// A set expressed in the frame where one basis is the standard basis, with a
/// local chart of `2n - 2` real coordinates around every other ray.
#[derive(Debug, Clone)]
pub struct GaugeFrame {
    dim: usize,
    pinned: Basis,
    unitary: Vec<C64>,
    reference: Vec<Vec<C64>>,
    offsets: Vec<Option<usize>>,
    tangents: Vec<Vec<Vec<C64>>>,
    n_coords: usize,
}

impl GaugeFrame {
    /// Frame around rays already expressed in pinned coordinates. Rays are
    /// normalised but keep their phase, so nearby frames stay comparable.
    pub(crate) fn from_frame_rays(
        dim: usize,
        pinned: Basis,
        unitary: Vec<C64>,
        rays: Vec<Vec<C64>>,
    ) -> Self {
        let mut reference = rays;
        let mut offsets = vec![None; reference.len()];
        let mut tangents = vec![Vec::new(); reference.len()];
        let mut n_coords = 0;
        for (slot, &v) in pinned.vertices().iter().enumerate() {
            reference[v] = standard(dim, slot);
        }
        for v in 0..reference.len() {
            if pinned.contains(v) {
                continue;
            }
            normalize(&mut reference[v]);
            tangents[v] = tangent_basis(&reference[v]);
            offsets[v] = Some(n_coords);
            n_coords += 2 * (dim - 1);
        }
        Self {
            dim,
            pinned,
            unitary,
            reference,
            offsets,
            tangents,
            n_coords,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn pinned_basis(&self) -> &Basis {
        &self.pinned
    }

    /// Vertex mapped to `e_k`: the pinned basis in ascending vertex order.
    pub fn pinned_vertex_order(&self) -> &[usize] {
        self.pinned.vertices()
    }

    /// Row-major unitary taking original coordinates to frame coordinates.
    pub fn unitary(&self) -> &[C64] {
        &self.unitary
    }

    pub fn reference(&self) -> &[Vec<C64>] {
        &self.reference
    }

    pub fn n_coords(&self) -> usize {
        self.n_coords
    }

    pub fn n_rays(&self) -> usize {
        self.reference.len()
    }

    /// First coordinate column of ray `v`, or `None` when pinned.
    pub fn offset(&self, v: usize) -> Option<usize> {
        self.offsets[v]
    }

    /// Orthonormal basis of the complement of the reference ray `v`.
    pub fn tangents(&self, v: usize) -> &[Vec<C64>] {
        &self.tangents[v]
    }

    pub fn free_rays(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_rays()).filter(|&v| self.offsets[v].is_some())
    }

    /// Unit rays at chart coordinates `x`; `x = 0` gives the reference.
    pub fn point(&self, x: &[f64]) -> Vec<Vec<C64>> {
        assert_eq!(x.len(), self.n_coords);
        let mut out = self.reference.clone();
        for (v, u) in out.iter_mut().enumerate() {
            let Some(off) = self.offsets[v] else { continue };
            for (k, t) in self.tangents[v].iter().enumerate() {
                let c = C64::new(x[off + 2 * k], x[off + 2 * k + 1]);
                for (ui, ti) in u.iter_mut().zip(t) {
                    *ui += c * ti;
                }
            }
            normalize(u);
        }
        out
    }

    /// Chart coordinates of a small displacement `du` of ray `v`, written into `x`.
    pub(crate) fn coordinates_of(&self, v: usize, du: &[C64], x: &mut [f64]) {
        if let Some(off) = self.offsets[v] {
            for (k, t) in self.tangents[v].iter().enumerate() {
                let z = ray::dot(t, du);
                x[off + 2 * k] = z.re;
                x[off + 2 * k + 1] = z.im;
            }
        }
    }

    /// Map frame coordinates back to the original ones.
    pub fn to_original(&self, u: &[C64]) -> Vec<C64> {
        let n = self.dim;
        (0..n)
            .map(|c| (0..n).map(|r| self.unitary[r * n + c].conj() * u[r]).sum())
            .collect()
    }
}

/// Rotate `basis` onto the standard basis and open a chart at every other ray.
pub fn gauge_fix(
    set: &KsSetRecord,
    graph: &OrthoGraph,
    basis: &Basis,
) -> Result<GaugeFrame, RigidityError> {
    let n = set.dim();
    let invalid = || RigidityError::InvalidBasis(basis.vertices().to_vec());
    if basis.vertices().len() != n
        || graph.n_vertices() != set.len()
        || !basis.is_clique_of(graph)
        || !(graph::projector_sum_deviation(set, basis) <= graph::PROJECTOR_SUM_TOL)
    {
        return Err(invalid());
    }
    let mut unitary = Vec::with_capacity(n * n);
    for &v in basis.vertices() {
        unitary.extend(set.rays()[v].components().iter().map(|z| z.conj()));
    }
    let mut rays = Vec::with_capacity(set.len());
    for r in set.rays() {
        let moved = r.transformed(&unitary).map_err(|_| invalid())?;
        rays.push(moved.components().to_vec());
    }
    Ok(GaugeFrame::from_frame_rays(n, basis.clone(), unitary, rays))
}

fn standard(dim: usize, k: usize) -> Vec<C64> {
    let mut e = vec![C64::new(0.0, 0.0); dim];
    e[k] = C64::new(1.0, 0.0);
    e
}

pub(crate) fn normalize(u: &mut [C64]) {
    let norm = linalg::cnorm(u);
    for z in u.iter_mut() {
        *z /= norm;
    }
}

/// Gram-Schmidt of the `n - 1` standard vectors least aligned with `u`, against `u`.
fn tangent_basis(u: &[C64]) -> Vec<Vec<C64>> {
    let n = u.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| u[a].norm().total_cmp(&u[b].norm()));
    let mut out: Vec<Vec<C64>> = Vec::with_capacity(n - 1);
    for &k in &order[..n - 1] {
        let mut w = standard(n, k);
        for _ in 0..2 {
            for q in core::iter::once(u).chain(out.iter().map(Vec::as_slice)) {
                let p = ray::dot(q, &w);
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= p * qi;
                }
            }
        }
        normalize(&mut w);
        out.push(w);
    }
    out
}
