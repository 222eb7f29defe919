//! Thin wrappers around nalgebra's SVD with sorted spectra and explicit null spaces.

use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::ray::C64;

/// Singular values in descending order with matching right singular vectors.
///
/// `sigma.len() == v.ncols() == ncols` of the input; rows are zero-padded so the
/// full right basis is always available.
pub struct RealSvd {
    pub sigma: Vec<f64>,
    pub v: DMatrix<f64>,
}

impl RealSvd {
    pub fn new(a: &DMatrix<f64>) -> Self {
        let cols = a.ncols();
        if cols == 0 {
            return Self {
                sigma: Vec::new(),
                v: DMatrix::zeros(0, 0),
            };
        }
        let padded = if a.nrows() < cols {
            let mut p = DMatrix::zeros(cols, cols);
            p.view_mut((0, 0), (a.nrows(), cols)).copy_from(a);
            p
        } else {
            a.clone()
        };
        let svd = padded.svd(false, true);
        let vt = svd.v_t.expect("right singular vectors requested");
        let mut order: Vec<usize> = (0..cols).collect();
        order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
        let sigma = order.iter().map(|&k| svd.singular_values[k]).collect();
        let mut v = DMatrix::zeros(cols, cols);
        for (dst, &src) in order.iter().enumerate() {
            for r in 0..cols {
                v[(r, dst)] = vt[(src, r)];
            }
        }
        Self { sigma, v }
    }

    pub fn max(&self) -> f64 {
        self.sigma.first().copied().unwrap_or(0.0)
    }

    /// Number of singular values above `rel_tol * sigma_max`.
    pub fn rank(&self, rel_tol: f64) -> usize {
        rank_of(&self.sigma, rel_tol)
    }

    /// Columns of `v` spanning the numerical null space.
    pub fn null_space(&self, rel_tol: f64) -> Vec<Vec<f64>> {
        let r = self.rank(rel_tol);
        (r..self.sigma.len())
            .map(|c| self.v.column(c).iter().copied().collect())
            .collect()
    }
}

pub fn cnorm(v: &[C64]) -> f64 {
    libm::sqrt(v.iter().map(|z| z.norm_sqr()).sum())
}

pub fn rnorm(v: &[f64]) -> f64 {
    libm::sqrt(v.iter().map(|x| x * x).sum())
}

/// Count of entries in a descending spectrum above `rel_tol` times its head.
pub fn rank_of(sigma: &[f64], rel_tol: f64) -> usize {
    let top = sigma.first().copied().unwrap_or(0.0);
    if top <= 0.0 {
        return 0;
    }
    sigma.iter().filter(|&&s| s > rel_tol * top).count()
}

pub fn real_matrix(rows: &[Vec<f64>], cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols, |r, c| rows[r][c])
}

/// Minimum-norm least-squares solution of `a x = b`, discarding singular values
/// below `rcond * sigma_max`.
pub fn lstsq(a: &DMatrix<f64>, b: &[f64], rcond: f64) -> Vec<f64> {
    let cols = a.ncols();
    if cols == 0 || a.nrows() == 0 {
        return alloc::vec![0.0; cols];
    }
    let svd = a.clone().svd(true, true);
    let u = svd.u.expect("left singular vectors requested");
    let vt = svd.v_t.expect("right singular vectors requested");
    let top = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let mut x = alloc::vec![0.0; cols];
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s <= rcond * top || s == 0.0 {
            continue;
        }
        let coeff: f64 = (0..a.nrows()).map(|r| u[(r, k)] * b[r]).sum::<f64>() / s;
        for (c, xc) in x.iter_mut().enumerate() {
            *xc += coeff * vt[(k, c)];
        }
    }
    x
}

/// Numerical rank of the stacked complex rows and an orthonormal basis of their null space.
pub fn complex_null_space(rows: &[Vec<C64>], cols: usize, rel_tol: f64) -> (usize, Vec<Vec<C64>>) {
    let height = rows.len().max(cols);
    let a = DMatrix::from_fn(height, cols, |r, c| {
        if r < rows.len() {
            rows[r][c]
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let svd = a.svd(false, true);
    let vt = svd.v_t.expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let sigma: Vec<f64> = order.iter().map(|&k| svd.singular_values[k]).collect();
    let rank = rank_of(&sigma, rel_tol);
    let null = order[rank..]
        .iter()
        .map(|&k| (0..cols).map(|c| vt[(k, c)].conj()).collect())
        .collect();
    (rank, null)
}

/// Modified Gram-Schmidt, run twice for stability; vectors whose residual norm
/// falls below `drop_tol` are discarded.
pub fn orthonormalize(vectors: &[Vec<f64>], drop_tol: f64) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for v in vectors {
        let mut w = v.clone();
        for _ in 0..2 {
            for q in &out {
                let p: f64 = q.iter().zip(&w).map(|(a, b)| a * b).sum();
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= p * qi;
                }
            }
        }
        let norm = rnorm(&w);
        if norm >= drop_tol {
            out.push(w.iter().map(|x| x / norm).collect());
        }
    }
    out
}
