//! Sequential reconstruction: pin a basis, complete forced rays, draw random
//! values for under-determined ones, then solve the leftover edges.
//!
//! Bookkeeping for a chosen ray with `k` independent determined neighbours:
//! it lies in an `(n - k)`-dimensional complement spanned by `s_0 .. s_{n-k-1}`
//! and is written `normalize(s_0 + sum_j c_j s_j)` with complex `c_j`, so it
//! introduces `2(n - k - 1)` real parameters; the coefficient of `s_0` is fixed
//! to 1, which absorbs the ray's own phase and scale. The parameters that
//! survive are `m - rank(J_F) - g`, where `J_F` is the Jacobian of the unused
//! edge residues with respect to all `m` drawn values and `g` is the dimension
//! of the diagonal-phase orbit in ray space.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use super::constraints::{max_abs, residues_at};
use super::frame::normalize;
use super::RigidityError;
use crate::catalog::DUPLICATE_OVERLAP;
use crate::graph::{Basis, OrthoGraph};
use crate::linalg::{self, RealSvd};
use crate::ray::{self, Ray, Tolerance, C64};

/// Attempts per reconstruction, each with its own neighbour order and draws.
pub const RETRIES: usize = 8;

const INDEPENDENCE_TOL: f64 = 1e-8;
const PATTERN_MIN_NORM: f64 = 0.3;
const NEWTON_ITERATIONS: usize = 200;
const FD_STEP: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Attempt {
    pub seed: u64,
    pub parameters_drawn: usize,
    pub jacobian_rank: usize,
    pub gauge_dim: usize,
    pub max_residue: f64,
    pub consistent: bool,
    /// `parameters_drawn - jacobian_rank - gauge_dim`, when non-negative.
    pub count: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    /// Canonical rays of the best attempt, in vertex order.
    pub rays: Vec<Ray>,
    pub parameters_introduced: usize,
    pub consistency: bool,
    /// Attempts grouped per connected component, in component order.
    pub attempts: Vec<Vec<Attempt>>,
}

/// Reconstruct every connected component from its orthogonality graph and sum
/// the minimum consistent parameter count over [`RETRIES`] attempts each.
pub fn propagate_reconstruct(
    graph: &OrthoGraph,
    bases: &[Basis],
    seed: u64,
    tol: &Tolerance,
) -> Result<Reconstruction, RigidityError> {
    let n = graph.dim();
    let mut rays = vec![Vec::new(); graph.n_vertices()];
    let mut total = 0;
    let mut consistency = true;
    let mut attempts = Vec::new();
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    for comp in graph.components() {
        let sub = graph.induced(&comp);
        let mut index = vec![usize::MAX; graph.n_vertices()];
        for (k, &v) in comp.iter().enumerate() {
            index[v] = k;
        }
        let local: Vec<Basis> = bases
            .iter()
            .filter(|b| b.vertices().iter().all(|&v| index[v] != usize::MAX))
            .map(|b| Basis::new(b.vertices().iter().map(|&v| index[v]).collect()))
            .collect();
        let Some(pin) = local.first() else {
            return Err(RigidityError::NoBasis);
        };
        let mut results: Vec<(Attempt, Vec<Vec<C64>>)> = (0..RETRIES)
            .map(|_| attempt(&sub, pin, n, master.next_u64(), tol))
            .collect();
        let best = results
            .iter()
            .enumerate()
            .filter(|(_, (a, _))| a.consistent)
            .min_by_key(|(_, (a, _))| a.count)
            .map(|(k, _)| k);
        let pick = match best {
            Some(k) => k,
            None => {
                consistency = false;
                (0..RETRIES)
                    .min_by_key(|&k| results[k].0.count.unwrap_or(usize::MAX))
                    .unwrap_or(0)
            }
        };
        total += results[pick].0.count.unwrap_or(0);
        let chosen = core::mem::take(&mut results[pick].1);
        for (k, &v) in comp.iter().enumerate() {
            rays[v] = chosen[k].clone();
        }
        attempts.push(results.into_iter().map(|(a, _)| a).collect());
    }
    let rays = rays
        .iter()
        .map(|u| ray::canonicalize_values(u))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| RigidityError::NoBasis)?;
    Ok(Reconstruction {
        rays,
        parameters_introduced: total,
        consistency,
        attempts,
    })
}

#[derive(Debug, Clone)]
enum Step {
    Force {
        v: usize,
        nbrs: Vec<usize>,
    },
    Choose {
        v: usize,
        nbrs: Vec<usize>,
        pattern: Vec<usize>,
    },
}

impl Step {
    fn vertex(&self) -> usize {
        match self {
            Step::Force { v, .. } | Step::Choose { v, .. } => *v,
        }
    }

    fn neighbours(&self) -> &[usize] {
        match self {
            Step::Force { nbrs, .. } | Step::Choose { nbrs, .. } => nbrs,
        }
    }
}

struct Plan {
    n: usize,
    n_vertices: usize,
    pin: Vec<usize>,
    steps: Vec<Step>,
}

impl Plan {
    /// Rays for drawn values `p`; `None` where a forced completion degenerates.
    fn eval(&self, p: &[f64]) -> Option<Vec<Vec<C64>>> {
        let n = self.n;
        let mut rays = vec![Vec::new(); self.n_vertices];
        for (k, &v) in self.pin.iter().enumerate() {
            rays[v] = unit(n, k);
        }
        let mut used = 0;
        for step in &self.steps {
            match step {
                Step::Force { v, nbrs } => {
                    let rows: Vec<&[C64]> = nbrs.iter().map(|&u| rays[u].as_slice()).collect();
                    rays[*v] = cofactor(&rows)?;
                }
                Step::Choose { v, nbrs, pattern } => {
                    let rows: Vec<&[C64]> = nbrs.iter().map(|&u| rays[u].as_slice()).collect();
                    let span = complement(&rows, n, pattern)?;
                    let mut x = span[0].clone();
                    for s in &span[1..] {
                        let c = C64::new(p[used], p[used + 1]);
                        used += 2;
                        for (xi, si) in x.iter_mut().zip(s) {
                            *xi += c * si;
                        }
                    }
                    let norm = linalg::cnorm(&x);
                    if !(norm > 1e-12) {
                        return None;
                    }
                    normalize(&mut x);
                    rays[*v] = x;
                }
            }
        }
        Some(rays)
    }
}

fn unit(n: usize, k: usize) -> Vec<C64> {
    let mut e = vec![C64::new(0.0, 0.0); n];
    e[k] = C64::new(1.0, 0.0);
    e
}

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    ((rng.next_u64() >> 11) as f64) * (1.0 / (1u64 << 53) as f64) * 2.0 - 1.0
}

/// The `(n-1)`-minor vector orthogonal to `n - 1` rows; smooth in its inputs.
fn cofactor(rows: &[&[C64]]) -> Option<Vec<C64>> {
    let n = rows.len() + 1;
    let mut w: Vec<C64> = (0..n)
        .map(|k| {
            let minor = DMatrix::from_fn(n - 1, n - 1, |r, c| {
                let col = if c < k { c } else { c + 1 };
                rows[r][col].conj()
            });
            let d = minor.determinant();
            if k % 2 == 0 {
                d
            } else {
                -d
            }
        })
        .collect();
    let norm = linalg::cnorm(&w);
    if !(norm > 1e-12) {
        return None;
    }
    for z in &mut w {
        *z /= norm;
    }
    Some(w)
}

fn subtract_projection(w: &mut [C64], q: &[C64]) {
    let p = ray::dot(q, w);
    for (wi, qi) in w.iter_mut().zip(q) {
        *wi -= p * qi;
    }
}

/// Orthonormal basis of the span of `rows`, dropping near-dependent ones.
fn span_basis(rows: &[&[C64]]) -> Vec<Vec<C64>> {
    let mut q: Vec<Vec<C64>> = Vec::new();
    for r in rows {
        let mut w = r.to_vec();
        for _ in 0..2 {
            for b in &q {
                subtract_projection(&mut w, b);
            }
        }
        let norm = linalg::cnorm(&w);
        if norm > 1e-8 {
            for z in &mut w {
                *z /= norm;
            }
            q.push(w);
        }
    }
    q
}

/// Standard vectors `e_k`, `k` in `pattern`, projected off `rows` and each other.
fn complement(rows: &[&[C64]], n: usize, pattern: &[usize]) -> Option<Vec<Vec<C64>>> {
    let mut q = span_basis(rows);
    let mut out = Vec::with_capacity(pattern.len());
    for &k in pattern {
        let mut w = unit(n, k);
        for _ in 0..2 {
            for b in &q {
                subtract_projection(&mut w, b);
            }
        }
        let norm = linalg::cnorm(&w);
        if !(norm > 1e-8) {
            return None;
        }
        for z in &mut w {
            *z /= norm;
        }
        q.push(w.clone());
        out.push(w);
    }
    Some(out)
}

/// Pick standard vectors for the complement: the first with projected norm
/// above [`PATTERN_MIN_NORM`] each round, else the largest.
fn choose_pattern(rows: &[&[C64]], n: usize) -> Vec<usize> {
    let mut q = span_basis(rows);
    let need = n - q.len();
    let mut pattern = Vec::with_capacity(need);
    for _ in 0..need {
        let mut candidates: Vec<(usize, Vec<C64>, f64)> = (0..n)
            .filter(|k| !pattern.contains(k))
            .map(|k| {
                let mut w = unit(n, k);
                for _ in 0..2 {
                    for b in &q {
                        subtract_projection(&mut w, b);
                    }
                }
                let norm = linalg::cnorm(&w);
                (k, w, norm)
            })
            .collect();
        let pick = match candidates.iter().position(|c| c.2 > PATTERN_MIN_NORM) {
            Some(i) => i,
            None => (0..candidates.len())
                .max_by(|&a, &b| candidates[a].2.total_cmp(&candidates[b].2))
                .expect("a standard vector remains"),
        };
        let (k, mut w, norm) = candidates.swap_remove(pick);
        for z in &mut w {
            *z /= norm;
        }
        q.push(w);
        pattern.push(k);
    }
    pattern
}

/// Determined neighbours of `v`, in `order`, greedily kept while independent.
fn independent_neighbours(
    graph: &OrthoGraph,
    rays: &[Option<Vec<C64>>],
    order: &[usize],
    v: usize,
) -> Vec<usize> {
    let mut kept: Vec<usize> = Vec::new();
    for &u in order {
        if rays[u].is_none() || !graph.has_edge(u, v) {
            continue;
        }
        let mut rows: Vec<Vec<C64>> = kept
            .iter()
            .map(|&w| rays[w].clone().expect("determined"))
            .collect();
        rows.push(rays[u].clone().expect("determined"));
        let (rank, _) = linalg::complex_null_space(&rows, graph.dim(), INDEPENDENCE_TOL);
        if rank == rows.len() {
            kept.push(u);
        }
    }
    kept
}

fn make_plan(
    graph: &OrthoGraph,
    pin: &Basis,
    rng: &mut ChaCha8Rng,
    tol: &Tolerance,
) -> (Plan, Vec<f64>) {
    let n = graph.dim();
    let nv = graph.n_vertices();
    let mut order: Vec<usize> = (0..nv).collect();
    for i in (1..nv).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        order.swap(i, j);
    }
    let mut rays: Vec<Option<Vec<C64>>> = vec![None; nv];
    for (k, &v) in pin.vertices().iter().enumerate() {
        rays[v] = Some(unit(n, k));
    }
    let mut steps = Vec::new();
    let mut params = Vec::new();
    while rays.iter().any(Option::is_none) {
        let mut forced = None;
        let mut best: Option<(usize, Vec<usize>)> = None;
        for v in (0..nv).filter(|&v| rays[v].is_none()) {
            let ind = independent_neighbours(graph, &rays, &order, v);
            if ind.len() + 1 >= n {
                let nbrs: Vec<usize> = ind[..n - 1].to_vec();
                let inputs: Vec<Ray> = nbrs
                    .iter()
                    .map(|&u| ray::canonicalize_values(rays[u].as_ref().expect("determined")))
                    .collect::<Result<_, _>>()
                    .expect("determined rays are unit vectors");
                if let Ok(r) = ray::orthogonal_complement_ray(&inputs, n, tol) {
                    forced = Some((v, nbrs, r.components().to_vec()));
                    break;
                }
            }
            if best.as_ref().is_none_or(|(_, b)| ind.len() > b.len()) {
                best = Some((v, ind));
            }
        }
        if let Some((v, nbrs, r)) = forced {
            rays[v] = Some(r);
            steps.push(Step::Force { v, nbrs });
            continue;
        }
        let (v, nbrs) = best.expect("an undetermined vertex exists");
        let rows: Vec<&[C64]> = nbrs
            .iter()
            .map(|&u| rays[u].as_deref().expect("determined"))
            .collect();
        let pattern = choose_pattern(&rows, n);
        let span = complement(&rows, n, &pattern).expect("pattern vectors are independent");
        let mut x = span[0].clone();
        for s in &span[1..] {
            let c = C64::new(uniform(rng), uniform(rng));
            params.push(c.re);
            params.push(c.im);
            for (xi, si) in x.iter_mut().zip(s) {
                *xi += c * si;
            }
        }
        normalize(&mut x);
        rays[v] = Some(x);
        steps.push(Step::Choose { v, nbrs, pattern });
    }
    let plan = Plan {
        n,
        n_vertices: nv,
        pin: pin.vertices().to_vec(),
        steps,
    };
    (plan, params)
}

fn attempt(
    graph: &OrthoGraph,
    pin: &Basis,
    n: usize,
    seed: u64,
    tol: &Tolerance,
) -> (Attempt, Vec<Vec<C64>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (plan, mut p) = make_plan(graph, pin, &mut rng, tol);
    let mut used = vec![false; graph.n_vertices() * graph.n_vertices()];
    let mut mark = |a: usize, b: usize| {
        used[a * graph.n_vertices() + b] = true;
        used[b * graph.n_vertices() + a] = true;
    };
    for (i, &a) in pin.vertices().iter().enumerate() {
        for &b in &pin.vertices()[i + 1..] {
            mark(a, b);
        }
    }
    for s in &plan.steps {
        for &u in s.neighbours() {
            mark(s.vertex(), u);
        }
    }
    let cons: Vec<(usize, usize)> = graph
        .edges()
        .into_iter()
        .filter(|&(a, b)| !used[a * graph.n_vertices() + b])
        .collect();
    let residual = |p: &[f64]| -> Option<Vec<f64>> { plan.eval(p).map(|r| residues_at(&r, &cons)) };
    let norm = |f: &Option<Vec<f64>>| match f {
        Some(f) => linalg::rnorm(f),
        None => f64::INFINITY,
    };
    let jacobian = |p: &[f64]| -> Option<DMatrix<f64>> {
        let mut j = DMatrix::zeros(2 * cons.len(), p.len());
        let mut q = p.to_vec();
        for c in 0..p.len() {
            q[c] = p[c] + FD_STEP;
            let plus = residual(&q)?;
            q[c] = p[c] - FD_STEP;
            let minus = residual(&q)?;
            q[c] = p[c];
            for r in 0..plus.len() {
                j[(r, c)] = (plus[r] - minus[r]) / (2.0 * FD_STEP);
            }
        }
        Some(j)
    };

    if !p.is_empty() && !cons.is_empty() {
        for _ in 0..NEWTON_ITERATIONS {
            let f = residual(&p);
            let Some(fv) = f.as_ref() else { break };
            if max_abs(fv) < 1e-13 {
                break;
            }
            let Some(j) = jacobian(&p) else { break };
            let step: Vec<f64> = linalg::lstsq(&j, fv, 1e-10).iter().map(|x| -x).collect();
            let base = norm(&f);
            let mut t = 1.0;
            loop {
                let trial: Vec<f64> = p.iter().zip(&step).map(|(a, b)| a + t * b).collect();
                if norm(&residual(&trial)) < base || t <= 1e-4 {
                    p = trial;
                    break;
                }
                t /= 2.0;
            }
        }
    }

    let rays = plan.eval(&p);
    let f = residual(&p);
    let max_residue = f.as_deref().map_or(f64::INFINITY, max_abs);
    let mut consistent = max_residue <= tol.ortho_tol;
    if let Some(r) = &rays {
        consistent &= same_graph(graph, r, tol) && distinct(r);
    } else {
        consistent = false;
    }
    let m = p.len();
    let jacobian_rank = if m == 0 || cons.is_empty() {
        0
    } else {
        match jacobian(&p) {
            Some(j) => {
                let svd = RealSvd::new(&j);
                let top = svd.max().max(1.0);
                svd.sigma
                    .iter()
                    .filter(|&&s| s > tol.rank_tol * top)
                    .count()
            }
            None => 0,
        }
    };
    let gauge_dim = rays.as_deref().map_or(0, |r| gauge_orbit_dim(r, n));
    let count = m.checked_sub(jacobian_rank + gauge_dim);
    consistent &= count.is_some();
    let out_rays = rays.unwrap_or_else(|| vec![unit(n, 0); graph.n_vertices()]);
    (
        Attempt {
            seed,
            parameters_drawn: m,
            jacobian_rank,
            gauge_dim,
            max_residue,
            consistent,
            count,
        },
        out_rays,
    )
}

fn same_graph(graph: &OrthoGraph, rays: &[Vec<C64>], tol: &Tolerance) -> bool {
    (0..rays.len()).all(|a| {
        (a + 1..rays.len())
            .all(|b| (ray::dot(&rays[a], &rays[b]).norm() <= tol.ortho_tol) == graph.has_edge(a, b))
    })
}

fn distinct(rays: &[Vec<C64>]) -> bool {
    (0..rays.len()).all(|a| {
        (a + 1..rays.len()).all(|b| ray::dot(&rays[a], &rays[b]).norm() <= DUPLICATE_OVERLAP)
    })
}

/// Dimension of the diagonal-phase orbit through `rays`, modulo per-ray phase.
fn gauge_orbit_dim(rays: &[Vec<C64>], n: usize) -> usize {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|m| {
            let mut row = Vec::with_capacity(2 * n * rays.len());
            for u in rays {
                let mut du = vec![C64::new(0.0, 0.0); n];
                du[m] = C64::new(0.0, 1.0) * u[m];
                subtract_projection(&mut du, u);
                row.extend(du.iter().map(|z| z.re));
                row.extend(du.iter().map(|z| z.im));
            }
            row
        })
        .collect();
    let cols = 2 * n * rays.len();
    let svd = RealSvd::new(&linalg::real_matrix(&rows, cols));
    let top = svd.max().max(1.0);
    svd.sigma.iter().filter(|&&s| s > 1e-8 * top).count()
}
