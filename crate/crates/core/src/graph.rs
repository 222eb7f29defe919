//! Orthogonality graphs and the complete bases inside them.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

use thiserror::Error;

use crate::catalog::KsSetRecord;
use crate::ray::{self, Tolerance, C64};

/// Frobenius-norm bound on `sum P_m - I` for a clique to count as a basis.
pub const PROJECTOR_SUM_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("vertex {vertex} out of range for {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error(
        "clique {vertices:?} is not a complete basis (projector sum off identity by {deviation:e})"
    )]
    CliqueNotBasis {
        vertices: Vec<usize>,
        deviation: f64,
    },
    #[error("expected {expected} labels, found {found}")]
    LabelLength { expected: usize, found: usize },
    #[error("permutation of length {found} does not match {expected} vertices")]
    BadPermutation { expected: usize, found: usize },
}

/// Undirected simple graph on `0..n_vertices`; `dim` records the Hilbert-space dimension.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrthoGraph {
    dim: usize,
    n: usize,
    adj: Vec<bool>,
    neighbors: Vec<Vec<usize>>,
}

impl OrthoGraph {
    pub fn from_edges(n: usize, dim: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let mut adj = vec![false; n * n];
        for &(a, b) in edges {
            for v in [a, b] {
                if v >= n {
                    return Err(GraphError::VertexOutOfRange { vertex: v, n });
                }
            }
            if a == b {
                return Err(GraphError::SelfLoop(a));
            }
            adj[a * n + b] = true;
            adj[b * n + a] = true;
        }
        let neighbors = (0..n)
            .map(|v| (0..n).filter(|&u| adj[v * n + u]).collect())
            .collect();
        Ok(Self {
            dim,
            n,
            adj,
            neighbors,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        a < self.n && b < self.n && self.adj[a * self.n + b]
    }

    /// Sorted neighbour list.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.neighbors[v].len()
    }

    /// Edges as `(a, b)` with `a < b`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.n)
            .flat_map(|a| {
                self.neighbors[a]
                    .iter()
                    .filter(move |&&b| b > a)
                    .map(move |&b| (a, b))
            })
            .collect()
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Relabel so that old vertex `v` becomes `perm[v]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self, GraphError> {
        check_permutation(perm, self.n)?;
        let edges: Vec<_> = self
            .edges()
            .iter()
            .map(|&(a, b)| (perm[a], perm[b]))
            .collect();
        Self::from_edges(self.n, self.dim, &edges)
    }

    /// Subgraph induced by `keep`, renumbered in the given order.
    pub fn induced(&self, keep: &[usize]) -> Self {
        let mut index = vec![usize::MAX; self.n];
        for (new, &old) in keep.iter().enumerate() {
            index[old] = new;
        }
        let edges: Vec<_> = self
            .edges()
            .into_iter()
            .filter(|&(a, b)| index[a] != usize::MAX && index[b] != usize::MAX)
            .map(|(a, b)| (index[a], index[b]))
            .collect();
        Self::from_edges(keep.len(), self.dim, &edges).expect("induced edges are in range")
    }

    /// Connected components, each sorted, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.n];
        let mut out = Vec::new();
        for start in 0..self.n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut stack = vec![start];
            let mut comp = Vec::new();
            while let Some(v) = stack.pop() {
                comp.push(v);
                for &u in &self.neighbors[v] {
                    if !seen[u] {
                        seen[u] = true;
                        stack.push(u);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }
}

pub(crate) fn check_permutation(perm: &[usize], n: usize) -> Result<(), GraphError> {
    let mut hit = vec![false; n];
    if perm.len() != n {
        return Err(GraphError::BadPermutation {
            expected: n,
            found: perm.len(),
        });
    }
    for &p in perm {
        if p >= n || hit[p] {
            return Err(GraphError::BadPermutation {
                expected: n,
                found: perm.len(),
            });
        }
        hit[p] = true;
    }
    Ok(())
}

/// A clique of `dim` vertices, stored sorted.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Basis {
    vertices: Vec<usize>,
}

impl Basis {
    pub fn new(mut vertices: Vec<usize>) -> Self {
        vertices.sort_unstable();
        Self { vertices }
    }

    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    pub fn contains(&self, v: usize) -> bool {
        self.vertices.binary_search(&v).is_ok()
    }

    pub fn is_clique_of(&self, graph: &OrthoGraph) -> bool {
        self.vertices.iter().all(|&v| v < graph.n_vertices())
            && self.vertices.iter().enumerate().all(|(k, &a)| {
                self.vertices[k + 1..]
                    .iter()
                    .all(|&b| a != b && graph.has_edge(a, b))
            })
    }
}

pub fn build_graph(set: &KsSetRecord, tol: &Tolerance) -> OrthoGraph {
    let rays = set.rays();
    let mut edges = Vec::new();
    for a in 0..rays.len() {
        for b in a + 1..rays.len() {
            if ray::dot(rays[a].components(), rays[b].components()).norm() <= tol.ortho_tol {
                edges.push((a, b));
            }
        }
    }
    OrthoGraph::from_edges(rays.len(), set.dim(), &edges).expect("edges are in range")
}

/// All `dim`-cliques in lexicographic order, by ordered extension.
pub fn enumerate_bases(graph: &OrthoGraph) -> Vec<Basis> {
    fn extend(g: &OrthoGraph, clique: &mut Vec<usize>, candidates: &[usize], out: &mut Vec<Basis>) {
        if clique.len() == g.dim() {
            out.push(Basis::new(clique.clone()));
            return;
        }
        for (k, &v) in candidates.iter().enumerate() {
            let next: Vec<usize> = candidates[k + 1..]
                .iter()
                .copied()
                .filter(|&u| g.has_edge(v, u))
                .collect();
            if clique.len() + 1 + next.len() < g.dim() {
                continue;
            }
            clique.push(v);
            extend(g, clique, &next, out);
            clique.pop();
        }
    }
    let mut out = Vec::new();
    if graph.dim() == 0 {
        return out;
    }
    let all: Vec<usize> = (0..graph.n_vertices()).collect();
    extend(graph, &mut Vec::new(), &all, &mut out);
    out
}

/// `||sum_m u_m u_m^* - I||_F` over the basis rays.
pub fn projector_sum_deviation(set: &KsSetRecord, basis: &Basis) -> f64 {
    let n = set.dim();
    let mut m = vec![C64::new(0.0, 0.0); n * n];
    for &v in basis.vertices() {
        let u = set.rays()[v].components();
        for r in 0..n {
            for c in 0..n {
                m[r * n + c] += u[r] * u[c].conj();
            }
        }
    }
    let mut sq = 0.0;
    for r in 0..n {
        for c in 0..n {
            let target = if r == c { 1.0 } else { 0.0 };
            sq += (m[r * n + c] - C64::new(target, 0.0)).norm_sqr();
        }
    }
    libm::sqrt(sq)
}

/// Enumerate the bases of `graph` and check each against the resolution of identity.
pub fn verified_bases(set: &KsSetRecord, graph: &OrthoGraph) -> Result<Vec<Basis>, GraphError> {
    let bases = enumerate_bases(graph);
    for b in &bases {
        let deviation = projector_sum_deviation(set, b);
        if !(deviation <= PROJECTOR_SUM_TOL) {
            return Err(GraphError::CliqueNotBasis {
                vertices: b.vertices().to_vec(),
                deviation,
            });
        }
    }
    Ok(bases)
}

/// Sum over bases of the number of vertex pairs each contains.
pub fn basis_pair_incidences(bases: &[Basis]) -> usize {
    bases
        .iter()
        .map(|b| b.vertices().len() * b.vertices().len().saturating_sub(1) / 2)
        .sum()
}

/// A vertex bijection `map` with `{a,b}` an edge of `g1` iff `{map[a], map[b]}` is an edge of `g2`.
///
/// Only the edge structure is compared; `dim` is ignored.
pub fn graph_isomorphic(g1: &OrthoGraph, g2: &OrthoGraph) -> Option<Vec<usize>> {
    let n = g1.n_vertices();
    if n != g2.n_vertices() || g1.edge_count() != g2.edge_count() {
        return None;
    }
    let mut d1: Vec<usize> = (0..n).map(|v| g1.degree(v)).collect();
    let mut d2: Vec<usize> = (0..n).map(|v| g2.degree(v)).collect();
    d1.sort_unstable();
    d2.sort_unstable();
    if d1 != d2 {
        return None;
    }
    let union = Union { g1, g2, n };
    let colours = union.refine(vec![0; 2 * n]);
    union.search(colours)
}

struct Union<'a> {
    g1: &'a OrthoGraph,
    g2: &'a OrthoGraph,
    n: usize,
}

impl Union<'_> {
    fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        let (g, off) = if v < self.n {
            (self.g1, 0)
        } else {
            (self.g2, self.n)
        };
        g.neighbors(v - off).iter().map(move |&u| u + off)
    }

    /// Iterated neighbour-multiset refinement to a stable partition.
    fn refine(&self, mut colours: Vec<usize>) -> Vec<usize> {
        let mut classes = count_classes(&colours);
        loop {
            let signatures: Vec<(usize, Vec<usize>)> = (0..2 * self.n)
                .map(|v| {
                    let mut s: Vec<usize> = self.neighbors(v).map(|u| colours[u]).collect();
                    s.sort_unstable();
                    (colours[v], s)
                })
                .collect();
            let mut ids = BTreeMap::new();
            for s in &signatures {
                let next = ids.len();
                ids.entry(s.clone()).or_insert(next);
            }
            let ranked: BTreeMap<&(usize, Vec<usize>), usize> =
                ids.keys().enumerate().map(|(k, s)| (s, k)).collect();
            colours = signatures.iter().map(|s| ranked[s]).collect();
            let now = count_classes(&colours);
            if now == classes {
                return colours;
            }
            classes = now;
        }
    }

    fn balanced(&self, colours: &[usize]) -> bool {
        let mut tally: BTreeMap<usize, isize> = BTreeMap::new();
        for (v, &c) in colours.iter().enumerate() {
            *tally.entry(c).or_default() += if v < self.n { 1 } else { -1 };
        }
        tally.values().all(|&t| t == 0)
    }

    fn search(&self, colours: Vec<usize>) -> Option<Vec<usize>> {
        if !self.balanced(&colours) {
            return None;
        }
        let mut size: BTreeMap<usize, usize> = BTreeMap::new();
        for &c in &colours[..self.n] {
            *size.entry(c).or_default() += 1;
        }
        let target = size
            .iter()
            .filter(|(_, &s)| s > 1)
            .min_by_key(|(&c, &s)| (s, c))
            .map(|(&c, _)| c);
        let Some(target) = target else {
            let mut map = vec![0; self.n];
            for v in 0..self.n {
                map[v] = (self.n..2 * self.n).find(|&w| colours[w] == colours[v])? - self.n;
            }
            return self.is_isomorphism(&map).then_some(map);
        };
        let v = (0..self.n).find(|&v| colours[v] == target)?;
        let fresh = colours.iter().copied().max().unwrap_or(0) + 1;
        for w in (self.n..2 * self.n).filter(|&w| colours[w] == target) {
            let mut trial = colours.clone();
            trial[v] = fresh;
            trial[w] = fresh;
            if let Some(map) = self.search(self.refine(trial)) {
                return Some(map);
            }
        }
        None
    }

    fn is_isomorphism(&self, map: &[usize]) -> bool {
        self.g1
            .edges()
            .iter()
            .all(|&(a, b)| self.g2.has_edge(map[a], map[b]))
            && self.g1.edge_count() == self.g2.edge_count()
    }
}

fn count_classes(colours: &[usize]) -> usize {
    let mut c = colours.to_vec();
    c.sort_unstable();
    c.dedup();
    c.len()
}

/// Undirected DOT text: node lines in index order, then edges in lexicographic order.
pub fn to_dot(graph: &OrthoGraph, labels: Option<&[String]>) -> Result<String, GraphError> {
    if let Some(l) = labels {
        if l.len() != graph.n_vertices() {
            return Err(GraphError::LabelLength {
                expected: graph.n_vertices(),
                found: l.len(),
            });
        }
    }
    let mut out = String::from("graph ortho {\n");
    for v in 0..graph.n_vertices() {
        match labels {
            Some(l) => {
                let escaped = l[v].replace('\\', "\\\\").replace('"', "\\\"");
                writeln!(out, "  {v} [label=\"{escaped}\"];").unwrap();
            }
            None => writeln!(out, "  {v};").unwrap(),
        }
    }
    for (a, b) in graph.edges() {
        writeln!(out, "  {a} -- {b};").unwrap();
    }
    out.push_str("}\n");
    Ok(out)
}
