//! KS colourings: exact search and criticality.
//!
//! A colouring puts exactly one 1 in every basis and never two 1s on an edge.
//! Since bases are cliques, "at least one per basis" plus the edge rule is the
//! same condition.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::graph::{Basis, OrthoGraph};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ColoringError {
    #[error("basis {index} is not a clique of the graph")]
    BasisNotClique { index: usize },
    #[error("the input is already colourable")]
    AlreadyColourable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchResult {
    Colourable,
    Uncolourable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchStats {
    pub nodes_explored: u64,
    pub propagations: u64,
    pub result: SearchResult,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coloring {
    values: Vec<u8>,
}

impl Coloring {
    pub fn new(values: Vec<u8>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }

    /// Checks both rules directly, independent of any search.
    pub fn is_valid(&self, graph: &OrthoGraph, bases: &[Basis]) -> bool {
        self.values.len() == graph.n_vertices()
            && self.values.iter().all(|&x| x <= 1)
            && graph
                .edges()
                .iter()
                .all(|&(a, b)| self.values[a] + self.values[b] <= 1)
            && bases.iter().all(|b| {
                b.vertices()
                    .iter()
                    .map(|&v| self.values[v] as usize)
                    .sum::<usize>()
                    == 1
            })
    }
}

const UNSET: i8 = -1;

struct Solver<'a> {
    graph: &'a OrthoGraph,
    bases: &'a [Basis],
    vertex_bases: Vec<Vec<usize>>,
    value: Vec<i8>,
    trail: Vec<usize>,
    nodes: u64,
    propagations: u64,
}

impl<'a> Solver<'a> {
    fn new(graph: &'a OrthoGraph, bases: &'a [Basis]) -> Self {
        let mut vertex_bases = vec![Vec::new(); graph.n_vertices()];
        for (k, b) in bases.iter().enumerate() {
            for &v in b.vertices() {
                vertex_bases[v].push(k);
            }
        }
        Self {
            graph,
            bases,
            vertex_bases,
            value: vec![UNSET; graph.n_vertices()],
            trail: Vec::new(),
            nodes: 0,
            propagations: 0,
        }
    }

    /// Assign and propagate; false on conflict. Assignments stay on the trail either way.
    fn assign(&mut self, v: usize, x: i8) -> bool {
        let mut queue = vec![(v, x)];
        while let Some((v, x)) = queue.pop() {
            if self.value[v] != UNSET {
                if self.value[v] != x {
                    return false;
                }
                continue;
            }
            self.value[v] = x;
            self.trail.push(v);
            self.propagations += 1;
            if x == 1 {
                queue.extend(self.graph.neighbors(v).iter().map(|&u| (u, 0)));
            }
            for &k in &self.vertex_bases[v] {
                let mut ones = 0;
                let mut open = None;
                let mut n_open = 0;
                for &u in self.bases[k].vertices() {
                    match self.value[u] {
                        1 => ones += 1,
                        UNSET => {
                            n_open += 1;
                            open = Some(u);
                        }
                        _ => {}
                    }
                }
                match (ones, n_open) {
                    (o, _) if o > 1 => return false,
                    (0, 0) => return false,
                    (0, 1) => queue.push((open.expect("one open vertex"), 1)),
                    _ => {}
                }
            }
        }
        true
    }

    fn undo(&mut self, mark: usize) {
        for v in self.trail.drain(mark..) {
            self.value[v] = UNSET;
        }
    }

    /// Unassigned vertex in the most bases still lacking a 1; lowest index on ties.
    fn branch_vertex(&self) -> Option<usize> {
        let open_basis: Vec<bool> = self
            .bases
            .iter()
            .map(|b| b.vertices().iter().all(|&u| self.value[u] != 1))
            .collect();
        let mut best: Option<(usize, usize)> = None;
        for v in 0..self.value.len() {
            if self.value[v] != UNSET {
                continue;
            }
            let score = self.vertex_bases[v]
                .iter()
                .filter(|&&k| open_basis[k])
                .count();
            if score > 0 && best.is_none_or(|(_, s)| score > s) {
                best = Some((v, score));
            }
        }
        best.map(|(v, _)| v)
    }

    fn solve(&mut self) -> bool {
        let Some(v) = self.branch_vertex() else {
            return true;
        };
        for x in [1, 0] {
            self.nodes += 1;
            let mark = self.trail.len();
            if self.assign(v, x) && self.solve() {
                return true;
            }
            self.undo(mark);
        }
        false
    }
}

fn check_inputs(graph: &OrthoGraph, bases: &[Basis]) -> Result<(), ColoringError> {
    match bases.iter().position(|b| !b.is_clique_of(graph)) {
        Some(index) => Err(ColoringError::BasisNotClique { index }),
        None => Ok(()),
    }
}

/// Complete DPLL search with unit propagation; branches on 1 before 0.
pub fn find_ks_coloring(
    graph: &OrthoGraph,
    bases: &[Basis],
) -> Result<(Option<Coloring>, SearchStats), ColoringError> {
    check_inputs(graph, bases)?;
    let mut s = Solver::new(graph, bases);
    let found = s.solve();
    let stats = SearchStats {
        nodes_explored: s.nodes,
        propagations: s.propagations,
        result: if found {
            SearchResult::Colourable
        } else {
            SearchResult::Uncolourable
        },
    };
    // vertices never forced or branched on lie in no open basis; 0 is safe for them
    let coloring = found.then(|| Coloring::new(s.value.iter().map(|&x| (x == 1) as u8).collect()));
    Ok((coloring, stats))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Deletion {
    pub vertex: usize,
    pub result: SearchResult,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CriticalityReport {
    pub deletions: Vec<Deletion>,
    /// Every single-vertex deletion is colourable.
    pub critical: bool,
}

impl CriticalityReport {
    /// Vertices whose removal leaves the set uncolourable.
    pub fn non_destroying(&self) -> Vec<usize> {
        self.deletions
            .iter()
            .filter(|d| d.result == SearchResult::Uncolourable)
            .map(|d| d.vertex)
            .collect()
    }
}

/// Remove `v`, its edges and every basis through it; vertices above `v` shift down.
pub fn delete_vertex(graph: &OrthoGraph, bases: &[Basis], v: usize) -> (OrthoGraph, Vec<Basis>) {
    let keep: Vec<usize> = (0..graph.n_vertices()).filter(|&u| u != v).collect();
    let g = graph.induced(&keep);
    let shift = |u: usize| if u > v { u - 1 } else { u };
    let b = bases
        .iter()
        .filter(|b| !b.contains(v))
        .map(|b| Basis::new(b.vertices().iter().map(|&u| shift(u)).collect()))
        .collect();
    (g, b)
}

pub fn check_critical(
    graph: &OrthoGraph,
    bases: &[Basis],
) -> Result<CriticalityReport, ColoringError> {
    let (found, _) = find_ks_coloring(graph, bases)?;
    if found.is_some() {
        return Err(ColoringError::AlreadyColourable);
    }
    let mut deletions = Vec::with_capacity(graph.n_vertices());
    for vertex in 0..graph.n_vertices() {
        let (g, b) = delete_vertex(graph, bases, vertex);
        let (_, stats) = find_ks_coloring(&g, &b)?;
        deletions.push(Deletion {
            vertex,
            result: stats.result,
        });
    }
    let critical = deletions
        .iter()
        .all(|d| d.result == SearchResult::Colourable);
    Ok(CriticalityReport {
        deletions,
        critical,
    })
}

/// Exhaustive check over all `2^n` assignments; for cross-checking the search on small inputs.
pub fn brute_force_colourable(graph: &OrthoGraph, bases: &[Basis]) -> bool {
    let n = graph.n_vertices();
    assert!(n <= 24, "brute force limited to 24 vertices");
    let edges = graph.edges();
    let masks: Vec<u32> = bases
        .iter()
        .map(|b| b.vertices().iter().fold(0u32, |m, &v| m | (1 << v)))
        .collect();
    (0u32..(1u32 << n)).any(|x| {
        masks.iter().all(|&m| (x & m).count_ones() == 1)
            && edges.iter().all(|&(a, b)| (x >> a) & (x >> b) & 1 == 0)
    })
}
