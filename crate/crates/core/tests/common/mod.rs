#![allow(dead_code)]

use ks_core::{build_graph, graph, Basis, KsSetRecord, OrthoGraph, Tolerance, C64};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

pub const CATALOG: [&str; 9] = [
    "peres33",
    "penrose33",
    "schuette33",
    "conway-kochen31",
    "peres24",
    "kernaghan20",
    "pavicic20",
    "cabello18",
    "pavicic24",
];

pub fn load(name: &str) -> KsSetRecord {
    let path = format!("{}/../../catalog/{name}.ks", env!("CARGO_MANIFEST_DIR"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"));
    KsSetRecord::parse(&text).unwrap_or_else(|e| panic!("{path}: {e}"))
}

pub fn graph_and_bases(set: &KsSetRecord) -> (OrthoGraph, Vec<Basis>) {
    let g = build_graph(set, &Tolerance::default());
    let b = graph::verified_bases(set, &g).expect("catalog bases verify");
    (g, b)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform in [-1, 1).
pub fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
}

pub fn below(rng: &mut ChaCha8Rng, n: usize) -> usize {
    (rng.next_u64() % n as u64) as usize
}

pub fn permutation(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        p.swap(i, below(rng, i + 1));
    }
    p
}

/// Row-major unitary from Gram-Schmidt on a random complex matrix.
pub fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
    let mut rows: Vec<Vec<C64>> = Vec::with_capacity(n);
    while rows.len() < n {
        let mut w: Vec<C64> = (0..n)
            .map(|_| C64::new(uniform(rng), uniform(rng)))
            .collect();
        for q in &rows {
            let p: C64 = q.iter().zip(&w).map(|(a, b)| a.conj() * b).sum();
            for (wi, qi) in w.iter_mut().zip(q) {
                *wi -= p * qi;
            }
        }
        let norm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-3 {
            rows.push(w.iter().map(|z| z / norm).collect());
        }
    }
    rows.concat()
}

/// `bases` relabelled by `perm` and re-sorted.
pub fn permute_bases(bases: &[Basis], perm: &[usize]) -> Vec<Basis> {
    let mut out: Vec<Basis> = bases
        .iter()
        .map(|b| Basis::new(b.vertices().iter().map(|&v| perm[v]).collect()))
        .collect();
    out.sort();
    out
}
