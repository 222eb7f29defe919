mod common;

use common::{below, graph_and_bases, load, permutation, permute_bases, rng, CATALOG};
use ks_core::coloring::{brute_force_colourable, delete_vertex};
use ks_core::{check_critical, find_ks_coloring, Basis, ColoringError, OrthoGraph, SearchResult};

const CRITICAL: [(&str, bool); 9] = [
    ("peres33", true),
    ("penrose33", true),
    ("schuette33", true),
    ("conway-kochen31", true),
    ("peres24", false),
    ("kernaghan20", true),
    ("pavicic20", true),
    ("cabello18", true),
    ("pavicic24", false),
];

#[test]
fn catalog_sets_are_uncolourable() {
    for name in CATALOG {
        let (g, b) = graph_and_bases(&load(name));
        let (found, stats) = find_ks_coloring(&g, &b).unwrap();
        assert!(found.is_none(), "{name}");
        assert_eq!(stats.result, SearchResult::Uncolourable, "{name}");
    }
}

#[test]
fn criticality_per_set() {
    for (name, critical) in CRITICAL {
        let set = load(name);
        let (g, b) = graph_and_bases(&set);
        let report = check_critical(&g, &b).unwrap();
        assert_eq!(report.deletions.len(), set.len(), "{name}");
        assert_eq!(report.critical, critical, "{name}");
        assert_eq!(report.non_destroying().is_empty(), critical, "{name}");
    }
}

#[test]
fn deletion_colourings_verify() {
    for name in CATALOG {
        let (g, b) = graph_and_bases(&load(name));
        for v in 0..g.n_vertices() {
            let (g2, b2) = delete_vertex(&g, &b, v);
            if let (Some(c), _) = find_ks_coloring(&g2, &b2).unwrap() {
                assert!(c.is_valid(&g2, &b2), "{name} minus {v}");
            }
        }
    }
}

#[test]
fn colourable_input_rejected() {
    let g = OrthoGraph::from_edges(3, 3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
    let b = vec![Basis::new(vec![0, 1, 2])];
    assert_eq!(
        check_critical(&g, &b),
        Err(ColoringError::AlreadyColourable)
    );
}

#[test]
fn result_is_relabelling_invariant() {
    let mut rng = rng(7);
    for name in CATALOG {
        let (g, b) = graph_and_bases(&load(name));
        let base = check_critical(&g, &b).unwrap();
        for _ in 0..20 {
            let p = permutation(&mut rng, g.n_vertices());
            let gp = g.permuted(&p).unwrap();
            let bp = permute_bases(&b, &p);
            let (found, _) = find_ks_coloring(&gp, &bp).unwrap();
            assert!(found.is_none(), "{name}");
            let report = check_critical(&gp, &bp).unwrap();
            assert_eq!(report.critical, base.critical, "{name}");
            let mut moved: Vec<usize> = base.non_destroying().iter().map(|&v| p[v]).collect();
            moved.sort_unstable();
            assert_eq!(report.non_destroying(), moved, "{name}");
        }
    }
}

/// Induced sub-instance on `keep`, with the bases lying entirely inside it.
fn sub_instance(g: &OrthoGraph, b: &[Basis], keep: &[usize]) -> (OrthoGraph, Vec<Basis>) {
    let mut index = vec![usize::MAX; g.n_vertices()];
    for (new, &old) in keep.iter().enumerate() {
        index[old] = new;
    }
    let bases = b
        .iter()
        .filter(|basis| basis.vertices().iter().all(|&v| index[v] != usize::MAX))
        .map(|basis| Basis::new(basis.vertices().iter().map(|&v| index[v]).collect()))
        .collect();
    (g.induced(keep), bases)
}

#[test]
fn search_agrees_with_brute_force() {
    let mut rng = rng(8);
    let mut outcomes = [0usize; 2];
    for trial in 0..100 {
        let name = CATALOG[trial % CATALOG.len()];
        let (g, b) = graph_and_bases(&load(name));
        let size = 8 + below(&mut rng, 13).min(g.n_vertices() - 8);
        let mut keep = permutation(&mut rng, g.n_vertices());
        keep.truncate(size.min(20));
        let (sg, sb) = sub_instance(&g, &b, &keep);
        let (found, stats) = find_ks_coloring(&sg, &sb).unwrap();
        let brute = brute_force_colourable(&sg, &sb);
        assert_eq!(found.is_some(), brute, "{name} trial {trial}");
        assert_eq!(stats.result == SearchResult::Colourable, brute);
        if let Some(c) = found {
            assert!(c.is_valid(&sg, &sb));
        }
        outcomes[brute as usize] += 1;
    }
    // both outcomes must be exercised for the comparison to mean anything
    assert!(outcomes[0] > 0 && outcomes[1] > 0, "{outcomes:?}");
}
