mod common;

use common::{graph_and_bases, load, permutation, random_unitary, rng, CATALOG};
use ks_core::ray::dot;
use ks_core::rigidity::{
    assemble_constraints, flex, gauge_fix, parameter_count_with_basis, propagate_reconstruct,
    quotient_nullity, residual_gauge_tangents,
};
use ks_core::{build_graph, parameter_count, KsSetRecord, RigidityError, Tolerance, C64};

/// Computed parameter counts. The Peres/Penrose frame has a 3-dimensional
/// first-order null space, two dimensions of which are residual phase gauge.
const PARAMETERS: [(&str, usize); 9] = [
    ("peres33", 1),
    ("penrose33", 1),
    ("schuette33", 0),
    ("conway-kochen31", 0),
    ("peres24", 0),
    ("kernaghan20", 0),
    ("pavicic20", 0),
    ("cabello18", 0),
    ("pavicic24", 0),
];

#[test]
fn frame_and_system_sizes() {
    let tol = Tolerance::default();
    for (name, coords, residues) in [("peres33", 120, 138), ("cabello18", 84, 114)] {
        let set = load(name);
        let (g, b) = graph_and_bases(&set);
        let frame = gauge_fix(&set, &g, &b[0]).unwrap();
        assert_eq!(frame.n_coords(), coords, "{name}");
        let system = assemble_constraints(&frame, &g);
        assert_eq!(system.n_residues(), residues, "{name}");
        assert_eq!(parameter_count(&set, &tol).unwrap().n_residues, residues);
    }
}

#[test]
fn reference_point_satisfies_every_edge() {
    for name in CATALOG {
        let set = load(name);
        let (g, b) = graph_and_bases(&set);
        let frame = gauge_fix(&set, &g, &b[0]).unwrap();
        let zero = vec![0.0; frame.n_coords()];
        let at_zero = frame.point(&zero);
        for (u, r) in at_zero.iter().zip(frame.reference()) {
            assert!(
                u.iter().zip(r).all(|(a, b)| (a - b).norm() <= 1e-12),
                "{name}"
            );
        }
        for (k, &v) in frame.pinned_vertex_order().iter().enumerate() {
            for (i, z) in frame.reference()[v].iter().enumerate() {
                assert_eq!(*z, C64::new((i == k) as u8 as f64, 0.0), "{name}");
            }
        }
        let system = assemble_constraints(&frame, &g);
        assert!(
            system
                .residues(&frame, &zero)
                .iter()
                .all(|r| r.abs() <= 1e-9),
            "{name}"
        );
    }
}

#[test]
fn analytic_jacobian_matches_central_differences() {
    for name in CATALOG {
        let set = load(name);
        let (g, b) = graph_and_bases(&set);
        let frame = gauge_fix(&set, &g, &b[0]).unwrap();
        let system = assemble_constraints(&frame, &g);
        let fd = system.finite_difference_jacobian(&frame, 1e-6);
        let j = system.jacobian();
        for (a, f) in j.iter().zip(fd.iter()) {
            assert!(
                (a - f).abs() <= 1e-6 * a.abs().max(1.0),
                "{name}: {a} vs {f}"
            );
        }
    }
}

#[test]
fn gauge_tangent_counts() {
    for name in CATALOG {
        let set = load(name);
        let (g, b) = graph_and_bases(&set);
        let frame = gauge_fix(&set, &g, &b[0]).unwrap();
        assert_eq!(
            residual_gauge_tangents(&frame).len(),
            set.dim() - 1,
            "{name}"
        );
    }
    let triad = KsSetRecord::parse("name: t\ndim: 3\n1,0,0\n0,1,0\n0,0,1\n").unwrap();
    let (g, b) = graph_and_bases(&triad);
    assert!(residual_gauge_tangents(&gauge_fix(&triad, &g, &b[0]).unwrap()).is_empty());
}

#[test]
fn parameter_counts() {
    let tol = Tolerance::default();
    for (name, expected) in PARAMETERS {
        let r = parameter_count(&load(name), &tol).unwrap();
        assert!(r.conclusive, "{name}: gap {}", r.gap_ratio);
        assert_eq!(r.parameter_count, expected, "{name}");
        assert_eq!(
            r.parameter_count,
            r.null_dim - r.residual_gauge_dim,
            "{name}"
        );
        assert!(r.singular_values.windows(2).all(|w| w[0] >= w[1]));
    }
}

#[test]
fn peres_family_null_space() {
    let tol = Tolerance::default();
    for name in ["peres33", "penrose33"] {
        let r = parameter_count(&load(name), &tol).unwrap();
        assert_eq!((r.null_dim, r.residual_gauge_dim), (3, 2), "{name}");
    }
    // the real Peres rays admit no real deformation at all
    let peres = parameter_count(&load("peres33"), &tol).unwrap();
    assert_eq!(peres.real_restricted_count, Some(0));
}

#[test]
fn count_independent_of_pinned_basis() {
    let tol = Tolerance::default();
    for (name, expected) in PARAMETERS {
        let set = load(name);
        let (_, bases) = graph_and_bases(&set);
        for k in 0..bases.len() {
            let r = parameter_count_with_basis(&set, &tol, k).unwrap();
            assert_eq!(r.parameter_count, expected, "{name} basis {k}");
            assert!(r.conclusive, "{name} basis {k}");
        }
    }
}

#[test]
fn count_independent_of_labelling_and_frame() {
    let tol = Tolerance::default();
    let mut rng = rng(21);
    for (name, expected) in PARAMETERS {
        let set = load(name);
        for _ in 0..20 {
            let p = permutation(&mut rng, set.len());
            let r = parameter_count(&set.permuted(&p).unwrap(), &tol).unwrap();
            assert_eq!(r.parameter_count, expected, "{name}");
        }
        let u = random_unitary(&mut rng, set.dim());
        let r = parameter_count(&set.transformed(&u).unwrap(), &tol).unwrap();
        assert_eq!(r.parameter_count, expected, "{name} rotated");
    }
}

#[test]
fn gauge_rows_leave_the_quotient_unchanged() {
    let tol = Tolerance::default();
    for (name, expected) in PARAMETERS {
        let set = load(name);
        let (g, b) = graph_and_bases(&set);
        let frame = gauge_fix(&set, &g, &b[0]).unwrap();
        let system = assemble_constraints(&frame, &g);
        assert_eq!(quotient_nullity(&frame, &system, &tol), expected, "{name}");
    }
}

#[test]
fn propagation_agrees_with_jacobian() {
    let tol = Tolerance::default();
    for (name, expected) in PARAMETERS {
        let (g, b) = graph_and_bases(&load(name));
        let rec = propagate_reconstruct(&g, &b, 0, &tol).unwrap();
        assert!(rec.consistency, "{name}");
        assert_eq!(rec.parameters_introduced, expected, "{name}");
        // the reconstruction realises the same graph
        let values: Vec<Vec<C64>> = rec.rays.iter().map(|r| r.components().to_vec()).collect();
        let again = KsSetRecord::from_values("r", g.dim(), &values, Default::default()).unwrap();
        assert_eq!(build_graph(&again, &tol), g, "{name}");
    }
}

#[test]
fn propagation_is_seed_deterministic() {
    let tol = Tolerance::default();
    let (g, b) = graph_and_bases(&load("cabello18"));
    let a = propagate_reconstruct(&g, &b, 9, &tol).unwrap();
    let c = propagate_reconstruct(&g, &b, 9, &tol).unwrap();
    assert_eq!(a, c);
}

#[test]
fn flexed_peres_sets_keep_the_graph() {
    let tol = Tolerance::default();
    let set = load("peres33");
    let g = build_graph(&set, &tol);
    let steps = flex(&set, 0, 10, 0.02, &tol).unwrap();
    assert_eq!(steps.len(), 10);
    for (k, s) in steps.iter().enumerate() {
        assert_eq!(s.record.name(), format!("peres33-flex-{:02}", k + 1));
        assert!(s.max_residue <= tol.ortho_tol);
        assert_eq!(build_graph(&s.record, &tol), g);
        let reparsed = KsSetRecord::parse(&s.record.to_text()).unwrap();
        assert_eq!(build_graph(&reparsed, &tol), g);
    }
    // the absolute Gram matrix is unitary-invariant, so a change there means a new set
    let last = &steps.last().unwrap().record;
    let mut biggest: f64 = 0.0;
    for (a, b) in non_edges(&g) {
        let before = dot(set.rays()[a].components(), set.rays()[b].components()).norm();
        let after = dot(last.rays()[a].components(), last.rays()[b].components()).norm();
        biggest = biggest.max((before - after).abs());
    }
    assert!(biggest > 1e-4, "{biggest}");
}

#[test]
fn flex_preconditions() {
    let tol = Tolerance::default();
    let peres = load("peres33");
    assert_eq!(
        flex(&load("cabello18"), 0, 1, 0.02, &tol).unwrap_err(),
        RigidityError::Rigid
    );
    assert_eq!(
        flex(&peres, 1, 1, 0.02, &tol).unwrap_err(),
        RigidityError::DirectionOutOfRange {
            index: 1,
            available: 1
        }
    );
    assert_eq!(
        flex(&peres, 0, 1, 0.5, &tol).unwrap_err(),
        RigidityError::InvalidStepSize(0.5)
    );
    assert_eq!(
        flex(&peres, 0, 1, 0.0, &tol).unwrap_err(),
        RigidityError::InvalidStepSize(0.0)
    );
}

fn non_edges(g: &ks_core::OrthoGraph) -> Vec<(usize, usize)> {
    let n = g.n_vertices();
    (0..n)
        .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
        .filter(|&(a, b)| !g.has_edge(a, b))
        .collect()
}
