//! Kochen-Specker ray sets.
//!
//! Rays in `C^n` and the orthogonality graphs they induce. On top of a graph
//! sit an exact KS-colourability search and a numerical rigidity analysis that
//! counts how many continuous parameters survive its orthogonalities.
//!
//! The crate is `no_std` and needs only `alloc`.

#![no_std]
// `!(x <= tol)` is used on purpose: NaN must fail every threshold test.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod catalog;
pub mod coloring;
pub mod expr;
pub mod graph;
mod linalg;
pub mod ray;
pub mod rigidity;

pub use catalog::{validate_metadata, CatalogError, Expected, KsSetRecord, ValidationReport};
pub use coloring::{
    check_critical, find_ks_coloring, Coloring, ColoringError, CriticalityReport, SearchResult,
    SearchStats,
};
pub use graph::{
    build_graph, enumerate_bases, graph_isomorphic, to_dot, Basis, GraphError, OrthoGraph,
};
pub use ray::{ComplexScalar, Ray, RayError, Tolerance, C64};
pub use rigidity::{parameter_count, RigidityError, RigidityReport};
