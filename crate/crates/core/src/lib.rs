//! Metric and spectral invariants of edge-weighted graphs.
//!
//! For a fixed finite simple graph this crate evaluates the girth, the bottom
//! nonzero Laplacian eigenvalue `λ₁` and the weighted spanning-tree number
//! `τ` (equivalently `log det* Δ`) as functions of the edge valuation; maximizes
//! each of them over the deformation spaces P, T and C (see [`graph`]); and
//! produces certificates that a valuation is, or is not, a maximum.
//!
//! | module | contents |
//! |--------|----------|
//! | [`graph`] | graphs, valuations, deformation spaces, projection |
//! | [`metric`] | girth, systoles, distances, diameter |
//! | [`spectral`] | Laplacian, spectrum, `τ`, `log det*`, effective resistances |
//! | [`lp`] | dense two-phase simplex |
//! | [`optimize`] | maximization of girth, `λ₁` and `log τ` |
//! | [`certify`] | Farkas cone tests and extremality certificates |
//! | [`constgrad`] | eigenvectors with constant gradient, cube-like constructions |
//! | [`oracles`] | brute-force ground truth |
//! | [`families`] | named graphs |

mod chart;
pub mod certify;
pub mod constgrad;
pub mod error;
pub mod families;
pub mod graph;
pub mod lp;
pub mod metric;
pub mod optimize;
pub mod oracles;
pub mod spectral;

pub use error::{Error, Result};
pub use graph::{
    build_graph, conformal_lift, project_to_space, tangent_basis, EdgeValuation, Graph, Space,
    TangentBasis, EPS_FLOOR,
};

/// Strict-positivity margin for open-cone and positive-definiteness tests.
pub const DELTA_STRICT: f64 = 1e-7;
