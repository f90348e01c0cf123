//! Certified search on the trivalent tree of Markoff triples attached to the
//! four-holed sphere.
//!
//! The library decides the two Bowditch Q-conditions for a character given by
//! a triple `(x, y, z)` and parameters `mu = (p, q, r, s)`:
//!
//! 1. no essential simple closed curve has trace in the real segment
//!    `[-2, 2]`, and
//! 2. only finitely many have trace modulus at most `L(mu)`.
//!
//! On top of the decision procedure it classifies real relative character
//! varieties, builds explicit accepted seeds on real slices, and rasterizes
//! two-dimensional slices of the acceptance set to portable pixmaps.
//!
//! Entry points, by module:
//!
//! - [`algebra`] — the vertex equation, involutions and twists, degenerate
//!   quartics, derived constants.
//! - [`tree`] — vertex states with rational slope labels, navigation,
//!   Fibonacci weights.
//! - [`dynamics`] — neighbor sequences around a region: spectra, conic
//!   centers, closed forms, bounded windows.
//! - [`bq`] — the decision procedure itself ([`bq::bq_test`]).
//! - [`realcase`] — real topology, the ergodicity criterion, and seed
//!   construction.
//! - [`render`] — slice rasterization and PPM output.
//! - [`cli`] — the command-line front end used by the `bqmap` binary.
//!
//! The `examples/` directory has one runnable program per capability; start
//! with `cargo run --example bq_decision`.

pub mod algebra;
pub mod bq;
pub mod cli;
pub mod dynamics;
pub mod quartic;
pub mod realcase;
pub mod render;
pub mod tree;

pub use algebra::{
    apply_theta, apply_twist, derived_constants, gt_map, vertex_residual, BoundaryTraces, Color,
    DerivedConstants, MarkoffTriple, MuParams, Twist,
};
pub use bq::{bq_test, omega_k, BqVerdict, SearchBudget, Tolerances};
pub use realcase::{classify_real, construct_real_seed, ergodicity_decision};
pub use tree::{base_state, fibonacci_weight, trace_at_slope, Slope, VertexState};
