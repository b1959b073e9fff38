//! Space-time discontinuous Galerkin solver for the acoustic wave equation
//! with smoothly varying material coefficients.
//!
//! The discretization works directly on space-time meshes (Cartesian slabs,
//! triangle-prism slabs, 1+1d tent meshes) and uses local polynomial spaces
//! whose members annihilate Taylor expansions of the wave operator at element
//! centers (quasi-Trefftz spaces). The crate provides:
//!
//! - sparse space-time polynomials and multi-index machinery,
//! - material coefficient fields with exact local Taylor data,
//! - mesh generation and causal face classification,
//! - quasi-Trefftz basis construction (second-order and first-order forms),
//! - upwind DG assembly with customizable penalty/stabilization parameters,
//! - causal direct solvers (slab marching and tent work queues),
//! - error norms, energy accounting, and convergence-study drivers.
//!
//! The `examples/` directory carries one runnable program per capability; the
//! thin `qtdg` binary exposes config-driven runs (`run`, `compare`,
//! `mesh-dump`).

pub mod airy;
pub mod analysis;
pub mod assembly;
pub mod basis;
pub mod coefficients;
pub mod driver;
pub mod error;
pub mod linalg;
pub mod mesh;
pub mod multiindex;
pub mod polynomial;
pub mod problems;
pub mod quadrature;
pub mod solver;

pub use error::{Error, Result};
