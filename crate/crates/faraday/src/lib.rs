//! # faraday
//!
//! A spectral numerical laboratory for the viscous Faraday-wave problem:
//! a layer of incompressible fluid on a vertically oscillating plate,
//! bounded above by a free surface with gravity and surface tension.
//!
//! The moving-domain problem is flattened onto the fixed slab
//! `Omega = Sigma x (-b, 0)` by the harmonic-extension map `Phi`, which turns
//! the free boundary into geometry-dependent coefficients. This crate
//! implements
//!
//! * the discretization substrate (Fourier collocation on the periodic
//!   cross-section, Chebyshev-Lobatto collocation in the vertical,
//!   Sobolev norms, Poisson extension) in [`grid`] and [`field`],
//! * the flattening geometry (`A`, `J`, `K`, twisted differential
//!   operators, mean curvature) in [`geometry`],
//! * the per-mode elliptic solvers (capillary, Stokes with Dirichlet and
//!   stress conditions) in [`elliptic`],
//! * the nonlinear forcing terms of the constant-coefficient form in
//!   [`forcing`],
//! * the energy/dissipation functionals and the energy-dissipation
//!   identity residuals in [`functionals`],
//! * a Floquet stability analyzer with per-wavenumber monodromy matrices
//!   and an inviscid Mathieu oracle in [`floquet`],
//! * a semi-implicit nonlinear time integrator in [`simulate`],
//! * field/report serialization in [`io`] and the operator-facing
//!   command line in [`cli`].

pub mod cli;
pub mod elliptic;
pub mod error;
pub mod field;
pub mod floquet;
pub mod forcing;
pub mod functionals;
pub mod geometry;
pub mod grid;
pub mod io;
pub mod params;
pub mod simulate;

pub use error::{Error, Result};
pub use field::{SurfaceField, SurfaceVector, VolumeField, VolumeVector};
pub use grid::Grid;
pub use params::{OscillationProfile, Params};
