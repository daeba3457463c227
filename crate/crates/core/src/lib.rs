//! Reconstruction of Yang–Mills instantons on the flat hyperkähler model
//! from holomorphic harmonic-space prepotentials, together with residual
//! verification suites for every identity the construction is supposed to
//! satisfy.
//!
//! The crate is organized around the construction pipeline:
//!
//! * [`lie`] — complexified compact Lie algebras, brackets, exponential and
//!   adjoint maps, the Ad-invariant Hermitian norm;
//! * [`harmonics`] — the SL₂(ℂ) fiber, its derivations, charge grading and
//!   SU(2) quadrature;
//! * [`flatspace`] — adapted coordinates on ℝ⁴ⁿ, frame derivations, two-form
//!   decomposition and the instanton conditions;
//! * [`fields`] — an expression DSL for prepotentials, with exact forward-mode
//!   differentiation ([`jet`]);
//! * [`formal`] — a closed-form polynomial engine used both as the oracle for
//!   the numerical path and as the bounded gauge for norm-based estimates;
//! * [`ode`], [`reconstruct`] — the bridge integrator along Borel orbits and
//!   the reconstruction of the full gauge data (second prepotential, plus
//!   components, curvature, central extraction);
//! * [`verify`] — residual suites (instanton conditions, compatibility of the
//!   two prepotentials, lift/flatness conditions, gauge and normalization
//!   conditions);
//! * [`estimates`] — norms, the radial gauge, bound-ratio checks and the
//!   curvature-convergence harness for families of prepotentials.
//!
//! Everything is deterministic: sampling is seeded, grids are fixed by their
//! specs, and reports use ordered containers.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod estimates;
pub mod fields;
pub mod flatspace;
pub mod formal;
pub mod harmonics;
pub mod jet;
pub mod lie;
pub mod mat;
pub mod ode;
pub mod reconstruct;
pub mod report;
pub mod sample;
pub mod tol;
pub mod verify;

pub use num_complex::Complex64;
