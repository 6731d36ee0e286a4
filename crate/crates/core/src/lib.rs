//! Conserved observables of finite-dimensional non-Hermitian Hamiltonians.
//!
//! A Hermitian operator `η` is conserved under `i∂ₜψ = Hψ` exactly when it
//! intertwines the Hamiltonian with its adjoint, `ηH = H†η`. This crate
//! builds the full set of such operators three ways (spectral projections,
//! a recursive tower, and a brute-force linear solve), counts them at
//! diabolic and exceptional degeneracies, and checks conservation under
//! continuous, identity-shifted and stroboscopic (Floquet) evolution.
//!
//! Module map:
//!
//! * [`matrix`]: dense complex primitives (exponential, nullspace,
//!   Hermitian splitting, real-linear independence counting).
//! * [`spectral`]: biorthogonal eigendecomposition, degeneracy
//!   classification, Jordan chains, spectrum symmetry classes.
//! * [`intertwine`]: construction and verification of intertwining operators.
//! * [`models`]: spin, Hatano–Nelson, electric-circuit and dimer Hamiltonians.
//! * [`dynamics`]: evolution, drift reports, passive shifts and Floquet drives.
//! * [`io`]: JSON and CSV formats shared with the command-line tool.

pub mod dynamics;
pub mod error;
pub mod intertwine;
pub mod io;
pub mod matrix;
pub mod models;
pub mod spectral;

pub use error::{Error, Result};
pub use matrix::{CMatrix, CVector, OperatorBasis, C64, DEFAULT_TOL};
