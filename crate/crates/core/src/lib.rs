//! Intertwined pairs of n-dimensional Schrödinger potentials.
//!
//! A first-order operator `L = L0 + L·∇`, whose differential part is built
//! from translations and rotations of R^n, intertwines `H0 = -∇² + V0` with
//! `H1 = -∇² + V1`. This crate constructs such pairs, checks the
//! integrability conditions on the operator's coefficients, and verifies the
//! intertwining, symmetry and isospectrality claims numerically.

pub mod expr;
pub mod euclid;
pub mod field;
pub mod integrability;
pub mod linalg;
pub mod poly;
pub mod potentials;
pub mod coords;
pub mod output;
pub mod numerics;
pub mod hierarchy;
pub mod cli;
