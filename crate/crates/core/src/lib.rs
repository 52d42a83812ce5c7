//! Back and forth error compensation and correction (BFECC) for transferring
//! fields between structured grids, with tools for measuring convergence.
//!
//! - [`grid`]: uniform, shifted, rotated and smoothly perturbed grids.
//! - [`interp`]: multilinear and local least-squares transfer plans.
//! - [`bfecc`]: the boosted transfers.
//! - [`analysis`]: test functions, error norms, orders, expansion checks.
//! - [`study`]: configurable convergence studies and built-in presets.

pub mod analysis;
pub mod bfecc;
pub mod grid;
pub mod interp;
pub mod study;
