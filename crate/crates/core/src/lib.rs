//! Orbit statistics for measure-preserving maps with Haar–Lebesgue invariant
//! measure: circle and torus rotations, expanding circle maps, hyperbolic
//! toral automorphisms and interval exchange transformations.
//!
//! The crate measures the finite-horizon observables that make the classical
//! shrinking-target story quantitative:
//!
//! * first-entry (waiting) times into small balls and their scaling exponents
//!   `log τ / (−log μ(B))` ([`waiting`]),
//! * hit counts `S_N` along a shrinking target sequence and the ratio
//!   `S_N / Σ μ(A_n)` ([`hitstats`]),
//! * continued fractions, `‖Qα‖` scans and constant-type diagnostics
//!   ([`diophantine`]),
//! * interval-exchange discontinuity sets and the minimum-gap profile `δ(n)`
//!   ([`iet`]),
//! * local dimension estimates from ball measures and from waiting times, and
//!   the running minimum of `n^β · d(T^n x, y)` ([`estimators`]).
//!
//! Everything is deterministic: orbits are iterated exactly on a fixed-point
//! lattice (see [`lattice`]), randomness enters only through per-trial seeded
//! generators in [`runner`].

pub mod config;
pub mod diophantine;
pub mod error;
pub mod estimators;
pub mod hitstats;
pub mod iet;
pub mod lattice;
pub mod oracles;
pub mod runner;
pub mod systems;
pub mod targets;
pub mod waiting;

pub use error::{Error, Result};
