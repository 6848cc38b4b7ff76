//! Computational toolkit for holomorphic functions on the symmetric annulus
//! `A = {1/R < |z| < R}`.
//!
//! Functions are represented as truncated Laurent series ([`laurent`]). On top
//! of that substrate the crate provides the exhaustion seminorms and Fréchet
//! distances of `Hol(A)` ([`domain`]), three-circle analysis ([`analysis`]),
//! the rotation/inversion operators and an isometry classifier
//! ([`operators`]), factorization of functions unimodular on the unit circle
//! ([`factorization`]) and the spectral theory of the isometries, including
//! small-divisor profiles and a Liouville-type construction carried out in
//! certified log space ([`spectral`]). [`cli`] wires everything to a
//! command-line front end with JSON reports.

pub mod analysis;
pub mod cli;
pub mod domain;
pub mod error;
pub mod factorization;
pub mod laurent;
pub mod operators;
pub mod spectral;

pub use error::{AnnulusError, Result};
pub use laurent::{CircleSamples, LaurentSeries};
pub use num_complex::Complex64;
