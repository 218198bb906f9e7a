//! Exact p-adic series arithmetic, twisted polynomials and log-growth estimation
//! for Frobenius equations and p-adic differential equations.

pub mod frobeq;
pub mod nabla;
pub mod ore;
pub mod padics;
pub mod rat;
pub mod series;
pub mod sigma_mod;
pub mod valuations_np;
