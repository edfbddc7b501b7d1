//! Transfer-matrix scattering through biased layered 1D structures.
//!
//! Energies and potentials are in nm⁻² (units with ħ²/2m* = 1), lengths in nm.

// `!(x > 0.0)` is used on purpose so NaN lands in the error branch
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod airy;
mod dd;
pub mod limits;
pub mod potential;
pub mod resonance;
pub mod scattering;
pub mod sweep;
pub mod transfer;
