//! Simulation and fitting toolkit for cavity quantum batteries that store
//! energy in molecular triplet states.
//!
//! The model is a single cavity mode coupled to an effective donor (S0, S1)
//! and an effective acceptor (S0, T1, S1), evolved under a Lindblad master
//! equation with pumping, radiative loss, intersystem crossing and triplet
//! internal conversion.
//!
//! Energies are in eV, rates in GHz (ns⁻¹), times in ns and angles in degrees.

// `!(x <= tol)` style checks reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod fitting;
pub mod hilbert;
pub mod linalg;
pub mod model;
pub mod observables;
pub mod par;
pub mod polaritons;
pub mod protocols;

pub use error::{Error, Result};
pub use par::Execution;
