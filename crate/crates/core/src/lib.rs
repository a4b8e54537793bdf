//! Simulation and analysis of factorized two-photon spatial states.
//!
//! The pipeline runs from synthetic pump and phasematching fields
//! ([`spdc`]), through free-space propagation ([`propagation`]) and 4D
//! coincidence maps, to band-postselected intensity extraction
//! ([`extraction`]) and phase retrieval ([`retrieval`]).

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bessel;
pub mod error;
pub mod extraction;
mod fft;
pub mod field;
pub mod io;
pub mod modes;
pub mod propagation;
pub mod retrieval;
pub mod spdc;

pub use error::{Error, Result};
pub use field::{ComplexField, Curvature, GridSpec, IntensityMap, PhaseMap};
pub use modes::{HyGGSpec, ZernikeTerm};
pub use propagation::{HalfRule, Psi4D};
pub use retrieval::{GAConfig, HyggBasis, Individual, ModalDecomposition, ZernikeCoefficients};
pub use spdc::{BiphotonState, CoincidenceHistogram, PhasematchModel, PumpModel};
