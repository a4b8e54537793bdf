//! Phase retrieval from intensities at two planes.

pub mod ga;
pub mod loss;
pub mod modal;
pub mod optim;

pub use ga::{
    ga_blend_crossover, ga_gaussian_mutate, ga_run, ga_tournament_select, GAConfig, GAResult,
    GenerationRecord, Individual, ZernikeCoefficients,
};
pub use loss::{plane_loss, two_plane_loss};
pub use modal::{fit_modal, fit_modal_from, HyggBasis, ModalConfig, ModalDecomposition};
pub use optim::{nelder_mead, Minimum, NelderMeadConfig};
