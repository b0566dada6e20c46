//! Spatially coupled sparse regression codes (SC-SPARCs) for the AWGN channel.
//!
//! The crate covers code construction from a base matrix, the random design
//! operator (dense Gaussian or subsampled Hadamard), encoding, the AMP
//! decoder with its block-wise variance estimates, and the state evolution
//! recursions (exact and large-system) that predict decoder behaviour.
//!
//! Everything here is pure computation over `alloc` containers. File formats,
//! the CLI and parallel trial execution live in the `scsparc-sim` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod base_matrix;
pub mod codec;
pub mod design;
mod error;
pub mod hadamard;
pub mod params;
pub mod rng;
pub mod state_evolution;

pub use base_matrix::{rate_relation, BaseMatrix};
pub use codec::amp::{amp_decode, AmpConfig, AmpOutcome, AmpTrace};
pub use codec::{
    awgn, denoise, encode, hard_decision, nmse_per_block, section_error_rate, BlockNmse,
    MessageVector,
};
pub use design::{Backend, DesignOperator};
pub use error::{Error, Result};
pub use params::{capacity, convert_rate, BlockLayout, CodeParams, RateUnit};
pub use state_evolution::{
    asymptotic_se, asymptotic_se_band, denoiser_mse, proposition_one, se_recursion,
    DenoiserMse, MseEstimate, PropOneReport, SeMode, SeTrace,
};
