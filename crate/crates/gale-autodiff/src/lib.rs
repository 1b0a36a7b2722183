//! Reverse-mode automatic differentiation on a flat tape, sized for small
//! sequence models trained on the CPU.
//!
//! A [`Tape`] records every primitive as it executes; [`Tape::backward`]
//! walks the records in reverse and accumulates gradients per node.
//! Trainable tensors live in a [`ParamStore`] keyed by [`ParamId`], which
//! also owns the seeded RNG used for initialization so a seed fully
//! determines the starting weights. [`adam_step`] applies bias-corrected
//! Adam updates, [`lstm_cell`] builds one recurrent step from primitives,
//! and [`gradcheck`] provides the finite-difference oracle the tests use
//! to validate every backward rule.

mod checkpoint;
mod error;
pub mod gradcheck;
mod nn;
mod params;
mod tape;
mod tensor;

pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointManifest, ParamEntry};
pub use error::AutodiffError;
pub use nn::{dropout, lstm_cell, LstmCellWeights, LstmParamIds};
pub use params::{adam_step, AdamConfig, ParamId, ParamStore, Parameter};
pub use tape::{NodeId, Tape};
pub use tensor::Tensor;

pub type Result<T> = std::result::Result<T, AutodiffError>;
