//! Decomposition of a 1-D series into additive mode subseries.
//!
//! Three methods sit behind one interface: variational mode decomposition
//! (frequency-domain ADMM), ensemble empirical mode decomposition (noised
//! sifting averaged over an ensemble), and multi-seasonal decomposition
//! (cycle-subseries loess). [`decompose`] dispatches on the configured kind
//! and always returns a [`ModeSet`] whose modes plus residual sum back to
//! the input. [`param_space`] exposes each method's tunable knobs to the
//! hyperparameter search.

mod config;
mod eemd;
mod emd;
mod error;
mod modeset;
mod mstl;
mod spaces;
mod vmd;

pub use config::{DecompositionConfig, DecompositionKind, EemdParams, MstlParams, VmdInit, VmdParams};
pub use eemd::eemd_decompose;
pub use emd::{emd_sift, EmdResult};
pub use error::DecompError;
pub use modeset::{reconstruct, ModeSet};
pub use mstl::mstl_decompose;
pub use spaces::{apply_sample, param_space};
pub use vmd::vmd_decompose;

pub type Result<T> = std::result::Result<T, DecompError>;

/// Run the decomposition selected by `cfg.kind`.
pub fn decompose(signal: &[f64], cfg: &DecompositionConfig) -> Result<ModeSet> {
    match cfg.kind {
        DecompositionKind::Vmd => vmd_decompose(signal, cfg),
        DecompositionKind::Eemd => eemd_decompose(signal, cfg),
        DecompositionKind::Mstl => mstl_decompose(signal, cfg),
    }
}
