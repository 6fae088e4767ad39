//! Approximate ℓ0-penalized regularization paths for least-squares sparse
//! approximation.
//!
//! Given a dictionary `A` (dense, m×n) and an observation `y`, the penalized
//! subset-selection problem is to minimize `E(S) + λ|S|` over supports `S`,
//! where `E(S)` is the least-squares error of `y` against the columns indexed
//! by `S`. Each support draws a line `λ ↦ E(S) + λ|S|`; the pointwise minimum
//! over all supports is a concave, piecewise-affine curve whose edges carry
//! the optimal supports for every `λ` at once.
//!
//! This crate provides:
//!
//! - [`dict`]: the dictionary/active-set machinery with recursive Cholesky
//!   insertion and removal, so all `n` single-replacement trials of one solver
//!   iteration are cheap;
//! - [`sbr`]: Single Best Replacement, a forward-backward descent of
//!   `E(S) + λ|S|` at a fixed `λ`;
//! - [`csbr`]: continuation SBR, which re-solves at adaptively decreasing
//!   breakpoints and emits an approximate regularization path;
//! - [`polygon`] and [`l0pd`]: the concave-polygon descent solver, which
//!   maintains candidate supports for all `λ` simultaneously;
//! - [`oracle`]: exhaustive ground truth on small instances (exact penalized
//!   and constrained paths, exact curve, structural checks);
//! - [`problems`]: seeded generators for the deconvolution and jump-detection
//!   benchmark families;
//! - [`select`]: model-order selection (MDLc and information criteria) and
//!   the support-recovery scoring protocol.
//!
//! The crate is `no_std` (with `alloc`); IO, file formats and the CLI live in
//! the companion `l0path-cli` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod csbr;
pub mod dict;
pub mod l0pd;
pub mod lstsq;
pub mod path;
mod math;
pub mod oracle;
pub mod polygon;
pub mod problems;
pub mod sbr;
pub mod select;

pub use dict::{ActiveSetState, DictError, Dictionary, Observation, StateError, Support};
pub use path::{Continuity, PathError, PathResult, Producer};
pub use polygon::{ConcavePolygon, LineS};


