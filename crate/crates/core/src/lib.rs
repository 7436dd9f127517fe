//! Cascaded channel estimation for passive-IRS-aided hybrid MIMO systems.
//!
//! A transmitter and receiver communicate through a passive intelligent
//! reflecting surface (IRS); the direct link is blocked. The end-to-end
//! coupling is captured by the cascaded channel `H = F^T ⋄ G` (Khatri-Rao of
//! the two subchannels), which this crate estimates in two training stages:
//!
//! 1. **Outer angles** — with fixed random IRS phases, the effective channel
//!    is recovered from partial hybrid observations by nuclear-norm-regularized
//!    inductive matrix completion ([`completion`]), then the transmit AoDs and
//!    receive AoAs are extracted with forward-backward spatial smoothing and
//!    root-MUSIC ([`spectral`]).
//! 2. **IRS angles and gains** — beamformed precoders/combiners built from the
//!    Stage-1 angles and a DFT schedule over a switched-on IRS subarray yield
//!    observations whose row space carries the IRS angle differences; these are
//!    estimated with root-MUSIC, and the composite path gains are recovered and
//!    associated by orthogonal matching pursuit over a small parametric
//!    dictionary ([`sparse`]).
//!
//! [`pipeline`] wires the stages together for linear and planar IRS arrays and
//! provides a full-sweep least-squares baseline. The crate performs no I/O and
//! is `no_std`-compatible (`alloc` required); all randomness enters through
//! caller-supplied generators, so trials parallelize and reproduce freely.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod channel;
pub mod completion;
pub mod error;
pub mod frontend;
pub mod geometry;
pub mod linalg;
pub mod pipeline;
pub mod sparse;
pub mod spectral;

#[cfg(test)]
pub(crate) mod test_util;

pub use error::CascadeError;

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
/// Dense complex matrix.
pub type CMat = nalgebra::DMatrix<C64>;
/// Dense complex column vector.
pub type CVec = nalgebra::DVector<C64>;

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, CascadeError>;
