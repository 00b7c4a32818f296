//! Randomized Smolyak (sparse grid) quadrature over `[0,1)^D` built from
//! scrambled `(0,m,s)`-nets, plus Haar-wavelet tooling for measuring its
//! randomized error.
//!
//! The crate is organised bottom-up:
//!
//! * [`basis`]: base-`b` digit arithmetic, elementary intervals and
//!   multi-index enumeration.
//! * [`nets`]: deterministic `(0,m,s)`-net generators (behind the
//!   [`nets::NetGenerator`] trait) and an exhaustive net checker.
//! * [`scrambling`]: keyed `b`-ary scramblings of finite depth and the
//!   equal-weight building-block quadratures `U_l`.
//! * [`wavelets`]: Haar wavelets, their coefficients and the `H_alpha` norm.
//! * [`smolyak`]: combination terms, realizations into nodes and weights, and
//!   application to integrands.
//! * [`analysis`]: moment estimators, covariance blocks, the randomized
//!   error estimate and convergence studies.

pub mod analysis;
pub mod basis;
pub mod error;
pub mod integrands;
pub mod linalg;
pub mod nets;
pub mod scrambling;
pub mod smolyak;
pub mod stats;
pub mod wavelets;

pub use error::{Error, Result};
