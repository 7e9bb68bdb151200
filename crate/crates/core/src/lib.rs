//! A toolkit for neural networks over finite groups.
//!
//! The crate represents two network kinds — fully-connected networks
//! ([`fnn::Fnn`]) and group-convolutional networks ([`cnn::Cnn`]) — with
//! exact ℓ⁰ weight accounting, converts each into the other with certified
//! weight bounds ([`transpile`]), and verifies translation equivariance and
//! the `|G|^{1/p}` empirical norm identity ([`verify`]).
//!
//! Groups are explicit Cayley tables ([`group::FiniteGroup`]); signals are
//! channel-major vectors over the group ([`signal::ChannelSignal`]); layers
//! are sparse affine maps ([`affine::AffineMap`]), optionally factored
//! through a filter bank ([`cnn::ConvLayer`]). The [`format`] module holds
//! the byte-stable JSON formats shared with the command-line tool, and
//! [`rng`] pins the seeded generator used by every randomized check.

pub mod affine;
pub mod cnn;
pub mod error;
pub mod fnn;
pub mod format;
pub mod group;
pub mod rng;
pub mod signal;
pub mod transpile;
pub mod verify;

pub use error::{Error, Result};
