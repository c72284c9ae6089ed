//! Bivariate information decompositions of discrete joint distributions
//! `P(S, Y, Z)`, with channel-ordering tests, decision risks and
//! secret-key-rate bounds.

// Index loops over several parallel tables read better than zipped iterators.
#![allow(clippy::needless_range_loop)]

mod accel;
pub mod broja;
pub mod decomp;
pub mod decomp_input;
pub mod decomp_output;
pub mod deficiency;
pub mod error;
pub mod oracle;
pub mod probcore;
pub mod secrecy;

pub use decomp::{Components, DecompOptions, Decomposition, MeasureTag};
pub use error::{Error, Result};
