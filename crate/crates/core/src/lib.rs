//! Polar codes with generalized successive cancellation list (GSCL) decoding.
//!
//! A list decoder whose list size equals `2^γ`, with `γ` the mixing factor of
//! the code, holds every valid prefix of the input vector after the last
//! frozen bit. The path metrics of that list sum to the output density
//! induced by the codebook, which is exactly the denominator of Forney's
//! threshold test. This crate decodes, tests the decision against the
//! threshold, and runs Monte Carlo sweeps of the resulting trade-off between
//! total and undetected error probability.
//!
//! Module map:
//!
//! * [`polar`]: transform, code definition, mixing factor, codebook partition
//! * [`construction`]: BEC and Gaussian-approximation reliabilities, frozen sets
//! * [`channels`]: biAWGN and BEC observations with absolute evidence terms
//! * [`decode`]: SC, SCL, GSCL, the threshold test and brute-force oracles
//! * [`sim`]: seeded, parallel TEP/UEP simulation
//! * [`cli`]: front end for the `polar-gscl` binary

pub mod channels;
pub mod cli;
pub mod construction;
pub mod decode;
mod error;
pub mod polar;
pub mod selfcheck;
pub mod sim;

pub use error::{Error, Result};
pub use polar::PolarCode;
