//! Kingman convolution algebra on the nonnegative orthant, Bessel and
//! Kingman–Lévy processes, and Monte Carlo checks of the identities that
//! tie them together.
//!
//! Everything random is driven by [`rng::StreamSeed`]: a master seed is
//! split into labelled substreams, and each fixed-size chunk of rows or
//! paths draws from its own stream. Results therefore do not depend on the
//! number of threads, or on whether the `parallel` feature is enabled.

#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![cfg_attr(test, allow(clippy::excessive_precision))]

pub mod convolution;
pub mod distributions;
pub mod error;
pub mod fluctuations;
pub mod io;
pub mod kernel;
pub mod par;
pub mod processes;
pub mod radchf;
pub mod rng;
pub mod stats;
pub mod verify;

pub use convolution::{SampleBatch, SignedBatch};
pub use error::{Error, Result};
pub use kernel::KingmanOrder;
pub use radchf::LevyPair;
