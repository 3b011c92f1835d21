//! Digital self-interference cancellation for full-duplex radios.
//!
//! The crate simulates self-interference (SI) in two block-structured
//! configurations, a Hammerstein path (arctan PA followed by a multipath
//! channel) and a Wiener path (channel followed by LNA gain and A/D
//! clipping), trains five cancellation models on them, and reports the
//! self-interference attenuation (SIA) each model achieves alongside its
//! parameter and compute budget.
//!
//! Modules, bottom-up:
//! - [`signal`]: QPSK-OFDM transmit synthesis, Welch PSD, `cs16k v1` files.
//! - [`frontend`]: PA and A/D nonlinearities, channel, noise, datasets.
//! - [`neuralnet`]: the five architectures with analytic gradients.
//! - [`training`]: MSE, Adam, least-squares premodeling, gradient checks.
//! - [`evaluation`]: SIA and the model × dataset comparison grid.
//! - [`harness`]: configuration, dataset cache and the CLI.

pub mod error;
pub mod evaluation;
pub mod frontend;
pub mod harness;
pub mod neuralnet;
pub mod par;
pub mod rng;
pub mod signal;
pub mod training;

pub use error::{Error, Result};
