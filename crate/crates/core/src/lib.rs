//! Monospectral sub-image array encryption and restoration.
//!
//! The pipeline renders a colour scene through a simulated grid of
//! single-channel cameras ([`capture`]), encrypts the grayscale mosaic with
//! a hyperchaos-driven shuffle and cellular-automaton keystream
//! ([`cipher`]), and restores a colour image from the decrypted sub-images
//! with robust multi-frame super-resolution ([`sr`]). [`analysis`] holds the
//! security and quality metrics.

// `!(x >= 0.0)` style checks are there to reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod ca;
pub mod capture;
pub mod cipher;
pub mod error;
pub mod hyperchaos;
pub mod operator;
pub mod plane;
pub mod pnm;
pub mod registry;
pub mod scene;
pub mod sr;

pub use error::{Error, Result};
pub use plane::{Channel, ColorImage, GrayPlane, RealPlane};
