//! Device fingerprints and authentication keys from qubit property data.
//!
//! Fixed-frequency transmons land at slightly different frequencies every
//! time a chip is fabricated, and those frequencies barely move between
//! calibration cycles. This crate turns them into keys:
//!
//! * [`calibration`] reads and writes per-cycle device snapshots.
//! * [`fingerprint`] quantizes property offsets into fixed-width bit strings.
//! * [`fuzzy`] is a code-offset fuzzy extractor (BCH by default) that
//!   reproduces a key from a noisy fingerprint plus public helper data.
//! * [`fabsim`] simulates fabrication of whole device populations.
//! * [`challenge`] builds q-tuple challenges and weak/strong CRP tables.
//! * [`analysis`] measures key quality with Hamming weight and distance.
//! * [`service`] runs enrollment and challenge-response authentication
//!   between a verifier and a device agent over TCP.
//!
//! See the `examples/` directory for one runnable walkthrough per area.

pub mod analysis;
pub mod bits;
pub mod calibration;
pub mod challenge;
pub mod cli;
pub mod error;
pub mod fabsim;
pub mod fingerprint;
pub mod fuzzy;
pub mod service;

pub use bits::BitString;
pub use calibration::{DeviceSnapshot, PropertyKind, QubitProperties};
pub use error::{Error, Result};
pub use fingerprint::{EncodingParams, Fingerprint};
pub use fuzzy::{ExtractedKey, HelperData};
