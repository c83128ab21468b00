//! Quantitative constructions from the foundations of quantum mechanics,
//! evaluated exactly at small Hilbert-space dimension.

pub mod bell;
pub mod bks;
pub mod decoherence;
pub mod error;
pub mod ghz;
pub mod hardy;
pub mod histories;
pub mod linalg;
pub mod nosignal;
pub mod par;
pub mod report;
pub mod rng;
pub mod verify;

pub use error::{Error, Result};
