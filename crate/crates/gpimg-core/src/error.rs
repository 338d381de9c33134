//! Error types shared across the crate.

use alloc::string::String;
use core::fmt;

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;

/// Errors raised by validation and by operations on mismatched inputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// An image violates its invariants (range, dimensions, pixel count).
    InvalidImage(String),
    /// Two grids that must agree in shape do not.
    ShapeMismatch(String),
    /// A latent field contains non-finite values or has bad dimensions.
    InvalidLatent(String),
    /// A dataset is too small or degenerate for the requested operation.
    InsufficientData(String),
    /// A configuration value is out of its documented range.
    InvalidConfig(String),
    /// Serialized feature data cannot be decoded.
    InvalidData(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidImage(msg) => write!(f, "invalid image: {msg}"),
            Error::ShapeMismatch(msg) => write!(f, "shape mismatch: {msg}"),
            Error::InvalidLatent(msg) => write!(f, "invalid latent field: {msg}"),
            Error::InsufficientData(msg) => write!(f, "insufficient data: {msg}"),
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
            Error::InvalidData(msg) => write!(f, "invalid data: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
