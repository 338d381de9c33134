//! Byte and text encodings for feature vectors.
//!
//! Two interchange formats are supported: a flat binary layout of
//! little-endian 64-bit floats behind an 8-byte little-endian count prefix,
//! and CSV with one feature value per line. Both round-trip losslessly; the
//! CSV side relies on shortest-round-trip float formatting.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write as _;

use crate::error::{Error, Result};
use crate::hog::HogVector;

/// Encodes feature values as a count prefix (u64, little-endian) followed by
/// one little-endian f64 per value.
pub fn hog_to_le_bytes(hog: &HogVector) -> Vec<u8> {
    values_to_le_bytes(hog.values())
}

pub fn values_to_le_bytes(values: &[f64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + 8 * values.len());
    out.extend_from_slice(&(values.len() as u64).to_le_bytes());
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Decodes the binary layout produced by [`hog_to_le_bytes`].
pub fn hog_from_le_bytes(bytes: &[u8]) -> Result<Vec<f64>> {
    if bytes.len() < 8 {
        return Err(Error::InvalidData(format!(
            "binary feature file is {} bytes, shorter than the length prefix",
            bytes.len()
        )));
    }
    let count = u64::from_le_bytes(bytes[..8].try_into().unwrap()) as usize;
    let body = &bytes[8..];
    if body.len() != count * 8 {
        return Err(Error::InvalidData(format!(
            "length prefix says {count} values but {} payload bytes follow",
            body.len()
        )));
    }
    Ok(body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

/// Renders one feature value per line.
pub fn hog_to_csv(hog: &HogVector) -> String {
    values_to_csv(hog.values())
}

pub fn values_to_csv(values: &[f64]) -> String {
    let mut out = String::new();
    for v in values {
        // f64 Display is shortest-round-trip, so parsing recovers the bits.
        writeln!(out, "{v}").expect("writing to String cannot fail");
    }
    out
}

/// Parses the one-value-per-line text form; blank lines are rejected except
/// for a trailing newline.
pub fn hog_from_csv(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            return Err(Error::InvalidData(format!("blank feature on line {}", i + 1)));
        }
        let value: f64 = trimmed
            .parse()
            .map_err(|_| Error::InvalidData(format!("unparseable feature on line {}", i + 1)))?;
        out.push(value);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn binary_rejects_truncation() {
        let bytes = values_to_le_bytes(&[1.0, 2.0, 3.0]);
        assert!(hog_from_le_bytes(&bytes[..bytes.len() - 1]).is_err());
        assert!(hog_from_le_bytes(&bytes[..4]).is_err());
    }

    #[test]
    fn csv_rejects_garbage() {
        assert!(hog_from_csv("1.0\nnot-a-number\n").is_err());
        assert!(hog_from_csv("1.0\n\n2.0\n").is_err());
        assert_eq!(hog_from_csv("").unwrap(), Vec::<f64>::new());
    }

    proptest! {
        #[test]
        fn binary_round_trips(values in proptest::collection::vec(-1e9f64..1e9, 0..64)) {
            let bytes = values_to_le_bytes(&values);
            prop_assert_eq!(hog_from_le_bytes(&bytes).unwrap(), values);
        }

        #[test]
        fn csv_round_trips(values in proptest::collection::vec(-1e9f64..1e9, 0..64)) {
            let text = values_to_csv(&values);
            prop_assert_eq!(hog_from_csv(&text).unwrap(), values);
        }
    }
}
