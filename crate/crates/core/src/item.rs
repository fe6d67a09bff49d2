//! Behavior items, intake profiles and the transient image payload.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Where a canonical item came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ItemSource {
    Quiz,
    Vision,
    Barcode,
}

/// One scored behavior: a `(domain, option_key)` row of the factor table
/// with a quantity multiplier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CanonicalItem {
    pub domain: String,
    pub option_key: String,
    pub quantity: f64,
    pub source: ItemSource,
}

impl CanonicalItem {
    pub fn new(domain: impl Into<String>, option_key: impl Into<String>, source: ItemSource) -> Self {
        Self {
            domain: domain.into(),
            option_key: option_key.into(),
            quantity: 1.0,
            source,
        }
    }

    pub fn with_quantity(mut self, quantity: f64) -> Self {
        self.quantity = quantity;
        self
    }
}

/// True for non-empty `[a-z0-9_]` tokens.
pub fn is_token(s: &str) -> bool {
    !s.is_empty()
        && s
            .bytes()
            .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == b'_')
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PseudonymError {
    #[error("pseudonym must not be empty")]
    Empty,
    #[error("pseudonym must not contain `@`")]
    LooksLikeEmail,
    #[error("pseudonym is longer than {MAX_PSEUDONYM_LEN} bytes")]
    TooLong,
}

pub const MAX_PSEUDONYM_LEN: usize = 64;

/// Pseudonyms are opaque IDs; anything resembling an email address is refused.
pub fn validate_pseudonym(pseudonym: &str) -> Result<(), PseudonymError> {
    if pseudonym.trim().is_empty() {
        return Err(PseudonymError::Empty);
    }
    if pseudonym.contains('@') {
        return Err(PseudonymError::LooksLikeEmail);
    }
    if pseudonym.len() > MAX_PSEUDONYM_LEN {
        return Err(PseudonymError::TooLong);
    }
    Ok(())
}

/// Image bytes held only for the duration of one request.
///
/// Deliberately implements neither `Serialize` nor `Clone`, and its `Debug`
/// output carries only the length, so the bytes cannot reach a store or a log.
pub struct TransientImage {
    bytes: Vec<u8>,
}

impl TransientImage {
    pub fn new(bytes: Vec<u8>) -> Self {
        Self { bytes }
    }

    pub fn len(&self) -> usize {
        self.bytes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bytes.is_empty()
    }

    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }

    /// Hex SHA-256 of the bytes.
    pub fn digest(&self) -> String {
        use sha2::{Digest, Sha256};
        hex::encode(Sha256::digest(&self.bytes))
    }
}

impl fmt::Debug for TransientImage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TransientImage({} bytes)", self.bytes.len())
    }
}

/// Everything a student submits in one quiz session.
#[derive(Debug, Default)]
pub struct IntakeProfile {
    pub pseudonym: String,
    pub campus: String,
    pub cohort: String,
    pub faculty: String,
    pub quiz: BTreeMap<String, String>,
    pub career_interest: Option<String>,
    pub images: Vec<TransientImage>,
    pub barcodes: Vec<String>,
}

impl IntakeProfile {
    pub fn validate(&self) -> Result<(), PseudonymError> {
        validate_pseudonym(&self.pseudonym)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pseudonym_guard() {
        assert!(validate_pseudonym("quiet-otter").is_ok());
        assert_eq!(validate_pseudonym(""), Err(PseudonymError::Empty));
        assert_eq!(validate_pseudonym("   "), Err(PseudonymError::Empty));
        assert_eq!(
            validate_pseudonym("someone@uni.ac.uk"),
            Err(PseudonymError::LooksLikeEmail)
        );
        assert_eq!(validate_pseudonym(&"x".repeat(65)), Err(PseudonymError::TooLong));
    }

    #[test]
    fn tokens() {
        assert!(is_token("meat_heavy"));
        assert!(is_token("food2"));
        assert!(!is_token("Meat"));
        assert!(!is_token("fast-fashion"));
        assert!(!is_token(""));
    }

    #[test]
    fn transient_image_debug_hides_bytes() {
        let image = TransientImage::new(vec![0xde, 0xad, 0xbe, 0xef]);
        let shown = format!("{image:?}");
        assert_eq!(shown, "TransientImage(4 bytes)");
        assert_eq!(image.digest().len(), 64);
    }

    #[test]
    fn profile_validation_uses_pseudonym_guard() {
        let profile = IntakeProfile {
            pseudonym: "a@b".into(),
            ..Default::default()
        };
        assert!(profile.validate().is_err());
    }
}
