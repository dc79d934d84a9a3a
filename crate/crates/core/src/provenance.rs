//! Content fingerprints embedded in artifacts.

use sha2::{Digest, Sha256};

/// Hex SHA-256 prefix (16 bytes) of `bytes`.
pub fn fingerprint_bytes(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest[..16].iter().map(|b| format!("{b:02x}")).collect()
}
