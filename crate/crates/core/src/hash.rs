//! Pluggable salted password hashing for vault records.

use sha2::{Digest, Sha256};

/// Digest of `salt || password`. Implementations must be deterministic; the
/// vault compares digests byte-for-byte.
pub trait PasswordHasher: Send + Sync {
    fn digest(&self, salt: &[u8], password: &str) -> Vec<u8>;
}

/// Default hasher: SHA-256 over `salt || password`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sha256Hasher;

impl PasswordHasher for Sha256Hasher {
    fn digest(&self, salt: &[u8], password: &str) -> Vec<u8> {
        let mut hasher = Sha256::new();
        hasher.update(salt);
        hasher.update(password.as_bytes());
        hasher.finalize().to_vec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_depends_on_salt_and_password() {
        let h = Sha256Hasher;
        let a = h.digest(b"0123456789abcdef", "street99");
        assert_eq!(a, h.digest(b"0123456789abcdef", "street99"));
        assert_ne!(a, h.digest(b"fedcba9876543210", "street99"));
        assert_ne!(a, h.digest(b"0123456789abcdef", "street98"));
        assert_eq!(a.len(), 32);
    }
}
