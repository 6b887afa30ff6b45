//! The user-chosen random string appended to the password.
//!
//! A `RandomString` is the secret the whole scheme revolves around. It is
//! validated against a specific ring (membership and no repeats), turned
//! into a distance chain at registration, and then discarded: the system
//! never persists it anywhere.

use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::hcl::HoneyCircularList;

/// Default random-string length.
pub const DEFAULT_RS_LEN: usize = 3;

/// Minimum random-string length: one paired distance needs two characters.
pub const MIN_RS_LEN: usize = 2;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RsError {
    #[error("random string must have at least {MIN_RS_LEN} characters, got {0}")]
    TooShort(usize),
    #[error("random string is longer than the ring ({len} > {ring})")]
    TooLong { len: usize, ring: usize },
    #[error("character {0:?} is not on the ring")]
    NotOnRing(char),
    #[error("character {0:?} repeats; random-string characters must be distinct")]
    RepeatedChar(char),
}

/// A length-`l` string of distinct ring characters.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RandomString {
    chars: String,
}

impl RandomString {
    /// Validates `s` against `hcl`: length in `2..=ring len`, every
    /// character a ring member, no repeats. Uppercase and any other foreign
    /// character are rejected, not folded.
    pub fn parse(hcl: &HoneyCircularList, s: &str) -> Result<Self, RsError> {
        let n = s.chars().count();
        if n < MIN_RS_LEN {
            return Err(RsError::TooShort(n));
        }
        if n > hcl.len() {
            return Err(RsError::TooLong { len: n, ring: hcl.len() });
        }
        let mut seen = [false; 128];
        for c in s.chars() {
            if !hcl.contains(c) {
                return Err(RsError::NotOnRing(c));
            }
            if seen[c as usize] {
                return Err(RsError::RepeatedChar(c));
            }
            seen[c as usize] = true;
        }
        Ok(Self { chars: s.to_string() })
    }

    /// Uniformly random string of `len` distinct ring characters.
    pub fn generate(
        hcl: &HoneyCircularList,
        len: usize,
        rng: &mut impl Rng,
    ) -> Result<Self, RsError> {
        if len < MIN_RS_LEN {
            return Err(RsError::TooShort(len));
        }
        if len > hcl.len() {
            return Err(RsError::TooLong { len, ring: hcl.len() });
        }
        let mut pool: Vec<char> = hcl.chars().collect();
        let (picked, _) = pool.partial_shuffle(rng, len);
        Ok(Self { chars: picked.iter().collect() })
    }

    /// Wraps characters produced by a collision-checked ring walk. Walks of
    /// an empty chain yield single-character strings, shorter than anything
    /// [`Self::parse`] accepts, so this stays crate-internal.
    pub(crate) fn from_trusted_walk(chars: String) -> Self {
        Self { chars }
    }

    pub fn len(&self) -> usize {
        self.chars.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// First character; the only part of the string the checker ever sees.
    pub fn first(&self) -> char {
        self.chars.as_bytes()[0] as char
    }

    pub fn char_at(&self, i: usize) -> char {
        self.chars.as_bytes()[i] as char
    }

    pub fn chars(&self) -> impl Iterator<Item = char> + '_ {
        self.chars.chars()
    }

    pub fn as_str(&self) -> &str {
        &self.chars
    }

    /// Overwrites the buffer before dropping; used where a derived string
    /// must not outlive the step that needed it.
    pub fn scrub(mut self) {
        // String is ASCII throughout, so byte-level overwrite is safe.
        unsafe { self.chars.as_bytes_mut() }.fill(0);
    }
}

impl fmt::Display for RandomString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.chars)
    }
}

impl fmt::Debug for RandomString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("RandomString").field(&self.chars).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn parse_accepts_valid_strings() {
        let hcl = HoneyCircularList::canonical();
        let rs = RandomString::parse(&hcl, "tp7").unwrap();
        assert_eq!(rs.first(), 't');
        assert_eq!(rs.len(), 3);
    }

    #[test]
    fn parse_rejects_repeats() {
        let hcl = HoneyCircularList::canonical();
        assert_eq!(
            RandomString::parse(&hcl, "aa1"),
            Err(RsError::RepeatedChar('a'))
        );
    }

    #[test]
    fn parse_rejects_uppercase_instead_of_folding() {
        let hcl = HoneyCircularList::canonical();
        assert_eq!(
            RandomString::parse(&hcl, "Adg"),
            Err(RsError::NotOnRing('A'))
        );
    }

    #[test]
    fn parse_rejects_short_strings() {
        let hcl = HoneyCircularList::canonical();
        assert_eq!(RandomString::parse(&hcl, "a"), Err(RsError::TooShort(1)));
    }

    #[test]
    fn parse_respects_toy_ring_membership() {
        let hcl = HoneyCircularList::new("abcd").unwrap();
        assert!(RandomString::parse(&hcl, "cab").is_ok());
        assert_eq!(
            RandomString::parse(&hcl, "cax"),
            Err(RsError::NotOnRing('x'))
        );
        assert_eq!(
            RandomString::parse(&hcl, "abcde"),
            Err(RsError::TooLong { len: 5, ring: 4 })
        );
    }

    #[test]
    fn generate_yields_distinct_members() {
        let hcl = HoneyCircularList::generate_seeded(9);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let rs = RandomString::generate(&hcl, 3, &mut rng).unwrap();
            // Re-validating through parse checks distinctness and membership.
            assert!(RandomString::parse(&hcl, rs.as_str()).is_ok());
        }
    }
}
