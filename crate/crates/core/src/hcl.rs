//! The honey circular list: a secret circular ordering of `a-z0-9`.
//!
//! Every distance in the protocol is measured as a clockwise cell count on
//! this ring, so the ring is the shared reference frame between the vault,
//! the checker, and every federated peer.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// The 36-character universe rings are drawn from, in canonical order.
pub const ALPHABET: &str = "abcdefghijklmnopqrstuvwxyz0123456789";

/// Default ring length: the full alphabet.
pub const DEFAULT_RING_LEN: usize = 36;

/// Index of `c` in [`ALPHABET`], or `None` for any other character.
pub fn alphabet_index(c: char) -> Option<usize> {
    match c {
        'a'..='z' => Some(c as usize - 'a' as usize),
        '0'..='9' => Some(26 + c as usize - '0' as usize),
        _ => None,
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RingError {
    #[error("character {0:?} is outside the a-z0-9 alphabet")]
    InvalidChar(char),
    #[error("character {0:?} appears more than once in the ring")]
    DuplicateChar(char),
    #[error("ring length {0} is invalid (need 2..=36 characters)")]
    BadLength(usize),
    #[error("character {0:?} is not a member of this ring")]
    NotInRing(char),
}

/// An ordered ring of distinct characters from `a-z0-9`.
///
/// The full-size ring (36 characters, a permutation of the alphabet) is the
/// production configuration; shorter rings over a prefix of the alphabet are
/// supported for exhaustive toy-scale analysis.
#[derive(Clone, PartialEq, Eq)]
pub struct HoneyCircularList {
    ring: String,
    // ASCII char -> ring index, u8::MAX when absent.
    pos: [u8; 128],
}

impl HoneyCircularList {
    /// Builds a ring from its clockwise character sequence.
    pub fn new(chars: &str) -> Result<Self, RingError> {
        let len = chars.chars().count();
        if !(2..=DEFAULT_RING_LEN).contains(&len) {
            return Err(RingError::BadLength(len));
        }
        let mut pos = [u8::MAX; 128];
        for (i, c) in chars.chars().enumerate() {
            if alphabet_index(c).is_none() {
                return Err(RingError::InvalidChar(c));
            }
            if pos[c as usize] != u8::MAX {
                return Err(RingError::DuplicateChar(c));
            }
            pos[c as usize] = i as u8;
        }
        Ok(Self { ring: chars.to_string(), pos })
    }

    /// The alphabet-ordered ring. Fixed test and documentation fixture, not
    /// a production configuration: real rings come from [`Self::generate`].
    pub fn canonical() -> Self {
        Self::new(ALPHABET).expect("alphabet is a valid ring")
    }

    /// Uniformly random permutation of the full 36-character alphabet.
    pub fn generate(rng: &mut impl Rng) -> Self {
        Self::generate_sized(DEFAULT_RING_LEN, rng).expect("36 is a valid ring size")
    }

    /// Deterministic [`Self::generate`] for a fixed seed.
    pub fn generate_seeded(seed: u64) -> Self {
        Self::generate(&mut ChaCha8Rng::seed_from_u64(seed))
    }

    /// Random permutation of the first `len` alphabet characters.
    pub fn generate_sized(len: usize, rng: &mut impl Rng) -> Result<Self, RingError> {
        if !(2..=DEFAULT_RING_LEN).contains(&len) {
            return Err(RingError::BadLength(len));
        }
        let mut chars: Vec<char> = ALPHABET.chars().take(len).collect();
        chars.shuffle(rng);
        Self::new(&chars.iter().collect::<String>())
    }

    pub fn generate_sized_seeded(len: usize, seed: u64) -> Result<Self, RingError> {
        Self::generate_sized(len, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    /// Number of cells on the ring.
    pub fn len(&self) -> usize {
        self.ring.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Whether this is a full 36-character permutation of the alphabet.
    pub fn is_full(&self) -> bool {
        self.len() == DEFAULT_RING_LEN
    }

    /// Clockwise character sequence starting from index 0. This is also the
    /// one-line text encoding used in file headers and rekey messages.
    pub fn as_str(&self) -> &str {
        &self.ring
    }

    pub fn chars(&self) -> impl Iterator<Item = char> + '_ {
        self.ring.chars()
    }

    /// Character at ring index `i mod len`.
    pub fn char_at(&self, i: usize) -> char {
        self.ring.as_bytes()[i % self.len()] as char
    }

    pub fn contains(&self, c: char) -> bool {
        self.position(c).is_some()
    }

    /// Ring index of `c`, if `c` is a member.
    pub fn position(&self, c: char) -> Option<usize> {
        if (c as usize) < 128 && self.pos[c as usize] != u8::MAX {
            Some(self.pos[c as usize] as usize)
        } else {
            None
        }
    }

    fn require_position(&self, c: char) -> Result<usize, RingError> {
        self.position(c).ok_or(RingError::NotInRing(c))
    }

    /// Paired distance: the number of cells traversed clockwise to reach
    /// `e2` from `e1`. Zero iff `e1 == e2`.
    pub fn paired_distance(&self, e1: char, e2: char) -> Result<u32, RingError> {
        let p1 = self.require_position(e1)?;
        let p2 = self.require_position(e2)?;
        Ok(((p2 + self.len() - p1) % self.len()) as u32)
    }

    /// Walks `distance` cells clockwise from `from`.
    pub fn step(&self, from: char, distance: u32) -> Result<char, RingError> {
        let p = self.require_position(from)?;
        Ok(self.char_at(p + (distance as usize % self.len())))
    }
}

impl fmt::Display for HoneyCircularList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.ring)
    }
}

impl fmt::Debug for HoneyCircularList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("HoneyCircularList").field(&self.ring).finish()
    }
}

impl FromStr for HoneyCircularList {
    type Err = RingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::new(s)
    }
}
