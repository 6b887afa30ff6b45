//! Distance chains: the single stored secret that replaces `k - 1` decoys.
//!
//! A chain holds the paired distances between consecutive characters of a
//! random string. Given the ring and a first character the walk is uniquely
//! invertible, and without the first character every ring character is an
//! equally valid starting point — which is exactly what confuses an
//! attacker holding the password file.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::hcl::{HoneyCircularList, RingError};
use crate::rs::RandomString;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ChainError {
    #[error("distance {distance} is out of range [1, {max}]")]
    DistanceOutOfRange { distance: u32, max: u32 },
    #[error("walk from {start:?} revisits {collision:?}; chain is invalid for this start")]
    WalkCollision { start: char, collision: char },
    #[error("malformed distance chain {0:?}")]
    Parse(String),
    #[error(transparent)]
    Ring(#[from] RingError),
}

/// The paired distances between consecutive random-string characters.
///
/// Serialized as decimal integers joined by `-` with no whitespace, e.g.
/// `35-6`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct DistanceChain {
    distances: Vec<u32>,
}

impl DistanceChain {
    /// Builds a chain from raw distances, each in `[1, ring_len - 1]`.
    pub fn new(distances: Vec<u32>, ring_len: usize) -> Result<Self, ChainError> {
        let chain = Self { distances };
        chain.validate_for_ring(ring_len)?;
        Ok(chain)
    }

    /// Distance chain of `rs` with respect to `hcl`: `distances[i]` is the
    /// clockwise distance from `rs[i]` to `rs[i + 1]`. Entries are nonzero
    /// because random-string characters are distinct.
    pub fn from_rs(hcl: &HoneyCircularList, rs: &RandomString) -> Result<Self, ChainError> {
        let chars: Vec<char> = rs.chars().collect();
        let mut distances = Vec::with_capacity(chars.len() - 1);
        for pair in chars.windows(2) {
            distances.push(hcl.paired_distance(pair[0], pair[1])?);
        }
        Ok(Self { distances })
    }

    /// Checks every entry lies in `[1, ring_len - 1]`.
    pub fn validate_for_ring(&self, ring_len: usize) -> Result<(), ChainError> {
        let max = ring_len as u32 - 1;
        for &d in &self.distances {
            if d == 0 || d > max {
                return Err(ChainError::DistanceOutOfRange { distance: d, max });
            }
        }
        Ok(())
    }

    pub fn distances(&self) -> &[u32] {
        &self.distances
    }

    /// Number of paired distances (one less than the string it encodes).
    pub fn len(&self) -> usize {
        self.distances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.distances.is_empty()
    }

    /// Length of any string this chain encodes.
    pub fn rs_len(&self) -> usize {
        self.distances.len() + 1
    }

    /// Whether the cumulative offsets `0, d1, d1+d2, ...` are pairwise
    /// distinct mod the ring length. Exactly then does every ring character
    /// start a collision-free walk.
    pub fn offsets_distinct(&self, ring_len: usize) -> bool {
        let mut seen = vec![false; ring_len];
        let mut offset = 0usize;
        seen[0] = true;
        for &d in &self.distances {
            offset = (offset + d as usize) % ring_len;
            if seen[offset] {
                return false;
            }
            seen[offset] = true;
        }
        true
    }

    /// Walks clockwise from `first` by each distance in turn, recovering
    /// the unique string that starts at `first` and encodes to this chain.
    pub fn derive_rs(
        &self,
        hcl: &HoneyCircularList,
        first: char,
    ) -> Result<RandomString, ChainError> {
        self.validate_for_ring(hcl.len())?;
        let mut current = first;
        if !hcl.contains(first) {
            return Err(RingError::NotInRing(first).into());
        }
        let mut seen = [false; 128];
        seen[current as usize] = true;
        let mut chars = String::with_capacity(self.rs_len());
        chars.push(current);
        for &d in &self.distances {
            current = hcl.step(current, d)?;
            if seen[current as usize] {
                return Err(ChainError::WalkCollision { start: first, collision: current });
            }
            seen[current as usize] = true;
            chars.push(current);
        }
        Ok(RandomString::from_trusted_walk(chars))
    }

    /// Every string consistent with this chain: one candidate per ring
    /// character whose walk is collision-free, in ring order. At most
    /// `hcl.len()` candidates, and exactly that many iff the cumulative
    /// offsets are pairwise distinct.
    pub fn enumerate_candidates(&self, hcl: &HoneyCircularList) -> Vec<RandomString> {
        hcl.chars()
            .filter_map(|start| self.derive_rs(hcl, start).ok())
            .collect()
    }
}

impl fmt::Display for DistanceChain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for d in &self.distances {
            if !first {
                f.write_str("-")?;
            }
            write!(f, "{d}")?;
            first = false;
        }
        Ok(())
    }
}

impl fmt::Debug for DistanceChain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DistanceChain({self})")
    }
}

impl FromStr for DistanceChain {
    type Err = ChainError;

    /// Parses `35-6` style text. Entries are bounded by the alphabet size;
    /// ring-specific range checks happen in [`Self::validate_for_ring`].
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let malformed = || ChainError::Parse(s.to_string());
        if s.is_empty() {
            return Err(malformed());
        }
        let distances = s
            .split('-')
            .map(|part| {
                if part.is_empty() || !part.bytes().all(|b| b.is_ascii_digit()) {
                    return Err(malformed());
                }
                let d: u32 = part.parse().map_err(|_| malformed())?;
                if d == 0 || d >= crate::hcl::DEFAULT_RING_LEN as u32 {
                    return Err(malformed());
                }
                Ok(d)
            })
            .collect::<Result<Vec<u32>, _>>()?;
        Ok(Self { distances })
    }
}

/// Paired distances of an arbitrary submitted string, with no distinctness
/// requirement: repeated adjacent characters produce a 0 entry. `None` if
/// any character is off the ring or the string is shorter than two
/// characters. This is the permissive view a login pipeline has of whatever
/// the user typed.
pub fn raw_distances(hcl: &HoneyCircularList, s: &str) -> Option<Vec<u32>> {
    let chars: Vec<char> = s.chars().collect();
    if chars.len() < 2 {
        return None;
    }
    chars
        .windows(2)
        .map(|pair| hcl.paired_distance(pair[0], pair[1]).ok())
        .collect()
}
