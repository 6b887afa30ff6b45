//! Strong/weak randomness meter for candidate random strings.
//!
//! The meter is a binary signal backed by a handful of concrete rules: the
//! string or its concatenation with the password forms a dictionary word,
//! the string is a sequential keystroke pattern, or a character repeats.
//! Only the repeated-character rule is a hard failure (it breaks the
//! distance-chain construction); everything else is advisory and surfaces
//! as a warning at registration.

use std::collections::HashSet;
use std::fmt;
use std::io::{self, BufRead};
use std::path::Path;

use crate::hcl::alphabet_index;

/// Keyboard rows checked for sequential keystroke patterns (forwards and
/// backwards).
const KEYBOARD_ROWS: [&str; 4] = ["qwertyuiop", "asdfghjkl", "zxcvbnm", "1234567890"];

/// Why an evaluated string was judged weak.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum WeaknessReason {
    /// The string itself is a dictionary word.
    DictionaryWord,
    /// `password + rs` or `rs + password` is a dictionary word.
    ConcatenationMakesWord,
    /// Consecutive alphabet positions or a keyboard-row run.
    SequentialPattern,
    /// A character repeats; this also blocks registration outright.
    RepeatedCharacter,
}

impl fmt::Display for WeaknessReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            WeaknessReason::DictionaryWord => "dictionary word",
            WeaknessReason::ConcatenationMakesWord => "concatenation with password makes a word",
            WeaknessReason::SequentialPattern => "sequential pattern",
            WeaknessReason::RepeatedCharacter => "repeated character",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strength {
    Strong,
    Weak,
}

/// Meter output: weak iff at least one reason fired.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeterVerdict {
    reasons: Vec<WeaknessReason>,
}

impl MeterVerdict {
    pub fn strength(&self) -> Strength {
        if self.reasons.is_empty() {
            Strength::Strong
        } else {
            Strength::Weak
        }
    }

    pub fn is_strong(&self) -> bool {
        self.reasons.is_empty()
    }

    pub fn reasons(&self) -> &[WeaknessReason] {
        &self.reasons
    }

    /// True when the verdict must block registration, not just warn.
    pub fn blocks_registration(&self) -> bool {
        self.reasons.contains(&WeaknessReason::RepeatedCharacter)
    }
}

/// A set of lowercase words loaded once and shared immutably.
#[derive(Debug, Clone, Default)]
pub struct Wordlist {
    words: HashSet<String>,
}

impl Wordlist {
    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self { words: words.into_iter().map(Into::into).collect() }
    }

    /// Reads a newline-delimited lowercase wordlist. Blank lines are
    /// skipped; words are lowercased defensively.
    pub fn from_reader(reader: impl io::Read) -> io::Result<Self> {
        let mut words = HashSet::new();
        for line in io::BufReader::new(reader).lines() {
            let line = line?;
            let word = line.trim();
            if !word.is_empty() {
                words.insert(word.to_lowercase());
            }
        }
        Ok(Self { words })
    }

    pub fn load(path: impl AsRef<Path>) -> io::Result<Self> {
        Self::from_reader(std::fs::File::open(path)?)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Evaluates how random a candidate string looks next to the password it
/// will accompany. Deterministic for a fixed wordlist.
pub fn evaluate_rs(rs: &str, password: &str, wordlist: &Wordlist) -> MeterVerdict {
    let mut reasons = Vec::new();
    if wordlist.contains(rs) {
        reasons.push(WeaknessReason::DictionaryWord);
    }
    if wordlist.contains(&format!("{password}{rs}")) || wordlist.contains(&format!("{rs}{password}"))
    {
        reasons.push(WeaknessReason::ConcatenationMakesWord);
    }
    if is_sequential(rs) {
        reasons.push(WeaknessReason::SequentialPattern);
    }
    if has_repeat(rs) {
        reasons.push(WeaknessReason::RepeatedCharacter);
    }
    MeterVerdict { reasons }
}

fn has_repeat(s: &str) -> bool {
    let mut seen = HashSet::new();
    s.chars().any(|c| !seen.insert(c))
}

/// Sequential keystrokes: the whole string is a constant-step (+1/-1) run
/// in alphabet order, or (for three or more characters) a contiguous
/// substring of a keyboard row in either direction.
fn is_sequential(s: &str) -> bool {
    let chars: Vec<char> = s.chars().collect();
    if chars.len() < 2 {
        return false;
    }
    if let Some(indices) = chars.iter().map(|&c| alphabet_index(c)).collect::<Option<Vec<_>>>() {
        for step in [1isize, -1] {
            if indices
                .windows(2)
                .all(|w| w[1] as isize - w[0] as isize == step)
            {
                return true;
            }
        }
    }
    if chars.len() >= 3 {
        let reversed: String = chars.iter().rev().collect();
        for row in KEYBOARD_ROWS {
            if row.contains(s) || row.contains(&reversed) {
                return true;
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> Wordlist {
        Wordlist::from_words(["rabbit", "bit", "fox", "road", "street", "able", "cat"])
    }

    #[test]
    fn concatenation_and_dictionary_both_fire() {
        // password "rab" + rs "bit" = "rabbit", and "bit" is itself a word.
        let verdict = evaluate_rs("bit", "rab", &fixture());
        assert_eq!(verdict.strength(), Strength::Weak);
        assert_eq!(
            verdict.reasons(),
            &[WeaknessReason::DictionaryWord, WeaknessReason::ConcatenationMakesWord]
        );
        assert!(!verdict.blocks_registration());
    }

    #[test]
    fn dictionary_word_alone() {
        let verdict = evaluate_rs("fox", "whatever", &fixture());
        assert_eq!(verdict.reasons(), &[WeaknessReason::DictionaryWord]);
    }

    #[test]
    fn random_looking_string_is_strong() {
        let verdict = evaluate_rs("q7e", "street", &fixture());
        assert!(verdict.is_strong());
        assert_eq!(verdict.strength(), Strength::Strong);
    }

    #[test]
    fn alphabet_run_is_sequential() {
        for rs in ["abc", "cba", "xyz", "345"] {
            let verdict = evaluate_rs(rs, "pw", &fixture());
            assert_eq!(verdict.reasons(), &[WeaknessReason::SequentialPattern], "{rs}");
        }
    }

    #[test]
    fn keyboard_rows_are_sequential() {
        for rs in ["qwe", "sdf", "xcv", "poi", "890"] {
            let verdict = evaluate_rs(rs, "pw", &fixture());
            assert_eq!(verdict.reasons(), &[WeaknessReason::SequentialPattern], "{rs}");
        }
    }

    #[test]
    fn repeated_character_blocks() {
        let verdict = evaluate_rs("aa1", "pw", &fixture());
        assert!(verdict.blocks_registration());
        assert_eq!(verdict.strength(), Strength::Weak);
    }

    #[test]
    fn reverse_concatenation_checked() {
        let verdict = evaluate_rs("ca", "t", &fixture());
        assert!(verdict.reasons().contains(&WeaknessReason::ConcatenationMakesWord));
    }

    #[test]
    fn wordlist_loads_from_reader() {
        let wl = Wordlist::from_reader("fox\n\n  Bit \nroad\n".as_bytes()).unwrap();
        assert_eq!(wl.len(), 3);
        assert!(wl.contains("bit"));
    }
}
