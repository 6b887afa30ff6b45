//! Password file `F` and the login decision pipeline.
//!
//! A record stores `username : salt : H(salt || password) : chain` — the
//! chain in plaintext, because rekeying must re-derive random strings from
//! it. No random-string character ever reaches this file; with `F` fully
//! compromised the attacker still faces one candidate string per ring
//! character.
//!
//! Login is strictly staged: password hash first, then chain comparison,
//! and only when both pass is the checker contacted with the submitted
//! first character. A negative answer is the breach alarm.

use std::collections::HashMap;
use std::io::{self, BufRead, Read, Write};
use std::path::Path;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::chain::{ChainError, DistanceChain};
use crate::checker::{Checker, CheckerError, FeedbackSignal, RekeyChecker};
use crate::hash::{PasswordHasher, Sha256Hasher};
use crate::hcl::{HoneyCircularList, RingError};
use crate::meter::{self, MeterVerdict, Wordlist};
use crate::rs::{RandomString, RsError, DEFAULT_RS_LEN};

/// File format marker; first token of the header line.
pub const FILE_MAGIC: &str = "#PDPv1";

pub const SALT_LEN: usize = 16;

#[derive(Debug, Error)]
pub enum VaultError {
    #[error("username {0:?} is already registered")]
    DuplicateUser(String),
    #[error("unknown username {0:?}")]
    UnknownUser(String),
    #[error("invalid username {0:?}: must be non-empty, without ':' or whitespace")]
    InvalidUsername(String),
    #[error("invalid random string: {0}")]
    InvalidRs(#[from] RsError),
    #[error("random string must have exactly {expected} characters, got {got}")]
    WrongRsLength { expected: usize, got: usize },
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error(transparent)]
    Checker(#[from] CheckerError),
    #[error("checker has no record for {0:?}; vault and checker are out of sync")]
    CheckerDesync(String),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("file format error at line {line}: {reason}")]
    Format { line: usize, reason: String },
}

/// One row of file `F`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserRecord {
    username: String,
    salt: [u8; SALT_LEN],
    password_hash: Vec<u8>,
    chain: DistanceChain,
}

impl UserRecord {
    pub fn username(&self) -> &str {
        &self.username
    }

    pub fn chain(&self) -> &DistanceChain {
        &self.chain
    }

    pub fn salt_hex(&self) -> String {
        hex::encode(self.salt)
    }

    pub fn hash_hex(&self) -> String {
        hex::encode(&self.password_hash)
    }

    fn to_line(&self) -> String {
        format!("{}:{}:{}:{}", self.username, self.salt_hex(), self.hash_hex(), self.chain)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoginVerdict {
    Granted,
    DeniedWrongPassword,
    DeniedChainMismatch,
    /// Password and chain matched but the first character did not: someone
    /// is replaying a decoy candidate.
    AlarmHoneyRs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LoginOutcome {
    pub verdict: LoginVerdict,
    /// Checker feedback, present only when the pipeline reached step 3.
    pub feedback: Option<FeedbackSignal>,
}

/// Administrator alarm entry, appended whenever the checker answers NEG.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlarmEvent {
    pub username: String,
    pub submitted_first: char,
}

/// Outcome of a successful registration.
#[derive(Debug, Clone)]
pub struct Registration {
    /// Meter verdict on the chosen random string; advisory except for the
    /// repeated-character rule, which the parser already rejects.
    pub meter: MeterVerdict,
}

/// The authentication system proper. Single-writer: registrations and
/// logins go through `&mut self`; the checker call is a blocking
/// request/response inside the login pipeline.
pub struct Vault {
    hcl: HoneyCircularList,
    records: Vec<UserRecord>,
    index: HashMap<String, usize>,
    hasher: Box<dyn PasswordHasher>,
    salt_rng: ChaCha8Rng,
    rs_len: usize,
    alarms: Vec<AlarmEvent>,
    chain_mismatches: u64,
}

impl Vault {
    /// Empty vault over `hcl`. `salt_seed` fixes the salt stream so whole
    /// runs are reproducible under one seed.
    pub fn new(hcl: HoneyCircularList, salt_seed: u64) -> Self {
        Self {
            hcl,
            records: Vec::new(),
            index: HashMap::new(),
            hasher: Box::new(Sha256Hasher),
            salt_rng: ChaCha8Rng::seed_from_u64(salt_seed),
            rs_len: DEFAULT_RS_LEN,
            alarms: Vec::new(),
            chain_mismatches: 0,
        }
    }

    pub fn with_rs_len(mut self, rs_len: usize) -> Self {
        self.rs_len = rs_len;
        self
    }

    pub fn with_salt_rng(mut self, rng: ChaCha8Rng) -> Self {
        self.salt_rng = rng;
        self
    }

    pub fn with_hasher(mut self, hasher: Box<dyn PasswordHasher>) -> Self {
        self.hasher = hasher;
        self
    }

    pub fn hcl(&self) -> &HoneyCircularList {
        &self.hcl
    }

    pub fn rs_len(&self) -> usize {
        self.rs_len
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[UserRecord] {
        &self.records
    }

    pub fn record(&self, username: &str) -> Option<&UserRecord> {
        self.index.get(username).map(|&i| &self.records[i])
    }

    pub fn alarms(&self) -> &[AlarmEvent] {
        &self.alarms
    }

    /// Denials at the chain-comparison step. Auditable but never alarmed
    /// on: only checker NEG signals a breach.
    pub fn chain_mismatches(&self) -> u64 {
        self.chain_mismatches
    }

    /// Registers a user: validates the random string, stores the salted
    /// hash and the distance chain, and sends `SET username rs[0]` to the
    /// checker. The random string itself is not retained.
    pub fn register(
        &mut self,
        username: &str,
        password: &str,
        rs: &str,
        checker: &mut dyn Checker,
        wordlist: &Wordlist,
    ) -> Result<Registration, VaultError> {
        validate_username(username)?;
        if self.index.contains_key(username) {
            return Err(VaultError::DuplicateUser(username.to_string()));
        }
        let rs = RandomString::parse(&self.hcl, rs)?;
        if rs.len() != self.rs_len {
            return Err(VaultError::WrongRsLength { expected: self.rs_len, got: rs.len() });
        }
        let verdict = meter::evaluate_rs(rs.as_str(), password, wordlist);

        let mut salt = [0u8; SALT_LEN];
        self.salt_rng.fill_bytes(&mut salt);
        let record = UserRecord {
            username: username.to_string(),
            salt,
            password_hash: self.hasher.digest(&salt, password),
            chain: DistanceChain::from_rs(&self.hcl, &rs)?,
        };
        checker.set(username, rs.first())?;
        self.index.insert(username.to_string(), self.records.len());
        self.records.push(record);
        Ok(Registration { meter: verdict })
    }

    /// The login pipeline, in order: (1) password hash, (2) derived chain
    /// against the stored chain, (3) first character against the checker.
    /// Earlier failures never contact the checker. A malformed submitted
    /// string (wrong length, repeats, foreign characters) is reported as a
    /// chain mismatch so error shape leaks nothing extra.
    pub fn login(
        &mut self,
        username: &str,
        password: &str,
        rs_submitted: &str,
        checker: &mut dyn Checker,
    ) -> Result<LoginOutcome, VaultError> {
        let record = self
            .index
            .get(username)
            .map(|&i| &self.records[i])
            .ok_or_else(|| VaultError::UnknownUser(username.to_string()))?;

        if self.hasher.digest(&record.salt, password) != record.password_hash {
            return Ok(LoginOutcome {
                verdict: LoginVerdict::DeniedWrongPassword,
                feedback: None,
            });
        }

        let chain_matches = match RandomString::parse(&self.hcl, rs_submitted) {
            Ok(rs) => DistanceChain::from_rs(&self.hcl, &rs)? == record.chain,
            Err(_) => false,
        };
        if !chain_matches {
            self.chain_mismatches += 1;
            return Ok(LoginOutcome {
                verdict: LoginVerdict::DeniedChainMismatch,
                feedback: None,
            });
        }

        let first = rs_submitted.chars().next().expect("chain matched, rs non-empty");
        match checker.check(username, first)? {
            FeedbackSignal::Pos => Ok(LoginOutcome {
                verdict: LoginVerdict::Granted,
                feedback: Some(FeedbackSignal::Pos),
            }),
            FeedbackSignal::Neg => {
                self.alarms.push(AlarmEvent {
                    username: username.to_string(),
                    submitted_first: first,
                });
                Ok(LoginOutcome {
                    verdict: LoginVerdict::AlarmHoneyRs,
                    feedback: Some(FeedbackSignal::Neg),
                })
            }
            FeedbackSignal::Unknown => Err(VaultError::CheckerDesync(username.to_string())),
        }
    }

    /// Re-encodes every chain against `new_ring`: each user's random string
    /// is re-derived from the checker's first character and the old chain,
    /// measured on the new ring, and immediately scrubbed. New chains are
    /// computed for all users before any record is touched.
    pub fn rekey_to(
        &mut self,
        new_ring: HoneyCircularList,
        checker: &mut dyn RekeyChecker,
    ) -> Result<(), VaultError> {
        if !new_ring.is_full() {
            return Err(RingError::BadLength(new_ring.len()).into());
        }
        let mut new_chains = Vec::with_capacity(self.records.len());
        for record in &self.records {
            let first = checker
                .first_char_of(&record.username)?
                .ok_or_else(|| VaultError::CheckerDesync(record.username.clone()))?;
            let rs = record.chain.derive_rs(&self.hcl, first)?;
            new_chains.push(DistanceChain::from_rs(&new_ring, &rs)?);
            checker.set(&record.username, rs.first())?;
            rs.scrub();
        }
        for (record, chain) in self.records.iter_mut().zip(new_chains) {
            record.chain = chain;
        }
        self.hcl = new_ring;
        Ok(())
    }

    /// Writes file `F`: a `#PDPv1 <ring>` header, then one record per line
    /// in registration order.
    pub fn save(&self, mut w: impl Write) -> io::Result<()> {
        writeln!(w, "{FILE_MAGIC} {}", self.hcl)?;
        for record in &self.records {
            writeln!(w, "{}", record.to_line())?;
        }
        Ok(())
    }

    pub fn save_path(&self, path: impl AsRef<Path>) -> io::Result<()> {
        let mut buf = Vec::new();
        self.save(&mut buf)?;
        std::fs::write(path, buf)
    }

    /// Parses file `F`. Enforces the header magic, a full 36-character ring
    /// permutation, well-formed records, unique usernames, and one chain
    /// length across the file.
    pub fn load(r: impl Read, salt_seed: u64) -> Result<Self, VaultError> {
        let reader = io::BufReader::new(r);
        let mut lines = reader.lines().enumerate();

        let (_, header) = lines
            .next()
            .ok_or_else(|| format_err(1, "empty file, missing header"))?;
        let header = header?;
        let ring_text = header
            .strip_prefix(FILE_MAGIC)
            .and_then(|rest| rest.strip_prefix(' '))
            .ok_or_else(|| format_err(1, "missing or unknown format version"))?;
        let hcl: HoneyCircularList = ring_text
            .parse()
            .map_err(|e: RingError| format_err(1, &e.to_string()))?;
        if !hcl.is_full() {
            return Err(format_err(1, "header ring is not a 36-character permutation"));
        }

        let mut vault = Vault::new(hcl, salt_seed);
        for (idx, line) in lines {
            let line_no = idx + 1;
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let record = parse_record(&line, &vault.hcl)
                .map_err(|reason| format_err(line_no, &reason))?;
            if vault.index.contains_key(&record.username) {
                return Err(format_err(
                    line_no,
                    &format!("duplicate username {:?}", record.username),
                ));
            }
            vault.index.insert(record.username.clone(), vault.records.len());
            vault.records.push(record);
        }
        if let Some(first) = vault.records.first() {
            let rs_len = first.chain.rs_len();
            if vault.records.iter().any(|r| r.chain.rs_len() != rs_len) {
                return Err(format_err(0, "records disagree on chain length"));
            }
            vault.rs_len = rs_len;
        }
        Ok(vault)
    }

    pub fn load_path(path: impl AsRef<Path>, salt_seed: u64) -> Result<Self, VaultError> {
        Self::load(std::fs::File::open(path)?, salt_seed)
    }
}

fn format_err(line: usize, reason: &str) -> VaultError {
    VaultError::Format { line, reason: reason.to_string() }
}

fn parse_record(line: &str, hcl: &HoneyCircularList) -> Result<UserRecord, String> {
    let fields: Vec<&str> = line.split(':').collect();
    if fields.len() != 4 {
        return Err(format!("expected 4 ':'-separated fields, got {}", fields.len()));
    }
    validate_username(fields[0]).map_err(|e| e.to_string())?;
    let salt_bytes = hex::decode(fields[1]).map_err(|_| "salt is not valid hex".to_string())?;
    let salt: [u8; SALT_LEN] = salt_bytes
        .try_into()
        .map_err(|_| format!("salt must be {SALT_LEN} bytes"))?;
    let password_hash = hex::decode(fields[2]).map_err(|_| "hash is not valid hex".to_string())?;
    if password_hash.is_empty() {
        return Err("hash is empty".to_string());
    }
    let chain: DistanceChain = fields[3].parse().map_err(|e: ChainError| e.to_string())?;
    chain.validate_for_ring(hcl.len()).map_err(|e| e.to_string())?;
    Ok(UserRecord { username: fields[0].to_string(), salt, password_hash, chain })
}

fn validate_username(username: &str) -> Result<(), VaultError> {
    let ok = !username.is_empty()
        && username.chars().all(|c| c != ':' && !c.is_whitespace());
    if ok {
        Ok(())
    } else {
        Err(VaultError::InvalidUsername(username.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checker::InMemoryChecker;

    fn setup() -> (Vault, InMemoryChecker) {
        let vault = Vault::new(HoneyCircularList::canonical(), 1);
        (vault, InMemoryChecker::new())
    }

    fn no_words() -> Wordlist {
        Wordlist::default()
    }

    #[test]
    fn register_stores_chain_and_first_char() {
        let (mut vault, mut checker) = setup();
        vault
            .register("alice", "street99", "adg", &mut checker, &no_words())
            .unwrap();
        assert_eq!(vault.record("alice").unwrap().chain().distances(), &[3, 3]);
        assert_eq!(checker.first_char("alice"), Some('a'));
    }

    #[test]
    fn register_rejects_repeated_character() {
        let (mut vault, mut checker) = setup();
        let err = vault
            .register("bob", "pw", "aa1", &mut checker, &no_words())
            .unwrap_err();
        assert!(matches!(err, VaultError::InvalidRs(RsError::RepeatedChar('a'))));
        assert_eq!(checker.len(), 0);
    }

    #[test]
    fn register_rejects_duplicates_and_bad_usernames() {
        let (mut vault, mut checker) = setup();
        vault.register("alice", "pw", "adg", &mut checker, &no_words()).unwrap();
        assert!(matches!(
            vault.register("alice", "pw2", "beh", &mut checker, &no_words()),
            Err(VaultError::DuplicateUser(_))
        ));
        for bad in ["", "a:b", "a b", "a\tb"] {
            assert!(matches!(
                vault.register(bad, "pw", "xq2", &mut checker, &no_words()),
                Err(VaultError::InvalidUsername(_))
            ));
        }
    }

    #[test]
    fn register_surfaces_meter_warning_but_proceeds() {
        let (mut vault, mut checker) = setup();
        let wl = Wordlist::from_words(["fox"]);
        let reg = vault.register("carol", "pw", "fox", &mut checker, &wl).unwrap();
        assert!(!reg.meter.is_strong());
        assert!(vault.record("carol").is_some());
    }

    #[test]
    fn login_happy_path() {
        let (mut vault, mut checker) = setup();
        vault.register("alice", "street99", "adg", &mut checker, &no_words()).unwrap();
        let outcome = vault.login("alice", "street99", "adg", &mut checker).unwrap();
        assert_eq!(outcome.verdict, LoginVerdict::Granted);
        assert_eq!(outcome.feedback, Some(FeedbackSignal::Pos));
    }

    #[test]
    fn honey_candidate_raises_alarm() {
        // "beh" encodes to the same [3, 3] chain but starts at 'b'.
        let (mut vault, mut checker) = setup();
        vault.register("alice", "street99", "adg", &mut checker, &no_words()).unwrap();
        let outcome = vault.login("alice", "street99", "beh", &mut checker).unwrap();
        assert_eq!(outcome.verdict, LoginVerdict::AlarmHoneyRs);
        assert_eq!(outcome.feedback, Some(FeedbackSignal::Neg));
        assert_eq!(vault.alarms().len(), 1);
        assert_eq!(vault.alarms()[0].submitted_first, 'b');
    }

    #[test]
    fn near_miss_chain_is_denied_without_alarm() {
        // "adh" gives [3, 4].
        let (mut vault, mut checker) = setup();
        vault.register("alice", "street99", "adg", &mut checker, &no_words()).unwrap();
        let outcome = vault.login("alice", "street99", "adh", &mut checker).unwrap();
        assert_eq!(outcome.verdict, LoginVerdict::DeniedChainMismatch);
        assert_eq!(outcome.feedback, None);
        assert!(vault.alarms().is_empty());
        assert_eq!(vault.chain_mismatches(), 1);
    }

    #[test]
    fn wrong_password_short_circuits() {
        let (mut vault, mut checker) = setup();
        vault.register("alice", "street99", "adg", &mut checker, &no_words()).unwrap();
        let outcome = vault.login("alice", "wrong", "adg", &mut checker).unwrap();
        assert_eq!(outcome.verdict, LoginVerdict::DeniedWrongPassword);
        assert_eq!(outcome.feedback, None);
    }

    #[test]
    fn malformed_rs_reports_chain_mismatch() {
        let (mut vault, mut checker) = setup();
        vault.register("alice", "pw", "adg", &mut checker, &no_words()).unwrap();
        for bad in ["ad", "adgx", "aag", "aDg", "a!g"] {
            let outcome = vault.login("alice", "pw", bad, &mut checker).unwrap();
            assert_eq!(outcome.verdict, LoginVerdict::DeniedChainMismatch, "{bad}");
        }
    }

    #[test]
    fn unknown_user_is_an_error() {
        let (mut vault, mut checker) = setup();
        assert!(matches!(
            vault.login("ghost", "pw", "adg", &mut checker),
            Err(VaultError::UnknownUser(_))
        ));
    }

    #[test]
    fn file_round_trip_preserves_bytes() {
        let (mut vault, mut checker) = setup();
        vault.register("alice", "street99", "adg", &mut checker, &no_words()).unwrap();
        vault.register("bob", "hunter2", "q7e", &mut checker, &no_words()).unwrap();
        let mut first = Vec::new();
        vault.save(&mut first).unwrap();
        let reloaded = Vault::load(first.as_slice(), 2).unwrap();
        let mut second = Vec::new();
        reloaded.save(&mut second).unwrap();
        assert_eq!(first, second);
        assert_eq!(reloaded.len(), 2);
        assert_eq!(reloaded.record("bob").unwrap().chain(), vault.record("bob").unwrap().chain());
    }

    #[test]
    fn load_rejects_duplicates_and_bad_headers() {
        let good_ring = HoneyCircularList::canonical().to_string();
        let dup = format!(
            "{FILE_MAGIC} {good_ring}\na:{s}:{h}:3-3\na:{s}:{h}:3-3\n",
            s = "00".repeat(16),
            h = "11".repeat(32),
        );
        assert!(matches!(
            Vault::load(dup.as_bytes(), 0),
            Err(VaultError::Format { line: 3, .. })
        ));
        for bad_header in [
            "#PDPv2 abc".to_string(),
            format!("{FILE_MAGIC} abcdef"),
            format!("{FILE_MAGIC} {}", "x".repeat(36)),
            String::new(),
        ] {
            let content = format!("{bad_header}\n");
            assert!(Vault::load(content.as_bytes(), 0).is_err(), "{bad_header:?}");
        }
    }

    #[test]
    fn rekey_preserves_credentials() {
        let (mut vault, mut checker) = setup();
        vault.register("alice", "street99", "tp7", &mut checker, &no_words()).unwrap();
        let old_chain = vault.record("alice").unwrap().chain().clone();
        vault.rekey_to(HoneyCircularList::generate_seeded(99), &mut checker).unwrap();
        assert_ne!(vault.record("alice").unwrap().chain(), &old_chain);
        assert_eq!(checker.first_char("alice"), Some('t'));
        let outcome = vault.login("alice", "street99", "tp7", &mut checker).unwrap();
        assert_eq!(outcome.verdict, LoginVerdict::Granted);
    }

    #[test]
    fn checker_contacted_only_after_chain_match() {
        struct CountingChecker {
            inner: InMemoryChecker,
            checks: usize,
        }
        impl Checker for CountingChecker {
            fn set(&mut self, u: &str, c: char) -> Result<(), CheckerError> {
                self.inner.set(u, c)
            }
            fn check(&mut self, u: &str, c: char) -> Result<FeedbackSignal, CheckerError> {
                self.checks += 1;
                self.inner.check(u, c)
            }
            fn del(&mut self, u: &str) -> Result<(), CheckerError> {
                self.inner.del(u)
            }
        }

        let mut vault = Vault::new(HoneyCircularList::canonical(), 1);
        let mut checker = CountingChecker { inner: InMemoryChecker::new(), checks: 0 };
        vault.register("alice", "pw", "adg", &mut checker, &no_words()).unwrap();
        vault.login("alice", "wrong", "adg", &mut checker).unwrap();
        vault.login("alice", "pw", "adh", &mut checker).unwrap();
        assert_eq!(checker.checks, 0);
        vault.login("alice", "pw", "adg", &mut checker).unwrap();
        assert_eq!(checker.checks, 1);
    }
}
