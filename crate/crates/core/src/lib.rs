//! Paired-distance honeyword protocol.
//!
//! A password vault stores, instead of `k - 1` decoy passwords per user, a
//! single *distance chain*: the clockwise cell distances between consecutive
//! characters of a short user-chosen random string, measured on a secret
//! circular ordering of the 36 characters `a-z0-9` (the *honey circular
//! list*). A split-trust checker service holds only the first character of
//! each user's random string and turns any decoy submission into a breach
//! alarm.
//!
//! The crate is organised around that pipeline:
//!
//! - [`hcl`], [`rs`], [`chain`] — the ring, the random string, and the
//!   distance-chain arithmetic (pure, allocation-light, thread-safe).
//! - [`meter`] — the strong/weak randomness meter for candidate strings.
//! - [`vault`] — password file `F`: registration, the three-step login
//!   decision, and the line-oriented on-disk format.
//! - [`checker`] — the checker store, its line protocol, and a TCP
//!   server/client pair.
//! - [`federation`] — multiple systems sharing one ring, breach sensing,
//!   and the SM/ACK/UHCL rekey broadcast over a simulated message bus.
//! - [`adversary`] — attack simulators and the exact enumeration oracles
//!   they are checked against.
//! - [`storage`] — storage-cost report comparing against `k`-sweetword
//!   baselines.

pub mod adversary;
pub mod chain;
pub mod checker;
pub mod federation;
pub mod hash;
pub mod hcl;
pub mod meter;
pub mod rs;
pub mod storage;
pub mod vault;

pub use chain::DistanceChain;
pub use checker::{Checker, FeedbackSignal, InMemoryChecker};
pub use hcl::HoneyCircularList;
pub use meter::{MeterVerdict, Strength, WeaknessReason, Wordlist};
pub use rs::RandomString;
pub use vault::{LoginOutcome, LoginVerdict, Vault};
