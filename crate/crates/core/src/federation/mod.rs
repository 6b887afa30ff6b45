//! Collaborative security across systems sharing one ring.
//!
//! Every node runs its own vault and checker on the shared ring. When a
//! node's checker has produced negative feedback for enough login attempts
//! it broadcasts a security message, collects acknowledgements from every
//! peer, generates a replacement ring, and broadcasts it. Each node then
//! re-derives every user's random string from the checker's first character
//! plus the old chain, re-encodes it on the new ring, and drops the string
//! again — users and checkers are untouched.
//!
//! Nodes are sequential state machines; everything between them travels
//! through [`MessageBus`], so a test owns the exact interleaving.

mod bus;

pub use bus::{
    DeliveryOrder, DropRule, Envelope, MessageBus, MessageKind, RekeyMessage, Schedule,
};

use std::collections::BTreeSet;
use std::fmt;
use std::io;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::checker::InMemoryChecker;
use crate::hcl::HoneyCircularList;
use crate::meter::Wordlist;
use crate::vault::{LoginOutcome, LoginVerdict, Registration, Vault, VaultError};

/// Default negative-feedback threshold for suspecting ring compromise.
pub const DEFAULT_REKEY_THRESHOLD: u32 = 3;

/// Retries of the SM broadcast before an epoch is abandoned.
pub const DEFAULT_MAX_RETRIES: u32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SystemId(pub u32);

impl fmt::Display for SystemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Error)]
pub enum FederationError {
    #[error("node {0} suspends logins while awaiting rekey acknowledgements")]
    LoginsSuspended(SystemId),
    #[error(transparent)]
    Vault(#[from] VaultError),
    #[error("no node with index {0}")]
    UnknownNode(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Phase {
    Idle,
    AwaitingAcks { acked: BTreeSet<SystemId>, retries: u32 },
}

/// One federated system: vault + checker + rekey protocol state.
pub struct SystemNode {
    id: SystemId,
    peers: Vec<SystemId>,
    vault: Vault,
    checker: InMemoryChecker,
    rekey_threshold: u32,
    neg_count: u32,
    phase: Phase,
    max_retries: u32,
    ring_rng: ChaCha8Rng,
    epochs_completed: u64,
    epochs_aborted: u64,
}

impl SystemNode {
    pub fn new(
        id: SystemId,
        peers: Vec<SystemId>,
        ring: HoneyCircularList,
        rekey_threshold: u32,
        seed: u64,
    ) -> Self {
        // Independent per-node streams off the federation seed keep whole
        // runs reproducible.
        let mut salt_rng = ChaCha8Rng::seed_from_u64(seed);
        salt_rng.set_stream(2 * id.0 as u64);
        let mut ring_rng = ChaCha8Rng::seed_from_u64(seed);
        ring_rng.set_stream(2 * id.0 as u64 + 1);
        let vault = Vault::new(ring, 0).with_salt_rng(salt_rng);
        Self {
            id,
            peers,
            vault,
            checker: InMemoryChecker::new(),
            rekey_threshold,
            neg_count: 0,
            phase: Phase::Idle,
            max_retries: DEFAULT_MAX_RETRIES,
            ring_rng,
            epochs_completed: 0,
            epochs_aborted: 0,
        }
    }

    pub fn id(&self) -> SystemId {
        self.id
    }

    pub fn ring(&self) -> &HoneyCircularList {
        self.vault.hcl()
    }

    pub fn vault(&self) -> &Vault {
        &self.vault
    }

    pub fn checker(&self) -> &InMemoryChecker {
        &self.checker
    }

    pub fn neg_count(&self) -> u32 {
        self.neg_count
    }

    pub fn epochs_completed(&self) -> u64 {
        self.epochs_completed
    }

    pub fn epochs_aborted(&self) -> u64 {
        self.epochs_aborted
    }

    pub fn is_awaiting_acks(&self) -> bool {
        matches!(self.phase, Phase::AwaitingAcks { .. })
    }

    pub fn register(
        &mut self,
        username: &str,
        password: &str,
        rs: &str,
    ) -> Result<Registration, FederationError> {
        Ok(self.vault.register(username, password, rs, &mut self.checker, &Wordlist::default())?)
    }

    /// Login through this node. Suspended while the node is mid-epoch as
    /// the initiator. Negative feedback feeds the breach counter.
    pub fn login(
        &mut self,
        username: &str,
        password: &str,
        rs: &str,
    ) -> Result<LoginOutcome, FederationError> {
        if self.is_awaiting_acks() {
            return Err(FederationError::LoginsSuspended(self.id));
        }
        let outcome = self.vault.login(username, password, rs, &mut self.checker)?;
        if outcome.verdict == LoginVerdict::AlarmHoneyRs {
            self.neg_count += 1;
        }
        Ok(outcome)
    }

    /// Threshold sensor: once the checker has flagged `rekey_threshold`
    /// negative feedbacks, broadcast SM to every peer and wait for acks.
    /// A single-node federation has nothing to wait for and completes the
    /// epoch on the spot.
    pub fn sense(&mut self) -> Result<Vec<Envelope>, FederationError> {
        if self.phase != Phase::Idle || self.neg_count < self.rekey_threshold {
            return Ok(Vec::new());
        }
        self.phase = Phase::AwaitingAcks { acked: BTreeSet::new(), retries: 0 };
        let mut out = self.broadcast_sm();
        out.extend(self.maybe_complete()?);
        Ok(out)
    }

    pub fn handle(&mut self, env: Envelope) -> Result<Vec<Envelope>, FederationError> {
        match env.msg {
            RekeyMessage::Sm { sender } => self.on_sm(sender),
            RekeyMessage::Ack { sender } => self.on_ack(sender),
            RekeyMessage::Uhcl { ring } => self.on_uhcl(ring),
        }
    }

    /// Called when the bus drains while this node still awaits acks:
    /// re-broadcast SM a bounded number of times, then abandon the epoch.
    pub fn on_timeout(&mut self) -> Result<Vec<Envelope>, FederationError> {
        let Phase::AwaitingAcks { retries, .. } = &mut self.phase else {
            return Ok(Vec::new());
        };
        if *retries < self.max_retries {
            *retries += 1;
            Ok(self.broadcast_sm())
        } else {
            self.phase = Phase::Idle;
            self.epochs_aborted += 1;
            Ok(Vec::new())
        }
    }

    fn on_sm(&mut self, sender: SystemId) -> Result<Vec<Envelope>, FederationError> {
        match &self.phase {
            Phase::AwaitingAcks { .. } if sender < self.id => {
                // Concurrent initiators: the lowest id wins, everyone else
                // abandons their own epoch and acknowledges the winner.
                self.phase = Phase::Idle;
                Ok(vec![self.ack_to(sender)])
            }
            Phase::AwaitingAcks { .. } => Ok(Vec::new()),
            Phase::Idle => Ok(vec![self.ack_to(sender)]),
        }
    }

    fn on_ack(&mut self, sender: SystemId) -> Result<Vec<Envelope>, FederationError> {
        if let Phase::AwaitingAcks { acked, .. } = &mut self.phase {
            if self.peers.contains(&sender) {
                acked.insert(sender);
            }
            return self.maybe_complete();
        }
        Ok(Vec::new())
    }

    fn on_uhcl(&mut self, ring: HoneyCircularList) -> Result<Vec<Envelope>, FederationError> {
        if &ring == self.vault.hcl() {
            // Duplicate delivery of a ring we already adopted.
            return Ok(Vec::new());
        }
        if self.is_awaiting_acks() {
            // Someone else finished first; adopt their ring.
            self.phase = Phase::Idle;
        }
        self.vault.rekey_to(ring, &mut self.checker)?;
        self.neg_count = 0;
        Ok(Vec::new())
    }

    fn maybe_complete(&mut self) -> Result<Vec<Envelope>, FederationError> {
        let Phase::AwaitingAcks { acked, .. } = &self.phase else {
            return Ok(Vec::new());
        };
        if !self.peers.iter().all(|p| acked.contains(p)) {
            return Ok(Vec::new());
        }
        let new_ring = loop {
            let candidate = HoneyCircularList::generate(&mut self.ring_rng);
            if &candidate != self.vault.hcl() {
                break candidate;
            }
        };
        self.vault.rekey_to(new_ring.clone(), &mut self.checker)?;
        self.phase = Phase::Idle;
        self.neg_count = 0;
        self.epochs_completed += 1;
        Ok(self
            .peers
            .iter()
            .map(|&to| Envelope {
                from: self.id,
                to,
                msg: RekeyMessage::Uhcl { ring: new_ring.clone() },
            })
            .collect())
    }

    fn broadcast_sm(&self) -> Vec<Envelope> {
        self.peers
            .iter()
            .map(|&to| Envelope { from: self.id, to, msg: RekeyMessage::Sm { sender: self.id } })
            .collect()
    }

    fn ack_to(&self, to: SystemId) -> Envelope {
        Envelope { from: self.id, to, msg: RekeyMessage::Ack { sender: self.id } }
    }
}

/// A set of nodes wired to one bus. The harness drives deliveries, sensing,
/// and timeouts to quiescence; everything is deterministic for a given
/// (seed, schedule) pair.
pub struct Federation {
    nodes: Vec<SystemNode>,
    bus: MessageBus,
}

impl Federation {
    pub fn new(
        node_count: usize,
        ring: HoneyCircularList,
        rekey_threshold: u32,
        seed: u64,
        schedule: Schedule,
    ) -> Self {
        let ids: Vec<SystemId> = (0..node_count as u32).map(SystemId).collect();
        let nodes = ids
            .iter()
            .map(|&id| {
                let peers = ids.iter().copied().filter(|&p| p != id).collect();
                SystemNode::new(id, peers, ring.clone(), rekey_threshold, seed)
            })
            .collect();
        Self { nodes, bus: MessageBus::new(schedule) }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[SystemNode] {
        &self.nodes
    }

    pub fn node(&self, idx: usize) -> &SystemNode {
        &self.nodes[idx]
    }

    pub fn node_mut(&mut self, idx: usize) -> &mut SystemNode {
        &mut self.nodes[idx]
    }

    pub fn bus(&self) -> &MessageBus {
        &self.bus
    }

    /// Registers the same credentials on every node, as a user reusing one
    /// password and random string across the federation would.
    pub fn register_everywhere(
        &mut self,
        username: &str,
        password: &str,
        rs: &str,
    ) -> Result<(), FederationError> {
        for node in &mut self.nodes {
            node.register(username, password, rs)?;
        }
        Ok(())
    }

    /// Login against one node, then collect any SM broadcast the outcome
    /// triggered onto the bus (without delivering it).
    pub fn login_on(
        &mut self,
        idx: usize,
        username: &str,
        password: &str,
        rs: &str,
    ) -> Result<LoginOutcome, FederationError> {
        let outcome = self.checked_node(idx)?.login(username, password, rs)?;
        let sensed = self.checked_node(idx)?.sense()?;
        self.bus.enqueue_all(sensed);
        Ok(outcome)
    }

    /// What an attacker holding file `F` does: submit a decoy candidate
    /// (matching chain, different first character) with the correct
    /// password. Always an alarm unless the node is suspended.
    pub fn submit_decoy(
        &mut self,
        idx: usize,
        username: &str,
        password: &str,
    ) -> Result<LoginOutcome, FederationError> {
        let node = self.checked_node(idx)?;
        let record = node
            .vault
            .record(username)
            .ok_or_else(|| VaultError::UnknownUser(username.to_string()))?;
        let stored_first = node
            .checker
            .first_char(username)
            .ok_or_else(|| VaultError::CheckerDesync(username.to_string()))?;
        let decoy = record
            .chain()
            .enumerate_candidates(node.vault.hcl())
            .into_iter()
            .find(|c| c.first() != stored_first)
            .expect("full ring always has decoy candidates");
        self.login_on(idx, username, password, decoy.as_str())
    }

    /// Delivers, senses, and retries until no message is pending and no
    /// node is mid-epoch (completed or abandoned).
    pub fn run_to_quiescence(&mut self) -> Result<(), FederationError> {
        loop {
            while let Some(env) = self.bus.pop_next() {
                let idx = env.to.0 as usize;
                let out = self.checked_node(idx)?.handle(env)?;
                self.bus.enqueue_all(out);
            }
            let mut sensed = Vec::new();
            for node in &mut self.nodes {
                sensed.extend(node.sense()?);
            }
            if !sensed.is_empty() {
                self.bus.enqueue_all(sensed);
                continue;
            }
            let mut retried = Vec::new();
            for node in &mut self.nodes {
                retried.extend(node.on_timeout()?);
            }
            if retried.is_empty() && self.bus.is_empty() {
                return Ok(());
            }
            self.bus.enqueue_all(retried);
        }
    }

    /// All node rings as text; identical entries mean convergence.
    pub fn rings(&self) -> Vec<String> {
        self.nodes.iter().map(|n| n.ring().to_string()).collect()
    }

    pub fn converged(&self) -> bool {
        self.rings().windows(2).all(|w| w[0] == w[1])
    }

    /// Persists every node's vault file and checker snapshot under `dir`;
    /// returns the paths written.
    pub fn persist_all(&self, dir: impl AsRef<Path>) -> io::Result<Vec<PathBuf>> {
        let dir = dir.as_ref();
        let mut paths = Vec::new();
        for node in &self.nodes {
            let vault_path = dir.join(format!("node{}.pdp", node.id));
            node.vault.save_path(&vault_path)?;
            let checker_path = dir.join(format!("node{}.checker", node.id));
            node.checker.snapshot_save(&checker_path)?;
            paths.push(vault_path);
            paths.push(checker_path);
        }
        Ok(paths)
    }

    fn checked_node(&mut self, idx: usize) -> Result<&mut SystemNode, FederationError> {
        if idx >= self.nodes.len() {
            return Err(FederationError::UnknownNode(idx));
        }
        Ok(&mut self.nodes[idx])
    }
}
