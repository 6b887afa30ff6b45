//! Deterministic simulated message bus.
//!
//! Delivery order, duplication, and loss are all derived from the schedule
//! and its seed, so any protocol interleaving a test provokes can be
//! reproduced exactly.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::hcl::HoneyCircularList;

use super::SystemId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MessageKind {
    Sm,
    Ack,
    Uhcl,
}

/// A rekey-protocol message. Wire text, one per line: `SM <sys-id>`,
/// `ACK <sys-id>`, `UHCL <36-char ring>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RekeyMessage {
    /// Security message: the sender suspects its ring is compromised.
    Sm { sender: SystemId },
    /// Acknowledgement of an SM.
    Ack { sender: SystemId },
    /// The replacement ring, broadcast once all acks are in.
    Uhcl { ring: HoneyCircularList },
}

impl RekeyMessage {
    pub fn kind(&self) -> MessageKind {
        match self {
            RekeyMessage::Sm { .. } => MessageKind::Sm,
            RekeyMessage::Ack { .. } => MessageKind::Ack,
            RekeyMessage::Uhcl { .. } => MessageKind::Uhcl,
        }
    }
}

impl fmt::Display for RekeyMessage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RekeyMessage::Sm { sender } => write!(f, "SM {sender}"),
            RekeyMessage::Ack { sender } => write!(f, "ACK {sender}"),
            RekeyMessage::Uhcl { ring } => write!(f, "UHCL {ring}"),
        }
    }
}

impl FromStr for RekeyMessage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let malformed = || format!("malformed bus message {s:?}");
        let (kind, rest) = s.split_once(' ').ok_or_else(malformed)?;
        match kind {
            "SM" | "ACK" => {
                let id: u32 = rest.parse().map_err(|_| malformed())?;
                let sender = SystemId(id);
                Ok(if kind == "SM" {
                    RekeyMessage::Sm { sender }
                } else {
                    RekeyMessage::Ack { sender }
                })
            }
            "UHCL" => {
                let ring: HoneyCircularList = rest.parse().map_err(|_| malformed())?;
                if !ring.is_full() {
                    return Err(malformed());
                }
                Ok(RekeyMessage::Uhcl { ring })
            }
            _ => Err(malformed()),
        }
    }
}

/// A routed message in flight.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Envelope {
    pub from: SystemId,
    pub to: SystemId,
    pub msg: RekeyMessage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeliveryOrder {
    /// Deliver in enqueue order.
    Fifo,
    /// Deliver a seeded-random pending message each step.
    Reorder,
}

/// Drops the first `remaining` messages matching the filter.
#[derive(Debug, Clone)]
pub struct DropRule {
    pub kind: MessageKind,
    pub from: Option<SystemId>,
    pub to: Option<SystemId>,
    pub remaining: usize,
}

impl DropRule {
    fn matches(&self, env: &Envelope) -> bool {
        self.remaining > 0
            && env.msg.kind() == self.kind
            && self.from.is_none_or(|f| f == env.from)
            && self.to.is_none_or(|t| t == env.to)
    }
}

/// Delivery policy for one run.
#[derive(Debug, Clone)]
pub struct Schedule {
    pub order: DeliveryOrder,
    pub seed: u64,
    /// Enqueue matching messages twice. `None` duplicates nothing;
    /// `Some(None)` duplicates everything.
    pub duplicate: Option<Option<MessageKind>>,
    pub drops: Vec<DropRule>,
}

impl Schedule {
    pub fn fifo() -> Self {
        Self { order: DeliveryOrder::Fifo, seed: 0, duplicate: None, drops: Vec::new() }
    }

    pub fn reorder(seed: u64) -> Self {
        Self { order: DeliveryOrder::Reorder, seed, duplicate: None, drops: Vec::new() }
    }

    pub fn duplicate_all(mut self) -> Self {
        self.duplicate = Some(None);
        self
    }

    pub fn duplicate_kind(mut self, kind: MessageKind) -> Self {
        self.duplicate = Some(Some(kind));
        self
    }

    pub fn drop_rule(mut self, rule: DropRule) -> Self {
        self.drops.push(rule);
        self
    }
}

/// The bus itself: a pending set plus the schedule that decides what
/// happens to each enqueued and delivered message.
pub struct MessageBus {
    pending: Vec<Envelope>,
    order: DeliveryOrder,
    rng: ChaCha8Rng,
    duplicate: Option<Option<MessageKind>>,
    drops: Vec<DropRule>,
    delivered: u64,
    dropped: u64,
    trace: Vec<String>,
}

impl MessageBus {
    pub fn new(schedule: Schedule) -> Self {
        Self {
            pending: Vec::new(),
            order: schedule.order,
            rng: ChaCha8Rng::seed_from_u64(schedule.seed),
            duplicate: schedule.duplicate,
            drops: schedule.drops,
            delivered: 0,
            dropped: 0,
            trace: Vec::new(),
        }
    }

    pub fn enqueue(&mut self, env: Envelope) {
        if let Some(rule) = self.drops.iter_mut().find(|r| r.matches(&env)) {
            rule.remaining -= 1;
            self.dropped += 1;
            self.trace.push(format!("drop {} -> {}: {}", env.from, env.to, env.msg));
            return;
        }
        let duplicate = match self.duplicate {
            Some(None) => true,
            Some(Some(kind)) => env.msg.kind() == kind,
            None => false,
        };
        if duplicate {
            self.pending.push(env.clone());
        }
        self.pending.push(env);
    }

    pub fn enqueue_all(&mut self, envs: impl IntoIterator<Item = Envelope>) {
        for env in envs {
            self.enqueue(env);
        }
    }

    /// Next message per the delivery order, or `None` when quiescent.
    pub fn pop_next(&mut self) -> Option<Envelope> {
        if self.pending.is_empty() {
            return None;
        }
        let idx = match self.order {
            DeliveryOrder::Fifo => 0,
            DeliveryOrder::Reorder => self.rng.random_range(0..self.pending.len()),
        };
        let env = self.pending.remove(idx);
        self.delivered += 1;
        self.trace.push(format!("deliver {} -> {}: {}", env.from, env.to, env.msg));
        Some(env)
    }

    pub fn is_empty(&self) -> bool {
        self.pending.is_empty()
    }

    pub fn delivered(&self) -> u64 {
        self.delivered
    }

    pub fn dropped(&self) -> u64 {
        self.dropped
    }

    pub fn trace(&self) -> &[String] {
        &self.trace
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env(from: u32, to: u32, msg: RekeyMessage) -> Envelope {
        Envelope { from: SystemId(from), to: SystemId(to), msg }
    }

    #[test]
    fn wire_text_round_trips() {
        let ring = HoneyCircularList::generate_seeded(3);
        for msg in [
            RekeyMessage::Sm { sender: SystemId(0) },
            RekeyMessage::Ack { sender: SystemId(12) },
            RekeyMessage::Uhcl { ring },
        ] {
            let parsed: RekeyMessage = msg.to_string().parse().unwrap();
            assert_eq!(parsed, msg);
        }
        assert!("UHCL abc".parse::<RekeyMessage>().is_err());
        assert!("NOPE 1".parse::<RekeyMessage>().is_err());
    }

    #[test]
    fn fifo_preserves_order() {
        let mut bus = MessageBus::new(Schedule::fifo());
        bus.enqueue(env(0, 1, RekeyMessage::Sm { sender: SystemId(0) }));
        bus.enqueue(env(1, 0, RekeyMessage::Ack { sender: SystemId(1) }));
        assert_eq!(bus.pop_next().unwrap().msg.kind(), MessageKind::Sm);
        assert_eq!(bus.pop_next().unwrap().msg.kind(), MessageKind::Ack);
        assert!(bus.pop_next().is_none());
    }

    #[test]
    fn duplication_delivers_twice() {
        let mut bus = MessageBus::new(Schedule::fifo().duplicate_kind(MessageKind::Ack));
        bus.enqueue(env(0, 1, RekeyMessage::Sm { sender: SystemId(0) }));
        bus.enqueue(env(1, 0, RekeyMessage::Ack { sender: SystemId(1) }));
        let kinds: Vec<MessageKind> =
            std::iter::from_fn(|| bus.pop_next()).map(|e| e.msg.kind()).collect();
        assert_eq!(kinds, vec![MessageKind::Sm, MessageKind::Ack, MessageKind::Ack]);
    }

    #[test]
    fn drop_rule_consumes_matches() {
        let rule = DropRule {
            kind: MessageKind::Ack,
            from: Some(SystemId(1)),
            to: None,
            remaining: 1,
        };
        let mut bus = MessageBus::new(Schedule::fifo().drop_rule(rule));
        bus.enqueue(env(1, 0, RekeyMessage::Ack { sender: SystemId(1) }));
        bus.enqueue(env(1, 0, RekeyMessage::Ack { sender: SystemId(1) }));
        assert_eq!(bus.dropped(), 1);
        assert!(bus.pop_next().is_some());
        assert!(bus.pop_next().is_none());
    }

    #[test]
    fn reorder_is_seed_deterministic() {
        let run = |seed| {
            let mut bus = MessageBus::new(Schedule::reorder(seed));
            for i in 0..8 {
                bus.enqueue(env(0, 1, RekeyMessage::Ack { sender: SystemId(i) }));
            }
            std::iter::from_fn(|| bus.pop_next())
                .map(|e| match e.msg {
                    RekeyMessage::Ack { sender } => sender.0,
                    _ => unreachable!(),
                })
                .collect::<Vec<u32>>()
        };
        assert_eq!(run(5), run(5));
        assert_ne!(run(5), run(6));
    }
}
