//! Messages, host buffers and the traffic generator.

use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use rand::Rng;
use thiserror::Error;

pub type HostId = u32;

#[derive(Debug, Error, PartialEq)]
pub enum MessagingError {
    #[error("message {0} is already buffered")]
    Duplicate(MessageId),
    #[error("no valid (src, dst) pair: both host ranges are the single host {0}")]
    NoValidPair(HostId),
    #[error("invalid traffic config: {0}")]
    Invalid(String),
    #[error("bad message id `{0}`")]
    BadId(String),
}

/// Sequential message identifier, printed as `M<n>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MessageId(pub u64);

impl fmt::Display for MessageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "M{}", self.0)
    }
}

impl FromStr for MessageId {
    type Err = MessagingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.strip_prefix('M')
            .and_then(|n| n.parse().ok())
            .map(MessageId)
            .ok_or_else(|| MessagingError::BadId(s.to_string()))
    }
}

/// One host's copy of a message. `path` is the copy's lineage, starting at
/// the source.
#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub id: MessageId,
    pub src: HostId,
    pub dst: HostId,
    pub size: u64,
    pub created_at: f64,
    pub ttl: f64,
    pub path: Vec<HostId>,
}

impl Message {
    pub fn new(
        id: MessageId,
        src: HostId,
        dst: HostId,
        size: u64,
        created_at: f64,
        ttl: f64,
    ) -> Self {
        Self {
            id,
            src,
            dst,
            size,
            created_at,
            ttl,
            path: vec![src],
        }
    }

    pub fn hop_count(&self) -> usize {
        self.path.len() - 1
    }

    pub fn age(&self, now: f64) -> f64 {
        now - self.created_at
    }

    pub fn is_expired(&self, now: f64) -> bool {
        now - self.created_at > self.ttl
    }

    /// The copy held by `receiver` after one more hop.
    pub fn relayed_to(&self, receiver: HostId) -> Self {
        let mut copy = self.clone();
        copy.path.push(receiver);
        copy
    }
}

/// Result of offering a message to a buffer.
#[derive(Debug, Default, PartialEq)]
pub struct InsertOutcome {
    pub accepted: bool,
    /// Entries evicted to make room, in eviction order.
    pub evicted: Vec<Message>,
}

/// Byte-limited message store kept in insertion order.
#[derive(Debug, Clone)]
pub struct Buffer {
    capacity: u64,
    used: u64,
    entries: Vec<Message>,
}

impl Buffer {
    pub fn new(capacity: u64) -> Self {
        Self {
            capacity,
            used: 0,
            entries: Vec::new(),
        }
    }

    pub fn capacity(&self) -> u64 {
        self.capacity
    }

    pub fn used(&self) -> u64 {
        self.used
    }

    pub fn occupancy(&self) -> f64 {
        if self.capacity == 0 {
            1.0
        } else {
            self.used as f64 / self.capacity as f64
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Message> {
        self.entries.iter()
    }

    pub fn contains(&self, id: MessageId) -> bool {
        self.entries.iter().any(|m| m.id == id)
    }

    pub fn get(&self, id: MessageId) -> Option<&Message> {
        self.entries.iter().find(|m| m.id == id)
    }

    pub fn remove(&mut self, id: MessageId) -> Option<Message> {
        let pos = self.entries.iter().position(|m| m.id == id)?;
        let msg = self.entries.remove(pos);
        self.used -= msg.size;
        Some(msg)
    }

    /// Inserts `msg`, evicting entries in `drop_order` until it fits.
    ///
    /// `drop_order` is only consulted when eviction is needed. Entries it
    /// does not mention are evicted oldest-first after the listed ones.
    /// A message larger than the whole buffer is refused outright.
    pub fn insert_with<F>(
        &mut self,
        msg: Message,
        drop_order: F,
    ) -> Result<InsertOutcome, MessagingError>
    where
        F: FnOnce(&Buffer) -> Vec<MessageId>,
    {
        if self.contains(msg.id) {
            return Err(MessagingError::Duplicate(msg.id));
        }
        if msg.size > self.capacity {
            return Ok(InsertOutcome::default());
        }
        let mut evicted = Vec::new();
        if self.used + msg.size > self.capacity {
            let mut order = drop_order(self);
            order.extend(self.entries.iter().map(|m| m.id));
            for id in order {
                if self.used + msg.size <= self.capacity {
                    break;
                }
                if let Some(m) = self.remove(id) {
                    evicted.push(m);
                }
            }
        }
        self.used += msg.size;
        self.entries.push(msg);
        Ok(InsertOutcome {
            accepted: true,
            evicted,
        })
    }

    /// Removes every message whose age strictly exceeds its TTL.
    pub fn expire_ttl(&mut self, now: f64) -> Vec<Message> {
        let (expired, kept): (Vec<Message>, Vec<Message>) = std::mem::take(&mut self.entries)
            .into_iter()
            .partition(|m| m.is_expired(now));
        self.entries = kept;
        self.used = self.entries.iter().map(|m| m.size).sum();
        expired
    }
}

/// Inclusive host id range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HostRange {
    pub first: HostId,
    pub last: HostId,
}

impl HostRange {
    pub fn new(first: HostId, last: HostId) -> Self {
        Self { first, last }
    }

    pub fn single(&self) -> Option<HostId> {
        (self.first == self.last).then_some(self.first)
    }

    pub fn as_range(&self) -> RangeInclusive<HostId> {
        self.first..=self.last
    }
}

impl fmt::Display for HostRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.first, self.last)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrafficConfig {
    pub interval: (f64, f64),
    pub size: (u64, u64),
    pub src_hosts: HostRange,
    pub dst_hosts: HostRange,
    pub start: f64,
    pub stop: f64,
}

impl TrafficConfig {
    pub fn validate(&self) -> Result<(), MessagingError> {
        let bad = |s: &str| Err(MessagingError::Invalid(s.to_string()));
        if !(self.interval.0 > 0.0 && self.interval.0 <= self.interval.1) {
            return bad("interval range must satisfy 0 < min <= max");
        }
        if !(self.size.0 > 0 && self.size.0 <= self.size.1) {
            return bad("size range must satisfy 0 < min <= max");
        }
        if self.src_hosts.first > self.src_hosts.last || self.dst_hosts.first > self.dst_hosts.last
        {
            return bad("empty host range");
        }
        if !(self.start >= 0.0 && self.start <= self.stop) {
            return bad("traffic start must be within [0, stop]");
        }
        match (self.src_hosts.single(), self.dst_hosts.single()) {
            (Some(s), Some(d)) if s == d => Err(MessagingError::NoValidPair(s)),
            _ => Ok(()),
        }
    }
}

/// Produces messages at uniformly spaced random intervals.
#[derive(Debug, Clone)]
pub struct TrafficGenerator<R> {
    cfg: TrafficConfig,
    ttl: f64,
    rng: R,
    next_at: f64,
    next_seq: u64,
}

impl<R: Rng> TrafficGenerator<R> {
    pub fn new(cfg: TrafficConfig, ttl: f64, mut rng: R) -> Result<Self, MessagingError> {
        cfg.validate()?;
        let next_at = cfg.start + rng.gen_range(cfg.interval.0..=cfg.interval.1);
        Ok(Self {
            cfg,
            ttl,
            rng,
            next_at,
            next_seq: 1,
        })
    }

    /// All messages due at or before `now`, stamped with creation time `now`.
    pub fn generate(&mut self, now: f64) -> Vec<Message> {
        let mut out = Vec::new();
        while self.next_at <= now && self.next_at <= self.cfg.stop {
            let (src, dst) = self.draw_pair();
            let size = self.rng.gen_range(self.cfg.size.0..=self.cfg.size.1);
            out.push(Message::new(
                MessageId(self.next_seq),
                src,
                dst,
                size,
                now,
                self.ttl,
            ));
            self.next_seq += 1;
            self.next_at += self
                .rng
                .gen_range(self.cfg.interval.0..=self.cfg.interval.1);
        }
        out
    }

    fn draw_pair(&mut self) -> (HostId, HostId) {
        loop {
            let src = self.rng.gen_range(self.cfg.src_hosts.as_range());
            if self.cfg.dst_hosts.single() == Some(src) {
                continue;
            }
            loop {
                let dst = self.rng.gen_range(self.cfg.dst_hosts.as_range());
                if dst != src {
                    return (src, dst);
                }
            }
        }
    }
}
