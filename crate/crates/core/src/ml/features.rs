use std::collections::HashMap;

use crate::messaging::{Buffer, HostId, Message};

pub const FEATURE_NAMES: [&str; 5] = [
    "contact_frequency",
    "buffer_occupancy",
    "hop_count",
    "message_age",
    "ttl_remaining",
];

pub const NUM_FEATURES: usize = FEATURE_NAMES.len();

/// Context describing one forwarding opportunity (message, candidate relay).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelayFeatureVector {
    /// Completed contacts per hour between the candidate and the destination.
    pub contact_frequency: f64,
    /// Fraction of the candidate's buffer in use.
    pub buffer_occupancy: f64,
    pub hop_count: f64,
    /// Seconds since creation.
    pub message_age: f64,
    /// Seconds of lifetime left, never negative.
    pub ttl_remaining: f64,
}

impl RelayFeatureVector {
    pub fn to_array(&self) -> [f64; NUM_FEATURES] {
        [
            self.contact_frequency,
            self.buffer_occupancy,
            self.hop_count,
            self.message_age,
            self.ttl_remaining,
        ]
    }

    /// Panics unless `v` has exactly five entries.
    pub fn from_slice(v: &[f64]) -> Self {
        assert_eq!(v.len(), NUM_FEATURES, "feature vector needs 5 values");
        Self {
            contact_frequency: v[0],
            buffer_occupancy: v[1],
            hop_count: v[2],
            message_age: v[3],
            ttl_remaining: v[4],
        }
    }
}

/// Counts of completed (up then down) contacts per unordered host pair.
#[derive(Debug, Clone, Default)]
pub struct ContactHistory {
    completed: HashMap<(HostId, HostId), u32>,
}

impl ContactHistory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record_completed(&mut self, a: HostId, b: HostId) {
        *self.completed.entry((a.min(b), a.max(b))).or_insert(0) += 1;
    }

    pub fn completed_between(&self, a: HostId, b: HostId) -> u32 {
        self.completed
            .get(&(a.min(b), a.max(b)))
            .copied()
            .unwrap_or(0)
    }
}

/// Features for handing `msg` to `candidate` at time `now`.
pub fn extract_features(
    msg: &Message,
    candidate: HostId,
    candidate_buffer: &Buffer,
    history: &ContactHistory,
    now: f64,
) -> RelayFeatureVector {
    let contacts = history.completed_between(candidate, msg.dst) as f64;
    let age = (now - msg.created_at).max(0.0);
    RelayFeatureVector {
        contact_frequency: 3600.0 * contacts / now.max(1.0),
        buffer_occupancy: candidate_buffer.occupancy().clamp(0.0, 1.0),
        hop_count: msg.hop_count() as f64,
        message_age: age,
        ttl_remaining: (msg.ttl - age).max(0.0),
    }
}
