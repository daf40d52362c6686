use std::collections::HashMap;

use crate::messaging::{Buffer, HostId, Message, MessageId};

/// Binary split of `copies`: (kept by sender, handed to receiver).
pub fn binary_split(copies: u32) -> (u32, u32) {
    (copies / 2, copies - copies / 2)
}

/// Copy quotas of the messages buffered at one host.
#[derive(Debug, Clone, Default)]
pub struct SprayState {
    initial: u32,
    copies: HashMap<MessageId, u32>,
}

impl SprayState {
    pub fn new(initial: u32) -> Self {
        Self {
            initial: initial.max(1),
            copies: HashMap::new(),
        }
    }

    pub fn initial(&self) -> u32 {
        self.initial
    }

    pub fn copies(&self, id: MessageId) -> u32 {
        self.copies.get(&id).copied().unwrap_or(1)
    }

    pub fn on_created(&mut self, msg: &Message) {
        self.copies.insert(msg.id, self.initial);
    }

    pub fn on_received(&mut self, msg: &Message, copies: u32) {
        self.copies.insert(msg.id, copies.max(1));
    }

    pub fn on_removed(&mut self, id: MessageId) {
        self.copies.remove(&id);
    }

    /// Reserves the receiver's share when a transfer starts, so concurrent
    /// transfers of one message can never hand out more than the quota.
    /// Deliveries to the destination carry no quota.
    pub fn begin_transfer(&mut self, id: MessageId, to_destination: bool) -> u32 {
        if to_destination {
            return 0;
        }
        let current = self.copies(id);
        let (keep, give) = binary_split(current);
        self.copies.insert(id, keep);
        give
    }

    /// Returns a reserved share after an aborted transfer.
    pub fn abort_transfer(&mut self, id: MessageId, share: u32, still_buffered: bool) {
        if still_buffered && share > 0 {
            *self.copies.entry(id).or_insert(0) += share;
        }
    }
}

/// Messages for the peer always; others only while more than one copy is
/// left to spray.
pub fn snw_offer(
    buffer: &Buffer,
    state: &SprayState,
    peer: HostId,
    peer_has: &dyn Fn(MessageId) -> bool,
) -> Vec<MessageId> {
    let (mut to_peer, rest): (Vec<_>, Vec<_>) = buffer
        .iter()
        .filter(|m| !peer_has(m.id))
        .filter(|m| m.dst == peer || state.copies(m.id) > 1)
        .partition(|m| m.dst == peer);
    to_peer.extend(rest);
    to_peer.into_iter().map(|m| m.id).collect()
}
