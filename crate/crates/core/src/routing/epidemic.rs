use crate::messaging::{Buffer, HostId, MessageId};

/// Everything the peer lacks: destination-addressed messages first, then
/// the rest oldest-first.
pub fn epidemic_offer(
    buffer: &Buffer,
    peer: HostId,
    peer_has: &dyn Fn(MessageId) -> bool,
) -> Vec<MessageId> {
    let (mut to_peer, rest): (Vec<_>, Vec<_>) = buffer
        .iter()
        .filter(|m| !peer_has(m.id))
        .partition(|m| m.dst == peer);
    to_peer.extend(rest);
    to_peer.into_iter().map(|m| m.id).collect()
}

/// Oldest first.
pub fn fifo_drop_order(buffer: &Buffer) -> Vec<MessageId> {
    buffer.iter().map(|m| m.id).collect()
}
