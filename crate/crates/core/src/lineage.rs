//! Replays an event log to recover each message copy's hop path.

use std::collections::HashMap;

use crate::events::{EventKind, EventLog};
use crate::messaging::{HostId, MessageId};

/// Hop paths of every delivered copy, keyed by message.
///
/// A transfer carries the sender's path as it was when the transfer
/// started, so later changes to the sender's copy do not leak into it.
pub fn delivered_paths(log: &EventLog) -> HashMap<MessageId, Vec<Vec<HostId>>> {
    let mut copies: HashMap<(MessageId, HostId), Vec<HostId>> = HashMap::new();
    let mut in_flight: HashMap<(MessageId, HostId, HostId), Vec<HostId>> = HashMap::new();
    let mut delivered: HashMap<MessageId, Vec<Vec<HostId>>> = HashMap::new();

    for e in log.iter() {
        let Some(id) = e.msg_id else { continue };
        match e.kind {
            EventKind::Created => {
                copies.insert((id, e.from), vec![e.from]);
            }
            EventKind::Started => {
                let path = copies
                    .get(&(id, e.from))
                    .cloned()
                    .unwrap_or_else(|| vec![e.from]);
                in_flight.insert((id, e.from, e.to), path);
            }
            EventKind::Aborted => {
                in_flight.remove(&(id, e.from, e.to));
            }
            EventKind::Relayed => {
                let mut path = in_flight
                    .remove(&(id, e.from, e.to))
                    .unwrap_or_else(|| vec![e.from]);
                path.push(e.to);
                copies.insert((id, e.to), path);
            }
            EventKind::Delivered => {
                if let Some(path) = copies.get(&(id, e.to)) {
                    delivered.entry(id).or_default().push(path.clone());
                }
            }
            _ => {}
        }
    }
    delivered
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::EventRecord;

    fn ev(t: f64, kind: EventKind, from: HostId, to: HostId, hops: usize) -> EventRecord {
        EventRecord::message(t, kind, MessageId(1), from, to, 10, hops)
    }

    #[test]
    fn two_hop_delivery_path() {
        let log = EventLog::new(vec![
            ev(0.0, EventKind::Created, 0, 9, 0),
            ev(1.0, EventKind::Started, 0, 1, 0),
            ev(1.0, EventKind::Relayed, 0, 1, 1),
            ev(2.0, EventKind::Started, 0, 2, 0),
            ev(2.0, EventKind::Relayed, 0, 2, 1),
            ev(3.0, EventKind::Started, 1, 9, 1),
            ev(3.0, EventKind::Relayed, 1, 9, 2),
            ev(3.0, EventKind::Delivered, 1, 9, 2),
        ]);
        let paths = delivered_paths(&log);
        assert_eq!(paths[&MessageId(1)], vec![vec![0, 1, 9]]);
    }

    #[test]
    fn transfer_uses_path_at_start() {
        // host 1 starts sending with path [0,1]; meanwhile it re-receives
        // the message via host 2 before the first transfer completes.
        let log = EventLog::new(vec![
            ev(0.0, EventKind::Created, 0, 9, 0),
            ev(1.0, EventKind::Started, 0, 1, 0),
            ev(1.0, EventKind::Relayed, 0, 1, 1),
            ev(2.0, EventKind::Started, 1, 9, 1),
            ev(2.0, EventKind::Started, 0, 2, 0),
            ev(2.0, EventKind::Relayed, 0, 2, 1),
            ev(3.0, EventKind::Started, 2, 1, 1),
            ev(3.0, EventKind::Relayed, 2, 1, 2),
            ev(4.0, EventKind::Relayed, 1, 9, 2),
            ev(4.0, EventKind::Delivered, 1, 9, 2),
        ]);
        assert_eq!(delivered_paths(&log)[&MessageId(1)], vec![vec![0, 1, 9]]);
    }
}
