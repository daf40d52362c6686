//! MaxProp: meeting likelihoods, path costs, queue ordering and delivery
//! acknowledgements.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::sync::Arc;

use crate::messaging::{Buffer, HostId, Message, MessageId};

/// Normalized meeting frequencies of one host.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DeliveryLikelihoodTable {
    pub owner: HostId,
    f: BTreeMap<HostId, f64>,
}

impl DeliveryLikelihoodTable {
    pub fn new(owner: HostId) -> Self {
        Self {
            owner,
            f: BTreeMap::new(),
        }
    }

    pub fn from_entries(owner: HostId, entries: &[(HostId, f64)]) -> Self {
        Self {
            owner,
            f: entries.iter().copied().collect(),
        }
    }

    pub fn get(&self, peer: HostId) -> f64 {
        self.f.get(&peer).copied().unwrap_or(0.0)
    }

    pub fn entries(&self) -> impl Iterator<Item = (HostId, f64)> + '_ {
        self.f.iter().map(|(&k, &v)| (k, v))
    }

    pub fn is_empty(&self) -> bool {
        self.f.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.f.values().sum()
    }

    /// Adds one to the met peer's entry and renormalizes to sum 1.
    pub fn record_meeting(&mut self, peer: HostId) {
        debug_assert_ne!(peer, self.owner);
        *self.f.entry(peer).or_insert(0.0) += 1.0;
        let total: f64 = self.f.values().sum();
        for v in self.f.values_mut() {
            *v /= total;
        }
    }
}

/// The tables a host knows, its own always included.
#[derive(Debug, Clone, Default)]
pub struct LikelihoodSnapshot {
    tables: BTreeMap<HostId, Arc<DeliveryLikelihoodTable>>,
}

impl LikelihoodSnapshot {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, table: DeliveryLikelihoodTable) {
        self.tables.insert(table.owner, Arc::new(table));
    }

    pub fn get(&self, host: HostId) -> Option<&DeliveryLikelihoodTable> {
        self.tables.get(&host).map(Arc::as_ref)
    }

    pub fn hosts(&self) -> impl Iterator<Item = HostId> + '_ {
        self.tables.keys().copied()
    }

    /// Overwrites every table from `other` except `keep`'s own.
    fn absorb(&mut self, other: &BTreeMap<HostId, Arc<DeliveryLikelihoodTable>>, keep: HostId) {
        for (&h, t) in other {
            if h != keep {
                self.tables.insert(h, Arc::clone(t));
            }
        }
    }

    /// Costs from `src` to every known host under edge weight `1 - f`.
    ///
    /// Nodes are the hosts owning a table plus every host named in any
    /// table. Only table owners have outgoing edges; a missing entry means
    /// weight 1.
    pub fn costs_from(&self, src: HostId) -> HashMap<HostId, f64> {
        let mut universe: BTreeSet<HostId> = self.tables.keys().copied().collect();
        for t in self.tables.values() {
            universe.extend(t.f.keys().copied());
        }
        universe.insert(src);
        let nodes: Vec<HostId> = universe.into_iter().collect();
        let index: HashMap<HostId, usize> =
            nodes.iter().enumerate().map(|(i, &h)| (h, i)).collect();
        let n = nodes.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut done = vec![false; n];
        dist[index[&src]] = 0.0;
        // dense Dijkstra; node count is the host count
        for _ in 0..n {
            let Some(u) = (0..n)
                .filter(|&i| !done[i] && dist[i].is_finite())
                .min_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(a.cmp(&b)))
            else {
                break;
            };
            done[u] = true;
            let Some(table) = self.tables.get(&nodes[u]) else {
                continue;
            };
            for v in 0..n {
                if v == u || done[v] {
                    continue;
                }
                let w = 1.0 - table.get(nodes[v]);
                if dist[u] + w < dist[v] {
                    dist[v] = dist[u] + w;
                }
            }
        }
        nodes.into_iter().zip(dist).collect()
    }
}

/// Minimum summed `1 - f` over relay paths; `+inf` when `dst` is unknown.
pub fn maxprop_path_cost(snapshot: &LikelihoodSnapshot, src: HostId, dst: HostId) -> f64 {
    snapshot
        .costs_from(src)
        .get(&dst)
        .copied()
        .unwrap_or(f64::INFINITY)
}

/// Transmit order and drop order (its reverse).
///
/// Messages below `hop_threshold` hops come first by ascending hop count
/// (then creation time, then id); the rest follow by ascending path cost
/// (then id).
pub fn maxprop_order_queue<F>(
    buffer: &Buffer,
    cost: F,
    hop_threshold: usize,
) -> (Vec<MessageId>, Vec<MessageId>)
where
    F: Fn(&Message) -> f64,
{
    let (mut low, high): (Vec<&Message>, Vec<&Message>) =
        buffer.iter().partition(|m| m.hop_count() < hop_threshold);
    low.sort_by(|a, b| {
        a.hop_count()
            .cmp(&b.hop_count())
            .then(a.created_at.total_cmp(&b.created_at))
            .then(a.id.cmp(&b.id))
    });
    let mut high: Vec<(f64, MessageId)> = high.into_iter().map(|m| (cost(m), m.id)).collect();
    high.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let transmit: Vec<MessageId> = low
        .into_iter()
        .map(|m| m.id)
        .chain(high.into_iter().map(|(_, id)| id))
        .collect();
    let drop = transmit.iter().rev().copied().collect();
    (transmit, drop)
}

/// Ids of messages known to have reached their destination.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AckSet(HashSet<MessageId>);

impl AckSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, id: MessageId) {
        self.0.insert(id);
    }

    pub fn contains(&self, id: MessageId) -> bool {
        self.0.contains(&id)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Both sides end up with the union of the two sets.
pub fn ack_exchange(a: &mut AckSet, b: &mut AckSet) {
    let a_only: Vec<MessageId> = a.0.difference(&b.0).copied().collect();
    a.0.extend(b.0.iter().copied());
    b.0.extend(a_only);
}

/// Buffered messages whose ids are acknowledged, in buffer order.
pub fn acked_in_buffer(acks: &AckSet, buffer: &Buffer) -> Vec<MessageId> {
    buffer
        .iter()
        .filter(|m| acks.contains(m.id))
        .map(|m| m.id)
        .collect()
}

/// Per-host MaxProp state.
#[derive(Debug, Clone)]
pub struct MaxProp {
    owner: HostId,
    own: DeliveryLikelihoodTable,
    snapshot: LikelihoodSnapshot,
    acks: AckSet,
    hop_threshold: usize,
    costs: Option<HashMap<HostId, f64>>,
}

impl MaxProp {
    pub fn new(owner: HostId, hop_threshold: usize) -> Self {
        let own = DeliveryLikelihoodTable::new(owner);
        let mut snapshot = LikelihoodSnapshot::new();
        snapshot.insert(own.clone());
        Self {
            owner,
            own,
            snapshot,
            acks: AckSet::new(),
            hop_threshold,
            costs: None,
        }
    }

    pub fn table(&self) -> &DeliveryLikelihoodTable {
        &self.own
    }

    pub fn snapshot(&self) -> &LikelihoodSnapshot {
        &self.snapshot
    }

    pub fn acks(&self) -> &AckSet {
        &self.acks
    }

    pub fn record_meeting(&mut self, peer: HostId) {
        self.own.record_meeting(peer);
        self.snapshot.insert(self.own.clone());
        self.costs = None;
    }

    pub fn record_delivery(&mut self, id: MessageId) {
        self.acks.insert(id);
    }

    /// Contact-up exchange between two MaxProp hosts: both record the
    /// meeting, swap likelihood tables and merge acknowledgements.
    pub fn exchange(a: &mut MaxProp, b: &mut MaxProp) {
        a.record_meeting(b.owner);
        b.record_meeting(a.owner);
        let a_tables = a.snapshot.tables.clone();
        let b_tables = b.snapshot.tables.clone();
        a.snapshot.absorb(&b_tables, a.owner);
        b.snapshot.absorb(&a_tables, b.owner);
        a.costs = None;
        b.costs = None;
        ack_exchange(&mut a.acks, &mut b.acks);
    }

    pub fn cost_to(&mut self, dst: HostId) -> f64 {
        let owner = self.owner;
        let snapshot = &self.snapshot;
        self.costs
            .get_or_insert_with(|| snapshot.costs_from(owner))
            .get(&dst)
            .copied()
            .unwrap_or(f64::INFINITY)
    }

    pub fn order_queue(&mut self, buffer: &Buffer) -> (Vec<MessageId>, Vec<MessageId>) {
        let owner = self.owner;
        let snapshot = &self.snapshot;
        let costs = self.costs.get_or_insert_with(|| snapshot.costs_from(owner));
        maxprop_order_queue(
            buffer,
            |m| costs.get(&m.dst).copied().unwrap_or(f64::INFINITY),
            self.hop_threshold,
        )
    }

    pub fn offer_order(
        &mut self,
        buffer: &Buffer,
        peer: HostId,
        peer_has: &dyn Fn(MessageId) -> bool,
    ) -> Vec<MessageId> {
        let (transmit, _) = self.order_queue(buffer);
        let (mut to_peer, rest): (Vec<MessageId>, Vec<MessageId>) = transmit
            .into_iter()
            .filter(|&id| !peer_has(id) && !self.acks.contains(id))
            .partition(|&id| buffer.get(id).is_some_and(|m| m.dst == peer));
        to_peer.extend(rest);
        to_peer
    }

    pub fn drop_order(&mut self, buffer: &Buffer) -> Vec<MessageId> {
        self.order_queue(buffer).1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(owner: HostId, entries: &[(HostId, f64)]) -> DeliveryLikelihoodTable {
        DeliveryLikelihoodTable::from_entries(owner, entries)
    }

    #[test]
    fn likelihood_updates() {
        let mut t = DeliveryLikelihoodTable::new(0);
        t.record_meeting(1);
        assert_eq!(t.get(1), 1.0);
        t.record_meeting(2);
        assert_eq!((t.get(1), t.get(2)), (0.5, 0.5));
        t.record_meeting(1);
        assert_eq!((t.get(1), t.get(2)), (0.75, 0.25));
    }

    #[test]
    fn direct_and_two_hop_costs() {
        let mut s = LikelihoodSnapshot::new();
        s.insert(table(0, &[(9, 0.9), (1, 0.1)]));
        assert!((maxprop_path_cost(&s, 0, 9) - 0.1).abs() < 1e-12);

        let mut s = LikelihoodSnapshot::new();
        s.insert(table(0, &[(5, 0.5), (6, 0.5)]));
        s.insert(table(5, &[(9, 0.8), (0, 0.2)]));
        assert!((maxprop_path_cost(&s, 0, 9) - 0.7).abs() < 1e-12);
        assert_eq!(maxprop_path_cost(&s, 0, 42), f64::INFINITY);
    }

    fn buffer_with(specs: &[(u64, usize, f64, HostId)]) -> Buffer {
        let mut b = Buffer::new(1_000_000);
        for &(id, hops, created, dst) in specs {
            let mut m = Message::new(MessageId(id), 0, dst, 10, created, 1000.0);
            for h in 0..hops {
                m = m.relayed_to(100 + h as HostId);
            }
            b.insert_with(m, |_| vec![]).unwrap();
        }
        b
    }

    #[test]
    fn low_hop_messages_sort_by_hops() {
        let b = buffer_with(&[(2, 2, 0.0, 7), (1, 0, 5.0, 8)]);
        let costs = |m: &Message| if m.id == MessageId(1) { 0.9 } else { 0.2 };
        let (tx, _) = maxprop_order_queue(&b, costs, 3);
        assert_eq!(tx, vec![MessageId(1), MessageId(2)]);
    }

    #[test]
    fn high_hop_messages_sort_by_cost() {
        let b = buffer_with(&[(1, 5, 0.0, 7), (2, 5, 0.0, 8)]);
        let costs = |m: &Message| if m.id == MessageId(1) { 0.9 } else { 0.2 };
        let (tx, drop) = maxprop_order_queue(&b, costs, 3);
        assert_eq!(tx, vec![MessageId(2), MessageId(1)]);
        assert_eq!(drop, vec![MessageId(1), MessageId(2)]);
        // threshold 0: every message is ordered by cost
        let b = buffer_with(&[(1, 0, 0.0, 7), (2, 1, 0.0, 8)]);
        let (tx, _) = maxprop_order_queue(&b, costs, 0);
        assert_eq!(tx, vec![MessageId(2), MessageId(1)]);
    }

    #[test]
    fn acks_merge_both_ways() {
        let mut a = AckSet::new();
        let mut b = AckSet::new();
        a.insert(MessageId(1));
        b.insert(MessageId(2));
        ack_exchange(&mut a, &mut b);
        assert_eq!(a, b);
        assert_eq!(a.len(), 2);
    }

    #[test]
    fn exchange_shares_tables_and_acks() {
        let mut a = MaxProp::new(0, 3);
        let mut b = MaxProp::new(1, 3);
        b.record_delivery(MessageId(4));
        MaxProp::exchange(&mut a, &mut b);
        assert_eq!(a.table().get(1), 1.0);
        assert_eq!(a.snapshot().get(1).unwrap().get(0), 1.0);
        assert_eq!(b.snapshot().get(0).unwrap().get(1), 1.0);
        assert!(a.acks().contains(MessageId(4)));
        let mut buf = Buffer::new(100);
        buf.insert_with(Message::new(MessageId(4), 0, 1, 10, 0.0, 10.0), |_| vec![])
            .unwrap();
        assert_eq!(acked_in_buffer(a.acks(), &buf), vec![MessageId(4)]);
    }
}
