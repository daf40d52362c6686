//! Time-stepped simulation engine.
//!
//! Each step at `t = k * step` runs, in order: traffic generation, movement,
//! connectivity (downs before ups), transfers, TTL expiry. Every random draw
//! comes from a stream keyed by (seed, purpose, index), so a run is a pure
//! function of its scenario and seed.

use std::collections::{BTreeMap, HashSet};

use thiserror::Error;

use crate::config::Scenario;
use crate::events::{EventKind, EventLog, EventRecord, Reason};
use crate::map::{MapError, Point};
use crate::messaging::{Buffer, HostId, Message, MessageId, MessagingError, TrafficGenerator};
use crate::ml::{extract_features, ContactHistory, RelayFeatureVector};
use crate::mobility::Walker;
use crate::rng::{stream, SimRng, Stream};
use crate::routing::{maxprop::acked_in_buffer, MaxProp, Router};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("mobility: {0}")]
    Map(#[from] MapError),
    #[error("messaging: {0}")]
    Messaging(#[from] MessagingError),
}

#[derive(Debug, Clone)]
pub struct Host {
    pub id: HostId,
    pub group: usize,
    pub range: f64,
    pub bitrate: f64,
    pub position: Point,
    pub buffer: Buffer,
    pub router: Router,
    walker: Walker<SimRng>,
    /// Messages this host has received as their destination.
    delivered: HashSet<MessageId>,
    /// Messages currently being transferred to this host.
    incoming: HashSet<MessageId>,
}

impl Host {
    /// Whether offering `id` to this host would be pointless.
    fn has(&self, id: MessageId) -> bool {
        self.buffer.contains(id)
            || self.delivered.contains(&id)
            || self.incoming.contains(&id)
            || self.router.has_acked(id)
    }
}

/// Two hosts are in contact when their distance is within both radio ranges.
pub fn connected(a: &Host, b: &Host) -> bool {
    in_range(a.position, a.range, b.position, b.range)
}

fn in_range(pa: Point, ra: f64, pb: Point, rb: f64) -> bool {
    let r = ra.min(rb);
    pa.distance_sq(&pb) <= r * r
}

#[derive(Debug, Clone)]
struct Transfer {
    /// Sender's copy as it was when the transfer started.
    msg: Message,
    share: u32,
    remaining: f64,
    features: Option<RelayFeatureVector>,
}

#[derive(Debug, Clone, Default)]
struct Slot {
    active: Option<Transfer>,
    /// Offers the gate turned down during this contact.
    rejected: HashSet<MessageId>,
}

/// An open contact between `a < b`; slot 0 sends a to b, slot 1 b to a.
#[derive(Debug, Clone, Default)]
struct Link {
    slots: [Slot; 2],
}

fn endpoints((a, b): (HostId, HostId), dir: usize) -> (HostId, HostId) {
    if dir == 0 {
        (a, b)
    } else {
        (b, a)
    }
}

/// Disjoint mutable borrows of two hosts.
fn pair_mut(hosts: &mut [Host], a: HostId, b: HostId) -> (&mut Host, &mut Host) {
    let (a, b) = (a as usize, b as usize);
    assert_ne!(a, b);
    if a < b {
        let (lo, hi) = hosts.split_at_mut(b);
        (&mut lo[a], &mut hi[0])
    } else {
        let (lo, hi) = hosts.split_at_mut(a);
        (&mut hi[0], &mut lo[b])
    }
}

pub struct World<'a> {
    scenario: &'a Scenario,
    hosts: Vec<Host>,
    links: BTreeMap<(HostId, HostId), Link>,
    history: ContactHistory,
    traffic: TrafficGenerator<SimRng>,
    log: EventLog,
    now: f64,
}

impl<'a> World<'a> {
    pub fn new(scenario: &'a Scenario, seed: u64) -> Result<Self, SimError> {
        let cfg = &scenario.config;
        let mut hosts = Vec::with_capacity(cfg.host_count() as usize);
        for (g, group) in cfg.groups.iter().enumerate() {
            let settings = scenario.router_settings(g);
            for _ in 0..group.count {
                let id = hosts.len() as HostId;
                let rng = stream(seed, Stream::Mobility, id as u64);
                let mut walker = Walker::spawn(&scenario.map, rng, group.speed, group.pause)?;
                let position = walker.position(&scenario.map, 0.0)?;
                hosts.push(Host {
                    id,
                    group: g,
                    range: group.range,
                    bitrate: group.bitrate,
                    position,
                    buffer: Buffer::new(group.buffer_size),
                    router: Router::new(id, &settings),
                    walker,
                    delivered: HashSet::new(),
                    incoming: HashSet::new(),
                });
            }
        }
        let traffic = TrafficGenerator::new(
            cfg.traffic_config(),
            cfg.ttl,
            stream(seed, Stream::Traffic, 0),
        )?;
        Ok(Self {
            scenario,
            hosts,
            links: BTreeMap::new(),
            history: ContactHistory::new(),
            traffic,
            log: EventLog::default(),
            now: 0.0,
        })
    }

    pub fn hosts(&self) -> &[Host] {
        &self.hosts
    }

    pub fn log(&self) -> &EventLog {
        &self.log
    }

    pub fn into_log(self) -> EventLog {
        self.log
    }

    /// Number of open contacts.
    pub fn contacts(&self) -> usize {
        self.links.len()
    }

    pub fn step(&mut self, now: f64) -> Result<(), SimError> {
        self.now = now;
        self.generate_traffic()?;
        self.move_hosts()?;
        self.update_connectivity();
        self.run_transfers()?;
        self.expire_ttl();
        Ok(())
    }

    pub fn run(&mut self) -> Result<(), SimError> {
        let cfg = &self.scenario.config;
        let steps = (cfg.duration / cfg.step + 1e-9).floor() as u64;
        let step = cfg.step;
        for k in 0..=steps {
            self.step(k as f64 * step)?;
        }
        Ok(())
    }

    fn push(&mut self, e: EventRecord) {
        self.log.push(e);
    }

    fn generate_traffic(&mut self) -> Result<(), SimError> {
        for msg in self.traffic.generate(self.now) {
            self.push(EventRecord::message(
                self.now,
                EventKind::Created,
                msg.id,
                msg.src,
                msg.dst,
                msg.size,
                0,
            ));
            self.store(msg.src, msg, None)?;
        }
        Ok(())
    }

    /// Buffers `msg` at `host`, evicting as the host's router dictates.
    /// `share` is the spray quota carried by a relay; `None` means a fresh
    /// message.
    fn store(&mut self, host: HostId, msg: Message, share: Option<u32>) -> Result<(), SimError> {
        let now = self.now;
        let h = &mut self.hosts[host as usize];
        let Host { buffer, router, .. } = h;
        let outcome = buffer.insert_with(msg.clone(), |b| router.drop_order(b))?;
        for ev in outcome.evicted {
            router.on_removed(ev.id);
            self.log.push(
                EventRecord::message(
                    now,
                    EventKind::Dropped,
                    ev.id,
                    host,
                    ev.dst,
                    ev.size,
                    ev.hop_count(),
                )
                .with_reason(Reason::BufferFull),
            );
        }
        if !outcome.accepted {
            self.log.push(
                EventRecord::message(
                    now,
                    EventKind::Dropped,
                    msg.id,
                    host,
                    msg.dst,
                    msg.size,
                    msg.hop_count(),
                )
                .with_reason(Reason::TooBig),
            );
            return Ok(());
        }
        match share {
            None => router.on_created(&msg),
            Some(c) => router.on_received(&msg, c),
        }
        Ok(())
    }

    fn move_hosts(&mut self) -> Result<(), SimError> {
        let map = &self.scenario.map;
        for h in &mut self.hosts {
            h.position = h.walker.position(map, self.now)?;
        }
        Ok(())
    }

    fn update_connectivity(&mut self) {
        let n = self.hosts.len();
        let mut up = Vec::new();
        for i in 0..n {
            let (pi, ri) = (self.hosts[i].position, self.hosts[i].range);
            for j in i + 1..n {
                let hj = &self.hosts[j];
                if in_range(pi, ri, hj.position, hj.range) {
                    up.push((i as HostId, j as HostId));
                }
            }
        }
        let current: HashSet<(HostId, HostId)> = up.iter().copied().collect();

        let gone: Vec<(HostId, HostId)> = self
            .links
            .keys()
            .filter(|k| !current.contains(k))
            .copied()
            .collect();
        for key in gone {
            let mut link = self.links.remove(&key).expect("link present");
            for dir in 0..2 {
                if let Some(tr) = link.slots[dir].active.take() {
                    self.abort(key, dir, tr);
                }
            }
            self.history.record_completed(key.0, key.1);
            self.push(EventRecord::contact(
                self.now,
                EventKind::ContactDown,
                key.0,
                key.1,
            ));
        }

        for key in up {
            if self.links.contains_key(&key) {
                continue;
            }
            self.push(EventRecord::contact(
                self.now,
                EventKind::ContactUp,
                key.0,
                key.1,
            ));
            self.links.insert(key, Link::default());
            self.contact_up(key.0, key.1);
        }
    }

    fn abort(&mut self, key: (HostId, HostId), dir: usize, tr: Transfer) {
        let (s, r) = endpoints(key, dir);
        let id = tr.msg.id;
        self.hosts[r as usize].incoming.remove(&id);
        let sender = &mut self.hosts[s as usize];
        let still = sender.buffer.contains(id);
        sender.router.abort_transfer(id, tr.share, still);
        self.push(
            EventRecord::message(
                self.now,
                EventKind::Aborted,
                id,
                s,
                r,
                tr.msg.size,
                tr.msg.hop_count(),
            )
            .with_reason(Reason::LinkDown),
        );
    }

    fn contact_up(&mut self, a: HostId, b: HostId) {
        let (ha, hb) = pair_mut(&mut self.hosts, a, b);
        match (ha.router.maxprop_mut(), hb.router.maxprop_mut()) {
            (Some(ma), Some(mb)) => MaxProp::exchange(ma, mb),
            (Some(ma), None) => ma.record_meeting(b),
            (None, Some(mb)) => mb.record_meeting(a),
            (None, None) => return,
        }
        for host in [a, b] {
            self.purge_acked(host);
        }
    }

    fn purge_acked(&mut self, host: HostId) {
        let now = self.now;
        let h = &mut self.hosts[host as usize];
        let ids = match h.router.maxprop_mut() {
            Some(mp) => acked_in_buffer(mp.acks(), &h.buffer),
            None => return,
        };
        for id in ids {
            if let Some(m) = h.buffer.remove(id) {
                h.router.on_removed(id);
                self.log.push(
                    EventRecord::message(
                        now,
                        EventKind::Removed,
                        id,
                        host,
                        m.dst,
                        m.size,
                        m.hop_count(),
                    )
                    .with_reason(Reason::Ack),
                );
            }
        }
    }

    fn run_transfers(&mut self) -> Result<(), SimError> {
        let keys: Vec<(HostId, HostId)> = self.links.keys().copied().collect();
        for &key in &keys {
            for dir in 0..2 {
                if self.links[&key].slots[dir].active.is_none() {
                    self.try_start(key, dir);
                }
            }
        }
        let step = self.scenario.config.step;
        for &key in &keys {
            for dir in 0..2 {
                let (s, _) = endpoints(key, dir);
                let bytes = self.hosts[s as usize].bitrate * step;
                let slot = &mut self.links.get_mut(&key).expect("link present").slots[dir];
                let done = match slot.active.as_mut() {
                    Some(tr) => {
                        tr.remaining -= bytes;
                        tr.remaining <= 0.0
                    }
                    None => false,
                };
                if done {
                    let tr = slot.active.take().expect("active transfer");
                    self.complete(key, dir, tr)?;
                    self.try_start(key, dir);
                }
            }
        }
        Ok(())
    }

    /// Starts the best admissible offer on an idle slot, if any.
    fn try_start(&mut self, key: (HostId, HostId), dir: usize) {
        let (s_id, r_id) = endpoints(key, dir);
        let now = self.now;
        let collect = self.scenario.config.collect;
        let World {
            hosts,
            links,
            history,
            log,
            ..
        } = self;
        let (s, r) = pair_mut(hosts, s_id, r_id);
        let slot = &mut links.get_mut(&key).expect("link present").slots[dir];
        let order = {
            let peer_has = |id: MessageId| r.has(id);
            s.router.offer_order(&s.buffer, r_id, &peer_has)
        };
        for id in order {
            if slot.rejected.contains(&id) {
                continue;
            }
            let msg = s.buffer.get(id).expect("offered message is buffered");
            let to_dst = msg.dst == r_id;
            let mut features = None;
            if let Some(gate) = s.router.active_gate() {
                let f = extract_features(msg, r_id, &r.buffer, history, now);
                if !gate.admits(to_dst, || f) {
                    slot.rejected.insert(id);
                    continue;
                }
                features = Some(f);
            }
            if collect && features.is_none() {
                features = Some(extract_features(msg, r_id, &r.buffer, history, now));
            }
            let msg = msg.clone();
            let share = s.router.begin_transfer(id, to_dst);
            r.incoming.insert(id);
            log.push(EventRecord::message(
                now,
                EventKind::Started,
                id,
                s_id,
                r_id,
                msg.size,
                msg.hop_count(),
            ));
            slot.active = Some(Transfer {
                remaining: msg.size as f64,
                msg,
                share,
                features: if collect { features } else { None },
            });
            return;
        }
    }

    fn complete(
        &mut self,
        key: (HostId, HostId),
        dir: usize,
        tr: Transfer,
    ) -> Result<(), SimError> {
        let (s, r) = endpoints(key, dir);
        let now = self.now;
        let id = tr.msg.id;
        let copy = tr.msg.relayed_to(r);
        let hops = copy.hop_count();
        self.push(
            EventRecord::message(now, EventKind::Relayed, id, s, r, copy.size, hops)
                .with_features(tr.features),
        );
        let rh = &mut self.hosts[r as usize];
        rh.incoming.remove(&id);
        if r == copy.dst {
            if rh.delivered.insert(id) {
                rh.router.on_delivered_here(id);
                self.push(EventRecord::message(
                    now,
                    EventKind::Delivered,
                    id,
                    s,
                    r,
                    copy.size,
                    hops,
                ));
            }
        } else if rh.router.has_acked(id) {
            self.push(
                EventRecord::message(now, EventKind::Removed, id, r, copy.dst, copy.size, hops)
                    .with_reason(Reason::Ack),
            );
        } else if !rh.buffer.contains(id) {
            self.store(r, copy, Some(tr.share))?;
        }
        Ok(())
    }

    fn expire_ttl(&mut self) {
        let now = self.now;
        for h in &mut self.hosts {
            for m in h.buffer.expire_ttl(now) {
                h.router.on_removed(m.id);
                self.log.push(
                    EventRecord::message(
                        now,
                        EventKind::Removed,
                        m.id,
                        h.id,
                        m.dst,
                        m.size,
                        m.hop_count(),
                    )
                    .with_reason(Reason::Ttl),
                );
            }
        }
    }
}

/// Runs `scenario` to completion with `seed` and returns its event log.
pub fn run_simulation(scenario: &Scenario, seed: u64) -> Result<EventLog, SimError> {
    let mut world = World::new(scenario, seed)?;
    world.run()?;
    Ok(world.into_log())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn scenario(extra: &str) -> Scenario {
        let text = format!(
            "Scenario.duration = 900\nScenario.map = grid:4x4@60\nGroup1.count = 8\nGroup1.router = epidemic\nGroup1.range = 50\nTraffic.intervalMin = 20\nTraffic.intervalMax = 30\n{extra}"
        );
        Scenario::resolve(parse_config(&text).unwrap()).unwrap()
    }

    #[test]
    fn runs_are_reproducible() {
        let s = scenario("");
        let a = run_simulation(&s, 7).unwrap();
        let b = run_simulation(&s, 7).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        assert!(a.count(EventKind::Created) > 20);
        assert!(a.count(EventKind::ContactUp) > 0);
        let c = run_simulation(&s, 8).unwrap();
        assert_ne!(a.to_csv(), c.to_csv());
    }

    #[test]
    fn contacts_alternate_per_pair() {
        let log = run_simulation(&scenario(""), 3).unwrap();
        let mut open: HashSet<(HostId, HostId)> = HashSet::new();
        for e in log.iter() {
            match e.kind {
                EventKind::ContactUp => assert!(open.insert((e.from, e.to))),
                EventKind::ContactDown => assert!(open.remove(&(e.from, e.to))),
                _ => {}
            }
        }
    }

    #[test]
    fn buffers_never_overflow() {
        let s = scenario("Group1.bufferSize = 2M\n");
        let mut w = World::new(&s, 1).unwrap();
        for k in 0..=900 {
            w.step(k as f64).unwrap();
            for h in w.hosts() {
                assert!(h.buffer.used() <= h.buffer.capacity());
            }
        }
    }

    #[test]
    fn pair_mut_either_order() {
        let s = scenario("");
        let mut w = World::new(&s, 1).unwrap();
        let (a, b) = pair_mut(&mut w.hosts, 5, 2);
        assert_eq!((a.id, b.id), (5, 2));
    }
}
