//! Router implementations and the contract the engine drives them through.
//!
//! The engine owns contacts and transfers; a router only decides what to
//! offer a peer, in which order, and what to evict when its buffer is full.

pub mod epidemic;
pub mod maxprop;
pub mod spray;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

pub use epidemic::{epidemic_offer, fifo_drop_order};
pub use maxprop::{
    ack_exchange, maxprop_order_queue, maxprop_path_cost, AckSet, DeliveryLikelihoodTable,
    LikelihoodSnapshot, MaxProp,
};
pub use spray::{binary_split, snw_offer, SprayState};

use crate::messaging::{Buffer, HostId, Message, MessageId};
use crate::ml::{extract_features, ContactHistory, GbdtModel, RelayFeatureVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RouterKind {
    Epidemic,
    SprayAndWait,
    MaxProp,
    MlMaxProp,
}

impl RouterKind {
    pub const ALL: [RouterKind; 4] = [
        RouterKind::Epidemic,
        RouterKind::SprayAndWait,
        RouterKind::MaxProp,
        RouterKind::MlMaxProp,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            RouterKind::Epidemic => "epidemic",
            RouterKind::SprayAndWait => "snw",
            RouterKind::MaxProp => "maxprop",
            RouterKind::MlMaxProp => "mlmaxprop",
        }
    }
}

impl fmt::Display for RouterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RouterKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        RouterKind::ALL
            .into_iter()
            .find(|k| k.as_str() == lower)
            .ok_or_else(|| {
                format!("unknown router `{s}` (expected epidemic, snw, maxprop or mlmaxprop)")
            })
    }
}

/// Learned admission check applied to each MaxProp offer.
#[derive(Debug, Clone)]
pub struct ForwardingGate {
    pub model: Option<Arc<GbdtModel>>,
    pub threshold: f64,
}

impl ForwardingGate {
    /// Offer unless the model predicts a relay probability below the
    /// threshold. The final hop and a missing model always pass.
    pub fn admits<F>(&self, peer_is_destination: bool, features: F) -> bool
    where
        F: FnOnce() -> RelayFeatureVector,
    {
        if peer_is_destination {
            return true;
        }
        match &self.model {
            None => true,
            Some(model) => model.predict_prob(&features()) >= self.threshold,
        }
    }
}

/// Gate decision for offering `msg` to `candidate`.
pub fn mlmaxprop_gate(
    model: Option<&GbdtModel>,
    msg: &Message,
    candidate: HostId,
    candidate_buffer: &Buffer,
    history: &ContactHistory,
    now: f64,
    threshold: f64,
) -> bool {
    if candidate == msg.dst {
        return true;
    }
    match model {
        None => true,
        Some(m) => {
            m.predict_prob(&extract_features(
                msg,
                candidate,
                candidate_buffer,
                history,
                now,
            )) >= threshold
        }
    }
}

/// Per-group router parameters.
#[derive(Debug, Clone)]
pub struct RouterSettings {
    pub kind: RouterKind,
    pub snw_copies: u32,
    pub hop_threshold: usize,
    pub ml_threshold: f64,
    pub model: Option<Arc<GbdtModel>>,
}

#[derive(Debug, Clone)]
pub enum Router {
    Epidemic,
    SprayAndWait(SprayState),
    MaxProp {
        state: MaxProp,
        gate: Option<ForwardingGate>,
    },
}

impl Router {
    pub fn new(owner: HostId, settings: &RouterSettings) -> Self {
        match settings.kind {
            RouterKind::Epidemic => Router::Epidemic,
            RouterKind::SprayAndWait => Router::SprayAndWait(SprayState::new(settings.snw_copies)),
            RouterKind::MaxProp => Router::MaxProp {
                state: MaxProp::new(owner, settings.hop_threshold),
                gate: None,
            },
            RouterKind::MlMaxProp => Router::MaxProp {
                state: MaxProp::new(owner, settings.hop_threshold),
                gate: Some(ForwardingGate {
                    model: settings.model.clone(),
                    threshold: settings.ml_threshold,
                }),
            },
        }
    }

    pub fn kind(&self) -> RouterKind {
        match self {
            Router::Epidemic => RouterKind::Epidemic,
            Router::SprayAndWait(_) => RouterKind::SprayAndWait,
            Router::MaxProp { gate: None, .. } => RouterKind::MaxProp,
            Router::MaxProp { gate: Some(_), .. } => RouterKind::MlMaxProp,
        }
    }

    pub fn maxprop_mut(&mut self) -> Option<&mut MaxProp> {
        match self {
            Router::MaxProp { state, .. } => Some(state),
            _ => None,
        }
    }

    /// The gate, when one with a loaded model is active.
    pub fn active_gate(&self) -> Option<&ForwardingGate> {
        match self {
            Router::MaxProp { gate: Some(g), .. } if g.model.is_some() => Some(g),
            _ => None,
        }
    }

    pub fn spray(&self) -> Option<&SprayState> {
        match self {
            Router::SprayAndWait(s) => Some(s),
            _ => None,
        }
    }

    pub fn on_created(&mut self, msg: &Message) {
        if let Router::SprayAndWait(s) = self {
            s.on_created(msg);
        }
    }

    pub fn on_received(&mut self, msg: &Message, copies: u32) {
        if let Router::SprayAndWait(s) = self {
            s.on_received(msg, copies);
        }
    }

    pub fn on_removed(&mut self, id: MessageId) {
        if let Router::SprayAndWait(s) = self {
            s.on_removed(id);
        }
    }

    /// This host has just received `id` as its destination.
    pub fn on_delivered_here(&mut self, id: MessageId) {
        if let Router::MaxProp { state, .. } = self {
            state.record_delivery(id);
        }
    }

    pub fn has_acked(&self, id: MessageId) -> bool {
        match self {
            Router::MaxProp { state, .. } => state.acks().contains(id),
            _ => false,
        }
    }

    /// Ordered offer list for `peer`, excluding anything `peer_has`.
    pub fn offer_order(
        &mut self,
        buffer: &Buffer,
        peer: HostId,
        peer_has: &dyn Fn(MessageId) -> bool,
    ) -> Vec<MessageId> {
        match self {
            Router::Epidemic => epidemic_offer(buffer, peer, peer_has),
            Router::SprayAndWait(s) => snw_offer(buffer, s, peer, peer_has),
            Router::MaxProp { state, .. } => state.offer_order(buffer, peer, peer_has),
        }
    }

    pub fn drop_order(&mut self, buffer: &Buffer) -> Vec<MessageId> {
        match self {
            Router::Epidemic | Router::SprayAndWait(_) => fifo_drop_order(buffer),
            Router::MaxProp { state, .. } => state.drop_order(buffer),
        }
    }

    /// Called when a transfer of `id` starts; returns the copy quota it carries.
    pub fn begin_transfer(&mut self, id: MessageId, to_destination: bool) -> u32 {
        match self {
            Router::SprayAndWait(s) => s.begin_transfer(id, to_destination),
            _ => 0,
        }
    }

    pub fn abort_transfer(&mut self, id: MessageId, share: u32, still_buffered: bool) {
        if let Router::SprayAndWait(s) = self {
            s.abort_transfer(id, share, still_buffered);
        }
    }
}
