//! Per-run message statistics.

use std::collections::HashMap;

use thiserror::Error;

use crate::events::{EventKind, EventLog};

#[derive(Debug, Error, PartialEq)]
pub enum ReportError {
    #[error("log contains no created messages")]
    NoMessages,
}

/// Counters and derived metrics for one run. Latency and hop metrics are
/// `None` when nothing was delivered.
#[derive(Debug, Clone, PartialEq)]
pub struct MessageStatsReport {
    pub created: u64,
    pub started: u64,
    pub relayed: u64,
    pub aborted: u64,
    pub dropped: u64,
    pub removed: u64,
    pub delivered: u64,
    pub delivery_prob: f64,
    /// Transmissions per delivered message: relayed / delivered.
    pub overhead_ratio: Option<f64>,
    pub latency_avg: Option<f64>,
    pub latency_med: Option<f64>,
    pub hopcount_avg: Option<f64>,
}

/// Metrics the comparison tooling knows how to pull out of a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    DeliveryProb,
    OverheadRatio,
    LatencyAvg,
    LatencyMed,
    HopcountAvg,
    Relayed,
}

impl Metric {
    pub const ALL: [Metric; 6] = [
        Metric::DeliveryProb,
        Metric::OverheadRatio,
        Metric::LatencyAvg,
        Metric::LatencyMed,
        Metric::HopcountAvg,
        Metric::Relayed,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Metric::DeliveryProb => "delivery_prob",
            Metric::OverheadRatio => "overhead_ratio",
            Metric::LatencyAvg => "latency_avg",
            Metric::LatencyMed => "latency_med",
            Metric::HopcountAvg => "hopcount_avg",
            Metric::Relayed => "relayed",
        }
    }

    pub fn of(&self, r: &MessageStatsReport) -> Option<f64> {
        match self {
            Metric::DeliveryProb => Some(r.delivery_prob),
            Metric::OverheadRatio => r.overhead_ratio,
            Metric::LatencyAvg => r.latency_avg,
            Metric::LatencyMed => r.latency_med,
            Metric::HopcountAvg => r.hopcount_avg,
            Metric::Relayed => Some(r.relayed as f64),
        }
    }
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

pub fn compute_report(log: &EventLog) -> Result<MessageStatsReport, ReportError> {
    let mut counts: HashMap<EventKind, u64> = HashMap::new();
    let mut created_at = HashMap::new();
    let mut latencies = Vec::new();
    let mut hops = 0u64;
    for e in log.iter() {
        *counts.entry(e.kind).or_default() += 1;
        match e.kind {
            EventKind::Created => {
                if let Some(id) = e.msg_id {
                    created_at.insert(id, e.time);
                }
            }
            EventKind::Delivered => {
                if let Some(t0) = e.msg_id.and_then(|id| created_at.get(&id)) {
                    latencies.push(e.time - t0);
                }
                hops += e.hop_count.unwrap_or(0) as u64;
            }
            _ => {}
        }
    }
    let c = |k| counts.get(&k).copied().unwrap_or(0);
    let created = c(EventKind::Created);
    if created == 0 {
        return Err(ReportError::NoMessages);
    }
    let delivered = c(EventKind::Delivered);
    let relayed = c(EventKind::Relayed);
    let per_delivery = |x: f64| (delivered > 0).then(|| x / delivered as f64);
    let latency_med = (!latencies.is_empty()).then(|| median(&mut latencies.clone()));
    Ok(MessageStatsReport {
        created,
        started: c(EventKind::Started),
        relayed,
        aborted: c(EventKind::Aborted),
        dropped: c(EventKind::Dropped),
        removed: c(EventKind::Removed),
        delivered,
        delivery_prob: delivered as f64 / created as f64,
        overhead_ratio: per_delivery(relayed as f64),
        latency_avg: per_delivery(latencies.iter().sum()),
        latency_med,
        hopcount_avg: per_delivery(hops as f64),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::EventRecord;
    use crate::messaging::MessageId;

    fn ev(t: f64, kind: EventKind, id: u64, hops: usize) -> EventRecord {
        EventRecord::message(t, kind, MessageId(id), 0, 1, 10, hops)
    }

    #[test]
    fn crafted_log() {
        let mut events = Vec::new();
        for i in 1..=4 {
            events.push(ev(i as f64, EventKind::Created, i, 0));
        }
        for _ in 0..6 {
            events.push(ev(5.0, EventKind::Relayed, 1, 1));
        }
        events.push(ev(11.0, EventKind::Delivered, 1, 1));
        events.push(ev(32.0, EventKind::Delivered, 2, 3));
        let r = compute_report(&EventLog::new(events)).unwrap();
        assert_eq!(r.delivery_prob, 0.5);
        assert_eq!(r.latency_avg, Some(20.0));
        assert_eq!(r.latency_med, Some(20.0));
        assert_eq!(r.hopcount_avg, Some(2.0));
        assert_eq!(r.overhead_ratio, Some(3.0));
    }

    #[test]
    fn nothing_delivered() {
        let r = compute_report(&EventLog::new(vec![ev(0.0, EventKind::Created, 1, 0)])).unwrap();
        assert_eq!(r.delivery_prob, 0.0);
        assert_eq!(
            (r.overhead_ratio, r.latency_avg, r.hopcount_avg),
            (None, None, None)
        );
    }

    #[test]
    fn empty_log_is_an_error() {
        assert_eq!(
            compute_report(&EventLog::default()),
            Err(ReportError::NoMessages)
        );
    }
}
