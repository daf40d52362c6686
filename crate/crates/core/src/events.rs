//! Simulation event log and its CSV form.

use std::fmt::{self, Write as _};
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use thiserror::Error;

use crate::messaging::{HostId, MessageId};
use crate::ml::RelayFeatureVector;

pub const CSV_HEADER: &str =
    "time,event,msg_id,from,to,size,hop_count,reason,f_contact_freq,f_buf_occ,f_hop,f_age,f_ttl_rem";

#[derive(Debug, Error)]
pub enum LogError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unexpected header `{0}`")]
    Header(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EventKind {
    Created,
    Started,
    Relayed,
    Aborted,
    Dropped,
    Removed,
    Delivered,
    ContactUp,
    ContactDown,
}

impl EventKind {
    pub const ALL: [EventKind; 9] = [
        EventKind::Created,
        EventKind::Started,
        EventKind::Relayed,
        EventKind::Aborted,
        EventKind::Dropped,
        EventKind::Removed,
        EventKind::Delivered,
        EventKind::ContactUp,
        EventKind::ContactDown,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::Created => "created",
            EventKind::Started => "started",
            EventKind::Relayed => "relayed",
            EventKind::Aborted => "aborted",
            EventKind::Dropped => "dropped",
            EventKind::Removed => "removed",
            EventKind::Delivered => "delivered",
            EventKind::ContactUp => "contact_up",
            EventKind::ContactDown => "contact_down",
        }
    }
}

impl FromStr for EventKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EventKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown event kind `{s}`"))
    }
}

/// Why a message left a buffer or a transfer stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Reason {
    TooBig,
    BufferFull,
    Ttl,
    Ack,
    LinkDown,
}

impl Reason {
    pub fn as_str(&self) -> &'static str {
        match self {
            Reason::TooBig => "too_big",
            Reason::BufferFull => "buffer_full",
            Reason::Ttl => "ttl",
            Reason::Ack => "ack",
            Reason::LinkDown => "link_down",
        }
    }
}

impl FromStr for Reason {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [
            Reason::TooBig,
            Reason::BufferFull,
            Reason::Ttl,
            Reason::Ack,
            Reason::LinkDown,
        ]
        .into_iter()
        .find(|r| r.as_str() == s)
        .ok_or_else(|| format!("unknown reason `{s}`"))
    }
}

/// One log line.
///
/// `from`/`to` are sender/receiver for transfer events, the two endpoints
/// for contact events, source/destination for `created`, and
/// host/destination for `dropped` and `removed`.
#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord {
    pub time: f64,
    pub kind: EventKind,
    pub msg_id: Option<MessageId>,
    pub from: HostId,
    pub to: HostId,
    pub size: Option<u64>,
    pub hop_count: Option<usize>,
    pub reason: Option<Reason>,
    pub features: Option<RelayFeatureVector>,
}

impl EventRecord {
    pub fn contact(time: f64, kind: EventKind, a: HostId, b: HostId) -> Self {
        Self {
            time,
            kind,
            msg_id: None,
            from: a,
            to: b,
            size: None,
            hop_count: None,
            reason: None,
            features: None,
        }
    }

    pub fn message(
        time: f64,
        kind: EventKind,
        msg_id: MessageId,
        from: HostId,
        to: HostId,
        size: u64,
        hop_count: usize,
    ) -> Self {
        Self {
            time,
            kind,
            msg_id: Some(msg_id),
            from,
            to,
            size: Some(size),
            hop_count: Some(hop_count),
            reason: None,
            features: None,
        }
    }

    pub fn with_reason(mut self, reason: Reason) -> Self {
        self.reason = Some(reason);
        self
    }

    pub fn with_features(mut self, features: Option<RelayFeatureVector>) -> Self {
        self.features = features;
        self
    }

    fn write_csv(&self, out: &mut String) {
        let _ = write!(out, "{:.3},{},", self.time, self.kind.as_str());
        if let Some(id) = self.msg_id {
            let _ = write!(out, "{id}");
        }
        let _ = write!(out, ",{},{},", self.from, self.to);
        if let Some(s) = self.size {
            let _ = write!(out, "{s}");
        }
        out.push(',');
        if let Some(h) = self.hop_count {
            let _ = write!(out, "{h}");
        }
        out.push(',');
        if let Some(r) = self.reason {
            out.push_str(r.as_str());
        }
        match &self.features {
            Some(f) => {
                for v in f.to_array() {
                    let _ = write!(out, ",{v}");
                }
            }
            None => out.push_str(",,,,,"),
        }
        out.push('\n');
    }

    fn parse_csv(line: &str, line_no: usize) -> Result<Self, LogError> {
        let err = |msg: String| LogError::Parse { line: line_no, msg };
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 13 {
            return Err(err(format!("expected 13 columns, found {}", cols.len())));
        }
        fn opt<T: FromStr>(s: &str) -> Result<Option<T>, String> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|_| format!("bad field `{s}`"))
            }
        }
        let time: f64 = cols[0]
            .parse()
            .map_err(|_| err(format!("bad time `{}`", cols[0])))?;
        let kind: EventKind = cols[1].parse().map_err(err)?;
        let msg_id = opt::<MessageId>(cols[2]).map_err(err)?;
        let from = cols[3]
            .parse()
            .map_err(|_| err(format!("bad host `{}`", cols[3])))?;
        let to = cols[4]
            .parse()
            .map_err(|_| err(format!("bad host `{}`", cols[4])))?;
        let size = opt(cols[5]).map_err(err)?;
        let hop_count = opt(cols[6]).map_err(err)?;
        let reason = if cols[7].is_empty() {
            None
        } else {
            Some(cols[7].parse().map_err(err)?)
        };
        let feats: Vec<Option<f64>> = cols[8..13]
            .iter()
            .map(|c| opt::<f64>(c))
            .collect::<Result<_, _>>()
            .map_err(err)?;
        let features = if feats.iter().all(Option::is_some) {
            let v: Vec<f64> = feats.into_iter().flatten().collect();
            Some(RelayFeatureVector::from_slice(&v))
        } else if feats.iter().all(Option::is_none) {
            None
        } else {
            return Err(err("partially filled feature columns".into()));
        };
        Ok(Self {
            time,
            kind,
            msg_id,
            from,
            to,
            size,
            hop_count,
            reason,
            features,
        })
    }
}

/// Ordered list of events from one run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventLog {
    pub events: Vec<EventRecord>,
}

impl EventLog {
    pub fn new(events: Vec<EventRecord>) -> Self {
        Self { events }
    }

    pub fn push(&mut self, e: EventRecord) {
        self.events.push(e);
    }

    pub fn iter(&self) -> impl Iterator<Item = &EventRecord> {
        self.events.iter()
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn count(&self, kind: EventKind) -> usize {
        self.events.iter().filter(|e| e.kind == kind).count()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.events.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for e in &self.events {
            e.write_csv(&mut out);
        }
        out
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(self.to_csv().as_bytes())
    }

    pub fn read_csv<R: BufRead>(reader: R) -> Result<Self, LogError> {
        let mut lines = reader.lines();
        let header = lines.next().transpose()?.unwrap_or_default();
        if header.trim() != CSV_HEADER {
            return Err(LogError::Header(header));
        }
        let mut events = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            events.push(EventRecord::parse_csv(line.trim_end(), i + 2)?);
        }
        Ok(Self { events })
    }
}

impl fmt::Display for EventLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_csv())
    }
}
