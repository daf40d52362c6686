use rand::seq::SliceRandom;
use thiserror::Error;

use super::features::RelayFeatureVector;
use crate::events::{EventKind, EventLog};
use crate::lineage::delivered_paths;
use crate::rng::{stream, Stream};

pub const MIN_SPLIT_EXAMPLES: usize = 5;

#[derive(Debug, Error, PartialEq)]
pub enum DatasetError {
    #[error("relayed event at t={time} for {msg} has no feature snapshot (log not recorded in collect mode)")]
    MissingFeatures { time: f64, msg: String },
    #[error("dataset has {0} examples; at least {MIN_SPLIT_EXAMPLES} are needed to split")]
    TooSmall(usize),
    #[error("train fraction must be in (0, 1), got {0}")]
    BadFraction(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingExample {
    pub features: RelayFeatureVector,
    pub label: u8,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub examples: Vec<TrainingExample>,
}

impl Dataset {
    pub fn new(examples: Vec<TrainingExample>) -> Self {
        Self { examples }
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.examples.iter().filter(|e| e.label == 1).count()
    }

    pub fn extend(&mut self, other: Dataset) {
        self.examples.extend(other.examples);
    }
}

/// One example per `relayed` event. The label is 1 when the receiver lies
/// on the hop path of some delivered copy of the same message.
pub fn build_dataset(log: &EventLog) -> Result<Dataset, DatasetError> {
    let paths = delivered_paths(log);
    let mut examples = Vec::new();
    for e in log.iter().filter(|e| e.kind == EventKind::Relayed) {
        let id = e.msg_id.expect("relayed events carry a message id");
        let features = e.features.ok_or_else(|| DatasetError::MissingFeatures {
            time: e.time,
            msg: id.to_string(),
        })?;
        let on_path = paths
            .get(&id)
            .is_some_and(|ps| ps.iter().any(|p| p.contains(&e.to)));
        examples.push(TrainingExample {
            features,
            label: on_path as u8,
        });
    }
    if examples.is_empty() {
        log::warn!("event log has no relayed events; dataset is empty");
    }
    Ok(Dataset::new(examples))
}

/// Seeded shuffle, then the first `ceil(train_fraction * n)` examples train.
pub fn split_dataset(
    ds: &Dataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset), DatasetError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(DatasetError::BadFraction(train_fraction));
    }
    let n = ds.len();
    if n < MIN_SPLIT_EXAMPLES {
        return Err(DatasetError::TooSmall(n));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut stream(seed, Stream::Split, 0));
    let n_train = ((train_fraction * n as f64) - 1e-9).ceil() as usize;
    let pick = |idx: &[usize]| Dataset::new(idx.iter().map(|&i| ds.examples[i]).collect());
    Ok((pick(&order[..n_train]), pick(&order[n_train..])))
}
