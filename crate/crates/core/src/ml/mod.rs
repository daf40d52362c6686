//! Learned forwarding gate: features, dataset construction, boosted trees.

pub mod dataset;
pub mod eval;
pub mod features;
pub mod gbdt;

pub use dataset::{build_dataset, split_dataset, Dataset, DatasetError, TrainingExample};
pub use eval::{auc, evaluate_model, Evaluation};
pub use features::{extract_features, ContactHistory, RelayFeatureVector, FEATURE_NAMES};
pub use gbdt::{train_gbdt, GbdtModel, GbdtParams, ModelError, TrainError, TrainReport};
