//! Deterministic delay-tolerant network simulator with a learned
//! forwarding gate for MaxProp.
//!
//! A run is a pure function of (scenario, seed): hosts walk shortest paths
//! on a waypoint map, exchange messages over contacts, and every event is
//! written to a log that the analytics and training pipelines consume.

pub mod analytics;
pub mod commands;
pub mod config;
pub mod events;
pub mod lineage;
pub mod map;
pub mod messaging;
pub mod ml;
pub mod mobility;
pub mod rng;
pub mod routing;
pub mod sim;

pub use config::{load_config, parse_config, Scenario, ScenarioConfig};
pub use events::{EventKind, EventLog, EventRecord};
pub use routing::RouterKind;
pub use sim::run_simulation;
