//! Simulator for trust-integrated, congestion-aware, energy-efficient
//! routing (TCEER) in wireless multimedia sensor networks.
//!
//! Nodes score their one-hop neighbors with a node potential built from two
//! fuzzy controllers, one over trust and buffer congestion and one over
//! residual energy and geometric progress, and forward each packet to the
//! best-scoring neighbor until it reaches the base station. Watchdog
//! observations feed a geometric-mean trust model that permanently blocks
//! misbehaving nodes.

pub mod config;
pub mod error;
pub mod flc;
pub mod metrics;
pub mod radio;
pub mod routing;
pub mod sim;
pub mod topology;
pub mod trust;

pub use config::{AttackKind, MaliciousSpec, SimConfig};
pub use error::{ConfigError, FlcError, MetricsError, SimError, TopologyError, TrustError};
pub use routing::{NetworkView, NextHop, Router, RouterKind};
pub use sim::{
    fmt_rounds, lifetime, run, run_baseline, run_router, trace_source, Lifetime, RoundStats, RouteOutcome, RouteTrace,
    RunOptions, SimOutput, Simulation,
};
pub use topology::{NodeId, Position, Topology};
pub use trust::{Classification, TrustLedger, TrustRecord};
