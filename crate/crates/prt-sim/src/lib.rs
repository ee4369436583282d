//! Discrete-event simulation of a personal rapid transit (PRT) network whose
//! empty vehicles are managed by the stations themselves.
//!
//! Stations exchange state only with peers inside a communication horizon,
//! expressed as a multiple of the network's average inter-station distance
//! (AISD). Within that neighborhood a station calls empties in when
//! passengers wait, expels them when its apron jams, and takes part in a
//! periodic balancing pass; an optional controller widens or narrows the
//! horizon as congestion comes and goes. Runs are deterministic in the
//! scenario and seed.
//!
//! The `examples/` directory is the front door, one runnable program per
//! capability:
//!
//! * `network_distances` - distance matrix, AISD and horizon neighborhoods
//!   of the bundled 12-station network
//! * `hand_trace` - a two-station micro scenario, event by event
//! * `uniform_demand` - horizon sweep under spatially uniform demand
//! * `event_inbound` - everyone rides toward one venue; how long the system
//!   needs to digest the crowd afterwards
//! * `event_outbound` - the crowd leaves the venue; waiting times against
//!   shrinking horizons
//! * `adaptive_horizon` - fixed narrow horizon versus the adaptive
//!   controller on the same overload
//! * `horizon_sweep` - the full CSV pipeline on a scenario file
//!
//! Scenario files live next to them in `scenarios/`. The `prt-sim` binary
//! wraps [`sweep::sweep`] for the command line.

pub mod demand;
pub mod engine;
pub mod management;
pub mod metrics;
pub mod network;
pub mod scenario;
pub mod sweep;

pub use demand::{DemandKind, GroupSizeDistribution, OrderId, TransitOrder};
pub use engine::{run, EngineError, RunOptions, RunOutput, Sim, VehicleId};
pub use management::{AdaptiveParams, DispatchReason, ManagementParams};
pub use metrics::{MetricsReport, RestOutcome, Scope};
pub use network::{
    build_distance_matrix, horizon_table, route, DistanceMatrix, Horizon, HorizonTable, Network,
    StationId,
};
pub use scenario::{load_scenario, parse_scenario, Scenario};
pub use sweep::{aggregate, emit_table, sweep, write_csv, Aggregate, RunRow};
