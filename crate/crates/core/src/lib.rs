//! Simulation of queueing systems by recursions on arrival and departure
//! epochs, with replicated estimation and pathwise derivatives.
//!
//! Engines: [`simulate_gg1`], [`simulate_open_tandem`],
//! [`simulate_closed_tandem`], [`simulate_ggm`], [`simulate_network`], or
//! [`simulate`] through a [`ModelSpec`]. [`des_simulate`] is an independent
//! event-driven implementation of the same models.

pub mod algebra;
pub mod des;
pub mod error;
pub mod ipa;
pub mod metrics;
pub mod model;
pub mod multiserver;
pub mod network;
pub mod recursions;
pub mod stochastic;
pub mod types;
pub mod validate;

pub use algebra::{Exact, Ops, Scalar, TangentEpoch, Tangents};
pub use des::{des_simulate, max_departure_gap};
pub use error::{Result, SimError};
pub use ipa::{fd_gradient, ipa_gradient, propagate_tangents, GradientEstimate, TangentRun};
pub use metrics::{
    idle_time, multiserver_metrics, node_metrics, system_metrics, window_metrics, Measure,
    NodeMeasure, NodeMetrics, SystemMeasure, SystemMetrics,
};
pub use model::{simulate, ModelInputs, ModelSpec};
pub use multiserver::{departure_bruteforce, simulate_ggm, GGmSpec, SUBSET_GUARD};
pub use network::{
    arrival_epoch_bruteforce, closed_tandem_as_network, network_residual, routed_departures,
    simulate_network, tandem_as_network, NetworkEncoding, NetworkSpec, RoutingPlan, RoutingRule,
};
pub use recursions::{
    simulate_closed_tandem, simulate_gg1, simulate_open_tandem, Blocking, ClosedTandemSpec,
    TandemSpec,
};
pub use stochastic::{
    estimate_antithetic, estimate_crn_difference, estimate_finite_horizon,
    estimate_independent_difference, estimate_steady_state, DistributionSpec, Estimate, Family,
    MonteCarlo, RandomStream, SteadyEstimate, SteadyStateConfig, StochasticModel, ThetaBinding,
};
pub use types::{Capacity, DurationSequence, Epoch, Role, SamplePath};
