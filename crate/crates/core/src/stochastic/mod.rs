//! Random inputs, replication and estimators.

mod distribution;
mod estimate;
mod montecarlo;
mod stream;

pub use distribution::{DistributionSpec, Family, ThetaBinding};
pub use estimate::{compensated_sum, Estimate};
pub use montecarlo::{
    estimate_antithetic, estimate_crn_difference, estimate_finite_horizon,
    estimate_independent_difference, estimate_steady_state, kendall_tau, summarize, MonteCarlo,
    SteadyEstimate, SteadyStateConfig, StochasticModel, TREND_LIMIT,
};
pub use stream::{service_slot, stream_id, RandomStream, INTERARRIVAL_SLOT};
