//! Feedback capacity and zero-error coding for the runlength-limited binary
//! erasure channel.
//!
//! * [`constraint`]: (d,k) constraint graphs, sequence validation and
//!   noiseless capacity.
//! * [`markov`]: finite Markov chains, stationary distributions and the
//!   chains induced by the coding scheme.
//! * [`capacity`]: the scheme rate, feedback capacity and the companion
//!   (d,∞) and (1,2) results.
//! * [`codec`]: the zero-error variable-length scheme over an integer
//!   message interval.
//! * [`sim`]: seeded erasure channel and Monte Carlo harness.

pub mod capacity;
pub mod codec;
pub mod constraint;
pub mod markov;
pub mod optimize;
pub mod sim;

pub use capacity::{
    capacity_12, delta_chain, fb_upper_2inf, feedback_capacity, grid_max_rate, h2,
    nc_capacity_d_inf, rate, stationarity_residual, ub_12_two_param, CapacityError, CapacityResult,
    GridOptimum, SchemeParams,
};
pub use codec::{
    transmit_message, Channel, ChannelOutput, CodecError, CodingParams, LabelId, MessageInterval,
    Partition, SchemeSession, Transmission, ZeroSide,
};
pub use constraint::{ConstraintError, ConstraintState, RllConstraint};
pub use markov::{FiniteChain, MarkovError, StationaryDist};
pub use sim::{BecChannel, DeltaChoice, SimConfig, SimError, SimReport};
