//! Economic model of a blob data market next to the L1 calldata market.
//!
//! * [`cost_model`]: optimal posting interval and cost of a single rollup on
//!   each venue, and the blob price that makes it indifferent between them.
//! * [`equilibrium`]: clearing blob price for a target blob rate and the
//!   resulting participation threshold, with and without a blob size cap.
//! * [`merging`]: repricing the market when two rollups share a blob stream.
//! * [`bargaining`]: Nash-bargaining split of a shared blob's price.
//! * [`simulate`]: discrete-event replay of a posting policy.
//!
//! Every model is generic over [`Scalar`] (`f32` or `f64`); the `*F64`
//! aliases below fix the common double-precision instantiation.

pub mod bargaining;
pub mod cost_model;
pub mod equilibrium;
pub mod error;
pub mod merging;
pub mod scalar;
pub mod simulate;

pub use bargaining::{
    disagreement_point, large_payment_closed_form, nash_split, nash_split_multi, structural_ratio_bound,
    BargainInput, BargainOutcome, MultiOutcome, MultiSplit, NashSplit, Party,
};
pub use cost_model::{
    blob_cost_per_tx, blob_policy, capped_blob_policy, choose_strategy, indifference_price, l1_cost_per_tx, l1_policy,
    MarketParams, PostingPolicy, Rollup, Venue,
};
pub use equilibrium::{
    capped_clearing_price, clearing_price, solve_equilibrium, solve_equilibrium_capped, Assignment, Equilibrium,
};
pub use error::{ModelError, Result};
pub use merging::{joint_policy, merge_price, MergeCase, MergeOutcome};
pub use scalar::Scalar;
pub use simulate::{grid_optimize, run as simulate, ArrivalModel, SimConfig, SimReport};

pub type MarketParamsF64 = MarketParams<f64>;
pub type RollupF64 = Rollup<f64>;
pub type PostingPolicyF64 = PostingPolicy<f64>;
pub type EquilibriumF64 = Equilibrium<f64>;
pub type MergeOutcomeF64 = MergeOutcome<f64>;
pub type BargainInputF64 = BargainInput<f64>;
pub type BargainOutcomeF64 = BargainOutcome<f64>;
pub type SimConfigF64 = SimConfig<f64>;
pub type SimReportF64 = SimReport<f64>;

pub type MarketParamsF32 = MarketParams<f32>;
pub type RollupF32 = Rollup<f32>;
pub type EquilibriumF32 = Equilibrium<f32>;

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
struct ReadmeDoctests;
