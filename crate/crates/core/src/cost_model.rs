//! Per-rollup cost optimization for the two posting venues.
//!
//! A rollup with arrival rate `R` that posts every `t` time units pays a
//! fixed posting cost plus a delay cost of `a * R * t^2 / 2` per post. On the
//! blob market the fixed cost is `P0*G + B`; on L1 it is `P0*G` plus `P1*G`
//! per transaction. Both per-transaction costs are convex in `t`, so the
//! optimal posting interval has a closed form.

use std::fmt;

use crate::error::{invalid, ModelError, Result};
use crate::scalar::Scalar;

/// Global market constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketParams<T> {
    /// Delay cost per transaction per time unit (`a`).
    pub delay_cost: T,
    /// L1 gas price (`G`).
    pub gas_price: T,
    /// Metadata gas of a posting transaction (`P0`).
    pub metadata_gas: T,
    /// Calldata gas per batched transaction (`P1`).
    pub calldata_gas: T,
    /// Target blobs per time unit (`k`).
    pub target_blobs: T,
    /// Maximum transactions per blob (`U`).
    pub max_blob_size: Option<T>,
    /// Protocol minimum blob price, charged when blob demand is zero.
    pub price_floor: T,
}

impl<T: Scalar> MarketParams<T> {
    pub fn new(delay_cost: T, gas_price: T, metadata_gas: T, calldata_gas: T, target_blobs: T) -> Self {
        Self {
            delay_cost,
            gas_price,
            metadata_gas,
            calldata_gas,
            target_blobs,
            max_blob_size: None,
            price_floor: T::zero(),
        }
    }

    pub fn with_max_blob_size(mut self, cap: T) -> Self {
        self.max_blob_size = Some(cap);
        self
    }

    pub fn with_price_floor(mut self, floor: T) -> Self {
        self.price_floor = floor;
        self
    }

    pub fn validate(&self) -> Result<()> {
        positive("delay_cost", self.delay_cost)?;
        non_negative("gas_price", self.gas_price)?;
        non_negative("metadata_gas", self.metadata_gas)?;
        non_negative("calldata_gas", self.calldata_gas)?;
        positive("target_blobs", self.target_blobs)?;
        non_negative("price_floor", self.price_floor)?;
        if let Some(cap) = self.max_blob_size {
            positive("max_blob_size", cap)?;
        }
        Ok(())
    }

    /// Gas cost of the metadata carried by every posting transaction (`P0*G`).
    pub fn metadata_cost(&self) -> T {
        self.metadata_gas * self.gas_price
    }

    /// Gas cost of one transaction's calldata in an L1 batch (`P1*G`).
    pub fn calldata_cost(&self) -> T {
        self.calldata_gas * self.gas_price
    }
}

/// An L2 chain identified by `id` producing `rate` transactions per time unit.
#[derive(Debug, Clone, PartialEq)]
pub struct Rollup<T> {
    pub id: String,
    pub rate: T,
}

impl<T: Scalar> Rollup<T> {
    pub fn new(id: impl Into<String>, rate: T) -> Self {
        Self { id: id.into(), rate }
    }

    pub fn validate(&self) -> Result<()> {
        positive("rate", self.rate)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Venue {
    Blob,
    L1,
}

impl fmt::Display for Venue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Venue::Blob => f.write_str("blob"),
            Venue::L1 => f.write_str("l1"),
        }
    }
}

/// A rollup's posting decision and what it costs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PostingPolicy<T> {
    pub venue: Venue,
    /// Time between posts.
    pub interval: T,
    pub per_tx_cost: T,
    /// Transactions per post, `rate * interval`.
    pub batch_size: T,
    /// Posting cost plus accumulated delay cost of one post.
    pub total_cost_per_post: T,
    /// Zero fixed cost: the optimum is continuous posting (`interval == 0`).
    pub degenerate: bool,
    /// The blob size cap shortened the interval.
    pub cap_binding: bool,
}

/// Blob per-transaction cost when posting every `interval`:
/// `(P0*G + B) / (R*t) + a*t/2`.
pub fn blob_cost_per_tx<T: Scalar>(fixed_cost: T, delay_cost: T, rate: T, interval: T) -> T {
    fixed_cost / (rate * interval) + delay_cost * interval / T::lit(2.0)
}

/// L1 per-transaction cost when posting every `interval`:
/// `P0*G / (R*t) + P1*G + a*t/2`.
pub fn l1_cost_per_tx<T: Scalar>(
    metadata_cost: T,
    calldata_cost: T,
    delay_cost: T,
    rate: T,
    interval: T,
) -> T {
    metadata_cost / (rate * interval) + calldata_cost + delay_cost * interval / T::lit(2.0)
}

/// Delay cost accumulated by one post: `a*R*t^2/2`.
fn batch_delay_cost<T: Scalar>(delay_cost: T, rate: T, interval: T) -> T {
    delay_cost * rate * interval * interval / T::lit(2.0)
}

/// Cost-minimizing blob posting for `rollup` at blob price `blob_price`,
/// ignoring any blob size cap.
pub fn blob_policy<T: Scalar>(rollup: &Rollup<T>, blob_price: T, params: &MarketParams<T>) -> Result<PostingPolicy<T>> {
    params.validate()?;
    rollup.validate()?;
    non_negative("blob_price", blob_price)?;
    let fixed = params.metadata_cost() + blob_price;
    Ok(blob_policy_unchecked(rollup.rate, fixed, params.delay_cost))
}

pub(crate) fn blob_policy_unchecked<T: Scalar>(rate: T, fixed: T, delay_cost: T) -> PostingPolicy<T> {
    if fixed <= T::zero() {
        return PostingPolicy {
            venue: Venue::Blob,
            interval: T::zero(),
            per_tx_cost: T::zero(),
            batch_size: T::zero(),
            total_cost_per_post: T::zero(),
            degenerate: true,
            cap_binding: false,
        };
    }
    let two = T::lit(2.0);
    let interval = (two * fixed / (delay_cost * rate)).sqrt();
    PostingPolicy {
        venue: Venue::Blob,
        interval,
        per_tx_cost: delay_cost * interval,
        batch_size: rate * interval,
        total_cost_per_post: fixed + batch_delay_cost(delay_cost, rate, interval),
        degenerate: false,
        cap_binding: false,
    }
}

/// Cost-minimizing direct L1 posting for `rollup`.
///
/// With no metadata cost the optimum degenerates to continuous posting: the
/// policy has `interval == 0` and costs exactly the calldata price.
pub fn l1_policy<T: Scalar>(rollup: &Rollup<T>, params: &MarketParams<T>) -> Result<PostingPolicy<T>> {
    params.validate()?;
    rollup.validate()?;
    let fixed = params.metadata_cost();
    let calldata = params.calldata_cost();
    let (a, rate) = (params.delay_cost, rollup.rate);
    if fixed <= T::zero() {
        return Ok(PostingPolicy {
            venue: Venue::L1,
            interval: T::zero(),
            per_tx_cost: calldata,
            batch_size: T::zero(),
            total_cost_per_post: T::zero(),
            degenerate: true,
            cap_binding: false,
        });
    }
    let interval = (T::lit(2.0) * fixed / (a * rate)).sqrt();
    let batch_size = rate * interval;
    Ok(PostingPolicy {
        venue: Venue::L1,
        interval,
        per_tx_cost: a * interval + calldata,
        batch_size,
        total_cost_per_post: fixed + batch_size * calldata + batch_delay_cost(a, rate, interval),
        degenerate: false,
        cap_binding: false,
    })
}

/// Blob price at which a rollup of this rate is indifferent between posting
/// blobs and posting on L1:
/// `R*(P1*G)^2/(2a) + 2*P1*G*sqrt(R*P0*G/(2a))`.
pub fn indifference_price<T: Scalar>(rollup: &Rollup<T>, params: &MarketParams<T>) -> Result<T> {
    params.validate()?;
    rollup.validate()?;
    Ok(indifference_price_unchecked(rollup.rate, params))
}

pub(crate) fn indifference_price_unchecked<T: Scalar>(rate: T, params: &MarketParams<T>) -> T {
    let two = T::lit(2.0);
    let a = params.delay_cost;
    let calldata = params.calldata_cost();
    rate * calldata * calldata / (two * a) + two * calldata * (rate * params.metadata_cost() / (two * a)).sqrt()
}

/// Picks the cheaper venue at `blob_price`. A price equal to the
/// indifference price selects the blob market.
pub fn choose_strategy<T: Scalar>(rollup: &Rollup<T>, blob_price: T, params: &MarketParams<T>) -> Result<PostingPolicy<T>> {
    if blob_price <= indifference_price(rollup, params)? {
        blob_policy(rollup, blob_price, params)
    } else {
        l1_policy(rollup, params)
    }
}

/// Blob posting when a blob holds at most `max_blob_size` transactions: the
/// interval is the unconstrained optimum clipped to `U / R`.
pub fn capped_blob_policy<T: Scalar>(
    rollup: &Rollup<T>,
    blob_price: T,
    params: &MarketParams<T>,
) -> Result<PostingPolicy<T>> {
    let cap = params.max_blob_size.ok_or(ModelError::MissingCap)?;
    let free = blob_policy(rollup, blob_price, params)?;
    Ok(clip_to_cap(free, rollup.rate, params.metadata_cost() + blob_price, params.delay_cost, cap))
}

pub(crate) fn clip_to_cap<T: Scalar>(free: PostingPolicy<T>, rate: T, fixed: T, delay_cost: T, cap: T) -> PostingPolicy<T> {
    let max_interval = cap / rate;
    if free.interval <= max_interval {
        return free;
    }
    let interval = max_interval;
    let total = fixed + batch_delay_cost(delay_cost, rate, interval);
    PostingPolicy {
        venue: Venue::Blob,
        interval,
        per_tx_cost: total / cap,
        batch_size: cap,
        total_cost_per_post: total,
        degenerate: false,
        cap_binding: true,
    }
}

pub(crate) fn positive<T: Scalar>(name: &'static str, x: T) -> Result<()> {
    if !x.is_finite() || x <= T::zero() {
        return Err(invalid(name, format!("must be positive and finite, got {x}")));
    }
    Ok(())
}

pub(crate) fn non_negative<T: Scalar>(name: &'static str, x: T) -> Result<()> {
    if !x.is_finite() || x < T::zero() {
        return Err(invalid(name, format!("must be non-negative and finite, got {x}")));
    }
    Ok(())
}
