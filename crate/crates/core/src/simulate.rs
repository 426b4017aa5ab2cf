//! Discrete-event check of the continuous cost model.
//!
//! Transactions arrive one by one and wait for the next post; each post pays
//! the venue's posting cost and every transaction in it pays `a` per unit of
//! waiting time. Arrivals after the last post are dropped, so the horizon is
//! truncated to a whole number of posting intervals.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use crate::cost_model::{blob_cost_per_tx, l1_cost_per_tx, non_negative, positive, MarketParams, PostingPolicy, Venue};
use crate::error::{invalid, ModelError, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArrivalModel {
    /// Evenly spaced arrivals at `(i + 1/2) / R`.
    UniformDeterministic,
    /// Poisson process of intensity `R`, drawn from ChaCha8 seeded with `seed`.
    Poisson,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig<T> {
    pub arrivals: ArrivalModel,
    pub rate: T,
    pub policy: PostingPolicy<T>,
    pub params: MarketParams<T>,
    /// Blob price paid per post when `policy.venue` is `Blob`.
    pub blob_price: T,
    pub horizon: T,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport<T> {
    pub posts: u64,
    pub transactions: u64,
    pub total_posting_cost: T,
    pub total_delay_cost: T,
    /// `(total_posting_cost + total_delay_cost) / transactions`.
    pub realized_per_tx_cost: T,
    /// Continuous-model per-transaction cost at the policy interval.
    pub closed_form_per_tx_cost: T,
    pub relative_error: T,
    /// Delay cost accumulated by an average post.
    pub mean_batch_delay_cost: T,
}

enum Arrivals<T> {
    Uniform { rate: T, next: u64 },
    Poisson { clock: f64, rng: Box<ChaCha8Rng>, gap: Exp<f64> },
}

impl<T: Scalar> Arrivals<T> {
    fn next(&mut self) -> T {
        match self {
            Arrivals::Uniform { rate, next } => {
                let t = (T::from_u64(*next).expect("arrival index") + T::lit(0.5)) / *rate;
                *next += 1;
                t
            }
            Arrivals::Poisson { clock, rng, gap } => {
                *clock += gap.sample(rng);
                T::lit(*clock)
            }
        }
    }
}

/// Simulates `config.horizon` time units of posting under `config.policy`.
pub fn run<T: Scalar>(config: &SimConfig<T>) -> Result<SimReport<T>> {
    config.params.validate()?;
    positive("rate", config.rate)?;
    non_negative("blob_price", config.blob_price)?;
    let interval = config.policy.interval;
    if !interval.is_finite() || interval <= T::zero() {
        return Err(ModelError::ZeroInterval);
    }
    positive("horizon", config.horizon)?;
    if config.horizon < T::lit(10.0) * interval {
        return Err(invalid("horizon", "must cover at least 10 posting intervals"));
    }

    let params = &config.params;
    let a = params.delay_cost;
    let posts = (config.horizon / interval).floor().to_u64().ok_or_else(|| invalid("horizon", "too many posts"))?;

    let mut arrivals = match config.arrivals {
        ArrivalModel::UniformDeterministic => Arrivals::Uniform { rate: config.rate, next: 0 },
        ArrivalModel::Poisson => Arrivals::Poisson {
            clock: 0.0,
            rng: Box::new(ChaCha8Rng::seed_from_u64(config.seed)),
            gap: Exp::new(config.rate.as_f64()).map_err(|e| invalid("rate", e.to_string()))?,
        },
    };

    let mut pending = arrivals.next();
    let mut transactions = 0u64;
    let mut total_posting = T::zero();
    let mut total_delay = T::zero();
    for j in 1..=posts {
        let post_time = T::from_u64(j).expect("post index") * interval;
        let mut batch = 0u64;
        let mut batch_delay = T::zero();
        while pending <= post_time {
            batch_delay = batch_delay + (post_time - pending);
            batch += 1;
            pending = arrivals.next();
        }
        total_delay = total_delay + a * batch_delay;
        total_posting = total_posting
            + match config.policy.venue {
                Venue::Blob => params.metadata_cost() + config.blob_price,
                Venue::L1 => params.metadata_cost() + T::from_u64(batch).expect("batch size") * params.calldata_cost(),
            };
        transactions += batch;
    }
    if transactions == 0 {
        return Err(invalid("horizon", "no transaction arrived before the last post"));
    }

    let closed_form = match config.policy.venue {
        Venue::Blob => blob_cost_per_tx(params.metadata_cost() + config.blob_price, a, config.rate, interval),
        Venue::L1 => l1_cost_per_tx(params.metadata_cost(), params.calldata_cost(), a, config.rate, interval),
    };
    let realized = (total_posting + total_delay) / T::from_u64(transactions).expect("transaction count");
    Ok(SimReport {
        posts,
        transactions,
        total_posting_cost: total_posting,
        total_delay_cost: total_delay,
        realized_per_tx_cost: realized,
        closed_form_per_tx_cost: closed_form,
        relative_error: (realized - closed_form).abs() / closed_form,
        mean_batch_delay_cost: total_delay / T::from_u64(posts).expect("post count"),
    })
}

/// Argmin of `cost_curve` over `t_lo, t_lo + step, ...` up to `t_hi`; ties
/// go to the smaller `t`.
pub fn grid_optimize<T: Scalar>(cost_curve: impl Fn(T) -> T, t_lo: T, t_hi: T, step: T) -> Result<T> {
    let valid = t_lo.is_finite() && t_hi.is_finite() && step.is_finite();
    if !valid || t_lo <= T::zero() || t_hi <= t_lo || step <= T::zero() {
        return Err(ModelError::EmptyGrid);
    }
    let points = ((t_hi - t_lo) / step).floor().to_u64().ok_or(ModelError::EmptyGrid)?;
    let mut best_t = t_lo;
    let mut best = cost_curve(t_lo);
    for i in 1..=points {
        let t = t_lo + T::from_u64(i).expect("grid index") * step;
        let c = cost_curve(t);
        if c < best {
            best = c;
            best_t = t;
        }
    }
    Ok(best_t)
}
