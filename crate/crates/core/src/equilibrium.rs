//! Market-clearing blob price and the participation threshold.
//!
//! Sorting rollups by decreasing rate, the blob posters always form a prefix:
//! the indifference price grows with the rate while the clearing price grows
//! with the number of participants. The solver therefore tries every prefix
//! length `m` from `n` down to `0` and keeps the first one whose clearing
//! price is accepted by rollup `m` and refused by rollup `m + 1`.

use crate::cost_model::{
    blob_policy_unchecked, capped_blob_policy, clip_to_cap, indifference_price_unchecked, l1_policy, MarketParams,
    PostingPolicy, Rollup, Venue,
};
use crate::error::{ModelError, Result};
use crate::scalar::Scalar;

/// A rollup together with the policy it follows in equilibrium.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment<T> {
    pub rollup: Rollup<T>,
    pub policy: PostingPolicy<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Equilibrium<T> {
    /// Clearing blob price.
    pub price: T,
    /// Number of blob posters; they are the first `threshold` rollups.
    pub threshold: usize,
    /// One entry per input rollup, in input order.
    pub assignments: Vec<Assignment<T>>,
    /// Blobs per time unit posted by the participants.
    pub blob_rate: T,
}

impl<T: Scalar> Equilibrium<T> {
    pub fn blob_posters(&self) -> impl Iterator<Item = &Assignment<T>> {
        self.assignments.iter().filter(|a| a.policy.venue == Venue::Blob)
    }

    pub fn policy_of(&self, id: &str) -> Option<&Assignment<T>> {
        self.assignments.iter().find(|a| a.rollup.id == id)
    }
}

/// Blob price at which `rates` (all posting blobs) produce exactly
/// `target_blobs` blobs per time unit:
/// `a * (sum sqrt(R_i))^2 / (2 k^2) - P0*G`, never below the price floor.
pub fn clearing_price<T: Scalar>(rates: &[T], params: &MarketParams<T>) -> Result<T> {
    params.validate()?;
    if rates.is_empty() {
        return Err(ModelError::EmptyParticipation);
    }
    for &r in rates {
        crate::cost_model::positive("rate", r)?;
    }
    Ok(clearing_price_unchecked(rates, params))
}

fn clearing_price_unchecked<T: Scalar>(rates: &[T], params: &MarketParams<T>) -> T {
    let root_sum = rates.iter().fold(T::zero(), |acc, &r| acc + r.sqrt());
    let k = params.target_blobs;
    let raw = params.delay_cost * root_sum * root_sum / (T::lit(2.0) * k * k) - params.metadata_cost();
    raw.max(params.price_floor)
}

fn validate_rollups<T: Scalar>(rollups: &[Rollup<T>], params: &MarketParams<T>) -> Result<()> {
    params.validate()?;
    if rollups.is_empty() {
        return Err(ModelError::EmptyParticipation);
    }
    for (i, r) in rollups.iter().enumerate() {
        r.validate()?;
        if rollups[..i].iter().any(|o| o.id == r.id) {
            return Err(ModelError::DuplicateRollup(r.id.clone()));
        }
        if i > 0 && r.rate > rollups[i - 1].rate {
            return Err(ModelError::Unsorted { index: i });
        }
    }
    Ok(())
}

/// Whether price `price` makes exactly the first `m` rollups post blobs.
fn prefix_consistent<T: Scalar>(rollups: &[Rollup<T>], m: usize, price: T, params: &MarketParams<T>) -> bool {
    let accepted = price <= indifference_price_unchecked(rollups[m - 1].rate, params);
    let refused_next = rollups
        .get(m)
        .is_none_or(|next| price > indifference_price_unchecked(next.rate, params));
    accepted && refused_next
}

fn blob_rate<T: Scalar>(assignments: &[Assignment<T>]) -> T {
    assignments
        .iter()
        .filter(|a| a.policy.venue == Venue::Blob && a.policy.interval > T::zero())
        .fold(T::zero(), |acc, a| acc + a.policy.interval.recip())
}

fn all_l1<T: Scalar>(rollups: &[Rollup<T>], params: &MarketParams<T>) -> Result<Equilibrium<T>> {
    let assignments = rollups
        .iter()
        .map(|r| Ok(Assignment { rollup: r.clone(), policy: l1_policy(r, params)? }))
        .collect::<Result<Vec<_>>>()?;
    Ok(Equilibrium { price: params.price_floor, threshold: 0, assignments, blob_rate: T::zero() })
}

fn assemble<T: Scalar>(
    rollups: &[Rollup<T>],
    threshold: usize,
    price: T,
    params: &MarketParams<T>,
    blob: impl Fn(&Rollup<T>) -> Result<PostingPolicy<T>>,
) -> Result<Equilibrium<T>> {
    let assignments = rollups
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let policy = if i < threshold { blob(r)? } else { l1_policy(r, params)? };
            Ok(Assignment { rollup: r.clone(), policy })
        })
        .collect::<Result<Vec<_>>>()?;
    let blob_rate = blob_rate(&assignments);
    Ok(Equilibrium { price, threshold, assignments, blob_rate })
}

/// Equilibrium blob price and participation threshold for rollups sorted by
/// decreasing rate. Any blob size cap in `params` is ignored.
///
/// Returns the largest prefix length `m` whose clearing price `B(m)` satisfies
/// `B(m) <= indifference(R_m)` and, for `m < n`, `B(m) > indifference(R_{m+1})`.
/// When no prefix is consistent every rollup posts on L1 at the price floor.
pub fn solve_equilibrium<T: Scalar>(rollups: &[Rollup<T>], params: &MarketParams<T>) -> Result<Equilibrium<T>> {
    validate_rollups(rollups, params)?;
    let rates: Vec<T> = rollups.iter().map(|r| r.rate).collect();
    for m in (1..=rollups.len()).rev() {
        let price = clearing_price_unchecked(&rates[..m], params);
        if prefix_consistent(rollups, m, price, params) {
            let fixed = params.metadata_cost() + price;
            return assemble(rollups, m, price, params, |r| {
                Ok(blob_policy_unchecked(r.rate, fixed, params.delay_cost))
            });
        }
    }
    all_l1(rollups, params)
}

/// Blob rate of `rates` at price `price` when intervals are clipped to `cap / R`.
fn capped_supply<T: Scalar>(rates: &[T], price: T, cap: T, params: &MarketParams<T>) -> T {
    let fixed = params.metadata_cost() + price;
    if fixed <= T::zero() {
        return T::infinity();
    }
    rates.iter().fold(T::zero(), |acc, &r| {
        let free = blob_policy_unchecked(r, fixed, params.delay_cost);
        acc + clip_to_cap(free, r, fixed, params.delay_cost, cap).interval.recip()
    })
}

/// Clearing price for `rates` (all posting blobs) under the blob size cap,
/// found by bisection on the decreasing blob supply.
///
/// Fails with [`ModelError::InfeasibleTarget`] when `sum R_i / U > k`: with
/// every blob full the participants still exceed the target.
pub fn capped_clearing_price<T: Scalar>(rates: &[T], params: &MarketParams<T>) -> Result<T> {
    params.validate()?;
    let cap = params.max_blob_size.ok_or(ModelError::MissingCap)?;
    if rates.is_empty() {
        return Err(ModelError::EmptyParticipation);
    }
    for &r in rates {
        crate::cost_model::positive("rate", r)?;
    }
    let k = params.target_blobs;
    let saturated = rates.iter().fold(T::zero(), |acc, &r| acc + r / cap);
    if saturated > k {
        return Err(ModelError::InfeasibleTarget { target: k.as_f64(), capped_rate: saturated.as_f64() });
    }

    let excess = |b: T| capped_supply(rates, b, cap, params) - k;
    let mut lo = params.price_floor;
    if excess(lo) <= T::zero() {
        return Ok(lo);
    }
    let mut hi = clearing_price_unchecked(rates, params).max(lo).max(T::one());
    let mut doublings = 0;
    while excess(hi) > T::zero() {
        lo = hi;
        hi = hi + hi;
        doublings += 1;
        if doublings > 2000 || !hi.is_finite() {
            return Err(ModelError::NumericFailure { what: "capped price bracket", residual: excess(lo).as_f64() });
        }
    }
    let abs_tol = T::lit(1e-9);
    for _ in 0..400 {
        let tol = abs_tol.max(T::lit(4.0) * T::epsilon() * hi);
        if hi - lo <= tol {
            break;
        }
        let mid = lo + (hi - lo) / T::lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        if excess(mid) > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// Equilibrium under the blob size cap.
///
/// Prefixes are tried from largest to smallest as in [`solve_equilibrium`],
/// each priced with [`capped_clearing_price`]. Prefixes whose capped blob rate
/// exceeds the target at every price have no clearing price and are skipped.
/// If no priced prefix is consistent and at least one prefix was skipped for
/// that reason, the cap is what prevents an equilibrium and the call fails with
/// [`ModelError::InfeasibleTarget`]; otherwise every rollup posts on L1.
pub fn solve_equilibrium_capped<T: Scalar>(rollups: &[Rollup<T>], params: &MarketParams<T>) -> Result<Equilibrium<T>> {
    validate_rollups(rollups, params)?;
    params.max_blob_size.ok_or(ModelError::MissingCap)?;
    let rates: Vec<T> = rollups.iter().map(|r| r.rate).collect();
    let mut infeasible = None;
    for m in (1..=rollups.len()).rev() {
        let price = match capped_clearing_price(&rates[..m], params) {
            Ok(p) => p,
            Err(e @ ModelError::InfeasibleTarget { .. }) => {
                infeasible.get_or_insert(e);
                continue;
            }
            Err(e) => return Err(e),
        };
        if prefix_consistent(rollups, m, price, params) {
            return assemble(rollups, m, price, params, |r| capped_blob_policy(r, price, params));
        }
    }
    match infeasible {
        Some(e) => Err(e),
        None => all_l1(rollups, params),
    }
}
