//! Two rollups sharing one blob stream.
//!
//! The merged pair behaves like a single rollup with the summed rate. Every
//! other rollup keeps the venue it had in the baseline equilibrium, so the
//! new clearing price follows from the participant set with the pair
//! replaced by the merged rollup.

use crate::bargaining::BargainInput;
use crate::cost_model::{blob_policy, indifference_price_unchecked, MarketParams, PostingPolicy, Rollup, Venue};
use crate::equilibrium::{clearing_price, solve_equilibrium, Equilibrium};
use crate::error::{ModelError, Result};
use crate::scalar::Scalar;

/// Baseline venues of the merging pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MergeCase {
    BothBlob,
    Mixed,
    BothL1,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MergeOutcome<T> {
    pub case: MergeCase,
    pub large_id: String,
    pub small_id: String,
    pub large_rate: T,
    pub small_rate: T,
    pub old_price: T,
    /// Blob price once the pair posts jointly; equals `old_price` when the
    /// merged rollup stays out of the blob market.
    pub new_price: T,
    /// Joint posting at `new_price` (`t_J`, `Tr_J`, `C_J`).
    pub joint: PostingPolicy<T>,
    /// Per-transaction cost of the larger rollup in the baseline.
    pub large_disagreement_cost: T,
    /// The merged rollup posts blobs at `new_price`.
    pub joined: bool,
    /// Joint posting beats the larger rollup's baseline cost.
    pub profitable: bool,
    /// Every rollup's frozen venue is still a best response at `new_price`.
    pub participants_consistent: bool,
    pub baseline: Equilibrium<T>,
}

impl<T: Scalar> MergeOutcome<T> {
    pub fn merged_rate(&self) -> T {
        self.large_rate + self.small_rate
    }

    pub fn price_ratio(&self) -> T {
        self.new_price / self.old_price
    }

    /// Bargaining problem for splitting the joint blob price.
    pub fn bargain_input(&self, params: &MarketParams<T>) -> BargainInput<T> {
        BargainInput {
            rate: self.large_rate,
            ratio: self.small_rate / self.large_rate,
            price: self.old_price,
            joint_price: self.new_price,
            delay_cost: params.delay_cost,
        }
    }
}

/// Joint blob posting for a merged rate at the new price.
pub fn joint_policy<T: Scalar>(total_rate: T, new_price: T, params: &MarketParams<T>) -> Result<PostingPolicy<T>> {
    blob_policy(&Rollup::new("joint", total_rate), new_price, params)
}

/// Merges rollups `first` and `second` (ids) and reprices the blob market.
///
/// `rollups` must be sorted by decreasing rate. The blob size cap, if any, is
/// ignored.
pub fn merge_price<T: Scalar>(
    rollups: &[Rollup<T>],
    first: &str,
    second: &str,
    params: &MarketParams<T>,
) -> Result<MergeOutcome<T>> {
    if first == second {
        return Err(ModelError::SelfMerge(first.to_string()));
    }
    let find = |id: &str| {
        rollups
            .iter()
            .position(|r| r.id == id)
            .ok_or_else(|| ModelError::UnknownRollup(id.to_string()))
    };
    let (i, j) = (find(first)?, find(second)?);
    let baseline = solve_equilibrium(rollups, params)?;
    let (large, small) = if rollups[j].rate > rollups[i].rate { (j, i) } else { (i, j) };

    let venue = |idx: usize| baseline.assignments[idx].policy.venue;
    let case = match (venue(i), venue(j)) {
        (Venue::Blob, Venue::Blob) => MergeCase::BothBlob,
        (Venue::L1, Venue::L1) => MergeCase::BothL1,
        _ => MergeCase::Mixed,
    };

    let merged_rate = rollups[i].rate + rollups[j].rate;
    let mut participants: Vec<T> = baseline
        .assignments
        .iter()
        .enumerate()
        .filter(|&(idx, a)| idx != i && idx != j && a.policy.venue == Venue::Blob)
        .map(|(_, a)| a.rollup.rate)
        .collect();
    participants.push(merged_rate);
    let candidate = clearing_price(&participants, params)?;

    // Pairs that posted on L1 only enter if the merged rate accepts the price.
    let joined = case != MergeCase::BothL1 || candidate <= indifference_price_unchecked(merged_rate, params);
    let new_price = if joined { candidate } else { baseline.price };

    let joint = joint_policy(merged_rate, new_price, params)?;
    let large_disagreement_cost = baseline.assignments[large].policy.per_tx_cost;
    let profitable = joined && joint.per_tx_cost < large_disagreement_cost;

    let participants_consistent = joined
        && new_price <= indifference_price_unchecked(merged_rate, params)
        && baseline.assignments.iter().enumerate().filter(|&(idx, _)| idx != i && idx != j).all(|(_, a)| {
            let ip = indifference_price_unchecked(a.rollup.rate, params);
            match a.policy.venue {
                Venue::Blob => new_price <= ip,
                Venue::L1 => new_price > ip,
            }
        });

    Ok(MergeOutcome {
        case,
        large_id: rollups[large].id.clone(),
        small_id: rollups[small].id.clone(),
        large_rate: rollups[large].rate,
        small_rate: rollups[small].rate,
        old_price: baseline.price,
        new_price,
        joint,
        large_disagreement_cost,
        joined,
        profitable,
        participants_consistent,
        baseline,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rel_close;

    fn params(calldata_cost: f64) -> MarketParams<f64> {
        MarketParams::new(1.0, 1.0, 0.0, calldata_cost, 1.0)
    }

    fn rollups(rates: &[f64]) -> Vec<Rollup<f64>> {
        rates.iter().enumerate().map(|(i, &r)| Rollup::new(format!("r{i}"), r)).collect()
    }

    #[test]
    fn equal_pair_halves_the_price() {
        let out = merge_price(&rollups(&[3.0, 3.0]), "r0", "r1", &params(1e6)).unwrap();
        assert_eq!(out.case, MergeCase::BothBlob);
        assert_eq!(out.new_price * 2.0, out.old_price);
        assert!(out.profitable);
    }

    #[test]
    fn three_rollup_blob_merge() {
        // B = (1 + 1 + 2)^2 / 2 = 8 and B_N = (sqrt 2 + 2)^2 / 2.
        let out = merge_price(&rollups(&[4.0, 1.0, 1.0]), "r1", "r2", &params(1e6)).unwrap();
        assert_eq!(out.case, MergeCase::BothBlob);
        assert!(rel_close(out.old_price, 8.0, 1e-14));
        let expected = (2f64.sqrt() + 2.0).powi(2) / 2.0;
        assert!(rel_close(out.new_price, expected, 1e-14));
        let ratio = out.price_ratio();
        assert!((0.5..=1.0).contains(&ratio));
        assert!(out.participants_consistent);
    }

    #[test]
    fn mixed_merge_raises_price() {
        // Baseline {4 blob, 1 L1} at calldata cost 1: B = 2, indifference(1) = 0.5.
        let out = merge_price(&rollups(&[4.0, 1.0]), "r0", "r1", &params(1.0)).unwrap();
        assert_eq!(out.case, MergeCase::Mixed);
        assert!(rel_close(out.price_ratio(), 1.25, 1e-14));
        assert_eq!(out.large_id, "r0");
    }

    #[test]
    fn l1_pair_that_cannot_afford_blobs_stays_out() {
        // Baseline {4 blob, 1 L1, 1 L1}; merged rate 2 has indifference 1 < new price.
        let out = merge_price(&rollups(&[4.0, 1.0, 1.0]), "r1", "r2", &params(1.0)).unwrap();
        assert_eq!(out.case, MergeCase::BothL1);
        assert!(!out.joined);
        assert!(!out.profitable);
        assert_eq!(out.new_price, out.old_price);
    }

    #[test]
    fn joint_policy_examples() {
        let pr = params(1.0);
        let j = joint_policy(1.25, 0.81, &pr).unwrap();
        assert!((j.interval - 1.14).abs() < 5e-3);
        assert!((j.per_tx_cost - 1.14).abs() < 5e-3);
        assert!((j.batch_size - 1.42).abs() < 5e-3);
        assert!(rel_close(j.total_cost_per_post, 2.0 * 0.81, 1e-12));

        // f = 0 is the large rollup alone
        let solo = blob_policy(&Rollup::new("l", 1.0), 0.81, &pr).unwrap();
        assert_eq!(joint_policy(1.0, 0.81, &pr).unwrap(), solo);

        // R = 1, f = 1, B_N = 1: grid minimum of 1/(2t) + t/2 sits at t = 1.
        let best = (1..=100_000)
            .map(|i| i as f64 * 1e-4)
            .min_by(|a, b| (1.0 / (2.0 * a) + a / 2.0).total_cmp(&(1.0 / (2.0 * b) + b / 2.0)))
            .unwrap();
        let j = joint_policy(2.0, 1.0, &pr).unwrap();
        assert!((best - 1.0).abs() < 1e-4);
        assert!(rel_close(j.interval, 1.0, 1e-12));
        assert!(rel_close(j.batch_size, 2.0, 1e-12));
    }

    #[test]
    fn merge_errors() {
        let rs = rollups(&[2.0, 1.0]);
        assert_eq!(merge_price(&rs, "r0", "r0", &params(1.0)), Err(ModelError::SelfMerge("r0".into())));
        assert_eq!(merge_price(&rs, "r0", "zz", &params(1.0)), Err(ModelError::UnknownRollup("zz".into())));
    }
}
