//! Nash-bargaining split of a joint blob price.
//!
//! A large rollup (rate `R`) and a small one (rate `f * R`) post one blob
//! every `t_J` at joint price `B_N`. Each party's utility is its
//! per-transaction cost; the threat point is the cost it pays posting alone
//! at the baseline price `B`. Payments must cover `B_N` exactly, so the
//! bargaining set is the segment `B1 + B2 = B_N` and the Nash product is a
//! concave quadratic in the large rollup's payment `B1`.

use crate::cost_model::{non_negative, positive};
use crate::error::{invalid, ModelError, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BargainInput<T> {
    /// Rate of the large rollup (`R`).
    pub rate: T,
    /// Small rate over large rate (`f`), in `(0, 1]`.
    pub ratio: T,
    /// Baseline blob price each party pays when posting alone (`B`).
    pub price: T,
    /// Joint blob price (`B_N`).
    pub joint_price: T,
    /// Delay cost per transaction per time unit (`a`).
    pub delay_cost: T,
}

impl<T: Scalar> BargainInput<T> {
    pub fn validate(&self) -> Result<()> {
        positive("rate", self.rate)?;
        positive("delay_cost", self.delay_cost)?;
        non_negative("price", self.price)?;
        non_negative("joint_price", self.joint_price)?;
        if !self.ratio.is_finite() || self.ratio <= T::zero() || self.ratio > T::one() {
            return Err(invalid("ratio", format!("must lie in (0, 1], got {}", self.ratio)));
        }
        Ok(())
    }
}

/// Solo per-transaction costs `(Tr_L, Tr_S)`, the threat point.
pub fn disagreement_point<T: Scalar>(input: &BargainInput<T>) -> Result<(T, T)> {
    input.validate()?;
    Ok(disagreement_unchecked(input))
}

fn disagreement_unchecked<T: Scalar>(input: &BargainInput<T>) -> (T, T) {
    let large = (T::lit(2.0) * input.price * input.delay_cost / input.rate).sqrt();
    (large, large / input.ratio.sqrt())
}

/// Everything the two-party split determines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BargainOutcome<T> {
    /// Large rollup's payment (`B1`).
    pub large_payment: T,
    /// Small rollup's payment, `B_N - B1`.
    pub small_payment: T,
    /// `B1` from the simplified closed form; agrees with `large_payment`.
    pub large_payment_closed_form: T,
    /// `B_N / (1 + f)`: payment proportional to transaction share.
    pub proportional_payment: T,
    pub joint_interval: T,
    pub joint_per_tx_cost: T,
    pub joint_size: T,
    pub large_share: T,
    pub small_share: T,
    pub large_delay_cost: T,
    pub small_delay_cost: T,
    pub large_disagreement: T,
    pub small_disagreement: T,
    /// Large rollup's effective per-transaction cost under the split.
    pub large_per_tx_cost: T,
    pub small_per_tx_cost: T,
    /// `1 - large_per_tx_cost / Tr_L`.
    pub large_improvement: T,
    pub small_improvement: T,
}

impl<T: Scalar> BargainOutcome<T> {
    /// Nash product `(Tr_L - s1)(Tr_S - s2)` at large-rollup payment `b1`.
    pub fn nash_product(&self, b1: T, joint_price: T) -> T {
        let s1 = (b1 + self.large_delay_cost) / self.large_share;
        let s2 = (joint_price - b1 + self.small_delay_cost) / self.small_share;
        (self.large_disagreement - s1) * (self.small_disagreement - s2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NashSplit<T> {
    Deal(BargainOutcome<T>),
    /// Joint posting does not beat the large rollup's solo cost.
    NoDeal { joint_per_tx_cost: T, large_disagreement: T },
}

impl<T: Scalar> NashSplit<T> {
    pub fn deal(&self) -> Option<&BargainOutcome<T>> {
        match self {
            NashSplit::Deal(o) => Some(o),
            NashSplit::NoDeal { .. } => None,
        }
    }
}

/// `B1 = B_N f/(1+f) + sqrt(B_N B) (sqrt(1/(1+f)) - sqrt(f/(1+f)))`.
///
/// Independent of `R` and `a`.
pub fn large_payment_closed_form<T: Scalar>(ratio: T, price: T, joint_price: T) -> T {
    let one_plus = T::one() + ratio;
    joint_price * ratio / one_plus + (joint_price * price).sqrt() * ((T::one() / one_plus).sqrt() - (ratio / one_plus).sqrt())
}

/// Lower bound on `B_N / B` when both parties posted blobs in the baseline:
/// `(1 + f) / (1 + sqrt f)^2`.
pub fn structural_ratio_bound<T: Scalar>(ratio: T) -> Result<T> {
    if !ratio.is_finite() || ratio <= T::zero() || ratio > T::one() {
        return Err(invalid("ratio", format!("must lie in (0, 1], got {ratio}")));
    }
    let root = T::one() + ratio.sqrt();
    Ok((T::one() + ratio) / (root * root))
}

/// Two-party Nash bargaining split of the joint blob price.
///
/// `B1` is the stationary point of the Nash product; it is cross-checked
/// against [`large_payment_closed_form`]. Returns [`NashSplit::NoDeal`] unless
/// the joint per-transaction cost is strictly below the large rollup's solo
/// cost.
pub fn nash_split<T: Scalar>(input: &BargainInput<T>) -> Result<NashSplit<T>> {
    input.validate()?;
    let BargainInput { rate, ratio, price, joint_price, delay_cost: a } = *input;
    let two = T::lit(2.0);
    let one_plus = T::one() + ratio;
    let (tr_l, tr_s) = disagreement_unchecked(input);

    let t_joint = (two * joint_price / (one_plus * a * rate)).sqrt();
    let tr_joint = a * t_joint;
    if tr_joint >= tr_l {
        return Ok(NashSplit::NoDeal { joint_per_tx_cost: tr_joint, large_disagreement: tr_l });
    }

    let c_joint = one_plus * rate * t_joint;
    let c_large = c_joint / one_plus;
    let c_small = c_joint * ratio / one_plus;
    let d_large = a * rate * t_joint * t_joint / two;
    let d_small = ratio * d_large;

    let b1 = (joint_price + d_small - d_large - c_small * tr_s + c_large * tr_l) / two;
    let b1_closed = large_payment_closed_form(ratio, price, joint_price);
    let scale = b1_closed.abs().max(joint_price).max(T::min_positive_value());
    let residual = (b1 - b1_closed).abs() / scale;
    if residual > T::lit(1e-9).max(T::lit(64.0) * T::epsilon()) {
        return Err(ModelError::NumericFailure { what: "two-party split cross-check", residual: residual.as_f64() });
    }

    let b2 = joint_price - b1;
    let large_cost = (b1 + d_large) / c_large;
    let small_cost = (b2 + d_small) / c_small;
    Ok(NashSplit::Deal(BargainOutcome {
        large_payment: b1,
        small_payment: b2,
        large_payment_closed_form: b1_closed,
        proportional_payment: joint_price / one_plus,
        joint_interval: t_joint,
        joint_per_tx_cost: tr_joint,
        joint_size: c_joint,
        large_share: c_large,
        small_share: c_small,
        large_delay_cost: d_large,
        small_delay_cost: d_small,
        large_disagreement: tr_l,
        small_disagreement: tr_s,
        large_per_tx_cost: large_cost,
        small_per_tx_cost: small_cost,
        large_improvement: T::one() - large_cost / tr_l,
        small_improvement: T::one() - small_cost / tr_s,
    }))
}

/// A participant in an m-party joint blob.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Party<T> {
    pub rate: T,
    /// Blob price the party faces when posting alone.
    pub baseline_price: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiOutcome<T> {
    pub payments: Vec<T>,
    /// Per-transaction cost reduction of each party (`d_i - s_i`).
    pub gains: Vec<T>,
    /// Solo per-transaction cost of each party.
    pub disagreement: Vec<T>,
    pub kkt_residual: T,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MultiSplit<T> {
    Deal(MultiOutcome<T>),
    /// Some party cannot gain even when paying nothing, or the joint price
    /// exceeds what all parties together would pay to stay better off.
    NoDeal,
}

impl<T: Scalar> MultiSplit<T> {
    pub fn deal(&self) -> Option<&MultiOutcome<T>> {
        match self {
            MultiSplit::Deal(o) => Some(o),
            MultiSplit::NoDeal => None,
        }
    }
}

/// Nash-bargaining split of `joint_price` among `parties` sharing one blob.
///
/// Party `i` carries `C_i = R_i t_J` transactions and delay cost
/// `D_i = a R_i t_J^2 / 2`. Its gain `(C_i d_i - D_i - p_i) / C_i` is affine in
/// its payment, so maximizing the log Nash product over the payment simplex
/// is a water-filling problem: every paying party is left with the same
/// surplus `C_i d_i - D_i - p_i = c`, and parties whose surplus capacity is
/// below `c` pay nothing.
pub fn nash_split_multi<T: Scalar>(parties: &[Party<T>], joint_price: T, delay_cost: T) -> Result<MultiSplit<T>> {
    if parties.len() < 2 {
        return Err(invalid("parties", format!("need at least two, got {}", parties.len())));
    }
    positive("delay_cost", delay_cost)?;
    non_negative("joint_price", joint_price)?;
    for p in parties {
        positive("rate", p.rate)?;
        non_negative("baseline_price", p.baseline_price)?;
    }
    let two = T::lit(2.0);
    let a = delay_cost;
    let total_rate = parties.iter().fold(T::zero(), |acc, p| acc + p.rate);
    let t_joint = (two * joint_price / (a * total_rate)).sqrt();

    let disagreement: Vec<T> = parties.iter().map(|p| (two * p.baseline_price * a / p.rate).sqrt()).collect();
    let shares: Vec<T> = parties.iter().map(|p| p.rate * t_joint).collect();
    // Largest payment that still leaves party i no worse off.
    let capacity: Vec<T> = parties
        .iter()
        .zip(&disagreement)
        .zip(&shares)
        .map(|((p, &d), &c)| c * d - a * p.rate * t_joint * t_joint / two)
        .collect();

    let total_capacity = capacity.iter().fold(T::zero(), |acc, &h| acc + h);
    if capacity.iter().any(|&h| h <= T::zero()) || total_capacity <= joint_price {
        return Ok(MultiSplit::NoDeal);
    }

    let level = water_level(&capacity, joint_price);
    let payments: Vec<T> = capacity.iter().map(|&h| (h - level).max(T::zero())).collect();
    let gains: Vec<T> = capacity
        .iter()
        .zip(&payments)
        .zip(&shares)
        .map(|((&h, &p), &c)| (h - p) / c)
        .collect();

    let kkt_residual = kkt_residual(&capacity, &payments, level, joint_price);
    let tol = T::lit(1e-8).max(T::lit(1e3) * T::epsilon());
    if kkt_residual > tol {
        return Err(ModelError::NumericFailure { what: "multi-party split", residual: kkt_residual.as_f64() });
    }
    Ok(MultiSplit::Deal(MultiOutcome { payments, gains, disagreement, kkt_residual }))
}

/// Level `c` with `sum max(0, h_i - c) = budget`, for `0 <= budget < sum h_i`.
fn water_level<T: Scalar>(capacity: &[T], budget: T) -> T {
    let mut sorted = capacity.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite capacities"));
    let mut prefix = T::zero();
    let mut level = T::zero();
    for (n, &h) in sorted.iter().enumerate() {
        prefix = prefix + h;
        level = (prefix - budget) / T::from_usize(n + 1).expect("party count");
        let next_below = sorted.get(n + 1).is_none_or(|&next| next <= level);
        if next_below {
            break;
        }
    }
    level
}

/// Scaled violation of the optimality conditions of the water-filling problem.
fn kkt_residual<T: Scalar>(capacity: &[T], payments: &[T], level: T, budget: T) -> T {
    let scale = budget.max(T::one());
    let budget_gap = (payments.iter().fold(T::zero(), |acc, &p| acc + p) - budget).abs();
    capacity.iter().zip(payments).fold(budget_gap, |worst, (&h, &p)| {
        // paying parties sit at the common level, idle ones at or below it
        let gap = if p > T::zero() { (h - p - level).abs() } else { (h - level).max(T::zero()) };
        worst.max(gap)
    }) / scale
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rel_close;

    fn example() -> BargainInput<f64> {
        BargainInput { rate: 1.0, ratio: 0.25, price: 1.0, joint_price: 0.81, delay_cost: 1.0 }
    }

    #[test]
    fn disagreement_examples() {
        let (l, s) = disagreement_point(&example()).unwrap();
        assert!(rel_close(l, 2f64.sqrt(), 1e-15));
        assert!(rel_close(s, 8f64.sqrt(), 1e-15));

        let (l, s) = disagreement_point(&BargainInput { ratio: 1.0, ..example() }).unwrap();
        assert_eq!(l, s);

        let input = BargainInput { rate: 4.0, ratio: 0.5, price: 2.0, joint_price: 1.0, delay_cost: 1.0 };
        let (l, s) = disagreement_point(&input).unwrap();
        assert!(rel_close(l, 1.0, 1e-15));
        assert!(rel_close(s, 2f64.sqrt(), 1e-15));
        let params = crate::cost_model::MarketParams::new(1.0, 1.0, 0.0, 1.0, 1.0);
        let solo = crate::cost_model::blob_policy(&crate::cost_model::Rollup::new("s", 2.0), 2.0, &params).unwrap();
        assert!(rel_close(s, solo.per_tx_cost, 1e-15));
    }

    #[test]
    fn worked_example() {
        let out = *nash_split(&example()).unwrap().deal().unwrap();
        assert!((out.large_payment - 0.564).abs() < 1e-3);
        assert!((out.small_payment - 0.246).abs() < 1e-3);
        assert!((out.large_per_tx_cost - 1.07).abs() < 5e-3);
        assert!((out.small_per_tx_cost - 1.43).abs() < 5e-3);
        assert!((out.large_improvement - 0.247).abs() < 1e-3);
        assert!((out.small_improvement - 0.494).abs() < 1e-3);
        assert!(rel_close(out.proportional_payment, 0.648, 1e-12));
        assert!((out.large_payment + out.small_payment - 0.81).abs() <= 4.0 * f64::EPSILON);
    }

    #[test]
    fn symmetric_pair_splits_evenly() {
        for (b, bn) in [(1.0, 0.5), (3.0, 2.0), (0.2, 0.1)] {
            let input = BargainInput { rate: 2.0, ratio: 1.0, price: b, joint_price: bn, delay_cost: 0.7 };
            let out = *nash_split(&input).unwrap().deal().unwrap();
            assert!(rel_close(out.large_payment, bn / 2.0, 1e-12));
        }
    }

    #[test]
    fn no_deal_when_joint_cost_not_lower() {
        // Tr_J = Tr_L exactly: B_N = (1 + f) B.
        let input = BargainInput { joint_price: 1.25, ..example() };
        assert!(matches!(nash_split(&input).unwrap(), NashSplit::NoDeal { .. }));
        let input = BargainInput { joint_price: 2.0, ..example() };
        assert!(nash_split(&input).unwrap().deal().is_none());
    }

    #[test]
    fn invalid_ratio() {
        for f in [0.0, -0.5, 1.5, f64::NAN] {
            assert!(nash_split(&BargainInput { ratio: f, ..example() }).is_err());
            assert!(structural_ratio_bound(f).is_err());
        }
    }

    #[test]
    fn structural_bound_examples() {
        assert!(rel_close(structural_ratio_bound(1.0).unwrap(), 0.5, 1e-15));
        assert!(rel_close(structural_ratio_bound(0.25).unwrap(), 1.25 / 2.25, 1e-15));
        // two-rollup market {R, R f}: merged over separate clearing price
        let sep = (1.0 + 0.5f64).powi(2);
        assert!(rel_close(structural_ratio_bound(0.25).unwrap(), 1.25 / sep, 1e-15));
        assert!((structural_ratio_bound(1e-12f64).unwrap() - 1.0).abs() < 1e-5);
    }

    #[test]
    fn multi_matches_two_party() {
        let parties = [Party { rate: 1.0, baseline_price: 1.0 }, Party { rate: 0.25, baseline_price: 1.0 }];
        let multi = nash_split_multi(&parties, 0.81, 1.0).unwrap();
        let out = multi.deal().unwrap();
        let two = nash_split(&example()).unwrap();
        assert!(rel_close(out.payments[0], two.deal().unwrap().large_payment, 1e-9));
    }

    #[test]
    fn multi_symmetric_parties_pay_equally() {
        let parties = vec![Party { rate: 0.7, baseline_price: 2.0 }; 5];
        let out = nash_split_multi(&parties, 3.0, 1.3).unwrap();
        for p in &out.deal().unwrap().payments {
            assert!(rel_close(*p, 0.6, 1e-12));
        }
    }

    #[test]
    fn multi_corner_solution() {
        // A party with tiny surplus capacity pays nothing.
        let parties = [
            Party { rate: 1.0, baseline_price: 4.0 },
            Party { rate: 1.0, baseline_price: 0.11 },
        ];
        let out = nash_split_multi(&parties, 0.1, 1.0).unwrap();
        let out = out.deal().unwrap();
        assert_eq!(out.payments[1], 0.0);
        assert!(rel_close(out.payments[0], 0.1, 1e-12));
        assert!(out.gains.iter().all(|&g| g > 0.0));
    }

    #[test]
    fn multi_no_deal() {
        let parties = [Party { rate: 1.0, baseline_price: 0.01 }, Party { rate: 1.0, baseline_price: 0.01 }];
        assert_eq!(nash_split_multi(&parties, 5.0, 1.0).unwrap(), MultiSplit::NoDeal);
        assert!(nash_split_multi(&parties[..1], 5.0, 1.0).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn stationary_point_equals_closed_form(
                rate in 0.01f64..100.0,
                ratio in 0.01f64..1.0,
                price in 0.01f64..10.0,
                shrink in 0.05f64..1.0,
                a in 0.01f64..10.0,
            ) {
                let input = BargainInput { rate, ratio, price, joint_price: price * shrink, delay_cost: a };
                if let NashSplit::Deal(o) = nash_split(&input).unwrap() {
                    prop_assert!(rel_close(o.large_payment, o.large_payment_closed_form, 1e-9));
                    prop_assert!((o.large_payment + o.small_payment - input.joint_price).abs() <= 4.0 * f64::EPSILON * input.joint_price);
                }
            }

            #[test]
            fn payment_ignores_rate_and_delay_scale(
                ratio in 0.01f64..1.0,
                price in 0.01f64..10.0,
                shrink in 0.5f64..1.0,
            ) {
                let base = BargainInput { rate: 1.0, ratio, price, joint_price: price * shrink, delay_cost: 1.0 };
                let scaled = BargainInput { rate: 7.0, delay_cost: 10.0, ..base };
                let b1 = nash_split(&base).unwrap().deal().unwrap().large_payment;
                let b1s = nash_split(&scaled).unwrap().deal().unwrap().large_payment;
                prop_assert!(rel_close(b1, b1s, 1e-12));
            }
        }
    }
}
