//! One function per subcommand; each turns a scenario into a [`Report`].

use std::fmt;
use std::str::FromStr;

use blob_econ::{
    capped_blob_policy, choose_strategy, indifference_price, merge_price, nash_split, simulate, solve_equilibrium,
    solve_equilibrium_capped, BargainInput, Equilibrium, MarketParams, ModelError, NashSplit, PostingPolicy, Rollup,
    SimConfig, Venue,
};

use crate::error::{CliError, Result};
use crate::output::{Cell, Report, Table};
use crate::scenario::{BargainSpec, MergeSpec, Scenario};

/// Baseline equilibrium, honouring the blob size cap when one is set.
pub fn equilibrium_of(scenario: &Scenario) -> Result<Equilibrium<f64>> {
    Ok(if scenario.params.max_blob_size.is_some() {
        solve_equilibrium_capped(&scenario.rollups, &scenario.params)?
    } else {
        solve_equilibrium(&scenario.rollups, &scenario.params)?
    })
}

/// Best response of `rollup` at `price`, with blob batches clipped to the cap.
fn policy_at(rollup: &Rollup<f64>, price: f64, params: &MarketParams<f64>) -> Result<PostingPolicy<f64>> {
    let policy = choose_strategy(rollup, price, params)?;
    Ok(if policy.venue == Venue::Blob && params.max_blob_size.is_some() {
        capped_blob_policy(rollup, price, params)?
    } else {
        policy
    })
}

fn venue(v: Venue) -> Cell {
    Cell::text(v.to_string())
}

pub fn policy(scenario: &Scenario, blob_price: Option<f64>) -> Result<Report> {
    let (price, source) = match blob_price {
        Some(p) if !(p.is_finite() && p >= 0.0) => {
            return Err(CliError::Validation(format!("--blob-price must be non-negative, got {p}")))
        }
        Some(p) => (p, "override"),
        None => (equilibrium_of(scenario)?.price, "equilibrium"),
    };
    let params = &scenario.params;
    let mut report = Report::new("Posting policies");
    report.add("blob_price", Cell::Num(price)).add("price_source", Cell::text(source));
    let mut table = Table::new([
        "id",
        "rate",
        "indifference_price",
        "venue",
        "interval",
        "batch_size",
        "per_tx_cost",
        "blob_per_tx_cost",
        "l1_per_tx_cost",
        "cap_binding",
    ]);
    for r in &scenario.rollups {
        let chosen = policy_at(r, price, params)?;
        let blob = if params.max_blob_size.is_some() {
            capped_blob_policy(r, price, params)?
        } else {
            blob_econ::blob_policy(r, price, params)?
        };
        let l1 = blob_econ::l1_policy(r, params)?;
        table.push(vec![
            Cell::text(&r.id),
            Cell::Num(r.rate),
            Cell::Num(indifference_price(r, params)?),
            venue(chosen.venue),
            Cell::Num(chosen.interval),
            Cell::Num(chosen.batch_size),
            Cell::Num(chosen.per_tx_cost),
            Cell::Num(blob.per_tx_cost),
            Cell::Num(l1.per_tx_cost),
            Cell::Flag(chosen.cap_binding),
        ]);
    }
    report.table = Some(table);
    Ok(report)
}

pub fn equilibrium(scenario: &Scenario) -> Result<Report> {
    let eq = equilibrium_of(scenario)?;
    let capped = scenario.params.max_blob_size.is_some();
    let mut report = Report::new(if capped { "Equilibrium (blob size cap)" } else { "Equilibrium" });
    report
        .add("blob_price", Cell::Num(eq.price))
        .add("threshold", Cell::Int(eq.threshold as u64))
        .add("rollups", Cell::Int(eq.assignments.len() as u64))
        .add("blob_rate", Cell::Num(eq.blob_rate))
        .add("target_blobs", Cell::Num(scenario.params.target_blobs));
    let mut table =
        Table::new(["id", "rate", "venue", "interval", "batch_size", "per_tx_cost", "indifference_price", "cap_binding"]);
    for a in &eq.assignments {
        table.push(vec![
            Cell::text(&a.rollup.id),
            Cell::Num(a.rollup.rate),
            venue(a.policy.venue),
            Cell::Num(a.policy.interval),
            Cell::Num(a.policy.batch_size),
            Cell::Num(a.policy.per_tx_cost),
            Cell::Num(indifference_price(&a.rollup, &scenario.params)?),
            Cell::Flag(a.policy.cap_binding),
        ]);
    }
    report.table = Some(table);
    Ok(report)
}

fn merge_spec(scenario: &Scenario, pair: Option<(String, String)>) -> Result<MergeSpec> {
    match pair {
        Some((first, second)) => {
            for id in [&first, &second] {
                scenario.rollup(id)?;
            }
            Ok(MergeSpec { first, second })
        }
        None => scenario
            .merge
            .clone()
            .ok_or_else(|| CliError::Validation("merge needs --merge A B or a [merge] table".into())),
    }
}

pub fn merge(scenario: &Scenario, pair: Option<(String, String)>) -> Result<Report> {
    let spec = merge_spec(scenario, pair)?;
    let out = merge_price(&scenario.rollups, &spec.first, &spec.second, &scenario.params)?;
    let mut report = Report::new(format!("Merge of {} and {}", out.large_id, out.small_id));
    report
        .add("case", Cell::text(format!("{:?}", out.case)))
        .add("large", Cell::text(&out.large_id))
        .add("small", Cell::text(&out.small_id))
        .add("old_price", Cell::Num(out.old_price))
        .add("new_price", Cell::Num(out.new_price))
        .add("price_ratio", Cell::Num(out.price_ratio()))
        .add("joint_interval", Cell::Num(out.joint.interval))
        .add("joint_per_tx_cost", Cell::Num(out.joint.per_tx_cost))
        .add("large_disagreement_cost", Cell::Num(out.large_disagreement_cost))
        .add("joined", Cell::Flag(out.joined))
        .add("participants_consistent", Cell::Flag(out.participants_consistent))
        .add("profitable", Cell::Flag(out.profitable));

    if !out.profitable {
        let why = if out.joined {
            format!(
                "joint cost per transaction {} >= solo cost {}",
                crate::output::sig6(out.joint.per_tx_cost),
                crate::output::sig6(out.large_disagreement_cost)
            )
        } else {
            "the merged rollup cannot afford the blob price".to_string()
        };
        report.verdict = Some(format!("merge is not profitable for the large rollup: {why}"));
        return Ok(report);
    }
    match nash_split(&out.bargain_input(&scenario.params))? {
        NashSplit::Deal(d) => {
            report
                .add("large_payment", Cell::Num(d.large_payment))
                .add("small_payment", Cell::Num(d.small_payment))
                .add("large_improvement", Cell::Percent(d.large_improvement))
                .add("small_improvement", Cell::Percent(d.small_improvement));
        }
        // The bargaining model has no metadata cost, so it may disagree with
        // the merge model when metadata_gas > 0.
        NashSplit::NoDeal { .. } => {
            report.verdict = Some("no bargaining split improves on the disagreement point".into());
        }
    }
    Ok(report)
}

/// Bargaining inputs given on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BargainFlags {
    pub ratio: Option<f64>,
    pub price: Option<f64>,
    pub new_price: Option<f64>,
    pub rate: Option<f64>,
}

/// Flags win over the scenario's `[bargain]` table.
pub fn bargain_input(scenario: &Scenario, flags: BargainFlags) -> Result<Option<BargainInput<f64>>> {
    let a = scenario.params.delay_cost;
    let default_rate = flags.rate.unwrap_or(scenario.rollups[0].rate);
    let direct = |rate: f64, ratio: f64, price: f64, joint_price: f64| {
        let input = BargainInput { rate, ratio, price, joint_price, delay_cost: a };
        input.validate().map_err(|e| CliError::Validation(format!("bargain: {e}")))?;
        Ok(Some(input))
    };
    match (flags.ratio, flags.price, flags.new_price) {
        (Some(f), Some(b), Some(bn)) => return direct(default_rate, f, b, bn),
        (None, None, None) => {}
        _ => return Err(CliError::Validation("bargain direct mode needs all of --f, --price and --new-price".into())),
    }
    match &scenario.bargain {
        Some(BargainSpec::Direct { rate, ratio, price, new_price }) => {
            direct(flags.rate.unwrap_or(*rate), *ratio, *price, *new_price)
        }
        Some(BargainSpec::Merge(spec)) => {
            let out = merge_price(&scenario.rollups, &spec.first, &spec.second, &scenario.params)?;
            Ok(out.joined.then(|| out.bargain_input(&scenario.params)))
        }
        None => Err(CliError::Validation("bargain needs --f/--price/--new-price or a [bargain] table".into())),
    }
}

pub fn bargain(scenario: &Scenario, flags: BargainFlags) -> Result<Report> {
    let mut report = Report::new("Nash bargaining split");
    let Some(input) = bargain_input(scenario, flags)? else {
        report.verdict = Some("no deal: the merged rollup cannot afford the blob price".into());
        return Ok(report);
    };
    report
        .add("rate", Cell::Num(input.rate))
        .add("ratio", Cell::Num(input.ratio))
        .add("price", Cell::Num(input.price))
        .add("new_price", Cell::Num(input.joint_price));
    match nash_split(&input)? {
        NashSplit::Deal(d) => {
            report
                .add("large_payment", Cell::Num(d.large_payment))
                .add("small_payment", Cell::Num(d.small_payment))
                .add("large_payment_closed_form", Cell::Num(d.large_payment_closed_form))
                .add("proportional_payment", Cell::Num(d.proportional_payment))
                .add("joint_interval", Cell::Num(d.joint_interval))
                .add("joint_per_tx_cost", Cell::Num(d.joint_per_tx_cost))
                .add("large_per_tx_cost", Cell::Num(d.large_per_tx_cost))
                .add("small_per_tx_cost", Cell::Num(d.small_per_tx_cost))
                .add("large_disagreement", Cell::Num(d.large_disagreement))
                .add("small_disagreement", Cell::Num(d.small_disagreement))
                .add("large_improvement", Cell::Percent(d.large_improvement))
                .add("small_improvement", Cell::Percent(d.small_improvement));
        }
        NashSplit::NoDeal { joint_per_tx_cost, large_disagreement } => {
            report
                .add("joint_per_tx_cost", Cell::Num(joint_per_tx_cost))
                .add("large_disagreement", Cell::Num(large_disagreement));
            report.verdict = Some(format!(
                "no deal: joint cost per transaction {} is not below the large rollup's solo cost {}",
                crate::output::sig6(joint_per_tx_cost),
                crate::output::sig6(large_disagreement)
            ));
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SimFlags {
    pub seed: Option<u64>,
    pub horizon: Option<f64>,
}

/// Posting intervals simulated when no horizon is given.
pub const DEFAULT_SIM_INTERVALS: f64 = 1000.0;

pub fn simulate_cmd(scenario: &Scenario, flags: SimFlags) -> Result<Report> {
    let spec = scenario.simulate.clone();
    let rollup = match spec.as_ref().and_then(|s| s.rollup.as_deref()) {
        Some(id) => scenario.rollup(id)?,
        None => &scenario.rollups[0],
    };
    let params = &scenario.params;
    let (price, policy) = match spec.as_ref().and_then(|s| s.blob_price) {
        Some(p) => (p, policy_at(rollup, p, params)?),
        None => {
            let eq = equilibrium_of(scenario)?;
            let a = eq.policy_of(&rollup.id).expect("rollup belongs to the scenario");
            (eq.price, a.policy)
        }
    };
    let horizon = match (flags.horizon, spec.as_ref().and_then(|s| s.horizon)) {
        (Some(h), _) | (None, Some(h)) => h,
        (None, None) => DEFAULT_SIM_INTERVALS * policy.interval,
    };
    let config = SimConfig {
        arrivals: spec.as_ref().map_or(blob_econ::ArrivalModel::UniformDeterministic, |s| s.arrivals),
        rate: rollup.rate,
        policy,
        params: *params,
        blob_price: price,
        horizon,
        seed: flags.seed.or(spec.as_ref().map(|s| s.seed)).unwrap_or(0),
    };
    let rep = simulate(&config)?;
    let mut report = Report::new(format!("Simulation of {}", rollup.id));
    report
        .add("rollup", Cell::text(&rollup.id))
        .add("venue", venue(policy.venue))
        .add("arrivals", Cell::text(format!("{:?}", config.arrivals)))
        .add("seed", Cell::Int(config.seed))
        .add("blob_price", Cell::Num(price))
        .add("interval", Cell::Num(policy.interval))
        .add("horizon", Cell::Num(horizon))
        .add("posts", Cell::Int(rep.posts))
        .add("transactions", Cell::Int(rep.transactions))
        .add("realized_per_tx_cost", Cell::Num(rep.realized_per_tx_cost))
        .add("closed_form_per_tx_cost", Cell::Num(rep.closed_form_per_tx_cost))
        .add("relative_error", Cell::Num(rep.relative_error))
        .add("mean_batch_delay_cost", Cell::Num(rep.mean_batch_delay_cost));
    Ok(report)
}

/// Parameter varied by `sweep`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepField {
    DelayCost,
    GasPrice,
    MetadataGas,
    CalldataGas,
    TargetBlobs,
    MaxBlobSize,
    PriceFloor,
    /// Bargaining rate ratio `f`.
    Ratio,
    Price,
    NewPrice,
    Rate,
}

impl SweepField {
    const ALL: [(&'static str, SweepField); 11] = [
        ("delay_cost", SweepField::DelayCost),
        ("gas_price", SweepField::GasPrice),
        ("metadata_gas", SweepField::MetadataGas),
        ("calldata_gas", SweepField::CalldataGas),
        ("target_blobs", SweepField::TargetBlobs),
        ("max_blob_size", SweepField::MaxBlobSize),
        ("price_floor", SweepField::PriceFloor),
        ("f", SweepField::Ratio),
        ("price", SweepField::Price),
        ("new_price", SweepField::NewPrice),
        ("rate", SweepField::Rate),
    ];

    pub fn name(self) -> &'static str {
        Self::ALL.iter().find(|(_, f)| *f == self).map(|(n, _)| *n).expect("listed")
    }

    fn is_market(self) -> bool {
        !matches!(self, SweepField::Ratio | SweepField::Price | SweepField::NewPrice | SweepField::Rate)
    }

    pub fn columns(self) -> Vec<&'static str> {
        let mut cols = vec![self.name(), "status"];
        if self.is_market() {
            cols.extend(["blob_price", "threshold", "blob_rate"]);
        } else {
            cols.extend([
                "large_payment",
                "small_payment",
                "joint_per_tx_cost",
                "large_disagreement",
                "large_improvement",
                "small_improvement",
            ]);
        }
        cols
    }
}

impl FromStr for SweepField {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        let s = if s == "ratio" { "f" } else { s };
        Self::ALL.iter().find(|(n, _)| *n == s).map(|(_, f)| *f).ok_or_else(|| {
            let names: Vec<_> = Self::ALL.iter().map(|(n, _)| *n).collect();
            CliError::Validation(format!("unknown sweep field `{s}` (expected one of {})", names.join(", ")))
        })
    }
}

impl fmt::Display for SweepField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRange {
    pub field: SweepField,
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

/// Upper bound on sweep points, against runaway ranges.
pub const MAX_SWEEP_POINTS: usize = 1_000_000;

impl SweepRange {
    /// `lo + i * step` for every `i` with the point at most `hi` (a point
    /// within 1e-9 steps of `hi` is kept).
    pub fn points(&self) -> Result<Vec<f64>> {
        let SweepRange { lo, hi, step, .. } = *self;
        if !(lo.is_finite() && hi.is_finite() && step.is_finite() && step > 0.0 && hi >= lo) {
            return Err(CliError::Validation(format!("sweep range needs LO <= HI and STEP > 0, got {lo} {hi} {step}")));
        }
        let count = ((hi - lo) / step + 1e-9).floor() + 1.0;
        if count > MAX_SWEEP_POINTS as f64 {
            return Err(CliError::Validation(format!("sweep has more than {MAX_SWEEP_POINTS} points")));
        }
        Ok((0..count as usize).map(|i| lo + i as f64 * step).collect())
    }
}

/// One sweep row: the field value followed by the analysis at that value.
pub fn sweep_row(scenario: &Scenario, field: SweepField, value: f64) -> Result<Vec<Cell>> {
    let mut row = vec![Cell::Num(value)];
    if field.is_market() {
        let mut s = scenario.clone();
        let p = &mut s.params;
        match field {
            SweepField::DelayCost => p.delay_cost = value,
            SweepField::GasPrice => p.gas_price = value,
            SweepField::MetadataGas => p.metadata_gas = value,
            SweepField::CalldataGas => p.calldata_gas = value,
            SweepField::TargetBlobs => p.target_blobs = value,
            SweepField::MaxBlobSize => p.max_blob_size = Some(value),
            SweepField::PriceFloor => p.price_floor = value,
            _ => unreachable!("bargaining field"),
        }
        p.validate().map_err(|e| CliError::Validation(format!("{field} = {value}: {e}")))?;
        match equilibrium_of(&s) {
            Ok(eq) => row.extend([
                Cell::text("ok"),
                Cell::Num(eq.price),
                Cell::Int(eq.threshold as u64),
                Cell::Num(eq.blob_rate),
            ]),
            Err(CliError::Model(ModelError::InfeasibleTarget { .. })) => {
                row.extend([Cell::text("infeasible"), Cell::Empty, Cell::Empty, Cell::Empty])
            }
            Err(e) => return Err(e),
        }
        return Ok(row);
    }

    let Some(mut input) = bargain_input(scenario, BargainFlags::default())? else {
        row.push(Cell::text("no-deal"));
        row.extend(std::iter::repeat_n(Cell::Empty, 6));
        return Ok(row);
    };
    match field {
        SweepField::Ratio => input.ratio = value,
        SweepField::Price => input.price = value,
        SweepField::NewPrice => input.joint_price = value,
        SweepField::Rate => input.rate = value,
        _ => unreachable!("market field"),
    }
    input.validate().map_err(|e| CliError::Validation(format!("{field} = {value}: {e}")))?;
    match nash_split(&input)? {
        NashSplit::Deal(d) => row.extend([
            Cell::text("deal"),
            Cell::Num(d.large_payment),
            Cell::Num(d.small_payment),
            Cell::Num(d.joint_per_tx_cost),
            Cell::Num(d.large_disagreement),
            Cell::Percent(d.large_improvement),
            Cell::Percent(d.small_improvement),
        ]),
        NashSplit::NoDeal { joint_per_tx_cost, large_disagreement } => row.extend([
            Cell::text("no-deal"),
            Cell::Empty,
            Cell::Empty,
            Cell::Num(joint_per_tx_cost),
            Cell::Num(large_disagreement),
            Cell::Empty,
            Cell::Empty,
        ]),
    }
    Ok(row)
}

pub fn sweep(scenario: &Scenario, range: SweepRange) -> Result<Report> {
    let points = range.points()?;
    let mut table = Table::new(range.field.columns());
    for v in points {
        table.push(sweep_row(scenario, range.field, v)?);
    }
    let mut report = Report::new(format!("Sweep of {}", range.field));
    report
        .add("lo", Cell::Num(range.lo))
        .add("hi", Cell::Num(range.hi))
        .add("step", Cell::Num(range.step))
        .add("points", Cell::Int(table.rows.len() as u64));
    report.table = Some(table);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::parse_scenario;

    fn scenario(extra: &str) -> Scenario {
        parse_scenario(&format!(
            "[market]\ndelay_cost = 1.0\ngas_price = 1.0\nmetadata_gas = 0.0\ncalldata_gas = 1.0\ntarget_blobs = 1.0\n\
             [[rollups]]\nid = \"a\"\nrate = 4.0\n[[rollups]]\nid = \"b\"\nrate = 1.0\n{extra}"
        ))
        .unwrap()
    }

    fn num(r: &Report, key: &str) -> f64 {
        match r.summary.iter().find(|(k, _)| k == key).map(|(_, v)| v) {
            Some(Cell::Num(x) | Cell::Percent(x)) => *x,
            other => panic!("{key}: {other:?}"),
        }
    }

    #[test]
    fn sweep_points_include_both_ends() {
        let r = SweepRange { field: SweepField::Ratio, lo: 0.05, hi: 1.0, step: 0.05 };
        let pts = r.points().unwrap();
        assert_eq!(pts.len(), 20);
        assert_eq!(pts[0], 0.05);
        assert!((pts[19] - 1.0).abs() < 1e-12);
        assert!(SweepRange { step: 0.0, ..r }.points().is_err());
        assert!(SweepRange { lo: 2.0, ..r }.points().is_err());
    }

    #[test]
    fn sweep_field_names() {
        assert_eq!("ratio".parse::<SweepField>().unwrap(), SweepField::Ratio);
        assert_eq!("f".parse::<SweepField>().unwrap().to_string(), "f");
        assert!("bogus".parse::<SweepField>().is_err());
        assert_eq!(SweepField::TargetBlobs.columns().len(), 5);
        assert_eq!(SweepField::Ratio.columns().len(), 8);
    }

    #[test]
    fn policy_override_and_equilibrium_price() {
        let s = scenario("");
        // {4 blob, 1 L1}: B = 4 / 2 = 2, indifference(1) = 1/2
        let r = policy(&s, None).unwrap();
        assert!((num(&r, "blob_price") - 2.0).abs() < 1e-12);
        let t = r.table.unwrap();
        assert_eq!(t.rows[0][3], Cell::text("blob"));
        assert_eq!(t.rows[1][3], Cell::text("l1"));
        assert!(policy(&s, Some(-1.0)).is_err());
    }

    #[test]
    fn break_even_merge_is_not_profitable() {
        // {4 blob, 1 L1}: Tr_L = sqrt(2 * 2 / 4) = 1 = Tr_J = sqrt(2 * 2.5 / 5)
        let r = merge(&scenario(""), Some(("a".into(), "b".into()))).unwrap();
        assert!((num(&r, "price_ratio") - 1.25).abs() < 1e-12);
        assert!(r.verdict.unwrap().contains("not profitable for the large rollup"));
    }

    #[test]
    fn blob_merge_reports_split() {
        let mut s = scenario("");
        s.params.calldata_gas = 1e6;
        // B = 9/2, B_N = 5/2, Tr_L = 3/2, Tr_J = 1
        let r = merge(&s, Some(("b".into(), "a".into()))).unwrap();
        assert_eq!(r.verdict, None);
        assert!((num(&r, "joint_per_tx_cost") - 1.0).abs() < 1e-12);
        assert!(num(&r, "large_improvement") > 0.0);
        assert!((num(&r, "large_payment") + num(&r, "small_payment") - 2.5).abs() < 1e-12);
    }

    #[test]
    fn bargain_flags_must_be_complete() {
        let s = scenario("");
        let flags = BargainFlags { ratio: Some(0.25), ..Default::default() };
        assert_eq!(bargain(&s, flags).unwrap_err().exit_code(), 2);
        assert_eq!(bargain(&s, BargainFlags::default()).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn bargain_by_ids_uses_merge_prices() {
        let s = scenario("[bargain]\nfirst = \"a\"\nsecond = \"b\"\n");
        let input = bargain_input(&s, BargainFlags::default()).unwrap().unwrap();
        assert_eq!((input.rate, input.ratio), (4.0, 0.25));
        assert!((input.joint_price / input.price - 1.25).abs() < 1e-12);
    }

    #[test]
    fn infeasible_sweep_point_is_marked() {
        let s = scenario("");
        let row = sweep_row(&s, SweepField::MaxBlobSize, 1.0).unwrap();
        assert_eq!(row[1], Cell::text("infeasible"));
        let row = sweep_row(&s, SweepField::MaxBlobSize, 1e9).unwrap();
        assert_eq!(row[1], Cell::text("ok"));
    }

    #[test]
    fn simulate_defaults_to_largest_rollup_at_equilibrium() {
        let r = simulate_cmd(&scenario(""), SimFlags::default()).unwrap();
        assert_eq!(r.summary[0].1, Cell::text("a"));
        assert!(num(&r, "relative_error") < 1e-2);
    }
}
