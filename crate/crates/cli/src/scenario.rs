//! Scenario files.
//!
//! A scenario is a TOML document with a `[market]` table, a list of
//! `[[rollups]]` (optionally extended by a `[geometric_rollups]` generator)
//! and optional `[merge]`, `[bargain]` and `[simulate]` tables. Unknown keys
//! are rejected.

use std::path::Path;

use blob_econ::{ArrivalModel, MarketParams, Rollup};
use serde::Deserialize;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    market: RawMarket,
    #[serde(default)]
    rollups: Vec<RawRollup>,
    geometric_rollups: Option<Geometric>,
    merge: Option<MergeSpec>,
    bargain: Option<RawBargain>,
    simulate: Option<RawSimulate>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMarket {
    delay_cost: f64,
    gas_price: f64,
    metadata_gas: f64,
    calldata_gas: f64,
    target_blobs: f64,
    max_blob_size: Option<f64>,
    #[serde(default)]
    price_floor: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRollup {
    id: String,
    rate: f64,
}

/// `count` rollups with rates `first_rate * ratio^i`, named `{id_prefix}{i}`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct Geometric {
    first_rate: f64,
    ratio: f64,
    count: usize,
    #[serde(default = "default_prefix")]
    id_prefix: String,
}

fn default_prefix() -> String {
    "r".to_string()
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MergeSpec {
    pub first: String,
    pub second: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBargain {
    rate: Option<f64>,
    ratio: Option<f64>,
    price: Option<f64>,
    new_price: Option<f64>,
    first: Option<String>,
    second: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSimulate {
    rollup: Option<String>,
    #[serde(default)]
    arrivals: Arrivals,
    horizon: Option<f64>,
    #[serde(default)]
    seed: u64,
    blob_price: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Arrivals {
    #[default]
    Uniform,
    Poisson,
}

/// How the `bargain` command obtains its inputs.
#[derive(Debug, Clone, PartialEq)]
pub enum BargainSpec {
    /// Explicit large-rollup rate, rate ratio, baseline and joint prices.
    Direct { rate: f64, ratio: f64, price: f64, new_price: f64 },
    /// Prices derived by merging two rollups of the scenario.
    Merge(MergeSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimSpec {
    pub rollup: Option<String>,
    pub arrivals: ArrivalModel,
    pub horizon: Option<f64>,
    pub seed: u64,
    pub blob_price: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub params: MarketParams<f64>,
    /// Sorted by decreasing rate, ties by id.
    pub rollups: Vec<Rollup<f64>>,
    pub merge: Option<MergeSpec>,
    pub bargain: Option<BargainSpec>,
    pub simulate: Option<SimSpec>,
    /// Normalizations applied while loading.
    pub notices: Vec<String>,
}

impl Scenario {
    pub fn rollup(&self, id: &str) -> Result<&Rollup<f64>> {
        self.rollups
            .iter()
            .find(|r| r.id == id)
            .ok_or_else(|| CliError::Validation(format!("unknown rollup id `{id}`")))
    }
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read { path: path.display().to_string(), source })?;
    parse_scenario(&text).map_err(|e| match e {
        CliError::Parse { message, .. } => CliError::Parse { path: path.display().to_string(), message },
        other => other,
    })
}

pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let raw: RawScenario =
        toml::from_str(text).map_err(|e| CliError::Parse { path: "<scenario>".into(), message: e.to_string() })?;
    build(raw)
}

fn finite(field: &str, x: f64) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(CliError::Validation(format!("{field} must be finite, got {x}")))
    }
}

fn build(raw: RawScenario) -> Result<Scenario> {
    let m = &raw.market;
    let mut params = MarketParams::new(
        finite("market.delay_cost", m.delay_cost)?,
        finite("market.gas_price", m.gas_price)?,
        finite("market.metadata_gas", m.metadata_gas)?,
        finite("market.calldata_gas", m.calldata_gas)?,
        finite("market.target_blobs", m.target_blobs)?,
    )
    .with_price_floor(finite("market.price_floor", m.price_floor)?);
    if let Some(cap) = m.max_blob_size {
        params = params.with_max_blob_size(finite("market.max_blob_size", cap)?);
    }
    params.validate().map_err(|e| CliError::Validation(format!("market: {e}")))?;

    let mut rollups: Vec<Rollup<f64>> = raw.rollups.iter().map(|r| Rollup::new(r.id.clone(), r.rate)).collect();
    if let Some(g) = &raw.geometric_rollups {
        if !(g.first_rate.is_finite() && g.first_rate > 0.0 && g.ratio.is_finite() && g.ratio > 0.0) {
            return Err(CliError::Validation("geometric_rollups: first_rate and ratio must be positive".into()));
        }
        rollups.extend((0..g.count).map(|i| Rollup::new(format!("{}{i}", g.id_prefix), g.first_rate * g.ratio.powi(i as i32))));
    }
    if rollups.is_empty() {
        return Err(CliError::Validation("at least one rollup is required".into()));
    }
    for (i, r) in rollups.iter().enumerate() {
        if !(r.rate.is_finite() && r.rate > 0.0) {
            return Err(CliError::Validation(format!("rollup `{}`: rate must be positive, got {}", r.id, r.rate)));
        }
        if rollups[..i].iter().any(|o| o.id == r.id) {
            return Err(CliError::Validation(format!("duplicate rollup id `{}`", r.id)));
        }
    }

    let mut notices = Vec::new();
    let before: Vec<String> = rollups.iter().map(|r| r.id.clone()).collect();
    rollups.sort_by(|a, b| b.rate.total_cmp(&a.rate).then_with(|| a.id.cmp(&b.id)));
    if rollups.iter().map(|r| &r.id).ne(before.iter()) {
        notices.push("rollups reordered by decreasing rate".to_string());
    }

    let known = |id: &str| rollups.iter().any(|r| r.id == id);
    let check_pair = |spec: &MergeSpec, table: &str| -> Result<()> {
        for id in [&spec.first, &spec.second] {
            if !known(id) {
                return Err(CliError::Validation(format!("{table}: unknown rollup id `{id}`")));
            }
        }
        if spec.first == spec.second {
            return Err(CliError::Validation(format!("{table}: first and second must differ")));
        }
        Ok(())
    };
    if let Some(spec) = &raw.merge {
        check_pair(spec, "merge")?;
    }

    let bargain = match raw.bargain {
        None => None,
        Some(b) => Some(match (b.ratio, b.price, b.new_price, b.first, b.second) {
            (Some(ratio), Some(price), Some(new_price), None, None) => {
                let rate = b.rate.unwrap_or(rollups[0].rate);
                BargainSpec::Direct {
                    rate: finite("bargain.rate", rate)?,
                    ratio: finite("bargain.ratio", ratio)?,
                    price: finite("bargain.price", price)?,
                    new_price: finite("bargain.new_price", new_price)?,
                }
            }
            (None, None, None, Some(first), Some(second)) if b.rate.is_none() => {
                let spec = MergeSpec { first, second };
                check_pair(&spec, "bargain")?;
                BargainSpec::Merge(spec)
            }
            _ => {
                return Err(CliError::Validation(
                    "bargain: give either ratio, price and new_price (optional rate) or first and second".into(),
                ))
            }
        }),
    };

    let simulate = match raw.simulate {
        None => None,
        Some(s) => {
            if let Some(id) = &s.rollup {
                if !known(id) {
                    return Err(CliError::Validation(format!("simulate: unknown rollup id `{id}`")));
                }
            }
            if let Some(h) = s.horizon {
                if !(h.is_finite() && h > 0.0) {
                    return Err(CliError::Validation(format!("simulate.horizon must be positive, got {h}")));
                }
            }
            if let Some(p) = s.blob_price {
                if !(p.is_finite() && p >= 0.0) {
                    return Err(CliError::Validation(format!("simulate.blob_price must be non-negative, got {p}")));
                }
            }
            Some(SimSpec {
                rollup: s.rollup,
                arrivals: match s.arrivals {
                    Arrivals::Uniform => ArrivalModel::UniformDeterministic,
                    Arrivals::Poisson => ArrivalModel::Poisson,
                },
                horizon: s.horizon,
                seed: s.seed,
                blob_price: s.blob_price,
            })
        }
    };

    Ok(Scenario { params, rollups, merge: raw.merge, bargain, simulate, notices })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        [market]
        delay_cost = 1.0
        gas_price = 1.0
        metadata_gas = 0.0
        calldata_gas = 1.0
        target_blobs = 3.0

        [[rollups]]
        id = "a"
        rate = 2.0
    "#;

    #[test]
    fn minimal_file() {
        let s = parse_scenario(MINIMAL).unwrap();
        assert_eq!(s.rollups, vec![Rollup::new("a", 2.0)]);
        assert_eq!(s.params.target_blobs, 3.0);
        assert_eq!(s.params.max_blob_size, None);
        assert!(s.notices.is_empty());
    }

    #[test]
    fn zero_rate_rejected() {
        let text = MINIMAL.replace("rate = 2.0", "rate = 0.0");
        let err = parse_scenario(&text).unwrap_err();
        assert!(err.to_string().contains("rate must be positive"), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn unsorted_rates_are_sorted_with_notice() {
        let text = format!("{MINIMAL}\n[[rollups]]\nid = \"b\"\nrate = 5.0\n[[rollups]]\nid = \"c\"\nrate = 2.0\n");
        let s = parse_scenario(&text).unwrap();
        let ids: Vec<&str> = s.rollups.iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, ["b", "a", "c"]);
        assert_eq!(s.notices.len(), 1);
    }

    #[test]
    fn unknown_field_rejected_with_location() {
        let text = MINIMAL.replace("gas_price", "gas_prise");
        let err = parse_scenario(&text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("gas_prise") && msg.contains("line"), "{msg}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn geometric_generator() {
        let text = MINIMAL.replace("[[rollups]]\n        id = \"a\"\n        rate = 2.0", "")
            + "\n[geometric_rollups]\nfirst_rate = 1.0\nratio = 0.5\ncount = 60\n";
        let s = parse_scenario(&text).unwrap();
        assert_eq!(s.rollups.len(), 60);
        assert_eq!(s.rollups[59].rate, 0.5f64.powi(59));
        assert_eq!(s.rollups[3].id, "r3");
    }

    #[test]
    fn bargain_modes() {
        let direct = format!("{MINIMAL}\n[bargain]\nratio = 0.25\nprice = 1.0\nnew_price = 0.81\n");
        assert_eq!(
            parse_scenario(&direct).unwrap().bargain,
            Some(BargainSpec::Direct { rate: 2.0, ratio: 0.25, price: 1.0, new_price: 0.81 })
        );
        let mixed = format!("{MINIMAL}\n[bargain]\nratio = 0.25\nfirst = \"a\"\n");
        assert!(parse_scenario(&mixed).is_err());
        let unknown = format!("{MINIMAL}\n[merge]\nfirst = \"a\"\nsecond = \"zz\"\n");
        assert!(parse_scenario(&unknown).unwrap_err().to_string().contains("zz"));
    }

    #[test]
    fn market_invariants() {
        let text = MINIMAL.replace("target_blobs = 3.0", "target_blobs = 0.0");
        assert!(parse_scenario(&text).unwrap_err().to_string().contains("target_blobs"));
        let text = MINIMAL.replace("target_blobs = 3.0", "target_blobs = 3.0\nmax_blob_size = -1.0");
        assert!(parse_scenario(&text).is_err());
    }
}
