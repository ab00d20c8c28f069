//! Seed-level summaries of one or more metrics files.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use super::record::{read_csv, MetricsRecord};
use crate::error::{Error, Result};

/// Linear-interpolation quantile of sorted data (the common "type 7" rule).
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of no data");
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Spread {
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
}

impl Spread {
    pub fn of(values: &[f64]) -> Self {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Self {
            median: quantile(&v, 0.5),
            q1: quantile(&v, 0.25),
            q3: quantile(&v, 0.75),
        }
    }

    pub fn iqr(&self) -> f64 {
        self.q3 - self.q1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub scenario: String,
    pub algorithm: String,
    pub sweep_value: f64,
    pub seeds: usize,
    pub throughput_bps: Spread,
    pub drop_rate: Spread,
    pub mean_delay_s: Spread,
    pub mean_episode_reward: Spread,
}

/// Median and quartiles across seeds per (scenario, algorithm, sweep value).
/// Error marker rows are skipped.
pub fn summarize(rows: &[MetricsRecord]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(String, String, u64), Vec<&MetricsRecord>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.is_ok()) {
        // sweep values are nonnegative, so bit order matches numeric order
        groups
            .entry((r.scenario.clone(), r.algorithm.clone(), r.sweep_value.to_bits()))
            .or_default()
            .push(r);
    }
    groups
        .into_iter()
        .map(|((scenario, algorithm, v), rs)| {
            let col = |f: fn(&MetricsRecord) -> f64| Spread::of(&rs.iter().map(|r| f(r)).collect::<Vec<_>>());
            SummaryRow {
                scenario,
                algorithm,
                sweep_value: f64::from_bits(v),
                seeds: rs.len(),
                throughput_bps: col(|r| r.throughput_bps),
                drop_rate: col(|r| r.drop_rate),
                mean_delay_s: col(|r| r.mean_delay_s),
                mean_episode_reward: col(|r| r.mean_episode_reward),
            }
        })
        .collect()
}

pub const SUMMARY_HEADER: &str = "scenario,algorithm,sweep_value,seeds,\
throughput_median,throughput_iqr,drop_rate_median,drop_rate_iqr,\
delay_median,delay_iqr,reward_median,reward_iqr";

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.scenario,
            r.algorithm,
            r.sweep_value,
            r.seeds,
            r.throughput_bps.median,
            r.throughput_bps.iqr(),
            r.drop_rate.median,
            r.drop_rate.iqr(),
            r.mean_delay_s.median,
            r.mean_delay_s.iqr(),
            r.mean_episode_reward.median,
            r.mean_episode_reward.iqr(),
        ));
    }
    out
}

/// Reads every file (all must share the metrics schema) and summarises them together.
pub fn compare_files(paths: &[&Path]) -> Result<Vec<SummaryRow>> {
    if paths.is_empty() {
        return Err(Error::Schema("no metrics files given".into()));
    }
    let mut rows = Vec::new();
    for p in paths {
        rows.extend(read_csv(p)?);
    }
    Ok(summarize(&rows))
}
