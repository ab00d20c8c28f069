//! Metrics CSV rows and the resolved-config sidecar.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::error::{Error, Result};

/// Bumped whenever the CSV columns change.
pub const SCHEMA: &str = "sagin-metrics/1";

pub const HEADER: [&str; 11] = [
    "scenario",
    "algorithm",
    "seed",
    "sweep_value",
    "throughput_bps",
    "drop_rate",
    "mean_delay_s",
    "mean_episode_reward",
    "wall_clock_s",
    "status",
    "message",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub scenario: String,
    pub algorithm: String,
    pub seed: u64,
    pub sweep_value: f64,
    pub throughput_bps: f64,
    pub drop_rate: f64,
    pub mean_delay_s: f64,
    pub mean_episode_reward: f64,
    pub wall_clock_s: f64,
    /// `ok`, or `error` on the marker row left by a failed run.
    pub status: String,
    pub message: String,
}

impl MetricsRecord {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }

    pub fn check(&self) -> Result<()> {
        if !self.is_ok() {
            return Ok(());
        }
        let vals = [
            self.sweep_value,
            self.throughput_bps,
            self.drop_rate,
            self.mean_delay_s,
            self.mean_episode_reward,
            self.wall_clock_s,
        ];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::Schema(format!("non-finite metric in {self:?}")));
        }
        if !(0.0..=1.0).contains(&self.drop_rate) {
            return Err(Error::Schema(format!("drop rate {} outside [0, 1]", self.drop_rate)));
        }
        Ok(())
    }

    fn sort_key(&self) -> (u8, u64, u64) {
        (u8::from(!self.is_ok()), self.sweep_value.to_bits(), self.seed)
    }
}

/// Rows in canonical order: by sweep value, then seed, error markers last.
pub fn canonical_sort(rows: &mut [MetricsRecord]) {
    rows.sort_by(|a, b| {
        let (ea, _, sa) = a.sort_key();
        let (eb, _, sb) = b.sort_key();
        ea.cmp(&eb).then(a.sweep_value.total_cmp(&b.sweep_value)).then(sa.cmp(&sb))
    });
}

pub fn write_csv(path: &Path, rows: &[MetricsRecord]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(csv_err)?;
    w.write_record(HEADER).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<MetricsRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let header: Vec<String> = r.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    if header != HEADER {
        return Err(Error::Schema(format!("{}: header {:?} is not {SCHEMA}", path.display(), header)));
    }
    let mut rows = Vec::new();
    for rec in r.deserialize() {
        let rec: MetricsRecord = rec.map_err(|e| Error::Schema(format!("{}: {e}", path.display())))?;
        rec.check()?;
        rows.push(rec);
    }
    Ok(rows)
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Schema(format!("{other:?}")),
    }
}

/// Everything needed to rerun: the resolved config plus provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub schema: String,
    pub crate_version: String,
    pub config: ExperimentConfig,
}

impl Sidecar {
    pub fn new(config: &ExperimentConfig) -> Self {
        Self {
            schema: SCHEMA.into(),
            crate_version: env!("CARGO_PKG_VERSION").into(),
            config: config.clone(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self).map_err(|e| Error::Schema(e.to_string()))?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let s: Self = serde_json::from_str(&std::fs::read_to_string(path)?).map_err(|e| Error::Schema(e.to_string()))?;
        if s.schema != SCHEMA {
            return Err(Error::Schema(format!("sidecar schema {} is not {SCHEMA}", s.schema)));
        }
        s.config.validate()?;
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(seed: u64, v: f64) -> MetricsRecord {
        MetricsRecord {
            scenario: "sagin_sweep".into(),
            algorithm: "none".into(),
            seed,
            sweep_value: v,
            throughput_bps: 1e6,
            drop_rate: 0.25,
            mean_delay_s: 0.04,
            mean_episode_reward: 12.5,
            wall_clock_s: 0.0,
            status: "ok".into(),
            message: String::new(),
        }
    }

    #[test]
    fn csv_round_trip_and_order() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        let mut rows = vec![row(1, 30.0), row(0, 30.0), row(0, 20.0)];
        canonical_sort(&mut rows);
        assert_eq!(
            rows.iter().map(|r| (r.sweep_value, r.seed)).collect::<Vec<_>>(),
            vec![(20.0, 0), (30.0, 0), (30.0, 1)]
        );
        write_csv(&p, &rows).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with(&HEADER.join(",")));
        assert_eq!(read_csv(&p).unwrap(), rows);
    }

    #[test]
    fn rejects_foreign_header_and_bad_rows() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        std::fs::write(&p, "a,b\n1,2\n").unwrap();
        assert!(matches!(read_csv(&p), Err(Error::Schema(_))));
        let mut bad = row(0, 1.0);
        bad.drop_rate = 1.5;
        write_csv(&p, &[bad]).unwrap();
        assert!(read_csv(&p).is_err());
    }

    #[test]
    fn sidecar_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.json");
        let s = Sidecar::new(&ExperimentConfig::default());
        s.write(&p).unwrap();
        assert_eq!(Sidecar::read(&p).unwrap(), s);
    }
}
