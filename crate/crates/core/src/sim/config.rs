use serde::{Deserialize, Serialize};

use crate::channel::{AirGroundParams, RadioParams, RainModel};
use crate::error::{Error, Result};

/// How offloading candidates map onto the discrete action space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelayEnumeration {
    /// `{0, nearest UAV, nearest LEO, GEO}`.
    Collapsed,
    /// One action per UAV, per LEO and per GEO.
    Full,
}

/// Per-class radio constants used by the link model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Radios {
    pub bs_uav: RadioParams,
    pub bs_leo: RadioParams,
    pub bs_geo: RadioParams,
    pub uav_leo: RadioParams,
    pub uav_geo: RadioParams,
    pub leo_geo: RadioParams,
}

const KA_BAND_WAVELENGTH_M: f64 = 0.015;

impl Default for Radios {
    fn default() -> Self {
        // Bandwidths follow the reference scenario; powers and antenna gains are
        // link-budget constants sized for desk-scale traffic loads.
        let sat = |bw: f64, p: f64, gt: f64, gr: f64| RadioParams::thermal(bw, p, gt, gr, KA_BAND_WAVELENGTH_M);
        Self {
            bs_uav: RadioParams::thermal(20e6, 1.0e-4, 1.0, 1.0, 0.125),
            bs_leo: sat(37.5e6, 0.5, 1.0e2, 1.0e3),
            bs_geo: sat(25e6, 1.3, 5.0e3, 1.0e4),
            uav_leo: sat(10e6, 0.25, 1.0e2, 1.0e3),
            uav_geo: sat(5e6, 0.5, 5.0e3, 1.0e4),
            leo_geo: sat(25e6, 0.7, 1.0e4, 1.0e4),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Side of the square service area (m).
    pub area_side_m: f64,
    /// Tick length (s).
    pub tick_s: f64,
    pub packet_bits: u32,

    pub num_bs: usize,
    pub num_uav: usize,
    pub num_leo: usize,
    pub num_geo: usize,
    pub num_sources: usize,
    pub num_destinations: usize,
    /// Base stations tile the area as `bs_grid.0` columns by `bs_grid.1` rows.
    pub bs_grid: (usize, usize),

    pub relay_queue_capacity: usize,
    pub ue_queue_capacity: usize,

    /// Mean offered load per source (bit/s).
    pub source_rate_bps: f64,
    /// Standard deviation of the per-tick generated bits, as a fraction of the mean.
    pub source_sigma_frac: f64,

    pub ue_speed_mps: f64,
    pub bs_height_m: f64,
    pub uav_altitude_m: f64,
    pub uav_speed_mps: f64,
    pub uav_heading_period_s: f64,
    /// Horizontal reach of UAV-BS links (m).
    pub uav_radius_m: f64,
    pub leo_altitude_m: f64,
    pub leo_period_s: f64,
    /// Fraction of each LEO period during which it covers the area.
    pub leo_duty: f64,
    /// Half-length of the ground track segment flown during a coverage window (m).
    pub leo_track_half_m: f64,
    pub geo_altitude_m: f64,

    /// Fixed UE-BS access rate (bit/s).
    pub ue_bs_rate_bps: f64,
    /// Fixed BS-BS backhaul rate (bit/s).
    pub bs_bs_rate_bps: f64,
    pub air_ground: AirGroundParams,
    pub radios: Radios,
    pub rain: RainModel,

    pub relay_enumeration: RelayEnumeration,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            area_side_m: 10_000.0,
            tick_s: 0.01,
            packet_bits: 1500 * 8,
            num_bs: 8,
            num_uav: 6,
            num_leo: 2,
            num_geo: 1,
            num_sources: 40,
            num_destinations: 10,
            bs_grid: (4, 2),
            relay_queue_capacity: 200,
            ue_queue_capacity: 200,
            source_rate_bps: 1e6,
            source_sigma_frac: 0.1,
            ue_speed_mps: 1.5,
            bs_height_m: 30.0,
            uav_altitude_m: 200.0,
            uav_speed_mps: 10.0,
            uav_heading_period_s: 10.0,
            uav_radius_m: 3_000.0,
            leo_altitude_m: 550e3,
            leo_period_s: 30.0,
            leo_duty: 0.6,
            leo_track_half_m: 1_000e3,
            geo_altitude_m: 35_786e3,
            ue_bs_rate_bps: 20e6,
            bs_bs_rate_bps: 8e6,
            air_ground: AirGroundParams::default(),
            radios: Radios::default(),
            rain: RainModel::default(),
            relay_enumeration: RelayEnumeration::Collapsed,
        }
    }
}

fn positive(path: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(path, format!("must be positive, got {v}")))
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        positive("sim.area_side_m", self.area_side_m)?;
        positive("sim.tick_s", self.tick_s)?;
        if self.packet_bits == 0 {
            return Err(Error::config("sim.packet_bits", "must be >= 1"));
        }
        if self.bs_grid.0 * self.bs_grid.1 != self.num_bs {
            return Err(Error::config(
                "sim.bs_grid",
                format!(
                    "{}x{} grid does not hold {} base stations",
                    self.bs_grid.0, self.bs_grid.1, self.num_bs
                ),
            ));
        }
        if self.num_sources > 0 && self.num_destinations == 0 {
            return Err(Error::config("sim.num_destinations", "sources need at least one destination"));
        }
        if self.num_geo > 1 {
            return Err(Error::config("sim.num_geo", "at most one GEO satellite is modelled"));
        }
        if self.relay_queue_capacity == 0 || self.ue_queue_capacity == 0 {
            return Err(Error::config("sim.relay_queue_capacity", "queue capacities must be >= 1"));
        }
        if !(self.source_rate_bps >= 0.0) || !(self.source_sigma_frac >= 0.0) {
            return Err(Error::config("sim.source_rate_bps", "traffic mean and sigma must be >= 0"));
        }
        for (path, v) in [("sim.ue_speed_mps", self.ue_speed_mps), ("sim.uav_speed_mps", self.uav_speed_mps)] {
            if !(v >= 0.0) {
                return Err(Error::config(path, "speed must be >= 0"));
            }
        }
        positive("sim.uav_heading_period_s", self.uav_heading_period_s)?;
        positive("sim.uav_radius_m", self.uav_radius_m)?;
        positive("sim.leo_period_s", self.leo_period_s)?;
        if !(self.leo_duty > 0.0 && self.leo_duty <= 1.0) {
            return Err(Error::config("sim.leo_duty", "must be in (0, 1]"));
        }
        positive("sim.ue_bs_rate_bps", self.ue_bs_rate_bps)?;
        positive("sim.bs_bs_rate_bps", self.bs_bs_rate_bps)?;
        self.air_ground
            .validate()
            .map_err(|e| Error::config("sim.air_ground", e.to_string()))?;
        self.rain.validate().map_err(|e| Error::config("sim.rain", e.to_string()))?;
        let r = &self.radios;
        for (path, radio) in [
            ("sim.radios.bs_uav", &r.bs_uav),
            ("sim.radios.bs_leo", &r.bs_leo),
            ("sim.radios.bs_geo", &r.bs_geo),
            ("sim.radios.uav_leo", &r.uav_leo),
            ("sim.radios.uav_geo", &r.uav_geo),
            ("sim.radios.leo_geo", &r.leo_geo),
        ] {
            radio.validate().map_err(|e| Error::config(path, e.to_string()))?;
        }
        Ok(())
    }
}
