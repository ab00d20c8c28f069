use std::collections::BTreeMap;

use super::world::{distance, horizontal_distance, Link, LinkClass, NodeId, World};
use crate::channel::{
    elevation_deg, gain_ground_satellite, gain_inter_satellite, path_loss_uav_bs, rain_attenuation, rate_from_gain, rate_from_path_loss,
    RadioParams,
};

const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Minimum horizontal distance used for a UAV hovering straight above a BS.
const MIN_HORIZONTAL_M: f64 = 1.0;

impl World {
    /// Recomputes the edge set and every link rate for the current tick.
    ///
    /// Candidate satellite and UAV pairs are visited in a fixed order and draw
    /// their rain fade whether or not they are active, so the channel stream
    /// does not depend on the topology.
    pub fn rebuild_links(&mut self) {
        self.place_leos();
        let layout = self.layout();
        let cfg = &self.cfg;
        let mut next: BTreeMap<(NodeId, NodeId), Link> = BTreeMap::new();
        let mut put = |a: NodeId, b: NodeId, class: LinkClass, rate: f64, active: bool, delay_ticks: u64| {
            let key = (a.min(b), a.max(b));
            next.insert(
                key,
                Link {
                    endpoints: key,
                    class,
                    rate: if active { rate.max(0.0) } else { 0.0 },
                    active,
                    delay_ticks,
                    credit: (0.0, 0.0),
                },
            );
        };
        let prop = |a: &[f64; 3], b: &[f64; 3]| (distance(a, b) / SPEED_OF_LIGHT / cfg.tick_s).floor() as u64;

        for ue in layout.sources.clone().chain(layout.destinations.clone()) {
            let bs = self.serving_bs(&self.nodes[ue].position);
            put(ue, bs, LinkClass::UeBs, cfg.ue_bs_rate_bps, true, 0);
        }
        let (cols, _) = cfg.bs_grid;
        for a in layout.bs.clone() {
            let i = a - layout.bs.start;
            for b in [
                (i % cols + 1 < cols).then_some(a + 1),
                Some(a + cols).filter(|&b| b < layout.bs.end),
            ]
            .into_iter()
            .flatten()
            {
                let d = prop(&self.nodes[a].position, &self.nodes[b].position);
                put(a, b, LinkClass::BsBs, cfg.bs_bs_rate_bps, true, d);
            }
        }

        let uav_in: Vec<bool> = layout.uav.clone().map(|u| self.in_area(&self.nodes[u].position)).collect();
        let leo_on: Vec<bool> = layout.leo.clone().map(|l| self.leo_covering(l)).collect();
        let rain = cfg.rain;
        let chan = &mut self.rng.channel;
        let mut sat_rate = |r: &RadioParams, a: &[f64; 3], b: &[f64; 3]| {
            let fade = rain_attenuation(&rain, chan);
            let g = gain_ground_satellite(r, distance(a, b), fade).unwrap_or(0.0);
            rate_from_gain(r, g)
        };

        for b in layout.bs.clone() {
            let pb = self.nodes[b].position;
            for (k, u) in layout.uav.clone().enumerate() {
                let pu = self.nodes[u].position;
                let l = horizontal_distance(&pb, &pu);
                let active = uav_in[k] && l <= cfg.uav_radius_m;
                let rate = if active {
                    let l = l.max(MIN_HORIZONTAL_M);
                    let omega = elevation_deg(pu[2] - pb[2], l);
                    path_loss_uav_bs(l, omega, &cfg.air_ground)
                        .map(|pl| rate_from_path_loss(&cfg.radios.bs_uav, pl))
                        .unwrap_or(0.0)
                } else {
                    0.0
                };
                put(b, u, LinkClass::BsUav, rate, active, prop(&pb, &pu));
            }
            for (k, s) in layout.leo.clone().enumerate() {
                let ps = self.nodes[s].position;
                let rate = sat_rate(&cfg.radios.bs_leo, &pb, &ps);
                put(b, s, LinkClass::BsLeo, rate, leo_on[k], prop(&pb, &ps));
            }
            for g in layout.geo.clone() {
                let pg = self.nodes[g].position;
                let rate = sat_rate(&cfg.radios.bs_geo, &pb, &pg);
                put(b, g, LinkClass::BsGeo, rate, true, prop(&pb, &pg));
            }
        }
        for (ku, u) in layout.uav.clone().enumerate() {
            let pu = self.nodes[u].position;
            for (kl, s) in layout.leo.clone().enumerate() {
                let ps = self.nodes[s].position;
                let rate = sat_rate(&cfg.radios.uav_leo, &pu, &ps);
                put(u, s, LinkClass::UavLeo, rate, uav_in[ku] && leo_on[kl], prop(&pu, &ps));
            }
            for g in layout.geo.clone() {
                let pg = self.nodes[g].position;
                let rate = sat_rate(&cfg.radios.uav_geo, &pu, &pg);
                put(u, g, LinkClass::UavGeo, rate, uav_in[ku], prop(&pu, &pg));
            }
        }
        for (kl, s) in layout.leo.clone().enumerate() {
            let ps = self.nodes[s].position;
            for g in layout.geo.clone() {
                let pg = self.nodes[g].position;
                let rate = gain_inter_satellite(&cfg.radios.leo_geo, distance(&ps, &pg))
                    .map(|gain| rate_from_gain(&cfg.radios.leo_geo, gain))
                    .unwrap_or(0.0);
                put(s, g, LinkClass::LeoGeo, rate, leo_on[kl], prop(&ps, &pg));
            }
        }

        // Credit survives only on links that stay up.
        for (key, link) in next.iter_mut() {
            if let Some(old) = self.links.get(key) {
                if old.active && link.active {
                    link.credit = old.credit;
                }
            }
        }
        self.links = next;
        for adj in &mut self.adjacency {
            adj.clear();
        }
        for link in self.links.values().filter(|l| l.active) {
            let (a, b) = link.endpoints;
            self.adjacency[a].push(b);
            self.adjacency[b].push(a);
        }
        for adj in &mut self.adjacency {
            adj.sort_unstable();
        }
    }
}
