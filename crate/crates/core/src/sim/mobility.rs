use std::f64::consts::{FRAC_PI_2, TAU};

use rand::Rng;

use super::world::{MobilityModel, World};
use crate::error::{Error, Result};

impl World {
    /// Advances every mobile node by `dt` seconds.
    pub fn step_mobility(&mut self, dt: f64) -> Result<()> {
        if !(dt > 0.0) {
            return Err(Error::Domain(format!("mobility step must be positive, got {dt}")));
        }
        let side = self.cfg.area_side_m;
        let center = [side / 2.0, side / 2.0];
        let rng = &mut self.rng.mobility;
        for node in &mut self.nodes {
            let m = &mut node.mobility;
            match m.model {
                // LEO positions are a function of time, see `place_leos`.
                MobilityModel::Static | MobilityModel::LeoOrbit => {}
                MobilityModel::RandomWaypoint => {
                    let step = m.speed * dt;
                    let dx = m.waypoint[0] - node.position[0];
                    let dy = m.waypoint[1] - node.position[1];
                    let dist = (dx * dx + dy * dy).sqrt();
                    if dist <= step {
                        node.position[0] = m.waypoint[0];
                        node.position[1] = m.waypoint[1];
                        m.waypoint = [rng.random_range(0.0..side), rng.random_range(0.0..side), m.waypoint[2]];
                    } else {
                        node.position[0] += dx / dist * step;
                        node.position[1] += dy / dist * step;
                    }
                }
                MobilityModel::UavDrift => {
                    let step = m.speed * dt;
                    node.position[0] += step * m.heading.cos();
                    node.position[1] += step * m.heading.sin();
                    m.timer += dt;
                    while m.timer >= m.direction_change_period {
                        m.timer -= m.direction_change_period;
                        // Exactly one draw either way keeps the stream aligned across speeds.
                        let u: f64 = rng.random();
                        let p = node.position;
                        let inside = (0.0..=side).contains(&p[0]) && (0.0..=side).contains(&p[1]);
                        m.heading = if inside {
                            u * TAU
                        } else {
                            (center[1] - p[1]).atan2(center[0] - p[0]) + (u - 0.5) * FRAC_PI_2
                        };
                    }
                }
            }
        }
        Ok(())
    }

    /// Puts every LEO at its orbit position for the current tick.
    pub(crate) fn place_leos(&mut self) {
        let t = self.now_s();
        self.place_leos_at(t);
    }

    /// Orbit phase in `[0, 1)` of a LEO node at time `t`.
    pub(crate) fn leo_phase(&self, offset: f64, t: f64) -> f64 {
        ((t + offset) / self.cfg.leo_period_s).rem_euclid(1.0)
    }

    /// Whether a LEO covers the area at the current time.
    pub fn leo_covering(&self, id: usize) -> bool {
        let n = &self.nodes[id];
        n.mobility.model == MobilityModel::LeoOrbit && self.leo_phase(n.mobility.timer, self.now_s()) < self.cfg.leo_duty
    }

    fn place_leos_at(&mut self, t: f64) {
        let side = self.cfg.area_side_m;
        let duty = self.cfg.leo_duty;
        let half = self.cfg.leo_track_half_m;
        for i in 0..self.nodes.len() {
            if self.nodes[i].mobility.model != MobilityModel::LeoOrbit {
                continue;
            }
            let phase = self.leo_phase(self.nodes[i].mobility.timer, t);
            let along = (phase / duty - 0.5) * 2.0 * half;
            let alt = self.cfg.leo_altitude_m;
            self.nodes[i].position = [side / 2.0 + along, side / 2.0, alt];
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::sim::config::SimConfig;
    use crate::sim::world::{NodeKind, World};

    #[test]
    fn static_nodes_do_not_move() {
        let mut w = World::new(SimConfig::default(), 3).unwrap();
        let before: Vec<_> = w
            .nodes_of(NodeKind::Bs)
            .chain(w.nodes_of(NodeKind::Geo))
            .map(|n| n.position)
            .collect();
        for _ in 0..50 {
            w.step_mobility(0.5).unwrap();
        }
        let after: Vec<_> = w
            .nodes_of(NodeKind::Bs)
            .chain(w.nodes_of(NodeKind::Geo))
            .map(|n| n.position)
            .collect();
        assert_eq!(before, after);
    }

    #[test]
    fn uav_displacement_equals_speed_times_dt() {
        let cfg = SimConfig {
            uav_speed_mps: 10.0,
            ..SimConfig::default()
        };
        let mut w = World::new(cfg, 9).unwrap();
        let uavs = w.layout().uav;
        for _ in 0..25 {
            let before: Vec<_> = uavs.clone().map(|i| w.nodes[i].position).collect();
            w.step_mobility(1.0).unwrap();
            for (k, i) in uavs.clone().enumerate() {
                let p = w.nodes[i].position;
                let d = ((p[0] - before[k][0]).powi(2) + (p[1] - before[k][1]).powi(2)).sqrt();
                assert!((d - 10.0).abs() < 1e-9, "{d}");
            }
        }
    }

    #[test]
    fn trajectories_are_seeded() {
        let run = |seed| {
            let mut w = World::new(SimConfig::default(), seed).unwrap();
            for _ in 0..200 {
                w.step_mobility(0.1).unwrap();
            }
            w.nodes.iter().map(|n| n.position).collect::<Vec<_>>()
        };
        assert_eq!(run(5), run(5));
        assert_ne!(run(5), run(6));
    }

    #[test]
    fn uav_speed_does_not_perturb_ue_motion() {
        let ue_track = |speed| {
            let cfg = SimConfig {
                uav_speed_mps: speed,
                ..SimConfig::default()
            };
            let mut w = World::new(cfg, 11).unwrap();
            for _ in 0..3000 {
                w.step_mobility(0.1).unwrap();
            }
            let l = w.layout();
            l.sources.chain(l.destinations).map(|i| w.nodes[i].position).collect::<Vec<_>>()
        };
        assert_eq!(ue_track(5.0), ue_track(30.0));
    }

    #[test]
    fn leo_covers_for_duty_fraction() {
        let mut w = World::new(SimConfig::default(), 1).unwrap();
        let leo = w.layout().leo.start;
        let mut on = 0;
        let n = 3000;
        for _ in 0..n {
            if w.leo_covering(leo) {
                on += 1;
            }
            w.step_mobility(0.01).unwrap();
            w.tick += 1;
        }
        let frac = on as f64 / n as f64;
        assert!((frac - w.cfg.leo_duty).abs() < 0.01, "{frac}");
    }

    #[test]
    fn rejects_nonpositive_dt() {
        let mut w = World::new(SimConfig::default(), 1).unwrap();
        assert!(w.step_mobility(0.0).is_err());
    }
}
