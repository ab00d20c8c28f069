//! Per-BS observation vector.
//!
//! One slot per relay node (BS, UAV, LEO, GEO) in id order, so a slot always
//! refers to the same node. A slot is filled when the node is the observer
//! itself, a one-hop or a two-hop relay neighbour, and is all zeros
//! otherwise. Slot layout:
//!
//! | index | feature |
//! |-------|---------|
//! | 0 | is the observer |
//! | 1 | one-hop neighbour |
//! | 2 | two-hop neighbour |
//! | 3..7 | kind one-hot: BS, UAV, LEO, GEO |
//! | 7 | queue occupancy fraction |
//! | 8 | link rate / `rate_norm_bps` (one-hop: from the observer; two-hop: best rate from a one-hop neighbour) |
//!
//! Two trailing batch features follow the slots: awaiting batch size over
//! queue capacity, and mean remaining pre-set hops over `hop_norm`.

use serde::{Deserialize, Serialize};

use crate::sim::world::{NodeId, NodeKind, World};

pub const SLOT_FEATURES: usize = 9;
pub const BATCH_FEATURES: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObsConfig {
    pub rate_norm_bps: f64,
    pub hop_norm: f64,
}

impl Default for ObsConfig {
    fn default() -> Self {
        Self {
            rate_norm_bps: 20e6,
            hop_norm: 8.0,
        }
    }
}

fn relay_count(world: &World) -> usize {
    let l = world.layout();
    l.bs.len() + l.uav.len() + l.leo.len() + l.geo.len()
}

pub fn obs_dim(world: &World) -> usize {
    relay_count(world) * SLOT_FEATURES + BATCH_FEATURES
}

fn kind_slot(kind: NodeKind) -> usize {
    match kind {
        NodeKind::Bs => 3,
        NodeKind::Uav => 4,
        NodeKind::Leo => 5,
        NodeKind::Geo => 6,
        NodeKind::UeSource | NodeKind::UeDest => unreachable!("UEs never occupy a slot"),
    }
}

/// Encodes what `bs` can see of its one- and two-hop neighbourhood.
pub fn observe(world: &World, bs: NodeId, cfg: &ObsConfig) -> Vec<f32> {
    let relays = relay_count(world);
    let mut v = vec![0.0f64; relays * SLOT_FEATURES + BATCH_FEATURES];
    let fill = |v: &mut Vec<f64>, id: NodeId, role: usize, rate: f64| {
        let s = &mut v[id * SLOT_FEATURES..(id + 1) * SLOT_FEATURES];
        s[role] = 1.0;
        s[kind_slot(world.node(id).kind)] = 1.0;
        s[7] = world.node(id).occupancy();
        s[8] = rate / cfg.rate_norm_bps;
    };
    fill(&mut v, bs, 0, 0.0);

    let one_hop: Vec<NodeId> = world
        .neighbors(bs)
        .iter()
        .copied()
        .filter(|&n| world.node(n).kind.is_relay())
        .collect();
    for &n in &one_hop {
        let rate = world.link(bs, n).map_or(0.0, |l| l.rate);
        fill(&mut v, n, 1, rate);
    }
    let mut two_hop: Vec<(NodeId, f64)> = Vec::new();
    for &m in &one_hop {
        for &n in world.neighbors(m) {
            if n == bs || !world.node(n).kind.is_relay() || one_hop.contains(&n) {
                continue;
            }
            let rate = world.link(m, n).map_or(0.0, |l| l.rate);
            match two_hop.iter_mut().find(|(id, _)| *id == n) {
                Some(entry) => entry.1 = entry.1.max(rate),
                None => two_hop.push((n, rate)),
            }
        }
    }
    for (n, rate) in two_hop {
        fill(&mut v, n, 2, rate);
    }

    let batch = world.awaiting_batch(bs);
    let tail = relays * SLOT_FEATURES;
    v[tail] = batch.len() as f64 / world.node(bs).queue_capacity as f64;
    if !batch.is_empty() {
        let hops: usize = batch.iter().filter_map(|&p| world.packet(p)).map(|p| p.remaining_hops()).sum();
        v[tail + 1] = hops as f64 / batch.len() as f64 / cfg.hop_norm;
    }
    v.into_iter().map(|x| x as f32).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::SimConfig;

    /// One BS, one UAV, one LEO, one GEO and no UEs.
    fn tiny() -> World {
        let cfg = SimConfig {
            num_bs: 1,
            bs_grid: (1, 1),
            num_uav: 1,
            num_leo: 1,
            num_geo: 1,
            num_sources: 0,
            num_destinations: 0,
            ..SimConfig::default()
        };
        let mut w = World::new(cfg, 0).unwrap();
        w.nodes[1].position = [6000.0, 5000.0, 200.0];
        w.rebuild_links();
        w
    }

    #[test]
    fn hand_computed_four_node_encoding() {
        let w = tiny();
        assert!(w.leo_covering(2), "LEO starts inside its window");
        let cfg = ObsConfig::default();
        let got = observe(&w, 0, &cfg);
        let r = |a, b| (w.link(a, b).unwrap().rate / cfg.rate_norm_bps) as f32;
        #[rustfmt::skip]
        let want: Vec<f32> = vec![
            // BS 0 (self)
            1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0,
            // UAV 1
            0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, r(0, 1),
            // LEO 2
            0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, r(0, 2),
            // GEO 3
            0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, r(0, 3),
            // batch
            0.0, 0.0,
        ];
        assert_eq!(got, want);
    }

    #[test]
    fn two_hop_slot_uses_best_relay_rate() {
        let mut w = tiny();
        // Move the UAV out of BS range but keep it inside the area: it is then
        // reachable only through the satellites.
        w.nodes[1].position = [9900.0, 9900.0, 200.0];
        w.rebuild_links();
        assert!(!w.link_active(0, 1));
        let cfg = ObsConfig::default();
        let got = observe(&w, 0, &cfg);
        let best = w.link(1, 2).unwrap().rate.max(w.link(1, 3).unwrap().rate);
        assert_eq!(&got[9..12], &[0.0, 0.0, 1.0]);
        assert_eq!(got[17], (best / cfg.rate_norm_bps) as f32);
    }

    #[test]
    fn isolated_bs_has_empty_neighbour_slots() {
        let mut w = tiny();
        w.nodes[1].position = [-9000.0, 0.0, 200.0];
        w.tick = (w.cfg.leo_period_s * 0.9 / w.cfg.tick_s) as u64;
        w.rebuild_links();
        // Only the GEO remains; cut it by hand to isolate the BS.
        w.links.retain(|_, l| l.endpoints != (0, 3));
        w.adjacency[0].retain(|&n| n != 3);
        w.adjacency[3].retain(|&n| n != 0);
        let got = observe(&w, 0, &ObsConfig::default());
        assert!(got[SLOT_FEATURES..].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn dimension_is_constant_and_deterministic() {
        let mut a = World::new(SimConfig::default(), 5).unwrap();
        let mut b = World::new(SimConfig::default(), 5).unwrap();
        let dim = obs_dim(&a);
        assert_eq!(dim, 17 * SLOT_FEATURES + BATCH_FEATURES);
        for _ in 0..200 {
            a.simulate_tick(&mut |_, _, _| 2).unwrap();
            b.simulate_tick(&mut |_, _, _| 2).unwrap();
            for bs in a.layout().bs {
                let oa = observe(&a, bs, &ObsConfig::default());
                assert_eq!(oa.len(), dim);
                assert!(oa.iter().all(|x| x.is_finite()));
                assert_eq!(oa, observe(&b, bs, &ObsConfig::default()));
            }
        }
    }
}
