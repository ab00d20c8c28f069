use std::ops::Range;

use crate::sim::world::{distance, Layout, NodeId, NodeKind, Packet, World};
use crate::sim::{RelayEnumeration, SimConfig};

/// What an action index asks the deciding BS to do.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    /// Follow the pre-set route.
    Keep,
    /// Nearest active relay of this kind.
    Class(NodeKind),
    /// This specific relay.
    Relay(NodeId),
}

/// Maps action indices onto relay targets for one world layout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionSpace {
    pub enumeration: RelayEnumeration,
    uav: Range<NodeId>,
    leo: Range<NodeId>,
    geo: Range<NodeId>,
}

impl ActionSpace {
    pub fn new(cfg: &SimConfig) -> Self {
        let Layout { uav, leo, geo, .. } = Layout::of(cfg);
        Self {
            enumeration: cfg.relay_enumeration,
            uav,
            leo,
            geo,
        }
    }

    pub fn size(&self) -> usize {
        match self.enumeration {
            RelayEnumeration::Collapsed => 4,
            RelayEnumeration::Full => 1 + self.uav.len() + self.leo.len() + self.geo.len(),
        }
    }

    /// Out-of-range indices behave like action 0.
    pub fn target(&self, action: usize) -> Target {
        if action == 0 || action >= self.size() {
            return Target::Keep;
        }
        match self.enumeration {
            RelayEnumeration::Collapsed => Target::Class([NodeKind::Uav, NodeKind::Leo, NodeKind::Geo][action - 1]),
            RelayEnumeration::Full => {
                let relays = self.uav.clone().chain(self.leo.clone()).chain(self.geo.clone());
                Target::Relay(relays.clone().nth(action - 1).expect("index checked against size"))
            }
        }
    }
}

/// Nearest relay of `kind` with an active link to `bs`; ties go to the lower id.
pub fn nearest_relay(world: &World, bs: NodeId, kind: NodeKind) -> Option<NodeId> {
    let here = world.node(bs).position;
    let mut best: Option<(f64, NodeId)> = None;
    for &n in world.neighbors(bs) {
        if world.node(n).kind != kind {
            continue;
        }
        let d = distance(&here, &world.node(n).position);
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, n));
        }
    }
    best.map(|(_, n)| n)
}

/// Path that `packet` would follow after `action` at its current node.
///
/// Offloading splices `prefix -> relay -> shortest route to dst` that avoids
/// nodes already visited. With no usable candidate or route the pre-set path
/// is returned unchanged.
pub fn apply_offload(world: &World, packet: &Packet, action: usize) -> Vec<NodeId> {
    let bs = packet.current();
    let relay = match ActionSpace::new(&world.cfg).target(action) {
        Target::Keep => None,
        Target::Class(kind) => nearest_relay(world, bs, kind),
        Target::Relay(r) => world.link_active(bs, r).then_some(r),
    };
    let Some(relay) = relay else {
        return packet.path.clone();
    };
    let prefix = &packet.path[..=packet.hop_index];
    match world.route_avoiding(relay, packet.dst, prefix) {
        Some(rest) => {
            let mut path = prefix.to_vec();
            path.extend(rest);
            path
        }
        None => packet.path.clone(),
    }
}
