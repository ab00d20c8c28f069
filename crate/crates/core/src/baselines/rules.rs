//! Rule-based offloading: never offload, and shortest-path greedy.

use crate::env::offload::{apply_offload, ActionSpace};
use crate::sim::world::{NodeId, PacketId, World};

/// Always follows the pre-set route.
pub fn no_offload(_world: &World, _bs: NodeId, _batch: &[PacketId]) -> usize {
    0
}

/// Remaining hop count of `path` from `from`, or `None` when a hop is down.
fn live_hops(world: &World, path: &[NodeId], from: usize) -> Option<usize> {
    path[from..]
        .windows(2)
        .all(|w| world.link_active(w[0], w[1]))
        .then(|| path.len() - 1 - from)
}

/// Action whose resulting path has the fewest remaining hops over active
/// links; ties go to the smaller action, so action 0 wins every tie.
pub fn greedy_offload(world: &World, packet: PacketId) -> usize {
    let p = world.packet(packet).expect("queued packet exists");
    let size = ActionSpace::new(&world.cfg).size();
    let mut best: Option<(usize, usize)> = None;
    for action in 0..size {
        let path = if action == 0 {
            p.path.clone()
        } else {
            apply_offload(world, p, action)
        };
        if action > 0 && path == p.path {
            // no relay or no onward route: the action degenerates to 0
            continue;
        }
        if let Some(h) = live_hops(world, &path, p.hop_index) {
            if best.is_none_or(|(bh, _)| h < bh) {
                best = Some((h, action));
            }
        }
    }
    best.map_or(0, |(_, a)| a)
}

/// Batch form used by the simulator: decides on the head packet.
pub fn greedy_batch(world: &World, _bs: NodeId, batch: &[PacketId]) -> usize {
    batch.first().map_or(0, |&id| greedy_offload(world, id))
}
