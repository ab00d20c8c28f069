use std::collections::{BTreeMap, HashMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::SimConfig;
use crate::error::Result;

pub type NodeId = usize;
pub type PacketId = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    UeSource,
    UeDest,
    Bs,
    Uav,
    Leo,
    Geo,
}

impl NodeKind {
    pub const ALL: [NodeKind; 6] = [
        NodeKind::UeSource,
        NodeKind::UeDest,
        NodeKind::Bs,
        NodeKind::Uav,
        NodeKind::Leo,
        NodeKind::Geo,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// BS, UAV, LEO and GEO nodes forward traffic; UEs only originate or sink it.
    pub fn is_relay(self) -> bool {
        !matches!(self, NodeKind::UeSource | NodeKind::UeDest)
    }

    pub fn is_ue(self) -> bool {
        !self.is_relay()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MobilityModel {
    Static,
    RandomWaypoint,
    UavDrift,
    LeoOrbit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MobilityState {
    pub model: MobilityModel,
    pub speed: f64,
    /// Radians, counter-clockwise from +x.
    pub heading: f64,
    pub waypoint: [f64; 3],
    pub direction_change_period: f64,
    /// Seconds since the last heading change (UAV) or orbit phase offset (LEO).
    pub timer: f64,
}

impl MobilityState {
    pub fn fixed() -> Self {
        Self {
            model: MobilityModel::Static,
            speed: 0.0,
            heading: 0.0,
            waypoint: [0.0; 3],
            direction_change_period: 0.0,
            timer: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Node {
    pub id: NodeId,
    pub kind: NodeKind,
    pub position: [f64; 3],
    pub queue: VecDeque<PacketId>,
    pub queue_capacity: usize,
    pub mobility: MobilityState,
}

impl Node {
    pub fn occupancy(&self) -> f64 {
        self.queue.len() as f64 / self.queue_capacity as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkClass {
    UeBs,
    BsBs,
    BsUav,
    BsLeo,
    BsGeo,
    UavLeo,
    UavGeo,
    LeoGeo,
}

impl LinkClass {
    pub fn is_ground(self) -> bool {
        matches!(self, LinkClass::UeBs | LinkClass::BsBs)
    }
}

/// Undirected link; each direction has its own transmit credit.
#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    /// Ordered so that `endpoints.0 < endpoints.1`.
    pub endpoints: (NodeId, NodeId),
    pub class: LinkClass,
    pub rate: f64,
    pub active: bool,
    /// Propagation delay in whole ticks, added on top of the one-tick hop cost.
    pub delay_ticks: u64,
    /// Untransmitted bit credit for `(lo -> hi, hi -> lo)`.
    pub(crate) credit: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PacketStatus {
    Queued,
    InFlight,
    Delivered,
    Dropped,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Packet {
    pub id: PacketId,
    pub size: u32,
    pub src: NodeId,
    pub dst: NodeId,
    pub born_tick: u64,
    pub path: Vec<NodeId>,
    /// Index in `path` of the node currently holding the packet.
    pub hop_index: usize,
    pub status: PacketStatus,
    /// Set once the packet left its pre-set route.
    pub offloaded: bool,
    /// Queued at a BS and waiting for that BS's next offloading decision.
    pub awaiting_decision: bool,
    /// `(bs, tick)` of the most recent offloading decision that touched the packet.
    pub decider: Option<(NodeId, u64)>,
}

impl Packet {
    pub fn current(&self) -> NodeId {
        self.path[self.hop_index]
    }

    pub fn next_hop(&self) -> Option<NodeId> {
        self.path.get(self.hop_index + 1).copied()
    }

    pub fn remaining_hops(&self) -> usize {
        self.path.len() - 1 - self.hop_index
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Counters {
    pub generated: u64,
    pub delivered: u64,
    pub dropped: u64,
}

/// Independent random streams so that, for example, changing UAV speed does
/// not perturb the traffic process.
#[derive(Debug, Clone)]
pub(crate) struct Streams {
    pub mobility: ChaCha8Rng,
    pub traffic: ChaCha8Rng,
    pub channel: ChaCha8Rng,
}

impl Streams {
    fn new(seed: u64) -> Self {
        let stream = |k: u64| {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            r.set_stream(k);
            r
        };
        Self {
            mobility: stream(1),
            traffic: stream(2),
            channel: stream(3),
        }
    }
}

#[derive(Debug, Clone)]
pub struct World {
    pub cfg: SimConfig,
    pub seed: u64,
    pub tick: u64,
    pub nodes: Vec<Node>,
    pub(crate) links: BTreeMap<(NodeId, NodeId), Link>,
    /// Active neighbours of every node, ascending.
    pub(crate) adjacency: Vec<Vec<NodeId>>,
    pub(crate) packets: HashMap<PacketId, Packet>,
    /// Transmitted packets keyed by arrival tick, in send order.
    pub(crate) in_flight: BTreeMap<u64, Vec<PacketId>>,
    pub(crate) next_packet: PacketId,
    pub(crate) counters: Counters,
    pub(crate) generated_bits: f64,
    pub(crate) source_budget: Vec<f64>,
    pub(crate) rng: Streams,
}

/// Index ranges of each node class; ids are assigned in this order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub bs: std::ops::Range<NodeId>,
    pub uav: std::ops::Range<NodeId>,
    pub leo: std::ops::Range<NodeId>,
    pub geo: std::ops::Range<NodeId>,
    pub sources: std::ops::Range<NodeId>,
    pub destinations: std::ops::Range<NodeId>,
}

impl Layout {
    pub fn of(cfg: &SimConfig) -> Self {
        let mut at = 0;
        let mut take = |n: usize| {
            let r = at..at + n;
            at += n;
            r
        };
        Self {
            bs: take(cfg.num_bs),
            uav: take(cfg.num_uav),
            leo: take(cfg.num_leo),
            geo: take(cfg.num_geo),
            sources: take(cfg.num_sources),
            destinations: take(cfg.num_destinations),
        }
    }
}

impl World {
    /// Builds the initial topology; links are populated by the first tick.
    pub fn new(cfg: SimConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut rng = Streams::new(seed);
        let layout = Layout::of(&cfg);
        let side = cfg.area_side_m;
        let (cols, rows) = cfg.bs_grid;
        let cell_w = side / cols as f64;
        let cell_h = side / rows as f64;
        let mut nodes = Vec::new();

        let mut push = |kind: NodeKind, position: [f64; 3], capacity: usize, mobility: MobilityState| {
            let id = nodes.len();
            nodes.push(Node {
                id,
                kind,
                position,
                queue: VecDeque::new(),
                queue_capacity: capacity,
                mobility,
            });
        };

        for i in 0..cfg.num_bs {
            let (c, r) = (i % cols, i / cols);
            let center = [(c as f64 + 0.5) * cell_w, (r as f64 + 0.5) * cell_h];
            push(
                NodeKind::Bs,
                [center[0], center[1], cfg.bs_height_m],
                cfg.relay_queue_capacity,
                MobilityState::fixed(),
            );
        }
        for _ in 0..cfg.num_uav {
            let pos = [
                rng.mobility.random_range(0.0..side),
                rng.mobility.random_range(0.0..side),
                cfg.uav_altitude_m,
            ];
            let heading = rng.mobility.random_range(0.0..std::f64::consts::TAU);
            let mobility = MobilityState {
                model: super::world::MobilityModel::UavDrift,
                speed: cfg.uav_speed_mps,
                heading,
                waypoint: [0.0; 3],
                direction_change_period: cfg.uav_heading_period_s,
                timer: 0.0,
            };
            push(NodeKind::Uav, pos, cfg.relay_queue_capacity, mobility);
        }
        for i in 0..cfg.num_leo {
            let mobility = MobilityState {
                model: MobilityModel::LeoOrbit,
                speed: 0.0,
                heading: 0.0,
                waypoint: [0.0; 3],
                direction_change_period: cfg.leo_period_s,
                timer: cfg.leo_period_s * i as f64 / cfg.num_leo as f64,
            };
            push(NodeKind::Leo, [0.0, 0.0, cfg.leo_altitude_m], cfg.relay_queue_capacity, mobility);
        }
        for _ in 0..cfg.num_geo {
            push(
                NodeKind::Geo,
                [side / 2.0, side / 2.0, cfg.geo_altitude_m],
                cfg.relay_queue_capacity,
                MobilityState::fixed(),
            );
        }
        for kind in [NodeKind::UeSource, NodeKind::UeDest] {
            let n = if kind == NodeKind::UeSource {
                cfg.num_sources
            } else {
                cfg.num_destinations
            };
            for _ in 0..n {
                let pos = [rng.mobility.random_range(0.0..side), rng.mobility.random_range(0.0..side), 1.5];
                let waypoint = [rng.mobility.random_range(0.0..side), rng.mobility.random_range(0.0..side), 1.5];
                let mobility = MobilityState {
                    model: MobilityModel::RandomWaypoint,
                    speed: cfg.ue_speed_mps,
                    heading: 0.0,
                    waypoint,
                    direction_change_period: 0.0,
                    timer: 0.0,
                };
                push(kind, pos, cfg.ue_queue_capacity, mobility);
            }
        }
        debug_assert_eq!(nodes.len(), layout.destinations.end);

        let n = nodes.len();
        let mut world = Self {
            source_budget: vec![0.0; cfg.num_sources],
            cfg,
            seed,
            tick: 0,
            nodes,
            links: BTreeMap::new(),
            adjacency: vec![Vec::new(); n],
            packets: HashMap::new(),
            in_flight: BTreeMap::new(),
            next_packet: 0,
            counters: Counters::default(),
            generated_bits: 0.0,
            rng,
        };
        world.place_leos();
        world.rebuild_links();
        Ok(world)
    }

    pub fn layout(&self) -> Layout {
        Layout::of(&self.cfg)
    }

    pub fn now_s(&self) -> f64 {
        self.tick as f64 * self.cfg.tick_s
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn packet(&self, id: PacketId) -> Option<&Packet> {
        self.packets.get(&id)
    }

    pub fn counters(&self) -> Counters {
        self.counters
    }

    pub fn in_system(&self) -> u64 {
        self.packets.len() as u64
    }

    /// Sum of all per-tick traffic draws so far (bits).
    pub fn generated_bits(&self) -> f64 {
        self.generated_bits
    }

    pub fn links(&self) -> impl Iterator<Item = &Link> {
        self.links.values()
    }

    pub fn link(&self, a: NodeId, b: NodeId) -> Option<&Link> {
        self.links.get(&(a.min(b), a.max(b)))
    }

    pub fn link_active(&self, a: NodeId, b: NodeId) -> bool {
        self.link(a, b).is_some_and(|l| l.active)
    }

    pub fn neighbors(&self, id: NodeId) -> &[NodeId] {
        &self.adjacency[id]
    }

    pub fn nodes_of(&self, kind: NodeKind) -> impl Iterator<Item = &Node> {
        self.nodes.iter().filter(move |n| n.kind == kind)
    }

    pub fn in_area(&self, pos: &[f64; 3]) -> bool {
        let s = self.cfg.area_side_m;
        (0.0..=s).contains(&pos[0]) && (0.0..=s).contains(&pos[1])
    }

    /// Packets queued at a BS that are waiting for an offloading decision, FIFO order.
    pub fn awaiting_batch(&self, bs: NodeId) -> Vec<PacketId> {
        self.nodes[bs]
            .queue
            .iter()
            .copied()
            .filter(|p| self.packets.get(p).is_some_and(|p| p.awaiting_decision))
            .collect()
    }

    /// Index of the BS cell containing a ground position.
    pub(crate) fn serving_bs(&self, pos: &[f64; 3]) -> NodeId {
        let (cols, rows) = self.cfg.bs_grid;
        let side = self.cfg.area_side_m;
        let c = ((pos[0] / side * cols as f64).floor().max(0.0) as usize).min(cols - 1);
        let r = ((pos[1] / side * rows as f64).floor().max(0.0) as usize).min(rows - 1);
        self.layout().bs.start + r * cols + c
    }

    /// Checks `generated == delivered + dropped + in_system`.
    pub fn conserved(&self) -> bool {
        let c = self.counters;
        c.generated == c.delivered + c.dropped + self.in_system()
    }

    /// Queues never exceed their capacity.
    pub fn queues_within_capacity(&self) -> bool {
        self.nodes.iter().all(|n| n.queue.len() <= n.queue_capacity)
    }
}

pub(crate) fn distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

pub(crate) fn horizontal_distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}
