//! Tick-based simulator of the ground / air / space relay network.

pub mod config;
pub mod engine;
mod links;
pub mod metrics;
mod mobility;
pub mod routing;
mod snapshot;
pub mod world;

pub use config::{Radios, RelayEnumeration, SimConfig};
pub use engine::{Decide, DropReason, Event, EventKind};
pub use metrics::{collect_metrics, MetricsAccumulator, SimMetrics};
pub use world::{Counters, Layout, Link, LinkClass, Node, NodeId, NodeKind, Packet, PacketId, PacketStatus, World};
