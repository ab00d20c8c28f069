//! Federated center: soft aggregation of trend networks, plain averaging
//! for the full-model baseline, round messages and a stream transport.

pub mod aggregate;
pub mod message;
pub mod server;
pub mod socket;

pub use aggregate::{aggregate_mean, aggregate_soft};
pub use message::{PayloadKind, RoundMessage};
pub use server::{AuditEntry, Direction, Distribution, FederationConfig, FederationMode, FederationServer};
